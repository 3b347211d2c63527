//! Scenario configuration files.
//!
//! The format is JSON. Every time-indexed quantity accepts either a single
//! number (held constant over the term) or an explicit sequence. Recovery
//! laws are given per state as `{"mean", "sd"}` (matched to a beta law),
//! `{"a", "b"}`, `{"mean", "second_moment"}` or `{"fixed"}`, optionally as a
//! per-month list.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::{HazardModel, RecoveryLaw, RecoveryModel};
use crate::error::Error;
use crate::market::MarketModel;
use crate::model::RiskModel;
use crate::montecarlo::SimConfig;
use crate::schedule::{DiscountSpec, LoanSpec};
use crate::state::MarketState;

#[derive(Debug)]
pub enum ConfigError {
    Io {
        file: std::path::PathBuf,
        source: std::io::Error,
    },
    /// JSON syntax or type error at `line`:`column`, with the offending path.
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    Invalid(Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { file, source } => write!(f, "cannot read config {}: {source}", file.display()),
            ConfigError::Parse {
                path,
                line,
                column,
                message,
            } => write!(f, "parse error at line {line}, column {column} ({path}): {message}"),
            ConfigError::Invalid(e) => write!(f, "invalid config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError::Invalid(e)
    }
}

/// A constant or a per-month sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl Schedule {
    fn expand(&self, field: &str, len: usize) -> Result<Vec<f64>, Error> {
        match self {
            Schedule::Constant(x) => Ok(vec![*x; len]),
            Schedule::Sequence(v) if v.len() == len => Ok(v.clone()),
            Schedule::Sequence(v) => Err(Error::field(field, format!("expected {len} entries, got {}", v.len()))),
        }
    }

    /// Like `expand`, accepting (and truncating) sequences longer than `len`.
    fn expand_at_least(&self, field: &str, len: usize) -> Result<Vec<f64>, Error> {
        match self {
            Schedule::Sequence(v) if v.len() >= len => Ok(v[..len].to_vec()),
            Schedule::Sequence(v) => Err(Error::field(
                field,
                format!("sequence of {} entries does not cover the {len}-month term", v.len()),
            )),
            c => c.expand(field, len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoanBlock {
    pub principal: f64,
    /// Required when `instalments` is a constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<usize>,
    pub instalments: Schedule,
    /// `γ(1)..γ(n-1)`; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prepayment_charge: Option<Schedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketBlock {
    #[serde(default = "default_state")]
    pub initial_state: MarketState,
    pub persist_bad: Schedule,
    pub persist_good: Schedule,
}

fn default_state() -> MarketState {
    MarketState::Bad
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardBlock {
    pub default_bad: Schedule,
    pub default_good: Schedule,
    pub prepay_bad: Schedule,
    pub prepay_good: Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RecoverySpec {
    MeanSd { mean: f64, sd: f64 },
    Beta { a: f64, b: f64 },
    Moments { mean: f64, second_moment: f64 },
    Fixed { fixed: f64 },
}

impl RecoverySpec {
    fn law(&self) -> Result<RecoveryLaw, Error> {
        match *self {
            RecoverySpec::MeanSd { mean, sd } => RecoveryLaw::beta_matching(mean, sd),
            RecoverySpec::Beta { a, b } => RecoveryLaw::beta(a, b),
            RecoverySpec::Moments { mean, second_moment } => RecoveryLaw::moments_only(mean, second_moment),
            RecoverySpec::Fixed { fixed } => RecoveryLaw::fixed(fixed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecoveryEntry {
    Constant(RecoverySpec),
    PerMonth(Vec<RecoverySpec>),
}

impl RecoveryEntry {
    fn laws(&self, field: &str, n: usize) -> Result<Vec<RecoveryLaw>, Error> {
        let wrap = |i: Option<usize>, e: Error| {
            let at = i.map(|i| format!("{field}[{i}]")).unwrap_or_else(|| field.to_string());
            match e {
                Error::Field { .. } => e,
                other => Error::field(at, other.to_string()),
            }
        };
        match self {
            RecoveryEntry::Constant(spec) => Ok(vec![spec.law().map_err(|e| wrap(None, e))?; n]),
            RecoveryEntry::PerMonth(v) if v.len() == n => v
                .iter()
                .enumerate()
                .map(|(i, s)| s.law().map_err(|e| wrap(Some(i), e)))
                .collect(),
            RecoveryEntry::PerMonth(v) => Err(Error::field(field, format!("expected {n} entries, got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryBlock {
    pub bad: RecoveryEntry,
    pub good: RecoveryEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default = "default_rates")]
    pub annual_rates: Vec<f64>,
    #[serde(default = "default_sizes")]
    pub portfolio_sizes: Vec<usize>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            annual_rates: default_rates(),
            portfolio_sizes: default_sizes(),
        }
    }
}

fn default_rates() -> Vec<f64> {
    vec![0.04, 0.05, 0.06, 0.07, 0.08]
}

fn default_sizes() -> Vec<usize> {
    vec![1, 8, 64, 512, 4096]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_reps")]
    pub replications: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

impl Default for McBlock {
    fn default() -> Self {
        McBlock {
            enabled: false,
            replications: default_reps(),
            seed: default_seed(),
            antithetic: false,
        }
    }
}

fn default_reps() -> u64 {
    1_000_000
}

fn default_seed() -> u64 {
    0x5EED_2024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub loan: LoanBlock,
    pub market: MarketBlock,
    pub hazard: HazardBlock,
    pub recovery: RecoveryBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub mc: McBlock,
}

/// A validated configuration, ready for the engines.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: RiskModel,
    pub rates: Vec<DiscountSpec>,
    pub sizes: Vec<usize>,
    pub mc: SimConfig,
    pub mc_enabled: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = (inner.line(), inner.column());
            let full = inner.to_string();
            let location = format!(" at line {line} column {column}");
            ConfigError::Parse {
                path,
                line,
                column,
                message: full.strip_suffix(&location).unwrap_or(&full).to_string(),
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build(&self) -> Result<Scenario, Error> {
        let loan = self.build_loan()?;
        let n = loan.term();
        let m = &self.market;
        let market = MarketModel::new(
            m.initial_state,
            m.persist_bad.expand_at_least("market.persist_bad", n)?,
            m.persist_good.expand_at_least("market.persist_good", n)?,
        )?;
        let h = &self.hazard;
        let hazards = HazardModel::new(
            h.default_bad.expand("hazard.default_bad", n)?,
            h.default_good.expand("hazard.default_good", n)?,
            h.prepay_bad.expand("hazard.prepay_bad", n - 1)?,
            h.prepay_good.expand("hazard.prepay_good", n - 1)?,
        )?;
        let recovery = RecoveryModel::new(
            self.recovery.bad.laws("recovery.bad", n)?,
            self.recovery.good.laws("recovery.good", n)?,
        )?;
        let model = RiskModel::new(loan, market, hazards, recovery)?;

        let rates = self
            .sweep
            .annual_rates
            .iter()
            .enumerate()
            .map(|(i, r)| {
                DiscountSpec::from_annual(*r)
                    .map_err(|_| Error::field(format!("sweep.annual_rates[{i}]"), format!("rate {r} must be >= 0")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(i) = self.sweep.portfolio_sizes.iter().position(|m| *m == 0) {
            return Err(Error::field(format!("sweep.portfolio_sizes[{i}]"), "portfolio size must be at least 1"));
        }
        if self.mc.replications == 0 {
            return Err(Error::field("mc.replications", "must be at least 1"));
        }
        if self.mc.antithetic && self.mc.replications % 2 == 1 {
            return Err(Error::field("mc.replications", "antithetic sampling needs an even count"));
        }
        if self.mc.enabled {
            model
                .recovery
                .ensure_sampleable()
                .map_err(|e| Error::field("recovery", e.to_string()))?;
        }
        Ok(Scenario {
            model,
            rates,
            sizes: self.sweep.portfolio_sizes.clone(),
            mc: SimConfig {
                replications: self.mc.replications,
                seed: self.mc.seed,
                antithetic: self.mc.antithetic,
            },
            mc_enabled: self.mc.enabled,
        })
    }

    fn build_loan(&self) -> Result<LoanSpec, Error> {
        let l = &self.loan;
        let instalments = match (&l.instalments, l.term) {
            (Schedule::Constant(_), None) => {
                return Err(Error::field("loan.term", "required when instalments is a single number"))
            }
            (Schedule::Constant(_), Some(0)) => return Err(Error::field("loan.term", "must be at least 1")),
            (s, Some(n)) => s.expand("loan.instalments", n)?,
            (Schedule::Sequence(v), None) => v.clone(),
        };
        let n = instalments.len();
        if n == 0 {
            return Err(Error::field("loan.instalments", "term must be at least one month"));
        }
        let charge = match &l.prepayment_charge {
            None => vec![1.0; n - 1],
            Some(s) => s.expand("loan.prepayment_charge", n - 1)?,
        };
        LoanSpec::new(l.principal, instalments, charge)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Scenario, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        file: path.to_path_buf(),
        source,
    })?;
    Ok(ScenarioConfig::from_json(&text)?.build()?)
}
