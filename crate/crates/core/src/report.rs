//! Discount-rate by portfolio-size sweeps and their text/CSV renderings.
//!
//! Money is rounded to whole units, CV to 2 decimals, correlations to 5 and
//! limit CVs to 3.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::backward::{backward_moment_set, LoanMoments};
use crate::config::Scenario;
use crate::error::Result;
use crate::forward::EventDistribution;
use crate::montecarlo::{simulate_pair, z_score, PairStats};
use crate::portfolio::{limit_cv, portfolio_moments, PortfolioStats};
use crate::schedule::{certain_npv, DiscountSpec};
use crate::state::{MarketState, PerState};

/// Results for one annual discount rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub discount: DiscountSpec,
    pub contractual_npv: f64,
    pub moments: LoanMoments,
    pub rows: Vec<PortfolioStats>,
    pub limit_cv: PerState<Option<f64>>,
    pub simulation: Option<PerState<PairStats>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub principal: f64,
    pub term: usize,
    pub contractual_rate: f64,
    pub atoms_per_state: usize,
    pub tables: Vec<RateTable>,
}

/// Evaluates every (rate, size, initial state) cell. Rates run in parallel;
/// tables come back in configuration order.
pub fn run_sweep(scenario: &Scenario, with_mc: bool) -> Result<SweepReport> {
    let model = &scenario.model;
    let atoms = EventDistribution::compute(model)?.atom_count();
    let tables = scenario
        .rates
        .par_iter()
        .map(|discount| -> Result<RateTable> {
            let moments = backward_moment_set(model, discount)?.origin();
            let rows = scenario
                .sizes
                .iter()
                .map(|m| portfolio_moments(&moments, *m))
                .collect::<Result<Vec<_>>>()?;
            let simulation = if with_mc {
                Some(PerState::try_from_fn(|s| {
                    simulate_pair(&model.with_initial_state(s), discount, &scenario.mc)
                })?)
            } else {
                None
            };
            Ok(RateTable {
                discount: *discount,
                contractual_npv: certain_npv(&model.loan, discount),
                limit_cv: PerState::from_fn(|s| limit_cv(&moments, s).ok()),
                moments,
                rows,
                simulation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        principal: model.loan.principal(),
        term: model.term(),
        contractual_rate: model.loan.contractual_rate(),
        atoms_per_state: atoms,
        tables,
    })
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

fn money(x: f64) -> i64 {
    x.round() as i64
}

fn fixed2<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{x:.2}"))
}

fn fixed3<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&format!("{v:.3}")),
        None => s.serialize_str(""),
    }
}

fn fixed5<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{x:.5}"))
}

fn optional<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    let raw = String::deserialize(d)?;
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse().map(Some).map_err(serde::de::Error::custom)
}

/// One row of a per-rate table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub m: usize,
    #[serde(rename = "mean_B")]
    pub mean_bad: i64,
    #[serde(rename = "sd_B")]
    pub sd_bad: i64,
    #[serde(rename = "cv_B", serialize_with = "fixed2")]
    pub cv_bad: f64,
    #[serde(rename = "mean_G")]
    pub mean_good: i64,
    #[serde(rename = "sd_G")]
    pub sd_good: i64,
    #[serde(rename = "cv_G", serialize_with = "fixed2")]
    pub cv_good: f64,
}

impl TableRow {
    pub fn from_stats(p: &PortfolioStats) -> Self {
        let (b, g) = (p.column(MarketState::Bad), p.column(MarketState::Good));
        TableRow {
            m: p.size,
            mean_bad: money(b.mean),
            sd_bad: money(b.sd),
            cv_bad: round_to(b.cv, 2),
            mean_good: money(g.mean),
            sd_good: money(g.sd),
            cv_good: round_to(g.cv, 2),
        }
    }
}

/// Per-rate header figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub rate: f64,
    pub contractual_npv: i64,
    #[serde(rename = "cov_B")]
    pub cov_bad: i64,
    #[serde(rename = "cov_G")]
    pub cov_good: i64,
    #[serde(rename = "rho_B", serialize_with = "fixed5")]
    pub rho_bad: f64,
    #[serde(rename = "rho_G", serialize_with = "fixed5")]
    pub rho_good: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub rate: f64,
    #[serde(rename = "limit_cv_B", serialize_with = "fixed3", deserialize_with = "optional")]
    pub limit_bad: Option<f64>,
    #[serde(rename = "limit_cv_G", serialize_with = "fixed3", deserialize_with = "optional")]
    pub limit_good: Option<f64>,
}

impl RateTable {
    pub fn table_rows(&self) -> Vec<TableRow> {
        self.rows.iter().map(TableRow::from_stats).collect()
    }

    pub fn summary_row(&self) -> SummaryRow {
        let m = &self.moments;
        SummaryRow {
            rate: self.discount.annual_rate(),
            contractual_npv: money(self.contractual_npv),
            cov_bad: money(m.covariance(MarketState::Bad)),
            cov_good: money(m.covariance(MarketState::Good)),
            rho_bad: round_to(m.correlation(MarketState::Bad), 5),
            rho_good: round_to(m.correlation(MarketState::Good), 5),
        }
    }

    pub fn limit_row(&self) -> LimitRow {
        LimitRow {
            rate: self.discount.annual_rate(),
            limit_bad: self.limit_cv.bad.map(|x| round_to(x, 3)),
            limit_good: self.limit_cv.good.map(|x| round_to(x, 3)),
        }
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::error::Error::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_error)
}

fn csv_error(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Validation(format!("csv: {e}"))
}

impl SweepReport {
    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Loan: principal {}, term {} months, contractual monthly rate {:.6} (annual {:.6})",
            self.principal,
            self.term,
            self.contractual_rate,
            (1.0 + self.contractual_rate).powi(12) - 1.0
        );
        let _ = writeln!(out, "Events per initial state: {}", self.atoms_per_state);
        for table in &self.tables {
            let s = table.summary_row();
            out.push('\n');
            let _ = writeln!(out, "Annual discount rate: {}", s.rate);
            let _ = writeln!(out, "Contractual NPV: {}", s.contractual_npv);
            let _ = writeln!(
                out,
                "Covariance between any couple of loans: cov_B = {}, cov_G = {}",
                s.cov_bad, s.cov_good
            );
            let _ = writeln!(
                out,
                "Linear correlation coefficients: rho_B = {:.5}, rho_G = {:.5}",
                s.rho_bad, s.rho_good
            );
            let _ = writeln!(
                out,
                "{:>6} {:>12} {:>10} {:>7} {:>12} {:>10} {:>7}",
                "m", "E[Psi_B]", "Sd[Psi_B]", "CV_B", "E[Psi_G]", "Sd[Psi_G]", "CV_G"
            );
            for r in table.table_rows() {
                let _ = writeln!(
                    out,
                    "{:>6} {:>12} {:>10} {:>7.2} {:>12} {:>10} {:>7.2}",
                    r.m, r.mean_bad, r.sd_bad, r.cv_bad, r.mean_good, r.sd_good, r.cv_good
                );
            }
            if let Some(sim) = &table.simulation {
                let _ = writeln!(out, "Monte Carlo ({} replications per state):", sim.bad.loan.replications);
                for state in MarketState::ALL {
                    let p = &sim[state];
                    let m = &table.moments;
                    let _ = writeln!(
                        out,
                        "  {state}: mean {:.2} (z {:+.2}), sd {:.2} (z {:+.2}), cov {:.1} (z {:+.2})",
                        p.loan.mean,
                        z_score(p.loan.mean, p.loan.se_mean, m.expected_npv(state)),
                        p.loan.sd,
                        z_score(p.loan.sd, p.loan.se_sd, m.sd(state)),
                        p.covariance,
                        z_score(p.covariance, p.se_covariance, m.covariance(state)),
                    );
                }
            }
        }
        out.push('\n');
        let _ = writeln!(out, "Limit coefficient of variation");
        let _ = writeln!(out, "{:>6} {:>8} {:>8}", "rate", "B", "G");
        let cell = |x: Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into());
        for table in &self.tables {
            let l = table.limit_row();
            let _ = writeln!(out, "{:>6} {:>8} {:>8}", l.rate, cell(l.limit_bad), cell(l.limit_good));
        }
        out
    }

    pub fn csv_name(discount: &DiscountSpec) -> String {
        format!("rate_{}.csv", discount.annual_rate())
    }

    /// Writes one table per rate plus `summary.csv` and `limit_cv.csv`.
    pub fn write_csv(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let io = |e: crate::error::Error| std::io::Error::other(e.to_string());
        let mut written = Vec::new();
        for table in &self.tables {
            let path = dir.join(Self::csv_name(&table.discount));
            std::fs::write(&path, to_csv(&table.table_rows()).map_err(io)?)?;
            written.push(path);
        }
        let summary: Vec<_> = self.tables.iter().map(RateTable::summary_row).collect();
        let path = dir.join("summary.csv");
        std::fs::write(&path, to_csv(&summary).map_err(io)?)?;
        written.push(path);
        let limits: Vec<_> = self.tables.iter().map(RateTable::limit_row).collect();
        let path = dir.join("limit_cv.csv");
        std::fs::write(&path, to_csv(&limits).map_err(io)?)?;
        written.push(path);
        Ok(written)
    }
}
