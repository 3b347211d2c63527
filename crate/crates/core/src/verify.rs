//! Cross-checks between the forward and backward engines, the probability
//! mass of the event partition and, optionally, the Monte Carlo oracle.

use std::fmt::Write as _;

use crate::backward::{backward_moment_set, MomentSet};
use crate::config::Scenario;
use crate::error::Result;
use crate::forward::{moments_forward, EventDistribution, ForwardMoments};
use crate::model::RiskModel;
use crate::montecarlo::{simulate_pair, z_score};
use crate::schedule::DiscountSpec;
use crate::state::MarketState;

/// Relative deviation tolerated between the two analytic engines.
pub const ANALYTIC_TOLERANCE: f64 = 1e-9;
/// Largest absolute deviation of the event mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Largest |z| accepted from the simulation.
pub const Z_LIMIT: f64 = 4.0;

pub type ForwardEngine = fn(&RiskModel, &DiscountSpec, &EventDistribution) -> ForwardMoments;
pub type BackwardEngine = fn(&RiskModel, &DiscountSpec) -> Result<MomentSet>;

/// The engine implementations under test; replaceable so the harness can
/// be checked against a deliberately broken engine.
#[derive(Clone, Copy)]
pub struct Engines {
    pub forward: ForwardEngine,
    pub backward: BackwardEngine,
}

impl Default for Engines {
    fn default() -> Self {
        Engines {
            forward: moments_forward,
            backward: backward_moment_set,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value.abs() <= self.limit
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<40} {:>12.3e} (limit {:.0e})",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.limit
            );
        }
        let _ = writeln!(out, "{}", if self.passed() { "all checks passed" } else { "cross-check FAILED" });
        out
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn verify(scenario: &Scenario, with_mc: bool) -> Result<VerificationReport> {
    verify_with(scenario, with_mc, Engines::default())
}

pub fn verify_with(scenario: &Scenario, with_mc: bool, engines: Engines) -> Result<VerificationReport> {
    let model = &scenario.model;
    let mut checks = Vec::new();
    let distribution = EventDistribution::compute(model)?;
    let residual = MarketState::ALL
        .iter()
        .map(|s| (distribution.states[*s].mass() - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "probability_mass_residual".into(),
        value: residual,
        limit: MASS_TOLERANCE,
    });

    for discount in &scenario.rates {
        let rate = discount.annual_rate();
        let fwd = (engines.forward)(model, discount, &distribution);
        let bwd = (engines.backward)(model, discount)?.origin();
        let deviation = MarketState::ALL
            .iter()
            .map(|&s| {
                relative(fwd.mean[s], bwd.expected_npv(s)).max(relative(fwd.second[s], bwd.second_npv(s)))
            })
            .fold(0.0, f64::max);
        checks.push(Check {
            name: format!("forward_vs_backward[{rate}]"),
            value: deviation,
            limit: ANALYTIC_TOLERANCE,
        });

        if with_mc {
            for state in MarketState::ALL {
                let sim = simulate_pair(&model.with_initial_state(state), discount, &scenario.mc)?;
                let zs = [
                    ("mean", z_score(sim.loan.mean, sim.loan.se_mean, bwd.expected_npv(state))),
                    ("sd", z_score(sim.loan.sd, sim.loan.se_sd, bwd.sd(state))),
                    ("cov", z_score(sim.covariance, sim.se_covariance, bwd.covariance(state))),
                ];
                for (what, z) in zs {
                    checks.push(Check {
                        name: format!("mc_{what}_z[{rate},{state}]"),
                        value: z,
                        limit: Z_LIMIT,
                    });
                }
            }
        }
    }
    Ok(VerificationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn scenario() -> Scenario {
        ScenarioConfig::from_json(
            r#"{
            "loan": {"principal": 1000, "term": 12, "instalments": 90},
            "market": {"persist_bad": 0.8, "persist_good": 0.9},
            "hazard": {"default_bad": 0.03, "default_good": 0.01, "prepay_bad": 0.02, "prepay_good": 0.04},
            "recovery": {"bad": {"mean": 0.3, "sd": 0.2}, "good": {"a": 2, "b": 3}},
            "sweep": {"annual_rates": [0.03, 0.06]},
            "mc": {"replications": 20000, "seed": 7}
        }"#,
        )
        .unwrap()
        .build()
        .unwrap()
    }

    fn corrupted(model: &RiskModel, discount: &DiscountSpec) -> Result<MomentSet> {
        let bumped = DiscountSpec::from_monthly(discount.monthly_rate() * 1.001)?;
        backward_moment_set(model, &bumped)
    }

    #[test]
    fn clean_engines_pass() {
        let report = verify(&scenario(), true).unwrap();
        assert!(report.passed(), "{}", report.render());
        assert_eq!(report.checks.len(), 1 + 2 * (1 + 6));
    }

    #[test]
    fn corrupted_engine_is_named() {
        let engines = Engines {
            backward: corrupted,
            ..Engines::default()
        };
        let report = verify_with(&scenario(), false, engines).unwrap();
        assert!(!report.passed());
        let failed: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["forward_vs_backward[0.03]", "forward_vs_backward[0.06]"]);
        assert!(report.render().contains("FAIL forward_vs_backward[0.03]"));
    }
}
