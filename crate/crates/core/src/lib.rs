//! Profitability of loans and portfolios of exchangeable loans exposed to
//! competing default and prepayment risks, with intensities driven by a
//! two-state (Bad/Good) Markov chain of credit-market conditions.
//!
//! The random net present value (RNPV) of a loan is the discounted value of
//! the cash actually received minus the principal. Its first two moments are
//! computed two independent ways:
//!
//! * [`forward`]: at-risk probabilities, the full 3n-event distribution of
//!   the loan's fate, then moments over the atoms;
//! * [`backward`]: dynamic-programming recursions from maturity back to
//!   origination, which also yield the pairwise cross moment needed for
//!   portfolio variance.
//!
//! [`montecarlo`] simulates the same payoff map as a third, statistical
//! check. [`portfolio`] aggregates single-loan moments to `m` exchangeable
//! loans, and [`config`], [`report`] and [`verify`] drive the command-line
//! sweeps.

pub mod backward;
pub mod behavior;
pub mod config;
pub mod error;
pub mod forward;
pub mod market;
pub mod model;
pub mod montecarlo;
pub mod portfolio;
pub mod report;
pub mod schedule;
pub mod state;
pub mod verify;

pub use backward::{backward_moment_set, LoanMoments, MomentSet, StateMoments};
pub use behavior::{beta_from_moments, HazardModel, RecoveryLaw, RecoveryModel};
pub use error::{Error, Result};
pub use forward::{moments_forward, AtRiskTable, EventDistribution, ForwardMoments};
pub use market::MarketModel;
pub use model::RiskModel;
pub use portfolio::PortfolioStats;
pub use schedule::{certain_npv, solve_internal_rate, DiscountSpec, LoanSpec};
pub use state::{MarketState, PerState};
