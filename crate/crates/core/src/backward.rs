//! Backward-looking recursions on the conditional moments of `R_s(h)`, the
//! value at `h` of the instalments from `h+1` onwards given the loan is alive
//! at `h` with state `s` in force during month `h+1`.
//!
//! Three streams per state advance together from `h = n-1` down to `0`:
//! `E[R_s(h)]`, `E[R_s(h)²]` and the pair moment `E[R_{s,1}(h) R_{s,2}(h)]`
//! of two loans sharing the market path with conditionally independent
//! exits and recoveries.

use crate::error::{Error, Result};
use crate::model::RiskModel;
use crate::schedule::DiscountSpec;
use crate::state::{MarketState, PerState};

/// Moments of `R_s(h)` for one state at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateMoments {
    /// `E[R_s(h)]`
    pub mean: f64,
    /// `E[R_s(h)²]`
    pub second: f64,
    /// `E[R_{s,1}(h) R_{s,2}(h)]`
    pub cross: f64,
}

impl StateMoments {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }

    pub fn covariance(&self) -> f64 {
        self.cross - self.mean * self.mean
    }

    /// Linear correlation of two loans' values.
    pub fn correlation(&self) -> f64 {
        self.covariance() / self.variance()
    }
}

/// Moment streams for `h = 0..n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    rows: Vec<PerState<StateMoments>>,
    principal: f64,
}

impl MomentSet {
    pub fn at(&self, h: usize, state: MarketState) -> StateMoments {
        self.rows[h][state]
    }

    pub fn term(&self) -> usize {
        self.rows.len()
    }

    /// Moments at origination.
    pub fn origin(&self) -> LoanMoments {
        LoanMoments {
            principal: self.principal,
            states: self.rows[0],
        }
    }
}

/// Single-loan moments at time 0, for both initial states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoanMoments {
    pub principal: f64,
    pub states: PerState<StateMoments>,
}

impl LoanMoments {
    /// `E[V_s(0)] = E[R_s(0)] - w`.
    pub fn expected_npv(&self, state: MarketState) -> f64 {
        self.states[state].mean - self.principal
    }

    /// `E[V_s(0)²]`.
    pub fn second_npv(&self, state: MarketState) -> f64 {
        let m = &self.states[state];
        let w = self.principal;
        m.second - 2.0 * w * m.mean + w * w
    }

    pub fn variance(&self, state: MarketState) -> f64 {
        self.states[state].variance()
    }

    pub fn sd(&self, state: MarketState) -> f64 {
        self.variance(state).max(0.0).sqrt()
    }

    pub fn covariance(&self, state: MarketState) -> f64 {
        self.states[state].covariance()
    }

    pub fn correlation(&self, state: MarketState) -> f64 {
        self.states[state].correlation()
    }
}

/// Moments at `h = n-1`, where only the final instalment remains.
pub fn terminal_moments(model: &RiskModel, discount: &DiscountSpec) -> PerState<StateMoments> {
    let n = model.term();
    let v = discount.factor();
    let r = model.loan.instalment(n);
    PerState::from_fn(|s| {
        let lambda = model.hazards.default_intensity(s, n);
        let (ez, ez2) = model.recovery.moments_unchecked(s, n);
        let paid = lambda * ez + (1.0 - lambda);
        StateMoments {
            mean: v * r * paid,
            second: v * v * r * r * (lambda * ez2 + (1.0 - lambda)),
            cross: (v * r * paid).powi(2),
        }
    })
}

/// Runs every stream back to `h = 0`.
pub fn backward_moment_set(model: &RiskModel, discount: &DiscountSpec) -> Result<MomentSet> {
    let n = model.term();
    if model.hazards.term() != n || model.recovery.term() != n || model.market.horizon() < n {
        return Err(Error::Horizon("backward recursion needs every model covering the term".into()));
    }
    let v = discount.factor();
    let (loan, hz, mk) = (&model.loan, &model.hazards, &model.market);

    let mut rows = vec![PerState::<StateMoments>::default(); n];
    rows[n - 1] = terminal_moments(model, discount);
    for h in (1..n).rev() {
        let next = rows[h];
        let r = loan.instalment(h);
        let phi = loan.exposure(h);
        let charge = loan.charge_or_one(h);
        rows[h - 1] = PerState::from_fn(|s| {
            let other = s.other();
            let lambda = hz.default_intensity(s, h);
            let mu = hz.prepay_intensity(s, h);
            let q = hz.survival(s, h);
            let p = mk.persistence(s, h);
            let (ez, ez2) = model.recovery.moments_unchecked(s, h);

            // Exit at h: mean and second moment of the exit payoff (undiscounted).
            let exit = lambda * phi * ez + mu * charge * phi;
            let exit2 = lambda * phi * phi * ez2 + mu * charge * charge * phi * phi;
            // Continuation given survival: r_h + R_{S_h}(h).
            let cont_mean = p * next[s].mean + (1.0 - p) * next[other].mean;
            let cont = r + cont_mean;
            let cont2 = r * r
                + p * (2.0 * r * next[s].mean + next[s].second)
                + (1.0 - p) * (2.0 * r * next[other].mean + next[other].second);
            let cont_pair = r * r
                + 2.0 * r * cont_mean
                + p * next[s].cross
                + (1.0 - p) * next[other].cross;

            StateMoments {
                mean: v * (exit + q * cont),
                second: v * v * (exit2 + q * cont2),
                cross: v * v * (exit * exit + 2.0 * q * exit * cont + q * q * cont_pair),
            }
        });
    }
    Ok(MomentSet {
        rows,
        principal: loan.principal(),
    })
}

/// `(E[R_s(0)], E[R_s(0)²])` per initial state.
pub fn backward_first_two_moments(model: &RiskModel, discount: &DiscountSpec) -> Result<PerState<(f64, f64)>> {
    let set = backward_moment_set(model, discount)?;
    Ok(set.origin().states.map(|_, m| (m.mean, m.second)))
}

/// `E[R_{s,1}(0) R_{s,2}(0)]` per initial state.
pub fn backward_cross_moment(model: &RiskModel, discount: &DiscountSpec) -> Result<PerState<f64>> {
    let set = backward_moment_set(model, discount)?;
    Ok(set.origin().states.map(|_, m| m.cross))
}
