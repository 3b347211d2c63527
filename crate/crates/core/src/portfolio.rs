//! Portfolio of `m` exchangeable loans: one parameterization, one shared
//! market path, exits and recoveries independent given the path. Portfolio
//! variance then needs only the single-loan variance and one pairwise
//! covariance:
//!
//! `Var[Ψ] = m Var[R_1] + m(m-1) Cov[R_1, R_2]`.

use crate::backward::LoanMoments;
use crate::error::{Error, Result};
use crate::state::{MarketState, PerState};

/// Portfolio figures for one initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortfolioColumn {
    pub mean: f64,
    pub sd: f64,
    pub cv: f64,
    pub covariance: f64,
    pub correlation: f64,
    /// `None` when the single-loan expected RNPV is not positive.
    pub limit_cv: Option<f64>,
}

/// Portfolio statistics for both initial states side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortfolioStats {
    pub size: usize,
    pub columns: PerState<PortfolioColumn>,
}

impl PortfolioStats {
    pub fn column(&self, state: MarketState) -> &PortfolioColumn {
        &self.columns[state]
    }
}

pub fn portfolio_moments(single: &LoanMoments, m: usize) -> Result<PortfolioStats> {
    if m == 0 {
        return Err(Error::field("sweep.portfolio_sizes", "portfolio size must be at least 1"));
    }
    let mf = m as f64;
    let columns = PerState::from_fn(|s| {
        let variance = single.variance(s);
        let covariance = single.covariance(s);
        let mean = mf * single.expected_npv(s);
        let sd = (mf * variance + mf * (mf - 1.0) * covariance).max(0.0).sqrt();
        PortfolioColumn {
            mean,
            sd,
            cv: sd / mean,
            covariance,
            correlation: covariance / variance,
            limit_cv: limit_cv(single, s).ok(),
        }
    });
    Ok(PortfolioStats { size: m, columns })
}

/// `lim_{m→∞} Sd[Ψ]/E[Ψ] = sqrt(Cov[R_1, R_2]) / E[V_s(0)]`.
pub fn limit_cv(single: &LoanMoments, state: MarketState) -> Result<f64> {
    let mean = single.expected_npv(state);
    if mean <= 0.0 || !mean.is_finite() {
        return Err(Error::NonPositiveMean(mean));
    }
    Ok(single.covariance(state).max(0.0).sqrt() / mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backward::StateMoments;
    use MarketState::{Bad, Good};

    fn single(mean_r: f64, var: f64, cov: f64) -> LoanMoments {
        let m = StateMoments {
            mean: mean_r,
            second: var + mean_r * mean_r,
            cross: cov + mean_r * mean_r,
        };
        LoanMoments {
            principal: 100.0,
            states: PerState::new(m, m),
        }
    }

    #[test]
    fn size_one_is_single_loan() {
        let s = single(110.0, 25.0, 3.0);
        let p = portfolio_moments(&s, 1).unwrap();
        assert!((p.column(Bad).mean - 10.0).abs() < 1e-12);
        assert!((p.column(Bad).sd - 5.0).abs() < 1e-12);
        assert!((p.column(Good).correlation - 0.12).abs() < 1e-12);
    }

    #[test]
    fn variance_identity_and_limit() {
        let s = single(110.0, 25.0, 4.0);
        let p = portfolio_moments(&s, 10).unwrap();
        let var = p.column(Bad).sd.powi(2);
        assert!((var - (10.0 * 25.0 + 90.0 * 4.0)).abs() < 1e-9 * var);
        let limit = limit_cv(&s, Bad).unwrap();
        assert!((limit - 0.2).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for m in [1, 8, 64, 512, 4096, 1 << 20] {
            let cv = portfolio_moments(&s, m).unwrap().column(Bad).cv;
            assert!(cv < prev && cv >= limit);
            prev = cv;
        }
    }

    #[test]
    fn zero_covariance_limit() {
        assert_eq!(limit_cv(&single(110.0, 25.0, 0.0), Good).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let s = single(90.0, 25.0, 1.0);
        assert!(portfolio_moments(&s, 0).is_err());
        assert_eq!(limit_cv(&s, Bad), Err(Error::NonPositiveMean(-10.0)));
        assert_eq!(portfolio_moments(&s, 4).unwrap().column(Bad).limit_cv, None);
    }
}
