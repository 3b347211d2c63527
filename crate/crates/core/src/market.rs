//! Two-state Markov chain of credit-market conditions.
//!
//! `S_0` is known at origination. The state may change just before each
//! integer time `h`, so `S_{h-1}` is in force during month `h` and the
//! transition from `S_{h-1}` to `S_h` uses the persistence pair `b(h)`,
//! `g(h)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::state::MarketState;

#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    initial_state: MarketState,
    persist_bad: Vec<f64>,
    persist_good: Vec<f64>,
}

impl MarketModel {
    pub fn new(initial_state: MarketState, persist_bad: Vec<f64>, persist_good: Vec<f64>) -> Result<Self> {
        check_probabilities("market.persist_bad", &persist_bad)?;
        check_probabilities("market.persist_good", &persist_good)?;
        if persist_bad.len() != persist_good.len() {
            return Err(Error::Horizon(format!(
                "persist_bad has {} entries, persist_good has {}",
                persist_bad.len(),
                persist_good.len()
            )));
        }
        Ok(MarketModel {
            initial_state,
            persist_bad,
            persist_good,
        })
    }

    /// Time-homogeneous chain over `horizon` months.
    pub fn homogeneous(initial_state: MarketState, bad: f64, good: f64, horizon: usize) -> Result<Self> {
        Self::new(initial_state, vec![bad; horizon], vec![good; horizon])
    }

    pub fn initial_state(&self) -> MarketState {
        self.initial_state
    }

    pub fn with_initial_state(&self, initial_state: MarketState) -> Self {
        MarketModel {
            initial_state,
            ..self.clone()
        }
    }

    /// Number of months covered by the persistence sequences.
    pub fn horizon(&self) -> usize {
        self.persist_bad.len()
    }

    /// `b(h)` or `g(h)`, 1-based.
    pub fn persistence(&self, state: MarketState, h: usize) -> f64 {
        match state {
            MarketState::Bad => self.persist_bad[h - 1],
            MarketState::Good => self.persist_good[h - 1],
        }
    }

    /// Row-stochastic matrix for the move `S_{h-1} -> S_h`, rows and columns
    /// ordered (B, G).
    pub fn transition_matrix(&self, h: usize) -> Result<[[f64; 2]; 2]> {
        self.check_month(h)?;
        let b = self.persist_bad[h - 1];
        let g = self.persist_good[h - 1];
        Ok([[b, 1.0 - b], [1.0 - g, g]])
    }

    /// Mean run length in `state`: `1/(1-b)` or `1/(1-g)`.
    pub fn expected_sojourn(&self, state: MarketState) -> Result<f64> {
        let seq = match state {
            MarketState::Bad => &self.persist_bad,
            MarketState::Good => &self.persist_good,
        };
        let p = *seq.first().ok_or(Error::NonHomogeneous)?;
        if seq.iter().any(|q| *q != p) {
            return Err(Error::NonHomogeneous);
        }
        if p >= 1.0 {
            return Err(Error::InfiniteSojourn);
        }
        Ok(1.0 / (1.0 - p))
    }

    /// Stationary law `(π_B, π_G)` of a homogeneous chain.
    pub fn stationary_distribution(&self) -> Result<(f64, f64)> {
        let leave_bad = 1.0 / self.expected_sojourn(MarketState::Bad)?;
        let leave_good = 1.0 / self.expected_sojourn(MarketState::Good)?;
        let pi_bad = leave_good / (leave_bad + leave_good);
        Ok((pi_bad, 1.0 - pi_bad))
    }

    /// Draws `S_0..S_horizon` from a seeded stream.
    pub fn sample_path(&self, horizon: usize, seed: u64) -> Result<Vec<MarketState>> {
        if horizon > self.horizon() {
            return Err(Error::Horizon(format!(
                "path horizon {horizon} exceeds persistence length {}",
                self.horizon()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut path = Vec::with_capacity(horizon + 1);
        self.fill_path(&mut rng, horizon, false, &mut path);
        Ok(path)
    }

    /// Writes `S_0..S_horizon` into `path`. With `mirror` each uniform `u` is
    /// replaced by `1 - u`.
    pub(crate) fn fill_path<R: Rng>(&self, rng: &mut R, horizon: usize, mirror: bool, path: &mut Vec<MarketState>) {
        path.clear();
        let mut state = self.initial_state;
        path.push(state);
        for h in 1..=horizon {
            let u: f64 = rng.random();
            let u = if mirror { 1.0 - u } else { u };
            if u >= self.persistence(state, h) {
                state = state.other();
            }
            path.push(state);
        }
    }

    fn check_month(&self, h: usize) -> Result<()> {
        if h == 0 || h > self.horizon() {
            return Err(Error::OutOfRange {
                what: "transition month",
                index: h,
                max: self.horizon(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_probabilities(field: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(i) => Err(Error::field(
            format!("{field}[{i}]"),
            format!("probability {} out of [0,1]", values[i]),
        )),
        None => Ok(()),
    }
}
