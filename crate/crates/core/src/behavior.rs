//! Default/prepayment intensities and recovery-rate laws.
//!
//! Intensities are monthly probabilities conditioned on survival to `h-1`
//! and on the state in force during month `h`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::market::check_probabilities;
use crate::state::{MarketState, PerState};

#[derive(Debug, Clone, PartialEq)]
pub struct HazardModel {
    default: PerState<Vec<f64>>,
    // length n, last slot pinned to 0
    prepay: PerState<Vec<f64>>,
}

impl HazardModel {
    /// Default intensities have length `n`; prepayment intensities `n-1`.
    pub fn new(
        default_bad: Vec<f64>,
        default_good: Vec<f64>,
        prepay_bad: Vec<f64>,
        prepay_good: Vec<f64>,
    ) -> Result<Self> {
        let n = default_bad.len();
        if n == 0 {
            return Err(Error::field("hazard.default_bad", "needs at least one month"));
        }
        if default_good.len() != n {
            return Err(Error::Horizon(format!(
                "default_good has {} entries, expected {n}",
                default_good.len()
            )));
        }
        for (name, seq) in [("hazard.prepay_bad", &prepay_bad), ("hazard.prepay_good", &prepay_good)] {
            if seq.len() != n - 1 {
                return Err(Error::Horizon(format!("{name} has {} entries, expected {}", seq.len(), n - 1)));
            }
        }
        check_intensities("hazard.default_bad", &default_bad)?;
        check_intensities("hazard.default_good", &default_good)?;
        check_intensities("hazard.prepay_bad", &prepay_bad)?;
        check_intensities("hazard.prepay_good", &prepay_good)?;

        let mut prepay = PerState::new(prepay_bad, prepay_good);
        prepay.bad.push(0.0);
        prepay.good.push(0.0);
        let default = PerState::new(default_bad, default_good);
        for state in MarketState::ALL {
            let field = format!("hazard.{}", if state == MarketState::Bad { "bad" } else { "good" });
            for h in 0..n {
                let total = default[state][h] + prepay[state][h];
                if total > 1.0 + 1e-15 {
                    return Err(Error::field(
                        format!("{field}[{h}]"),
                        format!("default + prepayment intensity {total} exceeds 1"),
                    ));
                }
            }
        }
        Ok(HazardModel { default, prepay })
    }

    /// Time-constant intensities over `term` months.
    pub fn constant(term: usize, default_bad: f64, default_good: f64, prepay_bad: f64, prepay_good: f64) -> Result<Self> {
        let m = term.saturating_sub(1);
        Self::new(vec![default_bad; term], vec![default_good; term], vec![prepay_bad; m], vec![prepay_good; m])
    }

    pub fn term(&self) -> usize {
        self.default.bad.len()
    }

    /// `λ_s(h)`, 1-based.
    pub fn default_intensity(&self, state: MarketState, h: usize) -> f64 {
        self.default[state][h - 1]
    }

    /// `μ_s(h)`, 1-based; zero at maturity.
    pub fn prepay_intensity(&self, state: MarketState, h: usize) -> f64 {
        self.prepay[state][h - 1]
    }

    /// `1 - λ_s(h) - μ_s(h)`.
    pub fn survival(&self, state: MarketState, h: usize) -> f64 {
        (1.0 - self.default_intensity(state, h) - self.prepay_intensity(state, h)).max(0.0)
    }
}

fn check_intensities(field: &str, values: &[f64]) -> Result<()> {
    check_probabilities(field, values).map_err(|e| match e {
        Error::Field { field, message } => Error::Field {
            field,
            message: message.replace("probability", "intensity"),
        },
        other => other,
    })
}

/// Distribution of the recovery rate `Z_s(h)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecoveryLaw {
    Beta { a: f64, b: f64 },
    /// First two moments only; analytic engines accept it, sampling does not.
    Moments { mean: f64, second_moment: f64 },
    /// Point mass.
    Fixed(f64),
}

impl RecoveryLaw {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(Error::Validation(format!("beta parameters ({a}, {b}) must be positive")));
        }
        Ok(RecoveryLaw::Beta { a, b })
    }

    /// Beta law matching `mean` and `sd`.
    pub fn beta_matching(mean: f64, sd: f64) -> Result<Self> {
        let (a, b) = beta_from_moments(mean, sd)?;
        Ok(RecoveryLaw::Beta { a, b })
    }

    pub fn moments_only(mean: f64, second_moment: f64) -> Result<Self> {
        let law = RecoveryLaw::Moments { mean, second_moment };
        law.validate()?;
        Ok(law)
    }

    pub fn fixed(z: f64) -> Result<Self> {
        let law = RecoveryLaw::Fixed(z);
        law.validate()?;
        Ok(law)
    }

    /// `(E[Z], E[Z²])`.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            RecoveryLaw::Beta { a, b } => {
                let s = a + b;
                (a / s, (a + 1.0) * a / ((s + 1.0) * s))
            }
            RecoveryLaw::Moments { mean, second_moment } => (mean, second_moment),
            RecoveryLaw::Fixed(z) => (z, z * z),
        }
    }

    fn validate(&self) -> Result<()> {
        let (m1, m2) = self.moments();
        if !(0.0..=1.0).contains(&m1) {
            return Err(Error::Validation(format!("recovery mean {m1} out of [0,1]")));
        }
        // rounding slack for point masses built from moments
        let eps = 1e-12;
        if m2 < m1 * m1 - eps || m2 > m1 + eps {
            return Err(Error::Validation(format!(
                "recovery second moment {m2} outside [{}, {m1}]",
                m1 * m1
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        match *self {
            RecoveryLaw::Beta { a, b } => Beta::new(a, b).ok().map(|d| d.sample(rng)),
            RecoveryLaw::Fixed(z) => Some(z),
            RecoveryLaw::Moments { .. } => None,
        }
    }
}

/// Beta parameters `(a, b)` with the given mean and standard deviation.
pub fn beta_from_moments(mean: f64, sd: f64) -> Result<(f64, f64)> {
    if !mean.is_finite() || !sd.is_finite() {
        return Err(Error::Validation("recovery mean and sd must be finite".into()));
    }
    if mean <= 0.0 || mean >= 1.0 {
        return Err(Error::DegenerateBeta(mean));
    }
    if sd <= 0.0 {
        return Err(Error::Validation(format!("recovery sd {sd} must be positive")));
    }
    let variance = sd * sd;
    let bound = mean * (1.0 - mean);
    if variance >= bound {
        return Err(Error::InfeasibleBeta { variance, bound });
    }
    let k = bound / variance - 1.0;
    Ok((mean * k, (1.0 - mean) * k))
}

/// Recovery laws per state and month.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryModel {
    laws: PerState<Vec<RecoveryLaw>>,
}

impl RecoveryModel {
    pub fn new(bad: Vec<RecoveryLaw>, good: Vec<RecoveryLaw>) -> Result<Self> {
        if bad.is_empty() || bad.len() != good.len() {
            return Err(Error::Horizon(format!(
                "recovery sequences have lengths {} and {}",
                bad.len(),
                good.len()
            )));
        }
        for law in bad.iter().chain(&good) {
            law.validate()?;
        }
        Ok(RecoveryModel {
            laws: PerState::new(bad, good),
        })
    }

    /// Same law in every month.
    pub fn constant(term: usize, bad: RecoveryLaw, good: RecoveryLaw) -> Result<Self> {
        Self::new(vec![bad; term], vec![good; term])
    }

    pub fn term(&self) -> usize {
        self.laws.bad.len()
    }

    pub fn law(&self, state: MarketState, h: usize) -> Result<&RecoveryLaw> {
        self.laws[state].get(h.wrapping_sub(1)).ok_or(Error::OutOfRange {
            what: "recovery month",
            index: h,
            max: self.term(),
        })
    }

    /// `(E[Z_s(h)], E[Z_s(h)²])`.
    pub fn recovery_moments(&self, state: MarketState, h: usize) -> Result<(f64, f64)> {
        Ok(self.law(state, h)?.moments())
    }

    pub(crate) fn moments_unchecked(&self, state: MarketState, h: usize) -> (f64, f64) {
        self.laws[state][h - 1].moments()
    }

    /// True when every law can be sampled.
    pub fn is_sampleable(&self) -> bool {
        self.ensure_sampleable().is_ok()
    }

    pub fn ensure_sampleable(&self) -> Result<()> {
        for state in MarketState::ALL {
            if let Some(i) = self.laws[state].iter().position(|l| matches!(l, RecoveryLaw::Moments { .. })) {
                return Err(Error::NoDistribution {
                    state: state.letter(),
                    month: i + 1,
                });
            }
        }
        Ok(())
    }

    pub fn sample_recovery(&self, state: MarketState, h: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(state, h, &mut rng)
    }

    pub(crate) fn sample_with<R: Rng + ?Sized>(&self, state: MarketState, h: usize, rng: &mut R) -> Result<f64> {
        self.law(state, h)?.sample(rng).ok_or(Error::NoDistribution {
            state: state.letter(),
            month: h,
        })
    }
}
