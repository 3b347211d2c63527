//! Probability method: at-risk recursions, the 3n-event partition of the
//! loan's fate, and the first two moments of its RNPV taken atom by atom.

use crate::error::{Error, Result};
use crate::model::RiskModel;
use crate::schedule::DiscountSpec;
use crate::state::{MarketState, PerState};

/// Mass tolerance before [`EventDistribution::from_at_risk`] reports an
/// internal inconsistency.
const MASS_TOLERANCE: f64 = 1e-9;

/// `Q_{s,B}(h)`, `Q_{s,G}(h)` for `h = 0..n-1`: probability that the loan
/// is still alive at time `h` with the market in B (resp. G), given `S_0 = s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtRiskTable {
    rows: PerState<Vec<PerState<f64>>>,
}

impl AtRiskTable {
    pub fn compute(model: &RiskModel) -> Result<Self> {
        let n = model.term();
        if model.hazards.term() != n || model.market.horizon() < n {
            return Err(Error::Horizon("at-risk recursion needs hazards and market covering the term".into()));
        }
        let hz = &model.hazards;
        let mk = &model.market;
        let rows = PerState::from_fn(|initial| {
            let mut q = PerState::from_fn(|s| if s == initial { 1.0 } else { 0.0 });
            let mut out = Vec::with_capacity(n);
            out.push(q);
            for h in 1..n {
                let alive_b = q.bad * hz.survival(MarketState::Bad, h);
                let alive_g = q.good * hz.survival(MarketState::Good, h);
                let (b, g) = (mk.persistence(MarketState::Bad, h), mk.persistence(MarketState::Good, h));
                q = PerState::new(alive_b * b + alive_g * (1.0 - g), alive_g * g + alive_b * (1.0 - b));
                out.push(q);
            }
            out
        });
        Ok(AtRiskTable { rows })
    }

    pub fn term(&self) -> usize {
        self.rows.bad.len()
    }

    /// `Q_{initial, state}(h)` for `0 <= h <= n-1`.
    pub fn at(&self, initial: MarketState, state: MarketState, h: usize) -> f64 {
        self.rows[initial][h][state]
    }
}

/// Which member of the partition an atom represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    /// `E_s`: every instalment paid.
    Survive,
    /// `A_{s,state}(month)`: default at `month` with `state` in force.
    Default { state: MarketState, month: usize },
    /// `C_s(month)`: prepayment at `month < n`.
    Prepay { month: usize },
}

/// Event probabilities for one initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEvents {
    pub survive: f64,
    /// `P(A_{s,B}(h))`, `h = 1..n`.
    pub default_bad: Vec<f64>,
    /// `P(A_{s,G}(h))`, `h = 1..n`.
    pub default_good: Vec<f64>,
    /// `P(C_s(h))`, `h = 1..n-1`.
    pub prepay: Vec<f64>,
}

impl StateEvents {
    pub fn mass(&self) -> f64 {
        self.survive
            + self.default_bad.iter().sum::<f64>()
            + self.default_good.iter().sum::<f64>()
            + self.prepay.iter().sum::<f64>()
    }

    pub fn probability(&self, event: Event) -> f64 {
        match event {
            Event::Survive => self.survive,
            Event::Default { state: MarketState::Bad, month } => self.default_bad[month - 1],
            Event::Default { state: MarketState::Good, month } => self.default_good[month - 1],
            Event::Prepay { month } => self.prepay[month - 1],
        }
    }

    /// Every event of the partition in a fixed order: survival, defaults in
    /// B, defaults in G, prepayments.
    pub fn events(&self) -> Vec<Event> {
        let n = self.default_bad.len();
        let mut out = Vec::with_capacity(3 * n);
        out.push(Event::Survive);
        out.extend((1..=n).map(|month| Event::Default { state: MarketState::Bad, month }));
        out.extend((1..=n).map(|month| Event::Default { state: MarketState::Good, month }));
        out.extend((1..n).map(|month| Event::Prepay { month }));
        out
    }
}

/// One atom of the RNPV law: the payoff of `R_s(0)` on the event is
/// `fixed + recovery_weight * Z`, with `Z` the recovery rate of the
/// defaulting state and month (weight zero off default events).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub event: Event,
    pub probability: f64,
    pub fixed: f64,
    pub recovery_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDistribution {
    pub states: PerState<StateEvents>,
}

impl EventDistribution {
    pub fn from_at_risk(at_risk: &AtRiskTable, model: &RiskModel) -> Result<Self> {
        let n = at_risk.term();
        if n != model.term() {
            return Err(Error::Horizon("at-risk table built for a different term".into()));
        }
        let hz = &model.hazards;
        let states = PerState::try_from_fn(|initial| {
            let q = |s, h| at_risk.at(initial, s, h);
            let default_bad = (1..=n)
                .map(|h| q(MarketState::Bad, h - 1) * hz.default_intensity(MarketState::Bad, h))
                .collect();
            let default_good = (1..=n)
                .map(|h| q(MarketState::Good, h - 1) * hz.default_intensity(MarketState::Good, h))
                .collect();
            let prepay = (1..n)
                .map(|h| {
                    q(MarketState::Bad, h - 1) * hz.prepay_intensity(MarketState::Bad, h)
                        + q(MarketState::Good, h - 1) * hz.prepay_intensity(MarketState::Good, h)
                })
                .collect();
            let survive = q(MarketState::Bad, n - 1) * (1.0 - hz.default_intensity(MarketState::Bad, n))
                + q(MarketState::Good, n - 1) * (1.0 - hz.default_intensity(MarketState::Good, n));
            let events = StateEvents {
                survive,
                default_bad,
                default_good,
                prepay,
            };
            let mass = events.mass();
            if (mass - 1.0).abs() > MASS_TOLERANCE {
                return Err(Error::MassDefect {
                    state: initial.letter(),
                    mass,
                });
            }
            Ok(events)
        })?;
        Ok(EventDistribution { states })
    }

    pub fn compute(model: &RiskModel) -> Result<Self> {
        Self::from_at_risk(&AtRiskTable::compute(model)?, model)
    }

    /// Number of atoms per initial state.
    pub fn atom_count(&self) -> usize {
        3 * self.states.bad.default_bad.len()
    }

    /// Payoff atoms of `R_s(0)` for initial state `initial`.
    pub fn atoms(&self, initial: MarketState, model: &RiskModel, discount: &DiscountSpec) -> Vec<Atom> {
        let loan = &model.loan;
        let n = loan.term();
        // annuity[h] = Σ_{j<=h} r_j v^j
        let mut annuity = Vec::with_capacity(n + 1);
        annuity.push(0.0);
        for h in 1..=n {
            annuity.push(annuity[h - 1] + loan.instalment(h) * discount.factor_at(h));
        }
        let events = &self.states[initial];
        events
            .events()
            .into_iter()
            .map(|event| {
                let probability = events.probability(event);
                let (fixed, recovery_weight) = match event {
                    Event::Survive => (annuity[n], 0.0),
                    Event::Default { month, .. } => {
                        (annuity[month - 1], discount.factor_at(month) * loan.exposure(month))
                    }
                    Event::Prepay { month } => (
                        annuity[month - 1] + discount.factor_at(month) * loan.charge_or_one(month) * loan.exposure(month),
                        0.0,
                    ),
                };
                Atom {
                    event,
                    probability,
                    fixed,
                    recovery_weight,
                }
            })
            .collect()
    }
}

/// `E[V_s(0)]` and `E[V_s(0)²]` per initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardMoments {
    pub mean: PerState<f64>,
    pub second: PerState<f64>,
}

impl ForwardMoments {
    pub fn variance(&self, state: MarketState) -> f64 {
        self.second[state] - self.mean[state] * self.mean[state]
    }
}

/// First two RNPV moments by summation over the event atoms. Default
/// atoms pay `c + dZ`, contributing `c² + 2cd E[Z] + d² E[Z²]` to the
/// second moment.
pub fn moments_forward(model: &RiskModel, discount: &DiscountSpec, distribution: &EventDistribution) -> ForwardMoments {
    let w = model.loan.principal();
    let per_state = PerState::from_fn(|initial| {
        let (mut m1, mut m2) = (0.0, 0.0);
        for atom in distribution.atoms(initial, model, discount) {
            let c = atom.fixed - w;
            let d = atom.recovery_weight;
            let (ez, ez2) = match atom.event {
                Event::Default { state, month } => model.recovery.moments_unchecked(state, month),
                _ => (0.0, 0.0),
            };
            m1 += atom.probability * (c + d * ez);
            m2 += atom.probability * (c * c + 2.0 * c * d * ez + d * d * ez2);
        }
        (m1, m2)
    });
    ForwardMoments {
        mean: per_state.map(|_, v| v.0),
        second: per_state.map(|_, v| v.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{HazardModel, RecoveryLaw, RecoveryModel};
    use crate::market::MarketModel;
    use crate::schedule::{certain_npv, LoanSpec};
    use MarketState::{Bad, Good};

    fn application() -> RiskModel {
        let n = 60;
        RiskModel::new(
            LoanSpec::level(8500.0, 190.0, n).unwrap(),
            MarketModel::homogeneous(Bad, 0.92, 0.96, n).unwrap(),
            HazardModel::constant(n, 0.006, 0.003, 0.008, 0.010).unwrap(),
            RecoveryModel::constant(
                n,
                RecoveryLaw::beta_matching(0.25, 0.2).unwrap(),
                RecoveryLaw::beta_matching(0.40, 0.2).unwrap(),
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn riskless(n: usize) -> RiskModel {
        RiskModel::new(
            LoanSpec::level(150.0 * n as f64, 190.0, n).unwrap(),
            MarketModel::homogeneous(Bad, 0.7, 0.8, n).unwrap(),
            HazardModel::constant(n, 0.0, 0.0, 0.0, 0.0).unwrap(),
            RecoveryModel::constant(n, RecoveryLaw::Fixed(0.3), RecoveryLaw::Fixed(0.3)).unwrap(),
        )
        .unwrap()
    }

    fn round4(x: f64) -> f64 {
        (x * 1e4).round() / 1e4
    }

    #[test]
    fn at_risk_values_from_application() {
        let q = AtRiskTable::compute(&application()).unwrap();
        assert_eq!(round4(q.at(Bad, Bad, 29)), 0.2345);
        assert_eq!(round4(q.at(Bad, Good, 29)), 0.4393);
        assert_eq!(round4(q.at(Bad, Bad, 59)), 0.1496);
        assert_eq!(round4(q.at(Bad, Good, 59)), 0.3009);
        assert_eq!(q.at(Good, Good, 0), 1.0);
        assert_eq!(q.at(Good, Bad, 0), 0.0);
        for s in MarketState::ALL {
            for h in 1..60 {
                let prev = q.at(s, Bad, h - 1) + q.at(s, Good, h - 1);
                let cur = q.at(s, Bad, h) + q.at(s, Good, h);
                assert!(cur <= prev);
            }
        }
    }

    #[test]
    fn event_probabilities_from_application() {
        let d = EventDistribution::compute(&application()).unwrap();
        let b = &d.states.bad;
        assert_eq!(round4(b.survive), 0.4487);
        assert_eq!(round4(b.default_bad[29]), 0.0014);
        assert_eq!(round4(b.default_good[29]), 0.0013);
        assert_eq!(round4(b.prepay[29]), 0.0063);
        assert_eq!(d.atom_count(), 180);
        for s in MarketState::ALL {
            assert!((d.states[s].mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn riskless_degenerates_to_certain_npv() {
        let model = riskless(24);
        let disc = DiscountSpec::from_annual(0.04).unwrap();
        let d = EventDistribution::compute(&model).unwrap();
        assert!((d.states.bad.survive - 1.0).abs() < 1e-15);
        assert!(d.states.bad.default_bad.iter().all(|p| *p == 0.0));
        let m = moments_forward(&model, &disc, &d);
        let v0 = certain_npv(&model.loan, &disc);
        for s in MarketState::ALL {
            assert!((m.mean[s] - v0).abs() < 1e-9);
            assert!(m.variance(s).abs() < 1e-6);
        }
        let frozen = RiskModel {
            market: MarketModel::homogeneous(Bad, 1.0, 1.0, 24).unwrap(),
            ..model
        };
        let q = AtRiskTable::compute(&frozen).unwrap();
        assert!((0..24).all(|h| q.at(Bad, Bad, h) == 1.0 && q.at(Bad, Good, h) == 0.0));
    }

    #[test]
    fn application_single_loan_moments() {
        let model = application();
        let disc = DiscountSpec::from_annual(0.04).unwrap();
        let m = moments_forward(&model, &disc, &EventDistribution::compute(&model).unwrap());
        assert_eq!(m.mean.bad.round(), 757.0);
        assert_eq!(m.variance(Bad).sqrt().round(), 2014.0);
        assert_eq!(m.mean.good.round(), 919.0);
        assert_eq!(m.variance(Good).sqrt().round(), 1681.0);
    }

    #[test]
    fn mass_defect_detected() {
        let model = application();
        let mut q = AtRiskTable::compute(&model).unwrap();
        q.rows.bad[10].bad += 0.01;
        assert!(matches!(
            EventDistribution::from_at_risk(&q, &model),
            Err(Error::MassDefect { state: 'B', .. })
        ));
    }
}
