//! Monte Carlo simulation of market paths, loan exits and recoveries.
//!
//! Replication `i` draws from ChaCha8 streams keyed by `i`, so results do
//! not depend on how replications are scheduled across threads. Partial
//! sums are formed per fixed-size chunk and merged by pairwise reduction in
//! chunk order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::Event;
use crate::model::RiskModel;
use crate::schedule::DiscountSpec;
use crate::state::MarketState;

const CHUNK: u64 = 1024;
const PILOT: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub replications: u64,
    pub seed: u64,
    /// Pair replication `2k+1` with `2k`, mirroring the market-path uniforms.
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(replications: u64, seed: u64) -> Self {
        SimConfig {
            replications,
            seed,
            antithetic: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::field("mc.replications", "must be at least 1"));
        }
        if self.antithetic && self.replications % 2 == 1 {
            return Err(Error::field("mc.replications", "antithetic sampling needs an even count"));
        }
        Ok(())
    }
}

/// Sample statistics of `V_s(0)` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStats {
    pub replications: u64,
    pub mean: f64,
    pub sd: f64,
    pub se_mean: f64,
    pub se_sd: f64,
}

/// Pair simulation: loan-1 statistics plus the sample covariance of the two
/// loans' values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub loan: SimStats,
    pub covariance: f64,
    pub se_covariance: f64,
}

/// `(estimate - target) / se`, zero when both the error and the deviation
/// vanish.
pub fn z_score(estimate: f64, se: f64, target: f64) -> f64 {
    let dev = estimate - target;
    if se > 0.0 {
        dev / se
    } else if dev.abs() <= 1e-9 * target.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(dev)
    }
}

/// Payoff tables shared by every replication.
struct Cashflows {
    n: usize,
    /// `v^h r_h`, index `h-1`
    instalment: Vec<f64>,
    /// `v^h φ(h)`
    exposure: Vec<f64>,
    /// `v^h γ(h) φ(h)`
    prepayment: Vec<f64>,
}

impl Cashflows {
    fn new(model: &RiskModel, discount: &DiscountSpec) -> Self {
        let loan = &model.loan;
        let n = loan.term();
        let months = 1..=n;
        Cashflows {
            n,
            instalment: months.clone().map(|h| discount.factor_at(h) * loan.instalment(h)).collect(),
            exposure: months.clone().map(|h| discount.factor_at(h) * loan.exposure(h)).collect(),
            prepayment: months
                .map(|h| discount.factor_at(h) * loan.charge_or_one(h) * loan.exposure(h))
                .collect(),
        }
    }
}

struct Simulator<'a> {
    model: &'a RiskModel,
    flows: Cashflows,
    cfg: SimConfig,
}

impl<'a> Simulator<'a> {
    fn new(model: &'a RiskModel, discount: &DiscountSpec, cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        model.recovery.ensure_sampleable()?;
        Ok(Simulator {
            model,
            flows: Cashflows::new(model, discount),
            cfg,
        })
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(id);
        rng
    }

    /// Market path `S_0..S_{n-1}` for replication `i`.
    fn path(&self, i: u64, path: &mut Vec<MarketState>) {
        let (id, mirror) = if self.cfg.antithetic { (i / 2, i % 2 == 1) } else { (i, false) };
        let mut rng = self.stream(id << 2);
        self.model.market.fill_path(&mut rng, self.flows.n - 1, mirror, path);
    }

    /// Value `R(0)` of one loan along `path` and the event that ended it.
    fn loan<R: Rng>(&self, path: &[MarketState], rng: &mut R) -> (f64, Event) {
        let hz = &self.model.hazards;
        let f = &self.flows;
        let mut value = 0.0;
        for h in 1..=f.n {
            let state = path[h - 1];
            let lambda = hz.default_intensity(state, h);
            let mu = hz.prepay_intensity(state, h);
            let u: f64 = rng.random();
            if u < lambda {
                let z = self
                    .model
                    .recovery
                    .sample_with(state, h, rng)
                    .expect("recovery laws checked sampleable");
                return (value + f.exposure[h - 1] * z, Event::Default { state, month: h });
            }
            if u < lambda + mu {
                return (value + f.prepayment[h - 1], Event::Prepay { month: h });
            }
            value += f.instalment[h - 1];
        }
        (value, Event::Survive)
    }

    fn chunks(&self) -> Vec<(u64, u64)> {
        let total = self.cfg.replications;
        (0..total.div_ceil(CHUNK))
            .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(total)))
            .collect()
    }

    fn single_value(&self, i: u64, path: &mut Vec<MarketState>) -> f64 {
        self.path(i, path);
        let mut rng = self.stream((i << 2) | 1);
        self.loan(path, &mut rng).0
    }

    fn pair_values(&self, i: u64, path: &mut Vec<MarketState>) -> (f64, f64) {
        self.path(i, path);
        let mut first = self.stream((i << 2) | 1);
        let mut second = self.stream((i << 2) | 2);
        (self.loan(path, &mut first).0, self.loan(path, &mut second).0)
    }

    fn pilot_shift(&self, pair: bool) -> f64 {
        let mut path = Vec::new();
        let count = self.cfg.replications.min(PILOT);
        let total: f64 = (0..count)
            .map(|i| {
                if pair {
                    self.pair_values(i, &mut path).0
                } else {
                    self.single_value(i, &mut path)
                }
            })
            .sum();
        total / count as f64
    }
}

/// Power sums of shifted values `a = R_1 - c`, `b = R_2 - c`; `pa` holds the
/// antithetic pair averages of `a`.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: f64,
    a: f64,
    aa: f64,
    aaa: f64,
    aaaa: f64,
    b: f64,
    bb: f64,
    ab: f64,
    aab: f64,
    abb: f64,
    aabb: f64,
    pairs: f64,
    pa: f64,
    paa: f64,
}

impl Sums {
    fn push(&mut self, a: f64, b: f64) {
        let (a2, b2) = (a * a, b * b);
        self.n += 1.0;
        self.a += a;
        self.aa += a2;
        self.aaa += a2 * a;
        self.aaaa += a2 * a2;
        self.b += b;
        self.bb += b2;
        self.ab += a * b;
        self.aab += a2 * b;
        self.abb += a * b2;
        self.aabb += a2 * b2;
    }

    fn push_pair_average(&mut self, avg: f64) {
        self.pairs += 1.0;
        self.pa += avg;
        self.paa += avg * avg;
    }

    fn merge(self, o: Sums) -> Sums {
        Sums {
            n: self.n + o.n,
            a: self.a + o.a,
            aa: self.aa + o.aa,
            aaa: self.aaa + o.aaa,
            aaaa: self.aaaa + o.aaaa,
            b: self.b + o.b,
            bb: self.bb + o.bb,
            ab: self.ab + o.ab,
            aab: self.aab + o.aab,
            abb: self.abb + o.abb,
            aabb: self.aabb + o.aabb,
            pairs: self.pairs + o.pairs,
            pa: self.pa + o.pa,
            paa: self.paa + o.paa,
        }
    }

    fn first_loan(&self, shift: f64, principal: f64, antithetic: bool) -> SimStats {
        let n = self.n;
        let ma = self.a / n;
        let var = (self.aa / n - ma * ma).max(0.0);
        let sample_var = if n > 1.0 { var * n / (n - 1.0) } else { 0.0 };
        let sd = sample_var.sqrt();
        let m4 = self.aaaa / n - 4.0 * ma * self.aaa / n + 6.0 * ma * ma * self.aa / n - 3.0 * ma.powi(4);
        let se_sd = if var > 0.0 {
            ((m4 - var * var).max(0.0) / n).sqrt() / (2.0 * var.sqrt())
        } else {
            0.0
        };
        let se_mean = if antithetic && self.pairs > 1.0 {
            let k = self.pairs;
            let mp = self.pa / k;
            ((self.paa / k - mp * mp).max(0.0) / (k - 1.0)).sqrt()
        } else {
            (sample_var / n).sqrt()
        };
        SimStats {
            replications: n as u64,
            mean: shift + ma - principal,
            sd,
            se_mean,
            se_sd,
        }
    }

    /// Sample covariance and its standard error from the spread of the
    /// centred products.
    fn covariance(&self) -> (f64, f64) {
        let n = self.n;
        let (alpha, beta) = (self.a / n, self.b / n);
        let cov = self.ab / n - alpha * beta;
        let centred_sq = self.aabb / n - 2.0 * beta * self.aab / n + beta * beta * self.aa / n
            - 2.0 * alpha * self.abb / n
            + 4.0 * alpha * beta * self.ab / n
            - 2.0 * alpha * beta * beta * self.a / n
            + alpha * alpha * self.bb / n
            - 2.0 * alpha * alpha * beta * self.b / n
            + alpha * alpha * beta * beta;
        let se = ((centred_sq - cov * cov).max(0.0) / n).sqrt();
        let unbiased = if n > 1.0 { cov * n / (n - 1.0) } else { 0.0 };
        (unbiased, se)
    }
}

fn pairwise_reduce(mut parts: Vec<Sums>) -> Sums {
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0].merge(c[1]) } else { c[0] })
            .collect();
    }
    parts.pop().unwrap_or_default()
}

fn accumulate<F>(sim: &Simulator<'_>, shift: f64, draw: F) -> Sums
where
    F: Fn(u64, &mut Vec<MarketState>) -> (f64, f64) + Sync,
{
    let parts: Vec<Sums> = sim
        .chunks()
        .into_par_iter()
        .map(|(start, end)| {
            let mut sums = Sums::default();
            let mut path = Vec::with_capacity(sim.flows.n);
            let mut pending = None;
            for i in start..end {
                let (r1, r2) = draw(i, &mut path);
                let (a, b) = (r1 - shift, r2 - shift);
                sums.push(a, b);
                if sim.cfg.antithetic {
                    match pending.take() {
                        None => pending = Some(a),
                        Some(prev) => sums.push_pair_average(0.5 * (prev + a)),
                    }
                }
            }
            sums
        })
        .collect();
    pairwise_reduce(parts)
}

/// Sample mean and sd of `V_s(0)` for the model's initial state.
pub fn simulate_single(model: &RiskModel, discount: &DiscountSpec, cfg: &SimConfig) -> Result<SimStats> {
    let sim = Simulator::new(model, discount, *cfg)?;
    let shift = sim.pilot_shift(false);
    let sums = accumulate(&sim, shift, |i, path| (sim.single_value(i, path), 0.0));
    Ok(sums.first_loan(shift, model.loan.principal(), cfg.antithetic))
}

/// Two loans per replication on one shared market path.
pub fn simulate_pair(model: &RiskModel, discount: &DiscountSpec, cfg: &SimConfig) -> Result<PairStats> {
    let sim = Simulator::new(model, discount, *cfg)?;
    let shift = sim.pilot_shift(true);
    let sums = accumulate(&sim, shift, |i, path| sim.pair_values(i, path));
    let (covariance, se_covariance) = sums.covariance();
    Ok(PairStats {
        loan: sums.first_loan(shift, model.loan.principal(), cfg.antithetic),
        covariance,
        se_covariance,
    })
}

/// Observed frequency of every partition event, in
/// [`crate::forward::StateEvents::events`] order.
pub fn simulate_events(model: &RiskModel, discount: &DiscountSpec, cfg: &SimConfig) -> Result<Vec<(Event, u64)>> {
    let sim = Simulator::new(model, discount, *cfg)?;
    let n = model.term();
    let slot = move |e: Event| match e {
        Event::Survive => 0,
        Event::Default { state: MarketState::Bad, month } => month,
        Event::Default { state: MarketState::Good, month } => n + month,
        Event::Prepay { month } => 2 * n + month,
    };
    let counts = sim
        .chunks()
        .into_par_iter()
        .map(|(start, end)| {
            let mut counts = vec![0u64; 3 * n];
            let mut path = Vec::with_capacity(n);
            for i in start..end {
                sim.path(i, &mut path);
                let mut rng = sim.stream((i << 2) | 1);
                counts[slot(sim.loan(&path, &mut rng).1)] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; 3 * n],
            |mut acc, c| {
                acc.iter_mut().zip(c).for_each(|(x, y)| *x += y);
                acc
            },
        );
    let mut events = vec![Event::Survive];
    events.extend((1..=n).map(|month| Event::Default { state: MarketState::Bad, month }));
    events.extend((1..=n).map(|month| Event::Default { state: MarketState::Good, month }));
    events.extend((1..n).map(|month| Event::Prepay { month }));
    Ok(events.into_iter().map(|e| (e, counts[slot(e)])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{HazardModel, RecoveryLaw, RecoveryModel};
    use crate::market::MarketModel;
    use crate::schedule::{certain_npv, LoanSpec};
    use MarketState::{Bad, Good};

    fn model(hazards: HazardModel, recovery: RecoveryLaw) -> RiskModel {
        let n = hazards.term();
        RiskModel::new(
            LoanSpec::level(1000.0, 1100.0 / n as f64, n).unwrap(),
            MarketModel::homogeneous(Bad, 0.9, 0.95, n).unwrap(),
            hazards,
            RecoveryModel::constant(n, recovery, recovery).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn riskless_pays_certain_npv() {
        let m = model(HazardModel::constant(12, 0.0, 0.0, 0.0, 0.0).unwrap(), RecoveryLaw::Fixed(0.5));
        let disc = DiscountSpec::from_annual(0.03).unwrap();
        let s = simulate_single(&m, &disc, &SimConfig::new(5000, 1)).unwrap();
        assert!((s.mean - certain_npv(&m.loan, &disc)).abs() < 1e-9);
        assert_eq!(s.sd, 0.0);
        assert_eq!(z_score(s.mean, s.se_mean, certain_npv(&m.loan, &disc)), 0.0);
    }

    #[test]
    fn immediate_total_loss() {
        let mut lambda = vec![0.0; 12];
        lambda[0] = 1.0;
        let hz = HazardModel::new(lambda.clone(), lambda, vec![0.0; 11], vec![0.0; 11]).unwrap();
        let m = model(hz, RecoveryLaw::Fixed(0.0));
        let s = simulate_single(&m, &DiscountSpec::from_annual(0.03).unwrap(), &SimConfig::new(3000, 9)).unwrap();
        assert_eq!(s.mean, -1000.0);
        assert_eq!(s.sd, 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = model(
            HazardModel::constant(24, 0.02, 0.01, 0.03, 0.02).unwrap(),
            RecoveryLaw::beta(2.0, 3.0).unwrap(),
        );
        let disc = DiscountSpec::from_annual(0.05).unwrap();
        let cfg = SimConfig::new(10_000, 77);
        let a = simulate_pair(&m, &disc, &cfg).unwrap();
        let b = simulate_pair(&m, &disc, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_pair(&m, &disc, &SimConfig::new(10_000, 78)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn moments_only_recovery_cannot_be_sampled() {
        let m = model(
            HazardModel::constant(6, 0.02, 0.01, 0.03, 0.02).unwrap(),
            RecoveryLaw::moments_only(0.3, 0.15).unwrap(),
        );
        let err = simulate_single(&m, &DiscountSpec::from_annual(0.05).unwrap(), &SimConfig::new(10, 1));
        assert_eq!(err, Err(Error::NoDistribution { state: 'B', month: 1 }));
    }

    #[test]
    fn config_validation() {
        let m = model(HazardModel::constant(6, 0.0, 0.0, 0.0, 0.0).unwrap(), RecoveryLaw::Fixed(0.0));
        let d = DiscountSpec::from_annual(0.0).unwrap();
        assert!(simulate_single(&m, &d, &SimConfig::new(0, 1)).is_err());
        let odd = SimConfig {
            antithetic: true,
            ..SimConfig::new(11, 1)
        };
        assert!(simulate_single(&m, &d, &odd).is_err());
    }

    #[test]
    fn antithetic_runs() {
        let m = model(
            HazardModel::constant(24, 0.02, 0.01, 0.03, 0.02).unwrap(),
            RecoveryLaw::beta(2.0, 3.0).unwrap(),
        )
        .with_initial_state(Good);
        let cfg = SimConfig {
            antithetic: true,
            ..SimConfig::new(20_000, 5)
        };
        let s = simulate_single(&m, &DiscountSpec::from_annual(0.05).unwrap(), &cfg).unwrap();
        assert!(s.se_mean > 0.0 && s.sd > 0.0);
    }

    #[test]
    fn event_counts_sum() {
        let m = model(
            HazardModel::constant(8, 0.05, 0.02, 0.04, 0.06).unwrap(),
            RecoveryLaw::beta(1.0, 1.0).unwrap(),
        );
        let counts = simulate_events(&m, &DiscountSpec::from_annual(0.05).unwrap(), &SimConfig::new(4000, 3)).unwrap();
        assert_eq!(counts.len(), 24);
        assert_eq!(counts.iter().map(|c| c.1).sum::<u64>(), 4000);
    }

    #[test]
    fn z_scores() {
        assert_eq!(z_score(1.0, 0.5, 0.0), 2.0);
        assert_eq!(z_score(1.0, 0.0, 0.0), f64::INFINITY);
    }
}
