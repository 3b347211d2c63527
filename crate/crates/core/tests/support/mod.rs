//! Test-only oracles: brute-force enumeration over market paths and exit
//! outcomes, plus a deterministic generator of feasible random models.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnpv_core::{
    DiscountSpec, HazardModel, LoanSpec, MarketModel, MarketState, RecoveryLaw, RecoveryModel, RiskModel,
};

pub const SHIPPED_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/consumer_loan_60m.cfg");

pub const STATES: [MarketState; 2] = [MarketState::Bad, MarketState::Good];

/// Market paths `(S_0, …, S_{n-1})` started in `initial`, with probabilities.
pub fn market_paths(model: &RiskModel, initial: MarketState) -> Vec<(Vec<MarketState>, f64)> {
    let n = model.term();
    let mut paths = vec![(vec![initial], 1.0)];
    for h in 1..n {
        let mut next = Vec::with_capacity(paths.len() * 2);
        for (path, p) in paths {
            let from = *path.last().unwrap();
            let stay = model.market.persistence(from, h);
            for (to, q) in [(from, stay), (from.other(), 1.0 - stay)] {
                let mut extended = path.clone();
                extended.push(to);
                next.push((extended, p * q));
            }
        }
        paths = next;
    }
    paths
}

/// Exposure at default computed straight from its definition.
pub fn exposure(loan: &LoanSpec, h: usize) -> f64 {
    let x = loan.contractual_rate();
    (h..=loan.term()).map(|j| loan.instalment(j) / (1.0 + x).powi((j - h) as i32)).sum()
}

/// Outcome of one loan conditional on a market path: probability, fixed
/// part of the net value `V = R - w`, weight on the recovery rate and the recovery moments.
#[derive(Debug, Clone, Copy)]
pub struct Outcome {
    pub probability: f64,
    pub fixed: f64,
    pub weight: f64,
    pub ez: f64,
    pub ez2: f64,
}

pub fn outcomes(model: &RiskModel, discount: &DiscountSpec, path: &[MarketState]) -> Vec<Outcome> {
    let loan = &model.loan;
    let n = loan.term();
    let v = 1.0 / (1.0 + discount.monthly_rate());
    let mut out = Vec::new();
    let mut alive = 1.0;
    let mut annuity = -loan.principal();
    for h in 1..=n {
        let s = path[h - 1];
        let vh = v.powi(h as i32);
        let lambda = model.hazards.default_intensity(s, h);
        let mu = if h < n { model.hazards.prepay_intensity(s, h) } else { 0.0 };
        let (ez, ez2) = model.recovery.recovery_moments(s, h).unwrap();
        let phi = exposure(loan, h);
        out.push(Outcome { probability: alive * lambda, fixed: annuity, weight: vh * phi, ez, ez2 });
        if h < n {
            let gamma = loan.prepayment_charge(h).unwrap();
            out.push(Outcome { probability: alive * mu, fixed: annuity + vh * gamma * phi, weight: 0.0, ez, ez2 });
        }
        alive *= 1.0 - lambda - mu;
        annuity += loan.instalment(h) * vh;
    }
    out.push(Outcome { probability: alive, fixed: annuity, weight: 0.0, ez: 0.0, ez2: 0.0 });
    out
}

/// `E[V]`, `E[V²]` and `E[V_1 V_2]` for a single loan started in `initial`.
#[derive(Debug, Clone, Copy)]
pub struct Enumerated {
    pub mean: f64,
    pub second: f64,
    pub cross: f64,
}

impl Enumerated {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }

    pub fn covariance(&self) -> f64 {
        self.cross - self.mean * self.mean
    }
}

pub fn enumerate(model: &RiskModel, discount: &DiscountSpec, initial: MarketState) -> Enumerated {
    let mut acc = Enumerated { mean: 0.0, second: 0.0, cross: 0.0 };
    for (path, p) in market_paths(model, initial) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for o in outcomes(model, discount, &path) {
            m1 += o.probability * (o.fixed + o.weight * o.ez);
            m2 += o.probability * (o.fixed * o.fixed + 2.0 * o.fixed * o.weight * o.ez + o.weight * o.weight * o.ez2);
        }
        acc.mean += p * m1;
        acc.second += p * m2;
        acc.cross += p * m1 * m1;
    }
    acc
}

/// `(E[Ψ], Var[Ψ])` of an `m`-loan portfolio by joint enumeration of every
/// loan's outcome on every market path.
pub fn enumerate_portfolio(model: &RiskModel, discount: &DiscountSpec, initial: MarketState, m: usize) -> (f64, f64) {
    let (mut first, mut second) = (0.0, 0.0);
    for (path, p) in market_paths(model, initial) {
        let outs = outcomes(model, discount, &path);
        let k = outs.len();
        for code in 0..k.pow(m as u32) {
            let mut c = code;
            let mut prob = p;
            let mut mean = 0.0;
            let mut var = 0.0;
            for _ in 0..m {
                let o = outs[c % k];
                c /= k;
                prob *= o.probability;
                mean += o.fixed + o.weight * o.ez;
                var += o.weight * o.weight * (o.ez2 - o.ez * o.ez);
            }
            first += prob * mean;
            second += prob * (mean * mean + var);
        }
    }
    (first, second - first * first)
}

fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64, varying: bool) -> Vec<f64> {
    let c = rng.random_range(lo..hi);
    (0..len).map(|_| if varying { rng.random_range(lo..hi) } else { c }).collect()
}

fn recovery_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<RecoveryLaw> {
    (0..len)
        .map(|_| match rng.random_range(0..3) {
            0 => RecoveryLaw::beta(rng.random_range(0.3..5.0), rng.random_range(0.3..5.0)).unwrap(),
            1 => RecoveryLaw::fixed(rng.random_range(0.0..1.0)).unwrap(),
            _ => {
                let mean = rng.random_range(0.05..0.95);
                let bound = mean * (1.0 - mean);
                RecoveryLaw::moments_only(mean, mean * mean + rng.random_range(0.0..bound)).unwrap()
            }
        })
        .collect()
}

/// A feasible random model with term in `terms`; schedules are level or
/// month-varying at random.
pub fn random_model(seed: u64, terms: std::ops::RangeInclusive<usize>) -> RiskModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(terms);
    let principal = rng.random_range(500.0..20_000.0);
    let markup = rng.random_range(1.01..1.6);
    let shape: Vec<f64> = (0..n).map(|_| rng.random_range(0.7..1.3)).collect();
    let total: f64 = shape.iter().sum();
    let instalments = shape.iter().map(|x| principal * markup * x / total).collect();
    let charges = (1..n).map(|_| rng.random_range(1.0..1.05)).collect();
    let loan = LoanSpec::new(principal, instalments, charges).unwrap();
    let varying = rng.random_bool(0.5);
    let initial = if rng.random_bool(0.5) { MarketState::Bad } else { MarketState::Good };
    let market = MarketModel::new(
        initial,
        uniform_vec(&mut rng, n, 0.0, 1.0, varying),
        uniform_vec(&mut rng, n, 0.0, 1.0, varying),
    )
    .unwrap();
    let hazards = HazardModel::new(
        uniform_vec(&mut rng, n, 0.0, 0.2, varying),
        uniform_vec(&mut rng, n, 0.0, 0.2, varying),
        uniform_vec(&mut rng, n - 1, 0.0, 0.2, varying),
        uniform_vec(&mut rng, n - 1, 0.0, 0.2, varying),
    )
    .unwrap();
    let recovery = RecoveryModel::new(recovery_vec(&mut rng, n), recovery_vec(&mut rng, n)).unwrap();
    RiskModel::new(loan, market, hazards, recovery).unwrap()
}

pub fn random_discount(seed: u64) -> DiscountSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD15C);
    DiscountSpec::from_annual(rng.random_range(0.0..0.25)).unwrap()
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
