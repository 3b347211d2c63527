//! Contractual amortization plan: internal rate, exposure at default and
//! the risk-free net present value.
//!
//! Months are 1-based throughout: instalment `r_h` falls due at the end of
//! month `h`, `h = 1..=n`.

use crate::error::{Error, Result};

/// Relative tolerance on the monthly rate returned by [`solve_internal_rate`].
const RATE_TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 500;

/// Contractual cash-flow of a single loan.
#[derive(Debug, Clone, PartialEq)]
pub struct LoanSpec {
    principal: f64,
    instalments: Vec<f64>,
    rate: f64,
    prepayment_charge: Vec<f64>,
    exposure: Vec<f64>,
}

impl LoanSpec {
    /// Builds a loan from its principal, instalment sequence and the
    /// prepayment charge factors `γ(1)..γ(n-1)`. The contractual monthly rate
    /// is solved from the cash-flow.
    pub fn new(principal: f64, instalments: Vec<f64>, prepayment_charge: Vec<f64>) -> Result<Self> {
        let n = instalments.len();
        if n == 0 {
            return Err(Error::field("loan.instalments", "term must be at least one month"));
        }
        if let Some((h, r)) = instalments
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_finite() || **r < 0.0)
        {
            return Err(Error::field(
                format!("loan.instalments[{h}]"),
                format!("instalment {r} must be finite and nonnegative"),
            ));
        }
        if !instalments.iter().any(|r| *r > 0.0) {
            return Err(Error::field("loan.instalments", "at least one instalment must be positive"));
        }
        if prepayment_charge.len() != n - 1 {
            return Err(Error::field(
                "loan.prepayment_charge",
                format!("expected {} factors, got {}", n - 1, prepayment_charge.len()),
            ));
        }
        if let Some((h, g)) = prepayment_charge
            .iter()
            .enumerate()
            .find(|(_, g)| !g.is_finite() || **g < 1.0)
        {
            return Err(Error::field(
                format!("loan.prepayment_charge[{h}]"),
                format!("charge factor {g} must be >= 1"),
            ));
        }
        let rate = solve_internal_rate(principal, &instalments)?;
        let exposure = exposure_roll_up(&instalments, rate);
        Ok(LoanSpec {
            principal,
            instalments,
            rate,
            prepayment_charge,
            exposure,
        })
    }

    /// Level-instalment loan with no prepayment penalty.
    pub fn level(principal: f64, instalment: f64, term: usize) -> Result<Self> {
        let n = term.max(1);
        Self::new(principal, vec![instalment; term], vec![1.0; n - 1])
    }

    pub fn principal(&self) -> f64 {
        self.principal
    }

    pub fn term(&self) -> usize {
        self.instalments.len()
    }

    pub fn instalments(&self) -> &[f64] {
        &self.instalments
    }

    /// Instalment due at month `h` (1-based).
    pub fn instalment(&self, h: usize) -> f64 {
        self.instalments[h - 1]
    }

    /// Contractual monthly rate `x`.
    pub fn contractual_rate(&self) -> f64 {
        self.rate
    }

    /// `(1 + x)^12 - 1`.
    pub fn annual_percentage_rate(&self) -> f64 {
        (1.0 + self.rate).powi(12) - 1.0
    }

    /// Prepayment charge factor `γ(h)` for `1 <= h <= n-1`.
    pub fn prepayment_charge(&self, h: usize) -> Result<f64> {
        if h == 0 || h >= self.term() {
            return Err(Error::OutOfRange {
                what: "prepayment month",
                index: h,
                max: self.term().saturating_sub(1),
            });
        }
        Ok(self.prepayment_charge[h - 1])
    }

    /// `γ(h)`, with the unused maturity slot reported as 1.
    pub(crate) fn charge_or_one(&self, h: usize) -> f64 {
        self.prepayment_charge.get(h - 1).copied().unwrap_or(1.0)
    }

    /// Exposure at default `φ(h) = Σ_{j=h..n} r_j (1+x)^{-(j-h)}`, evaluated
    /// by the direct sum.
    pub fn exposure_at_default(&self, h: usize) -> Result<f64> {
        if h == 0 || h > self.term() {
            return Err(Error::OutOfRange {
                what: "exposure month",
                index: h,
                max: self.term(),
            });
        }
        let discount = 1.0 / (1.0 + self.rate);
        Ok(self.instalments[h - 1..]
            .iter()
            .enumerate()
            .map(|(k, r)| r * discount.powi(k as i32))
            .sum())
    }

    /// `φ(1)..φ(n)` from the roll-up `φ(h) = r_h + φ(h+1)/(1+x)`.
    pub fn exposure_schedule(&self) -> &[f64] {
        &self.exposure
    }

    /// `φ(h)` from the cached roll-up, 1-based.
    pub(crate) fn exposure(&self, h: usize) -> f64 {
        self.exposure[h - 1]
    }
}

fn exposure_roll_up(instalments: &[f64], rate: f64) -> Vec<f64> {
    let discount = 1.0 / (1.0 + rate);
    let mut out = vec![0.0; instalments.len()];
    let mut next = 0.0;
    for (slot, r) in out.iter_mut().zip(instalments).rev() {
        next = r + next * discount;
        *slot = next;
    }
    out
}

/// Present value of the instalments at monthly rate `rate`.
pub fn present_value(instalments: &[f64], rate: f64) -> f64 {
    let discount = 1.0 / (1.0 + rate);
    let mut factor = 1.0;
    instalments
        .iter()
        .map(|r| {
            factor *= discount;
            r * factor
        })
        .sum()
}

/// Solves `w = Σ r_h (1+x)^{-h}` for the monthly rate `x` on `[0, 1]`.
///
/// Illinois regula falsi, falling back to bisection whenever the secant
/// step fails to halve the bracket.
pub fn solve_internal_rate(principal: f64, instalments: &[f64]) -> Result<f64> {
    if !principal.is_finite() || principal <= 0.0 {
        return Err(Error::field("loan.principal", format!("principal {principal} must be positive")));
    }
    if instalments.iter().any(|r| !r.is_finite()) {
        return Err(Error::field("loan.instalments", "instalments must be finite"));
    }
    let f = |x: f64| present_value(instalments, x) - principal;

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    if f_lo.abs() <= 1e-12 * principal {
        return Ok(0.0);
    }
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::NoPositiveIrr);
    }
    // f is decreasing: f_lo > 0 > f_hi.
    let mut side = 0i8;
    for _ in 0..MAX_ITERATIONS {
        let width = hi - lo;
        let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            f_hi = fx;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
        if hi - lo > 0.5 * width {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm > 0.0 {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
                f_hi = fm;
            }
            side = 0;
        }
        if hi - lo <= RATE_TOLERANCE * hi.max(1e-300) {
            break;
        }
    }
    Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi })
}

/// Annual rate converted to a monthly discounting convention by
/// `(1 + y)^12 = 1 + y_annual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountSpec {
    annual_rate: f64,
    monthly_rate: f64,
    factor: f64,
}

impl DiscountSpec {
    pub fn from_annual(annual_rate: f64) -> Result<Self> {
        if !annual_rate.is_finite() || annual_rate < 0.0 {
            return Err(Error::field(
                "sweep.annual_rates",
                format!("annual discount rate {annual_rate} must be finite and nonnegative"),
            ));
        }
        let monthly_rate = (1.0 + annual_rate).powf(1.0 / 12.0) - 1.0;
        Ok(DiscountSpec {
            annual_rate,
            monthly_rate,
            factor: 1.0 / (1.0 + monthly_rate),
        })
    }

    pub fn from_monthly(monthly_rate: f64) -> Result<Self> {
        if !monthly_rate.is_finite() || monthly_rate < 0.0 {
            return Err(Error::Validation(format!(
                "monthly discount rate {monthly_rate} must be finite and nonnegative"
            )));
        }
        Ok(DiscountSpec {
            annual_rate: (1.0 + monthly_rate).powi(12) - 1.0,
            monthly_rate,
            factor: 1.0 / (1.0 + monthly_rate),
        })
    }

    pub fn annual_rate(&self) -> f64 {
        self.annual_rate
    }

    pub fn monthly_rate(&self) -> f64 {
        self.monthly_rate
    }

    /// One-month discount factor `v = (1+y)^{-1}`.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// `(1+y)^{-h}`.
    pub fn factor_at(&self, h: usize) -> f64 {
        self.factor.powi(h as i32)
    }
}

/// NPV the lender earns when every instalment is paid on schedule:
/// `Σ r_j [(1+y)^{-j} - (1+x)^{-j}]`.
pub fn certain_npv(loan: &LoanSpec, discount: &DiscountSpec) -> f64 {
    let (v, u) = (discount.factor(), 1.0 / (1.0 + loan.contractual_rate()));
    let (mut fv, mut fu) = (1.0, 1.0);
    loan.instalments()
        .iter()
        .map(|r| {
            fv *= v;
            fu *= u;
            r * (fv - fu)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_loan() -> LoanSpec {
        LoanSpec::level(8500.0, 190.0, 60).unwrap()
    }

    #[test]
    fn irr_of_application_loan() {
        let loan = paper_loan();
        assert!((loan.contractual_rate() - 0.010179).abs() < 1e-6);
        assert!((loan.annual_percentage_rate() - 0.129224).abs() < 1e-5);
        let repriced = present_value(loan.instalments(), loan.contractual_rate());
        assert!((repriced - 8500.0).abs() < 1e-9 * 8500.0);
    }

    #[test]
    fn irr_zero_and_one_period() {
        assert_eq!(solve_internal_rate(300.0, &[100.0, 100.0, 100.0]).unwrap(), 0.0);
        let x = solve_internal_rate(100.0, &[110.0]).unwrap();
        assert!((x - 0.10).abs() < 1e-12);
    }

    #[test]
    fn irr_errors() {
        assert_eq!(solve_internal_rate(1000.0, &[100.0; 5]), Err(Error::NoPositiveIrr));
        assert!(matches!(solve_internal_rate(f64::NAN, &[1.0]), Err(Error::Field { .. })));
        assert!(matches!(solve_internal_rate(10.0, &[f64::INFINITY]), Err(Error::Field { .. })));
        // rate above 100% per month is outside the bracket
        assert_eq!(solve_internal_rate(1.0, &[5.0]), Err(Error::NoPositiveIrr));
    }

    #[test]
    fn spec_validation() {
        assert!(LoanSpec::new(100.0, vec![], vec![]).is_err());
        assert!(LoanSpec::new(100.0, vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(LoanSpec::new(100.0, vec![60.0, -1.0], vec![1.0]).is_err());
        assert!(LoanSpec::new(100.0, vec![60.0, 60.0], vec![0.9]).is_err());
        assert!(LoanSpec::new(100.0, vec![60.0, 60.0], vec![]).is_err());
        assert!(LoanSpec::new(100.0, vec![60.0, 60.0], vec![1.05]).is_ok());
    }

    #[test]
    fn exposure_endpoints() {
        let loan = paper_loan();
        let x = loan.contractual_rate();
        let phi1 = loan.exposure_at_default(1).unwrap();
        assert!((phi1 - 8500.0 * (1.0 + x)).abs() < 1e-9 * phi1);
        assert_eq!(loan.exposure_at_default(60).unwrap(), 190.0);
        assert!(loan.exposure_at_default(0).is_err());
        assert!(loan.exposure_at_default(61).is_err());
    }

    #[test]
    fn exposure_closed_form_matches_roll_up() {
        let loan = paper_loan();
        let x = loan.contractual_rate();
        let direct = loan.exposure_at_default(30).unwrap();
        let rolled = loan.exposure_schedule()[29];
        assert!((direct - rolled).abs() <= 1e-9 * direct);
        for h in 1..60 {
            let phi = loan.exposure_schedule();
            let rhs = loan.instalment(h) + phi[h] / (1.0 + x);
            assert!((phi[h - 1] - rhs).abs() <= 1e-12 * phi[h - 1]);
            assert!(phi[h - 1] > phi[h]);
        }
    }

    #[test]
    fn certain_npv_values() {
        let loan = paper_loan();
        let at4 = certain_npv(&loan, &DiscountSpec::from_annual(0.04).unwrap());
        assert_eq!(at4.round(), 1835.0);
        let at0 = certain_npv(&loan, &DiscountSpec::from_annual(0.0).unwrap());
        assert!((at0 - 2900.0).abs() < 1e-9);
        let at_irr = certain_npv(&loan, &DiscountSpec::from_monthly(loan.contractual_rate()).unwrap());
        assert!(at_irr.abs() < 1e-9);
    }

    #[test]
    fn discount_conversion() {
        let d = DiscountSpec::from_annual(0.05).unwrap();
        assert!(((1.0 + d.monthly_rate()).powi(12) - 1.0 - 0.05).abs() < 1e-15);
        assert!(d.factor() > 0.0 && d.factor() <= 1.0);
        assert_eq!(DiscountSpec::from_annual(0.0).unwrap().factor(), 1.0);
        assert!(DiscountSpec::from_annual(-0.01).is_err());
    }

    #[test]
    fn prepayment_charge_range() {
        let loan = LoanSpec::new(100.0, vec![40.0, 40.0, 40.0], vec![1.02, 1.01]).unwrap();
        assert_eq!(loan.prepayment_charge(2).unwrap(), 1.01);
        assert!(loan.prepayment_charge(3).is_err());
        assert!(loan.prepayment_charge(0).is_err());
    }
}
