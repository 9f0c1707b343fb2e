//! Tail bounds for variables admitting a bounded size-bias coupling, plus the
//! McDiarmid and certifiable-function bounds used for comparison.
//!
//! Every evaluator works with the log of the bound and clamps to `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean, coupling constant and deviation for one bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub mu: f64,
    pub c: f64,
    pub t: f64,
}

impl BoundParams {
    pub fn new(mu: f64, c: f64, t: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("mean must be positive and finite, got {mu}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("coupling constant must be positive and finite, got {c}")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("deviation must be nonnegative and finite, got {t}")));
        }
        Ok(Self { mu, c, t })
    }
}

fn from_log(log_bound: f64) -> f64 {
    if log_bound.is_nan() {
        return 1.0;
    }
    log_bound.min(0.0).exp()
}

/// `exp(-t^2 / (2 c mu))`, bounding `P(Y - mu <= -t)`.
pub fn left_tail_gauss(p: &BoundParams) -> f64 {
    from_log(-p.t * p.t / (2.0 * p.c * p.mu))
}

/// `exp(-t^2 / (2 c mu + c t))`, bounding `P(Y - mu >= t)`.
pub fn right_tail_basic(p: &BoundParams) -> f64 {
    from_log(-p.t * p.t / (2.0 * p.c * p.mu + p.c * p.t))
}

/// `h(x) = (1 + x) ln(1 + x) - x` for `x >= -1`.
pub fn poisson_h(x: f64) -> f64 {
    if x == -1.0 {
        return 1.0;
    }
    (1.0 + x) * x.ln_1p() - x
}

/// `(mu / (mu + t))^((t + mu) / c) e^(t / c)`, bounding `P(Y - mu >= t)`.
pub fn sub_poisson_tail(p: &BoundParams) -> f64 {
    let log = (p.t + p.mu) / p.c * (p.mu / (p.mu + p.t)).ln() + p.t / p.c;
    from_log(log)
}

/// The same right-tail bound in the form `exp(-(mu / c) h(t / mu))`.
pub fn sub_poisson_tail_h(p: &BoundParams) -> f64 {
    from_log(-(p.mu / p.c) * poisson_h(p.t / p.mu))
}

/// Sub-Poisson bound on `P(Y - mu <= -t)`: the ratio form at `-t`.
///
/// Zero for `t > mu`, where the event is impossible for nonnegative `Y`.
pub fn sub_poisson_left(p: &BoundParams) -> f64 {
    if p.t > p.mu {
        return 0.0;
    }
    from_log(-(p.mu / p.c) * poisson_h(-p.t / p.mu))
}

/// The negative-association bound: the sub-Poisson right tail with `c = 1`.
pub fn negative_association_tail(mu: f64, t: f64) -> Result<f64> {
    Ok(sub_poisson_tail(&BoundParams::new(mu, 1.0, t)?))
}

/// `exp(-t^2 / (2 c mu + 2 c t / 3))`, bounding `P(Y - mu >= t)`.
pub fn bernstein_tail(p: &BoundParams) -> f64 {
    from_log(-p.t * p.t / (2.0 * p.c * p.mu + 2.0 * p.c * p.t / 3.0))
}

/// `exp(-2 t^2 / sum c_i^2)` for a function of independent coordinates with
/// bounded differences `c_i`.
pub fn mcdiarmid_tail(c: &[f64], t: f64) -> Result<f64> {
    if c.iter().any(|&ci| !(ci >= 0.0 && ci.is_finite())) {
        return Err(Error::invalid("bounded differences must be nonnegative and finite"));
    }
    mcdiarmid_from_sum_sq(c.iter().map(|ci| ci * ci).sum(), t)
}

/// McDiarmid bound from a precomputed `sum c_i^2`.
pub fn mcdiarmid_from_sum_sq(sum_sq: f64, t: f64) -> Result<f64> {
    if !(sum_sq > 0.0) {
        return Err(Error::invalid("bounded differences are all zero"));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("deviation must be nonnegative, got {t}")));
    }
    Ok(from_log(-2.0 * t * t / sum_sq))
}

/// Left and right bounds for a `c`-Lipschitz `(a, b)`-certifiable function.
pub fn certifiable_tails(c: f64, a: f64, b: f64, mu: f64, t: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) || !(a >= 0.0) || !(b >= 0.0) || !(mu >= 0.0) || !(t >= 0.0) {
        return Err(Error::invalid(format!(
            "certifiable bound needs c > 0 and a, b, mu, t >= 0; got c={c}, a={a}, b={b}, mu={mu}, t={t}"
        )));
    }
    let base = a * mu + b;
    if t == 0.0 {
        return Ok((1.0, 1.0));
    }
    let c2 = 2.0 * c * c;
    let left = from_log(-t * t / (c2 * (base + t / (3.0 * c))));
    let right = from_log(-t * t / (c2 * (base + a * t)));
    Ok((left, right))
}

/// Which tail a bound applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// The bound families that can be tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    GaussLeft,
    BasicRight,
    SubPoisson,
    Bernstein,
    NegativeAssociation,
    Mcdiarmid,
    Certifiable,
}

impl BoundFamily {
    /// The size-bias families, in report order.
    pub const SIZE_BIAS: [BoundFamily; 4] = [
        BoundFamily::GaussLeft,
        BoundFamily::BasicRight,
        BoundFamily::SubPoisson,
        BoundFamily::Bernstein,
    ];

    pub const ALL: [BoundFamily; 7] = [
        BoundFamily::GaussLeft,
        BoundFamily::BasicRight,
        BoundFamily::SubPoisson,
        BoundFamily::Bernstein,
        BoundFamily::NegativeAssociation,
        BoundFamily::Mcdiarmid,
        BoundFamily::Certifiable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundFamily::GaussLeft => "gauss_left",
            BoundFamily::BasicRight => "basic_right",
            BoundFamily::SubPoisson => "sub_poisson",
            BoundFamily::Bernstein => "bernstein",
            BoundFamily::NegativeAssociation => "negative_association",
            BoundFamily::Mcdiarmid => "mcdiarmid",
            BoundFamily::Certifiable => "certifiable",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown bound family '{name}'")))
    }

    /// `name` for one-sided families, `name_side` otherwise.
    pub fn label(self, side: Side) -> String {
        if self.sides().len() == 1 {
            self.name().to_string()
        } else {
            format!("{}_{}", self.name(), side.name())
        }
    }

    /// Inverse of [`BoundFamily::label`]; a bare two-sided name means the right tail.
    pub fn parse_label(label: &str) -> Result<(Self, Side)> {
        if let Ok(f) = Self::parse(label) {
            let side = if f.sides().len() == 1 { f.sides()[0] } else { Side::Right };
            return Ok((f, side));
        }
        for (suffix, side) in [("_left", Side::Left), ("_right", Side::Right)] {
            if let Some(f) = label.strip_suffix(suffix).and_then(|n| Self::parse(n).ok()) {
                if f.sides().len() > 1 {
                    return Ok((f, side));
                }
            }
        }
        Err(Error::invalid(format!("unknown bound '{label}'")))
    }

    pub fn sides(self) -> &'static [Side] {
        match self {
            BoundFamily::GaussLeft => &[Side::Left],
            BoundFamily::BasicRight | BoundFamily::Bernstein | BoundFamily::NegativeAssociation => &[Side::Right],
            BoundFamily::SubPoisson | BoundFamily::Mcdiarmid | BoundFamily::Certifiable => &[Side::Left, Side::Right],
        }
    }
}

/// Constants of a certifiable-function bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

/// Everything needed to evaluate each bound family for one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub mu: f64,
    pub c: f64,
    /// `sum c_i^2` of a bounded-differences representation, when one is known.
    pub mcdiarmid_sum_sq: Option<f64>,
    pub certificate: Option<Certificate>,
    /// The statistic is a sum of negatively associated indicators.
    #[serde(default)]
    pub negatively_associated: bool,
}

impl BoundInputs {
    pub fn new(mu: f64, c: f64) -> Self {
        Self {
            mu,
            c,
            mcdiarmid_sum_sq: None,
            certificate: None,
            negatively_associated: false,
        }
    }

    /// Evaluates one family on one side, or `None` when it is unavailable.
    pub fn evaluate(&self, family: BoundFamily, side: Side, t: f64) -> Result<Option<f64>> {
        if !family.sides().contains(&side) {
            return Ok(None);
        }
        match family {
            BoundFamily::Mcdiarmid => self
                .mcdiarmid_sum_sq
                .map(|s| mcdiarmid_from_sum_sq(s, t))
                .transpose(),
            BoundFamily::Certifiable => Ok(match self.certificate {
                Some(cert) => {
                    let (l, r) = certifiable_tails(cert.c, cert.a, cert.b, self.mu, t)?;
                    Some(if side == Side::Left { l } else { r })
                }
                None => None,
            }),
            BoundFamily::NegativeAssociation if self.negatively_associated => {
                negative_association_tail(self.mu, t).map(Some)
            }
            BoundFamily::NegativeAssociation => Ok(None),
            _ => {
                let p = BoundParams::new(self.mu, self.c, t)?;
                Ok(Some(match (family, side) {
                    (BoundFamily::GaussLeft, _) => left_tail_gauss(&p),
                    (BoundFamily::BasicRight, _) => right_tail_basic(&p),
                    (BoundFamily::SubPoisson, Side::Left) => sub_poisson_left(&p),
                    (BoundFamily::SubPoisson, Side::Right) => sub_poisson_tail(&p),
                    (BoundFamily::Bernstein, _) => bernstein_tail(&p),
                    _ => unreachable!("handled above"),
                }))
            }
        }
    }
}

/// One tabulated bound value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub t: f64,
    pub family: BoundFamily,
    pub side: Side,
    pub value: f64,
}

/// Bounds of several families over a grid of deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub inputs: BoundInputs,
    pub t_grid: Vec<f64>,
    pub rows: Vec<BoundRow>,
}

impl TailBoundReport {
    /// Rows are ordered by `t`, then family, then side; unavailable families are skipped.
    pub fn build(inputs: BoundInputs, t_grid: &[f64], families: &[BoundFamily]) -> Result<Self> {
        let mut rows = Vec::new();
        for &t in t_grid {
            for &family in families {
                for &side in family.sides() {
                    if let Some(value) = inputs.evaluate(family, side, t)? {
                        rows.push(BoundRow { t, family, side, value });
                    }
                }
            }
        }
        Ok(Self {
            inputs,
            t_grid: t_grid.to_vec(),
            rows,
        })
    }
}

/// Subintervals scanned by [`crossover`] before bisection.
const CROSSOVER_SCAN: usize = 1000;

/// Points in `[lo, hi]` where `f - g` changes sign, each located by bisection
/// to within `tol`. Points where the difference is exactly zero are not
/// themselves counted as sign changes, so identical curves give no crossings.
pub fn crossover<F, G>(f: F, g: G, lo: f64, hi: f64, tol: f64) -> Vec<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let diff = |t: f64| f(t) - g(t);
    let sign = |v: f64| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 };
    let mut out = Vec::new();
    if !(hi > lo) || !(tol > 0.0) {
        return out;
    }
    let step = (hi - lo) / CROSSOVER_SCAN as f64;
    let mut last: Option<(f64, i32)> = None;
    for k in 0..=CROSSOVER_SCAN {
        let t = if k == CROSSOVER_SCAN { hi } else { lo + k as f64 * step };
        let s = sign(diff(t));
        if s == 0 {
            continue;
        }
        if let Some((t0, s0)) = last {
            if s0 != s {
                let (mut a, mut b) = (t0, t);
                while b - a > tol {
                    let mid = 0.5 * (a + b);
                    if sign(diff(mid)) == s0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        last = Some((t, s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bp(mu: f64, c: f64, t: f64) -> BoundParams {
        BoundParams::new(mu, c, t).unwrap()
    }

    #[test]
    fn gauss_left_examples() {
        assert_abs_diff_eq!(left_tail_gauss(&bp(4.0, 2.0, 4.0)), (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(left_tail_gauss(&bp(4.0, 2.0, 0.0)), 1.0);
        assert_abs_diff_eq!(left_tail_gauss(&bp(1.0, 1.0, 2.0)), (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn basic_right_examples() {
        assert_abs_diff_eq!(right_tail_basic(&bp(1.0, 1.0, 1.0)), (-1.0f64 / 3.0).exp(), epsilon = 1e-15);
        assert_eq!(right_tail_basic(&bp(1.0, 1.0, 0.0)), 1.0);
        assert_abs_diff_eq!(right_tail_basic(&bp(4.0, 2.0, 4.0)), (-16.0f64 / 24.0).exp(), epsilon = 1e-15);
    }

    #[test]
    fn sub_poisson_examples() {
        assert_eq!(sub_poisson_tail(&bp(3.0, 2.0, 0.0)), 1.0);
        // (1/2)^2 e
        assert_abs_diff_eq!(sub_poisson_tail(&bp(1.0, 1.0, 1.0)), std::f64::consts::E / 4.0, epsilon = 1e-15);
        let h = 1.5 * 1.5f64.ln() - 0.5;
        let p = bp(10.0, 1.0, 5.0);
        assert_abs_diff_eq!(sub_poisson_tail(&p), (-10.0 * h).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(sub_poisson_tail_h(&p), sub_poisson_tail(&p), epsilon = 1e-14);
    }

    #[test]
    fn sub_poisson_left_limits() {
        assert_eq!(sub_poisson_left(&bp(2.0, 1.0, 2.5)), 0.0);
        assert_abs_diff_eq!(sub_poisson_left(&bp(2.0, 1.0, 2.0)), (-2.0f64).exp(), epsilon = 1e-15);
        // ratio form with t replaced by -t
        let (mu, c, t) = (5.0f64, 2.0f64, 3.0f64);
        let ratio = ((mu / (mu - t)).powf((mu - t) / c)) * (-t / c).exp();
        assert_abs_diff_eq!(sub_poisson_left(&bp(mu, c, t)), ratio, epsilon = 1e-14);
    }

    #[test]
    fn bernstein_examples() {
        assert_eq!(bernstein_tail(&bp(1.0, 1.0, 0.0)), 1.0);
        assert_abs_diff_eq!(bernstein_tail(&bp(1.0, 1.0, 1.0)), (-3.0f64 / 8.0).exp(), epsilon = 1e-15);
    }

    #[test]
    fn mcdiarmid_examples() {
        let n = 50;
        let t = 3.0;
        assert_abs_diff_eq!(
            mcdiarmid_tail(&vec![1.0; n], t).unwrap(),
            (-2.0 * t * t / n as f64).exp(),
            epsilon = 1e-15
        );
        let m = 10usize;
        let edges = m * (m - 1) / 2;
        assert_abs_diff_eq!(
            mcdiarmid_tail(&vec![2.0; edges], t).unwrap(),
            (-t * t / (m * (m - 1)) as f64).exp(),
            epsilon = 1e-15
        );
        assert_eq!(mcdiarmid_tail(&[1.0, 2.0], 0.0).unwrap(), 1.0);
        assert!(mcdiarmid_tail(&[0.0, 0.0], 1.0).is_err());
        assert!(mcdiarmid_tail(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn certifiable_examples() {
        let (l, r) = certifiable_tails(1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(l, (-1.0f64 / (2.0 * (1.0 + 1.0 / 3.0))).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(r, (-0.25f64).exp(), epsilon = 1e-15);
        let (_, r) = certifiable_tails(2.0, 0.0, 3.0, 5.0, 2.0).unwrap();
        assert_abs_diff_eq!(r, (-4.0f64 / (2.0 * 4.0 * 3.0)).exp(), epsilon = 1e-15);
        assert_eq!(certifiable_tails(1.0, 0.0, 0.0, 0.0, 0.0).unwrap(), (1.0, 1.0));
        assert!(certifiable_tails(0.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn binomial_crossover_at_45() {
        let (n, p) = (100.0, 0.1);
        let mu = n * p;
        let bern = |t: f64| bernstein_tail(&bp(mu, 1.0, t));
        let mcd = |t: f64| mcdiarmid_from_sum_sq(n, t).unwrap();
        let cross = crossover(bern, mcd, 0.0, 100.0, 1e-9);
        assert_eq!(cross.len(), 1);
        assert!((cross[0] - 3.0 * n * (0.25 - p)).abs() < 1e-6, "{cross:?}");
    }

    #[test]
    fn identical_curves_never_cross() {
        let f = |t: f64| (-t).exp();
        assert!(crossover(f, f, 0.0, 10.0, 1e-9).is_empty());
    }

    #[test]
    fn params_validation() {
        assert!(BoundParams::new(0.0, 1.0, 1.0).is_err());
        assert!(BoundParams::new(1.0, 0.0, 1.0).is_err());
        assert!(BoundParams::new(1.0, 1.0, -1.0).is_err());
        assert!(BoundParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn report_skips_unavailable_families() {
        let report = TailBoundReport::build(BoundInputs::new(3.0, 2.0), &[0.0, 1.0], &BoundFamily::ALL).unwrap();
        // gauss 1 + basic 1 + sub-Poisson 2 + bernstein 1 per t
        assert_eq!(report.rows.len(), 10);
        let mut na = BoundInputs::new(3.0, 2.0);
        na.negatively_associated = true;
        let report_na = TailBoundReport::build(na, &[0.0, 1.0], &BoundFamily::ALL).unwrap();
        assert_eq!(report_na.rows.len(), 12);
        assert!(report.rows.iter().all(|r| (0.0..=1.0).contains(&r.value)));
        assert!(report.rows.iter().filter(|r| r.t == 0.0).all(|r| r.value == 1.0));
        assert_eq!(BoundFamily::parse("bernstein").unwrap(), BoundFamily::Bernstein);
        assert!(BoundFamily::parse("chernoff").is_err());
        for f in BoundFamily::ALL {
            for &side in f.sides() {
                assert_eq!(BoundFamily::parse_label(&f.label(side)).unwrap(), (f, side));
            }
        }
        assert_eq!(BoundFamily::parse_label("bernstein").unwrap(), (BoundFamily::Bernstein, Side::Right));
        assert!(BoundFamily::parse_label("bernstein_left").is_err());
    }
}
