use std::fmt;
use std::sync::Arc;

use rug::ops::Pow;
use rug::{Complex, Float};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::numcore::{BoundedValue, PrecisionContext};
use crate::riemann::XiSqrtModel;

/// Ratio `a_{n+1}/a_n` at index `n`, evaluated at the requested precision.
pub type RatioFn = Arc<dyn Fn(usize, u32) -> Float + Send + Sync>;

/// How the Taylor coefficients of a stream are produced.
#[derive(Clone)]
pub enum CoefficientRule {
    /// `sinh(√x)/√x`: `1/((2n+2)(2n+3))`.
    SinhSqrt,
    /// `x^{-ν/2} I_ν(√x)` (normalised): `1/(4(n+1)(ν+n+1))`.
    BesselI { nu: Float },
    /// Jackson q-Bessel analogue: `q^{2n+1+ν}/(4(1-q^{n+1})(1-q^{ν+n+1}))`.
    QBessel2I { nu: Float, q: Float },
    /// Ramanujan's `A_q(-x)`: `q^{2n+1}/(1-q^{n+1})`.
    RamanujanAq { q: Float },
    /// Arbitrary ratio function; must be nonincreasing in `n` for the
    /// geometric tail bound used by [`CoefficientStream::jet_at`].
    Ratio { label: String, ratio: RatioFn },
    /// A polynomial with explicit coefficients `a_0..a_d`.
    Finite(Vec<Float>),
    /// `ξ(1/2 + √x)`, Taylor data computed by quadrature.
    XiSqrt(Box<XiSqrtModel>),
}

impl fmt::Debug for CoefficientRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl CoefficientRule {
    pub fn label(&self) -> String {
        match self {
            Self::SinhSqrt => "sinh_sqrt".into(),
            Self::BesselI { nu } => format!("bessel_i(nu={})", nu.to_f64()),
            Self::QBessel2I { nu, q } => {
                format!("q_bessel2_i(nu={}, q={})", nu.to_f64(), q.to_f64())
            }
            Self::RamanujanAq { q } => format!("ramanujan_aq(q={})", q.to_f64()),
            Self::Ratio { label, .. } => label.clone(),
            Self::Finite(c) => format!("polynomial(degree {})", c.len().saturating_sub(1)),
            Self::XiSqrt(_) => "riemann_xi_sqrt".into(),
        }
    }
}

/// An entire function `f(z) = Σ a_n z^n` given by `a_0` and the ratios
/// `a_{n+1}/a_n`.
#[derive(Clone, Debug)]
pub struct CoefficientStream {
    a0: Float,
    rule: CoefficientRule,
    positivity_flag: bool,
}

/// Output of [`order_estimate`].
#[derive(Clone, Debug, Serialize)]
pub struct OrderEstimate {
    /// `max n log n / (-log|a_n|)` over `n ∈ [n_max/2, n_max]`.
    pub estimate: f64,
    /// `(n, n log n / (-log|a_n|))` for every sampled `n`.
    pub partials: Vec<(usize, f64)>,
}

impl CoefficientStream {
    pub fn new(a0: Float, rule: CoefficientRule) -> Result<Self> {
        if a0.is_zero() || !a0.is_finite() {
            return Err(Error::InvalidParameter("a_0 must be finite and nonzero".into()));
        }
        let positivity_flag = match &rule {
            CoefficientRule::Finite(c) => c.iter().all(|v| v.is_sign_positive() == a0.is_sign_positive()),
            CoefficientRule::Ratio { .. } => false,
            _ => true,
        };
        Ok(Self {
            a0,
            rule,
            positivity_flag,
        })
    }

    /// A ratio-generated stream; `positive` asserts `a_0 a_n > 0`.
    pub fn from_ratio<F>(label: &str, a0: Float, positive: bool, ratio: F) -> Result<Self>
    where
        F: Fn(usize, u32) -> Float + Send + Sync + 'static,
    {
        let mut s = Self::new(
            a0,
            CoefficientRule::Ratio {
                label: label.to_string(),
                ratio: Arc::new(ratio),
            },
        )?;
        s.positivity_flag = positive;
        Ok(s)
    }

    pub fn polynomial(coeffs: Vec<Float>) -> Result<Self> {
        let a0 = coeffs
            .first()
            .cloned()
            .ok_or_else(|| Error::InvalidParameter("empty polynomial".into()))?;
        Self::new(a0, CoefficientRule::Finite(coeffs))
    }

    pub fn a0(&self) -> &Float {
        &self.a0
    }

    pub fn rule(&self) -> &CoefficientRule {
        &self.rule
    }

    pub fn positivity_flag(&self) -> bool {
        self.positivity_flag
    }

    pub fn label(&self) -> String {
        self.rule.label()
    }

    /// Multiplies every coefficient by `c` (a different normalisation of the same zeros).
    pub fn scaled(&self, c: &Float) -> Result<Self> {
        let mut s = self.clone();
        s.a0 = Float::with_val(self.a0.prec().max(c.prec()), &self.a0 * c);
        if let CoefficientRule::Finite(v) = &mut s.rule {
            for a in v.iter_mut() {
                *a *= c;
            }
        }
        if matches!(s.rule, CoefficientRule::XiSqrt(_)) {
            return Err(Error::InvalidParameter("the xi model has a fixed normalisation".into()));
        }
        if c.is_sign_negative() {
            s.positivity_flag = false;
        }
        Ok(s)
    }

    /// `a_{n+1}/a_n`; `None` when the rule has no closed-form ratio.
    pub fn ratio(&self, n: usize, prec: u32) -> Option<Float> {
        let nf = n as u32;
        let one = Float::with_val(prec, 1);
        Some(match &self.rule {
            CoefficientRule::SinhSqrt => one / ((2 * nf + 2) as u64 * (2 * nf + 3) as u64),
            CoefficientRule::BesselI { nu } => {
                let d = Float::with_val(prec, nu + (nf + 1)) * (4 * (nf + 1));
                one / d
            }
            CoefficientRule::QBessel2I { nu, q } => {
                let q = Float::with_val(prec, q);
                let e1 = Float::with_val(prec, nu + (2 * nf + 1));
                let num = Float::with_val(prec, (&q).pow(&e1));
                let d1 = Float::with_val(prec, 1) - Float::with_val(prec, (&q).pow(nf + 1));
                let e2 = Float::with_val(prec, nu + (nf + 1));
                let d2 = Float::with_val(prec, 1) - Float::with_val(prec, (&q).pow(&e2));
                num / (d1 * d2 * 4u32)
            }
            CoefficientRule::RamanujanAq { q } => {
                let q = Float::with_val(prec, q);
                let num = Float::with_val(prec, (&q).pow(2 * nf + 1));
                let d = Float::with_val(prec, 1) - Float::with_val(prec, (&q).pow(nf + 1));
                num / d
            }
            CoefficientRule::Ratio { ratio, .. } => ratio(n, prec),
            CoefficientRule::Finite(_) | CoefficientRule::XiSqrt(_) => return None,
        })
    }

    /// `a_0..a_{n_max}`.
    pub fn coefficients(&self, n_max: usize, ctx: &PrecisionContext) -> Result<Vec<Float>> {
        let prec = ctx.prec();
        match &self.rule {
            CoefficientRule::Finite(c) => Ok((0..=n_max)
                .map(|n| c.get(n).map_or_else(|| Float::new(prec), |v| Float::with_val(prec, v)))
                .collect()),
            CoefficientRule::XiSqrt(model) => {
                let a = model.coefficients(n_max, ctx)?;
                let scale = Float::with_val(prec, &self.a0 / &a[0].value);
                Ok(a.into_iter().map(|b| b.value * &scale).collect())
            }
            _ => {
                let mut out = Vec::with_capacity(n_max + 1);
                let mut a = Float::with_val(prec, &self.a0);
                for n in 0..=n_max {
                    out.push(a.clone());
                    if n < n_max {
                        a *= self.ratio(n, prec).expect("ratio rule");
                    }
                }
                Ok(out)
            }
        }
    }

    /// Taylor jet of `f` at the real point `x ≥ 0`, truncated so the omitted
    /// remainder of every coefficient is below `2^-(p+g)` relative.
    pub fn jet_at(&self, x: &Float, order: usize, ctx: &PrecisionContext) -> Result<Jet> {
        let (c, _) = self.taylor_sums(x, order, ctx)?;
        Ok(Jet::from_real(&Float::with_val(ctx.prec(), x), c))
    }

    /// Taylor jet at `x` together with a bound on the truncation remainder of
    /// every coefficient.
    pub fn jet_with_bounds(
        &self,
        x: &Float,
        order: usize,
        ctx: &PrecisionContext,
    ) -> Result<(Jet, Vec<Float>)> {
        let (c, t) = self.taylor_sums(x, order, ctx)?;
        Ok((Jet::from_real(&Float::with_val(ctx.prec(), x), c), t))
    }

    /// `f(x)` with the series remainder as error bound.
    pub fn eval(&self, x: &Float, ctx: &PrecisionContext) -> Result<BoundedValue> {
        let (c, t) = self.taylor_sums(x, 0, ctx)?;
        let mut bound = t[0].clone();
        bound += Float::with_val(ctx.prec(), c[0].abs_ref()) * ctx.eps() * 4u32;
        Ok(BoundedValue::new(c[0].clone(), bound))
    }

    /// Evaluates `Σ a_n z^n` at a complex point (used by the even-transform
    /// cross-check). Requires a ratio rule or a polynomial.
    pub fn eval_complex(&self, z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
        let prec = ctx.prec();
        let r = Float::with_val(prec, z.abs_ref());
        let cap = self.terms_needed(&r, ctx)?;
        let coeffs = self.coefficients(cap, ctx)?;
        let mut acc = Complex::new(prec);
        let mut pw = Complex::with_val(prec, 1);
        for a in coeffs {
            acc += Complex::with_val(prec, &pw * &a);
            pw *= z;
        }
        Ok(acc)
    }

    /// Number of terms after which `Σ |a_n| r^n` has converged to working precision.
    fn terms_needed(&self, r: &Float, ctx: &PrecisionContext) -> Result<usize> {
        Ok(match &self.rule {
            CoefficientRule::Finite(c) => c.len(),
            CoefficientRule::XiSqrt(_) => {
                return Err(Error::InvalidParameter(
                    "complex evaluation is not available for the xi model".into(),
                ))
            }
            _ => {
                let prec = ctx.prec();
                let tol = ctx.eps() >> ctx.guard_bits as i32;
                let mut a = Float::with_val(prec, self.a0.abs_ref());
                let mut pw = Float::with_val(prec, 1);
                let mut sum = Float::new(prec);
                let mut n = 0usize;
                loop {
                    let term = Float::with_val(prec, &a * &pw);
                    sum += &term;
                    let rho = Float::with_val(prec, self.ratio(n, prec).expect("ratio").abs() * r);
                    let next = Float::with_val(prec, &term * &rho);
                    if rho < 0.5 && next < Float::with_val(prec, &tol * &sum) {
                        break n + 2;
                    }
                    a *= self.ratio(n, prec).expect("ratio").abs();
                    pw *= r;
                    n += 1;
                    if n > 1_000_000 {
                        return Err(Error::NonConvergence { cap: n, tail: next.to_f64() });
                    }
                }
            }
        })
    }

    /// Returns `(c_j, tail_j)` for `j ≤ order` where `c_j` is the Taylor
    /// coefficient at `x` and `tail_j` bounds the omitted remainder.
    fn taylor_sums(
        &self,
        x: &Float,
        order: usize,
        ctx: &PrecisionContext,
    ) -> Result<(Vec<Float>, Vec<Float>)> {
        let prec = ctx.prec();
        if x.is_sign_negative() && !x.is_zero() {
            return Err(Error::InvalidParameter(
                "coefficient streams are expanded at real x >= 0".into(),
            ));
        }
        if let CoefficientRule::XiSqrt(model) = &self.rule {
            let jet = model.jet_values(x, order, ctx)?;
            let scale = Float::with_val(prec, &self.a0 / model.normalisation(ctx)?);
            let c = jet.iter().map(|v| Float::with_val(prec, &v.value * &scale)).collect();
            let t = jet
                .iter()
                .map(|v| Float::with_val(prec, &v.error_bound * &scale).abs())
                .collect();
            return Ok((c, t));
        }
        if x.is_zero() {
            let c = self.coefficients(order, ctx)?;
            return Ok((c, vec![Float::new(prec); order + 1]));
        }
        if let CoefficientRule::Finite(coeffs) = &self.rule {
            let mut sums = vec![Float::new(prec); order + 1];
            let mut xn = Float::with_val(prec, 1);
            for (n, a) in coeffs.iter().enumerate() {
                let w = Float::with_val(prec, a * &xn);
                let mut binom = Float::with_val(prec, 1);
                for (j, s) in sums.iter_mut().enumerate().take(order.min(n) + 1) {
                    if j > 0 {
                        binom *= (n + 1 - j) as u64;
                        binom /= j as u64;
                    }
                    *s += Float::with_val(prec, &binom * &w);
                }
                xn *= x;
            }
            let xpow = |j: usize| Float::with_val(prec, x.pow(j as u32));
            let c = sums.into_iter().enumerate().map(|(j, s)| s / xpow(j)).collect();
            return Ok((c, vec![Float::new(prec); order + 1]));
        }

        // ratio rules: c_j = x^{-j} Σ_n C(n,j) w_n with w_n = a_n x^n
        let tol = ctx.eps() >> ctx.guard_bits as i32;
        let mut sums = vec![Float::new(prec); order + 1];
        let mut abs_sums = vec![Float::new(prec); order + 1];
        let mut binom: Vec<Float> = vec![Float::new(prec); order + 1];
        let mut w = Float::with_val(prec, &self.a0);
        let mut tails = vec![Float::new(prec); order + 1];
        let cap = 2_000_000usize;
        let mut n = 0usize;
        loop {
            // C(n, j) for the current n
            for j in (0..=order.min(n)).rev() {
                binom[j] = if j == n {
                    Float::with_val(prec, 1)
                } else {
                    let mut b = binom[j].clone();
                    b *= n as u64;
                    b /= (n - j) as u64;
                    b
                };
            }
            for j in 0..=order.min(n) {
                let t = Float::with_val(prec, &binom[j] * &w);
                abs_sums[j] += Float::with_val(prec, t.abs_ref());
                sums[j] += t;
            }
            let r = self.ratio(n, prec).expect("ratio rule");
            let w_next = Float::with_val(prec, &w * &r) * x;
            if n >= order {
                // remainder after index n, geometric with ratio ρ_{n+1,j}
                let r1 = self.ratio(n + 1, prec).expect("ratio rule").abs();
                let mut done = true;
                for j in 0..=order {
                    let grow = Float::with_val(prec, (n + 2) as u64) / ((n + 2 - j) as u64);
                    let rho = Float::with_val(prec, &r1 * x) * grow;
                    let first = Float::with_val(prec, w_next.abs_ref())
                        * Float::with_val(prec, &binom[j] * (n + 1) as u64)
                        / ((n + 1 - j) as u64);
                    if rho >= 1 {
                        done = false;
                        break;
                    }
                    let one_minus = Float::with_val(prec, 1) - rho;
                    tails[j] = first / one_minus;
                    if tails[j] > Float::with_val(prec, &tol * &abs_sums[j]) {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
            w = w_next;
            n += 1;
            if n > cap {
                return Err(Error::NonConvergence {
                    cap,
                    tail: tails[0].to_f64(),
                });
            }
        }
        let mut c = Vec::with_capacity(order + 1);
        let mut t = Vec::with_capacity(order + 1);
        let mut xj = Float::with_val(prec, 1);
        for j in 0..=order {
            c.push(Float::with_val(prec, &sums[j] / &xj));
            t.push(Float::with_val(prec, &tails[j] / &xj));
            xj *= x;
        }
        Ok((c, t))
    }
}

/// Limsup proxy for the order `ρ(f) = limsup n log n / (-log|a_n|)`.
pub fn order_estimate(
    stream: &CoefficientStream,
    n_max: usize,
    ctx: &PrecisionContext,
) -> Result<OrderEstimate> {
    if n_max < 16 {
        return Err(Error::InvalidParameter(format!("n_max must be >= 16, got {n_max}")));
    }
    let prec = ctx.prec();
    let coeffs = stream.coefficients(n_max, ctx)?;
    let mut partials = Vec::new();
    for (n, a) in coeffs.iter().enumerate().skip(n_max / 2) {
        if n < 2 {
            continue;
        }
        let est = if a.is_zero() {
            0.0
        } else {
            let neg_log = -Float::with_val(prec, a.abs_ref()).ln();
            if neg_log <= 0 {
                return Err(Error::NotDecaying { index: n });
            }
            let nf = n as f64;
            nf * nf.ln() / neg_log.to_f64()
        };
        partials.push((n, est));
    }
    let estimate = partials.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(OrderEstimate { estimate, partials })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128, 32, false).unwrap()
    }

    fn close(a: &Float, b: Float) -> bool {
        Float::with_val(128, a - &b).abs() <= b.abs() * 1e-35
    }

    #[test]
    fn sinh_coefficients_are_inverse_odd_factorials() {
        let ctx = ctx();
        let s = CoefficientStream::new(ctx.float(1), CoefficientRule::SinhSqrt).unwrap();
        let a = s.coefficients(3, &ctx).unwrap();
        assert!(close(&a[1], ctx.float(1) / 6u32));
        assert!(close(&a[2], ctx.float(1) / 120u32));
        assert!(close(&a[3], ctx.float(1) / 5040u32));
    }

    #[test]
    fn ramanujan_coefficients_by_hand() {
        // q^{n²}/(q;q)_n at q = 1/2: a_1 = (1/2)/(1/2) = 1, a_2 = (1/16)/((1/2)(3/4)) = 1/6
        let ctx = ctx();
        let s = CoefficientStream::new(ctx.float(1), CoefficientRule::RamanujanAq { q: ctx.float(0.5) }).unwrap();
        let a = s.coefficients(2, &ctx).unwrap();
        assert_eq!(a[1], 1);
        let d = Float::with_val(128, &a[2] - ctx.float(1) / 6u32).abs();
        assert!(d < 1e-35);
    }

    #[test]
    fn bessel_half_matches_sinh() {
        let ctx = ctx();
        let s = CoefficientStream::new(ctx.float(1), CoefficientRule::SinhSqrt).unwrap();
        let b = CoefficientStream::new(ctx.float(1), CoefficientRule::BesselI { nu: ctx.float(0.5) }).unwrap();
        for n in 0..10 {
            assert_eq!(s.ratio(n, 128), b.ratio(n, 128));
        }
    }

    #[test]
    fn jet_of_sinh_sqrt_at_one() {
        // f(x) = sinh(√x)/√x at x = 1 equals sinh(1)
        let ctx = ctx();
        let s = CoefficientStream::new(ctx.float(1), CoefficientRule::SinhSqrt).unwrap();
        let j = s.jet_at(&ctx.float(1), 3, &ctx).unwrap();
        let sinh1 = ctx.float(1).sinh();
        let d = Float::with_val(128, j.coeff(0).real() - &sinh1).abs();
        assert!(d < 1e-35);
        // f'(1) = (cosh 1 - sinh 1)/2
        let fp = (ctx.float(1).cosh() - &sinh1) / 2u32;
        let d = Float::with_val(128, j.coeff(1).real() - &fp).abs();
        assert!(d < 1e-35);
    }

    #[test]
    fn polynomial_jet() {
        let ctx = ctx();
        let p = CoefficientStream::polynomial(vec![ctx.float(1), ctx.float(1)]).unwrap();
        let j = p.jet_at(&ctx.float(2), 3, &ctx).unwrap();
        assert_eq!(*j.coeff(0).real(), 3);
        assert_eq!(*j.coeff(1).real(), 1);
        assert!(j.coeff(2).real().is_zero());
    }

    #[test]
    fn order_of_gaussian_coefficients() {
        let ctx = ctx();
        let s = CoefficientStream::from_ratio("2^-n^2", ctx.float(1), true, |n, p| {
            Float::with_val(p, Float::i_exp(1, -(2 * n as i32 + 1)))
        })
        .unwrap();
        let e = order_estimate(&s, 200, &ctx).unwrap();
        // max over n in [100, 200] of n ln n / (n² ln 2) sits at n = 100
        assert!((e.estimate - 0.066_438_561_897_747_25).abs() < 1e-12);
        assert!(e.partials.last().unwrap().1 <= 0.05);
    }

    #[test]
    fn order_of_sinh_preset() {
        let ctx = ctx();
        let s = CoefficientStream::new(ctx.float(1), CoefficientRule::SinhSqrt).unwrap();
        let e = order_estimate(&s, 400, &ctx).unwrap();
        // frozen from mpmath: max_{200≤n≤400} n ln n / lnΓ(2n+2)
        assert!((e.estimate - 0.528_116_767_388_210_7).abs() < 1e-9);
        let first = e.partials.first().unwrap().1;
        let last = e.partials.last().unwrap().1;
        assert!(last < first);
    }

    #[test]
    fn order_of_polynomial_is_zero() {
        let ctx = ctx();
        let p = CoefficientStream::polynomial((0..=5).map(|_| ctx.float(1)).collect()).unwrap();
        assert_eq!(order_estimate(&p, 16, &ctx).unwrap().estimate, 0.0);
    }

    #[test]
    fn growing_coefficients_are_rejected() {
        let ctx = ctx();
        let s = CoefficientStream::from_ratio("2^n", ctx.float(1), true, |_, p| Float::with_val(p, 2)).unwrap();
        assert!(matches!(order_estimate(&s, 32, &ctx), Err(Error::NotDecaying { .. })));
        assert!(order_estimate(&s, 8, &ctx).is_err());
    }
}
