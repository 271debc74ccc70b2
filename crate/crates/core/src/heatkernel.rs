//! The heat kernel `Θ(t) = Σ e^{-λ_n t}` of a zero sequence, its derivatives,
//! `Θ_k(t) = (-t)^k Θ^{(k)}(t)`, decay-slope checks, and the Laplace identity
//! `∫_0^∞ e^{-xt} t^k Θ(t) dt = Σ k!/(x+λ_n)^{k+1}`.

use rug::ops::Pow;
use rug::{Complex, Float};
use serde::Serialize;

use crate::efun::ZeroSequence;
use crate::error::{Error, Result};
use crate::numcore::{factorial, integrate_0inf, BoundedComplex, BoundedValue, PrecisionContext, QuadratureSpec};

/// Heat kernel of a real-part-dominating zero sequence.
#[derive(Clone, Debug)]
pub struct ThetaKernel {
    zeros: ZeroSequence,
}

impl ThetaKernel {
    pub fn new(zeros: ZeroSequence) -> Result<Self> {
        if !zeros.conjugate_closed() {
            let idx = zeros.zeros().iter().position(|z| !z.imag().is_zero()).unwrap_or(0);
            return Err(Error::MissingConjugate(idx));
        }
        Ok(Self { zeros })
    }

    pub fn zeros(&self) -> &ZeroSequence {
        &self.zeros
    }

    /// `β₀` valid for stored and omitted zeros.
    pub fn beta0(&self) -> Float {
        self.zeros.beta0_total()
    }

    pub fn lambda_min_mod(&self, prec: u32) -> Float {
        self.zeros.min_modulus(prec)
    }

    /// Bound on `Σ_{n>N} |λ_n|^k e^{-Re(λ_n) t}` from the tail model:
    /// `|λ|^k e^{-β|λ|t} ≤ |λ|^{-s} sup_{y≥L} y^{k+s} e^{-βyt}` with
    /// `sup = ((k+s)/(eβt))^{k+s}` unless `L` lies beyond the maximiser.
    pub fn tail_bound(&self, t: &Float, k: usize, prec: u32) -> Option<Float> {
        let tail = self.zeros.tail();
        if tail.is_none() {
            return Some(Float::new(prec));
        }
        let l = tail.min_modulus(self.zeros.len(), prec)?;
        let beta = tail.beta0(prec);
        let bt = Float::with_val(prec, &beta * t);
        let mut best: Option<Float> = None;
        for s in [0.75, 1.0, 1.5, 2.0, 3.0] {
            let Some(ts) = self.zeros.tail_power_sum(s, prec) else { continue };
            let e = k as f64 + s;
            let y_star = Float::with_val(prec, e / &bt);
            let sup = if l >= y_star {
                let lp = Float::with_val(prec, (&l).pow(e));
                let decay = Float::with_val(prec, -Float::with_val(prec, &bt * &l)).exp();
                lp * decay
            } else {
                let base = Float::with_val(prec, &y_star / Float::with_val(prec, 1u32).exp());
                Float::with_val(prec, base.pow(e))
            };
            let v = sup * ts;
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
        best
    }

    /// `Θ^{(j)}(t)` for `j ≤ k_max` as complex values with error bounds.
    pub fn theta_derivs_complex(&self, t: &Float, k_max: usize, ctx: &PrecisionContext) -> Result<Vec<BoundedComplex>> {
        if t.is_sign_negative() || t.is_zero() {
            return Err(Error::NonPositiveTime(t.to_f64()));
        }
        let prec = ctx.prec();
        let t = Float::with_val(prec, t);
        let mut sums = vec![Complex::new(prec); k_max + 1];
        let mut abs = vec![Float::new(prec); k_max + 1];
        let mut sens = vec![Float::new(prec); k_max + 1];
        for z in self.zeros.zeros() {
            let lam = Complex::with_val(prec, z);
            let e = Complex::with_val(prec, -Complex::with_val(prec, &lam * &t)).exp();
            let lam_abs = Float::with_val(prec, lam.abs_ref());
            let tl = Float::with_val(prec, &t * &lam_abs);
            let mut term = e;
            let neg = Complex::with_val(prec, -&lam);
            for j in 0..=k_max {
                if j > 0 {
                    term *= &neg;
                }
                let a = Float::with_val(prec, term.abs_ref());
                sens[j] += Float::with_val(prec, &a * Float::with_val(prec, &tl + j as u64));
                abs[j] += a;
                sums[j] += &term;
            }
        }
        let rel = {
            let floor = Float::with_val(prec, Float::i_exp(1, 2 - self.zeros.zeros()[0].prec().0 as i32));
            let r = Float::with_val(prec, self.zeros.rel_uncertainty());
            if r > floor {
                r
            } else {
                floor
            }
        };
        let eps = ctx.eps();
        let n = self.zeros.len() as u64;
        let mut out = Vec::with_capacity(k_max + 1);
        for j in 0..=k_max {
            let mut bound = Float::with_val(prec, &abs[j] * &eps) * (n + j as u64 + 4);
            bound += Float::with_val(prec, &sens[j] * &rel);
            let tail = self.tail_bound(&t, j, prec).ok_or_else(|| {
                Error::InvalidParameter(format!("tail model {} cannot bound the kernel", self.zeros.tail().label()))
            })?;
            bound += tail;
            out.push(BoundedComplex::new(sums[j].clone(), bound));
        }
        Ok(out)
    }

    /// Real parts of `Θ^{(j)}(t)`, `j ≤ k_max`, verified at doubled precision
    /// when the context asks for it.
    pub fn theta_derivs(&self, t: &Float, k_max: usize, ctx: &PrecisionContext) -> Result<Vec<BoundedValue>> {
        let base: Vec<BoundedValue> = self.theta_derivs_complex(t, k_max, ctx)?.iter().map(BoundedComplex::real).collect();
        if !ctx.verify_by_recompute {
            return Ok(base);
        }
        let d = ctx.doubled();
        let reference = self.theta_derivs_complex(&Float::with_val(d.prec(), t), k_max, &d)?;
        Ok(base
            .into_iter()
            .zip(&reference)
            .map(|(b, r)| b.verified_against(&r.real()))
            .collect())
    }

    /// Smallest `t` on a doubling grid from `10^-8` at which the tail bound is
    /// below the accuracy target relative to the stored sum for all `j ≤ k_max`.
    pub fn t_min(&self, k_max: usize, ctx: &PrecisionContext) -> Result<f64> {
        if self.zeros.tail().is_none() {
            return Ok(0.0);
        }
        let plain = PrecisionContext::new(64.max(ctx.prec() / 2), 16, false)?;
        let target = ctx.target();
        let mut t = 1e-8;
        while t < 1e6 {
            let tf = plain.float(t);
            let vals = self.theta_derivs_complex(&tf, k_max, &plain)?;
            let ok = vals.iter().enumerate().all(|(j, v)| {
                let stored = Float::with_val(64, v.value.abs_ref());
                match self.tail_bound(&tf, j, 64) {
                    Some(b) => b < Float::with_val(64, &stored * &target),
                    None => false,
                }
            });
            if ok {
                return Ok(t);
            }
            t *= 2.0;
        }
        Err(Error::InvalidParameter("tail bound never falls below target".into()))
    }
}

/// `Θ^{(k)}(t)`; the imaginary part is certified within the bound by conjugate closure.
pub fn theta_deriv(kernel: &ThetaKernel, t: &Float, k: usize, ctx: &PrecisionContext) -> Result<BoundedValue> {
    Ok(kernel.theta_derivs(t, k, ctx)?.pop().expect("k + 1 values"))
}

/// `Θ_k(t) = (-t)^k Θ^{(k)}(t)`.
pub fn theta_k(kernel: &ThetaKernel, t: &Float, k: usize, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let d = theta_deriv(kernel, t, k, ctx)?;
    let prec = ctx.prec();
    let tk = Float::with_val(prec, Float::with_val(prec, t).pow(k as u32));
    let v = d.scale(&tk);
    Ok(if k % 2 == 1 { v.neg() } else { v })
}

/// Outcome of [`decay_check`].
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Least-squares slope of `log|Θ^{(k)}|` against `log t` on `[10^-3, 10^-1]`.
    pub small_t_slope: f64,
    pub small_t_threshold: f64,
    pub small_t_pass: bool,
    pub small_t_points: usize,
    /// Least-squares slope of the decreasing envelope of `log|Θ^{(k)}|` against `t` on `[5, 30]`.
    pub large_t_slope: f64,
    pub large_t_threshold: f64,
    pub large_t_pass: bool,
    pub large_t_points: usize,
}

pub const SMALL_T_SLACK: f64 = 0.25;
pub const LARGE_T_SLACK: f64 = 0.05;

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn log_abs(v: &BoundedValue) -> f64 {
    let a = Float::with_val(v.prec(), v.value.abs_ref());
    if a.is_zero() {
        f64::NEG_INFINITY
    } else {
        a.ln().to_f64()
    }
}

/// Fits the small-`t` power law and the large-`t` exponential decay of
/// `Θ^{(k)}`. Passes when the small-`t` slope is at least `-α - k - 0.25` and
/// the large-`t` slope at most `-β + 0.05`.
pub fn decay_check(kernel: &ThetaKernel, k: usize, alpha: f64, beta: f64, ctx: &PrecisionContext) -> Result<DecayReport> {
    let plain = PrecisionContext {
        verify_by_recompute: false,
        ..ctx.clone()
    };
    let t_min = kernel.t_min(k, &plain)?;
    let mut sx = Vec::new();
    let mut sy = Vec::new();
    for i in 0..=40 {
        let t = 10f64.powf(-3.0 + 2.0 * i as f64 / 40.0);
        if t < t_min {
            continue;
        }
        let v = theta_deriv(kernel, &plain.float(t), k, &plain)?;
        let y = log_abs(&v);
        if y.is_finite() {
            sx.push(t.ln());
            sy.push(y);
        }
    }
    if sx.len() < 5 {
        return Err(Error::InsufficientGrid(format!(
            "only {} small-t points above t_min = {t_min:e}",
            sx.len()
        )));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for i in 0..=50 {
        let t = 5.0 + 25.0 * i as f64 / 50.0;
        let v = theta_deriv(kernel, &plain.float(t), k, &plain)?;
        lx.push(t);
        ly.push(log_abs(&v));
    }
    // decreasing envelope: running maximum from the right
    for i in (0..ly.len() - 1).rev() {
        if ly[i + 1] > ly[i] {
            ly[i] = ly[i + 1];
        }
    }
    let keep: Vec<usize> = (0..ly.len()).filter(|&i| ly[i].is_finite()).collect();
    if keep.len() < 5 {
        return Err(Error::InsufficientGrid("large-t values vanish".into()));
    }
    let lx: Vec<f64> = keep.iter().map(|&i| lx[i]).collect();
    let ly: Vec<f64> = keep.iter().map(|&i| ly[i]).collect();
    let small = lsq_slope(&sx, &sy);
    let large = lsq_slope(&lx, &ly);
    let small_thr = -alpha - k as f64 - SMALL_T_SLACK;
    let large_thr = -beta + LARGE_T_SLACK;
    Ok(DecayReport {
        k,
        alpha,
        beta,
        small_t_slope: small,
        small_t_threshold: small_thr,
        small_t_pass: small >= small_thr,
        small_t_points: sx.len(),
        large_t_slope: large,
        large_t_threshold: large_thr,
        large_t_pass: large <= large_thr,
        large_t_points: lx.len(),
    })
}

/// Both sides of the Laplace identity and the integrability bound.
#[derive(Clone, Debug, Serialize)]
pub struct LaplaceCheck {
    pub k: usize,
    pub x: f64,
    /// `∫_0^∞ e^{-xt} t^k Θ_N(t) dt` over the stored zeros.
    pub quadrature: BoundedValue,
    /// `Σ_{n≤N} k!/(x+λ_n)^{k+1}`.
    pub zero_sum: BoundedValue,
    pub residual: BoundedValue,
    pub identity_holds: bool,
    /// Upper estimate of `∫_0^∞ e^{-xt} t^k |Θ_N(t)| dt`.
    pub abs_integral: BoundedValue,
    /// `k!/β₀^{k+1} Σ |λ_n|^{-(k+1)}`.
    pub integrability_bound: BoundedValue,
    pub integrability_holds: bool,
}

/// Evaluates `∫ e^{-xt} t^k Θ(t) dt` by quadrature and by the zero sum.
///
/// Both sides use the stored zeros only; the omitted remainder is the same
/// on each side and cancels from the residual.
pub fn laplace_residual(kernel: &ThetaKernel, x: &Float, k: usize, ctx: &PrecisionContext) -> Result<LaplaceCheck> {
    if x.is_sign_negative() && !x.is_zero() {
        return Err(Error::InvalidParameter("x must be >= 0".into()));
    }
    let finite = ThetaKernel::new(ZeroSequence::finite(kernel.zeros.zeros().to_vec())?)?;
    let prec = ctx.prec();
    let xq = Float::with_val(prec, x);
    let integrand = |c: &PrecisionContext, xq: &Float| {
        let finite = &finite;
        let xq = xq.clone();
        let c = c.clone();
        move |t: &Float| -> Result<Float> {
            let th = finite.theta_derivs_complex(t, 0, &c)?;
            let v = th[0].value.real().clone();
            let w = Float::with_val(c.prec(), -Float::with_val(c.prec(), &xq * t)).exp()
                * Float::with_val(c.prec(), t.pow(k as u32));
            Ok(v * w)
        }
    };
    let mut quadrature = integrate_0inf(integrand(ctx, &xq), k as f64, &QuadratureSpec::default(), ctx)?.require_converged()?;
    if ctx.verify_by_recompute {
        let d = ctx.doubled();
        let xd = Float::with_val(d.prec(), x);
        let r = integrate_0inf(integrand(&d, &xd), k as f64, &QuadratureSpec::default(), &d)?.require_converged()?;
        quadrature = quadrature.verified_against(&r);
    }

    let f = factorial(k as u32, prec);
    let mut sum = Complex::new(prec);
    let mut abs = Float::new(prec);
    for z in kernel.zeros.zeros() {
        let s = Complex::with_val(prec, &xq + z);
        let t = Complex::with_val(prec, s.pow(-(k as i32 + 1)));
        abs += Float::with_val(prec, t.abs_ref());
        sum += t;
    }
    let zero_sum = BoundedValue::new(
        Float::with_val(prec, sum.real() * &f),
        Float::with_val(prec, &abs * &f) * ctx.eps() * (kernel.zeros.len() as u64 + k as u64 + 4),
    );
    let residual = quadrature.sub(&zero_sum);
    let identity_holds = residual.contains(&Float::new(prec));

    // |Θ| has kinks where Θ changes sign, so the absolute integral is only
    // computed to a loose relative tolerance at modest precision
    let low = PrecisionContext::new(64, 16, false)?;
    let xl = low.float(x);
    let spec = QuadratureSpec {
        level: 14,
        convergence_tol: Some(low.float(1e-7)),
        ..QuadratureSpec::default()
    };
    let abs_out = integrate_0inf(
        |t: &Float| {
            let th = finite.theta_derivs_complex(t, 0, &low)?;
            let v = Float::with_val(64, th[0].value.real().abs_ref()) + &th[0].error_bound;
            let w = Float::with_val(64, -Float::with_val(64, &xl * t)).exp() * Float::with_val(64, t.pow(k as u32));
            Ok(v * w)
        },
        k as f64,
        &spec,
        &low,
    )?;
    let abs_integral = abs_out.value;
    let beta = finite.beta0();
    let sp = finite.zeros.stored_power_sum((k + 1) as f64, prec);
    let bpow = Float::with_val(prec, Float::with_val(prec, &beta).pow(k as u32 + 1));
    let rhs = Float::with_val(prec, &f * &sp) / bpow;
    let integrability_bound = BoundedValue::new(rhs, Float::with_val(prec, &sp * ctx.eps()) * &f * 8u32);
    let lhs_upper = Float::with_val(prec, abs_integral.upper());
    let integrability_holds = abs_out.converged && lhs_upper < integrability_bound.lower();
    Ok(LaplaceCheck {
        k,
        x: x.to_f64(),
        quadrature,
        zero_sum,
        residual,
        identity_holds,
        abs_integral,
        integrability_bound,
        integrability_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(192, 32, true).unwrap()
    }

    fn kernel(parts: &[(f64, f64)]) -> ThetaKernel {
        let zs = parts.iter().map(|&(a, b)| Complex::with_val(192, (a, b))).collect();
        ThetaKernel::new(ZeroSequence::finite(zs).unwrap()).unwrap()
    }

    fn close(v: &BoundedValue, oracle: &str, tol: f64) -> bool {
        let o = Float::with_val(v.prec(), Float::parse(oracle).unwrap());
        Float::with_val(v.prec(), &v.value - &o).abs() < tol
    }

    #[test]
    fn single_zero_values() {
        let ctx = ctx();
        let k = kernel(&[(1.0, 0.0)]);
        let e1 = Float::with_val(192, -1).exp();
        assert!(theta_deriv(&k, &ctx.float(1), 0, &ctx).unwrap().contains(&e1));
        assert!(theta_deriv(&k, &ctx.float(1), 2, &ctx).unwrap().contains(&e1));
        assert!(theta_k(&k, &ctx.float(1), 2, &ctx).unwrap().contains(&e1));
        let v = theta_k(&k, &ctx.float(3), 1, &ctx).unwrap();
        let exact = Float::with_val(192, -3).exp() * 3u32;
        assert!(v.contains(&exact));
    }

    #[test]
    fn conjugate_pair_values() {
        let ctx = ctx();
        let k = kernel(&[(1.0, 1.0), (1.0, -1.0)]);
        let v = theta_deriv(&k, &ctx.float(2), 0, &ctx).unwrap();
        assert!(close(&v, "-0.1126386999842557620084059738129898761945", 1e-38));
        let half = 3f64.sqrt() / 2.0;
        let k = kernel(&[(0.5, half), (0.5, -half)]);
        // stored zeros are f64-rounded e^{±iπ/3}; compare loosely
        let v = theta_k(&k, &ctx.float(4), 0, &ctx).unwrap();
        assert!(close(&v, "-0.2567156570861837619280979241673376026676", 1e-14));
    }

    #[test]
    fn imaginary_parts_cancel() {
        let ctx = ctx();
        let k = kernel(&[(3.0, 4.0), (3.0, -4.0), (10.0, 0.0)]);
        for t in [0.1, 1.0, 3.0] {
            for c in k.theta_derivs_complex(&ctx.float(t), 6, &ctx).unwrap() {
                assert!(c.imag_within_bound());
            }
        }
    }

    #[test]
    fn rejects_nonpositive_time() {
        let ctx = ctx();
        let k = kernel(&[(1.0, 0.0)]);
        assert!(matches!(theta_deriv(&k, &ctx.float(0), 0, &ctx), Err(Error::NonPositiveTime(_))));
    }

    #[test]
    fn laplace_single_zero() {
        let ctx = ctx();
        let k = kernel(&[(1.0, 0.0)]);
        let r = laplace_residual(&k, &ctx.float(1), 0, &ctx).unwrap();
        assert!(r.identity_holds && r.integrability_holds);
        assert!(close(&r.zero_sum, "0.5", 1e-50));
        let r = laplace_residual(&k, &ctx.float(1), 1, &ctx).unwrap();
        assert!(close(&r.quadrature, "0.25", 1e-40));
    }

    #[test]
    fn decay_of_single_zero() {
        let ctx = ctx();
        let k = kernel(&[(1.0, 0.0)]);
        let d = decay_check(&k, 0, 0.5, 0.9, &ctx).unwrap();
        assert!((d.large_t_slope + 1.0).abs() < 1e-10);
        assert!(d.large_t_pass);
        let k = kernel(&[(1.0, 1.0), (1.0, -1.0)]);
        let d = decay_check(&k, 0, 0.5, 0.9, &ctx).unwrap();
        assert!((d.large_t_slope + 1.0).abs() < 0.05, "{}", d.large_t_slope);
    }

    #[test]
    fn pi_squared_tail_bound_dominates() {
        let ctx = PrecisionContext::new(128, 32, false).unwrap();
        let short = ThetaKernel::new(ZeroSequence::pi_squared_n_squared(20, &ctx).unwrap()).unwrap();
        let long = ZeroSequence::pi_squared_n_squared(400, &ctx).unwrap();
        let long = ThetaKernel::new(ZeroSequence::finite(long.zeros().to_vec()).unwrap()).unwrap();
        for t in [0.001, 0.01, 0.1] {
            let a = theta_deriv(&short, &ctx.float(t), 1, &ctx).unwrap();
            let b = theta_deriv(&long, &ctx.float(t), 1, &ctx).unwrap();
            assert!(a.agrees_with(&b), "t = {t}");
        }
    }
}
