use rug::Float;

use super::{BoundedValue, PrecisionContext};
use crate::error::{Error, Result};

/// Controls the level-doubling trapezoid rule.
///
/// `level` is the maximum number of step halvings. `u_min`/`u_max` fix the
/// truncated range in the substituted variable (`t = e^u` for
/// [`integrate_0inf`]); `None` lets the integrator find the range itself.
/// `convergence_tol` is relative to the integral of `|g|` and defaults to the
/// context target `2^-(p-g)`.
#[derive(Clone, Debug)]
pub struct QuadratureSpec {
    pub level: u32,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub convergence_tol: Option<Float>,
    pub initial_step: f64,
    pub min_levels: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            level: 10,
            u_min: None,
            u_max: None,
            convergence_tol: None,
            initial_step: 0.5,
            min_levels: 2,
        }
    }
}

impl QuadratureSpec {
    pub fn with_level(level: u32) -> Self {
        Self {
            level,
            ..Self::default()
        }
    }

    pub fn with_range(mut self, u_min: f64, u_max: f64) -> Self {
        self.u_min = Some(u_min);
        self.u_max = Some(u_max);
        self
    }

    pub fn with_tol(mut self, tol: Float) -> Self {
        self.convergence_tol = Some(tol);
        self
    }

    fn tol(&self, ctx: &PrecisionContext) -> Float {
        match &self.convergence_tol {
            Some(t) => Float::with_val(ctx.prec(), t),
            None => ctx.target(),
        }
    }
}

/// Component-wise result of [`trapezoid`].
#[derive(Clone, Debug)]
pub struct VectorQuadrature {
    pub values: Vec<BoundedValue>,
    /// Estimates of `∫|g_i|`.
    pub abs_integrals: Vec<Float>,
    pub levels: u32,
    pub evaluations: usize,
    pub converged: bool,
}

/// Scalar quadrature result with range and convergence diagnostics.
#[derive(Clone, Debug)]
pub struct QuadratureOutcome {
    pub value: BoundedValue,
    pub levels: u32,
    pub evaluations: usize,
    pub converged: bool,
    pub u_min: f64,
    pub u_max: f64,
}

impl QuadratureOutcome {
    pub fn require_converged(self) -> Result<BoundedValue> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::QuadratureInconclusive {
                levels: self.levels,
                change: self.value.error_f64(),
            })
        }
    }
}

/// Trapezoid rule on `[a, b]` for a vector-valued integrand, halving the step
/// until consecutive levels agree.
///
/// Endpoints carry weight one half. Component `i` has converged once
/// `|S_L - S_{L-1}| <= tol · ∫|g_i|`; its error bound is that difference plus
/// rounding slack. For integrands analytic in a strip around the real axis
/// that decay at both ends, the error of `S_{L-1}` is already of the order of
/// the square of the previous change, so the bound is conservative.
pub fn trapezoid<G>(
    mut g: G,
    a: &Float,
    b: &Float,
    spec: &QuadratureSpec,
    ctx: &PrecisionContext,
) -> Result<VectorQuadrature>
where
    G: FnMut(&Float) -> Result<Vec<Float>>,
{
    let prec = ctx.prec();
    let tol = spec.tol(ctx);
    let width = Float::with_val(prec, b - a);
    let n0 = (width.to_f64() / spec.initial_step).ceil().max(1.0) as u64;
    let h0 = Float::with_val(prec, &width / n0);

    let mut evaluations = 0usize;
    let mut raw: Vec<Float> = Vec::new();
    let mut raw_abs: Vec<Float> = Vec::new();
    let accumulate = |raw: &mut Vec<Float>, raw_abs: &mut Vec<Float>, vals: Vec<Float>, half: bool| {
        if raw.is_empty() {
            raw.resize(vals.len(), Float::new(prec));
            raw_abs.resize(vals.len(), Float::new(prec));
        }
        for (i, v) in vals.into_iter().enumerate() {
            let v = if half { v / 2u32 } else { v };
            raw_abs[i] += Float::with_val(prec, v.abs_ref());
            raw[i] += v;
        }
    };

    for j in 0..=n0 {
        let u = Float::with_val(prec, &h0 * j) + a;
        let vals = g(&u)?;
        evaluations += 1;
        accumulate(&mut raw, &mut raw_abs, vals, j == 0 || j == n0);
    }
    let mut h = h0.clone();
    let mut prev: Vec<Float> = raw.iter().map(|r| Float::with_val(prec, r * &h)).collect();
    let mut level = 0u32;
    let mut diffs: Vec<Float> = vec![Float::with_val(prec, rug::float::Special::Infinity); raw.len()];
    let mut converged = false;

    while level < spec.level {
        level += 1;
        h /= 2u32;
        let intervals = n0 << level;
        let mut j = 1u64;
        while j < intervals {
            let u = Float::with_val(prec, &h * j) + a;
            let vals = g(&u)?;
            evaluations += 1;
            accumulate(&mut raw, &mut raw_abs, vals, false);
            j += 2;
        }
        let cur: Vec<Float> = raw.iter().map(|r| Float::with_val(prec, r * &h)).collect();
        diffs = cur
            .iter()
            .zip(&prev)
            .map(|(c, p)| Float::with_val(prec, c - p).abs())
            .collect();
        prev = cur;
        if level >= spec.min_levels {
            let ok = diffs.iter().zip(&raw_abs).all(|(d, ra)| {
                let scale = Float::with_val(prec, ra * &h);
                *d <= Float::with_val(prec, &tol * &scale)
            });
            if ok {
                converged = true;
                break;
            }
        }
    }

    let eps = ctx.eps();
    let values = prev
        .into_iter()
        .zip(diffs)
        .zip(&raw_abs)
        .map(|((v, d), ra)| {
            let mut slack = Float::with_val(prec, ra * &h);
            slack *= &eps;
            slack *= evaluations as u64;
            BoundedValue::new(v, d + slack)
        })
        .collect();
    let abs_integrals = raw_abs.iter().map(|ra| Float::with_val(prec, ra * &h)).collect();
    Ok(VectorQuadrature {
        values,
        abs_integrals,
        levels: level,
        evaluations,
        converged,
    })
}

/// `∫_0^∞ F(t) dt` via `t = e^u` and the level-doubling trapezoid rule.
///
/// `F` must behave as `O(t^a)` with `a = endpoint_exponent > -1` near zero and
/// decay at least exponentially as `t → ∞`. The truncation slack added to the
/// bound is `|g(u_min)|/(a+1)` on the left (power-law decay in `u`) and
/// `|g(u_max)|` on the right (double-exponential decay in `u`).
pub fn integrate_0inf<F>(
    mut integrand: F,
    endpoint_exponent: f64,
    spec: &QuadratureSpec,
    ctx: &PrecisionContext,
) -> Result<QuadratureOutcome>
where
    F: FnMut(&Float) -> Result<Float>,
{
    if endpoint_exponent <= -1.0 || !endpoint_exponent.is_finite() {
        return Err(Error::NonIntegrable(endpoint_exponent));
    }
    let prec = ctx.prec();
    let mut g = |u: &Float| -> Result<Float> {
        let t = Float::with_val(prec, u.exp_ref());
        let v = integrand(&t)?;
        Ok(v * t)
    };

    let (u_min, u_max) = match (spec.u_min, spec.u_max) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (alo, ahi) = auto_range(&mut g, endpoint_exponent, &spec.tol(ctx), prec)?;
            (lo.unwrap_or(alo), hi.unwrap_or(ahi))
        }
    };
    let a = Float::with_val(prec, u_min);
    let b = Float::with_val(prec, u_max);
    let left = g(&a)?.abs() / (endpoint_exponent + 1.0);
    let right = g(&b)?.abs();
    let q = trapezoid(|u| g(u).map(|v| vec![v]), &a, &b, spec, ctx)?;
    let value = q.values.into_iter().next().expect("scalar integrand");
    let value = value.widen(&(left + right));
    Ok(QuadratureOutcome {
        value,
        levels: q.levels,
        evaluations: q.evaluations + 2,
        converged: q.converged,
        u_min,
        u_max,
    })
}

/// Finds a truncation window in `u` outside which the integrand is below
/// `tol` times its peak.
fn auto_range<G>(g: &mut G, exponent: f64, tol: &Float, prec: u32) -> Result<(f64, f64)>
where
    G: FnMut(&Float) -> Result<Float>,
{
    let mut peak = Float::new(prec);
    let mut peak_u = 0i64;
    for u in -40..=40i64 {
        let v = g(&Float::with_val(prec, u))?.abs();
        if v > peak {
            peak = v;
            peak_u = u;
        }
    }
    if peak.is_zero() {
        return Ok((-1.0, 1.0));
    }
    // margin so the truncation slack sits well below the convergence target
    let thresh = Float::with_val(prec, tol * &peak) >> 10;

    let mut hi = peak_u + 1;
    let mut below = 0;
    let mut last = Float::with_val(prec, &peak);
    while hi < 400 {
        let v = g(&Float::with_val(prec, hi))?.abs();
        if v < thresh && v <= last {
            below += 1;
            if below >= 2 {
                break;
            }
        } else {
            below = 0;
        }
        last = v;
        hi += 1;
    }

    let scale = exponent + 1.0;
    let mut lo = peak_u - 1;
    let mut below = 0;
    let mut last = peak;
    while lo > -20_000 {
        let v = g(&Float::with_val(prec, lo))?.abs();
        let slack = Float::with_val(prec, &v / scale);
        if slack < thresh && v <= last {
            below += 1;
            if below >= 2 {
                break;
            }
        } else {
            below = 0;
        }
        last = v;
        lo -= if lo < -100 { 4 } else { 1 };
    }
    Ok((lo as f64, hi as f64))
}
