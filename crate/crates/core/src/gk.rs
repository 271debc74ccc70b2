//! The functions `G_k`: closed zero sums, the jet route from coefficients via
//! `G_k = T G_{k-1} + (k-1) G_{k-1}` with `T g = (x g)'`, the literal iterate
//! `T^k G_0`, and the probe comparing the two.

use rug::Float;
use serde::Serialize;

use crate::efun::{CoefficientStream, FunctionModel, ZeroSequence};
use crate::error::{Error, Result};
use crate::numcore::{factorial, to_decimal, BoundedValue, PrecisionContext};

/// `G_k(x)` with the margins `(-1)^m G_k^{(m)}(x)`, `m ≤ m_max`.
#[derive(Clone, Debug, Serialize)]
pub struct GkValue {
    pub k: usize,
    #[serde(serialize_with = "ser_float")]
    pub x: Float,
    pub value: BoundedValue,
    pub derivatives: Vec<BoundedValue>,
}

fn ser_float<S: serde::Serializer>(v: &Float, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&to_decimal(v, 40))
}

/// Taylor coefficients of a real function at `x`, each with an error bound.
#[derive(Clone, Debug)]
pub struct BoundedJet {
    pub x: Float,
    pub coeffs: Vec<BoundedValue>,
}

impl BoundedJet {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `(T + c) g` where `T g = (x g)'`; consumes one order.
    /// `(Tg)_j = (j+1)(x g_{j+1} + g_j)`.
    pub fn euler_shift(&self, c: u32) -> Result<BoundedJet> {
        if self.coeffs.len() < 2 {
            return Err(Error::InsufficientJetOrder { have: 0, need: 1 });
        }
        let coeffs = (0..self.order())
            .map(|j| {
                let xg = self.coeffs[j + 1].scale(&self.x);
                let t = xg.add(&self.coeffs[j]).scale(&Float::with_val(self.x.prec(), j + 1));
                if c == 0 {
                    t
                } else {
                    t.add(&self.coeffs[j].scale(&Float::with_val(self.x.prec(), c)))
                }
            })
            .collect();
        Ok(BoundedJet {
            x: self.x.clone(),
            coeffs,
        })
    }

    /// `(-1)^m g^{(m)}(x) = (-1)^m m! c_m`.
    pub fn margin(&self, m: usize) -> BoundedValue {
        let f = factorial(m as u32, self.x.prec());
        let v = self.coeffs[m].scale(&f);
        if m % 2 == 1 {
            v.neg()
        } else {
            v
        }
    }
}

/// Anything that yields `G_0 = f'/f` and the canonical `G_k` at real `x > 0`.
pub trait GkSource: Sync {
    fn label(&self) -> String;

    /// Jet of `G_0` at `x` of the given order.
    fn g0_jet(&self, x: &Float, order: usize, ctx: &PrecisionContext) -> Result<BoundedJet>;

    /// `margins[k][m] = (-1)^m G_k^{(m)}(x)` for `k ≤ k_max`, `m ≤ m_max`.
    fn gk_margins(
        &self,
        x: &Float,
        k_max: usize,
        m_max: usize,
        ctx: &PrecisionContext,
    ) -> Result<Vec<Vec<BoundedValue>>> {
        let g0 = self.g0_jet(x, k_max + m_max, ctx)?;
        margins_from_g0(g0, k_max, m_max)
    }
}

/// Canonical margins from a `G_0` jet of order `≥ k_max + m_max`.
pub fn margins_from_g0(g0: BoundedJet, k_max: usize, m_max: usize) -> Result<Vec<Vec<BoundedValue>>> {
    if g0.order() < k_max + m_max {
        return Err(Error::InsufficientJetOrder {
            have: g0.order(),
            need: k_max + m_max,
        });
    }
    let mut out = Vec::with_capacity(k_max + 1);
    let mut g = g0;
    for k in 0..=k_max {
        if k > 0 {
            g = g.euler_shift(k as u32 - 1)?;
        }
        out.push((0..=m_max).map(|m| g.margin(m)).collect());
    }
    Ok(out)
}

/// Margins at `ctx`, folded against a recomputation at doubled precision when
/// the context asks for it.
pub fn verified_margins(
    source: &dyn GkSource,
    x: &Float,
    k_max: usize,
    m_max: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<Vec<BoundedValue>>> {
    let base = source.gk_margins(x, k_max, m_max, ctx)?;
    if !ctx.verify_by_recompute {
        return Ok(base);
    }
    let d = ctx.doubled();
    let xd = Float::with_val(d.prec(), x);
    let reference = source.gk_margins(&xd, k_max, m_max, &d)?;
    Ok(base
        .into_iter()
        .zip(&reference)
        .map(|(row, rrow)| row.into_iter().zip(rrow).map(|(b, r)| b.verified_against(r)).collect())
        .collect())
}

impl GkSource for ZeroSequence {
    fn label(&self) -> String {
        format!("zeros(N={}, tail={})", self.len(), self.tail().label())
    }

    fn g0_jet(&self, x: &Float, order: usize, ctx: &PrecisionContext) -> Result<BoundedJet> {
        let m = zero_margins(self, x, 0, order, ctx)?;
        let prec = ctx.prec();
        let coeffs = m
            .into_iter()
            .next()
            .expect("k = 0 row")
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let f = factorial(j as u32, prec);
                let c = BoundedValue::new(
                    Float::with_val(prec, &v.value / &f),
                    Float::with_val(prec, &v.error_bound / &f),
                );
                if j % 2 == 1 {
                    c.neg()
                } else {
                    c
                }
            })
            .collect();
        Ok(BoundedJet {
            x: Float::with_val(prec, x),
            coeffs,
        })
    }

    fn gk_margins(
        &self,
        x: &Float,
        k_max: usize,
        m_max: usize,
        ctx: &PrecisionContext,
    ) -> Result<Vec<Vec<BoundedValue>>> {
        zero_margins(self, x, k_max, m_max, ctx)
    }
}

/// Closed form `(-1)^m G_k^{(m)}(x) = (k+m)! Σ Re λ^k/(x+λ)^{k+m+1}` with the
/// omitted zeros bounded through `|x + λ| ≥ x^a (β|λ|)^{1-a}`-type estimates.
fn zero_margins(
    zeros: &ZeroSequence,
    x: &Float,
    k_max: usize,
    m_max: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<Vec<BoundedValue>>> {
    let prec = ctx.prec();
    if !zeros.conjugate_closed() {
        let idx = zeros
            .zeros()
            .iter()
            .position(|z| !z.imag().is_zero())
            .unwrap_or(0);
        return Err(Error::MissingConjugate(idx));
    }
    if x.is_sign_negative() || x.is_zero() {
        return Err(Error::InvalidParameter("G_k is evaluated at x > 0".into()));
    }
    let x = Float::with_val(prec, x);
    let top = k_max + m_max + 1;
    let mut sums = vec![vec![Float::new(prec); m_max + 1]; k_max + 1];
    let mut abs = vec![vec![Float::new(prec); m_max + 1]; k_max + 1];
    // sensitivity to relative perturbations of λ: Σ |term| (k + (k+m+1)|λ|/|x+λ|)
    let mut sens = vec![vec![Float::new(prec); m_max + 1]; k_max + 1];
    for (i, z) in zeros.zeros().iter().enumerate() {
        let lam = rug::Complex::with_val(prec, z);
        let s = rug::Complex::with_val(prec, &x + &lam);
        if s.is_zero() {
            return Err(Error::Pole(i));
        }
        let w = rug::Complex::with_val(prec, s.recip_ref());
        let lam_over = Float::with_val(prec, Float::with_val(prec, lam.abs_ref()) * Float::with_val(prec, w.abs_ref()));
        let mut wp = Vec::with_capacity(top + 1);
        wp.push(rug::Complex::with_val(prec, 1));
        for p in 1..=top {
            let next = rug::Complex::with_val(prec, &wp[p - 1] * &w);
            wp.push(next);
        }
        let mut lk = rug::Complex::with_val(prec, 1);
        for k in 0..=k_max {
            for m in 0..=m_max {
                let t = rug::Complex::with_val(prec, &lk * &wp[k + m + 1]);
                let re = t.real().clone();
                let a = Float::with_val(prec, t.abs_ref());
                let factor = Float::with_val(prec, &lam_over * (k + m + 1) as u64) + k as u64;
                sens[k][m] += Float::with_val(prec, &a * &factor);
                abs[k][m] += a;
                sums[k][m] += re;
            }
            lk *= &lam;
        }
    }
    let rel = {
        let floor = Float::with_val(prec, Float::i_exp(1, 2 - zeros.zeros()[0].prec().0 as i32));
        let r = Float::with_val(prec, zeros.rel_uncertainty());
        if r > floor {
            r
        } else {
            floor
        }
    };
    let eps = ctx.eps();
    let beta = zeros.tail().beta0(prec);
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut row = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            let f = factorial((k + m) as u32, prec);
            let value = Float::with_val(prec, &sums[k][m] * &f);
            let mut bound = Float::with_val(prec, &abs[k][m] * &eps) * (k + m + 4 + zeros.len()) as u64;
            bound += Float::with_val(prec, &sens[k][m] * &rel);
            bound *= &f;
            if !zeros.tail().is_none() {
                let t = zero_tail(zeros, &x, &beta, k, m, prec).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "tail model {} cannot bound the remainder for m = {m}",
                        zeros.tail().label()
                    ))
                })?;
                bound += t * &f;
            }
            row.push(BoundedValue::new(value, bound));
        }
        out.push(row);
    }
    Ok(out)
}

/// `Σ_{n>N} |λ|^k/|x+λ|^{k+m+1} ≤ min_a x^{-a} β^{-(k+m+1-a)} Σ_{n>N} |λ|^{-(m+1-a)}`,
/// using `|x + λ| ≥ x + β|λ| ≥ x^{a/p}(β|λ|)^{1-a/p}` with `p = k+m+1`.
fn zero_tail(zeros: &ZeroSequence, x: &Float, beta: &Float, k: usize, m: usize, prec: u32) -> Option<Float> {
    let p = (k + m + 1) as f64;
    let mut best: Option<Float> = None;
    let mut a = 0.0;
    while a < m as f64 + 0.5 {
        let s = m as f64 + 1.0 - a;
        if let Some(ts) = zeros.tail_power_sum(s, prec) {
            let xa = Float::with_val(prec, x.pow_ref_f64(-a));
            let bb = Float::with_val(prec, beta.pow_ref_f64(-(p - a)));
            let v = ts * xa * bb;
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
        a += 0.25;
    }
    best
}

trait PowF64 {
    fn pow_ref_f64(&self, e: f64) -> Float;
}

impl PowF64 for Float {
    fn pow_ref_f64(&self, e: f64) -> Float {
        use rug::ops::Pow;
        Float::with_val(self.prec(), self.pow(e))
    }
}

impl GkSource for CoefficientStream {
    fn label(&self) -> String {
        format!("coefficients({})", CoefficientStream::label(self))
    }

    /// Jet of `f'/f` from the Taylor jet of `f`. The bound combines rounding
    /// in the division with the relative truncation remainder of the jet of
    /// `f`, amplified by the order.
    fn g0_jet(&self, x: &Float, order: usize, ctx: &PrecisionContext) -> Result<BoundedJet> {
        let prec = ctx.prec();
        let (f, tails) = self.jet_with_bounds(x, order + 1, ctx)?;
        let g = f.logderiv()?;
        let mut rho = Float::new(prec);
        for (c, t) in f.coeffs().iter().zip(&tails) {
            if !c.real().is_zero() {
                let r = Float::with_val(prec, t / Float::with_val(prec, c.real().abs_ref()));
                if r > rho {
                    rho = r;
                }
            }
        }
        let n = (order + 2) as u64;
        let rel = Float::with_val(prec, &rho * (2 * n)) + Float::with_val(prec, ctx.eps() * (4 * n * n));
        let coeffs = g
            .coeffs()
            .iter()
            .map(|c| {
                let v = c.real().clone();
                let mut b = Float::with_val(prec, v.abs_ref()) * &rel;
                b += Float::with_val(prec, c.imag().abs_ref());
                BoundedValue::new(v, b)
            })
            .collect();
        Ok(BoundedJet {
            x: Float::with_val(prec, x),
            coeffs,
        })
    }
}

impl GkSource for FunctionModel {
    fn label(&self) -> String {
        FunctionModel::label(self)
    }

    fn g0_jet(&self, x: &Float, order: usize, ctx: &PrecisionContext) -> Result<BoundedJet> {
        match self.coefficients() {
            Some(c) => c.g0_jet(x, order, ctx),
            None => self.zeros().expect("zero model").g0_jet(x, order, ctx),
        }
    }

    /// Both routes when available; per cell the tighter bound is reported.
    fn gk_margins(
        &self,
        x: &Float,
        k_max: usize,
        m_max: usize,
        ctx: &PrecisionContext,
    ) -> Result<Vec<Vec<BoundedValue>>> {
        let jets = self
            .coefficients()
            .map(|c| c.gk_margins(x, k_max, m_max, ctx))
            .transpose()?;
        let zeros = self
            .zeros()
            .map(|z| z.gk_margins(x, k_max, m_max, ctx))
            .transpose()?;
        match (jets, zeros) {
            (Some(a), Some(b)) => Ok(a
                .into_iter()
                .zip(b)
                .map(|(ra, rb)| {
                    ra.into_iter()
                        .zip(rb)
                        .map(|(va, vb)| if vb.error_bound < va.error_bound { vb } else { va })
                        .collect()
                })
                .collect()),
            (Some(a), None) => Ok(a),
            (None, Some(b)) => Ok(b),
            (None, None) => unreachable!("a model has coefficients or zeros"),
        }
    }
}

/// Canonical `G_k(x) = k! Σ λ^k/(x+λ)^{k+1}` with margins up to `m_max`.
pub fn gk_from_zeros(
    zeros: &ZeroSequence,
    x: &Float,
    k: usize,
    m_max: usize,
    ctx: &PrecisionContext,
) -> Result<GkValue> {
    let rows = verified_margins(zeros, x, k, m_max, ctx)?;
    let derivatives = rows.into_iter().nth(k).expect("row k");
    Ok(GkValue {
        k,
        x: Float::with_val(ctx.prec(), x),
        value: derivatives[0].clone(),
        derivatives,
    })
}

/// `G_0..G_{k_max}` from the coefficient jets via the rising-factorial recurrence.
pub fn gk_from_jets(
    stream: &CoefficientStream,
    x: &Float,
    k_max: usize,
    m_max: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<GkValue>> {
    let rows = verified_margins(stream, x, k_max, m_max, ctx)?;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(k, derivatives)| GkValue {
            k,
            x: Float::with_val(ctx.prec(), x),
            value: derivatives[0].clone(),
            derivatives,
        })
        .collect())
}

fn literal_jet(source: &dyn GkSource, x: &Float, k: usize, ctx: &PrecisionContext) -> Result<BoundedJet> {
    let mut g = source.g0_jet(x, k, ctx)?;
    for _ in 0..k {
        g = g.euler_shift(0)?;
    }
    Ok(g)
}

/// The literal iterate `T^k (f'/f)(x)` with `T g = (x g)'`.
pub fn euler_iterate(source: &dyn GkSource, x: &Float, k: usize, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let base = literal_jet(source, x, k, ctx)?.coeffs[0].clone();
    if !ctx.verify_by_recompute {
        return Ok(base);
    }
    let d = ctx.doubled();
    let reference = literal_jet(source, &Float::with_val(d.prec(), x), k, &d)?.coeffs[0].clone();
    Ok(base.verified_against(&reference))
}

/// Canonical `G_k` against the literal iterate `T^k G_0`.
#[derive(Clone, Debug, Serialize)]
pub struct DiscrepancyReport {
    pub source: String,
    pub k: usize,
    #[serde(serialize_with = "ser_float")]
    pub x: Float,
    pub canonical: BoundedValue,
    pub literal: BoundedValue,
    /// `canonical - literal`.
    pub difference: BoundedValue,
    /// `G_1(x)`, against which the difference is compared at `k = 2`.
    pub g1: BoundedValue,
    /// `T² G_0 = G_2 - G_1` within bounds; only meaningful at `k = 2`.
    pub bridge_holds: Option<bool>,
    /// The literal iterate is certified negative.
    pub literal_negative: bool,
}

/// Evaluates both readings of the operator expression at `x`.
pub fn discrepancy_probe(
    source: &dyn GkSource,
    x: &Float,
    k: usize,
    ctx: &PrecisionContext,
) -> Result<DiscrepancyReport> {
    let rows = verified_margins(source, x, k.max(1), 0, ctx)?;
    let canonical = rows[k][0].clone();
    let g1 = rows[1][0].clone();
    let literal = euler_iterate(source, x, k, ctx)?;
    let difference = canonical.sub(&literal);
    let bridge_holds = (k == 2).then(|| difference.agrees_with(&g1));
    Ok(DiscrepancyReport {
        source: source.label(),
        k,
        x: Float::with_val(ctx.prec(), x),
        literal_negative: literal.is_certified_negative(),
        canonical,
        literal,
        difference,
        g1,
        bridge_holds,
    })
}
