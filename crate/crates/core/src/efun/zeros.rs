use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numcore::PrecisionContext;

/// Bound on `Σ_{n>N} |λ_n|^{-s}` supplied by the caller; `None` means divergent.
pub type PowerSumFn = Arc<dyn Fn(f64, u32) -> Option<Float> + Send + Sync>;

/// Analytic model for the zeros omitted beyond the stored truncation.
#[derive(Clone)]
pub enum TailModel {
    /// The stored list is the whole sequence.
    None,
    /// Omitted zeros are real positive with `λ_n ≥ c n^p`; the remainder is
    /// bounded by `∫_N^∞ (c u^p)^{-s} du`.
    PowerLaw { c: Float, p: Float },
    /// Omitted zeros are `λ = z²` with `Re z > t_cut`, `|Im z| ≤ 1/2`, counted
    /// by the Riemann–von Mangoldt formula with Trudgian's error term.
    RiemannDensity { t_cut: Float },
    /// Caller-supplied bound together with the smallest omitted modulus and
    /// the omitted zeros' real-part-dominance constant.
    UserBound {
        power_sum: PowerSumFn,
        min_modulus: Float,
        beta0: Float,
    },
}

impl fmt::Debug for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl TailModel {
    pub fn label(&self) -> String {
        match self {
            Self::None => "none".into(),
            Self::PowerLaw { c, p } => format!("power_law(c={}, p={})", c.to_f64(), p.to_f64()),
            Self::RiemannDensity { t_cut } => format!("riemann_density(T_cut={})", t_cut.to_f64()),
            Self::UserBound { .. } => "user_bound".into(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }

    /// Upper bound on `Σ_{n>N} |λ_n|^{-s}`; `None` if the model cannot bound it.
    pub fn power_sum(&self, s: f64, n_stored: usize, prec: u32) -> Option<Float> {
        match self {
            Self::None => Some(Float::new(prec)),
            Self::PowerLaw { c, p } => {
                let ps = Float::with_val(prec, p * s);
                if ps <= 1 || n_stored == 0 {
                    return None;
                }
                // c^{-s} N^{1-ps} / (ps - 1)
                let c_s = Float::with_val(prec, c.pow(-s));
                let n = Float::with_val(prec, n_stored);
                let one_minus = Float::with_val(prec, 1 - ps.clone());
                let n_pow = Float::with_val(prec, n.pow(&one_minus));
                Some(c_s * n_pow / (ps - 1u32))
            }
            Self::RiemannDensity { t_cut } => riemann_power_sum(t_cut, 2.0 * s, prec),
            Self::UserBound { power_sum, .. } => power_sum(s, prec),
        }
    }

    /// Lower bound on the modulus of every omitted zero.
    pub fn min_modulus(&self, n_stored: usize, prec: u32) -> Option<Float> {
        match self {
            Self::None => None,
            Self::PowerLaw { c, p } => {
                let n = Float::with_val(prec, n_stored + 1);
                Some(Float::with_val(prec, c * Float::with_val(prec, n.pow(p))))
            }
            Self::RiemannDensity { t_cut } => Some(Float::with_val(prec, t_cut.square_ref())),
            Self::UserBound { min_modulus, .. } => Some(Float::with_val(prec, min_modulus)),
        }
    }

    /// `β` with `Re λ ≥ β |λ|` for every omitted zero.
    pub fn beta0(&self, prec: u32) -> Float {
        match self {
            Self::None | Self::PowerLaw { .. } => Float::with_val(prec, 1),
            // Re(z²)/|z|² ≥ 1 - 2 Im(z)²/|z|² ≥ 1 - 1/(2 T²)
            Self::RiemannDensity { t_cut } => {
                let t2 = Float::with_val(prec, t_cut.square_ref()) * 2u32;
                Float::with_val(prec, 1) - Float::with_val(prec, t2.recip_ref())
            }
            Self::UserBound { beta0, .. } => Float::with_val(prec, beta0),
        }
    }
}

/// Trudgian's explicit bound `|N(T) - M(T)| ≤ 0.112 log T + 0.278 log log T + 2.51`.
pub fn riemann_count_error(t: &Float) -> Float {
    let prec = t.prec();
    let lt = Float::with_val(prec, t.ln_ref());
    let llt = Float::with_val(prec, lt.ln_ref());
    Float::with_val(prec, &lt * 0.112) + Float::with_val(prec, &llt * 0.278) + 2.51
}

/// Smooth part of the zero-counting function, `(T/2π) log(T/2πe) + 7/8`.
pub fn riemann_count_main(t: &Float) -> Float {
    let prec = t.prec();
    let two_pi = Float::with_val(prec, Constant::Pi) * 2u32;
    let ratio = Float::with_val(prec, t / &two_pi);
    let l = Float::with_val(prec, ratio.ln_ref()) - 1u32;
    ratio * l + 0.875
}

/// `Σ_{γ > T0} γ^{-q}` bounded via `∫_{T0}^∞ T^{-q} (M'(T) + E'(T)) dT + 2 E(T0) T0^{-q}`.
fn riemann_power_sum(t0: &Float, q: f64, prec: u32) -> Option<Float> {
    if q <= 1.0 {
        return None;
    }
    let t0 = Float::with_val(prec, t0);
    let two_pi = Float::with_val(prec, Constant::Pi) * 2u32;
    let qm1 = q - 1.0;
    let t_pow = Float::with_val(prec, (&t0).pow(-q));
    // (1/2π) ∫ T^{-q} log(T/2π) dT = (1/2π) T0^{1-q}/(q-1) [log(T0/2π) + 1/(q-1)]
    let log_ratio = Float::with_val(prec, Float::with_val(prec, &t0 / &two_pi).ln_ref());
    let main = Float::with_val(prec, &t_pow * &t0) / qm1 * (log_ratio + 1.0 / qm1) / &two_pi;
    // ∫ T^{-q} (0.112/T + 0.278/(T log T)) dT ≤ T0^{-q} (0.112/q + 0.278/(q log T0))
    let log_t0 = Float::with_val(prec, t0.ln_ref());
    let e_prime = Float::with_val(prec, &t_pow * (0.112 / q))
        + Float::with_val(prec, &t_pow * 0.278) / q / log_t0;
    let jump = riemann_count_error(&t0) * &t_pow * 2u32;
    Some(main + e_prime + jump)
}

/// Smallest `Re λ/|λ|` over the given zeros — the largest admissible `β₀`.
pub fn beta0_compute(zeros: &[Complex]) -> Result<Float> {
    let prec = zeros.first().map_or(64, |z| z.prec().0);
    let mut beta = Float::with_val(prec, 1);
    for (i, z) in zeros.iter().enumerate() {
        if z.is_zero() {
            return Err(Error::ZeroRoot(i));
        }
        if z.real().is_sign_negative() || z.real().is_zero() {
            return Err(Error::NotRealPartDominating { index: i });
        }
        let r = Float::with_val(prec, z.real() / Float::with_val(prec, z.abs_ref()));
        if r < beta {
            beta = r;
        }
    }
    Ok(beta)
}

fn cmp_modulus_then_arg(a: &Complex, b: &Complex) -> Ordering {
    let prec = a.prec().0.max(b.prec().0);
    let ma = Float::with_val(prec, a.abs_ref());
    let mb = Float::with_val(prec, b.abs_ref());
    ma.partial_cmp(&mb).unwrap_or(Ordering::Equal).then_with(|| {
        let aa = Float::with_val(prec, a.arg_ref());
        let ab = Float::with_val(prec, b.arg_ref());
        aa.partial_cmp(&ab).unwrap_or(Ordering::Equal)
    })
}

/// The zeros `-λ_n` of `f`, stored as `λ_n` ordered by modulus, with a tail model.
#[derive(Clone, Debug)]
pub struct ZeroSequence {
    zeros: Vec<Complex>,
    conjugate_closed: bool,
    beta0: Float,
    tail: TailModel,
    rel_uncertainty: Float,
}

impl ZeroSequence {
    pub fn new(mut zeros: Vec<Complex>, tail: TailModel) -> Result<Self> {
        if zeros.is_empty() {
            return Err(Error::EmptyZeroList);
        }
        beta0_compute(&zeros)?;
        zeros.sort_by(cmp_modulus_then_arg);
        let beta0 = beta0_compute(&zeros)?;
        let conjugate_closed = zeros.iter().all(|z| {
            z.imag().is_zero() || {
                let c = Complex::with_val(z.prec(), z.conj_ref());
                zeros.contains(&c)
            }
        });
        Ok(Self {
            zeros,
            conjugate_closed,
            beta0,
            tail,
            rel_uncertainty: Float::new(64),
        })
    }

    /// A finite set of zeros with no tail.
    pub fn finite(zeros: Vec<Complex>) -> Result<Self> {
        Self::new(zeros, TailModel::None)
    }

    /// Real positive zeros from `f64` literals.
    pub fn from_reals(values: &[f64], ctx: &PrecisionContext) -> Result<Self> {
        Self::finite(values.iter().map(|&v| Complex::with_val(ctx.prec(), v)).collect())
    }

    /// `λ_n = n²π²` for `n ≤ count` with the `power_law(π², 2)` tail.
    pub fn pi_squared_n_squared(count: usize, ctx: &PrecisionContext) -> Result<Self> {
        let prec = ctx.prec();
        let pi2 = Float::with_val(prec, Constant::Pi).square();
        let zeros = (1..=count as u64)
            .map(|n| Complex::with_val(prec, Float::with_val(prec, &pi2 * (n * n))))
            .collect();
        Self::new(
            zeros,
            TailModel::PowerLaw {
                c: pi2,
                p: Float::with_val(prec, 2),
            },
        )
    }

    pub fn zeros(&self) -> &[Complex] {
        &self.zeros
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn conjugate_closed(&self) -> bool {
        self.conjugate_closed
    }

    /// `β₀` of the stored zeros.
    pub fn beta0(&self) -> &Float {
        &self.beta0
    }

    /// `β₀` valid for stored and omitted zeros alike.
    pub fn beta0_total(&self) -> Float {
        let t = self.tail.beta0(self.beta0.prec());
        if t < self.beta0 {
            t
        } else {
            self.beta0.clone()
        }
    }

    pub fn tail(&self) -> &TailModel {
        &self.tail
    }

    pub fn with_tail(mut self, tail: TailModel) -> Self {
        self.tail = tail;
        self
    }

    /// Relative uncertainty `|δλ_n|/|λ_n|` of the stored values when they
    /// come from measured data rather than exact formulas.
    pub fn rel_uncertainty(&self) -> &Float {
        &self.rel_uncertainty
    }

    pub fn with_rel_uncertainty(mut self, rel: Float) -> Self {
        self.rel_uncertainty = rel.abs();
        self
    }

    /// Every stored zero is real (hence positive).
    pub fn all_positive(&self) -> bool {
        self.zeros.iter().all(|z| z.imag().is_zero())
    }

    pub fn min_modulus(&self, prec: u32) -> Float {
        Float::with_val(prec, self.zeros[0].abs_ref())
    }

    /// `Σ_{n≤N} |λ_n|^{-s}` over stored zeros.
    pub fn stored_power_sum(&self, s: f64, prec: u32) -> Float {
        let mut acc = Float::new(prec);
        for z in &self.zeros {
            let m = Float::with_val(prec, z.abs_ref());
            acc += m.pow(-s);
        }
        acc
    }

    /// Tail model bound on `Σ_{n>N} |λ_n|^{-s}`.
    pub fn tail_power_sum(&self, s: f64, prec: u32) -> Option<Float> {
        self.tail.power_sum(s, self.zeros.len(), prec)
    }

    /// Copy of the sequence at another precision (values are rounded, not recomputed).
    pub fn at_precision(&self, prec: u32) -> Self {
        Self {
            zeros: self.zeros.iter().map(|z| Complex::with_val(prec, z)).collect(),
            ..self.clone()
        }
    }
}

/// Parses the shared zero-list format: one zero per line as `re` or `re im`,
/// `#` starts a comment, blank lines are ignored.
pub fn parse_zero_list(text: &str, path: &Path, ctx: &PrecisionContext) -> Result<Vec<Complex>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() > 2 {
            return Err(err(format!("expected 're' or 're im', got {} fields", fields.len())));
        }
        let re = ctx.parse(fields[0]).map_err(|e| err(e.to_string()))?;
        let im = match fields.get(1) {
            Some(s) => ctx.parse(s).map_err(|e| err(e.to_string()))?,
            None => ctx.zero(),
        };
        if !re.is_finite() || !im.is_finite() {
            return Err(err("non-finite value".into()));
        }
        out.push(Complex::with_val(ctx.prec(), (re, im)));
    }
    Ok(out)
}

pub fn read_zero_file(path: &Path, ctx: &PrecisionContext) -> Result<Vec<Complex>> {
    let text = std::fs::read_to_string(path)?;
    parse_zero_list(&text, path, ctx)
}
