//! Entire functions of genus 0: coefficient streams, zero products, presets,
//! the order estimator, `β₀`, and the even transform `f(z) = g(i√z)`.

mod coeffs;
mod zeros;

pub use coeffs::{order_estimate, CoefficientRule, CoefficientStream, OrderEstimate, RatioFn};
pub use zeros::{
    beta0_compute, parse_zero_list, read_zero_file, riemann_count_error, riemann_count_main,
    PowerSumFn, TailModel, ZeroSequence,
};

use std::fmt;
use std::str::FromStr;

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numcore::{BoundedValue, PrecisionContext};
use crate::riemann::{PhiSeriesSpec, XiSqrtModel};

/// Number of `n²π²` zeros attached to the `sinh_sqrt` and `bessel_i(1/2)` presets.
pub const DEFAULT_PRESET_ZEROS: usize = 1000;

/// Named families with closed-form coefficient ratios.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    SinhSqrt,
    BesselI { nu: f64 },
    QBessel2I { nu: f64, q: f64 },
    RamanujanAq { q: f64 },
    RiemannXiSqrt,
}

impl Preset {
    pub const NAMES: [&'static str; 5] = [
        "sinh_sqrt",
        "bessel_i:NU",
        "q_bessel2_i:NU:Q",
        "ramanujan_aq:Q",
        "riemann_xi_sqrt",
    ];

    pub fn validate(&self) -> Result<()> {
        let check_q = |q: f64| {
            if q > 0.0 && q < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("q must lie in (0, 1), got {q}")))
            }
        };
        let check_nu = |nu: f64| {
            if nu > -1.0 && nu.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("nu must exceed -1, got {nu}")))
            }
        };
        match *self {
            Self::SinhSqrt | Self::RiemannXiSqrt => Ok(()),
            Self::BesselI { nu } => check_nu(nu),
            Self::QBessel2I { nu, q } => check_nu(nu).and(check_q(q)),
            Self::RamanujanAq { q } => check_q(q),
        }
    }

    /// Whether the zeros are known exactly as `λ_n = n²π²`.
    pub fn has_pi_squared_zeros(&self) -> bool {
        match *self {
            Self::SinhSqrt => true,
            Self::BesselI { nu } => nu == 0.5,
            _ => false,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SinhSqrt => write!(f, "sinh_sqrt"),
            Self::BesselI { nu } => write!(f, "bessel_i:{nu}"),
            Self::QBessel2I { nu, q } => write!(f, "q_bessel2_i:{nu}:{q}"),
            Self::RamanujanAq { q } => write!(f, "ramanujan_aq:{q}"),
            Self::RiemannXiSqrt => write!(f, "riemann_xi_sqrt"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let params: Vec<f64> = parts
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad preset parameter '{p}'")))
            })
            .collect::<Result<_>>()?;
        let want = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "preset '{name}' takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        let preset = match name {
            "sinh_sqrt" => want(0).map(|_| Self::SinhSqrt),
            "bessel_i" => want(1).map(|_| Self::BesselI { nu: params[0] }),
            "q_bessel2_i" => want(2).map(|_| Self::QBessel2I {
                nu: params[0],
                q: params[1],
            }),
            "ramanujan_aq" => want(1).map(|_| Self::RamanujanAq { q: params[0] }),
            "riemann_xi_sqrt" => want(0).map(|_| Self::RiemannXiSqrt),
            _ => Err(Error::InvalidParameter(format!(
                "unknown preset '{name}' (known: {})",
                Self::NAMES.join(", ")
            ))),
        }?;
        preset.validate()?;
        Ok(preset)
    }
}

/// An entire function presented by coefficients, by zeros, or as a preset
/// expanded to one or both of those.
#[derive(Clone, Debug)]
pub enum FunctionModel {
    Coefficients(CoefficientStream),
    ZeroProduct { zeros: ZeroSequence, f0: Float },
    Preset {
        preset: Preset,
        coefficients: CoefficientStream,
        zeros: Option<ZeroSequence>,
    },
}

impl FunctionModel {
    pub fn label(&self) -> String {
        match self {
            Self::Coefficients(s) => s.label(),
            Self::ZeroProduct { zeros, .. } => format!("zero_product(N={})", zeros.len()),
            Self::Preset { preset, .. } => preset.to_string(),
        }
    }

    pub fn coefficients(&self) -> Option<&CoefficientStream> {
        match self {
            Self::Coefficients(s) => Some(s),
            Self::Preset { coefficients, .. } => Some(coefficients),
            Self::ZeroProduct { .. } => None,
        }
    }

    pub fn zeros(&self) -> Option<&ZeroSequence> {
        match self {
            Self::ZeroProduct { zeros, .. } => Some(zeros),
            Self::Preset { zeros, .. } => zeros.as_ref(),
            Self::Coefficients(_) => None,
        }
    }

    /// `f(x)` at real `x ≥ 0`, from coefficients when available.
    pub fn eval(&self, x: &Float, ctx: &PrecisionContext) -> Result<BoundedValue> {
        match self {
            Self::ZeroProduct { zeros, f0 } => zero_product_eval(zeros, f0, x, ctx),
            _ => self.coefficients().expect("coefficient model").eval(x, ctx),
        }
    }
}

/// `f0 · Π_{n≤N}(1 + x/λ_n)` with the omitted factors bounded through the tail model:
/// `|log Π_{n>N}(1 + x/λ_n)| ≤ 2|x| Σ_{n>N}|λ_n|^{-1}` when `|x| ≤ min|λ|/2`.
pub fn zero_product_eval(
    zeros: &ZeroSequence,
    f0: &Float,
    x: &Float,
    ctx: &PrecisionContext,
) -> Result<BoundedValue> {
    let prec = ctx.prec();
    let mut prod = Complex::with_val(prec, f0);
    let mut abs_sum = Float::new(prec);
    for z in zeros.zeros() {
        let w = Complex::with_val(prec, x / z);
        abs_sum += Float::with_val(prec, w.abs_ref());
        prod *= w + 1u32;
    }
    let mut bound = Float::with_val(prec, prod.abs_ref()) * ctx.eps() * (zeros.len() as u64 + 2) * abs_sum.max(&ctx.float(1));
    if !zeros.tail().is_none() {
        let mm = zeros
            .tail()
            .min_modulus(zeros.len(), prec)
            .ok_or_else(|| Error::InvalidParameter("tail model has no minimum modulus".into()))?;
        if Float::with_val(prec, x.abs_ref()) * 2u32 > mm {
            return Err(Error::InvalidParameter(
                "x too large for the product tail bound".into(),
            ));
        }
        let s = zeros
            .tail_power_sum(1.0, prec)
            .ok_or_else(|| Error::InvalidParameter("tail model cannot bound Σ|λ|^-1".into()))?;
        let delta = Float::with_val(prec, x.abs_ref()) * s * 2u32;
        let grow = delta.exp_m1();
        bound += Float::with_val(prec, prod.abs_ref()) * grow;
    }
    Ok(BoundedValue::new(prod.real().clone(), bound))
}

/// Expands a preset into coefficients (always) and zeros (when known exactly).
pub fn expand_preset(preset: &Preset, ctx: &PrecisionContext) -> Result<FunctionModel> {
    preset.validate()?;
    let one = ctx.float(1);
    let rule = match *preset {
        Preset::SinhSqrt => CoefficientRule::SinhSqrt,
        Preset::BesselI { nu } => CoefficientRule::BesselI { nu: ctx.float(nu) },
        Preset::QBessel2I { nu, q } => CoefficientRule::QBessel2I {
            nu: ctx.float(nu),
            q: ctx.float(q),
        },
        Preset::RamanujanAq { q } => CoefficientRule::RamanujanAq { q: ctx.float(q) },
        Preset::RiemannXiSqrt => {
            let model = XiSqrtModel::new(PhiSeriesSpec::default(), Default::default());
            CoefficientRule::XiSqrt(Box::new(model))
        }
    };
    let coefficients = CoefficientStream::new(one, rule)?;
    let zeros = if preset.has_pi_squared_zeros() {
        Some(ZeroSequence::pi_squared_n_squared(DEFAULT_PRESET_ZEROS, ctx)?)
    } else {
        None
    };
    Ok(FunctionModel::Preset {
        preset: preset.clone(),
        coefficients,
        zeros,
    })
}

/// An even entire function `g`, given either by `G` with `g(z) = G(z²)` or
/// by one representative `z_n` of each zero pair `±z_n`.
#[derive(Clone, Debug)]
pub enum EvenFunction {
    /// Coefficients `b_n` of `g(z) = Σ b_n z^{2n}`, as a stream in `w = z²`.
    Coefficients(CoefficientStream),
    /// Zero pairs with the strip half-width `M` bounding `|Im z_n|`.
    ZeroPairs {
        zeros: Vec<Complex>,
        strip: Float,
        tail: TailModel,
        g0: Float,
    },
}

/// `f(z) = g(i√z)`: coefficients `a_n = (-1)^n b_n`, zeros `λ_n = z_n²`.
pub fn even_to_genus0(g: &EvenFunction, ctx: &PrecisionContext) -> Result<FunctionModel> {
    match g {
        EvenFunction::Coefficients(b) => {
            let rule = match b.rule() {
                CoefficientRule::Finite(c) => CoefficientRule::Finite(
                    c.iter()
                        .enumerate()
                        .map(|(n, v)| if n % 2 == 1 { -v.clone() } else { v.clone() })
                        .collect(),
                ),
                CoefficientRule::Ratio { .. } => {
                    let b = b.clone();
                    let label = format!("even_transform({})", b.label());
                    let ratio = move |n: usize, p: u32| -b.ratio(n, p).expect("ratio rule");
                    CoefficientRule::Ratio {
                        label,
                        ratio: std::sync::Arc::new(ratio),
                    }
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "even transform expects a ratio or polynomial stream, got {}",
                        other.label()
                    )))
                }
            };
            let mut f = CoefficientStream::new(b.a0().clone(), rule)?;
            // a_0 a_n > 0 is the hypothesis; check it on a finite prefix
            let a = f.coefficients(64, ctx)?;
            if let Some(n) = a
                .iter()
                .position(|v| !v.is_zero() && v.is_sign_positive() != a[0].is_sign_positive())
            {
                return Err(Error::InvalidParameter(format!(
                    "transformed coefficient a_{n} has the wrong sign (need a_0 a_n > 0)"
                )));
            }
            if let CoefficientRule::Ratio { label, ratio } = f.rule().clone() {
                f = CoefficientStream::from_ratio(&label, f.a0().clone(), true, move |n, p| ratio(n, p))?;
            }
            let rho = order_estimate(&f, 64, ctx)?.estimate;
            if rho >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "transformed function has estimated order {rho:.3}, need < 1"
                )));
            }
            Ok(FunctionModel::Coefficients(f))
        }
        EvenFunction::ZeroPairs {
            zeros,
            strip,
            tail,
            g0,
        } => {
            let prec = ctx.prec();
            let mut lambdas = Vec::with_capacity(zeros.len());
            for (i, z) in zeros.iter().enumerate() {
                let l = Complex::with_val(prec, z.square_ref());
                if l.real().is_sign_negative() || l.real().is_zero() {
                    return Err(Error::EvenHypothesis { index: i });
                }
                if Float::with_val(prec, z.imag().abs_ref()) > *strip {
                    return Err(Error::EvenHypothesis { index: i });
                }
                lambdas.push(l);
            }
            let zs = ZeroSequence::new(lambdas, tail.clone())?;
            Ok(FunctionModel::ZeroProduct {
                zeros: zs,
                f0: Float::with_val(prec, g0),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::float::Constant;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128, 32, false).unwrap()
    }

    fn cos_stream(ctx: &PrecisionContext) -> CoefficientStream {
        // cos z = Σ (-1)^n z^{2n}/(2n)!  in w = z²
        CoefficientStream::from_ratio("cos", ctx.float(1), false, |n, p| {
            Float::with_val(p, -1) / ((2 * n as u64 + 1) * (2 * n as u64 + 2))
        })
        .unwrap()
    }

    #[test]
    fn preset_parsing() {
        assert_eq!("sinh_sqrt".parse::<Preset>().unwrap(), Preset::SinhSqrt);
        assert_eq!(
            "q_bessel2_i:0.5:0.3".parse::<Preset>().unwrap(),
            Preset::QBessel2I { nu: 0.5, q: 0.3 }
        );
        assert!("ramanujan_aq:1.5".parse::<Preset>().is_err());
        assert!("bessel_i:-2".parse::<Preset>().is_err());
        assert!("bessel_i".parse::<Preset>().is_err());
        assert!("airy".parse::<Preset>().is_err());
    }

    #[test]
    fn order_one_transform_rejected() {
        // g(z) = e^{-z²} gives f(w) = e^w
        let ctx = ctx();
        let g = CoefficientStream::from_ratio("gauss", ctx.float(1), false, |n, p| {
            Float::with_val(p, -1) / (n as u64 + 1)
        })
        .unwrap();
        let err = even_to_genus0(&EvenFunction::Coefficients(g), &ctx).unwrap_err();
        assert!(err.to_string().contains("order"));
    }

    #[test]
    fn cos_transforms_to_cosh_sqrt() {
        let ctx = ctx();
        let f = even_to_genus0(&EvenFunction::Coefficients(cos_stream(&ctx)), &ctx).unwrap();
        let s = f.coefficients().unwrap();
        let a = s.coefficients(4, &ctx).unwrap();
        for (j, d) in [(2usize, 24u32), (3, 720)] {
            let e = ctx.float(1) / d;
            assert!(Float::with_val(128, &a[j] - &e).abs() < e * 1e-35);
        }
        let v = s.eval(&ctx.float(4), &ctx).unwrap();
        let d = Float::with_val(128, &v.value - ctx.float(2).cosh()).abs();
        assert!(d < 1e-35);
    }

    #[test]
    fn even_transform_commutes_with_evaluation() {
        let ctx = ctx();
        let g = cos_stream(&ctx);
        let f = even_to_genus0(&EvenFunction::Coefficients(g.clone()), &ctx).unwrap();
        for x in [0.5, 1.0, 5.0] {
            // g(i√x) = G(-x)
            let gx = g.eval_complex(&Complex::with_val(128, -x), &ctx).unwrap();
            let fx = f.eval(&ctx.float(x), &ctx).unwrap();
            let d = Float::with_val(128, gx.real() - &fx.value).abs();
            assert!(d <= Float::with_val(128, &fx.error_bound + 1e-30), "x = {x}");
        }
    }

    #[test]
    fn zero_pairs_square() {
        let ctx = ctx();
        let pi = ctx.float(Constant::Pi);
        let zs = (1..=3)
            .map(|n| Complex::with_val(128, Float::with_val(128, &pi * n)))
            .collect();
        let f = even_to_genus0(
            &EvenFunction::ZeroPairs {
                zeros: zs,
                strip: ctx.float(0),
                tail: TailModel::None,
                g0: ctx.float(1),
            },
            &ctx,
        )
        .unwrap();
        let z = f.zeros().unwrap();
        let pi2 = Float::with_val(128, pi.square_ref());
        let d = Float::with_val(128, z.zeros()[1].real() - Float::with_val(128, &pi2 * 4u32)).abs();
        assert!(d < 1e-30);

        let single = EvenFunction::ZeroPairs {
            zeros: vec![Complex::with_val(128, (1.0, 0.2))],
            strip: ctx.float(1),
            tail: TailModel::None,
            g0: ctx.float(1),
        };
        let f = even_to_genus0(&single, &ctx).unwrap();
        let l = &f.zeros().unwrap().zeros()[0];
        assert!((l.real().to_f64() - 0.96).abs() < 1e-15);
        assert!((l.imag().to_f64() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn even_hypothesis_rejected() {
        let ctx = ctx();
        let bad = EvenFunction::ZeroPairs {
            zeros: vec![Complex::with_val(128, (1.0, 2.0))],
            strip: ctx.float(5),
            tail: TailModel::None,
            g0: ctx.float(1),
        };
        assert!(matches!(even_to_genus0(&bad, &ctx), Err(Error::EvenHypothesis { index: 0 })));
        let outside = EvenFunction::ZeroPairs {
            zeros: vec![Complex::with_val(128, (3.0, 0.5))],
            strip: ctx.float(0.25),
            tail: TailModel::None,
            g0: ctx.float(1),
        };
        assert!(even_to_genus0(&outside, &ctx).is_err());
    }

    #[test]
    fn sinh_sqrt_product_matches_series() {
        let ctx = ctx();
        let model = expand_preset(&Preset::SinhSqrt, &ctx).unwrap();
        let zeros = model.zeros().unwrap();
        for x in [0.1, 1.0, 10.0] {
            let x = ctx.float(x);
            let series = model.coefficients().unwrap().eval(&x, &ctx).unwrap();
            let product = zero_product_eval(zeros, &ctx.float(1), &x, &ctx).unwrap();
            assert!(series.agrees_with(&product), "x = {x}: {series} vs {product}");
        }
    }

    #[test]
    fn preset_orders_below_one() {
        let ctx = ctx();
        for p in ["sinh_sqrt", "bessel_i:0", "bessel_i:2.5", "q_bessel2_i:0.5:0.5", "ramanujan_aq:0.5"] {
            let m = expand_preset(&p.parse().unwrap(), &ctx).unwrap();
            let e = order_estimate(m.coefficients().unwrap(), 200, &ctx).unwrap();
            assert!(e.estimate < 1.0, "{p}: {}", e.estimate);
        }
    }
}
