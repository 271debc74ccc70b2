//! Truncated Taylor expansions ("jets") over arbitrary-precision complex
//! scalars.
//!
//! A jet of order `K` at base point `x0` stores `c_0..c_K` with
//! `c_j = f^{(j)}(x0)/j!`. Arithmetic is closed on jets of equal order and base
//! point; mixing orders or base points is a programming error and panics.

use std::ops::{Add, Mul, Neg, Sub};

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numcore::factorial;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    base: Complex,
    coeffs: Vec<Complex>,
}

impl Jet {
    pub fn from_coeffs(base: Complex, coeffs: Vec<Complex>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least the constant term");
        Self { base, coeffs }
    }

    /// Real coefficients at a real base point.
    pub fn from_real(base: &Float, coeffs: Vec<Float>) -> Self {
        let prec = base.prec();
        Self::from_coeffs(
            Complex::with_val(prec, base),
            coeffs.into_iter().map(|c| Complex::with_val(prec, c)).collect(),
        )
    }

    pub fn constant(value: Complex, base: Complex, order: usize) -> Self {
        let prec = value.prec().0;
        let mut coeffs = vec![Complex::new(prec); order + 1];
        coeffs[0] = value;
        Self { base, coeffs }
    }

    /// The identity function `x ↦ x` expanded at `base`.
    pub fn variable(base: Complex, order: usize) -> Self {
        let prec = base.prec().0;
        let mut coeffs = vec![Complex::new(prec); order + 1];
        coeffs[0] = base.clone();
        if order >= 1 {
            coeffs[1] = Complex::with_val(prec, 1);
        }
        Self { base, coeffs }
    }

    pub fn base(&self) -> &Complex {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> &Complex {
        &self.coeffs[j]
    }

    pub fn prec(&self) -> u32 {
        self.coeffs[0].prec().0
    }

    /// `f^{(j)}(x0) = j! c_j`.
    pub fn derivative(&self, j: usize) -> Complex {
        let f = factorial(j as u32, self.prec());
        Complex::with_val(self.prec(), &self.coeffs[j] * f)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        Jet {
            base: self.base.clone(),
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    pub fn scale(&self, c: &Complex) -> Jet {
        let prec = self.prec();
        Jet {
            base: self.base.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|a| Complex::with_val(prec, a * c))
                .collect(),
        }
    }

    /// Jet of `f'`, one order lower.
    pub fn differentiate(&self) -> Jet {
        let prec = self.prec();
        let k = self.order();
        let coeffs = if k == 0 {
            vec![Complex::new(prec)]
        } else {
            (0..k)
                .map(|j| Complex::with_val(prec, &self.coeffs[j + 1] * (j as u32 + 1)))
                .collect()
        };
        Jet {
            base: self.base.clone(),
            coeffs,
        }
    }

    /// Power-series division; the divisor's constant term must be nonzero.
    pub fn try_div(&self, rhs: &Jet) -> Result<Jet> {
        self.check_compatible(rhs);
        if rhs.coeffs[0].is_zero() {
            return Err(Error::ZeroDivisor);
        }
        let prec = self.prec();
        let k = self.order();
        let inv0 = Complex::with_val(prec, rhs.coeffs[0].recip_ref());
        let mut q: Vec<Complex> = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let mut acc = self.coeffs[j].clone();
            for (i, qi) in q.iter().enumerate() {
                acc -= Complex::with_val(prec, qi * &rhs.coeffs[j - i]);
            }
            q.push(acc * &inv0);
        }
        Ok(Jet {
            base: self.base.clone(),
            coeffs: q,
        })
    }

    /// Jet of `f'/f` of order `K - 1`.
    pub fn logderiv(&self) -> Result<Jet> {
        if self.order() < 1 {
            return Err(Error::InsufficientJetOrder { have: 0, need: 1 });
        }
        if self.coeffs[0].is_zero() {
            return Err(Error::ZeroDivisor);
        }
        let d = self.differentiate();
        d.try_div(&self.truncate(self.order() - 1))
    }

    /// `T g = (x g)'`, one order lower: `(Tg)_j = (j+1)(x0 g_{j+1} + g_j)`.
    pub fn euler_op(&self) -> Result<Jet> {
        let k = self.order();
        if k < 1 {
            return Err(Error::InsufficientJetOrder { have: 0, need: 1 });
        }
        let prec = self.prec();
        let coeffs = (0..k)
            .map(|j| {
                let mut c = Complex::with_val(prec, &self.base * &self.coeffs[j + 1]);
                c += &self.coeffs[j];
                c * (j as u32 + 1)
            })
            .collect();
        Ok(Jet {
            base: self.base.clone(),
            coeffs,
        })
    }

    /// All coefficients have `|Im c_j| <= tol · max(1, |c_j|)`.
    pub fn is_real(&self, tol: &Float) -> bool {
        self.coeffs.iter().all(|c| {
            let m = Float::with_val(self.prec(), c.abs_ref()).max(&Float::with_val(self.prec(), 1));
            Float::with_val(self.prec(), c.imag().abs_ref()) <= Float::with_val(self.prec(), tol * &m)
        })
    }

    fn check_compatible(&self, rhs: &Jet) {
        assert_eq!(self.order(), rhs.order(), "jet orders differ");
        assert!(self.base == rhs.base, "jet base points differ");
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.check_compatible(rhs);
        let prec = self.prec();
        Jet {
            base: self.base.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| Complex::with_val(prec, a + b))
                .collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self + &(-rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let prec = self.prec();
        Jet {
            base: self.base.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|a| Complex::with_val(prec, -a))
                .collect(),
        }
    }
}

/// Cauchy product truncated at the common order.
impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.check_compatible(rhs);
        let prec = self.prec();
        let k = self.order();
        let coeffs = (0..=k)
            .map(|j| {
                let mut acc = Complex::new(prec);
                for i in 0..=j {
                    acc += Complex::with_val(prec, &self.coeffs[i] * &rhs.coeffs[j - i]);
                }
                acc
            })
            .collect();
        Jet {
            base: self.base.clone(),
            coeffs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: u32 = 128;

    fn c(v: f64) -> Complex {
        Complex::with_val(P, v)
    }

    fn real_jet(base: f64, coeffs: &[f64]) -> Jet {
        Jet::from_coeffs(c(base), coeffs.iter().map(|&v| c(v)).collect())
    }

    fn assert_coeffs(j: &Jet, expected: &[f64]) {
        assert_eq!(j.order() + 1, expected.len());
        for (a, e) in j.coeffs().iter().zip(expected) {
            let d = Float::with_val(P, (a.clone() - c(*e)).abs_ref());
            assert!(d < 1e-30, "{a} vs {e}");
        }
    }

    #[test]
    fn product_of_linear_jets() {
        let x = Jet::variable(c(0.0), 2);
        let one = Jet::constant(c(1.0), c(0.0), 2);
        let p = &(&one + &x) * &(&one - &x);
        assert_coeffs(&p, &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn geometric_division() {
        let x = Jet::variable(c(0.0), 3);
        let one = Jet::constant(c(1.0), c(0.0), 3);
        let q = one.try_div(&(&one + &x)).unwrap();
        assert_coeffs(&q, &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn division_by_zero_constant_term() {
        let x = Jet::variable(c(0.0), 3);
        let one = Jet::constant(c(1.0), c(0.0), 3);
        assert!(matches!(one.try_div(&x), Err(Error::ZeroDivisor)));
    }

    #[test]
    fn logderiv_of_one_plus_z() {
        // f = 1 + z at x = 1: f'/f = 1/(1+x) = 1/2 - (x-1)/4 + (x-1)^2/8 - ...
        let f = real_jet(1.0, &[2.0, 1.0, 0.0, 0.0, 0.0]);
        assert_coeffs(&f.logderiv().unwrap(), &[0.5, -0.25, 0.125, -0.0625]);
        // direct quotient of f' by f gives the same expansion
        let fp = real_jet(1.0, &[1.0, 0.0, 0.0, 0.0]);
        let q = fp.try_div(&f.truncate(3)).unwrap();
        assert_coeffs(&q, &[0.5, -0.25, 0.125, -0.0625]);
    }

    #[test]
    fn logderiv_of_exp_is_one() {
        let mut fact = Float::with_val(P, 1);
        let coeffs: Vec<Complex> = (0..=6u32)
            .map(|j| {
                if j > 0 {
                    fact *= j;
                }
                Complex::with_val(P, Float::with_val(P, 1) / &fact)
            })
            .collect();
        let f = Jet::from_coeffs(c(0.0), coeffs);
        assert_coeffs(&f.logderiv().unwrap(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn logderiv_needs_order_and_nonzero() {
        assert!(real_jet(0.0, &[1.0]).logderiv().is_err());
        assert!(real_jet(0.0, &[0.0, 1.0]).logderiv().is_err());
    }

    #[test]
    fn euler_operator_on_inverse() {
        // g = 1/(1+x) at x = 1; T g = 1/(1+x)^2 → 1/4 at x = 1
        let g = real_jet(1.0, &[0.5, -0.25, 0.125]);
        let tg = g.euler_op().unwrap();
        assert_eq!(tg.order(), 1);
        let d = Float::with_val(P, (tg.coeff(0).clone() - c(0.25)).abs_ref());
        assert!(d < 1e-30);
    }

    fn small_jet() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-4.0f64..4.0, 5)
    }

    proptest! {
        #[test]
        fn logderiv_is_scale_invariant(a in small_jet(), s in 0.01f64..100.0) {
            let mut a = a;
            a[0] = a[0].abs() + 0.5;
            let f = real_jet(0.3, &a);
            let g = f.scale(&c(s));
            let lf = f.logderiv().unwrap();
            let lg = g.logderiv().unwrap();
            for (x, y) in lf.coeffs().iter().zip(lg.coeffs()) {
                let d = Float::with_val(P, (x.clone() - y).abs_ref());
                let m = Float::with_val(P, x.abs_ref()).max(&Float::with_val(P, 1));
                prop_assert!(d <= m * 1e-30);
            }
        }

        #[test]
        fn leibniz_rule(a in small_jet(), b in small_jet()) {
            let ja = real_jet(0.0, &a);
            let jb = real_jet(0.0, &b);
            let p = &ja * &jb;
            for j in 0..=4usize {
                let mut expect = Complex::new(P);
                for i in 0..=j {
                    let binom = crate::numcore::binomial(j as u32, i as u32, P);
                    expect += ja.derivative(i) * jb.derivative(j - i) * binom;
                }
                let d = Float::with_val(P, (p.derivative(j) - expect).abs_ref());
                prop_assert!(d < 1e-25);
            }
        }

        #[test]
        fn real_inputs_stay_real(a in small_jet(), b in small_jet()) {
            let mut b = b;
            b[0] = b[0].abs() + 0.5;
            let ja = real_jet(0.7, &a);
            let jb = real_jet(0.7, &b);
            let tol = Float::with_val(P, 0);
            prop_assert!((&ja * &jb).is_real(&tol));
            prop_assert!(ja.try_div(&jb).unwrap().is_real(&tol));
            prop_assert!(jb.logderiv().unwrap().is_real(&tol));
        }
    }
}
