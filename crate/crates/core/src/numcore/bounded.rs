use std::fmt;

use rug::{Complex, Float};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::to_decimal;

/// A real value with an absolute error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedValue {
    pub value: Float,
    pub error_bound: Float,
}

/// One ulp-scale slack at the precision of `v`.
fn rounding_slack(v: &Float) -> Float {
    let prec = v.prec();
    let mut s = Float::with_val(prec, v.abs_ref());
    s >>= prec as i32 - 2;
    s
}

impl BoundedValue {
    pub fn new(value: Float, error_bound: Float) -> Self {
        let error_bound = if error_bound.is_finite() {
            error_bound.abs()
        } else {
            Float::with_val(value.prec(), rug::float::Special::Infinity)
        };
        Self { value, error_bound }
    }

    pub fn exact(value: Float) -> Self {
        let prec = value.prec();
        Self::new(value, Float::new(prec))
    }

    pub fn prec(&self) -> u32 {
        self.value.prec()
    }

    pub fn lower(&self) -> Float {
        Float::with_val(self.prec(), &self.value - &self.error_bound)
    }

    pub fn upper(&self) -> Float {
        Float::with_val(self.prec(), &self.value + &self.error_bound)
    }

    /// `value - error_bound > 0`.
    pub fn is_certified_positive(&self) -> bool {
        self.lower().is_sign_positive() && !self.lower().is_zero()
    }

    /// `value + error_bound < 0`.
    pub fn is_certified_negative(&self) -> bool {
        let u = self.upper();
        u.is_sign_negative() && !u.is_zero()
    }

    /// True if `x` lies in `[value - bound, value + bound]`.
    pub fn contains(&self, x: &Float) -> bool {
        let d = Float::with_val(self.prec(), &self.value - x).abs();
        d <= self.error_bound
    }

    /// True if the two enclosures intersect (`|a - b| <= e_a + e_b`).
    pub fn agrees_with(&self, other: &BoundedValue) -> bool {
        let prec = self.prec().max(other.prec());
        let d = Float::with_val(prec, &self.value - &other.value).abs();
        let e = Float::with_val(prec, &self.error_bound + &other.error_bound);
        d <= e
    }

    pub fn widen(mut self, extra: &Float) -> Self {
        self.error_bound += Float::with_val(self.prec(), extra.abs_ref());
        self
    }

    pub fn neg(&self) -> Self {
        Self::new(Float::with_val(self.prec(), -&self.value), self.error_bound.clone())
    }

    pub fn add(&self, other: &BoundedValue) -> Self {
        let prec = self.prec().max(other.prec());
        let v = Float::with_val(prec, &self.value + &other.value);
        let mut e = Float::with_val(prec, &self.error_bound + &other.error_bound);
        e += rounding_slack(&v);
        Self::new(v, e)
    }

    pub fn sub(&self, other: &BoundedValue) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &BoundedValue) -> Self {
        let prec = self.prec().max(other.prec());
        let v = Float::with_val(prec, &self.value * &other.value);
        let mut e = Float::with_val(prec, self.value.abs_ref()) * &other.error_bound;
        e += Float::with_val(prec, other.value.abs_ref()) * &self.error_bound;
        e += Float::with_val(prec, &self.error_bound * &other.error_bound);
        e += rounding_slack(&v);
        Self::new(v, e)
    }

    /// Multiplication by an exact scalar.
    pub fn scale(&self, c: &Float) -> Self {
        let prec = self.prec();
        let v = Float::with_val(prec, &self.value * c);
        let mut e = Float::with_val(prec, &self.error_bound * c).abs();
        e += rounding_slack(&v);
        Self::new(v, e)
    }

    /// Folds the difference to a higher-precision reference into the bound.
    ///
    /// The value stays at base precision; the bound becomes
    /// `base.error_bound + |base - reference| + reference.error_bound`.
    pub fn verified_against(self, reference: &BoundedValue) -> Self {
        let prec = self.prec();
        let d = Float::with_val(reference.prec(), &self.value - &reference.value).abs();
        let mut e = self.error_bound.clone();
        e += Float::with_val(prec, &d);
        e += Float::with_val(prec, &reference.error_bound);
        Self::new(self.value, e)
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn error_f64(&self) -> f64 {
        self.error_bound.to_f64()
    }
}

impl fmt::Display for BoundedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ± {}",
            to_decimal(&self.value, 30),
            to_decimal(&self.error_bound, 4)
        )
    }
}

impl Serialize for BoundedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("BoundedValue", 2)?;
        s.serialize_field("value", &to_decimal(&self.value, 40))?;
        s.serialize_field("error_bound", &to_decimal(&self.error_bound, 6))?;
        s.end()
    }
}

/// A complex value with an absolute error bound (on the modulus of the error).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedComplex {
    pub value: Complex,
    pub error_bound: Float,
}

impl BoundedComplex {
    pub fn new(value: Complex, error_bound: Float) -> Self {
        Self {
            value,
            error_bound: error_bound.abs(),
        }
    }

    pub fn real(&self) -> BoundedValue {
        BoundedValue::new(self.value.real().clone(), self.error_bound.clone())
    }

    /// `|Im| <= error_bound`: the imaginary part is indistinguishable from zero.
    pub fn imag_within_bound(&self) -> bool {
        Float::with_val(self.error_bound.prec(), self.value.imag().abs_ref()) <= self.error_bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(v: f64, e: f64) -> BoundedValue {
        BoundedValue::new(Float::with_val(128, v), Float::with_val(128, e))
    }

    #[test]
    fn certified_signs() {
        assert!(bv(1.0, 0.5).is_certified_positive());
        assert!(!bv(1.0, 1.0).is_certified_positive());
        assert!(bv(-1.0, 0.5).is_certified_negative());
        assert!(!bv(-1.0, 2.0).is_certified_negative());
        assert!(!bv(0.0, 0.0).is_certified_positive());
        assert!(!bv(0.0, 0.0).is_certified_negative());
    }

    #[test]
    fn bounds_are_superadditive() {
        let s = bv(1.0, 0.25).add(&bv(2.0, 0.5));
        assert!(s.error_bound >= 0.75);
        let p = bv(2.0, 0.1).mul(&bv(3.0, 0.2));
        // |a| e_b + |b| e_a + e_a e_b = 0.4 + 0.3 + 0.02
        assert!(p.error_bound >= 0.72 - 1e-12);
        assert!(p.contains(&Float::with_val(128, 2.09 * 3.19)));
        assert!(p.contains(&Float::with_val(128, 1.91 * 2.81)));
    }

    #[test]
    fn negative_bound_is_normalised() {
        let v = bv(1.0, -0.5);
        assert_eq!(v.error_bound, 0.5);
    }

    #[test]
    fn verification_includes_difference() {
        let base = bv(1.0, 0.0);
        let hi = bv(1.001, 0.0);
        let v = base.verified_against(&hi);
        assert!(v.contains(&Float::with_val(128, 1.001)));
    }
}
