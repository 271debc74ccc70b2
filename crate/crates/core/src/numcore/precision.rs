use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};

/// Working precision and verification policy shared by every evaluation.
///
/// Results target a relative accuracy of `2^-(precision_bits - guard_bits)`.
/// When `verify_by_recompute` is set, every bounded result is recomputed at
/// twice the precision and the observed difference is folded into its error
/// bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrecisionContext {
    pub precision_bits: u32,
    pub guard_bits: u32,
    pub verify_by_recompute: bool,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            precision_bits: 192,
            guard_bits: 32,
            verify_by_recompute: true,
        }
    }
}

impl PrecisionContext {
    pub fn new(precision_bits: u32, guard_bits: u32, verify_by_recompute: bool) -> Result<Self> {
        if precision_bits < 64 {
            return Err(Error::InvalidPrecision(format!(
                "precision_bits must be >= 64, got {precision_bits}"
            )));
        }
        if guard_bits < 16 {
            return Err(Error::InvalidPrecision(format!(
                "guard_bits must be >= 16, got {guard_bits}"
            )));
        }
        if guard_bits >= precision_bits {
            return Err(Error::InvalidPrecision(
                "guard_bits must be smaller than precision_bits".into(),
            ));
        }
        Ok(Self {
            precision_bits,
            guard_bits,
            verify_by_recompute,
        })
    }

    pub fn with_bits(precision_bits: u32) -> Result<Self> {
        Self::new(precision_bits, 32, true)
    }

    pub fn prec(&self) -> u32 {
        self.precision_bits
    }

    /// Reference context at twice the precision, without nested verification.
    pub fn doubled(&self) -> Self {
        self.scaled(2)
    }

    pub fn scaled(&self, factor: u32) -> Self {
        Self {
            precision_bits: self.precision_bits * factor,
            guard_bits: self.guard_bits,
            verify_by_recompute: false,
        }
    }

    /// Context widened for derivative order `n`: `ceil(n log2 n)` extra bits.
    pub fn for_order(&self, n: u32) -> Self {
        let extra = if n < 2 {
            0
        } else {
            (f64::from(n) * f64::from(n).log2()).ceil() as u32
        };
        Self {
            precision_bits: self.precision_bits + extra,
            ..self.clone()
        }
    }

    /// Relative accuracy target `2^-(p - g)`.
    pub fn target(&self) -> Float {
        let e = -(self.precision_bits as i32 - self.guard_bits as i32);
        Float::with_val(self.prec(), Float::i_exp(1, e))
    }

    /// Unit roundoff `2^(1 - p)`.
    pub fn eps(&self) -> Float {
        Float::with_val(self.prec(), Float::i_exp(1, 1 - self.precision_bits as i32))
    }

    pub fn float<T>(&self, v: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.prec(), v)
    }

    pub fn zero(&self) -> Float {
        Float::new(self.prec())
    }

    /// Parses a decimal string at working precision.
    pub fn parse(&self, s: &str) -> Result<Float> {
        Float::parse(s.trim())
            .map(|p| Float::with_val(self.prec(), p))
            .map_err(|e| Error::InvalidParameter(format!("cannot parse '{s}' as a number: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_precision() {
        assert!(PrecisionContext::new(32, 16, true).is_err());
        assert!(PrecisionContext::new(128, 8, true).is_err());
        assert!(PrecisionContext::new(64, 16, false).is_ok());
    }

    #[test]
    fn order_widening() {
        let ctx = PrecisionContext::default();
        assert_eq!(ctx.for_order(0).precision_bits, 192);
        assert_eq!(ctx.for_order(8).precision_bits, 192 + 24);
        assert_eq!(ctx.for_order(12).precision_bits, 192 + 44);
    }

    #[test]
    fn target_is_power_of_two() {
        let ctx = PrecisionContext::new(128, 32, false).unwrap();
        assert_eq!(ctx.target(), Float::with_val(128, Float::i_exp(1, -96)));
    }
}
