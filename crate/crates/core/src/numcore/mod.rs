//! Arbitrary-precision building blocks: precision policy, values with error
//! bounds, series summation with analytic tails, trapezoid quadrature on
//! `(0, ∞)` after `t = e^u`, and bisection.

mod bounded;
mod precision;
mod quad;
mod roots;
mod series;

pub use bounded::{BoundedComplex, BoundedValue};
pub use precision::PrecisionContext;
pub use quad::{integrate_0inf, trapezoid, QuadratureOutcome, QuadratureSpec, VectorQuadrature};
pub use roots::refine_root;
pub use series::{sum_series, SeriesSum};

use rug::Float;

/// `n!` as a float at precision `prec`.
pub fn factorial(n: u32, prec: u32) -> Float {
    Float::with_val(prec, Float::factorial(n))
}

/// Binomial coefficient `C(n, k)` as a float.
pub fn binomial(n: u32, k: u32, prec: u32) -> Float {
    if k > n {
        return Float::new(prec);
    }
    let mut acc = Float::with_val(prec, 1);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Rising factorial `k (k+1) ... (k+m-1)`; equals 1 for `m = 0`.
pub fn rising(k: u32, m: u32, prec: u32) -> Float {
    let mut acc = Float::with_val(prec, 1);
    for i in 0..m {
        acc *= k + i;
    }
    acc
}

/// Decimal rendering used by reports: `digits` significant digits, scientific notation.
pub fn to_decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits))
}
