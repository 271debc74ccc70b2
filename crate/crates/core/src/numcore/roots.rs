use rug::Float;

use super::PrecisionContext;
use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket.
///
/// Stops once the bracket is narrower than `2^(-p/2) |hi|` (or when `f`
/// vanishes exactly at a midpoint) and returns the bracket midpoint.
pub fn refine_root<F>(mut f: F, lo: &Float, hi: &Float, ctx: &PrecisionContext) -> Result<Float>
where
    F: FnMut(&Float) -> Result<Float>,
{
    let prec = ctx.prec();
    let mut lo = Float::with_val(prec, lo);
    let mut hi = Float::with_val(prec, hi);
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let f_lo = f(&lo)?;
    let f_hi = f(&hi)?;
    if f_lo.is_zero() {
        return Ok(lo);
    }
    if f_hi.is_zero() {
        return Ok(hi);
    }
    if f_lo.is_sign_negative() == f_hi.is_sign_negative() {
        return Err(Error::NoSignChange {
            lo: lo.to_f64(),
            hi: hi.to_f64(),
        });
    }
    let lo_negative = f_lo.is_sign_negative();
    let width_target = {
        let mut w = Float::with_val(prec, hi.abs_ref());
        w >>= (prec / 2) as i32;
        w
    };
    while Float::with_val(prec, &hi - &lo) >= width_target {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(&mid)?;
        if fm.is_zero() {
            return Ok(mid);
        }
        if fm.is_sign_negative() == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Float::with_val(prec, &lo + &hi) / 2u32)
}
