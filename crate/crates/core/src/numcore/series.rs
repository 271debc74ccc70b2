use rug::{Complex, Float};

use super::{BoundedComplex, PrecisionContext};
use crate::error::{Error, Result};

/// Result of [`sum_series`].
#[derive(Clone, Debug)]
pub struct SeriesSum {
    pub sum: BoundedComplex,
    /// Number of terms actually added.
    pub terms: usize,
}

/// Sums `Σ_{n≥0} term(n)` until the caller's analytic remainder bound drops
/// below the precision target.
///
/// `tail_bound(N)` must bound `Σ_{n≥N} |term(n)|` and be nonincreasing in `N`.
/// Summation stops before index `N` once `tail_bound(N) = 0` or
/// `tail_bound(N) < 2^-(p-g) |partial sum|`. The returned error bound is the
/// remainder bound plus `(N+1)·eps·Σ|term|` rounding slack.
pub fn sum_series<T, B>(
    mut term: T,
    mut tail_bound: B,
    cap: usize,
    ctx: &PrecisionContext,
) -> Result<SeriesSum>
where
    T: FnMut(usize) -> Complex,
    B: FnMut(usize) -> Float,
{
    let prec = ctx.prec();
    let target = ctx.target();
    let mut sum = Complex::new(prec);
    let mut abs_sum = Float::new(prec);
    let mut n = 0usize;
    loop {
        let tail = tail_bound(n);
        let modulus = Float::with_val(prec, sum.abs_ref());
        if tail.is_zero() || tail < Float::with_val(prec, &target * &modulus) {
            let mut slack = ctx.eps() * &abs_sum;
            slack *= (n + 1) as u64;
            slack += &tail;
            return Ok(SeriesSum {
                sum: BoundedComplex::new(sum, slack),
                terms: n,
            });
        }
        if n >= cap {
            return Err(Error::NonConvergence {
                cap,
                tail: tail.to_f64(),
            });
        }
        let t = term(n);
        abs_sum += Float::with_val(prec, t.abs_ref());
        sum += t;
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    #[test]
    fn geometric_series() {
        let ctx = PrecisionContext::with_bits(128).unwrap();
        let p = ctx.prec();
        let s = sum_series(
            |n| Complex::with_val(p, Float::with_val(p, 2).pow(-(n as i32))),
            |n| Float::with_val(p, 2).pow(1 - n as i32),
            1000,
            &ctx,
        )
        .unwrap();
        let two = ctx.float(2);
        assert!(s.sum.real().contains(&two));
        assert!(s.sum.error_bound < 1e-28);
        assert!(s.sum.imag_within_bound());
    }

    #[test]
    fn zero_series() {
        let ctx = PrecisionContext::default();
        let p = ctx.prec();
        let s = sum_series(|_| Complex::new(p), |_| Float::new(p), 10, &ctx).unwrap();
        assert!(s.sum.value.real().is_zero());
        assert!(s.sum.error_bound.is_zero());
        assert_eq!(s.terms, 0);
    }

    #[test]
    fn cap_is_reported() {
        let ctx = PrecisionContext::default();
        let p = ctx.prec();
        // harmonic-like tail that never gets small enough
        let r = sum_series(
            |n| Complex::with_val(p, 1.0 / (n as f64 + 1.0)),
            |_| Float::with_val(p, 1),
            50,
            &ctx,
        );
        assert!(matches!(r, Err(Error::NonConvergence { cap: 50, .. })));
    }
}
