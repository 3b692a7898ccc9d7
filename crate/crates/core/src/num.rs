//! Scalar abstraction for the numerical core.
//!
//! The statistics routines are written once against [`Real`] and work for
//! both `f32` and `f64`. Everything else in the crate uses the concrete
//! [`crate::Scalar`] alias.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the statistics core is generic over.
///
/// Implemented for `f32` and `f64` via the blanket impl below; the bound
/// set is the minimum the distribution code needs (float arithmetic,
/// conversion from literals and counts, threading, debug printing).
pub trait Real: Float + FromPrimitive + core::fmt::Debug + Send + Sync + 'static {
    /// Lift an `f64` constant into this scalar type.
    ///
    /// Panics if the value is not representable, which cannot happen for
    /// the finite literals this crate passes in.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert")
    }

    /// Lift a sample count into this scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("sample count must convert")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + core::fmt::Debug + Send + Sync + 'static {}

#[cfg(test)]
mod tests {
    use super::Real;

    fn machine_eps<F: Real>() -> F {
        F::epsilon()
    }

    #[test]
    fn real_is_usable_at_both_widths() {
        assert_eq!(f32::of(1.5), 1.5f32);
        assert_eq!(f64::of(1.5), 1.5f64);
        assert_eq!(f64::of_usize(7), 7.0);
        assert!(machine_eps::<f32>() > machine_eps::<f64>() as f32);
    }
}
