use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Scalar type for probabilities and entropies: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {
    /// Converts a sample count to the scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as Real")
    }

    /// Converts an `f64` constant (tolerances, defaults) to the scalar type.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable as Real")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {}
