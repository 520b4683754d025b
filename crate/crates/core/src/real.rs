use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar field used for amplitudes, probabilities and optical parameters.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default + Send + Sync + 'static
{
    /// Amplitudes with a smaller modulus are dropped from sparse states.
    fn prune_threshold() -> Self;

    /// Default tolerance for comparing amplitudes, probabilities and
    /// unitarity.
    fn tolerance() -> Self;

    /// Converts an `f64` literal, panicking only if the type cannot hold it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn prune_threshold() -> Self {
        1e-15
    }

    fn tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn prune_threshold() -> Self {
        1e-7
    }

    fn tolerance() -> Self {
        1e-5
    }
}
