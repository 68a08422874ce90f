use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used by the numeric routines: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static {
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
