//! Right-hand sides of the coupled problem.

use std::sync::Arc;

use crate::fem::{Constant, ScalarFunction};

/// Fluid body force `f₁`, plate constraint datum `f₂` (in `λ w₁ - w₂ = f₂`)
/// and plate body forcing `f₃`.
#[derive(Clone)]
pub struct LoadSet {
    pub f1: [Arc<dyn ScalarFunction>; 3],
    pub f2: Arc<dyn ScalarFunction>,
    pub f3: Arc<dyn ScalarFunction>,
}

impl LoadSet {
    pub fn zero() -> Self {
        let z: Arc<dyn ScalarFunction> = Arc::new(Constant(0.0));
        LoadSet {
            f1: [z.clone(), z.clone(), z.clone()],
            f2: z.clone(),
            f3: z,
        }
    }
}

impl std::fmt::Debug for LoadSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LoadSet { .. }")
    }
}
