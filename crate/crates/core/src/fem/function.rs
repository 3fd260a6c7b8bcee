//! Analytic fields used as data and as exact solutions.

use crate::fem::element::{Mat3, Vec3};

/// A scalar field on ℝ³ (plate fields ignore `x[2]`).
///
/// Derivatives are optional; consumers that need them report an error when
/// they are missing.
pub trait ScalarFunction: Send + Sync {
    fn value(&self, x: &Vec3) -> f64;

    fn gradient(&self, _x: &Vec3) -> Option<Vec3> {
        None
    }

    fn hessian(&self, _x: &Vec3) -> Option<Mat3> {
        None
    }
}

impl<F> ScalarFunction for F
where
    F: Fn(&Vec3) -> f64 + Send + Sync,
{
    fn value(&self, x: &Vec3) -> f64 {
        self(x)
    }
}

/// A closure together with its gradient.
pub struct WithGradient<F, G>(pub F, pub G);

impl<F, G> ScalarFunction for WithGradient<F, G>
where
    F: Fn(&Vec3) -> f64 + Send + Sync,
    G: Fn(&Vec3) -> Vec3 + Send + Sync,
{
    fn value(&self, x: &Vec3) -> f64 {
        (self.0)(x)
    }

    fn gradient(&self, x: &Vec3) -> Option<Vec3> {
        Some((self.1)(x))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarFunction for Constant {
    fn value(&self, _x: &Vec3) -> f64 {
        self.0
    }

    fn gradient(&self, _x: &Vec3) -> Option<Vec3> {
        Some([0.0; 3])
    }

    fn hessian(&self, _x: &Vec3) -> Option<Mat3> {
        Some([[0.0; 3]; 3])
    }
}
