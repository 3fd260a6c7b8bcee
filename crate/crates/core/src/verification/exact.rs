//! Polynomial manufactured solution of the coupled problem.

use std::sync::Arc;

use super::poly::{Poly1D, SeparableField};
use crate::error::{Error, Result};
use crate::fem::ScalarFunction;
use crate::loads::LoadSet;

/// Exact fields and the loads that produce them for a given `λ` (ν = 1).
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub lambda: f64,
    pub u: [SeparableField; 3],
    pub p: SeparableField,
    pub w1: SeparableField,
    pub w2: SeparableField,
    pub f1: [SeparableField; 3],
    pub f2: SeparableField,
    pub f3: SeparableField,
}

fn poly(c: &[f64]) -> Poly1D {
    Poly1D::new(c.to_vec())
}

impl ExactSolution {
    /// The benchmark solution: a plate mode odd about `x = 1/2` driving a
    /// divergence-free flow that vanishes on the walls, with zero pressure.
    pub fn benchmark(lambda: f64) -> Self {
        let s = Poly1D::x();
        let one = Poly1D::constant(1.0);
        let sm1 = s.add(&Poly1D::constant(-1.0));
        let q = s.mul(&sm1); // s(s-1)
        let odd = poly(&[-1.0, 2.0]); // 2s-1
        let bx = q.pow(4).mul(&odd); // X
        let by = q.pow(4); // Y
        let cy = q.pow(2).mul(&poly(&[3.0, -14.0, 14.0])); // y²(y-1)²(14y²-14y+3)
        let a = q.pow(3).mul(&poly(&[2.0, -9.0, 9.0])).scale(2.0);
        let b = q.pow(5).scale(0.8);
        let d = q.pow(2).mul(&odd).mul(&poly(&[1.0, -6.0, 6.0])).scale(12.0);
        let e = bx.scale(4.0);
        let z1 = poly(&[0.0, 0.0, -30.0, -60.0, -30.0]);
        let z3 = poly(&[-1.0, 0.0, 0.0, -10.0, -15.0, -6.0]);

        let u1 = SeparableField::term(1.0, a, by.clone(), z1.clone())
            .plus(SeparableField::term(1.0, b, cy.clone(), z1));
        let u3 = SeparableField::term(-1.0, d.clone(), by.clone(), z3.clone())
            .plus(SeparableField::term(-1.0, e, cy.clone(), z3));
        let u = [u1, SeparableField::zero(), u3];
        let p = SeparableField::zero();
        let w1 = SeparableField::term(-1.0, bx.clone(), by.clone(), one.clone());
        let w2 = SeparableField::term(1.0, d, by, one.clone())
            .plus(SeparableField::term(4.0, bx, cy, one));
        Self::from_fields(lambda, u, p, w1, w2)
    }

    /// Loads for arbitrary smooth fields:
    /// `f₁ = λu - Δu + ∇p`, `f₂ = λw₁ - w₂`, `f₃ = λw₂ + Δ²w₁ - p|_{z=0}`.
    pub fn from_fields(
        lambda: f64,
        u: [SeparableField; 3],
        p: SeparableField,
        w1: SeparableField,
        w2: SeparableField,
    ) -> Self {
        let f1 = std::array::from_fn(|c| {
            let mut o = [0; 3];
            o[c] = 1;
            u[c].scaled(lambda)
                .plus(u[c].laplacian().scaled(-1.0))
                .plus(p.partial(o))
        });
        let f2 = w1.scaled(lambda).plus(w2.scaled(-1.0));
        let f3 = w2
            .scaled(lambda)
            .plus(w1.bilaplacian_xy())
            .plus(p.restrict_z(0.0).scaled(-1.0));
        ExactSolution { lambda, u, p, w1, w2, f1, f2, f3 }
    }

    pub fn loads(&self) -> LoadSet {
        let arc = |f: &SeparableField| -> Arc<dyn ScalarFunction> { Arc::new(f.clone()) };
        LoadSet {
            f1: [arc(&self.f1[0]), arc(&self.f1[1]), arc(&self.f1[2])],
            f2: arc(&self.f2),
            f3: arc(&self.f3),
        }
    }

    /// The benchmark solution, rejected unless every closed-form evaluator
    /// agrees with finite differences.
    pub fn validated(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("λ must be positive, got {lambda}")));
        }
        let ex = Self::benchmark(lambda);
        super::fd::validate(&ex)?;
        Ok(ex)
    }

    pub fn u_functions(&self) -> [&dyn ScalarFunction; 3] {
        [&self.u[0], &self.u[1], &self.u[2]]
    }
}

/// Loads of the benchmark solution, after the finite-difference gate.
pub fn build_loads(lambda: f64) -> Result<LoadSet> {
    Ok(ExactSolution::validated(lambda)?.loads())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<[f64; 3]> {
        let mut pts = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    pts.push([i as f64 / n as f64, j as f64 / n as f64, -(k as f64) / n as f64]);
                }
            }
        }
        pts
    }

    #[test]
    fn velocity_is_solenoidal_and_clamped() {
        let ex = ExactSolution::benchmark(1.0);
        let scale = grid(6).iter().map(|x| ex.u[0].grad(x)[0].abs()).fold(0.0, f64::max);
        assert!(scale > 1e-4);
        for x in grid(7) {
            let div = ex.u[0].grad(&x)[0] + ex.u[1].grad(&x)[1] + ex.u[2].grad(&x)[2];
            assert!(div.abs() < 1e-15, "div {div} at {x:?}");
            let wall = x[0] == 0.0 || x[0] == 1.0 || x[1] == 0.0 || x[1] == 1.0 || x[2] == -1.0;
            for c in 0..3 {
                let v = ex.u[c].eval(&x);
                if wall || (x[2] == 0.0 && c < 2) {
                    assert!(v.abs() < 1e-16);
                }
            }
            if x[2] == 0.0 {
                assert!((ex.u[2].eval(&x) - ex.w2.eval(&x)).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn loads_vanish_on_the_plate_rim() {
        let loads = build_loads(1.0).unwrap();
        for t in [0.0, 0.3, 0.75] {
            for x in [[0.0, t, 0.0], [1.0, t, 0.0], [t, 0.0, 0.0], [t, 1.0, 0.0]] {
                assert!(loads.f2.value(&x).abs() < 1e-16);
            }
        }
        assert!(build_loads(-1.0).is_err());
    }

    #[test]
    fn laplacian_of_velocity_is_tangential_on_walls() {
        let ex = ExactSolution::benchmark(1.0);
        let lap: Vec<_> = ex.u.iter().map(|u| u.laplacian()).collect();
        for t in [0.1, 0.4, 0.9] {
            for s in [0.2, 0.6] {
                for (x, normal) in [([0.0, t, -s], 0), ([1.0, t, -s], 0), ([t, 0.0, -s], 1), ([t, 1.0, -s], 1), ([t, s, -1.0], 2)] {
                    assert!(lap[normal].eval(&x).abs() < 1e-13, "{x:?}");
                }
            }
        }
    }

    #[test]
    fn plate_fields_clamped_with_zero_mean() {
        let ex = ExactSolution::benchmark(1.0);
        for t in [0.0, 0.2, 0.5, 1.0] {
            for edge in [[0.0, t, 0.0], [1.0, t, 0.0], [t, 0.0, 0.0], [t, 1.0, 0.0]] {
                assert!(ex.w1.eval(&edge).abs() < 1e-16);
                assert!(ex.w2.eval(&edge).abs() < 1e-16);
                let g = ex.w1.grad(&edge);
                assert!(g[0].abs() < 1e-16 && g[1].abs() < 1e-16);
            }
        }
        let mean: f64 = ex
            .w2
            .terms
            .iter()
            .map(|t| t.coeff * t.factors[0].integral_01() * t.factors[1].integral_01())
            .sum();
        assert!(mean.abs() < 1e-16);
        // w₂ = -Δw₁ for this particular mode
        let lap = ex.w1.laplacian_xy();
        for x in grid(5) {
            assert!((lap.eval(&x) + ex.w2.eval(&x)).abs() < 1e-15);
        }
    }
}
