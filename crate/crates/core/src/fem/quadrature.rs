//! Collapsed-product (Duffy) Gauss rules on the reference simplices.
//!
//! The rules are tensor Gauss–Legendre rules pulled back to the simplex, so
//! every weight is positive and any exactness degree can be reached. They use
//! more points than the best symmetric rules, which does not matter at the
//! mesh sizes used here.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// Reference tetrahedron with vertices 0, e₁, e₂, e₃.
    Tet,
    /// Reference triangle with vertices 0, e₁, e₂.
    Tri,
}

impl Cell {
    pub fn dim(self) -> usize {
        match self {
            Cell::Tet => 3,
            Cell::Tri => 2,
        }
    }

    pub fn measure(self) -> f64 {
        match self {
            Cell::Tet => 1.0 / 6.0,
            Cell::Tri => 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub cell: Cell,
    /// Reference points; triangles leave the third coordinate at zero.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Rule on `cell` integrating every polynomial of total degree `degree`
/// exactly.
pub fn make_quadrature(cell: Cell, degree: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(Error::InvalidArgument(format!(
            "quadrature degree {degree} outside [1, {MAX_DEGREE}]"
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match cell {
        Cell::Tri => {
            // x = u, y = v (1 - u), J = 1 - u
            let (g, w) = gauss_legendre((degree + 3) / 2);
            for (u, wu) in g.iter().zip(&w) {
                for (v, wv) in g.iter().zip(&w) {
                    points.push([*u, v * (1.0 - u), 0.0]);
                    weights.push(wu * wv * (1.0 - u));
                }
            }
        }
        Cell::Tet => {
            // x = u, y = v (1 - u), z = w (1 - u)(1 - v), J = (1 - u)² (1 - v)
            let (g, w) = gauss_legendre((degree + 4) / 2);
            for (u, wu) in g.iter().zip(&w) {
                for (v, wv) in g.iter().zip(&w) {
                    for (s, ws) in g.iter().zip(&w) {
                        points.push([*u, v * (1.0 - u), s * (1.0 - u) * (1.0 - v)]);
                        weights.push(wu * wv * ws * (1.0 - u) * (1.0 - u) * (1.0 - v));
                    }
                }
            }
        }
    }
    Ok(QuadratureRule {
        cell,
        points,
        weights,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ x^a y^b z^c over the reference simplex: a! b! c! / (a+b+c+d)!.
    fn monomial_integral(cell: Cell, a: u32, b: u32, c: u32) -> f64 {
        let d = cell.dim() as u32;
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + d)
    }

    #[test]
    fn reference_measures() {
        let r = make_quadrature(Cell::Tet, 1).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 1.0 / 6.0).abs() < 1e-15);
        let r = make_quadrature(Cell::Tri, 4).unwrap();
        let v: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(p, w)| w * p[0].powi(2) * p[1].powi(2))
            .sum();
        assert!((v - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_all_monomials_up_to_degree() {
        for cell in [Cell::Tet, Cell::Tri] {
            for degree in 1..=MAX_DEGREE {
                let rule = make_quadrature(cell, degree).unwrap();
                assert!(rule.weights.iter().all(|&w| w > 0.0));
                let cmax = if cell == Cell::Tet { degree } else { 0 };
                for a in 0..=degree {
                    for b in 0..=degree - a {
                        for c in 0..=cmax.min(degree - a - b) {
                            let q: f64 = rule
                                .points
                                .iter()
                                .zip(&rule.weights)
                                .map(|(p, w)| {
                                    w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32)
                                })
                                .sum();
                            let exact = monomial_integral(cell, a as u32, b as u32, c as u32);
                            assert!((q - exact).abs() < 1e-13, "{cell:?} deg {degree}: {a} {b} {c}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_degrees_rejected() {
        assert!(make_quadrature(Cell::Tet, 0).is_err());
        assert!(make_quadrature(Cell::Tri, 9).is_err());
    }
}
