//! Dense univariate polynomials and separable fields built from them.

use crate::fem::{Mat3, ScalarFunction, Vec3};

/// Polynomial with coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly1D {
    coeffs: Vec<f64>,
}

impl Poly1D {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly1D { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + other.coeffs.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(1.0), |p, _| p.mul(self))
    }

    /// `∫₀¹ p`.
    pub fn integral_01(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(k, c)| c / (k + 1) as f64).sum()
    }
}

/// Product `c · P(x) Q(y) R(z)`.
#[derive(Debug, Clone)]
pub struct SeparableTerm {
    pub coeff: f64,
    pub factors: [Poly1D; 3],
}

/// Sum of separable terms with closed-form derivatives.
#[derive(Debug, Clone, Default)]
pub struct SeparableField {
    pub terms: Vec<SeparableTerm>,
}

impl SeparableField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coeff: f64, px: Poly1D, py: Poly1D, pz: Poly1D) -> Self {
        SeparableField { terms: vec![SeparableTerm { coeff, factors: [px, py, pz] }] }
    }

    pub fn plus(mut self, other: SeparableField) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        SeparableField {
            terms: self
                .terms
                .iter()
                .map(|t| SeparableTerm { coeff: s * t.coeff, factors: t.factors.clone() })
                .collect(),
        }
    }

    /// `∂^{a+b+c} / ∂x^a ∂y^b ∂z^c`.
    pub fn partial(&self, orders: [usize; 3]) -> Self {
        SeparableField {
            terms: self
                .terms
                .iter()
                .map(|t| SeparableTerm {
                    coeff: t.coeff,
                    factors: std::array::from_fn(|d| t.factors[d].nth_derivative(orders[d])),
                })
                .filter(|t| t.factors.iter().all(|p| !p.is_zero()))
                .collect(),
        }
    }

    /// Restriction to the plane `z = z0`, returned as a field constant in z.
    pub fn restrict_z(&self, z0: f64) -> Self {
        SeparableField {
            terms: self
                .terms
                .iter()
                .map(|t| SeparableTerm {
                    coeff: t.coeff * t.factors[2].eval(z0),
                    factors: [t.factors[0].clone(), t.factors[1].clone(), Poly1D::constant(1.0)],
                })
                .collect(),
        }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.factors[0].eval(x[0]) * t.factors[1].eval(x[1]) * t.factors[2].eval(x[2]))
            .sum()
    }

    pub fn eval_partial(&self, orders: [usize; 3], x: &Vec3) -> f64 {
        self.partial(orders).eval(x)
    }

    pub fn grad(&self, x: &Vec3) -> Vec3 {
        [
            self.eval_partial([1, 0, 0], x),
            self.eval_partial([0, 1, 0], x),
            self.eval_partial([0, 0, 1], x),
        ]
    }

    pub fn hess(&self, x: &Vec3) -> Mat3 {
        let mut h = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in r..3 {
                let mut o = [0; 3];
                o[r] += 1;
                o[c] += 1;
                h[r][c] = self.eval_partial(o, x);
                h[c][r] = h[r][c];
            }
        }
        h
    }

    /// 3D Laplacian.
    pub fn laplacian(&self) -> Self {
        self.partial([2, 0, 0]).plus(self.partial([0, 2, 0])).plus(self.partial([0, 0, 2]))
    }

    /// In-plane bilaplacian `∂⁴ₓ + 2∂²ₓ∂²ᵧ + ∂⁴ᵧ`.
    pub fn bilaplacian_xy(&self) -> Self {
        self.partial([4, 0, 0])
            .plus(self.partial([2, 2, 0]).scaled(2.0))
            .plus(self.partial([0, 4, 0]))
    }

    /// In-plane Laplacian.
    pub fn laplacian_xy(&self) -> Self {
        self.partial([2, 0, 0]).plus(self.partial([0, 2, 0]))
    }
}

impl ScalarFunction for SeparableField {
    fn value(&self, x: &Vec3) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: &Vec3) -> Option<Vec3> {
        Some(self.grad(x))
    }

    fn hessian(&self, x: &Vec3) -> Option<Mat3> {
        Some(self.hess(x))
    }
}
