//! Finite-difference validation of the closed-form evaluators.
//!
//! Every derivative level is compared with central differences of the level
//! below it at random interior points. The gate runs before a manufactured
//! solution is used, and catches transcription slips in the long polynomial
//! expressions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::exact::ExactSolution;
use crate::error::{Error, Result};
use crate::fem::{Mat3, Vec3};

/// First-derivative step.
pub const FD_STEP: f64 = 1e-5;
/// Step of the fourth-order second-difference stencil.
pub const FD_STEP_SECOND: f64 = 1e-3;
/// Step of the composed Laplacian used for `Δ²`.
pub const FD_STEP_BILAPLACIAN: f64 = 5e-3;
pub const DERIVATIVE_RTOL: f64 = 1e-6;
pub const BILAPLACIAN_RTOL: f64 = 1e-5;
pub const N_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    U(usize),
    P,
    W1,
    W2,
}

impl Field {
    pub const ALL: [Field; 6] = [Field::U(0), Field::U(1), Field::U(2), Field::P, Field::W1, Field::W2];

    fn is_plate(self) -> bool {
        matches!(self, Field::W1 | Field::W2)
    }

    fn name(self) -> String {
        match self {
            Field::U(c) => format!("u{}", c + 1),
            Field::P => "p".into(),
            Field::W1 => "w1".into(),
            Field::W2 => "w2".into(),
        }
    }
}

/// Closed-form evaluators of a manufactured solution.
pub trait Evaluators {
    fn lambda(&self) -> f64;
    fn value(&self, f: Field, x: &Vec3) -> f64;
    fn gradient(&self, f: Field, x: &Vec3) -> Vec3;
    fn hessian(&self, f: Field, x: &Vec3) -> Mat3;
    /// In-plane Laplacian of `w₁`.
    fn laplacian_w1(&self, x: &Vec3) -> f64;
    fn bilaplacian_w1(&self, x: &Vec3) -> f64;
    fn f1(&self, c: usize, x: &Vec3) -> f64;
    fn f2(&self, x: &Vec3) -> f64;
    fn f3(&self, x: &Vec3) -> f64;
}

impl ExactSolution {
    fn field(&self, f: Field) -> &super::poly::SeparableField {
        match f {
            Field::U(c) => &self.u[c],
            Field::P => &self.p,
            Field::W1 => &self.w1,
            Field::W2 => &self.w2,
        }
    }
}

impl Evaluators for ExactSolution {
    fn lambda(&self) -> f64 {
        self.lambda
    }
    fn value(&self, f: Field, x: &Vec3) -> f64 {
        self.field(f).eval(x)
    }
    fn gradient(&self, f: Field, x: &Vec3) -> Vec3 {
        self.field(f).grad(x)
    }
    fn hessian(&self, f: Field, x: &Vec3) -> Mat3 {
        self.field(f).hess(x)
    }
    fn laplacian_w1(&self, x: &Vec3) -> f64 {
        self.w1.laplacian_xy().eval(x)
    }
    fn bilaplacian_w1(&self, x: &Vec3) -> f64 {
        self.w1.bilaplacian_xy().eval(x)
    }
    fn f1(&self, c: usize, x: &Vec3) -> f64 {
        self.f1[c].eval(x)
    }
    fn f2(&self, x: &Vec3) -> f64 {
        self.f2.eval(x)
    }
    fn f3(&self, x: &Vec3) -> f64 {
        self.f3.eval(x)
    }
}

#[derive(Debug, Clone)]
pub struct FdCheck {
    pub name: String,
    /// Largest `|closed - oracle| / (|oracle| + rms)` over the sample points.
    pub worst: f64,
    pub tolerance: f64,
}

impl FdCheck {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone, Default)]
pub struct FdReport {
    pub checks: Vec<FdCheck>,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(FdCheck::passed)
    }

    pub fn failures(&self) -> Vec<&FdCheck> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }
}

fn shift(x: &Vec3, d: usize, t: f64) -> Vec3 {
    let mut y = *x;
    y[d] += t;
    y
}

/// Second-order central first derivative.
fn d1(f: &dyn Fn(&Vec3) -> f64, x: &Vec3, d: usize, h: f64) -> f64 {
    (f(&shift(x, d, h)) - f(&shift(x, d, -h))) / (2.0 * h)
}

/// Fourth-order central second derivative.
fn d2(f: &dyn Fn(&Vec3) -> f64, x: &Vec3, d: usize, h: f64) -> f64 {
    (-f(&shift(x, d, 2.0 * h)) + 16.0 * f(&shift(x, d, h)) - 30.0 * f(x) + 16.0 * f(&shift(x, d, -h))
        - f(&shift(x, d, -2.0 * h)))
        / (12.0 * h * h)
}

fn lap(f: &dyn Fn(&Vec3) -> f64, x: &Vec3, dims: usize, h: f64) -> f64 {
    (0..dims).map(|d| d2(f, x, d, h)).sum()
}

/// Compares closed forms with oracles over the sample points.
fn compare(name: String, tolerance: f64, pairs: &[(f64, f64)]) -> FdCheck {
    let rms = (pairs.iter().map(|(_, o)| o * o).sum::<f64>() / pairs.len() as f64).sqrt();
    let worst = pairs
        .iter()
        .map(|(c, o)| {
            let denom = o.abs() + rms;
            if denom == 0.0 {
                if *c == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                (c - o).abs() / denom
            }
        })
        .fold(0.0, f64::max);
    FdCheck { name, worst, tolerance }
}

/// Random points kept `margin` away from the box faces.
pub fn interior_points(n: usize, seed: u64, margin: f64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            [
                rng.gen_range(margin..1.0 - margin),
                rng.gen_range(margin..1.0 - margin),
                rng.gen_range(-1.0 + margin..-margin),
            ]
        })
        .collect()
}

/// Runs every check at `N_POINTS` seeded random interior points.
pub fn run_fd_gate(ev: &dyn Evaluators, seed: u64) -> FdReport {
    let pts = interior_points(N_POINTS, seed, 0.05);
    let lambda = ev.lambda();
    let mut report = FdReport::default();
    for f in Field::ALL {
        let dims = if f.is_plate() { 2 } else { 3 };
        let value = |x: &Vec3| ev.value(f, x);
        for d in 0..dims {
            let pairs: Vec<_> = pts.iter().map(|x| (ev.gradient(f, x)[d], d1(&value, x, d, FD_STEP))).collect();
            report.checks.push(compare(format!("d{}/dx{}", f.name(), d + 1), DERIVATIVE_RTOL, &pairs));
            for e in 0..dims {
                let g = |x: &Vec3| ev.gradient(f, x)[e];
                let pairs: Vec<_> = pts.iter().map(|x| (ev.hessian(f, x)[d][e], d1(&g, x, d, FD_STEP))).collect();
                report
                    .checks
                    .push(compare(format!("d2{}/dx{}dx{}", f.name(), d + 1, e + 1), DERIVATIVE_RTOL, &pairs));
            }
        }
    }
    let hess_trace = |x: &Vec3| {
        let h = ev.hessian(Field::W1, x);
        h[0][0] + h[1][1]
    };
    let pairs: Vec<_> = pts.iter().map(|x| (ev.laplacian_w1(x), hess_trace(x))).collect();
    report.checks.push(compare("lap w1".into(), DERIVATIVE_RTOL, &pairs));
    let lap_w1 = |x: &Vec3| ev.laplacian_w1(x);
    let pairs: Vec<_> = pts.iter().map(|x| (ev.bilaplacian_w1(x), lap(&lap_w1, x, 2, FD_STEP_SECOND))).collect();
    report.checks.push(compare("bilap w1".into(), DERIVATIVE_RTOL, &pairs));

    for c in 0..3 {
        let u = |x: &Vec3| ev.value(Field::U(c), x);
        let pairs: Vec<_> = pts
            .iter()
            .map(|x| {
                let oracle = lambda * u(x) - lap(&u, x, 3, FD_STEP_SECOND) + ev.gradient(Field::P, x)[c];
                (ev.f1(c, x), oracle)
            })
            .collect();
        report.checks.push(compare(format!("f1[{}]", c + 1), DERIVATIVE_RTOL, &pairs));
    }
    let pairs: Vec<_> = pts
        .iter()
        .map(|x| (ev.f2(x), lambda * ev.value(Field::W1, x) - ev.value(Field::W2, x)))
        .collect();
    report.checks.push(compare("f2".into(), DERIVATIVE_RTOL, &pairs));
    let w1 = |x: &Vec3| ev.value(Field::W1, x);
    let lap_fd = |x: &Vec3| lap(&w1, x, 2, FD_STEP_BILAPLACIAN);
    let pairs: Vec<_> = pts
        .iter()
        .map(|x| {
            let top = [x[0], x[1], 0.0];
            let oracle = lambda * ev.value(Field::W2, x) + lap(&lap_fd, x, 2, FD_STEP_BILAPLACIAN)
                - ev.value(Field::P, &top);
            (ev.f3(x), oracle)
        })
        .collect();
    report.checks.push(compare("f3".into(), BILAPLACIAN_RTOL, &pairs));
    report
}

/// Runs the gate and turns a failure into an error naming the bad checks.
pub fn validate(ev: &dyn Evaluators) -> Result<FdReport> {
    let report = run_fd_gate(ev, 0x5eed);
    if report.passed() {
        Ok(report)
    } else {
        let names: Vec<String> = report
            .failures()
            .iter()
            .map(|c| format!("{} ({:.2e} > {:.0e})", c.name, c.worst, c.tolerance))
            .collect();
        Err(Error::Validation(format!("finite-difference gate failed: {}", names.join(", "))))
    }
}
