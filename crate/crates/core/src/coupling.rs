//! Partitioned fixed-point coupling of the fluid and plate solvers.
//!
//! Each iteration solves Stokes with the current plate velocity as Dirichlet
//! datum on the plate, then the plate with the new pressure trace. The new
//! plate velocity feeds the next fluid solve.

use std::fmt::Write as _;
use std::path::Path;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::fem::FeField;
use crate::loads::LoadSet;
use crate::plate::{pressure_trace, PlateSolver, W2Transfer};
use crate::stokes::StokesSolver;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    pub lambda: f64,
    /// Tolerance on the largest of the three successive errors.
    pub eps: f64,
    pub max_iter: usize,
    /// Under-relaxation of the plate velocity handed to the fluid.
    pub omega: f64,
    pub transfer: W2Transfer,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig { lambda: 1.0, eps: 1e-10, max_iter: 20, omega: 1.0, transfer: W2Transfer::default() }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("λ must be positive, got {}", self.lambda)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {}", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("at least one iteration is needed".into()));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidArgument(format!("ω must lie in (0, 1], got {}", self.omega)));
        }
        Ok(())
    }
}

/// Successive L² errors per iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub err_u: Vec<f64>,
    pub err_p: Vec<f64>,
    pub err_w1: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `1.06353e-06` style: six significant digits, two-digit exponent.
pub fn format_sci(v: f64) -> String {
    let s = format!("{v:.5e}");
    match s.split_once('e') {
        Some((mant, exp)) => {
            let e: i32 = exp.parse().unwrap_or(0);
            format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
        }
        None => s,
    }
}

impl IterationTrace {
    /// Largest of the three errors at iteration `k` (1-based).
    pub fn error(&self, k: usize) -> f64 {
        self.err_u[k - 1].max(self.err_p[k - 1]).max(self.err_w1[k - 1])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,err_u,err_p,err_w1\n");
        for k in 0..self.iterations {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                k + 1,
                format_sci(self.err_u[k]),
                format_sci(self.err_p[k]),
                format_sci(self.err_w1[k])
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let mut text = String::new();
        if let Some(c) = comment {
            let _ = writeln!(text, "# {c}");
        }
        text.push_str(&self.to_csv());
        std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}

#[derive(Debug, Clone)]
pub struct FsiState {
    pub u: FeField,
    pub p: FeField,
    pub w1: FeField,
    pub w2: FeField,
    pub c0: f64,
}

/// L² norm of `next - prev`, by quadrature.
pub fn successive_error(prev: &FeField, next: &FeField) -> Result<f64> {
    Ok(next.difference(prev)?.l2_norm())
}

/// `‖u₃|_plate - w₂‖` in L² over the plate.
pub fn trace_mismatch(disc: &Discretization, state: &FsiState) -> Result<f64> {
    if !std::sync::Arc::ptr_eq(state.w2.space(), &disc.plate_p2) {
        return Err(Error::SpaceMismatch("w₂ is not a plate P2 field".into()));
    }
    let mut u3 = FeField::zeros(disc.plate_p2.clone());
    for &(n3, n2) in &disc.trace_nodes {
        u3.coeffs_mut()[n2] = state.u.coeffs()[3 * n3 + 2];
    }
    successive_error(&state.w2, &u3)
}

/// Algorithm: start from `u = 0`, `w₂ = 0`; alternate fluid and plate solves
/// until the three successive errors drop below `eps` or `max_iter` is hit.
/// Non-convergence is reported through the trace, not as an error.
pub fn run_partitioned(
    disc: &Discretization,
    config: &CouplingConfig,
    loads: &LoadSet,
) -> Result<(FsiState, IterationTrace)> {
    config.validate()?;
    let lambda = config.lambda;
    let stokes = StokesSolver::new(disc, lambda, 1.0).map_err(|e| e.context("assembling the fluid system"))?;
    let mut plate = PlateSolver::new(disc, lambda).map_err(|e| e.context("assembling the plate system"))?;
    plate.set_transfer(config.transfer);
    let fluid_load = stokes.load_vector(&loads.f1)?;
    let plate_data = plate.data_load(loads.f2.as_ref(), loads.f3.as_ref())?;

    let mut state = FsiState {
        u: FeField::zeros(disc.velocity.clone()),
        p: FeField::zeros(disc.pressure.clone()),
        w1: FeField::zeros(disc.morley.clone()),
        w2: FeField::zeros(disc.plate_p2.clone()),
        c0: 0.0,
    };
    let mut trace = IterationTrace::default();
    for k in 1..=config.max_iter {
        let step = |e: Error| e.context(format!("iteration {k}"));
        let fluid = stokes.solve(&fluid_load, Some(&state.w2)).map_err(step)?;
        let p_tr = pressure_trace(&fluid.p, &disc.plate_p1, &disc.trace).map_err(step)?;
        let load = plate.with_pressure(&plate_data, Some(&p_tr)).map_err(step)?;
        let w1 = plate.solve_w1(&load).map_err(step)?;
        let mut w2 = plate.recover_w2(&w1, loads.f2.as_ref()).map_err(step)?;
        if config.omega != 1.0 {
            let om = config.omega;
            for (new, old) in w2.coeffs_mut().iter_mut().zip(state.w2.coeffs()) {
                *new = om * *new + (1.0 - om) * old;
            }
        }

        trace.err_u.push(successive_error(&state.u, &fluid.u)?);
        trace.err_p.push(successive_error(&state.p, &fluid.p)?);
        trace.err_w1.push(successive_error(&state.w1, &w1)?);
        trace.iterations = k;
        state = FsiState { u: fluid.u, p: fluid.p, w1, w2, c0: fluid.c0 };
        if trace.error(k) < config.eps {
            trace.converged = true;
            break;
        }
    }
    Ok((state, trace))
}
