//! Mesh-refinement studies against the manufactured solution.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coupling::{format_sci, run_partitioned, CouplingConfig, IterationTrace};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::fem::FeField;
use crate::mixed::solve_monolithic;
use crate::stokes::assemble_stokes;
use crate::verification::exact::ExactSolution;
use crate::verification::norms::{error_norm, rate, Norm};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Partitioned,
    Monolithic,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partitioned" => Ok(Mode::Partitioned),
            "monolithic" => Ok(Mode::Monolithic),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Partitioned => "partitioned",
            Mode::Monolithic => "monolithic",
        })
    }
}

/// Error columns, in CSV order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    L2U,
    H1U,
    L2P,
    L2W1,
    H1W1,
    H2W1,
}

impl Column {
    pub const ALL: [Column; 6] = [Column::L2U, Column::H1U, Column::L2P, Column::L2W1, Column::H1W1, Column::H2W1];

    pub fn name(self) -> &'static str {
        match self {
            Column::L2U => "L2_u",
            Column::H1U => "H1_u",
            Column::L2P => "L2_p",
            Column::L2W1 => "L2_w1",
            Column::H1W1 => "H1_w1",
            Column::H2W1 => "H2_w1",
        }
    }

    fn on_plate(self) -> bool {
        matches!(self, Column::L2W1 | Column::H1W1 | Column::H2W1)
    }
}

/// Constraint quantities of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    /// `∫ p`.
    pub pressure_integral: f64,
    /// `max_q |(∇·u, q)|` over a basis of zero-mean P1.
    pub max_divergence: f64,
    /// `∫ w₂` and `‖B σ‖`, monolithic runs only.
    pub plate_mean: Option<f64>,
    pub constraint_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    /// Indexed like [`Column::ALL`].
    pub errors: [f64; 6],
    pub constraints: Constraints,
    /// Partitioned runs only.
    pub trace: Option<IterationTrace>,
}

impl ConvergenceRow {
    pub fn error(&self, col: Column) -> f64 {
        self.errors[col as usize]
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub mode: Mode,
    pub lambda: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Rates against the previous row; `None` on the first.
    pub fn rates(&self, col: Column) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for w in self.rows.windows(2) {
            out.push(rate(w[0].error(col), w[1].error(col), w[0].h, w[1].h).ok());
        }
        out.truncate(self.rows.len());
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("h");
        for c in Column::ALL {
            let _ = write!(out, ",{0},rate_{0}", c.name());
        }
        out.push('\n');
        let rates: Vec<_> = Column::ALL.iter().map(|&c| self.rates(c)).collect();
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&format_sci(row.h));
            for (j, c) in Column::ALL.iter().enumerate() {
                let r = rates[j][i].map(format_sci).unwrap_or_default();
                let _ = write!(out, ",{},{r}", format_sci(row.error(*c)));
            }
            out.push('\n');
        }
        out
    }

    /// Two columns, `elements error`: tetrahedra for fluid norms, triangles
    /// for plate norms.
    pub fn to_gnuplot(&self, col: Column) -> String {
        let mut out = format!("# elements {}\n", col.name());
        for row in &self.rows {
            let n = row.n;
            let elements = if col.on_plate() { 2 * n * n } else { 6 * n * n * n };
            let _ = writeln!(out, "{elements} {}", format_sci(row.error(col)));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        write_with_comment(path, comment, &self.to_csv())
    }

    /// One `<column>.dat` file per norm in `dir`; returns the paths.
    pub fn write_gnuplot(&self, dir: &Path, comment: Option<&str>) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for c in Column::ALL {
            let path = dir.join(format!("{}.dat", c.name()));
            write_with_comment(&path, comment, &self.to_gnuplot(c))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub(crate) fn write_with_comment(path: &Path, comment: Option<&str>, body: &str) -> Result<()> {
    let mut text = String::new();
    if let Some(c) = comment {
        let _ = writeln!(text, "# {c}");
    }
    text.push_str(body);
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn max_divergence(disc: &Discretization, u: &FeField) -> Result<f64> {
    let blocks = assemble_stokes(&disc.velocity, &disc.pressure, 1.0, 1.0)?;
    Ok(blocks.zero_mean_divergence(u.coeffs()))
}

fn errors(ex: &ExactSolution, u: &FeField, p: &FeField, w1: &FeField) -> Result<[f64; 6]> {
    let uf = ex.u_functions();
    Ok([
        error_norm(u, &uf, Norm::L2)?,
        error_norm(u, &uf, Norm::H1)?,
        error_norm(p, &[&ex.p], Norm::L2)?,
        error_norm(w1, &[&ex.w1], Norm::L2)?,
        error_norm(w1, &[&ex.w1], Norm::H1)?,
        error_norm(w1, &[&ex.w1], Norm::H2Broken)?,
    ])
}

fn run_one(n: usize, mode: Mode, config: &CouplingConfig, ex: &ExactSolution) -> Result<ConvergenceRow> {
    let disc = Discretization::unit_cube(n)?;
    let loads = ex.loads();
    match mode {
        Mode::Partitioned => {
            let (state, trace) = run_partitioned(&disc, config, &loads)?;
            if !trace.converged {
                return Err(Error::NotConverged {
                    iterations: trace.iterations,
                    last: trace.error(trace.iterations),
                });
            }
            Ok(ConvergenceRow {
                n,
                h: 1.0 / n as f64,
                errors: errors(ex, &state.u, &state.p, &state.w1)?,
                constraints: Constraints {
                    pressure_integral: state.p.integral()[0],
                    max_divergence: max_divergence(&disc, &state.u)?,
                    plate_mean: None,
                    constraint_residual: None,
                },
                trace: Some(trace),
            })
        }
        Mode::Monolithic => {
            let s = solve_monolithic(&disc, config.lambda, 0.0, &loads)?;
            Ok(ConvergenceRow {
                n,
                h: 1.0 / n as f64,
                errors: errors(ex, &s.u, &s.q0, &s.w1)?,
                constraints: Constraints {
                    pressure_integral: s.q0.integral()[0],
                    max_divergence: max_divergence(&disc, &s.u)?,
                    plate_mean: Some(s.plate_mean()),
                    constraint_residual: Some(s.constraint_residual),
                },
                trace: None,
            })
        }
    }
}

/// Solves the manufactured problem on each unit-cube mesh in `ns`. The
/// exact solution passes the finite-difference gate first.
pub fn run_convergence_study(ns: &[usize], mode: Mode, config: &CouplingConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    if ns.is_empty() || ns.contains(&0) || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("n-list must be positive and strictly ascending, got {ns:?}")));
    }
    let ex = ExactSolution::validated(config.lambda)?;
    let rows = ns
        .iter()
        .map(|&n| run_one(n, mode, config, &ex).map_err(|e| e.context(format!("n = {n}"))))
        .collect::<Result<_>>()?;
    Ok(ConvergenceReport { mode, lambda: config.lambda, rows })
}
