//! Argument parsing and command execution for the `plate-fsi` binary.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use plate_fsi::coupling::{format_sci, run_partitioned, trace_mismatch, CouplingConfig};
use plate_fsi::discretization::Discretization;
use plate_fsi::fem::{interpolate, FeField};
use plate_fsi::mixed::estimate_infsup_unit_cube;
use plate_fsi::plate::{solve_plate, PlateProblem};
use plate_fsi::stokes::{solve_stokes, StokesProblem};
use plate_fsi::verification::{error_norm, rate, run_convergence_study, Column, ExactSolution, Mode, Norm};

/// Largest mesh for the dense inf-sup eigensolve.
pub const INFSUP_MAX_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliMode {
    Partitioned,
    Monolithic,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::Partitioned => Mode::Partitioned,
            CliMode::Monolithic => Mode::Monolithic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Manufactured-solution errors and rates over the n-list.
    Convergence,
    /// Partitioned fluid-plate iteration; writes the successive-error history.
    Coupled,
    /// Fluid alone with the exact plate velocity.
    Stokes,
    /// Plate alone with the exact pressure trace.
    Plate,
    /// Discrete inf-sup constant of the monolithic constraint form.
    Infsup,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Convergence => "convergence",
            Command::Coupled => "coupled",
            Command::Stokes => "stokes",
            Command::Plate => "plate",
            Command::Infsup => "infsup",
        }
    }
}

/// Comma-separated mesh sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NList(pub Vec<usize>);

fn parse_n_list(s: &str) -> Result<NList, String> {
    let ns = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad mesh size {t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if ns.contains(&0) {
        return Err("mesh sizes must be positive".into());
    }
    Ok(NList(ns))
}

#[derive(Debug, Clone, Parser)]
#[command(name = "plate-fsi", version, about = "Stokes flow coupled to a clamped Kirchhoff plate")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Comma-separated subdivisions per axis, h = 1/n.
    #[arg(long = "n", value_parser = parse_n_list, default_value = "4", global = true)]
    pub n: NList,
    #[arg(long, default_value_t = 1.0, global = true)]
    pub lambda: f64,
    /// Tolerance on the successive errors.
    #[arg(long, default_value_t = 1e-10, global = true)]
    pub eps: f64,
    #[arg(long = "max-iter", default_value_t = 20, global = true)]
    pub max_iter: usize,
    /// Relaxation of the plate velocity.
    #[arg(long, default_value_t = 1.0, global = true)]
    pub omega: f64,
    #[arg(long, value_enum, default_value_t = CliMode::Partitioned, global = true)]
    pub mode: CliMode,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".", global = true)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn coupling(&self) -> CouplingConfig {
        CouplingConfig {
            lambda: self.lambda,
            eps: self.eps,
            max_iter: self.max_iter,
            omega: self.omega,
            ..Default::default()
        }
    }

    pub fn ns(&self) -> &[usize] {
        &self.n.0
    }

    /// Full configuration as one line, for artifact headers.
    pub fn describe(&self) -> String {
        let ns: Vec<String> = self.ns().iter().map(|n| n.to_string()).collect();
        format!(
            "plate-fsi {} --n {} --lambda {} --eps {:e} --max-iter {} --omega {} --mode {}",
            self.command.name(),
            ns.join(","),
            self.lambda,
            self.eps,
            self.max_iter,
            self.omega,
            Mode::from(self.mode)
        )
    }

    fn check(&self) -> Result<(), Failure> {
        self.coupling().validate().map_err(|e| Failure::Usage(e.to_string()))?;
        if self.ns().windows(2).any(|w| w[0] >= w[1]) {
            return Err(Failure::Usage(format!("--n must be strictly ascending, got {:?}", self.ns())));
        }
        match self.command {
            Command::Infsup if self.ns().iter().any(|&n| n > INFSUP_MAX_N) => Err(Failure::Usage(format!(
                "infsup uses a dense eigensolve; n must not exceed {INFSUP_MAX_N}"
            ))),
            Command::Coupled if self.mode == CliMode::Monolithic => Err(Failure::Usage(
                "coupled runs the partitioned iteration; use `convergence --mode monolithic`".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Parses `argv`, program name first.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(plate_fsi::error::Error),
}

impl From<plate_fsi::error::Error> for Failure {
    fn from(e: plate_fsi::error::Error) -> Self {
        Failure::Run(e)
    }
}

fn write_artifact(dir: &Path, name: &str, comment: &str, body: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let text = format!("# {comment}\n{body}");
    std::fs::write(&path, text).map_err(|source| Failure::Run(plate_fsi::error::Error::Io { path: path.clone(), source }))?;
    Ok(path)
}

/// Error table with bracketed-rate columns, in the convergence CSV style.
fn error_table(names: &[&str], rows: &[(f64, Vec<f64>)]) -> String {
    let mut out = String::from("h");
    for n in names {
        let _ = write!(out, ",{n},rate_{n}");
    }
    out.push('\n');
    for (i, (h, errs)) in rows.iter().enumerate() {
        out.push_str(&format_sci(*h));
        for (j, e) in errs.iter().enumerate() {
            let r = if i == 0 {
                String::new()
            } else {
                rate(rows[i - 1].1[j], *e, rows[i - 1].0, *h).map(format_sci).unwrap_or_default()
            };
            let _ = write!(out, ",{},{r}", format_sci(*e));
        }
        out.push('\n');
    }
    out
}

/// Runs the command and writes its artifacts; returns the summary lines.
pub fn execute(config: &RunConfig) -> Result<Vec<String>, Failure> {
    config.check()?;
    std::fs::create_dir_all(&config.out).map_err(|source| {
        Failure::Run(plate_fsi::error::Error::Io { path: config.out.clone(), source })
    })?;
    let comment = config.describe();
    let mut lines = Vec::new();
    match config.command {
        Command::Convergence => {
            let report = run_convergence_study(config.ns(), config.mode.into(), &config.coupling())?;
            for row in &report.rows {
                let mut l = format!("n={} h={}", row.n, format_sci(row.h));
                for c in Column::ALL {
                    let _ = write!(l, " {}={}", c.name(), format_sci(row.error(c)));
                }
                if let Some(t) = &row.trace {
                    let _ = write!(l, " iterations={}", t.iterations);
                }
                lines.push(l);
            }
            write_artifact(&config.out, "convergence.csv", &comment, &report.to_csv())?;
            for c in Column::ALL {
                write_artifact(&config.out, &format!("{}.dat", c.name()), &comment, &report.to_gnuplot(c))?;
            }
        }
        Command::Coupled => {
            let ex = ExactSolution::validated(config.lambda)?;
            let loads = ex.loads();
            let single = config.ns().len() == 1;
            for &n in config.ns() {
                let disc = Discretization::unit_cube(n)?;
                let (state, trace) =
                    run_partitioned(&disc, &config.coupling(), &loads).map_err(|e| e.context(format!("n = {n}")))?;
                let name = if single { "iterations.csv".to_string() } else { format!("iterations_n{n}.csv") };
                write_artifact(&config.out, &name, &comment, &trace.to_csv())?;
                lines.push(format!(
                    "n={n} iterations={} converged={} last_error={} trace_mismatch={}",
                    trace.iterations,
                    trace.converged,
                    format_sci(trace.error(trace.iterations)),
                    format_sci(trace_mismatch(&disc, &state)?)
                ));
            }
        }
        Command::Stokes => {
            let ex = ExactSolution::validated(config.lambda)?;
            let loads = ex.loads();
            let mut rows = Vec::new();
            for &n in config.ns() {
                let disc = Discretization::unit_cube(n)?;
                let g = interpolate(&disc.plate_p2, &[&ex.w2])?;
                let problem = StokesProblem { lambda: config.lambda, nu: 1.0, f1: loads.f1.clone(), g_pl: Some(g) };
                let s = solve_stokes(&disc, &problem).map_err(|e| e.context(format!("n = {n}")))?;
                let uf = ex.u_functions();
                let errs = vec![
                    error_norm(&s.u, &uf, Norm::L2)?,
                    error_norm(&s.u, &uf, Norm::H1)?,
                    error_norm(&s.p, &[&ex.p], Norm::L2)?,
                ];
                lines.push(format!(
                    "n={n} L2_u={} H1_u={} L2_p={}",
                    format_sci(errs[0]),
                    format_sci(errs[1]),
                    format_sci(errs[2])
                ));
                rows.push((1.0 / n as f64, errs));
            }
            write_artifact(&config.out, "stokes.csv", &comment, &error_table(&["L2_u", "H1_u", "L2_p"], &rows))?;
        }
        Command::Plate => {
            let ex = ExactSolution::validated(config.lambda)?;
            let loads = ex.loads();
            let mut rows = Vec::new();
            for &n in config.ns() {
                let disc = Discretization::unit_cube(n)?;
                let p_trace: FeField = interpolate(&disc.plate_p1, &[&ex.p])?;
                let problem =
                    PlateProblem { lambda: config.lambda, p_trace: Some(p_trace), f2: loads.f2.clone(), f3: loads.f3.clone() };
                let s = solve_plate(&disc, &problem).map_err(|e| e.context(format!("n = {n}")))?;
                let errs = vec![
                    error_norm(&s.w1, &[&ex.w1], Norm::L2)?,
                    error_norm(&s.w1, &[&ex.w1], Norm::H1)?,
                    error_norm(&s.w1, &[&ex.w1], Norm::H2Broken)?,
                ];
                lines.push(format!(
                    "n={n} L2_w1={} H1_w1={} H2_w1={}",
                    format_sci(errs[0]),
                    format_sci(errs[1]),
                    format_sci(errs[2])
                ));
                rows.push((1.0 / n as f64, errs));
            }
            write_artifact(&config.out, "plate.csv", &comment, &error_table(&["L2_w1", "H1_w1", "H2_w1"], &rows))?;
        }
        Command::Infsup => {
            let mut reports = Vec::new();
            for &n in config.ns() {
                let r = estimate_infsup_unit_cube(n).map_err(|e| e.context(format!("n = {n}")))?;
                lines.push(format!("n={n} beta={}", format_sci(r.beta)));
                reports.push(r);
            }
            let doc = serde_json::json!({ "config": comment, "reports": reports });
            let body = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
            let path = config.out.join("infsup.json");
            std::fs::write(&path, body)
                .map_err(|source| Failure::Run(plate_fsi::error::Error::Io { path: path.clone(), source }))?;
        }
    }
    Ok(lines)
}
