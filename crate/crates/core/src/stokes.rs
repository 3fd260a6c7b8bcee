//! Taylor–Hood discretization of the resolvent Stokes problem
//! `λu - ν Δu + ∇p = f₁`, `∇·u = 0`, with `u = 0` on the walls,
//! `u = (0, 0, g)` on the plate and a zero-mean pressure.

use std::sync::Arc;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::fem::{make_quadrature, Cell, FeField, FunctionSpace, ScalarFunction};
use crate::linalg::{to_csr, ConstrainedSystem, CsrMatrix, TripletBuffer};
use crate::mesh::BoundaryTag;

/// Quadrature degree for bilinear forms on tetrahedra (exact for P2·P2).
pub const FORM_DEGREE: usize = 4;
/// Quadrature degree for loads given by analytic functions.
pub const LOAD_DEGREE: usize = 6;

/// The separate blocks of the Stokes operator.
#[derive(Debug, Clone)]
pub struct StokesBlocks {
    /// `λ M + ν K` on the vector P2 space.
    pub velocity: CsrMatrix,
    /// `(B u)_q = (∇·u, q)` for every P1 basis function `q`.
    pub divergence: CsrMatrix,
    /// `∫ q` for every P1 basis function.
    pub pressure_mean: Vec<f64>,
}

impl StokesBlocks {
    /// `max |(∇·u, ψ)|` over the zero-mean basis `ψ_i = φ_i - (m_i / m_last) φ_last`.
    pub fn zero_mean_divergence(&self, u: &[f64]) -> f64 {
        let d = self.divergence.mul_vec(u);
        let m = &self.pressure_mean;
        let last = d.len() - 1;
        (0..last).fold(0.0, |acc, i| acc.max((d[i] - m[i] / m[last] * d[last]).abs()))
    }
}

/// Velocity block `λ M + ν K`, divergence block and pressure means.
pub fn assemble_stokes(
    velocity: &FunctionSpace,
    pressure: &FunctionSpace,
    lambda: f64,
    nu: f64,
) -> Result<StokesBlocks> {
    if !velocity.same_mesh(pressure) {
        return Err(Error::SpaceMismatch("velocity and pressure meshes differ".into()));
    }
    if velocity.components() != 3 || pressure.components() != 1 {
        return Err(Error::SpaceMismatch("expected vector velocity and scalar pressure".into()));
    }
    let rule = make_quadrature(Cell::Tet, FORM_DEGREE)?;
    let nu_dofs = velocity.n_dofs();
    let np = pressure.n_dofs();
    let nloc = velocity.element().dof_count();
    let ploc = pressure.element().dof_count();
    let mut a = TripletBuffer::with_capacity(nu_dofs, nu_dofs, velocity.n_cells() * 3 * nloc * nloc);
    let mut b = TripletBuffer::with_capacity(np, nu_dofs, velocity.n_cells() * 3 * nloc * ploc);
    let mut mean = vec![0.0; np];

    let mut scalar = vec![0.0; nloc * nloc];
    let mut div = vec![0.0; ploc * 3 * nloc];
    for cell in 0..velocity.n_cells() {
        let tv = velocity.tabulate(cell, &rule);
        let tp = pressure.tabulate(cell, &rule);
        scalar.iter_mut().for_each(|v| *v = 0.0);
        div.iter_mut().for_each(|v| *v = 0.0);
        let pnodes = pressure.cell_nodes(cell);
        for q in 0..tv.n_points() {
            let w = tv.jxw[q];
            for i in 0..nloc {
                let (vi, gi) = (tv.value(q, i), tv.gradient(q, i));
                for j in 0..nloc {
                    let (vj, gj) = (tv.value(q, j), tv.gradient(q, j));
                    let dot = gi[0] * gj[0] + gi[1] * gj[1] + gi[2] * gj[2];
                    scalar[i * nloc + j] += w * (lambda * vi * vj + nu * dot);
                }
            }
            for k in 0..ploc {
                let pk = tp.value(q, k);
                mean[pnodes[k]] += w * pk;
                for j in 0..nloc {
                    let gj = tv.gradient(q, j);
                    for c in 0..3 {
                        div[k * 3 * nloc + 3 * j + c] += w * pk * gj[c];
                    }
                }
            }
        }
        let nodes = velocity.cell_nodes(cell);
        for i in 0..nloc {
            for j in 0..nloc {
                let v = scalar[i * nloc + j];
                for c in 0..3 {
                    a.push(3 * nodes[i] + c, 3 * nodes[j] + c, v);
                }
            }
        }
        let dofs = velocity.cell_dofs(cell);
        b.add_block(pnodes, &dofs, &div);
    }
    Ok(StokesBlocks {
        velocity: to_csr(&a)?,
        divergence: to_csr(&b)?,
        pressure_mean: mean,
    })
}

/// `(f, v)` for every vector P2 basis function.
pub fn assemble_velocity_load(
    velocity: &FunctionSpace,
    f: &[Arc<dyn ScalarFunction>; 3],
) -> Result<Vec<f64>> {
    let rule = make_quadrature(Cell::Tet, LOAD_DEGREE)?;
    let mut out = vec![0.0; velocity.n_dofs()];
    let nloc = velocity.element().dof_count();
    for cell in 0..velocity.n_cells() {
        let tab = velocity.tabulate(cell, &rule);
        let nodes = velocity.cell_nodes(cell);
        for q in 0..tab.n_points() {
            let x = &tab.points[q];
            let fx = [f[0].value(x), f[1].value(x), f[2].value(x)];
            for i in 0..nloc {
                let wv = tab.jxw[q] * tab.value(q, i);
                for c in 0..3 {
                    out[3 * nodes[i] + c] += wv * fx[c];
                }
            }
        }
    }
    Ok(out)
}

/// Dirichlet data on the velocity dofs: zero on the walls, `(0, 0, g)` on
/// the plate, with `g` a P2 plate field read through the trace node map.
///
/// Returns the constraint mask and the prescribed values.
pub fn apply_velocity_bc(
    velocity: &FunctionSpace,
    trace_nodes: &[(usize, usize)],
    g_pl: Option<&FeField>,
) -> Result<(Vec<bool>, Vec<f64>)> {
    let n = velocity.n_dofs();
    let mut mask = vec![false; n];
    let mut values = vec![0.0; n];
    for &a in velocity.boundary_nodes(BoundaryTag::S) {
        for c in 0..3 {
            mask[3 * a + c] = true;
        }
    }
    let plate_nodes = velocity.boundary_nodes(BoundaryTag::Plate);
    for &a in plate_nodes {
        for c in 0..3 {
            mask[3 * a + c] = true;
        }
    }
    if let Some(g) = g_pl {
        let coeffs = g.coeffs();
        let mut hit = 0;
        for &(n3, n2) in trace_nodes {
            if plate_nodes.binary_search(&n3).is_ok() {
                values[3 * n3 + 2] = coeffs[n2];
                hit += 1;
            }
        }
        if hit != plate_nodes.len() {
            return Err(Error::Trace(format!(
                "{} plate velocity nodes without a trace image",
                plate_nodes.len() - hit
            )));
        }
    }
    Ok((mask, values))
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub u: FeField,
    /// Zero-mean pressure.
    pub p: FeField,
    /// Multiplier of the mean-pressure row. It vanishes when the plate data
    /// carries no net flux.
    pub c0: f64,
}

impl StokesSolution {
    /// `∫ p`.
    pub fn pressure_integral(&self, blocks: &StokesBlocks) -> f64 {
        blocks
            .pressure_mean
            .iter()
            .zip(self.p.coeffs())
            .map(|(m, p)| m * p)
            .sum()
    }

    /// `max_q |(∇·u, q)|` over the P1 basis.
    pub fn divergence_residual(&self, blocks: &StokesBlocks) -> f64 {
        blocks
            .divergence
            .mul_vec(self.u.coeffs())
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Factorized Stokes operator, reused across right-hand sides and plate data.
///
/// Unknowns are ordered `[u, p, c₀]` and the matrix is
/// `[[A, -Bᵀ, 0], [-B, 0, m], [0, mᵀ, 0]]`.
pub struct StokesSolver {
    velocity: Arc<FunctionSpace>,
    pressure: Arc<FunctionSpace>,
    trace_nodes: Vec<(usize, usize)>,
    blocks: StokesBlocks,
    system: ConstrainedSystem,
}

impl StokesSolver {
    pub fn new(disc: &Discretization, lambda: f64, nu: f64) -> Result<Self> {
        if !(lambda > 0.0 && nu > 0.0) {
            return Err(Error::InvalidArgument("λ and ν must be positive".into()));
        }
        let blocks = assemble_stokes(&disc.velocity, &disc.pressure, lambda, nu)?;
        let nu_dofs = disc.velocity.n_dofs();
        let np = disc.pressure.n_dofs();
        let n = nu_dofs + np + 1;
        let mut t = TripletBuffer::with_capacity(n, n, blocks.velocity.nnz() + 2 * blocks.divergence.nnz() + 2 * np);
        t.extend_shifted(&blocks.velocity, 0, 0);
        for (r, c, v) in blocks.divergence.iter() {
            t.push(nu_dofs + r, c, -v);
            t.push(c, nu_dofs + r, -v);
        }
        for (k, &m) in blocks.pressure_mean.iter().enumerate() {
            t.push(nu_dofs + k, n - 1, m);
            t.push(n - 1, nu_dofs + k, m);
        }
        let (mask_u, _) = apply_velocity_bc(&disc.velocity, &disc.trace_nodes, None)?;
        let mut mask = mask_u;
        mask.resize(n, false);
        let system = ConstrainedSystem::new(&to_csr(&t)?, mask)?;
        Ok(StokesSolver {
            velocity: disc.velocity.clone(),
            pressure: disc.pressure.clone(),
            trace_nodes: disc.trace_nodes.clone(),
            blocks,
            system,
        })
    }

    pub fn blocks(&self) -> &StokesBlocks {
        &self.blocks
    }

    pub fn system(&self) -> &ConstrainedSystem {
        &self.system
    }

    pub fn load_vector(&self, f1: &[Arc<dyn ScalarFunction>; 3]) -> Result<Vec<f64>> {
        assemble_velocity_load(&self.velocity, f1)
    }

    /// Solves with the assembled velocity load and plate datum `g_pl`
    /// (P2 on the plate mesh; `None` means homogeneous data).
    pub fn solve(&self, velocity_load: &[f64], g_pl: Option<&FeField>) -> Result<StokesSolution> {
        let nu_dofs = self.velocity.n_dofs();
        let np = self.pressure.n_dofs();
        if velocity_load.len() != nu_dofs {
            return Err(Error::InvalidArgument("velocity load has the wrong length".into()));
        }
        let (_, mut values) = apply_velocity_bc(&self.velocity, &self.trace_nodes, g_pl)?;
        values.resize(nu_dofs + np + 1, 0.0);
        let mut rhs = velocity_load.to_vec();
        rhs.resize(nu_dofs + np + 1, 0.0);
        let x = self.system.solve(&rhs, &values)?;
        Ok(StokesSolution {
            u: FeField::new(self.velocity.clone(), x[..nu_dofs].to_vec())?,
            p: FeField::new(self.pressure.clone(), x[nu_dofs..nu_dofs + np].to_vec())?,
            c0: x[nu_dofs + np],
        })
    }
}

/// Data of one Stokes solve.
#[derive(Clone)]
pub struct StokesProblem {
    pub lambda: f64,
    pub nu: f64,
    pub f1: [Arc<dyn ScalarFunction>; 3],
    /// Prescribed `u₃` on the plate (P2 plate field).
    pub g_pl: Option<FeField>,
}

pub fn solve_stokes(disc: &Discretization, problem: &StokesProblem) -> Result<StokesSolution> {
    let solver = StokesSolver::new(disc, problem.lambda, problem.nu)?;
    let load = solver.load_vector(&problem.f1)?;
    solver.solve(&load, problem.g_pl.as_ref())
}
