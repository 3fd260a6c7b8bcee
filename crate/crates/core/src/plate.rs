//! Clamped plate solve with Morley elements.
//!
//! The plate system `λ w₂ + Δ²w₁ = p + f₃`, `λ w₁ - w₂ = f₂` is reduced to
//! `(λ² M + a_h) w₁ = (p + f₃ + λ f₂, z)` with `a_h` the broken Hessian form.
//! `w₂ = λ w₁ - f₂` is then carried to clamped, zero-mean P2, which is the
//! space the fluid sees on the plate.

use std::sync::Arc;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::fem::{make_quadrature, Cell, Derivative, FeField, FunctionSpace, PointValue, ScalarFunction};
use crate::linalg::{to_csr, ConstrainedSystem, CsrMatrix, TripletBuffer};
use crate::mesh::TraceMap;

const FORM_DEGREE: usize = 4;
const LOAD_DEGREE: usize = 6;

#[derive(Debug, Clone)]
pub struct MorleyBlocks {
    pub mass: CsrMatrix,
    /// `Σ_T ∫_T D²w : D²z`.
    pub hessian: CsrMatrix,
}

pub fn assemble_morley(morley: &FunctionSpace) -> Result<MorleyBlocks> {
    if morley.kind() != crate::fem::ElementKind::MorleyTri {
        return Err(Error::SpaceMismatch("expected a Morley space".into()));
    }
    let (mass, hessian) = scalar_forms(morley, true)?;
    Ok(MorleyBlocks { mass, hessian: hessian.expect("hessian requested") })
}

/// Mass matrix, plus the broken Hessian form when `hessian` is set.
fn scalar_forms(space: &FunctionSpace, hessian: bool) -> Result<(CsrMatrix, Option<CsrMatrix>)> {
    let rule = make_quadrature(Cell::Tri, FORM_DEGREE)?;
    let n = space.n_dofs();
    let nloc = space.element().dof_count();
    let mut m = TripletBuffer::with_capacity(n, n, space.n_cells() * nloc * nloc);
    let mut h = TripletBuffer::with_capacity(n, n, space.n_cells() * nloc * nloc);
    let mut mloc = vec![0.0; nloc * nloc];
    let mut hloc = vec![0.0; nloc * nloc];
    for cell in 0..space.n_cells() {
        let tab = space.tabulate(cell, &rule);
        mloc.iter_mut().for_each(|v| *v = 0.0);
        hloc.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..tab.n_points() {
            let w = tab.jxw[q];
            for i in 0..nloc {
                for j in 0..nloc {
                    mloc[i * nloc + j] += w * tab.value(q, i) * tab.value(q, j);
                    if hessian {
                        let (hi, hj) = (tab.hessian(q, i), tab.hessian(q, j));
                        let mut s = 0.0;
                        for r in 0..2 {
                            for c in 0..2 {
                                s += hi[r][c] * hj[r][c];
                            }
                        }
                        hloc[i * nloc + j] += w * s;
                    }
                }
            }
        }
        let nodes = space.cell_nodes(cell);
        m.add_block(nodes, nodes, &mloc);
        if hessian {
            h.add_block(nodes, nodes, &hloc);
        }
    }
    let hm = if hessian { Some(to_csr(&h)?) } else { None };
    Ok((to_csr(&m)?, hm))
}

/// Mass and (broken) stiffness matrices of a scalar space on the plate.
pub fn assemble_mass_stiffness(space: &FunctionSpace) -> Result<(CsrMatrix, CsrMatrix)> {
    let rule = make_quadrature(Cell::Tri, FORM_DEGREE)?;
    let n = space.n_dofs();
    let nloc = space.element().dof_count();
    let mut m = TripletBuffer::with_capacity(n, n, space.n_cells() * nloc * nloc);
    let mut k = TripletBuffer::with_capacity(n, n, space.n_cells() * nloc * nloc);
    for cell in 0..space.n_cells() {
        let tab = space.tabulate(cell, &rule);
        let mut mloc = vec![0.0; nloc * nloc];
        let mut kloc = vec![0.0; nloc * nloc];
        for q in 0..tab.n_points() {
            let w = tab.jxw[q];
            for i in 0..nloc {
                let gi = tab.gradient(q, i);
                for j in 0..nloc {
                    let gj = tab.gradient(q, j);
                    mloc[i * nloc + j] += w * tab.value(q, i) * tab.value(q, j);
                    kloc[i * nloc + j] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
            }
        }
        let nodes = space.cell_nodes(cell);
        m.add_block(nodes, nodes, &mloc);
        k.add_block(nodes, nodes, &kloc);
    }
    Ok((to_csr(&m)?, to_csr(&k)?))
}

/// `(Σ fᵢ, z)` over the basis of `space` for analytic data.
pub fn assemble_plate_load(space: &FunctionSpace, terms: &[(f64, &dyn ScalarFunction)]) -> Result<Vec<f64>> {
    let rule = make_quadrature(Cell::Tri, LOAD_DEGREE)?;
    let mut out = vec![0.0; space.n_dofs()];
    let nloc = space.element().dof_count();
    for cell in 0..space.n_cells() {
        let tab = space.tabulate(cell, &rule);
        let nodes = space.cell_nodes(cell);
        for q in 0..tab.n_points() {
            let x = &tab.points[q];
            let f: f64 = terms.iter().map(|(s, g)| s * g.value(x)).sum();
            for i in 0..nloc {
                out[nodes[i]] += tab.jxw[q] * f * tab.value(q, i);
            }
        }
    }
    Ok(out)
}

/// `(s·v + Σ fᵢ, z)` where `v` is a finite element field on the same plate
/// mesh as `space`.
pub fn assemble_field_load(
    space: &FunctionSpace,
    field: &FeField,
    scale: f64,
    terms: &[(f64, &dyn ScalarFunction)],
) -> Result<Vec<f64>> {
    let fs = field.space();
    if !space.same_mesh(fs) || fs.components() != 1 {
        return Err(Error::SpaceMismatch("field lives on another mesh".into()));
    }
    let rule = make_quadrature(Cell::Tri, LOAD_DEGREE)?;
    let mut out = vec![0.0; space.n_dofs()];
    let nloc = space.element().dof_count();
    let floc = fs.element().dof_count();
    let coeffs = field.coeffs();
    for cell in 0..space.n_cells() {
        let tab = space.tabulate(cell, &rule);
        let tf = fs.tabulate(cell, &rule);
        let nodes = space.cell_nodes(cell);
        let fnodes = fs.cell_nodes(cell);
        for q in 0..tab.n_points() {
            let x = &tab.points[q];
            let v: f64 = (0..floc).map(|k| coeffs[fnodes[k]] * tf.value(q, k)).sum();
            let f = scale * v + terms.iter().map(|(s, g)| s * g.value(x)).sum::<f64>();
            for i in 0..nloc {
                out[nodes[i]] += tab.jxw[q] * f * tab.value(q, i);
            }
        }
    }
    Ok(out)
}

/// Restriction of a P1 volume field to the plate as a P1 plate field.
pub fn pressure_trace(p: &FeField, plate_p1: &Arc<FunctionSpace>, trace: &TraceMap) -> Result<FeField> {
    if p.space().kind() != crate::fem::ElementKind::P1Tet || plate_p1.kind() != crate::fem::ElementKind::P1Tri {
        return Err(Error::SpaceMismatch("pressure trace maps P1 to P1".into()));
    }
    if trace.n_plate_vertices() != plate_p1.n_dofs() {
        return Err(Error::Trace("plate space does not match the trace map".into()));
    }
    let c = p.coeffs();
    let coeffs = (0..plate_p1.n_dofs()).map(|v| c[trace.volume_vertex(v)]).collect();
    FeField::new(plate_p1.clone(), coeffs)
}

#[derive(Clone)]
pub struct PlateProblem {
    pub lambda: f64,
    /// Fluid pressure on the plate (P1 plate field); `None` for zero.
    pub p_trace: Option<FeField>,
    pub f2: Arc<dyn ScalarFunction>,
    pub f3: Arc<dyn ScalarFunction>,
}

#[derive(Debug, Clone)]
pub struct PlateSolution {
    /// Deflection, Morley.
    pub w1: FeField,
    /// Velocity, clamped zero-mean P2.
    pub w2: FeField,
}

/// How `w₂ = λ w₁ - f₂` is carried from the Morley space to clamped P2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum W2Transfer {
    /// Nodal values (averaged over cells at edge midpoints, where Morley
    /// is discontinuous), zero on the rim, then the L²-smallest correction
    /// that restores zero mean.
    #[default]
    Interpolation,
    /// Clamped zero-mean L² projection.
    Projection,
}

/// Factorized plate and projection systems for a fixed `λ`.
pub struct PlateSolver {
    lambda: f64,
    morley: Arc<FunctionSpace>,
    p2: Arc<FunctionSpace>,
    blocks: MorleyBlocks,
    plate_system: ConstrainedSystem,
    projection: ConstrainedSystem,
    transfer: W2Transfer,
}

impl PlateSolver {
    pub fn new(disc: &Discretization, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("λ must be positive".into()));
        }
        let blocks = assemble_morley(&disc.morley)?;
        let n = disc.morley.n_dofs();
        let mut t = TripletBuffer::with_capacity(n, n, blocks.mass.nnz() + blocks.hessian.nnz());
        for (r, c, v) in blocks.mass.iter() {
            t.push(r, c, lambda * lambda * v);
        }
        t.extend_shifted(&blocks.hessian, 0, 0);
        let mut mask = vec![false; n];
        for &d in disc.morley.rim_nodes() {
            mask[d] = true;
        }
        let plate_system = ConstrainedSystem::new(&to_csr(&t)?, mask)?;

        // [[M, m], [mᵀ, 0]] with the rim clamped
        let p2 = &disc.plate_p2;
        let (mass, _) = scalar_forms(p2, false)?;
        let np = p2.n_dofs();
        let ones = vec![1.0; np];
        let mean = mass.mul_vec(&ones);
        let mut t = TripletBuffer::with_capacity(np + 1, np + 1, mass.nnz() + 2 * np);
        t.extend_shifted(&mass, 0, 0);
        for (k, &m) in mean.iter().enumerate() {
            t.push(k, np, m);
            t.push(np, k, m);
        }
        let mut mask = vec![false; np + 1];
        for &d in p2.rim_nodes() {
            mask[d] = true;
        }
        let projection = ConstrainedSystem::new(&to_csr(&t)?, mask)?;
        Ok(PlateSolver {
            lambda,
            morley: disc.morley.clone(),
            p2: p2.clone(),
            blocks,
            plate_system,
            projection,
            transfer: W2Transfer::default(),
        })
    }

    pub fn set_transfer(&mut self, transfer: W2Transfer) {
        self.transfer = transfer;
    }

    pub fn transfer(&self) -> W2Transfer {
        self.transfer
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn blocks(&self) -> &MorleyBlocks {
        &self.blocks
    }

    pub fn system(&self) -> &ConstrainedSystem {
        &self.plate_system
    }

    /// `(f₃ + λ f₂, z)`, the part of the load that does not change between
    /// iterations.
    pub fn data_load(&self, f2: &dyn ScalarFunction, f3: &dyn ScalarFunction) -> Result<Vec<f64>> {
        assemble_plate_load(&self.morley, &[(1.0, f3), (self.lambda, f2)])
    }

    /// Adds `(p, z)` to a copy of `data_load`.
    pub fn with_pressure(&self, data_load: &[f64], p_trace: Option<&FeField>) -> Result<Vec<f64>> {
        let mut load = data_load.to_vec();
        if let Some(p) = p_trace {
            let pl = assemble_field_load(&self.morley, p, 1.0, &[])?;
            load.iter_mut().zip(pl).for_each(|(a, b)| *a += b);
        }
        Ok(load)
    }

    pub fn solve_w1(&self, load: &[f64]) -> Result<FeField> {
        if load.len() != self.morley.n_dofs() {
            return Err(Error::InvalidArgument("plate load has the wrong length".into()));
        }
        let zeros = vec![0.0; load.len()];
        FeField::new(self.morley.clone(), self.plate_system.solve(load, &zeros)?)
    }

    /// `λ w₁ - f₂` in clamped zero-mean P2, by the configured transfer.
    pub fn recover_w2(&self, w1: &FeField, f2: &dyn ScalarFunction) -> Result<FeField> {
        if !Arc::ptr_eq(w1.space(), &self.morley) {
            return Err(Error::SpaceMismatch("w₁ is not a field of the plate Morley space".into()));
        }
        let np = self.p2.n_dofs();
        let zeros = vec![0.0; np + 1];
        match self.transfer {
            W2Transfer::Projection => {
                let mut rhs = assemble_field_load(&self.p2, w1, self.lambda, &[(-1.0, f2)])?;
                rhs.push(0.0);
                let mut x = self.projection.solve(&rhs, &zeros)?;
                x.pop();
                FeField::new(self.p2.clone(), x)
            }
            W2Transfer::Interpolation => {
                let mut sum = vec![0.0; np];
                let mut count = vec![0usize; np];
                for cell in 0..self.p2.n_cells() {
                    for &node in self.p2.cell_nodes(cell) {
                        let x = self.p2.node_points()[node];
                        if let PointValue::Value(v) = w1.eval_in_cell(cell, &x, Derivative::Value)? {
                            sum[node] += v[0];
                            count[node] += 1;
                        }
                    }
                }
                let mut w2 = FeField::new(
                    self.p2.clone(),
                    (0..np)
                        .map(|k| self.lambda * sum[k] / count[k] as f64 - f2.value(&self.p2.node_points()[k]))
                        .collect(),
                )?;
                for &r in self.p2.rim_nodes() {
                    w2.coeffs_mut()[r] = 0.0;
                }
                // min ‖δ‖ subject to ∫δ = ∫w₂, δ clamped
                let mut rhs = vec![0.0; np + 1];
                rhs[np] = w2.integral()[0];
                let delta = self.projection.solve(&rhs, &zeros)?;
                for (c, d) in w2.coeffs_mut().iter_mut().zip(&delta) {
                    *c -= d;
                }
                Ok(w2)
            }
        }
    }

    pub fn solve(&self, problem: &PlateProblem) -> Result<PlateSolution> {
        if problem.lambda != self.lambda {
            return Err(Error::InvalidArgument("λ differs from the factorized one".into()));
        }
        let data = self.data_load(problem.f2.as_ref(), problem.f3.as_ref())?;
        let load = self.with_pressure(&data, problem.p_trace.as_ref())?;
        let w1 = self.solve_w1(&load)?;
        let w2 = self.recover_w2(&w1, problem.f2.as_ref())?;
        Ok(PlateSolution { w1, w2 })
    }
}

pub fn solve_plate(disc: &Discretization, problem: &PlateProblem) -> Result<PlateSolution> {
    PlateSolver::new(disc, problem.lambda)?.solve(problem)
}
