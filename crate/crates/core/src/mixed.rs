//! Monolithic mixed formulation.
//!
//! Unknowns `σ = (u, w₂)` with `u` vector P2 (zero on the walls, tangential
//! components zero on the plate) and `w₂` clamped Morley. Constraints come
//! through multipliers `(q₀, g, c₀)`: zero-mean P1, P2 on the plate and one
//! scalar, with
//!
//! ```text
//! a_λ(σ, τ) = λ(u,v) + (∇u,∇v) + λ(w₂,z) + λρ(∇w₂,∇z) + (1/λ) a_h(w₂,z)
//! b(τ, μ)   = -(l, ∇·v) + ⟨h, v₃⟩ - ⟨h, z⟩ - (r, z)
//! ```
//!
//! and `w₁ = (w₂ + f₂) / λ` recovered afterwards.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::fem::{interpolate, make_quadrature, Cell, FeField, FunctionSpace};
use crate::linalg::dense::cholesky_solve;
use crate::linalg::{
    fractional_gram, generalized_eig, norm2, to_csr, ConstrainedSystem, CsrMatrix, DenseSymmetricPencil,
    TripletBuffer,
};
use crate::loads::LoadSet;
use crate::mesh::BoundaryTag;
use crate::plate::{assemble_mass_stiffness, assemble_morley, assemble_plate_load};
use crate::stokes::{apply_velocity_bc, assemble_stokes, assemble_velocity_load};

/// Index layout of `σ = (u, w₂)`: velocity dofs first, then Morley dofs.
#[derive(Debug, Clone)]
pub struct SigmaSpace {
    pub n_velocity: usize,
    pub n_plate: usize,
    /// Dofs removed by the essential conditions.
    pub constrained: Vec<bool>,
}

impl SigmaSpace {
    pub fn new(disc: &Discretization) -> Result<Self> {
        // as for Stokes, except that u₃ stays free on the plate
        let (mut constrained, _) = apply_velocity_bc(&disc.velocity, &disc.trace_nodes, None)?;
        for &a in disc.velocity.boundary_nodes(BoundaryTag::Plate) {
            constrained[3 * a + 2] = false;
        }
        let n_velocity = constrained.len();
        let n_plate = disc.morley.n_dofs();
        constrained.resize(n_velocity + n_plate, false);
        for &d in disc.morley.rim_nodes() {
            constrained[n_velocity + d] = true;
        }
        Ok(SigmaSpace { n_velocity, n_plate, constrained })
    }

    pub fn dim(&self) -> usize {
        self.n_velocity + self.n_plate
    }

    pub fn free(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.constrained[i]).collect()
    }
}

/// Index layout of `(l, h, r)`: zero-mean P1 coordinates, P2 on the plate
/// vanishing on the rim (the same nodes as the free velocity trace), scalar.
#[derive(Debug, Clone)]
pub struct MultiplierSpace {
    /// `∫ φ_i` of the P1 basis; the zero-mean basis is
    /// `ψ_i = φ_i - (m_i / m_last) φ_last`.
    pub pressure_mean: Vec<f64>,
    /// Interior P2 plate nodes carrying `h`.
    pub trace_nodes: Vec<usize>,
    /// Position of each P2 plate node in `trace_nodes`, if interior.
    trace_index: Vec<Option<usize>>,
}

impl MultiplierSpace {
    pub fn new(disc: &Discretization, pressure_mean: Vec<f64>) -> Self {
        let rim = disc.plate_p2.rim_nodes();
        let trace_nodes: Vec<usize> =
            (0..disc.plate_p2.n_dofs()).filter(|k| rim.binary_search(k).is_err()).collect();
        let mut trace_index = vec![None; disc.plate_p2.n_dofs()];
        for (k, &node) in trace_nodes.iter().enumerate() {
            trace_index[node] = Some(k);
        }
        MultiplierSpace { pressure_mean, trace_nodes, trace_index }
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure_mean.len() - 1
    }

    pub fn n_trace(&self) -> usize {
        self.trace_nodes.len()
    }

    /// Multiplier row of P2 plate node `node`, if it carries one.
    fn trace_row(&self, node: usize) -> Option<usize> {
        self.trace_index[node].map(|k| self.n_pressure() + k)
    }

    /// Full P2 plate coefficients of the trace multiplier `h`.
    pub fn trace_coefficients(&self, h: &[f64], n_nodes: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_nodes];
        for (k, &node) in self.trace_nodes.iter().enumerate() {
            out[node] = h[k];
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n_pressure() + self.n_trace() + 1
    }

    /// P1 coefficients of `Σ l_i ψ_i`.
    pub fn pressure_coefficients(&self, l: &[f64]) -> Vec<f64> {
        let m = &self.pressure_mean;
        let last = m[m.len() - 1];
        let mut out = l.to_vec();
        out.push(-l.iter().zip(m).map(|(a, mi)| a * mi / last).sum::<f64>());
        out
    }

    /// The `np × (np-1)` matrix whose columns are the `ψ_i`.
    fn basis(&self) -> Mat<f64> {
        let np = self.pressure_mean.len();
        let last = self.pressure_mean[np - 1];
        Mat::from_fn(np, np - 1, |r, c| {
            if r == c {
                1.0
            } else if r == np - 1 {
                -self.pressure_mean[c] / last
            } else {
                0.0
            }
        })
    }
}

/// `(a, b)` over the basis of two scalar spaces on the same triangle mesh.
fn cross_mass(rows: &FunctionSpace, cols: &FunctionSpace) -> Result<CsrMatrix> {
    if !rows.same_mesh(cols) {
        return Err(Error::SpaceMismatch("cross mass needs a common mesh".into()));
    }
    let rule = make_quadrature(Cell::Tri, 4)?;
    let (nr, nc) = (rows.element().dof_count(), cols.element().dof_count());
    let mut t = TripletBuffer::with_capacity(rows.n_dofs(), cols.n_dofs(), rows.n_cells() * nr * nc);
    let mut local = vec![0.0; nr * nc];
    for cell in 0..rows.n_cells() {
        let (tr, tc) = (rows.tabulate(cell, &rule), cols.tabulate(cell, &rule));
        local.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..tr.n_points() {
            for i in 0..nr {
                for j in 0..nc {
                    local[i * nc + j] += tr.jxw[q] * tr.value(q, i) * tc.value(q, j);
                }
            }
        }
        t.add_block(rows.cell_nodes(cell), cols.cell_nodes(cell), &local);
    }
    to_csr(&t)
}

/// `a_λ` on all of `σ` (constraints not applied).
pub fn assemble_a_lambda(disc: &Discretization, lambda: f64, rho: f64) -> Result<CsrMatrix> {
    if !(lambda > 0.0 && rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("need λ > 0 and ρ ≥ 0, got {lambda}, {rho}")));
    }
    let stokes = assemble_stokes(&disc.velocity, &disc.pressure, lambda, 1.0)?;
    let morley = assemble_morley(&disc.morley)?;
    let nu = disc.velocity.n_dofs();
    let n = nu + disc.morley.n_dofs();
    let mut t = TripletBuffer::with_capacity(n, n, stokes.velocity.nnz() + 3 * morley.mass.nnz());
    t.extend_shifted(&stokes.velocity, 0, 0);
    for (r, c, v) in morley.mass.iter() {
        t.push(nu + r, nu + c, lambda * v);
    }
    if rho != 0.0 {
        let (_, stiff) = assemble_mass_stiffness(&disc.morley)?;
        for (r, c, v) in stiff.iter() {
            t.push(nu + r, nu + c, lambda * rho * v);
        }
    }
    for (r, c, v) in morley.hessian.iter() {
        t.push(nu + r, nu + c, v / lambda);
    }
    to_csr(&t)
}

/// Constraint matrix with rows `(l, h, r)` and columns `σ`.
pub fn assemble_b(disc: &Discretization) -> Result<(CsrMatrix, MultiplierSpace)> {
    let stokes = assemble_stokes(&disc.velocity, &disc.pressure, 1.0, 1.0)?;
    let mult = MultiplierSpace::new(disc, stokes.pressure_mean.clone());
    let nu = disc.velocity.n_dofs();
    let ncols = nu + disc.morley.n_dofs();
    let npl = mult.n_pressure();
    let mut t = TripletBuffer::new(mult.dim(), ncols);

    // -(ψ_i, ∇·v)
    let m = &mult.pressure_mean;
    let last_row: Vec<(usize, f64)> = stokes.divergence.row(npl).collect();
    for i in 0..npl {
        for (c, v) in stokes.divergence.row(i) {
            t.push(i, c, -v);
        }
        let s = m[i] / m[npl];
        for &(c, v) in &last_row {
            t.push(i, c, s * v);
        }
    }
    // ⟨h, v₃⟩ through the trace node map
    let (p2_mass, _) = assemble_mass_stiffness(&disc.plate_p2)?;
    let mut vel_of_plate = vec![usize::MAX; disc.plate_p2.n_dofs()];
    for &(n3, n2) in &disc.trace_nodes {
        vel_of_plate[n2] = n3;
    }
    if let Some(k) = vel_of_plate.iter().position(|&v| v == usize::MAX) {
        return Err(Error::Trace(format!("plate node {k} has no velocity node")));
    }
    for (r, c, v) in p2_mass.iter() {
        if let Some(row) = mult.trace_row(r) {
            t.push(row, 3 * vel_of_plate[c] + 2, v);
        }
    }
    // -⟨h, z⟩
    let hz = cross_mass(&disc.plate_p2, &disc.morley)?;
    for (r, c, v) in hz.iter() {
        if let Some(row) = mult.trace_row(r) {
            t.push(row, nu + c, -v);
        }
    }
    // -(r, z)
    let one = interpolate(&disc.plate_p2, &[&crate::fem::Constant(1.0)])?;
    for (c, v) in hz.mul_transpose_vec(one.coeffs()).into_iter().enumerate() {
        t.push(mult.dim() - 1, nu + c, -v);
    }
    Ok((to_csr(&t)?, mult))
}

#[derive(Debug, Clone)]
pub struct MonolithicSolution {
    pub u: FeField,
    /// Plate velocity (Morley).
    pub w2: FeField,
    /// Pressure multiplier (zero-mean P1).
    pub q0: FeField,
    /// Plate traction multiplier (P2 on the plate, zero on the rim).
    pub g: FeField,
    pub c0: f64,
    /// `(w₂ + I f₂) / λ` in the Morley space.
    pub w1: FeField,
    /// `‖B σ‖₂`.
    pub constraint_residual: f64,
}

/// Assembles and solves the full saddle-point system.
pub fn solve_monolithic(disc: &Discretization, lambda: f64, rho: f64, loads: &LoadSet) -> Result<MonolithicSolution> {
    let a = assemble_a_lambda(disc, lambda, rho)?;
    let (b, mult) = assemble_b(disc)?;
    let sigma = SigmaSpace::new(disc)?;
    let ns = sigma.dim();
    let n = ns + mult.dim();
    let mut t = TripletBuffer::with_capacity(n, n, a.nnz() + 2 * b.nnz());
    t.extend_shifted(&a, 0, 0);
    for (r, c, v) in b.iter() {
        t.push(ns + r, c, v);
        t.push(c, ns + r, v);
    }
    let mut mask = sigma.constrained.clone();
    mask.resize(n, false);
    let system = ConstrainedSystem::new(&to_csr(&t)?, mask)
        .map_err(|e| e.context("factoring the monolithic saddle system"))?;

    let mut rhs = assemble_velocity_load(&disc.velocity, &loads.f1)?;
    let morley = assemble_morley(&disc.morley)?;
    let f2 = interpolate(&disc.morley, &[loads.f2.as_ref()])?;
    let hf2 = morley.hessian.mul_vec(f2.coeffs());
    let fz = assemble_plate_load(&disc.morley, &[(1.0, loads.f3.as_ref())])?;
    rhs.extend(fz.iter().zip(&hf2).map(|(f, h)| f - h / lambda));
    rhs.resize(n, 0.0);
    let x = system.solve(&rhs, &vec![0.0; n])?;

    let nu = sigma.n_velocity;
    let npl = mult.n_pressure();
    let residual = norm2(&b.mul_vec(&x[..ns]));
    let w2 = FeField::new(disc.morley.clone(), x[nu..ns].to_vec())?;
    let w1 = FeField::new(
        disc.morley.clone(),
        w2.coeffs().iter().zip(f2.coeffs()).map(|(w, f)| (w + f) / lambda).collect(),
    )?;
    Ok(MonolithicSolution {
        u: FeField::new(disc.velocity.clone(), x[..nu].to_vec())?,
        w2,
        q0: FeField::new(disc.pressure.clone(), mult.pressure_coefficients(&x[ns..ns + npl]))?,
        g: FeField::new(
            disc.plate_p2.clone(),
            mult.trace_coefficients(&x[ns + npl..n - 1], disc.plate_p2.n_dofs()),
        )?,
        c0: x[n - 1],
        w1,
        constraint_residual: residual,
    })
}

/// Which multiplier rows enter the inf-sup estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierRows {
    All,
    /// Only the pressure rows: the velocity–pressure LBB constant.
    PressureOnly,
}

/// Dense ingredients of the inf-sup estimate on the free dofs: `Σ` Gram
/// `X`, constraint matrix `B` and multiplier Gram `M`.
#[derive(Debug, Clone)]
pub struct InfSupMatrices {
    pub x: Mat<f64>,
    pub b: Mat<f64>,
    pub m: Mat<f64>,
}

fn sym(m: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

pub fn infsup_matrices(disc: &Discretization, rows: MultiplierRows) -> Result<InfSupMatrices> {
    let sigma = SigmaSpace::new(disc)?;
    let free = sigma.free();
    let nu = sigma.n_velocity;
    let stokes = assemble_stokes(&disc.velocity, &disc.pressure, 1.0, 1.0)?;
    let morley = assemble_morley(&disc.morley)?;
    let mut t = TripletBuffer::new(sigma.dim(), sigma.dim());
    t.extend_shifted(&stokes.velocity, 0, 0);
    t.extend_shifted(&morley.hessian, nu, nu);
    t.extend_shifted(&morley.mass, nu, nu);
    let x = sym(&to_csr(&t)?.select(&free, &free).to_dense());

    let (b_full, mult) = assemble_b(disc)?;
    let npl = mult.n_pressure();
    let kept: Vec<usize> = match rows {
        MultiplierRows::All => (0..mult.dim()).collect(),
        MultiplierRows::PressureOnly => (0..npl).collect(),
    };
    let b = b_full.select(&kept, &free).to_dense();

    let (p_mass, _) = assemble_mass_stiffness(&disc.pressure)?;
    let psi = mult.basis();
    let mq = psi.transpose() * (p_mass.to_dense() * &psi);
    let mut m = Mat::<f64>::zeros(kept.len(), kept.len());
    for i in 0..npl {
        for j in 0..npl {
            m[(i, j)] = mq[(i, j)];
        }
    }
    if rows == MultiplierRows::All {
        let (m2, k2) = assemble_mass_stiffness(&disc.plate_p2)?;
        let tn = &mult.trace_nodes;
        let g = fractional_gram(&m2.select(tn, tn).to_dense(), &k2.select(tn, tn).to_dense(), -0.5)?;
        for i in 0..mult.n_trace() {
            for j in 0..mult.n_trace() {
                m[(npl + i, npl + j)] = g[(i, j)];
            }
        }
        m[(kept.len() - 1, kept.len() - 1)] = disc.mesh2.total_area();
    }
    Ok(InfSupMatrices { x, b, m: sym(&m) })
}

impl InfSupMatrices {
    /// Ascending eigenvalues of `(B X⁻¹ Bᵀ, M)`.
    pub fn schur_spectrum(&self) -> Result<Vec<f64>> {
        let mut xb = self.b.transpose().to_owned();
        cholesky_solve(&self.x, &mut xb)?;
        let s = sym(&(&self.b * &xb));
        Ok(generalized_eig(&DenseSymmetricPencil::new(s, self.m.clone())?)?.values)
    }

    /// The same spectrum from `[[X, Bᵀ], [B, 0]] z = μ diag(X, M) z`: each
    /// `μ ≤ 0` gives `β² = μ² - μ`.
    pub fn augmented_spectrum(&self) -> Result<Vec<f64>> {
        let (ns, nm) = (self.x.nrows(), self.m.nrows());
        let n = ns + nm;
        let a = Mat::from_fn(n, n, |i, j| match (i < ns, j < ns) {
            (true, true) => self.x[(i, j)],
            (true, false) => self.b[(j - ns, i)],
            (false, true) => self.b[(i - ns, j)],
            (false, false) => 0.0,
        });
        let d = Mat::from_fn(n, n, |i, j| match (i < ns, j < ns) {
            (true, true) => self.x[(i, j)],
            (false, false) => self.m[(i - ns, j - ns)],
            _ => 0.0,
        });
        let mu = generalized_eig(&DenseSymmetricPencil::new(a, d)?)?.values;
        let mut out: Vec<f64> = mu[..nm].iter().map(|&m| m * m - m).collect();
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSupReport {
    pub n: usize,
    pub beta: f64,
    /// Five smallest eigenvalues of the Schur pencil (`β²` first).
    pub eigs_tail: Vec<f64>,
}

fn report(n: usize, eigs: &[f64]) -> InfSupReport {
    InfSupReport {
        n,
        beta: eigs[0].max(0.0).sqrt(),
        eigs_tail: eigs.iter().take(5).copied().collect(),
    }
}

/// Discrete inf-sup constant of `b` on `disc`, labelled with `n`.
pub fn estimate_infsup(disc: &Discretization, n: usize) -> Result<InfSupReport> {
    let eigs = infsup_matrices(disc, MultiplierRows::All)?.schur_spectrum()?;
    Ok(report(n, &eigs))
}

/// As [`estimate_infsup`] on the unit-cube mesh with `n` subdivisions. The
/// eigensolve is dense, so `n` is capped at 4.
pub fn estimate_infsup_unit_cube(n: usize) -> Result<InfSupReport> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidArgument(format!("inf-sup estimate needs 1 ≤ n ≤ 4, got {n}")));
    }
    estimate_infsup(&Discretization::unit_cube(n)?, n)
}

impl MonolithicSolution {
    /// `∫ w₂`.
    pub fn plate_mean(&self) -> f64 {
        self.w2.integral()[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Constant;
    use crate::mesh::{extract_plate_mesh, renumber_plate, Mesh3D};
    use crate::verification::ExactSolution;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rho_zero_drops_the_gradient_block_exactly() {
        let disc = Discretization::unit_cube(2).unwrap();
        let a0 = assemble_a_lambda(&disc, 1.5, 0.0).unwrap();
        let a1 = assemble_a_lambda(&disc, 1.5, 0.3).unwrap();
        let (_, k) = assemble_mass_stiffness(&disc.morley).unwrap();
        let nu = disc.velocity.n_dofs();
        // rebuild without the term, independently of the ρ branch
        let stokes = assemble_stokes(&disc.velocity, &disc.pressure, 1.5, 1.0).unwrap();
        let mor = assemble_morley(&disc.morley).unwrap();
        let mut t = TripletBuffer::new(a0.nrows(), a0.ncols());
        t.extend_shifted(&stokes.velocity, 0, 0);
        for (r, c, v) in mor.mass.iter() {
            t.push(nu + r, nu + c, 1.5 * v);
        }
        for (r, c, v) in mor.hessian.iter() {
            t.push(nu + r, nu + c, v / 1.5);
        }
        let manual = to_csr(&t).unwrap();
        assert_eq!(a0.values(), manual.values());
        assert_eq!(a0.col_idx(), manual.col_idx());
        for (r, c, v) in k.iter() {
            let d = a1.get(nu + r, nu + c) - a0.get(nu + r, nu + c);
            assert!((d - 1.5 * 0.3 * v).abs() < 1e-12);
        }
    }

    #[test]
    fn a_lambda_coercive_on_constrained_space() {
        let disc = Discretization::unit_cube(2).unwrap();
        let sigma = SigmaSpace::new(&disc).unwrap();
        let free = sigma.free();
        for (lambda, rho) in [(1.0, 0.0), (0.1, 2.0), (10.0, 0.0)] {
            let a = assemble_a_lambda(&disc, lambda, rho).unwrap();
            assert!(a.max_asymmetry() < 1e-12);
            let ad = a.select(&free, &free).to_dense();
            let eye = Mat::<f64>::identity(free.len(), free.len());
            let eig = generalized_eig(&DenseSymmetricPencil::new(sym(&ad), eye).unwrap()).unwrap();
            assert!(eig.values[0] > 0.0);
        }
        let a = assemble_a_lambda(&disc, 1.0, 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut v = vec![0.0; sigma.dim()];
            for &i in &free {
                v[i] = rng.gen_range(-1.0..1.0);
            }
            let av = a.mul_vec(&v);
            assert!(v.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>() > 0.0);
        }
    }

    #[test]
    fn b_examples() {
        let disc = Discretization::unit_cube(3).unwrap();
        let (b, mult) = assemble_b(&disc).unwrap();
        let nu = disc.velocity.n_dofs();
        // a divergence-free field with no normal flux through the plate
        let v = interpolate(
            &disc.velocity,
            &[&|x: &[f64; 3]| x[1], &|x: &[f64; 3]| x[2] - x[0], &Constant(0.0)],
        )
        .unwrap();
        let mut sigma = v.into_coeffs();
        sigma.resize(nu + disc.morley.n_dofs(), 0.0);
        let bs = b.mul_vec(&sigma);
        assert!(bs[..mult.n_pressure()].iter().all(|x| x.abs() < 1e-14));
        // r row on the interpolant of a zero-mean plate function
        let z = interpolate(&disc.morley, &[&crate::verification::ExactSolution::benchmark(1.0).w2]).unwrap();
        let mut sigma = vec![0.0; nu];
        sigma.extend_from_slice(z.coeffs());
        let r = b.mul_vec(&sigma)[mult.dim() - 1];
        assert!(r.abs() < 1e-5, "{r}");
    }

    #[test]
    fn b_consistency_decreases_under_refinement() {
        let ex = ExactSolution::benchmark(1.0);
        // nested meshes
        let mut prev = f64::INFINITY;
        for n in [2, 4, 6] {
            let disc = Discretization::unit_cube(n).unwrap();
            let (b, _) = assemble_b(&disc).unwrap();
            let u = interpolate(&disc.velocity, &ex.u_functions()).unwrap();
            let w = interpolate(&disc.morley, &[&ex.w2]).unwrap();
            let mut s = u.into_coeffs();
            s.extend_from_slice(w.coeffs());
            let r = norm2(&b.mul_vec(&s));
            assert!(r < prev, "n={n}: {r} ≥ {prev}");
            prev = r;
        }
    }

    #[test]
    fn zero_loads_give_zero() {
        let disc = Discretization::unit_cube(2).unwrap();
        let s = solve_monolithic(&disc, 1.0, 0.0, &LoadSet::zero()).unwrap();
        for f in [&s.u, &s.w2, &s.q0, &s.g, &s.w1] {
            assert!(f.coeffs().iter().all(|&v| v == 0.0));
        }
        assert_eq!(s.c0, 0.0);
    }

    #[test]
    fn constraints_hold_for_the_benchmark() {
        let disc = Discretization::unit_cube(2).unwrap();
        let s = solve_monolithic(&disc, 1.0, 0.0, &ExactSolution::benchmark(1.0).loads()).unwrap();
        assert!(s.plate_mean().abs() <= 1e-10);
        assert!(s.constraint_residual <= 1e-9);
        let stokes = assemble_stokes(&disc.velocity, &disc.pressure, 1.0, 1.0).unwrap();
        assert!(stokes.zero_mean_divergence(s.u.coeffs()) <= 1e-9);
        assert!(s.q0.integral()[0].abs() < 1e-13);
    }

    #[test]
    fn multiplier_tracks_plate_traction() {
        // g stands for p - ∂u₃/∂z on the plate, up to a constant
        let ex = ExactSolution::benchmark(1.0);
        let traction = ex.p.clone().plus(ex.u[2].partial([0, 0, 1]).scaled(-1.0)).restrict_z(0.0);
        let centred = |f: FeField| {
            let m = f.integral()[0];
            FeField::new(f.space().clone(), f.coeffs().iter().map(|v| v - m).collect()).unwrap()
        };
        let mut prev = f64::INFINITY;
        for n in [4, 6, 8] {
            let disc = Discretization::unit_cube(n).unwrap();
            let s = solve_monolithic(&disc, 1.0, 0.0, &ex.loads()).unwrap();
            let exact = centred(interpolate(&disc.plate_p2, &[&traction]).unwrap());
            let d = centred(s.g).difference(&exact).unwrap().l2_norm();
            assert!(d < prev, "n={n}: {d} ≥ {prev}");
            prev = d;
        }
    }

    #[test]
    fn infsup_two_paths_and_lbb() {
        let disc = Discretization::unit_cube(2).unwrap();
        let mats = infsup_matrices(&disc, MultiplierRows::All).unwrap();
        let s = mats.schur_spectrum().unwrap();
        let a = mats.augmented_spectrum().unwrap();
        assert!(s[0] > 0.0);
        for k in 0..5 {
            assert!((s[k] - a[k]).abs() <= 1e-8 * s[k], "{k}: {} vs {}", s[k], a[k]);
        }
        let th = infsup_matrices(&disc, MultiplierRows::PressureOnly).unwrap().schur_spectrum().unwrap();
        assert!(th[0] > 0.0);
        let r = estimate_infsup(&disc, 2).unwrap();
        assert_eq!(r.eigs_tail.len(), 5);
        assert!((r.beta - s[0].sqrt()).abs() < 1e-15);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"eigs_tail\""));
        assert!(estimate_infsup_unit_cube(5).is_err());
    }

    #[test]
    fn infsup_invariant_under_renumbering() {
        let base = estimate_infsup_unit_cube(2).unwrap().beta;
        let mesh = Mesh3D::unit_cube(2).unwrap();
        let nv = mesh.n_vertices();
        let mut perm: Vec<usize> = (0..nv).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for i in (1..nv).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let m3 = mesh.renumbered(&perm).unwrap();
        let (m2, tr) = extract_plate_mesh(&m3).unwrap();
        let np = m2.n_vertices();
        let perm2: Vec<usize> = (0..np).rev().collect();
        let (m2, tr) = renumber_plate(&m2, &tr, &perm2).unwrap();
        let disc = Discretization::from_meshes(m3, m2, tr).unwrap();
        let beta = estimate_infsup(&disc, 2).unwrap().beta;
        assert!((beta - base).abs() < 1e-10 * base, "{beta} vs {base}");
    }
}
