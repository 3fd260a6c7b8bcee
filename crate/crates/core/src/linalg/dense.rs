//! Dense symmetric-definite eigenproblems and spectral matrix powers.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Symmetric `A` with symmetric positive definite `B`.
#[derive(Debug, Clone)]
pub struct DenseSymmetricPencil {
    a: Mat<f64>,
    b: Mat<f64>,
}

fn max_abs(m: &Mat<f64>) -> f64 {
    let mut s = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s = s.max(m[(i, j)].abs());
        }
    }
    s
}

fn check_symmetric(m: &Mat<f64>, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!("{name} is not square")));
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    for j in 0..m.ncols() {
        for i in 0..j {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "{name} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

impl DenseSymmetricPencil {
    pub fn new(a: Mat<f64>, b: Mat<f64>) -> Result<Self> {
        check_symmetric(&a, "A")?;
        check_symmetric(&b, "B")?;
        if a.nrows() != b.nrows() {
            return Err(Error::InvalidArgument("pencil dimensions differ".into()));
        }
        Ok(DenseSymmetricPencil { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Mat<f64> {
        &self.a
    }

    pub fn b(&self) -> &Mat<f64> {
        &self.b
    }
}

#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors, one per column.
    pub vectors: Mat<f64>,
}

/// Solves `A v = λ B v` through the Cholesky factor `B = L Lᵀ` and the
/// standard problem for `L⁻¹ A L⁻ᵀ`.
pub fn generalized_eig(p: &DenseSymmetricPencil) -> Result<GeneralizedEigen> {
    let n = p.dim();
    let llt = p.b.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    let l = llt.L().to_owned();
    // C = L⁻¹ A L⁻ᵀ
    let mut y = p.a.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(
        l.as_ref(),
        y.as_mut(),
        faer::Par::Seq,
    );
    let mut c = y.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(
        l.as_ref(),
        c.as_mut(),
        faer::Par::Seq,
    );
    // symmetrize rounding noise
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let values: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    // V = L⁻ᵀ W
    let mut vectors = evd.U().to_owned();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(
        l.transpose(),
        vectors.as_mut(),
        faer::Par::Seq,
    );
    Ok(GeneralizedEigen { values, vectors })
}

/// Gram matrix of the discrete `Hˢ` norm built from a mass matrix `M` and a
/// stiffness matrix `K`: with `(K + M) V = M V diag(μ)` and `Vᵀ M V = I`,
/// returns `M V diag(μˢ) Vᵀ M`. `s = 0` returns `M` itself.
pub fn fractional_gram(mass: &Mat<f64>, stiffness: &Mat<f64>, s: f64) -> Result<Mat<f64>> {
    if s == 0.0 {
        check_symmetric(mass, "M")?;
        return Ok(mass.clone());
    }
    let shifted = stiffness + mass;
    let eig = generalized_eig(&DenseSymmetricPencil::new(shifted, mass.clone())?)?;
    let mv = mass * &eig.vectors;
    let n = mass.nrows();
    let scaled = Mat::from_fn(n, n, |i, j| mv[(i, j)] * eig.values[j].powf(s));
    let g = &scaled * mv.transpose();
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)])))
}

/// Solves a dense SPD system in place, one right-hand side per column.
pub fn cholesky_solve(a: &Mat<f64>, rhs: &mut Mat<f64>) -> Result<()> {
    let llt = a.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    llt.solve_in_place(rhs.as_mut());
    Ok(())
}
