//! Error norms against analytic fields, and observed convergence rates.

use crate::error::{Error, Result};
use crate::fem::{make_quadrature, Cell, FeField, ScalarFunction};

pub const ERROR_DEGREE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    /// Gradient seminorm, cellwise (broken for Morley).
    H1,
    /// Cellwise Hessian seminorm; plate fields of degree two only.
    H2Broken,
}

/// `‖u_h - u‖` over the mesh of `field`, one analytic function per component.
pub fn error_norm(field: &FeField, exact: &[&dyn ScalarFunction], norm: Norm) -> Result<f64> {
    let space = field.space();
    let nc = space.components();
    if exact.len() != nc {
        return Err(Error::InvalidArgument(format!(
            "{} exact components for a {}-component field",
            exact.len(),
            nc
        )));
    }
    if norm == Norm::H2Broken && (space.kind().cell() != Cell::Tri || space.kind().degree() < 2) {
        return Err(Error::InvalidArgument(format!("broken H² is not defined for {:?}", space.kind())));
    }
    let dims = space.kind().cell().dim();
    let rule = make_quadrature(space.kind().cell(), ERROR_DEGREE)?;
    let coeffs = field.coeffs();
    let mut sum = 0.0;
    for cell in 0..space.n_cells() {
        let tab = space.tabulate(cell, &rule);
        let nodes = space.cell_nodes(cell);
        for q in 0..tab.n_points() {
            let x = &tab.points[q];
            let mut local = 0.0;
            for (k, f) in exact.iter().enumerate() {
                let coef = |i: usize| coeffs[nc * nodes[i] + k];
                match norm {
                    Norm::L2 => {
                        let uh: f64 = (0..nodes.len()).map(|i| coef(i) * tab.value(q, i)).sum();
                        local += (uh - f.value(x)).powi(2);
                    }
                    Norm::H1 => {
                        let g = f
                            .gradient(x)
                            .ok_or_else(|| Error::InvalidArgument("exact gradient missing".into()))?;
                        for d in 0..dims {
                            let gh: f64 = (0..nodes.len()).map(|i| coef(i) * tab.gradient(q, i)[d]).sum();
                            local += (gh - g[d]).powi(2);
                        }
                    }
                    Norm::H2Broken => {
                        let h = f
                            .hessian(x)
                            .ok_or_else(|| Error::InvalidArgument("exact Hessian missing".into()))?;
                        for r in 0..dims {
                            for c in 0..dims {
                                let hh: f64 = (0..nodes.len()).map(|i| coef(i) * tab.hessian(q, i)[r][c]).sum();
                                local += (hh - h[r][c]).powi(2);
                            }
                        }
                    }
                }
            }
            sum += tab.jxw[q] * local;
        }
    }
    Ok(sum.sqrt())
}

/// Observed order `ln(e_c / e_f) / ln(h_c / h_f)`.
pub fn rate(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0 && h_fine > 0.0 && h_coarse > h_fine) {
        return Err(Error::InvalidArgument(format!(
            "rate needs positive errors and h_coarse > h_fine > 0 (got {e_coarse}, {e_fine}, {h_coarse}, {h_fine})"
        )));
    }
    Ok((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}
