//! Reference elements: Lagrange P1/P2 on tetrahedra and triangles, and the
//! Morley triangle.

use crate::error::{Error, Result};
use crate::fem::quadrature::Cell;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P1Tet,
    P2Tet,
    P1Tri,
    P2Tri,
    MorleyTri,
}

impl ElementKind {
    pub fn cell(self) -> Cell {
        match self {
            ElementKind::P1Tet | ElementKind::P2Tet => Cell::Tet,
            _ => Cell::Tri,
        }
    }

    pub fn dof_count(self) -> usize {
        match self {
            ElementKind::P1Tet => 4,
            ElementKind::P2Tet => 10,
            ElementKind::P1Tri => 3,
            ElementKind::P2Tri | ElementKind::MorleyTri => 6,
        }
    }

    pub fn is_lagrange(self) -> bool {
        self != ElementKind::MorleyTri
    }

    pub fn degree(self) -> usize {
        match self {
            ElementKind::P1Tet | ElementKind::P1Tri => 1,
            _ => 2,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "P1_TET" => Ok(ElementKind::P1Tet),
            "P2_TET" => Ok(ElementKind::P2Tet),
            "P1_TRI" => Ok(ElementKind::P1Tri),
            "P2_TRI" => Ok(ElementKind::P2Tri),
            "MORLEY_TRI" => Ok(ElementKind::MorleyTri),
            _ => Err(Error::InvalidArgument(format!("unknown element kind {name:?}"))),
        }
    }
}

/// Local edges of the tetrahedron, in the order of the P2 edge nodes.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
/// Local edges of the triangle, in the order of the P2 edge nodes and of the
/// Morley normal-derivative functionals.
pub const TRI_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [0, 2]];

/// A degree-of-freedom functional on a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofFunctional {
    PointValue(Vec3),
    /// Directional derivative along `normal` at `point`.
    NormalDerivative { point: Vec3, normal: Vec3 },
}

impl DofFunctional {
    pub fn apply(&self, value: impl Fn(&Vec3) -> f64, gradient: impl Fn(&Vec3) -> Vec3) -> f64 {
        match self {
            DofFunctional::PointValue(p) => value(p),
            DofFunctional::NormalDerivative { point, normal } => {
                let g = gradient(point);
                g[0] * normal[0] + g[1] * normal[1] + g[2] * normal[2]
            }
        }
    }
}

/// Quadratic polynomial space on a triangle, with the basis dual to six
/// given functionals.
///
/// Monomials are taken in the scaled coordinates `(x - c) / h` to keep the
/// 6×6 dual system well conditioned on small cells.
#[derive(Debug, Clone)]
pub struct QuadraticBasis {
    center: [f64; 2],
    scale: f64,
    /// `coeffs[j][k]`: coefficient of monomial `k` in basis function `j`.
    coeffs: [[f64; 6]; 6],
}

impl QuadraticBasis {
    pub fn new(corners: &[[f64; 2]; 3], functionals: &[DofFunctional; 6]) -> Result<Self> {
        let center = [
            (corners[0][0] + corners[1][0] + corners[2][0]) / 3.0,
            (corners[0][1] + corners[1][1] + corners[2][1]) / 3.0,
        ];
        let scale = TRI_EDGES
            .iter()
            .map(|&[a, b]| {
                let d = [corners[b][0] - corners[a][0], corners[b][1] - corners[a][1]];
                d[0].hypot(d[1])
            })
            .fold(0.0, f64::max);
        let mut basis = QuadraticBasis {
            center,
            scale,
            coeffs: [[0.0; 6]; 6],
        };
        // dual[i][k] = functional i applied to monomial k
        let mut dual = [[0.0; 6]; 6];
        for (i, f) in functionals.iter().enumerate() {
            for k in 0..6 {
                dual[i][k] = f.apply(
                    |x| basis.monomial(k, x),
                    |x| basis.monomial_gradient(k, x),
                );
            }
        }
        // coefficient matrix C with dual · C = I, basis j = column j of C
        let inv = invert(dual).ok_or_else(|| {
            Error::InvalidArgument("degenerate quadratic dual system".to_string())
        })?;
        for j in 0..6 {
            for k in 0..6 {
                basis.coeffs[j][k] = inv[k][j];
            }
        }
        Ok(basis)
    }

    fn local(&self, x: &Vec3) -> [f64; 2] {
        [
            (x[0] - self.center[0]) / self.scale,
            (x[1] - self.center[1]) / self.scale,
        ]
    }

    fn monomial(&self, k: usize, x: &Vec3) -> f64 {
        let [s, t] = self.local(x);
        [1.0, s, t, s * s, s * t, t * t][k]
    }

    fn monomial_gradient(&self, k: usize, x: &Vec3) -> Vec3 {
        let [s, t] = self.local(x);
        let g = [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [2.0 * s, 0.0],
            [t, s],
            [0.0, 2.0 * t],
        ][k];
        [g[0] / self.scale, g[1] / self.scale, 0.0]
    }

    pub fn values(&self, x: &Vec3) -> [f64; 6] {
        let [s, t] = self.local(x);
        let m = [1.0, s, t, s * s, s * t, t * t];
        std::array::from_fn(|j| (0..6).map(|k| self.coeffs[j][k] * m[k]).sum())
    }

    pub fn gradients(&self, x: &Vec3) -> [Vec3; 6] {
        let [s, t] = self.local(x);
        let h = self.scale;
        std::array::from_fn(|j| {
            let c = &self.coeffs[j];
            [
                (c[1] + 2.0 * c[3] * s + c[4] * t) / h,
                (c[2] + c[4] * s + 2.0 * c[5] * t) / h,
                0.0,
            ]
        })
    }

    /// Hessians are constant on the cell.
    pub fn hessians(&self) -> [Mat3; 6] {
        let h2 = self.scale * self.scale;
        std::array::from_fn(|j| {
            let c = &self.coeffs[j];
            [
                [2.0 * c[3] / h2, c[4] / h2, 0.0],
                [c[4] / h2, 2.0 * c[5] / h2, 0.0],
                [0.0, 0.0, 0.0],
            ]
        })
    }
}

/// Gauss–Jordan inverse with partial pivoting.
pub(crate) fn invert<const N: usize>(mut a: [[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut inv = [[0.0; N]; N];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for k in 0..N {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..N {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in 0..N {
                        a[r][k] -= f * a[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Morley functionals on a triangle: vertex values, then derivatives along
/// the given edge normals at the midpoints of [`TRI_EDGES`].
pub fn morley_functionals(corners: &[[f64; 2]; 3], normals: &[[f64; 2]; 3]) -> [DofFunctional; 6] {
    std::array::from_fn(|i| {
        if i < 3 {
            DofFunctional::PointValue([corners[i][0], corners[i][1], 0.0])
        } else {
            let [a, b] = TRI_EDGES[i - 3];
            let n = normals[i - 3];
            DofFunctional::NormalDerivative {
                point: [
                    0.5 * (corners[a][0] + corners[b][0]),
                    0.5 * (corners[a][1] + corners[b][1]),
                    0.0,
                ],
                normal: [n[0], n[1], 0.0],
            }
        }
    })
}

/// Outward unit normals of the edges of a counter-clockwise triangle.
pub fn outward_normals(corners: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    TRI_EDGES.map(|[a, b]| {
        let mut t = [corners[b][0] - corners[a][0], corners[b][1] - corners[a][1]];
        // TRI_EDGES[2] runs 0 -> 2, against the counter-clockwise orientation
        if a == 0 && b == 2 {
            t = [-t[0], -t[1]];
        }
        let len = t[0].hypot(t[1]);
        [t[1] / len, -t[0] / len]
    })
}

/// A finite element on its reference cell.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    kind: ElementKind,
    morley: Option<QuadraticBasis>,
}

const REF_TRI: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

pub fn make_element(kind: ElementKind) -> ReferenceElement {
    let morley = (kind == ElementKind::MorleyTri).then(|| {
        QuadraticBasis::new(
            &REF_TRI,
            &morley_functionals(&REF_TRI, &outward_normals(&REF_TRI)),
        )
        .expect("reference Morley element is unisolvent")
    });
    ReferenceElement { kind, morley }
}

fn barycentric(cell: Cell, xi: &Vec3) -> ([f64; 4], [Vec3; 4]) {
    match cell {
        Cell::Tet => (
            [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]],
            [
                [-1.0, -1.0, -1.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
        ),
        Cell::Tri => (
            [1.0 - xi[0] - xi[1], xi[0], xi[1], 0.0],
            [
                [-1.0, -1.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0],
            ],
        ),
    }
}

fn edges_of(cell: Cell) -> &'static [[usize; 2]] {
    match cell {
        Cell::Tet => &TET_EDGES,
        Cell::Tri => &TRI_EDGES,
    }
}

impl ReferenceElement {
    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn dof_count(&self) -> usize {
        self.kind.dof_count()
    }

    pub fn cell(&self) -> Cell {
        self.kind.cell()
    }

    /// Reference vertex coordinates.
    pub fn vertices(&self) -> Vec<Vec3> {
        match self.cell() {
            Cell::Tet => vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            Cell::Tri => REF_TRI.iter().map(|p| [p[0], p[1], 0.0]).collect(),
        }
    }

    /// The functionals the basis is dual to.
    pub fn functionals(&self) -> Vec<DofFunctional> {
        let v = self.vertices();
        match self.kind {
            ElementKind::MorleyTri => {
                morley_functionals(&REF_TRI, &outward_normals(&REF_TRI)).to_vec()
            }
            _ => {
                let mut out: Vec<DofFunctional> =
                    v.iter().map(|p| DofFunctional::PointValue(*p)).collect();
                if self.kind.degree() == 2 {
                    for &[a, b] in edges_of(self.cell()) {
                        out.push(DofFunctional::PointValue(std::array::from_fn(|d| {
                            0.5 * (v[a][d] + v[b][d])
                        })));
                    }
                }
                out
            }
        }
    }

    pub fn values(&self, xi: &Vec3) -> Vec<f64> {
        if let Some(m) = &self.morley {
            return m.values(xi).to_vec();
        }
        let cell = self.cell();
        let nv = cell.dim() + 1;
        let (l, _) = barycentric(cell, xi);
        let mut out: Vec<f64> = Vec::with_capacity(self.dof_count());
        if self.kind.degree() == 1 {
            out.extend_from_slice(&l[..nv]);
        } else {
            out.extend(l[..nv].iter().map(|li| li * (2.0 * li - 1.0)));
            out.extend(edges_of(cell).iter().map(|&[a, b]| 4.0 * l[a] * l[b]));
        }
        out
    }

    pub fn gradients(&self, xi: &Vec3) -> Vec<Vec3> {
        if let Some(m) = &self.morley {
            return m.gradients(xi).to_vec();
        }
        let cell = self.cell();
        let nv = cell.dim() + 1;
        let (l, g) = barycentric(cell, xi);
        let mut out = Vec::with_capacity(self.dof_count());
        if self.kind.degree() == 1 {
            out.extend_from_slice(&g[..nv]);
        } else {
            for i in 0..nv {
                let f = 4.0 * l[i] - 1.0;
                out.push(g[i].map(|c| f * c));
            }
            for &[a, b] in edges_of(cell) {
                out.push(std::array::from_fn(|d| 4.0 * (l[b] * g[a][d] + l[a] * g[b][d])));
            }
        }
        out
    }

    pub fn hessians(&self, xi: &Vec3) -> Vec<Mat3> {
        if let Some(m) = &self.morley {
            return m.hessians().to_vec();
        }
        let cell = self.cell();
        let nv = cell.dim() + 1;
        let (_, g) = barycentric(cell, xi);
        let outer = |a: &Vec3, b: &Vec3| -> Mat3 {
            std::array::from_fn(|r| std::array::from_fn(|c| a[r] * b[c] + b[r] * a[c]))
        };
        let mut out = Vec::with_capacity(self.dof_count());
        if self.kind.degree() == 1 {
            out.resize(nv, [[0.0; 3]; 3]);
        } else {
            for gi in g.iter().take(nv) {
                out.push(outer(gi, gi).map(|r| r.map(|v| 2.0 * v)));
            }
            for &[a, b] in edges_of(cell) {
                out.push(outer(&g[a], &g[b]).map(|r| r.map(|v| 4.0 * v)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ElementKind; 5] = [
        ElementKind::P1Tet,
        ElementKind::P2Tet,
        ElementKind::P1Tri,
        ElementKind::P2Tri,
        ElementKind::MorleyTri,
    ];

    fn duality_matrix(e: &ReferenceElement) -> Vec<Vec<f64>> {
        let n = e.dof_count();
        e.functionals()
            .iter()
            .map(|f| {
                (0..n)
                    .map(|j| f.apply(|x| e.values(x)[j], |x| e.gradients(x)[j]))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn dof_duality_is_identity() {
        for kind in KINDS {
            let e = make_element(kind);
            let d = duality_matrix(&e);
            for (i, row) in d.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-12, "{kind:?} ({i},{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn lagrange_partition_of_unity() {
        let pts = [[0.25, 0.25, 0.25], [0.1, 0.2, 0.3], [1.0 / 3.0, 1.0 / 3.0, 0.0]];
        for kind in KINDS.into_iter().filter(|k| k.is_lagrange()) {
            let e = make_element(kind);
            for p in &pts {
                let mut p = *p;
                if kind.cell() == Cell::Tri {
                    p[2] = 0.0;
                }
                let s: f64 = e.values(&p).iter().sum();
                assert!((s - 1.0).abs() < 1e-13);
                let g = e.gradients(&p);
                for d in 0..3 {
                    assert!(g.iter().map(|v| v[d]).sum::<f64>().abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        let x = [0.21, 0.17, 0.13];
        for kind in KINDS {
            let e = make_element(kind);
            let mut x = x;
            if kind.cell() == Cell::Tri {
                x[2] = 0.0;
            }
            let g = e.gradients(&x);
            let hs = e.hessians(&x);
            for d in 0..kind.cell().dim() {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let (vp, vm) = (e.values(&xp), e.values(&xm));
                let (gp, gm) = (e.gradients(&xp), e.gradients(&xm));
                for j in 0..e.dof_count() {
                    assert!(((vp[j] - vm[j]) / (2.0 * h) - g[j][d]).abs() < 1e-8);
                    for r in 0..3 {
                        assert!(((gp[j][r] - gm[j][r]) / (2.0 * h) - hs[j][r][d]).abs() < 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn morley_hessians_constant() {
        let e = make_element(ElementKind::MorleyTri);
        let a = e.hessians(&[0.1, 0.1, 0.0]);
        let b = e.hessians(&[0.5, 0.3, 0.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn p2_barycenter_partition() {
        let e = make_element(ElementKind::P2Tri);
        let s: f64 = e.values(&[1.0 / 3.0, 1.0 / 3.0, 0.0]).iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kind_names() {
        assert_eq!(ElementKind::parse("morley_tri").unwrap(), ElementKind::MorleyTri);
        assert!(ElementKind::parse("P3_TET").is_err());
    }
}
