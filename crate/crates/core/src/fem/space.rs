//! Global function spaces, finite element fields, interpolation and point
//! evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::element::{
    make_element, morley_functionals, ElementKind, Mat3, QuadraticBasis, ReferenceElement, Vec3,
    TET_EDGES, TRI_EDGES,
};
use crate::fem::function::ScalarFunction;
use crate::fem::quadrature::{make_quadrature, Cell, QuadratureRule};
use crate::mesh::{BoundaryTag, Mesh2D, Mesh3D, TraceMap, GEOM_TOL};

#[derive(Debug, Clone)]
pub enum SpaceMesh {
    Tet(Arc<Mesh3D>),
    Tri(Arc<Mesh2D>),
}

impl SpaceMesh {
    pub fn n_cells(&self) -> usize {
        match self {
            SpaceMesh::Tet(m) => m.n_tets(),
            SpaceMesh::Tri(m) => m.n_triangles(),
        }
    }

    fn same_as(&self, other: &SpaceMesh) -> bool {
        match (self, other) {
            (SpaceMesh::Tet(a), SpaceMesh::Tet(b)) => Arc::ptr_eq(a, b),
            (SpaceMesh::Tri(a), SpaceMesh::Tri(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Affine map `x = origin + J ξ` of a cell. Triangles are embedded in the
/// plane `x₃ = 0` with `J[2][2] = 1`.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub origin: Vec3,
    pub jacobian: Mat3,
    /// `J⁻ᵀ`
    pub inverse_transpose: Mat3,
    /// `|det J|`
    pub det: f64,
}

impl CellGeometry {
    fn new(corners: &[Vec3], cell: Cell) -> Self {
        let o = corners[0];
        let mut j = [[0.0; 3]; 3];
        for c in 0..cell.dim() {
            for r in 0..3 {
                j[r][c] = corners[c + 1][r] - o[r];
            }
        }
        if cell == Cell::Tri {
            j[2][2] = 1.0;
        }
        let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
            - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
            + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
        let mut inv_t = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                // cofactor(r, c) / det gives (J⁻¹)ᵀ[r][c]
                let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                inv_t[r][c] = (j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]) / det;
            }
        }
        CellGeometry {
            origin: o,
            jacobian: j,
            inverse_transpose: inv_t,
            det: det.abs(),
        }
    }

    pub fn map(&self, xi: &Vec3) -> Vec3 {
        std::array::from_fn(|r| self.origin[r] + (0..3).map(|c| self.jacobian[r][c] * xi[c]).sum::<f64>())
    }

    /// `ξ = J⁻¹ (x - origin)`
    pub fn pullback(&self, x: &Vec3) -> Vec3 {
        let d: Vec3 = std::array::from_fn(|r| x[r] - self.origin[r]);
        std::array::from_fn(|c| (0..3).map(|r| self.inverse_transpose[r][c] * d[r]).sum())
    }

    fn push_gradient(&self, g: &Vec3) -> Vec3 {
        std::array::from_fn(|r| (0..3).map(|c| self.inverse_transpose[r][c] * g[c]).sum())
    }

    fn push_hessian(&self, h: &Mat3) -> Mat3 {
        let a = &self.inverse_transpose;
        std::array::from_fn(|r| {
            std::array::from_fn(|c| {
                let mut s = 0.0;
                for i in 0..3 {
                    for k in 0..3 {
                        s += a[r][i] * h[i][k] * a[c][k];
                    }
                }
                s
            })
        })
    }
}

/// Basis data of one cell at the points of a quadrature rule, stored
/// point-major (`values[q * n_local + i]`).
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_local: usize,
    pub points: Vec<Vec3>,
    pub jxw: Vec<f64>,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec3>,
    pub hessians: Vec<Mat3>,
}

impl Tabulation {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n_local + i]
    }

    pub fn gradient(&self, q: usize, i: usize) -> &Vec3 {
        &self.gradients[q * self.n_local + i]
    }

    pub fn hessian(&self, q: usize, i: usize) -> &Mat3 {
        &self.hessians[q * self.n_local + i]
    }
}

/// Scalar (or 3-vector) finite element space over a mesh.
///
/// Scalar nodes are numbered vertices first, then edges in lexicographic
/// order of their vertex pairs. Vector spaces interleave components, so the
/// global dof of component `c` at node `a` is `3 a + c`.
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    kind: ElementKind,
    components: usize,
    element: ReferenceElement,
    mesh: SpaceMesh,
    n_nodes: usize,
    cell_nodes: Vec<Vec<usize>>,
    node_points: Vec<Vec3>,
    edges: Vec<[usize; 2]>,
    edge_lookup: HashMap<[usize; 2], usize>,
    n_vertices: usize,
    geometry: Vec<CellGeometry>,
    /// 3D: nodes on wall faces, then plate-only nodes. 2D: rim nodes.
    boundary: [Vec<usize>; 2],
    morley: Vec<QuadraticBasis>,
    edge_normals: Vec<[f64; 2]>,
}

fn collect_edges<const K: usize>(cells: &[[usize; K]], local: &[[usize; 2]]) -> Vec<[usize; 2]> {
    let mut set = BTreeSet::new();
    for c in cells {
        for &[a, b] in local {
            set.insert([c[a].min(c[b]), c[a].max(c[b])]);
        }
    }
    set.into_iter().collect()
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

impl FunctionSpace {
    pub fn on_tets(mesh: Arc<Mesh3D>, kind: ElementKind, components: usize) -> Result<Self> {
        if kind.cell() != Cell::Tet {
            return Err(Error::InvalidArgument(format!("{kind:?} is not a tetrahedral element")));
        }
        if components != 1 && components != 3 {
            return Err(Error::InvalidArgument("components must be 1 or 3".into()));
        }
        let nv = mesh.n_vertices();
        let quadratic = kind.degree() == 2;
        let edges = if quadratic {
            collect_edges(mesh.tets(), &TET_EDGES)
        } else {
            Vec::new()
        };
        let edge_lookup: HashMap<[usize; 2], usize> =
            edges.iter().enumerate().map(|(i, e)| (*e, nv + i)).collect();
        let cell_nodes = mesh
            .tets()
            .iter()
            .map(|t| {
                let mut nodes = t.to_vec();
                if quadratic {
                    nodes.extend(TET_EDGES.iter().map(|&[a, b]| edge_lookup[&edge_key(t[a], t[b])]));
                }
                nodes
            })
            .collect();
        let mut node_points = mesh.vertices().to_vec();
        node_points.extend(edges.iter().map(|&[a, b]| {
            let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
            std::array::from_fn(|d| 0.5 * (p[d] + q[d]))
        }));

        // Nodes touching a wall face belong to the walls; the rest of the top
        // face is plate-only.
        let mut walls = BTreeSet::new();
        let mut plate = BTreeSet::new();
        for f in mesh.boundary_faces() {
            let target = match f.tag {
                BoundaryTag::S => &mut walls,
                BoundaryTag::Plate => &mut plate,
            };
            target.extend(f.vertices);
            if quadratic {
                for &[a, b] in &TRI_EDGES {
                    target.insert(edge_lookup[&edge_key(f.vertices[a], f.vertices[b])]);
                }
            }
        }
        let plate: Vec<usize> = plate.difference(&walls).copied().collect();
        let geometry = (0..mesh.n_tets())
            .map(|t| CellGeometry::new(&mesh.tet_corners(t), Cell::Tet))
            .collect();
        Ok(FunctionSpace {
            kind,
            components,
            element: make_element(kind),
            n_nodes: node_points.len(),
            cell_nodes,
            node_points,
            edges,
            edge_lookup,
            n_vertices: nv,
            geometry,
            boundary: [walls.into_iter().collect(), plate],
            morley: Vec::new(),
            edge_normals: Vec::new(),
            mesh: SpaceMesh::Tet(mesh),
        })
    }

    pub fn on_triangles(mesh: Arc<Mesh2D>, kind: ElementKind, components: usize) -> Result<Self> {
        if kind.cell() != Cell::Tri {
            return Err(Error::InvalidArgument(format!("{kind:?} is not a triangular element")));
        }
        if components != 1 && components != 3 {
            return Err(Error::InvalidArgument("components must be 1 or 3".into()));
        }
        let nv = mesh.n_vertices();
        let quadratic = kind.degree() == 2;
        let edges = if quadratic {
            collect_edges(mesh.triangles(), &TRI_EDGES)
        } else {
            Vec::new()
        };
        let edge_lookup: HashMap<[usize; 2], usize> =
            edges.iter().enumerate().map(|(i, e)| (*e, nv + i)).collect();
        let cell_nodes: Vec<Vec<usize>> = mesh
            .triangles()
            .iter()
            .map(|t| {
                let mut nodes = t.to_vec();
                if quadratic {
                    nodes.extend(TRI_EDGES.iter().map(|&[a, b]| edge_lookup[&edge_key(t[a], t[b])]));
                }
                nodes
            })
            .collect();
        let lift = |p: [f64; 2]| [p[0], p[1], 0.0];
        let mut node_points: Vec<Vec3> = mesh.vertices().iter().map(|p| lift(*p)).collect();
        node_points.extend(edges.iter().map(|&[a, b]| {
            let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.0]
        }));
        let mut rim = BTreeSet::new();
        for &[a, b] in mesh.boundary_edges() {
            rim.insert(a);
            rim.insert(b);
            if quadratic {
                rim.insert(edge_lookup[&[a, b]]);
            }
        }
        let geometry = (0..mesh.n_triangles())
            .map(|t| {
                let c = mesh.triangle_corners(t).map(lift);
                CellGeometry::new(&c, Cell::Tri)
            })
            .collect();

        // Edge normals point to the left of the edge run from its lower to
        // its higher global vertex index, so neighbours agree on them.
        let edge_normals: Vec<[f64; 2]> = if kind == ElementKind::MorleyTri {
            edges
                .iter()
                .map(|&[lo, hi]| {
                    let (p, q) = (mesh.vertices()[lo], mesh.vertices()[hi]);
                    let t = [q[0] - p[0], q[1] - p[1]];
                    let len = t[0].hypot(t[1]);
                    [t[1] / len, -t[0] / len]
                })
                .collect()
        } else {
            Vec::new()
        };
        let morley = if kind == ElementKind::MorleyTri {
            cell_nodes
                .iter()
                .enumerate()
                .map(|(t, nodes)| {
                    let normals: [[f64; 2]; 3] =
                        std::array::from_fn(|e| edge_normals[nodes[3 + e] - nv]);
                    QuadraticBasis::new(
                        &mesh.triangle_corners(t),
                        &morley_functionals(&mesh.triangle_corners(t), &normals),
                    )
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(FunctionSpace {
            kind,
            components,
            element: make_element(kind),
            n_nodes: node_points.len(),
            cell_nodes,
            node_points,
            edges,
            edge_lookup,
            n_vertices: nv,
            geometry,
            boundary: [rim.into_iter().collect(), Vec::new()],
            morley,
            edge_normals,
            mesh: SpaceMesh::Tri(mesh),
        })
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn mesh(&self) -> &SpaceMesh {
        &self.mesh
    }

    pub fn n_cells(&self) -> usize {
        self.cell_nodes.len()
    }

    /// Number of scalar nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.components
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Node of the edge between two mesh vertices.
    pub fn edge_node(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&edge_key(a, b)).copied()
    }

    pub fn cell_nodes(&self, cell: usize) -> &[usize] {
        &self.cell_nodes[cell]
    }

    pub fn cell_dofs(&self, cell: usize) -> Vec<usize> {
        let c = self.components;
        self.cell_nodes[cell]
            .iter()
            .flat_map(|&n| (0..c).map(move |k| c * n + k))
            .collect()
    }

    pub fn node_points(&self) -> &[Vec3] {
        &self.node_points
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    /// Boundary nodes of a tetrahedral space by tag. Nodes shared between
    /// the plate and the walls belong to the walls.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> &[usize] {
        match tag {
            BoundaryTag::S => &self.boundary[0],
            BoundaryTag::Plate => &self.boundary[1],
        }
    }

    /// Nodes on the boundary of a triangular space. For Morley these are
    /// the clamped dofs: rim vertex values and rim normal derivatives.
    pub fn rim_nodes(&self) -> &[usize] {
        &self.boundary[0]
    }

    pub fn edge_normal(&self, edge: usize) -> [f64; 2] {
        self.edge_normals[edge]
    }

    pub fn same_mesh(&self, other: &FunctionSpace) -> bool {
        self.mesh.same_as(&other.mesh)
    }

    pub fn cell_measure(&self, cell: usize) -> f64 {
        self.geometry[cell].det * self.kind.cell().measure()
    }

    pub fn tabulate(&self, cell: usize, rule: &QuadratureRule) -> Tabulation {
        let g = &self.geometry[cell];
        let n_local = self.element.dof_count();
        let nq = rule.len();
        let mut tab = Tabulation {
            n_local,
            points: Vec::with_capacity(nq),
            jxw: Vec::with_capacity(nq),
            values: Vec::with_capacity(nq * n_local),
            gradients: Vec::with_capacity(nq * n_local),
            hessians: Vec::with_capacity(nq * n_local),
        };
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let x = g.map(xi);
            tab.points.push(x);
            tab.jxw.push(w * g.det);
            self.local_basis(cell, xi, &x, &mut tab.values, &mut tab.gradients, &mut tab.hessians);
        }
        tab
    }

    fn local_basis(
        &self,
        cell: usize,
        xi: &Vec3,
        x: &Vec3,
        values: &mut Vec<f64>,
        gradients: &mut Vec<Vec3>,
        hessians: &mut Vec<Mat3>,
    ) {
        if self.kind == ElementKind::MorleyTri {
            let b = &self.morley[cell];
            values.extend(b.values(x));
            gradients.extend(b.gradients(x));
            hessians.extend(b.hessians());
        } else {
            let g = &self.geometry[cell];
            values.extend(self.element.values(xi));
            gradients.extend(self.element.gradients(xi).iter().map(|v| g.push_gradient(v)));
            hessians.extend(self.element.hessians(xi).iter().map(|h| g.push_hessian(h)));
        }
    }

    /// Cell containing `x` and its reference coordinates.
    pub fn locate(&self, x: &Vec3) -> Option<(usize, Vec3)> {
        let tol = 1e-12;
        let dim = self.kind.cell().dim();
        if dim == 2 && x[2].abs() > tol {
            return None;
        }
        self.geometry.iter().enumerate().find_map(|(c, g)| {
            let mut xi = g.pullback(x);
            if dim == 2 {
                xi[2] = 0.0;
            }
            let l0 = 1.0 - xi[..dim].iter().sum::<f64>();
            (l0 >= -tol && xi[..dim].iter().all(|&v| v >= -tol)).then_some((c, xi))
        })
    }

    /// Physical basis values, gradients and Hessians of one cell at `x`.
    pub fn basis_at(&self, cell: usize, x: &Vec3) -> (Vec<f64>, Vec<Vec3>, Vec<Mat3>) {
        let mut xi = self.geometry[cell].pullback(x);
        if self.kind.cell() == Cell::Tri {
            xi[2] = 0.0;
        }
        let (mut v, mut g, mut h) = (Vec::new(), Vec::new(), Vec::new());
        self.local_basis(cell, &xi, x, &mut v, &mut g, &mut h);
        (v, g, h)
    }
}

/// Coefficient vector over a [`FunctionSpace`].
#[derive(Debug, Clone)]
pub struct FeField {
    space: Arc<FunctionSpace>,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Value,
    Gradient,
    Hessian,
}

/// Pointwise evaluation result, one entry per component.
#[derive(Debug, Clone, PartialEq)]
pub enum PointValue {
    Value(Vec<f64>),
    Gradient(Vec<Vec3>),
    Hessian(Vec<Mat3>),
}

impl FeField {
    pub fn new(space: Arc<FunctionSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::SpaceMismatch(format!(
                "{} coefficients for a space with {} dofs",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        Ok(FeField { space, coeffs })
    }

    pub fn zeros(space: Arc<FunctionSpace>) -> Self {
        let n = space.n_dofs();
        FeField {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    fn check_same_space(&self, other: &FeField) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch("fields live on different spaces".into()))
        }
    }

    /// `self - other`.
    pub fn difference(&self, other: &FeField) -> Result<FeField> {
        self.check_same_space(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(FeField {
            space: self.space.clone(),
            coeffs,
        })
    }

    /// Values of every component in `cell` at `x` (no location search).
    pub fn eval_in_cell(&self, cell: usize, x: &Vec3, order: Derivative) -> Result<PointValue> {
        let space = &self.space;
        if order == Derivative::Hessian && space.kind.degree() < 2 {
            return Err(Error::InvalidArgument(format!(
                "Hessians are not available for {:?}",
                space.kind
            )));
        }
        let (v, g, h) = space.basis_at(cell, x);
        let nodes = space.cell_nodes(cell);
        let nc = space.components;
        let coef = |i: usize, k: usize| self.coeffs[nc * nodes[i] + k];
        Ok(match order {
            Derivative::Value => PointValue::Value(
                (0..nc).map(|k| (0..nodes.len()).map(|i| coef(i, k) * v[i]).sum()).collect(),
            ),
            Derivative::Gradient => PointValue::Gradient(
                (0..nc)
                    .map(|k| {
                        let mut out = [0.0; 3];
                        for (i, gi) in g.iter().enumerate() {
                            for d in 0..3 {
                                out[d] += coef(i, k) * gi[d];
                            }
                        }
                        out
                    })
                    .collect(),
            ),
            Derivative::Hessian => PointValue::Hessian(
                (0..nc)
                    .map(|k| {
                        let mut out = [[0.0; 3]; 3];
                        for (i, hi) in h.iter().enumerate() {
                            for r in 0..3 {
                                for c in 0..3 {
                                    out[r][c] += coef(i, k) * hi[r][c];
                                }
                            }
                        }
                        out
                    })
                    .collect(),
            ),
        })
    }

    /// Integral of each component.
    pub fn integral(&self) -> Vec<f64> {
        let rule = make_quadrature(self.space.kind.cell(), 4).expect("valid degree");
        let nc = self.space.components;
        let mut out = vec![0.0; nc];
        for cell in 0..self.space.n_cells() {
            let tab = self.space.tabulate(cell, &rule);
            let nodes = self.space.cell_nodes(cell);
            for q in 0..tab.n_points() {
                for (i, &n) in nodes.iter().enumerate() {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += tab.jxw[q] * tab.value(q, i) * self.coeffs[nc * n + k];
                    }
                }
            }
        }
        out
    }

    /// L² norm over the mesh, by quadrature.
    pub fn l2_norm(&self) -> f64 {
        let rule = make_quadrature(self.space.kind.cell(), 4).expect("valid degree");
        let nc = self.space.components;
        let mut sum = 0.0;
        let mut vals = vec![0.0; nc];
        for cell in 0..self.space.n_cells() {
            let tab = self.space.tabulate(cell, &rule);
            let nodes = self.space.cell_nodes(cell);
            for q in 0..tab.n_points() {
                vals.iter_mut().for_each(|v| *v = 0.0);
                for (i, &n) in nodes.iter().enumerate() {
                    for (k, v) in vals.iter_mut().enumerate() {
                        *v += tab.value(q, i) * self.coeffs[nc * n + k];
                    }
                }
                sum += tab.jxw[q] * vals.iter().map(|v| v * v).sum::<f64>();
            }
        }
        sum.sqrt()
    }
}

/// Value, gradient or Hessian of `field` at a physical point.
pub fn evaluate(field: &FeField, x: &Vec3, order: Derivative) -> Result<PointValue> {
    let (cell, _) = field.space.locate(x).ok_or(Error::OutsideMesh(*x))?;
    field.eval_in_cell(cell, x, order)
}

/// L² distance between two fields of the same space.
pub fn l2_distance(a: &FeField, b: &FeField) -> Result<f64> {
    Ok(a.difference(b)?.l2_norm())
}

/// Nodal interpolant. Lagrange spaces take point values; Morley takes vertex
/// values and normal derivatives at edge midpoints, which needs gradients.
pub fn interpolate(space: &Arc<FunctionSpace>, f: &[&dyn ScalarFunction]) -> Result<FeField> {
    let nc = space.components;
    if f.len() != nc {
        return Err(Error::SpaceMismatch(format!(
            "{} component functions for a {}-component space",
            f.len(),
            nc
        )));
    }
    let mut coeffs = vec![0.0; space.n_dofs()];
    for (node, x) in space.node_points.iter().enumerate() {
        for (k, fk) in f.iter().enumerate() {
            coeffs[nc * node + k] = if space.kind == ElementKind::MorleyTri && node >= space.n_vertices {
                let n = space.edge_normals[node - space.n_vertices];
                let g = fk.gradient(x).ok_or_else(|| {
                    Error::InvalidArgument("Morley interpolation needs gradients".into())
                })?;
                g[0] * n[0] + g[1] * n[1]
            } else {
                fk.value(x)
            };
        }
    }
    FeField::new(space.clone(), coeffs)
}

/// Pairs `(node_3d, node_2d)` identifying the top-face nodes of a
/// tetrahedral space with the nodes of a triangular space of the same degree.
pub fn trace_node_map(
    volume: &FunctionSpace,
    plate: &FunctionSpace,
    mesh3: &Mesh3D,
    trace: &TraceMap,
) -> Result<Vec<(usize, usize)>> {
    if volume.kind.degree() != plate.kind.degree() || !plate.kind.is_lagrange() {
        return Err(Error::SpaceMismatch("trace spaces must be Lagrange of equal degree".into()));
    }
    let mut map = BTreeMap::new();
    for f in mesh3.boundary_faces().iter().filter(|f| f.tag == BoundaryTag::Plate) {
        let image = |v: usize| {
            trace
                .plate_vertex(v)
                .ok_or_else(|| Error::Trace(format!("vertex {v} has no plate image")))
        };
        for &v in &f.vertices {
            map.insert(v, image(v)?);
        }
        if volume.kind.degree() == 2 {
            for &[a, b] in &TRI_EDGES {
                let (va, vb) = (f.vertices[a], f.vertices[b]);
                let n3 = volume
                    .edge_node(va, vb)
                    .ok_or_else(|| Error::Trace(format!("edge ({va},{vb}) missing")))?;
                let n2 = plate.edge_node(image(va)?, image(vb)?).ok_or_else(|| {
                    Error::Trace(format!("edge ({va},{vb}) has no plate image"))
                })?;
                map.insert(n3, n2);
            }
        }
    }
    for (&n3, &n2) in &map {
        let (p, q) = (volume.node_points[n3], plate.node_points[n2]);
        if (p[0] - q[0]).abs() > GEOM_TOL || (p[1] - q[1]).abs() > GEOM_TOL {
            return Err(Error::Trace(format!("node {n3} does not project onto plate node {n2}")));
        }
    }
    Ok(map.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::function::{Constant, WithGradient};
    use crate::mesh::extract_plate_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube(n: usize) -> Arc<Mesh3D> {
        Arc::new(Mesh3D::unit_cube(n).unwrap())
    }

    fn plate(n: usize) -> (Arc<Mesh3D>, Arc<Mesh2D>, TraceMap) {
        let m = cube(n);
        let (p, t) = extract_plate_mesh(&m).unwrap();
        (m, Arc::new(p), t)
    }

    fn value(f: &FeField, x: &Vec3) -> f64 {
        match evaluate(f, x, Derivative::Value).unwrap() {
            PointValue::Value(v) => v[0],
            _ => unreachable!(),
        }
    }

    #[test]
    fn dof_counts() {
        let m = cube(2);
        let p2 = FunctionSpace::on_tets(m.clone(), ElementKind::P2Tet, 1).unwrap();
        assert_eq!(p2.n_nodes(), 5usize.pow(3));
        assert_eq!(p2.n_nodes(), m.n_vertices() + p2.edges().len());
        let v = FunctionSpace::on_tets(m.clone(), ElementKind::P2Tet, 3).unwrap();
        assert_eq!(v.n_dofs(), 3 * 125);
        let (_, pm, _) = plate(3);
        let mor = FunctionSpace::on_triangles(pm.clone(), ElementKind::MorleyTri, 1).unwrap();
        assert_eq!(mor.n_dofs(), pm.n_vertices() + mor.edges().len());
        assert!(FunctionSpace::on_tets(m, ElementKind::P2Tri, 1).is_err());
    }

    #[test]
    fn dof_numbering_is_a_bijection() {
        let m = cube(2);
        let v = FunctionSpace::on_tets(m, ElementKind::P2Tet, 3).unwrap();
        let mut seen = vec![false; v.n_dofs()];
        for c in 0..v.n_cells() {
            for d in v.cell_dofs(c) {
                seen[d] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn boundary_sets_partition_by_tag() {
        let n = 3;
        let m = cube(n);
        let p2 = FunctionSpace::on_tets(m, ElementKind::P2Tet, 1).unwrap();
        let walls = p2.boundary_nodes(BoundaryTag::S);
        let top = p2.boundary_nodes(BoundaryTag::Plate);
        let k = 2 * n + 1;
        assert_eq!(walls.len() + top.len(), k.pow(3) - (k - 2).pow(3));
        assert_eq!(top.len(), (k - 2) * (k - 2));
        for &a in top {
            assert!(p2.node_points()[a][2].abs() < 1e-14);
            assert!(!walls.contains(&a));
        }
    }

    #[test]
    fn interpolation_reproduces_constants_and_degree() {
        let m = cube(2);
        let sp = Arc::new(FunctionSpace::on_tets(m, ElementKind::P2Tet, 1).unwrap());
        let one = interpolate(&sp, &[&Constant(1.0)]).unwrap();
        assert!(one.coeffs().iter().all(|&c| c == 1.0));
        assert!((value(&one, &[0.3, 0.7, -0.2]) - 1.0).abs() < 1e-14);

        let q = |x: &Vec3| x[0] * x[0] - 2.0 * x[1] * x[2] + x[2] + 0.5;
        let f = interpolate(&sp, &[&q]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = [rng.gen(), rng.gen(), -rng.gen::<f64>()];
            assert!((value(&f, &x) - q(&x)).abs() < 1e-11);
        }
    }

    #[test]
    fn p1_tri_linear_at_centroid_and_gradient() {
        let (_, pm, _) = plate(2);
        let sp = Arc::new(FunctionSpace::on_triangles(pm.clone(), ElementKind::P1Tri, 1).unwrap());
        let f = interpolate(&sp, &[&|x: &Vec3| x[0]]).unwrap();
        let c = pm.triangle_corners(3);
        let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0, 0.0];
        assert!((value(&f, &centroid) - centroid[0]).abs() < 1e-14);
        match evaluate(&f, &centroid, Derivative::Gradient).unwrap() {
            PointValue::Gradient(g) => {
                assert!((g[0][0] - 1.0).abs() < 1e-13 && g[0][1].abs() < 1e-13);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(evaluate(&f, &centroid, Derivative::Hessian).is_err());
        assert!(matches!(
            evaluate(&f, &[2.0, 0.0, 0.0], Derivative::Value),
            Err(Error::OutsideMesh(_))
        ));
    }

    #[test]
    fn morley_reproduces_quadratics() {
        let (_, pm, _) = plate(3);
        let sp = Arc::new(FunctionSpace::on_triangles(pm, ElementKind::MorleyTri, 1).unwrap());
        let q = WithGradient(
            |x: &Vec3| x[0] * x[0] + 0.3 * x[0] * x[1] - x[1] + 0.2,
            |x: &Vec3| [2.0 * x[0] + 0.3 * x[1], 0.3 * x[0] - 1.0, 0.0],
        );
        let f = interpolate(&sp, &[&q]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = [rng.gen(), rng.gen(), 0.0];
            assert!((value(&f, &x) - q.value(&x)).abs() < 1e-12);
        }
        assert!(interpolate(&sp, &[&|x: &Vec3| x[0]]).is_err());
    }

    #[test]
    fn morley_broken_field_continuous_at_vertices_only() {
        let (_, pm, _) = plate(2);
        let sp = Arc::new(FunctionSpace::on_triangles(pm.clone(), ElementKind::MorleyTri, 1).unwrap());
        let cubic = WithGradient(
            |x: &Vec3| x[0].powi(3) * x[1] + x[1].powi(3),
            |x: &Vec3| [3.0 * x[0] * x[0] * x[1], x[0].powi(3) + 3.0 * x[1] * x[1], 0.0],
        );
        let f = interpolate(&sp, &[&cubic]).unwrap();
        // an interior edge and the two triangles sharing it
        let interior: Vec<(usize, usize, [usize; 2])> = {
            let tris = pm.triangles();
            let mut found = Vec::new();
            for a in 0..tris.len() {
                for b in a + 1..tris.len() {
                    let shared: Vec<usize> =
                        tris[a].iter().copied().filter(|v| tris[b].contains(v)).collect();
                    if shared.len() == 2 {
                        found.push((a, b, [shared[0], shared[1]]));
                    }
                }
            }
            found
        };
        let mut max_jump: f64 = 0.0;
        for (a, b, [v0, v1]) in interior {
            let (p, q) = (pm.vertices()[v0], pm.vertices()[v1]);
            for s in [0.0, 0.25, 0.5, 1.0] {
                let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1]), 0.0];
                let va = match f.eval_in_cell(a, &x, Derivative::Value).unwrap() {
                    PointValue::Value(v) => v[0],
                    _ => unreachable!(),
                };
                let vb = match f.eval_in_cell(b, &x, Derivative::Value).unwrap() {
                    PointValue::Value(v) => v[0],
                    _ => unreachable!(),
                };
                if s == 0.0 || s == 1.0 {
                    assert!((va - vb).abs() < 1e-12);
                } else {
                    max_jump = max_jump.max((va - vb).abs());
                }
            }
        }
        assert!(max_jump > 1e-6, "expected a visible jump, got {max_jump}");
    }

    #[test]
    fn l2_norm_of_constant_is_volume() {
        let m = cube(2);
        let sp = Arc::new(FunctionSpace::on_tets(m, ElementKind::P1Tet, 1).unwrap());
        let one = interpolate(&sp, &[&Constant(1.0)]).unwrap();
        assert!((one.l2_norm() - 1.0).abs() < 1e-13);
        assert!((one.integral()[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn trace_nodes_project_onto_plate_nodes() {
        let (m, pm, t) = plate(3);
        let v = FunctionSpace::on_tets(m.clone(), ElementKind::P2Tet, 3).unwrap();
        let p = FunctionSpace::on_triangles(pm, ElementKind::P2Tri, 1).unwrap();
        let map = trace_node_map(&v, &p, &m, &t).unwrap();
        assert_eq!(map.len(), p.n_nodes());
        let mor_pm = FunctionSpace::on_triangles(
            Arc::new(extract_plate_mesh(&m).unwrap().0),
            ElementKind::MorleyTri,
            1,
        )
        .unwrap();
        assert!(trace_node_map(&v, &mor_pm, &m, &t).is_err());
    }
}
