//! Structured simplicial meshes of the fluid box `[0,1]² × [-1,0]` and of the
//! plate `[0,1]² × {0}`, plus the correspondence between the top faces of the
//! box and the plate triangles.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];
pub type Point2 = [f64; 2];

/// Coordinate tolerance for geometric classification.
pub const GEOM_TOL: f64 = 1e-12;

/// Kuhn paths through the unit cube: each permutation of the axes gives one
/// tetrahedron `0 -> e_a -> e_a + e_b -> (1,1,1)`.
const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Local faces of a tetrahedron, the i-th face is opposite vertex i.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    /// Rigid walls of the fluid box.
    S,
    /// Top face shared with the plate.
    Plate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    /// Vertex indices in ascending order.
    pub vertices: [usize; 3],
    pub tag: BoundaryTag,
    /// The tetrahedron owning the face.
    pub tet: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh3D {
    vertices: Vec<Point3>,
    tets: Vec<[usize; 4]>,
    boundary_faces: Vec<BoundaryFace>,
}

fn sub3(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det3(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

/// Default tagging rule: a face is on the plate iff all its vertices lie on
/// `x₃ = 0`.
pub fn tag_by_height(corners: &[Point3; 3]) -> BoundaryTag {
    if corners.iter().all(|p| p[2].abs() <= GEOM_TOL) {
        BoundaryTag::Plate
    } else {
        BoundaryTag::S
    }
}

impl Mesh3D {
    /// Kuhn subdivision of the fluid box into `6 n³` tetrahedra, all cubes
    /// split along the same main diagonal.
    pub fn unit_cube(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "the cube mesh needs at least one subdivision per axis".into(),
            ));
        }
        let np = n + 1;
        let h = 1.0 / n as f64;
        let index = |i: usize, j: usize, k: usize| (i * np + j) * np + k;

        let mut vertices = Vec::with_capacity(np * np * np);
        for i in 0..np {
            for j in 0..np {
                for k in 0..np {
                    vertices.push([i as f64 * h, j as f64 * h, -1.0 + k as f64 * h]);
                }
            }
        }

        let mut tets = Vec::with_capacity(6 * n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for perm in KUHN_PERMUTATIONS {
                        let mut corner = [0usize; 3];
                        let mut tet = [index(i, j, k); 4];
                        for (step, &axis) in perm.iter().enumerate() {
                            corner[axis] = 1;
                            tet[step + 1] = index(i + corner[0], j + corner[1], k + corner[2]);
                        }
                        tets.push(tet);
                    }
                }
            }
        }
        Self::from_parts(vertices, tets)
    }

    /// Builds a mesh from raw vertices and tetrahedra, orienting every
    /// tetrahedron positively and tagging the boundary by height.
    pub fn from_parts(vertices: Vec<Point3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        Self::from_parts_with_tags(vertices, tets, tag_by_height)
    }

    pub fn from_parts_with_tags(
        vertices: Vec<Point3>,
        mut tets: Vec<[usize; 4]>,
        tagger: impl Fn(&[Point3; 3]) -> BoundaryTag,
    ) -> Result<Self> {
        for (t, tet) in tets.iter_mut().enumerate() {
            if tet.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("tet {t} references a missing vertex")));
            }
            let vol = signed_volume(&vertices, tet);
            if vol.abs() <= GEOM_TOL * GEOM_TOL {
                return Err(Error::Mesh(format!("tet {t} is degenerate")));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }
        let mut mesh = Mesh3D {
            vertices,
            tets,
            boundary_faces: Vec::new(),
        };
        let faces = mesh.boundary_face_list()?;
        mesh.boundary_faces = faces
            .into_iter()
            .map(|(vertices, tet)| {
                let corners = vertices.map(|v| mesh.vertices[v]);
                BoundaryFace {
                    vertices,
                    tag: tagger(&corners),
                    tet,
                }
            })
            .collect();
        Ok(mesh)
    }

    /// Faces owned by exactly one tetrahedron, in order of first appearance.
    fn boundary_face_list(&self) -> Result<Vec<([usize; 3], usize)>> {
        let mut count: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
        let mut order = Vec::new();
        for (t, tet) in self.tets.iter().enumerate() {
            for local in TET_FACES {
                let key = sorted3(local.map(|l| tet[l]));
                let entry = count.entry(key).or_insert_with(|| {
                    order.push(key);
                    (0, t)
                });
                entry.0 += 1;
            }
        }
        let mut out = Vec::new();
        for key in order {
            match count[&key] {
                (1, t) => out.push((key, t)),
                (2, _) => {}
                (c, _) => {
                    return Err(Error::Mesh(format!(
                        "face {key:?} shared by {c} tetrahedra (non-manifold)"
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_corners(&self, t: usize) -> [Point3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[t])
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_tets()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn count_tagged(&self, tag: BoundaryTag) -> usize {
        self.boundary_faces.iter().filter(|f| f.tag == tag).count()
    }

    /// Same mesh with vertex `v` renamed to `perm[v]`.
    pub fn renumbered(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_vertices())?;
        let mut vertices = vec![[0.0; 3]; self.n_vertices()];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = self.vertices[old];
        }
        let tets = self.tets.iter().map(|t| t.map(|v| perm[v])).collect();
        Self::from_parts(vertices, tets)
    }

    /// Plain-text dump for debugging: a `vertices N tets M` header, then the
    /// coordinates and the zero-based connectivity.
    pub fn write_dump(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "vertices {} tets {}", self.n_vertices(), self.n_tets())?;
        for p in &self.vertices {
            writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
        }
        for t in &self.tets {
            writeln!(w, "{} {} {} {}", t[0], t[1], t[2], t[3])?;
        }
        Ok(())
    }
}

fn signed_volume(vertices: &[Point3], tet: &[usize; 4]) -> f64 {
    let p0 = vertices[tet[0]];
    let a = sub3(&vertices[tet[1]], &p0);
    let b = sub3(&vertices[tet[2]], &p0);
    let c = sub3(&vertices[tet[3]], &p0);
    det3(&a, &b, &c) / 6.0
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidArgument(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
    }
    Ok(())
}

/// Recomputes the boundary of `m` and tags every face with the height rule.
pub fn classify_boundary(m: &Mesh3D) -> Result<Vec<BoundaryFace>> {
    Ok(m.boundary_face_list()?
        .into_iter()
        .map(|(vertices, tet)| BoundaryFace {
            vertices,
            tag: tag_by_height(&vertices.map(|v| m.vertices[v])),
            tet,
        })
        .collect())
}

/// Tag of a single face, rejecting faces that are not on the boundary.
pub fn classify_face(m: &Mesh3D, face: [usize; 3]) -> Result<BoundaryTag> {
    let key = sorted3(face);
    m.boundary_faces
        .iter()
        .find(|f| f.vertices == key)
        .map(|f| tag_by_height(&f.vertices.map(|v| m.vertices[v])))
        .ok_or_else(|| Error::Mesh(format!("face {face:?} is not a boundary face")))
}

#[derive(Debug, Clone)]
pub struct Mesh2D {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
}

impl Mesh2D {
    /// Builds a triangle mesh, orienting every triangle counter-clockwise.
    pub fn from_parts(vertices: Vec<Point2>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            let a = signed_area(&vertices, tri);
            if a.abs() <= GEOM_TOL * GEOM_TOL {
                return Err(Error::Mesh(format!("triangle {t} is degenerate")));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }
        let mut count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for tri in &triangles {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let mut e = [tri[a], tri[b]];
                e.sort_unstable();
                *count.entry(e).or_default() += 1;
            }
        }
        if let Some((e, c)) = count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Mesh(format!("edge {e:?} shared by {c} triangles")));
        }
        let boundary_edges = count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(e, _)| e)
            .collect();
        Ok(Mesh2D {
            vertices,
            triangles,
            boundary_edges,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_corners(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }
}

fn signed_area(vertices: &[Point2], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|v| vertices[v]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

/// Bijections between the plate-tagged boundary of a [`Mesh3D`] and the
/// plate [`Mesh2D`].
#[derive(Debug, Clone)]
pub struct TraceMap {
    /// Boundary-face index (into `Mesh3D::boundary_faces`) to triangle.
    face_to_triangle: BTreeMap<usize, usize>,
    triangle_to_face: Vec<usize>,
    vertex_to_vertex: BTreeMap<usize, usize>,
    vertex_from_plate: Vec<usize>,
}

impl TraceMap {
    pub fn triangle_of_face(&self, face: usize) -> Option<usize> {
        self.face_to_triangle.get(&face).copied()
    }

    pub fn face_of_triangle(&self, tri: usize) -> usize {
        self.triangle_to_face[tri]
    }

    /// Plate vertex of a 3D vertex, if the vertex lies on the plate.
    pub fn plate_vertex(&self, v3: usize) -> Option<usize> {
        self.vertex_to_vertex.get(&v3).copied()
    }

    /// 3D vertex of a plate vertex.
    pub fn volume_vertex(&self, v2: usize) -> usize {
        self.vertex_from_plate[v2]
    }

    pub fn face_to_triangle(&self) -> &BTreeMap<usize, usize> {
        &self.face_to_triangle
    }

    pub fn vertex_to_vertex(&self) -> &BTreeMap<usize, usize> {
        &self.vertex_to_vertex
    }

    pub fn n_plate_vertices(&self) -> usize {
        self.vertex_from_plate.len()
    }
}

/// Projects the plate-tagged faces of `m` onto the `(x₁, x₂)` plane.
///
/// Plate vertices are numbered lexicographically in `(x₁, x₂)`.
pub fn extract_plate_mesh(m: &Mesh3D) -> Result<(Mesh2D, TraceMap)> {
    let plate_faces: Vec<(usize, &BoundaryFace)> = m
        .boundary_faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.tag == BoundaryTag::Plate)
        .collect();
    if plate_faces.is_empty() {
        return Err(Error::Mesh("mesh has no plate faces".into()));
    }

    let mut plate_vertices: Vec<usize> = Vec::new();
    for (_, f) in &plate_faces {
        for &v in &f.vertices {
            if m.vertices[v][2].abs() > GEOM_TOL {
                return Err(Error::Mesh(format!(
                    "plate face {:?} is not contained in the plane x3 = 0",
                    f.vertices
                )));
            }
            plate_vertices.push(v);
        }
    }
    plate_vertices.sort_unstable();
    plate_vertices.dedup();
    plate_vertices.sort_by(|&a, &b| {
        let (pa, pb) = (m.vertices[a], m.vertices[b]);
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });

    let vertex_to_vertex: BTreeMap<usize, usize> = plate_vertices
        .iter()
        .enumerate()
        .map(|(i2, &i3)| (i3, i2))
        .collect();
    let vertices2: Vec<Point2> = plate_vertices
        .iter()
        .map(|&v| [m.vertices[v][0], m.vertices[v][1]])
        .collect();
    let triangles: Vec<[usize; 3]> = plate_faces
        .iter()
        .map(|(_, f)| f.vertices.map(|v| vertex_to_vertex[&v]))
        .collect();
    let mesh2 = Mesh2D::from_parts(vertices2, triangles)?;

    let face_to_triangle = plate_faces
        .iter()
        .enumerate()
        .map(|(t, (f, _))| (*f, t))
        .collect();
    let triangle_to_face = plate_faces.iter().map(|(f, _)| *f).collect();
    Ok((
        mesh2,
        TraceMap {
            face_to_triangle,
            triangle_to_face,
            vertex_to_vertex,
            vertex_from_plate: plate_vertices,
        },
    ))
}

/// Renames plate vertex `v` to `perm[v]`, updating the trace map.
pub fn renumber_plate(
    mesh: &Mesh2D,
    trace: &TraceMap,
    perm: &[usize],
) -> Result<(Mesh2D, TraceMap)> {
    check_permutation(perm, mesh.n_vertices())?;
    let mut vertices = vec![[0.0; 2]; mesh.n_vertices()];
    let mut vertex_from_plate = vec![0; mesh.n_vertices()];
    for (old, &new) in perm.iter().enumerate() {
        vertices[new] = mesh.vertices[old];
        vertex_from_plate[new] = trace.vertex_from_plate[old];
    }
    let triangles = mesh.triangles.iter().map(|t| t.map(|v| perm[v])).collect();
    let mesh = Mesh2D::from_parts(vertices, triangles)?;
    let vertex_to_vertex = vertex_from_plate
        .iter()
        .enumerate()
        .map(|(i2, &i3)| (i3, i2))
        .collect();
    Ok((
        mesh,
        TraceMap {
            face_to_triangle: trace.face_to_triangle.clone(),
            triangle_to_face: trace.triangle_to_face.clone(),
            vertex_to_vertex,
            vertex_from_plate,
        },
    ))
}
