//! Meshes and function spaces shared by the solvers.

use std::sync::Arc;

use crate::error::Result;
use crate::fem::{trace_node_map, ElementKind, FunctionSpace};
use crate::mesh::{extract_plate_mesh, Mesh2D, Mesh3D, TraceMap};

/// Fluid and plate meshes with every space used by the solvers:
/// vector P2 velocity and P1 pressure on the tetrahedra; Morley, P2 and P1
/// on the plate triangles.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh3: Arc<Mesh3D>,
    pub mesh2: Arc<Mesh2D>,
    pub trace: Arc<TraceMap>,
    pub velocity: Arc<FunctionSpace>,
    pub pressure: Arc<FunctionSpace>,
    pub morley: Arc<FunctionSpace>,
    pub plate_p2: Arc<FunctionSpace>,
    pub plate_p1: Arc<FunctionSpace>,
    /// `(velocity node, plate P2 node)` pairs on the top face.
    pub trace_nodes: Vec<(usize, usize)>,
}

impl Discretization {
    /// Kuhn mesh of the unit box with `n` subdivisions per axis (`h = 1/n`).
    pub fn unit_cube(n: usize) -> Result<Self> {
        let mesh3 = Mesh3D::unit_cube(n)?;
        let (mesh2, trace) = extract_plate_mesh(&mesh3)?;
        Self::from_meshes(mesh3, mesh2, trace)
    }

    pub fn from_meshes(mesh3: Mesh3D, mesh2: Mesh2D, trace: TraceMap) -> Result<Self> {
        let mesh3 = Arc::new(mesh3);
        let mesh2 = Arc::new(mesh2);
        let velocity = FunctionSpace::on_tets(mesh3.clone(), ElementKind::P2Tet, 3)?;
        let pressure = FunctionSpace::on_tets(mesh3.clone(), ElementKind::P1Tet, 1)?;
        let morley = FunctionSpace::on_triangles(mesh2.clone(), ElementKind::MorleyTri, 1)?;
        let plate_p2 = FunctionSpace::on_triangles(mesh2.clone(), ElementKind::P2Tri, 1)?;
        let plate_p1 = FunctionSpace::on_triangles(mesh2.clone(), ElementKind::P1Tri, 1)?;
        let trace_nodes = trace_node_map(&velocity, &plate_p2, &mesh3, &trace)?;
        Ok(Discretization {
            mesh3,
            mesh2,
            trace: Arc::new(trace),
            velocity: Arc::new(velocity),
            pressure: Arc::new(pressure),
            morley: Arc::new(morley),
            plate_p2: Arc::new(plate_p2),
            plate_p1: Arc::new(plate_p1),
            trace_nodes,
        })
    }

    pub fn n_tets(&self) -> usize {
        self.mesh3.n_tets()
    }
}
