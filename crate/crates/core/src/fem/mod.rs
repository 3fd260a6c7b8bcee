//! Reference elements, quadrature, global spaces and fields.

pub mod element;
pub mod function;
pub mod quadrature;
pub mod space;

pub use element::{make_element, ElementKind, Mat3, ReferenceElement, Vec3};
pub use function::{Constant, ScalarFunction, WithGradient};
pub use quadrature::{make_quadrature, Cell, QuadratureRule};
pub use space::{
    evaluate, interpolate, l2_distance, trace_node_map, Derivative, FeField, FunctionSpace,
    PointValue, SpaceMesh, Tabulation,
};
