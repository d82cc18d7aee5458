//! Chart-based curvature engine.

mod curvature;
mod metric;

pub use curvature::{
    christoffel, christoffel_from_sample, curvature, curvature_from_sample, einstein_residual, laplacian,
    CurvaturePacket, Tensor3, Tensor4,
};
pub use metric::{ChartDomain, ComponentFn, DerivativeScheme, Mat, MetricField, MetricSample, ScalarFn};
#[allow(unused_imports)]
pub(crate) use metric::{determinant, triangle_index, triangle_len};
