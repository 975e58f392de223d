//! Curvature of Hermitian holomorphic bundles and their jet bundles, computed
//! from truncated Wirtinger jets of the metric.

// negated comparisons are used so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod curvature;
pub mod error;
pub mod identities;
pub mod jetbundle;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod wjet;

pub use curvature::{
    curvature, curvature_multivar, det_jet_curvature, jet_curvature, quotient_metric,
    trace_formula_residual, wedge_gram, CurvatureForm, DetCurvature, JetCurvature, MultiCurvature,
    MultiMetric, PolyTerm, TraceFormula, WedgeGram,
};
pub use error::{Error, Result};
pub use identities::{IdentityVerdict, CURVATURE_TOL, LINALG_TOL};
pub use jetbundle::{
    assemble_jet_metric, assemble_jet_metric_jet, jet_frame_matrix, partial_trace, FrameJetMatrix,
    JetMetric,
};
pub use linalg::{CMat, C64};
pub use models::{
    frame_transform, Catalog, CatalogEntry, HoloFrame, HoloPoly, KernelTail, MetricModel,
};
pub use oracle::{fd_partial, FDConfig};
pub use wjet::{BiOrder, Jet, MatrixJet, WirtingerJet};
