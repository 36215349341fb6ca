//! Graphical mean curvature flow with Neumann boundary data on a disk of a
//! two-dimensional Riemannian chart. The long-time flow and an ε-regularized
//! elliptic continuation both approach the translating solution `u = λt + w`;
//! a divergence-form identity recovers `λ` from `w`, and a radial shooting
//! oracle covers rotationally symmetric data.
//!
//! The `examples/` directory has one runnable program per capability, and the
//! `tflow` binary drives whole runs from a `key = value` config file.

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod geometry;
mod implicit;
pub mod io;
pub mod mesh;
pub mod oracle;
pub mod translator;

pub use config::{parse_config, PhiSpec, RunConfig, U0Spec};
pub use diagnostics::{CheckResult, CheckStatus, DiagnosticsReport};
pub use error::{Error, Result};
pub use flow::{run_flow, FlowConfig, FlowProblem, FlowResult, FlowState, TimeScheme};
pub use geometry::{ChartPoint, MetricDescriptor, MetricTensor};
pub use mesh::{DiskMesh, ScalarField};
pub use oracle::{radial_oracle, RadialProfile};
pub use translator::{
    continuation, lambda_integral, solve_eps_bvp, EllipticOptions, TranslatorResult,
};
