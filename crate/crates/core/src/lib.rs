//! Exact CRPS score decompositions (CT, ISO, BS, QS, Hersbach) built on
//! step-function forecasts, isotonic regression and isotonic distributional
//! regression.

pub mod decomp;
pub mod dist;
pub mod error;
pub mod io;
pub mod isotonic;
pub mod oracles;
pub mod scoring;

mod flow;
mod kth;
mod par;

pub use decomp::{
    audit_inequalities, audit_results, decompose, AuditReport, DecomposeOptions, DecompositionResult, Method, QsMode,
};
pub use dist::{CaseCollection, ForecastCase, StepDistribution, TruncationSpec};
pub use error::{Error, Result};
pub use isotonic::{idr_fit, IdrFit};
pub use scoring::{crps, mean_crps};
