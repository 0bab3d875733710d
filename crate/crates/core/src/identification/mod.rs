//! Jacobian of the implied moments, its numeric rank and nullspace, the
//! parameters a deficiency touches, and the Fisher information.

pub mod jacobian;
mod information;
mod rank;

pub use information::{fisher_information, InformationReport};
pub use jacobian::{analytic_jacobian, moment_labels, numeric_jacobian, Jacobian, MomentLabel};
pub use rank::{
    affected_params, expected_component, nullspace_pattern_check, rank_report, rank_scan, AffectedSet,
    JacobianReport, PatternCheck, PatternEntry, RankScanRow, RankTolerance,
};
