//! Confirmatory factor analysis and multitrait-multimethod estimation with
//! identification diagnostics: analytic Jacobians of the implied moments,
//! numeric rank and nullspace analysis, Fisher-scoring / Newton / gradient
//! descent estimation, and a Monte Carlo harness for split-ballot designs.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below name the common instantiations.
//!
//! ```
//! use latent_rank::dsl::presets::{ResidualLabeling, SbMtmm};
//! use latent_rank::identification::{analytic_jacobian, rank_report, RankTolerance};
//!
//! let sb = SbMtmm::<f64>::new(ResidualLabeling::PerVariable);
//! let jac = analytic_jacobian(&sb.spec, &sb.population_theta(0.0)).unwrap();
//! assert_eq!(rank_report(jac, RankTolerance::Default).rank, 23);
//! ```

pub mod dsl;
pub mod estimation;
pub mod identification;
pub mod model;
pub mod report;
pub mod simulation;
mod scalar;

pub use scalar::Real;

pub use dsl::{format_spec, parse_model, Diagnostic, ModelSource, Pos, Severity, SyntaxError};
pub use model::{
    build_matrices, implied_sigma, validate, GroupSpec, MatrixKind, ModelError, ModelSpec, MomentVector,
    ParamStatus, ParameterEntry, SampleMoments, Slot, Theta,
};

pub type ModelSpec64 = ModelSpec<f64>;
pub type ModelSpec32 = ModelSpec<f32>;
pub type Theta64 = Theta<f64>;
pub type Theta32 = Theta<f32>;
pub type MomentVector64 = MomentVector<f64>;
pub type SampleMoments64 = SampleMoments<f64>;
pub type FitResult64 = estimation::FitResult<f64>;
pub type FitResult32 = estimation::FitResult<f32>;
pub type WeightMatrix64 = estimation::WeightMatrix<f64>;
pub type Jacobian64 = identification::Jacobian<f64>;
pub type JacobianReport64 = identification::JacobianReport<f64>;
pub type InformationReport64 = identification::InformationReport<f64>;
pub type SbMtmm64 = dsl::presets::SbMtmm<f64>;
