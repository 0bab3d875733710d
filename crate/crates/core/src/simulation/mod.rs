//! Monte Carlo experiments on the split-ballot MTMM model and the Shapiro
//! model.
//!
//! Every replicate draws from its own ChaCha8 stream: the master seed picks
//! the key and `(condition index << 32) | replicate` picks the stream, so a
//! record depends only on the config and its coordinates, never on how
//! replicates are scheduled across threads.

mod summary;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::presets::{self, ResidualLabeling, SbMtmm};
use crate::estimation::{fit_from, FitConfig, StopReason, WeightMatrix};
use crate::identification::{analytic_jacobian, fisher_information};
use crate::model::{ModelSpec, SampleMoments, Theta};
use crate::scalar::Real;

pub use summary::{summarize, ConditionSummary, Moments, ParamSummary, SimSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("split-ballot data needs 9 columns, got {0}")]
    Columns(usize),
    #[error("split-ballot data needs an even number of rows, got {0}")]
    OddRows(usize),
    #[error("invalid simulation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "SBMTMM")]
    SbMtmm,
    #[serde(rename = "SHAPIRO")]
    Shapiro,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::SbMtmm => "SBMTMM",
            Experiment::Shapiro => "SHAPIRO",
        }
    }
}

/// Generating model for one population: `y = Λη + ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationModel<T: Real> {
    pub observed: Vec<String>,
    pub loadings: DMatrix<T>,
    pub factor_cov: DMatrix<T>,
    pub residual_cov: DMatrix<T>,
}

impl<T: Real> PopulationModel<T> {
    /// Nine-variable CTUM population at distance `delta`: unit trait and
    /// method loadings, `Ψ = I`, unit factor variances, trait correlations
    /// `(ρ12, ρ13, ρ23) = (0.5 - δ, 0.5, 0.5 + δ)`. Variables are ordered
    /// `y11, y12, y13, y21, …, y33` (`y_tm`: trait t, method m).
    pub fn sb_mtmm(delta: T) -> Self {
        let mut lam = DMatrix::zeros(9, 6);
        let mut observed = Vec::with_capacity(9);
        for t in 0..3 {
            for m in 0..3 {
                lam[(3 * t + m, t)] = T::one();
                lam[(3 * t + m, 3 + m)] = T::one();
                observed.push(format!("y{}{}", t + 1, m + 1));
            }
        }
        let mut phi = DMatrix::identity(6, 6);
        let half = T::lit(0.5);
        for (i, j, v) in [(0, 1, half - delta), (0, 2, half), (1, 2, half + delta)] {
            phi[(i, j)] = v;
            phi[(j, i)] = v;
        }
        PopulationModel {
            observed,
            loadings: lam,
            factor_cov: phi,
            residual_cov: DMatrix::identity(9, 9),
        }
    }

    /// Three-indicator Shapiro population: `λ = (1, 0.4, 0.7)`, residual
    /// variances `(1, 0.09, 0)`.
    pub fn shapiro() -> Self {
        let lam = DMatrix::from_iterator(3, 1, presets::SHAPIRO_LOADINGS.iter().map(|&x| T::lit(x)));
        let psi = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            presets::SHAPIRO_RESIDUAL_SD.iter().map(|&s| T::lit(s * s)),
        ));
        PopulationModel {
            observed: vec!["y1".into(), "y2".into(), "y3".into()],
            loadings: lam,
            factor_cov: DMatrix::identity(1, 1),
            residual_cov: psi,
        }
    }

    pub fn sigma(&self) -> DMatrix<T> {
        &self.loadings * &self.factor_cov * self.loadings.transpose() + &self.residual_cov
    }
}

/// `n` rows drawn i.i.d. from `MVN(0, Σ)` as `Z Lᵀ` with `Σ = LLᵀ`.
pub fn mvn_sample<T: Real, R: Rng + ?Sized>(sigma: &DMatrix<T>, n: usize, rng: &mut R) -> Result<DMatrix<T>, SimError> {
    let chol = sigma.clone().cholesky().ok_or(SimError::NotPositiveDefinite)?;
    let q = sigma.nrows();
    let mut z = DMatrix::zeros(n, q);
    // row-major fill so a given stream position always lands in the same cell
    for i in 0..n {
        for j in 0..q {
            let x: f64 = rng.sample(StandardNormal);
            z[(i, j)] = T::lit(x);
        }
    }
    Ok(z * chol.l().transpose())
}

/// Columns kept per split-ballot group (0-based, in the 9-column layout).
pub const SPLIT_BALLOT_GROUP1: [usize; 6] = [0, 1, 3, 4, 6, 7];
pub const SPLIT_BALLOT_GROUP2: [usize; 6] = [0, 2, 3, 5, 6, 8];

/// Covariance (denominator `n`) of the selected rows and columns.
fn covariance<T: Real>(data: &DMatrix<T>, rows: std::ops::Range<usize>, cols: &[usize]) -> DMatrix<T> {
    let n = rows.len();
    let mut x = DMatrix::zeros(n, cols.len());
    for (k, &c) in cols.iter().enumerate() {
        for (i, r) in rows.clone().enumerate() {
            x[(i, k)] = data[(r, c)];
        }
    }
    let nt = T::lit(n as f64);
    for k in 0..cols.len() {
        let mean = x.column(k).sum() / nt;
        x.column_mut(k).add_scalar_mut(-mean);
    }
    let s = x.transpose() * &x / nt;
    (&s + s.transpose()) * T::lit(0.5)
}

/// Splits `n × 9` data into the two split-ballot groups: the first half
/// keeps methods 1 and 2, the second half methods 1 and 3.
pub fn split_ballot_moments<T: Real>(data: &DMatrix<T>) -> Result<SampleMoments<T>, SimError> {
    if data.ncols() != 9 {
        return Err(SimError::Columns(data.ncols()));
    }
    let n = data.nrows();
    if n % 2 != 0 {
        return Err(SimError::OddRows(n));
    }
    let half = n / 2;
    let s1 = covariance(data, 0..half, &SPLIT_BALLOT_GROUP1);
    let s2 = covariance(data, half..n, &SPLIT_BALLOT_GROUP2);
    Ok(SampleMoments {
        covariances: vec![s1, s2],
        sizes: vec![half, half],
    })
}

/// Covariance of all rows (denominator `n`).
pub fn sample_moments<T: Real>(data: &DMatrix<T>) -> SampleMoments<T> {
    let cols: Vec<usize> = (0..data.ncols()).collect();
    SampleMoments {
        covariances: vec![covariance(data, 0..data.nrows(), &cols)],
        sizes: vec![data.nrows()],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimCondition {
    /// Total sample size.
    pub n: usize,
    /// Distance from the rank-deficient point.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub experiment: Experiment,
    pub n_grid: Vec<usize>,
    pub delta_grid: Vec<f64>,
    pub nsim: usize,
    pub seed: u64,
    pub fit: FitConfig,
}

impl SimConfig {
    /// Conditions in factorial order: δ outer, n inner.
    pub fn conditions(&self) -> Vec<SimCondition> {
        let deltas: &[f64] = match self.experiment {
            Experiment::SbMtmm => &self.delta_grid,
            Experiment::Shapiro => &[0.0],
        };
        deltas
            .iter()
            .flat_map(|&delta| self.n_grid.iter().map(move |&n| SimCondition { n, delta }))
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.n_grid.is_empty() {
            return bad("n grid is empty".into());
        }
        if self.experiment == Experiment::SbMtmm && self.delta_grid.is_empty() {
            return bad("delta grid is empty".into());
        }
        if self.nsim < 1 {
            return bad("nsim must be at least 1".into());
        }
        let min_n = match self.experiment {
            Experiment::SbMtmm => 14,
            Experiment::Shapiro => 4,
        };
        for &n in &self.n_grid {
            if n < min_n {
                return bad(format!("sample size {n} is below {min_n}"));
            }
            if self.experiment == Experiment::SbMtmm && n % 2 != 0 {
                return bad(format!("split-ballot sample size {n} is odd"));
            }
        }
        for &d in &self.delta_grid {
            if !(d >= 0.0) || d >= 0.5 {
                return bad(format!("delta {d} outside [0, 0.5)"));
            }
        }
        self.fit.validate().map_err(|e| SimError::Config(e.to_string()))
    }

    /// Free-parameter labels of the fitted model, in θ order.
    pub fn labels(&self) -> Vec<String> {
        fitted_spec(self.experiment, 0.0).free_labels().to_vec()
    }
}

/// How a replicate ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Fit(StopReason),
    /// Some group covariance was not positive definite.
    DataDegenerate,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Fit(r) => r.as_str(),
            Outcome::DataDegenerate => "DATA_DEGENERATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub condition: SimCondition,
    pub condition_index: usize,
    pub replicate: usize,
    pub converged: bool,
    pub admissible: bool,
    pub outcome: Outcome,
    /// θ̂ in the fitted model's order; NaN for degenerate data.
    pub theta: Vec<f64>,
    pub loss: f64,
    /// Whether every standard error was available at θ̂.
    pub se_available: bool,
}

fn fitted_spec(experiment: Experiment, delta: f64) -> ModelSpec<f64> {
    match experiment {
        Experiment::SbMtmm => SbMtmm::<f64>::with_rho_start(ResidualLabeling::PerVariable, delta).spec,
        Experiment::Shapiro => presets::shapiro_direct(),
    }
}

/// Stream of replicate `rep` in condition `cond`.
pub fn replicate_rng(seed: u64, cond: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cond as u64) << 32) | rep as u64);
    rng
}

/// Generates, fits and records one replicate.
pub fn run_replicate(config: &SimConfig, cond_index: usize, condition: SimCondition, rep: usize) -> SimRecord {
    let spec = fitted_spec(config.experiment, condition.delta);
    let mut rng = replicate_rng(config.seed, cond_index, rep);
    let population = match config.experiment {
        Experiment::SbMtmm => PopulationModel::sb_mtmm(condition.delta),
        Experiment::Shapiro => PopulationModel::shapiro(),
    };
    let data = mvn_sample(&population.sigma(), condition.n, &mut rng).expect("population covariance is PD");
    let moments = match config.experiment {
        Experiment::SbMtmm => split_ballot_moments(&data).expect("validated layout"),
        Experiment::Shapiro => sample_moments(&data),
    };
    let degenerate = SimRecord {
        condition,
        condition_index: cond_index,
        replicate: rep,
        converged: false,
        admissible: false,
        outcome: Outcome::DataDegenerate,
        theta: vec![f64::NAN; spec.n_free()],
        loss: f64::NAN,
        se_available: false,
    };
    if moments.covariances.iter().any(|s| s.clone().cholesky().is_none()) {
        return degenerate;
    }
    let Ok(res) = fit_from(&spec, &moments, &config.fit, &spec.start_theta()) else {
        return degenerate;
    };
    SimRecord {
        se_available: se_available(&spec, &res.theta_hat, &moments, config.fit.singular_threshold),
        condition,
        condition_index: cond_index,
        replicate: rep,
        converged: res.converged,
        admissible: res.admissible,
        outcome: Outcome::Fit(res.stop_reason),
        theta: res.theta_hat.values.iter().copied().collect(),
        loss: res.loss,
    }
}

fn se_available(spec: &ModelSpec<f64>, theta: &Theta<f64>, moments: &SampleMoments<f64>, threshold: f64) -> bool {
    let Ok(jac) = analytic_jacobian(spec, theta) else { return false };
    let Ok(sigmas) = crate::model::build_matrices(spec, theta) else { return false };
    let Ok(v) = WeightMatrix::ml(&sigmas.iter().map(|m| m.sigma()).collect::<Vec<_>>()) else {
        return false;
    };
    let info = fisher_information(&jac, &v, &moments.group_weights(), moments.total_n(), threshold);
    info.standard_errors.iter().all(Option::is_some)
}

/// All replicates of all conditions, ordered by (condition, replicate).
/// Runs on the current rayon pool.
pub fn run_records(config: &SimConfig) -> Result<Vec<SimRecord>, SimError> {
    config.validate()?;
    let jobs: Vec<(usize, SimCondition, usize)> = config
        .conditions()
        .into_iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..config.nsim).map(move |r| (ci, c, r)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(ci, c, r)| run_replicate(config, ci, c, r))
        .collect())
}

/// Records plus their summary.
pub fn run_experiment(config: &SimConfig) -> Result<(Vec<SimRecord>, SimSummary), SimError> {
    let records = run_records(config)?;
    let summary = summarize(config, &records);
    Ok((records, summary))
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(
    config: &SimConfig,
    threads: usize,
) -> Result<(Vec<SimRecord>, SimSummary), SimError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| SimError::Config(e.to_string()))?;
    pool.install(|| run_experiment(config))
}

/// Distribution of ψ̂3 across Shapiro replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapiroSummary {
    pub n: usize,
    pub nsim: usize,
    pub fraction_negative: f64,
    pub fraction_negative_se: f64,
    /// `(lower edge, upper edge, count)`.
    pub histogram: Vec<(f64, f64, usize)>,
    /// Fraction of replicates whose standard errors were all available.
    pub se_available: f64,
}

/// Shapiro experiment: direct-variance fits to Shapiro-population data,
/// with one ψ̂3 summary per sample size.
pub fn shapiro_experiment(
    config: &SimConfig,
    bins: usize,
) -> Result<(Vec<SimRecord>, SimSummary, Vec<ShapiroSummary>), SimError> {
    if config.experiment != Experiment::Shapiro {
        return Err(SimError::Config("experiment must be SHAPIRO".into()));
    }
    let (records, summary) = run_experiment(config)?;
    let psi3 = config.labels().iter().position(|l| l == "psi3").expect("psi3 label");
    let shapiro = records
        .chunks(config.nsim)
        .map(|chunk| shapiro_summary(chunk, psi3, bins))
        .collect();
    Ok((records, summary, shapiro))
}

pub(crate) fn shapiro_summary(records: &[SimRecord], psi3: usize, bins: usize) -> ShapiroSummary {
    let vals: Vec<f64> = records.iter().map(|r| r.theta[psi3]).filter(|x| x.is_finite()).collect();
    let nsim = records.len();
    let neg = vals.iter().filter(|&&x| x < 0.0).count() as f64 / nsim.max(1) as f64;
    let bins = bins.max(1);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut histogram = Vec::new();
    if lo.is_finite() && hi.is_finite() {
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for &x in &vals {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        for (k, c) in counts.into_iter().enumerate() {
            histogram.push((lo + width * k as f64, lo + width * (k + 1) as f64, c));
        }
    }
    ShapiroSummary {
        n: records.first().map(|r| r.condition.n).unwrap_or(0),
        nsim,
        fraction_negative: neg,
        fraction_negative_se: (neg * (1.0 - neg) / nsim.max(1) as f64).sqrt(),
        histogram,
        se_available: records.iter().filter(|r| r.se_available).count() as f64 / nsim.max(1) as f64,
    }
}
