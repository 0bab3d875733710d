use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    check_admissibility, cholesky, gradient_raw, information_raw, ml_raw, ml_weight_from_inverse, wls_raw,
    Admissibility, EstimationError,
};
use crate::identification::jacobian::jacobian_raw;
use crate::model::implied::implied_raw;
use crate::model::{ModelSpec, SampleMoments, Theta};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Optimizer {
    /// `A_t = γ I`.
    GradientDescent,
    /// `A_t = (2 ΔᵀVΔ)⁻¹`, the inverse expected Hessian of `F`.
    FisherScoring,
    /// `A_t = H⁻¹` with `H` the central-difference Hessian of `F`.
    NewtonRaphson,
}

impl Optimizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Optimizer::GradientDescent => "GRADIENT_DESCENT",
            Optimizer::FisherScoring => "FISHER_SCORING",
            Optimizer::NewtonRaphson => "NEWTON_RAPHSON",
        }
    }
}

/// Where the weight matrix comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WeightPolicy {
    /// `V` from the sample covariances, fixed for the whole fit.
    Sample,
    /// `V` from `Σ(θ_t)` at every iterate. The line search then runs on the
    /// ML discrepancy, whose gradient is `g` evaluated with that `V`.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopReason {
    GradientTol,
    MaxIter,
    SingularInformation,
    LineFailure,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::GradientTol => "GRADIENT_TOL",
            StopReason::MaxIter => "MAX_ITER",
            StopReason::SingularInformation => "SINGULAR_INFORMATION",
            StopReason::LineFailure => "LINE_FAILURE",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub optimizer: Optimizer,
    /// γ for gradient descent.
    pub learning_rate: f64,
    /// Converged when `max|g| / max(1, F)` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub weight_policy: WeightPolicy,
    /// Information condition number treated as singular.
    pub singular_threshold: f64,
    pub max_halvings: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            optimizer: Optimizer::FisherScoring,
            learning_rate: 0.5,
            tol: 1e-8,
            max_iter: 500,
            weight_policy: WeightPolicy::Iterative,
            singular_threshold: 1e12,
            max_halvings: 20,
        }
    }
}

impl FitConfig {
    pub fn with_optimizer(mut self, optimizer: Optimizer) -> Self {
        self.optimizer = optimizer;
        self
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        let bad = |m: &str| Err(EstimationError::Config(m.to_string()));
        if !(self.tol > 0.0) {
            return bad("tolerance must be positive");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.singular_threshold > 1.0) {
            return bad("singularity threshold must exceed 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T: Real> {
    pub theta_hat: Theta<T>,
    /// True iff `stop_reason` is `GradientTol`.
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Final value of the objective that was minimized (ML discrepancy for
    /// the iterative policy, WLS loss otherwise).
    pub loss: T,
    /// Accepted steps.
    pub iterations: usize,
    /// `max|g|` at the final iterate.
    pub gradient_norm: T,
    /// Condition number of `ΔᵀVΔ` at the final iterate.
    pub information_condition: f64,
    pub admissible: bool,
    pub admissibility: Admissibility<T>,
    /// Policy actually used (the iterative policy falls back to sample weights
    /// when the start values imply a non-PD covariance matrix).
    pub weight_policy: WeightPolicy,
    pub warnings: Vec<String>,
    /// Loss at the start and after every accepted step.
    pub loss_history: Vec<T>,
}

enum Objective<T: Real> {
    Wls(Vec<DMatrix<T>>),
    Ml,
}

struct Local<T: Real> {
    grad: DVector<T>,
    info: DMatrix<T>,
}

struct Problem<'a, T: Real> {
    spec: &'a ModelSpec<T>,
    sample: &'a SampleMoments<T>,
    s: DVector<T>,
    w: Vec<T>,
    objective: Objective<T>,
}

impl<T: Real> Problem<'_, T> {
    fn loss(&self, values: &DVector<T>) -> T {
        match &self.objective {
            Objective::Wls(v) => wls_raw(self.spec, values, &self.s, v, &self.w),
            Objective::Ml => ml_raw(self.spec, values, self.sample, &self.w).0,
        }
    }

    fn local(&self, values: &DVector<T>) -> Option<Local<T>> {
        let owned;
        let v = match &self.objective {
            Objective::Wls(v) => v,
            Objective::Ml => {
                let inv = ml_raw(self.spec, values, self.sample, &self.w).1?;
                owned = inv.iter().map(ml_weight_from_inverse).collect::<Vec<_>>();
                &owned
            }
        };
        let delta = jacobian_raw(self.spec, values);
        let r = &self.s - implied_raw(self.spec, values).values;
        Some(Local {
            grad: gradient_raw(self.spec, &delta, &r, v, &self.w),
            info: information_raw(self.spec, &delta, v, &self.w),
        })
    }

    /// Central-difference Hessian of the loss from analytic gradients.
    fn hessian(&self, values: &DVector<T>) -> Option<DMatrix<T>> {
        let p = values.len();
        let mut h = DMatrix::zeros(p, p);
        let step = T::eps().cbrt();
        for j in 0..p {
            let hj = step * T::one().max(values[j].abs());
            let mut up = values.clone();
            let mut dn = values.clone();
            up[j] += hj;
            dn[j] -= hj;
            let col = (self.local(&up)?.grad - self.local(&dn)?.grad) / (hj + hj);
            h.set_column(j, &col);
        }
        Some((&h + h.transpose()) * T::lit(0.5))
    }
}

/// `λ_max / λ_min` of a symmetric matrix; infinite unless positive definite.
pub(crate) fn sym_condition<T: Real>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let ev = m.clone().symmetric_eigenvalues();
    let lo = ev.iter().fold(f64::INFINITY, |a, x| a.min(x.as_f64()));
    let hi = ev.iter().fold(f64::NEG_INFINITY, |a, x| a.max(x.as_f64()));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Solves `H d = g` for symmetric `H`. Eigenvalues below `λ_max / limit` are
/// dropped (pseudo-inverse); with `ridge`, an `H` that is not positive
/// definite is first shifted by `|λ_min| + 1e-3 λ_max`.
fn solve_sym<T: Real>(h: &DMatrix<T>, g: &DVector<T>, limit: f64, ridge: bool) -> DVector<T> {
    let eig = h.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    let floor = lmax / T::lit(limit);
    let lmin = eig.eigenvalues.iter().fold(lmax, |a, &x| a.min(x));
    let shift = if ridge && lmin <= floor { lmax * T::lit(1e-3) - lmin } else { T::zero() };
    let mut d = DVector::zeros(g.len());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let l = l + shift;
        if l > floor {
            let q = eig.eigenvectors.column(i);
            d += q * (q.dot(g) / l);
        }
    }
    d
}

/// Minimizes the loss from the model's start values.
pub fn fit<T: Real>(
    spec: &ModelSpec<T>,
    moments: &SampleMoments<T>,
    config: &FitConfig,
) -> Result<FitResult<T>, EstimationError> {
    fit_from(spec, moments, config, &spec.start_theta())
}

/// Minimizes the loss from `start`.
pub fn fit_from<T: Real>(
    spec: &ModelSpec<T>,
    moments: &SampleMoments<T>,
    config: &FitConfig,
    start: &Theta<T>,
) -> Result<FitResult<T>, EstimationError> {
    config.validate()?;
    spec.check_theta(start)?;
    moments.check_against(spec)?;
    let mut sample_v = Vec::new();
    for (g, s) in moments.covariances.iter().enumerate() {
        let c = cholesky(s, &format!("sample covariance of group {}", g + 1))?;
        sample_v.push(ml_weight_from_inverse(&c.inverse()));
    }
    let mut warnings = Vec::new();
    let mut policy = config.weight_policy;
    let mut problem = Problem {
        spec,
        sample: moments,
        s: moments.moment_vector().values,
        w: moments.group_weights(),
        objective: match policy {
            WeightPolicy::Sample => Objective::Wls(sample_v.clone()),
            WeightPolicy::Iterative => Objective::Ml,
        },
    };
    let mut theta = start.values.clone();
    let mut f = problem.loss(&theta);
    if !f.is_finite() && policy == WeightPolicy::Iterative {
        warnings.push("start values imply a covariance matrix that is not positive definite; using sample weights".into());
        policy = WeightPolicy::Sample;
        problem.objective = Objective::Wls(sample_v);
        f = problem.loss(&theta);
    }

    let mut iterations = 0;
    let mut loss_history = vec![f];
    let (stop_reason, gradient_norm, information_condition) = loop {
        let local = problem.local(&theta).expect("accepted iterates have finite loss");
        let gmax = local.grad.iter().fold(T::zero(), |a, x| a.max(x.abs()));
        let cond = sym_condition(&local.info);
        if (gmax / T::one().max(f)).as_f64() < config.tol {
            let reason = if cond >= config.singular_threshold {
                StopReason::SingularInformation
            } else {
                StopReason::GradientTol
            };
            break (reason, gmax, cond);
        }
        if iterations >= config.max_iter {
            break (StopReason::MaxIter, gmax, cond);
        }
        let direction = match config.optimizer {
            Optimizer::GradientDescent => &local.grad * T::lit(config.learning_rate),
            Optimizer::FisherScoring => {
                solve_sym(&(&local.info * T::lit(2.0)), &local.grad, config.singular_threshold, false)
            }
            Optimizer::NewtonRaphson => match problem.hessian(&theta) {
                Some(h) => solve_sym(&h, &local.grad, config.singular_threshold, true),
                None => solve_sym(&(&local.info * T::lit(2.0)), &local.grad, config.singular_threshold, false),
            },
        };
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let cand = &theta - &direction * alpha;
            let fc = problem.loss(&cand);
            if fc.is_finite() && fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= T::lit(0.5);
        }
        match accepted {
            Some((cand, fc)) => {
                theta = cand;
                f = fc;
                iterations += 1;
                loss_history.push(f);
            }
            None => break (StopReason::LineFailure, gmax, cond),
        }
    };

    let theta_hat = start.with_values(theta);
    let admissibility = check_admissibility(spec, &theta_hat)?;
    Ok(FitResult {
        converged: stop_reason == StopReason::GradientTol,
        stop_reason,
        loss: f,
        iterations,
        gradient_norm,
        information_condition,
        admissible: admissibility.admissible,
        admissibility,
        theta_hat,
        weight_policy: policy,
        warnings,
        loss_history,
    })
}
