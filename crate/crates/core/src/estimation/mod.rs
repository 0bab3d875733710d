//! Weighted-least-squares / normal-theory ML objective, its gradient, the
//! optimizers and the admissibility check.
//!
//! The loss is `F = Σ_g w_g r_gᵀ V_g r_g` with `r_g = s_g - σ_g(θ)` and
//! `w_g = n_g / Σ n`. Differentiating gives `g = -2 Σ_g w_g Δ_gᵀ V_g r_g`;
//! the factor `-2` is kept so that `g` is the exact gradient of `F`.

mod admissibility;
pub(crate) mod fit;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::identification::jacobian::jacobian_raw;
use crate::model::implied::{implied_matrices, implied_raw};
use crate::model::vech::{max_asymmetry, vech_pairs};
use crate::model::{ModelError, ModelSpec, MomentVector, SampleMoments, Theta};
use crate::scalar::Real;

pub use admissibility::{check_admissibility, Admissibility, Offense, OffenseKind};
pub use fit::{fit, fit_from, FitConfig, FitResult, Optimizer, StopReason, WeightPolicy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{what} is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { what: String, min_eigenvalue: f64 },
    #[error("weight block {group} is {rows}x{cols}, expected {expected}x{expected}")]
    WeightDimension {
        group: usize,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{0} group weights for {1} groups")]
    GroupWeights(usize, usize),
    #[error("invalid fit configuration: {0}")]
    Config(String),
}

/// Block-diagonal positive-definite weight matrix, one block per group.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T: Real> {
    blocks: Vec<DMatrix<T>>,
}

impl<T: Real> WeightMatrix<T> {
    /// Checks each block for symmetry and positive definiteness.
    pub fn new(blocks: Vec<DMatrix<T>>) -> Result<Self, EstimationError> {
        for (g, b) in blocks.iter().enumerate() {
            if !b.is_square() {
                return Err(EstimationError::WeightDimension {
                    group: g + 1,
                    expected: b.nrows(),
                    rows: b.nrows(),
                    cols: b.ncols(),
                });
            }
            let dev = max_asymmetry(b);
            if dev > 1e-10 {
                return Err(ModelError::Asymmetric { max_dev: dev }.into());
            }
            if Cholesky::new(b.clone()).is_none() {
                return Err(EstimationError::NotPositiveDefinite {
                    what: format!("weight block {}", g + 1),
                    min_eigenvalue: min_eigenvalue(b),
                });
            }
        }
        Ok(WeightMatrix { blocks })
    }

    /// `V = I` for every group.
    pub fn identity(spec: &ModelSpec<T>) -> Self {
        WeightMatrix {
            blocks: spec
                .groups()
                .iter()
                .map(|g| DMatrix::identity(g.n_moments(), g.n_moments()))
                .collect(),
        }
    }

    /// Normal-theory ML weights from per-group covariance matrices.
    pub fn ml(sigmas: &[DMatrix<T>]) -> Result<Self, EstimationError> {
        let blocks = sigmas.iter().map(ml_weight).collect::<Result<Vec<_>, _>>()?;
        Ok(WeightMatrix { blocks })
    }

    pub fn blocks(&self) -> &[DMatrix<T>] {
        &self.blocks
    }

    /// The full block-diagonal matrix.
    pub fn to_dense(&self) -> DMatrix<T> {
        let n: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut out = DMatrix::zeros(n, n);
        let mut o = 0;
        for b in &self.blocks {
            out.view_mut((o, o), b.shape()).copy_from(b);
            o += b.nrows();
        }
        out
    }

    fn check(&self, spec: &ModelSpec<T>) -> Result<(), EstimationError> {
        if self.blocks.len() != spec.n_groups() {
            return Err(ModelError::GroupCount {
                expected: spec.n_groups(),
                got: self.blocks.len(),
            }
            .into());
        }
        for (g, (b, gs)) in self.blocks.iter().zip(spec.groups()).enumerate() {
            if b.nrows() != gs.n_moments() {
                return Err(EstimationError::WeightDimension {
                    group: g + 1,
                    expected: gs.n_moments(),
                    rows: b.nrows(),
                    cols: b.ncols(),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn min_eigenvalue<T: Real>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sym = (m + m.transpose()) * T::lit(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, x| acc.min(x.as_f64()))
}

/// Cholesky factor of a covariance matrix, or an error naming its smallest eigenvalue.
pub(crate) fn cholesky<T: Real>(m: &DMatrix<T>, what: &str) -> Result<Cholesky<T, Dyn>, EstimationError> {
    Cholesky::new(m.clone()).ok_or_else(|| EstimationError::NotPositiveDefinite {
        what: what.to_string(),
        min_eigenvalue: min_eigenvalue(m),
    })
}

/// `V = ½ Dᵀ(Σ⁻¹ ⊗ Σ⁻¹)D`.
pub fn ml_weight<T: Real>(sigma_hat: &DMatrix<T>) -> Result<DMatrix<T>, EstimationError> {
    let chol = cholesky(sigma_hat, "covariance matrix")?;
    Ok(ml_weight_from_inverse(&chol.inverse()))
}

/// `½ Dᵀ(A ⊗ A)D` for symmetric `A`, without forming the Kronecker product.
pub(crate) fn ml_weight_from_inverse<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let pairs = vech_pairs(a.nrows());
    let half = T::lit(0.5);
    let n = pairs.len();
    let mut v = DMatrix::zeros(n, n);
    for (u, &(i, j)) in pairs.iter().enumerate() {
        for (w, &(k, l)) in pairs.iter().enumerate().skip(u) {
            // sum over the duplicated positions of (i, j) and (k, l)
            let mut s = a[(i, k)] * a[(j, l)];
            if i != j {
                s += a[(j, k)] * a[(i, l)];
            }
            if k != l {
                s += a[(i, l)] * a[(j, k)];
                if i != j {
                    s += a[(j, l)] * a[(i, k)];
                }
            }
            v[(u, w)] = s * half;
            v[(w, u)] = s * half;
        }
    }
    v
}

fn check_inputs<T: Real>(
    spec: &ModelSpec<T>,
    theta: &Theta<T>,
    s: &MomentVector<T>,
    v: &WeightMatrix<T>,
    group_weights: &[T],
) -> Result<(), EstimationError> {
    spec.check_theta(theta)?;
    if s.len() != spec.n_moments() {
        return Err(ModelError::MomentLength {
            expected: spec.n_moments(),
            got: s.len(),
        }
        .into());
    }
    v.check(spec)?;
    if group_weights.len() != spec.n_groups() {
        return Err(EstimationError::GroupWeights(group_weights.len(), spec.n_groups()));
    }
    Ok(())
}

/// `F = Σ_g w_g r_gᵀ V_g r_g`.
pub fn wls_loss<T: Real>(
    spec: &ModelSpec<T>,
    theta: &Theta<T>,
    s: &MomentVector<T>,
    v: &WeightMatrix<T>,
    group_weights: &[T],
) -> Result<T, EstimationError> {
    check_inputs(spec, theta, s, v, group_weights)?;
    Ok(wls_raw(spec, &theta.values, &s.values, v.blocks(), group_weights))
}

/// `g = -2 Σ_g w_g Δ_gᵀ V_g r_g`.
pub fn gradient<T: Real>(
    spec: &ModelSpec<T>,
    theta: &Theta<T>,
    s: &MomentVector<T>,
    v: &WeightMatrix<T>,
    group_weights: &[T],
) -> Result<DVector<T>, EstimationError> {
    check_inputs(spec, theta, s, v, group_weights)?;
    let delta = jacobian_raw(spec, &theta.values);
    let r = &s.values - implied_raw(spec, &theta.values).values;
    Ok(gradient_raw(spec, &delta, &r, v.blocks(), group_weights))
}

/// Normal-theory ML discrepancy
/// `Σ_g w_g [log|Σ_g| + tr(S_g Σ_g⁻¹) - log|S_g| - q_g]`; infinite when
/// some implied `Σ_g` is not positive definite.
pub fn ml_discrepancy<T: Real>(
    spec: &ModelSpec<T>,
    theta: &Theta<T>,
    sample: &SampleMoments<T>,
) -> Result<T, EstimationError> {
    spec.check_theta(theta)?;
    sample.check_against(spec)?;
    for (g, s) in sample.covariances.iter().enumerate() {
        cholesky(s, &format!("sample covariance of group {}", g + 1))?;
    }
    Ok(ml_raw(spec, &theta.values, sample, &sample.group_weights()).0)
}

pub(crate) fn wls_raw<T: Real>(
    spec: &ModelSpec<T>,
    values: &DVector<T>,
    s: &DVector<T>,
    v: &[DMatrix<T>],
    w: &[T],
) -> T {
    let r = s - implied_raw(spec, values).values;
    let off = spec.moment_offsets();
    let mut f = T::zero();
    for (g, vg) in v.iter().enumerate() {
        let rg = r.rows(off[g], off[g + 1] - off[g]);
        f += w[g] * (rg.transpose() * vg * rg)[(0, 0)];
    }
    f
}

pub(crate) fn gradient_raw<T: Real>(
    spec: &ModelSpec<T>,
    delta: &DMatrix<T>,
    r: &DVector<T>,
    v: &[DMatrix<T>],
    w: &[T],
) -> DVector<T> {
    let off = spec.moment_offsets();
    let mut g = DVector::zeros(delta.ncols());
    let m2 = T::lit(-2.0);
    for (k, vg) in v.iter().enumerate() {
        let len = off[k + 1] - off[k];
        let dg = delta.rows(off[k], len);
        let rg = r.rows(off[k], len);
        g += dg.transpose() * (vg * rg) * (m2 * w[k]);
    }
    g
}

/// `Σ_g w_g Δ_gᵀ V_g Δ_g`.
pub(crate) fn information_raw<T: Real>(spec: &ModelSpec<T>, delta: &DMatrix<T>, v: &[DMatrix<T>], w: &[T]) -> DMatrix<T> {
    let off = spec.moment_offsets();
    let p = delta.ncols();
    let mut info = DMatrix::zeros(p, p);
    for (k, vg) in v.iter().enumerate() {
        let dg = delta.rows(off[k], off[k + 1] - off[k]);
        info += dg.transpose() * (vg * dg) * w[k];
    }
    (&info + info.transpose()) * T::lit(0.5)
}

/// ML discrepancy plus, when every `Σ_g` is PD, the inverse implied covariances.
///
/// Evaluated as `Σ_i μ_i - ln(1 + μ_i)` over the eigenvalues of
/// `L⁻¹(S - Σ)L⁻ᵀ` (`Σ = LLᵀ`), which keeps full relative precision as the
/// residual vanishes.
pub(crate) fn ml_raw<T: Real>(
    spec: &ModelSpec<T>,
    values: &DVector<T>,
    sample: &SampleMoments<T>,
    w: &[T],
) -> (T, Option<Vec<DMatrix<T>>>) {
    let mut f = T::zero();
    let mut inverses = Vec::with_capacity(spec.n_groups());
    for (g, sigma) in implied_matrices(spec, values).into_iter().enumerate() {
        let resid = &sample.covariances[g] - &sigma;
        let Some(c) = Cholesky::new(sigma) else {
            return (T::lit(f64::INFINITY), None);
        };
        let l = c.l();
        let Some(x) = l.solve_lower_triangular(&resid) else {
            return (T::lit(f64::INFINITY), None);
        };
        let Some(m) = l.solve_lower_triangular(&x.transpose()) else {
            return (T::lit(f64::INFINITY), None);
        };
        let m = (&m + m.transpose()) * T::lit(0.5);
        let mut fg = T::zero();
        for mu in m.symmetric_eigenvalues().iter() {
            if *mu <= -T::one() {
                return (T::lit(f64::INFINITY), None);
            }
            fg += *mu - mu.ln_1p();
        }
        f += w[g] * fg;
        inverses.push(c.inverse());
    }
    (f, Some(inverses))
}
