use serde::Serialize;

use crate::model::{build_matrices, MatrixKind, ModelError, ModelSpec, Slot, Theta};
use crate::scalar::Real;

const EIGEN_TOL: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OffenseKind {
    NegativeVariance,
    NotPositiveSemidefinite,
}

/// One reason an estimate is inadmissible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offense<T> {
    pub kind: OffenseKind,
    pub group: usize,
    pub matrix: MatrixKind,
    /// The diagonal slot for a negative variance; `None` for a whole-matrix failure.
    pub slot: Option<Slot>,
    /// The negative variance, or the smallest eigenvalue.
    pub value: T,
}

impl<T: Real> std::fmt::Display for Offense<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.kind, self.slot) {
            (OffenseKind::NegativeVariance, Some(slot)) => write!(f, "negative variance {} at {slot}", self.value),
            _ => write!(
                f,
                "group {} {} not positive semidefinite (smallest eigenvalue {})",
                self.group + 1,
                self.matrix.symbol(),
                self.value
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility<T> {
    pub admissible: bool,
    pub offenses: Vec<Offense<T>>,
}

/// Admissible iff every `Φ_g` and `Ψ_g` is positive semidefinite with a
/// non-negative diagonal (eigenvalue tolerance `-1e-10`).
pub fn check_admissibility<T: Real>(spec: &ModelSpec<T>, theta: &Theta<T>) -> Result<Admissibility<T>, ModelError> {
    let mats = build_matrices(spec, theta)?;
    let mut offenses = Vec::new();
    for (g, m) in mats.iter().enumerate() {
        for (kind, mat) in [(MatrixKind::FactorCov, &m.factor_cov), (MatrixKind::ResidualCov, &m.residual_cov)] {
            let mut diag_bad = false;
            for i in 0..mat.nrows() {
                if mat[(i, i)] < T::zero() {
                    diag_bad = true;
                    offenses.push(Offense {
                        kind: OffenseKind::NegativeVariance,
                        group: g,
                        matrix: kind,
                        slot: Some(Slot::new(g, kind, i, i)),
                        value: mat[(i, i)],
                    });
                }
            }
            if mat.is_empty() || diag_bad {
                continue;
            }
            let lo = mat
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(T::max_value().unwrap_or_else(T::one), |a, x| a.min(x));
            if lo.as_f64() < EIGEN_TOL {
                offenses.push(Offense {
                    kind: OffenseKind::NotPositiveSemidefinite,
                    group: g,
                    matrix: kind,
                    slot: None,
                    value: lo,
                });
            }
        }
    }
    Ok(Admissibility {
        admissible: offenses.is_empty(),
        offenses,
    })
}
