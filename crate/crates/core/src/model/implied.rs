use nalgebra::{DMatrix, DVector};

use super::vech::vech_unchecked;
use super::{MatrixKind, ModelError, ModelSpec, MomentVector, Theta};
use crate::scalar::Real;

/// `(Λ_g, Φ_g, Ψ_g)` for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMatrices<T: Real> {
    pub loadings: DMatrix<T>,
    pub factor_cov: DMatrix<T>,
    pub residual_cov: DMatrix<T>,
}

impl<T: Real> GroupMatrices<T> {
    /// `Λ Φ Λᵀ + Ψ`.
    pub fn sigma(&self) -> DMatrix<T> {
        let lp = &self.loadings * &self.factor_cov;
        let mut s = &lp * self.loadings.transpose();
        s += &self.residual_cov;
        s
    }
}

/// Fills every group's matrices from the parameter table and θ.
pub fn build_matrices<T: Real>(
    spec: &ModelSpec<T>,
    theta: &Theta<T>,
) -> Result<Vec<GroupMatrices<T>>, ModelError> {
    spec.check_theta(theta)?;
    Ok(build_raw(spec, &theta.values))
}

pub(crate) fn build_raw<T: Real>(spec: &ModelSpec<T>, values: &DVector<T>) -> Vec<GroupMatrices<T>> {
    let mut mats: Vec<GroupMatrices<T>> = spec
        .groups()
        .iter()
        .map(|g| GroupMatrices {
            loadings: DMatrix::zeros(g.n_observed(), g.n_latent()),
            factor_cov: DMatrix::zeros(g.n_latent(), g.n_latent()),
            residual_cov: DMatrix::zeros(g.n_observed(), g.n_observed()),
        })
        .collect();
    for (i, e) in spec.entries().iter().enumerate() {
        let v = match spec.param_of_entry(i) {
            Some(k) => values[k],
            None => e.value,
        };
        let m = &mut mats[e.slot.group];
        let target = match e.slot.matrix {
            MatrixKind::Loading => &mut m.loadings,
            MatrixKind::FactorCov => &mut m.factor_cov,
            MatrixKind::ResidualCov => &mut m.residual_cov,
        };
        target[(e.slot.row, e.slot.col)] = v;
    }
    mats
}

/// Stacked `vech(Λ_g Φ_g Λ_gᵀ + Ψ_g)` over groups.
pub fn implied_sigma<T: Real>(
    spec: &ModelSpec<T>,
    theta: &Theta<T>,
) -> Result<MomentVector<T>, ModelError> {
    spec.check_theta(theta)?;
    Ok(implied_raw(spec, &theta.values))
}

pub(crate) fn implied_raw<T: Real>(spec: &ModelSpec<T>, values: &DVector<T>) -> MomentVector<T> {
    let segs: Vec<DVector<T>> = build_raw(spec, values)
        .iter()
        .map(|m| vech_unchecked(&m.sigma()))
        .collect();
    MomentVector::from_segments(&segs)
}

pub(crate) fn implied_matrices<T: Real>(spec: &ModelSpec<T>, values: &DVector<T>) -> Vec<DMatrix<T>> {
    build_raw(spec, values).iter().map(GroupMatrices::sigma).collect()
}
