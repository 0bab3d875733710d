use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::model::implied::{build_raw, implied_raw};
use crate::model::vech::vech_pairs;
use crate::model::{MatrixKind, ModelError, ModelSpec, Theta};
use crate::scalar::Real;

/// Row label of Δ: the group and the variable pair of one moment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MomentLabel {
    /// 0-based group index.
    pub group: usize,
    pub row: String,
    pub col: String,
}

impl std::fmt::Display for MomentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "g{}:{},{}", self.group + 1, self.row, self.col)
    }
}

/// Δ = ∂σ/∂θᵀ with labelled rows (moments) and columns (free parameters).
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian<T: Real> {
    pub matrix: DMatrix<T>,
    pub rows: Vec<MomentLabel>,
    pub columns: Vec<String>,
    /// Start row of every group's block, plus the total row count.
    pub offsets: Vec<usize>,
}

impl<T: Real> Jacobian<T> {
    fn labelled(spec: &ModelSpec<T>, matrix: DMatrix<T>) -> Self {
        Jacobian {
            matrix,
            rows: moment_labels(spec),
            columns: spec.free_labels().to_vec(),
            offsets: spec.moment_offsets(),
        }
    }

    /// Rows of group `g`.
    pub fn group_block(&self, g: usize) -> DMatrix<T> {
        let (a, b) = (self.offsets[g], self.offsets[g + 1]);
        self.matrix.rows(a, b - a).into_owned()
    }
}

/// Labels of the stacked moment vector in vech order.
pub fn moment_labels<T: Real>(spec: &ModelSpec<T>) -> Vec<MomentLabel> {
    let mut out = Vec::with_capacity(spec.n_moments());
    for (g, gs) in spec.groups().iter().enumerate() {
        for (i, j) in vech_pairs(gs.n_observed()) {
            out.push(MomentLabel {
                group: g,
                row: gs.observed[i].clone(),
                col: gs.observed[j].clone(),
            });
        }
    }
    out
}

/// Analytic Jacobian of the implied moments.
///
/// Per slot the differential of `Σ = ΛΦΛᵀ + Ψ` is
/// `dΛ ΦΛᵀ + ΛΦ dΛᵀ`, `Λ dΦ Λᵀ` or `dΨ`; a label's column sums the
/// contributions of every slot (mirrored halves included) carrying it.
pub fn analytic_jacobian<T: Real>(spec: &ModelSpec<T>, theta: &Theta<T>) -> Result<Jacobian<T>, ModelError> {
    spec.check_theta(theta)?;
    Ok(Jacobian::labelled(spec, jacobian_raw(spec, &theta.values)))
}

pub(crate) fn jacobian_raw<T: Real>(spec: &ModelSpec<T>, values: &DVector<T>) -> DMatrix<T> {
    let mats = build_raw(spec, values);
    let offsets = spec.moment_offsets();
    let mut d = DMatrix::zeros(spec.n_moments(), spec.n_free());
    let pairs: Vec<Vec<(usize, usize)>> = spec
        .groups()
        .iter()
        .map(|g| vech_pairs(g.n_observed()))
        .collect();
    let products: Vec<DMatrix<T>> = mats.iter().map(|m| &m.loadings * &m.factor_cov).collect();
    for (e_idx, e) in spec.entries().iter().enumerate() {
        let Some(k) = spec.param_of_entry(e_idx) else { continue };
        let g = e.slot.group;
        let (r, c) = (e.slot.row, e.slot.col);
        let lam = &mats[g].loadings;
        let lp = &products[g];
        for (row, &(a, b)) in pairs[g].iter().enumerate() {
            let v = match e.slot.matrix {
                MatrixKind::Loading => {
                    let mut v = T::zero();
                    if a == r {
                        v += lp[(b, c)];
                    }
                    if b == r {
                        v += lp[(a, c)];
                    }
                    v
                }
                MatrixKind::FactorCov => lam[(a, r)] * lam[(b, c)],
                MatrixKind::ResidualCov => {
                    if a == r && b == c {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
            };
            d[(offsets[g] + row, k)] += v;
        }
    }
    d
}

/// Central-difference Jacobian of the implied moments with step `h`.
pub fn numeric_jacobian<T: Real>(spec: &ModelSpec<T>, theta: &Theta<T>, h: T) -> Result<Jacobian<T>, ModelError> {
    spec.check_theta(theta)?;
    let p = spec.n_free();
    let mut d = DMatrix::zeros(spec.n_moments(), p);
    let two_h = h + h;
    for k in 0..p {
        let mut up = theta.values.clone();
        let mut dn = theta.values.clone();
        up[k] += h;
        dn[k] -= h;
        let col = (implied_raw(spec, &up).values - implied_raw(spec, &dn).values) / two_h;
        d.set_column(k, &col);
    }
    Ok(Jacobian::labelled(spec, d))
}
