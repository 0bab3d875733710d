use nalgebra::DMatrix;

use super::jacobian::Jacobian;
use crate::estimation::fit::sym_condition;
use crate::estimation::WeightMatrix;
use crate::scalar::Real;

/// Fisher information `Σ_g w_g Δ_gᵀ V_g Δ_g` and what follows from it.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationReport<T: Real> {
    pub information: DMatrix<T>,
    pub condition_number: f64,
    /// `information⁻¹ / n`, when the condition number is below the threshold.
    pub asymptotic_variance: Option<DMatrix<T>>,
    /// Per parameter; `None` marks an unavailable standard error.
    pub standard_errors: Vec<Option<T>>,
}

impl<T: Real> InformationReport<T> {
    pub fn is_singular(&self) -> bool {
        self.asymptotic_variance.is_none()
    }
}

/// Information, its condition number, and (when the condition number is
/// below `singular_threshold`) the asymptotic covariance for total sample
/// size `n` with standard errors.
pub fn fisher_information<T: Real>(
    jacobian: &Jacobian<T>,
    weight: &WeightMatrix<T>,
    group_weights: &[T],
    n: usize,
    singular_threshold: f64,
) -> InformationReport<T> {
    let p = jacobian.matrix.ncols();
    let mut info = DMatrix::zeros(p, p);
    for (g, v) in weight.blocks().iter().enumerate() {
        let d = jacobian.group_block(g);
        info += d.transpose() * (v * &d) * group_weights[g];
    }
    let info = (&info + info.transpose()) * T::lit(0.5);
    let condition_number = sym_condition(&info);
    let acov = if condition_number < singular_threshold {
        info.clone()
            .cholesky()
            .map(|c| c.inverse() / T::lit(n as f64))
    } else {
        None
    };
    let standard_errors = match &acov {
        Some(a) => (0..p).map(|i| Some(a[(i, i)].max(T::zero()).sqrt())).collect(),
        None => vec![None; p],
    };
    InformationReport {
        information: info,
        condition_number,
        asymptotic_variance: acov,
        standard_errors,
    }
}
