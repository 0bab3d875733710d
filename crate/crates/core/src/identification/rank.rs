use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::jacobian::{jacobian_raw, Jacobian};
use crate::dsl::presets::{SbMtmm, SbRole};
use crate::model::{ModelSpec, Theta};
use crate::scalar::Real;

/// How the numeric-rank cutoff on singular values is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RankTolerance {
    /// `max(p*, p) · σ_max · ε`.
    #[default]
    Default,
    /// Fixed absolute cutoff.
    Absolute(f64),
}

/// SVD-based rank and nullspace of a Jacobian.
#[derive(Debug, Clone)]
pub struct JacobianReport<T: Real> {
    pub jacobian: Jacobian<T>,
    /// Descending; always `p` values (zero-padded when `p* < p`).
    pub singular_values: Vec<T>,
    pub rank: usize,
    pub tolerance: T,
    /// `p × (p - rank)`, unit columns with their largest-magnitude entry positive.
    pub nullspace: DMatrix<T>,
}

impl<T: Real> JacobianReport<T> {
    pub fn n_params(&self) -> usize {
        self.jacobian.matrix.ncols()
    }

    pub fn deficiency(&self) -> usize {
        self.n_params() - self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.deficiency() == 0
    }

    pub fn sigma_max(&self) -> T {
        self.singular_values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn sigma_min(&self) -> T {
        self.singular_values.last().copied().unwrap_or_else(T::zero)
    }

    /// `σ_max / σ_min` of Δ (infinite at exact zero).
    pub fn condition_number(&self) -> f64 {
        let lo = self.sigma_min().as_f64();
        if lo > 0.0 {
            self.sigma_max().as_f64() / lo
        } else {
            f64::INFINITY
        }
    }
}

/// Numeric rank and nullspace of Δ from its singular value decomposition.
pub fn rank_report<T: Real>(jacobian: Jacobian<T>, tol: RankTolerance) -> JacobianReport<T> {
    let (m, p) = jacobian.matrix.shape();
    // pad to at least p rows so the SVD yields the full right basis
    let a = if m < p {
        let mut a = DMatrix::zeros(p, p);
        a.rows_mut(0, m).copy_from(&jacobian.matrix);
        a
    } else {
        jacobian.matrix.clone()
    };
    let (sv, vt) = if p == 0 {
        (Vec::new(), DMatrix::zeros(0, 0))
    } else {
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("requested V");
        let mut idx: Vec<usize> = (0..p).collect();
        idx.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap_or(std::cmp::Ordering::Equal));
        let sv: Vec<T> = idx.iter().map(|&i| svd.singular_values[i]).collect();
        let vt = DMatrix::from_fn(p, p, |r, c| vt[(idx[r], c)]);
        (sv, vt)
    };
    let smax = sv.first().copied().unwrap_or_else(T::zero);
    let tolerance = match tol {
        RankTolerance::Default => T::lit(m.max(p) as f64) * smax * T::eps(),
        RankTolerance::Absolute(t) => T::lit(t),
    };
    let rank = sv.iter().filter(|&&s| s > tolerance).count();
    let mut nullspace = DMatrix::zeros(p, p - rank);
    for (k, r) in (rank..p).enumerate() {
        let mut v: DVector<T> = vt.row(r).transpose();
        normalize_direction(&mut v);
        nullspace.set_column(k, &v);
    }
    JacobianReport {
        jacobian,
        singular_values: sv,
        rank,
        tolerance,
        nullspace,
    }
}

/// Unit length, largest-magnitude component positive.
fn normalize_direction<T: Real>(v: &mut DVector<T>) {
    let norm = v.norm();
    if norm > T::zero() {
        *v /= norm;
    }
    let big = v.iter().copied().fold(T::zero(), |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if big < T::zero() {
        v.neg_mut();
    }
}

/// Split of the free parameters by whether a rank deficiency touches them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffectedSet {
    pub affected: Vec<String>,
    pub orthogonal: Vec<String>,
    /// Per parameter, in θ order: max |component| over the unit nullspace basis.
    pub components: Vec<(String, f64)>,
}

/// Classifies parameters by their nullspace components: below `threshold`
/// (default 1e-8) is orthogonal to the deficiency.
pub fn affected_params<T: Real>(report: &JacobianReport<T>, threshold: f64) -> AffectedSet {
    let mut set = AffectedSet {
        affected: Vec::new(),
        orthogonal: Vec::new(),
        components: Vec::new(),
    };
    for (i, label) in report.jacobian.columns.iter().enumerate() {
        let c = report
            .nullspace
            .row(i)
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs().as_f64()));
        if c < threshold {
            set.orthogonal.push(label.clone());
        } else {
            set.affected.push(label.clone());
        }
        set.components.push((label.clone(), c));
    }
    set
}

/// Expected and found nullspace component of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternEntry {
    pub label: String,
    pub expected: f64,
    pub found: f64,
}

/// Outcome of comparing the split-ballot nullspace with the closed-form pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternCheck {
    pub lambda: f64,
    pub rho: f64,
    pub deficiency: usize,
    /// False when the point is not a one-dimensional deficiency.
    pub applicable: bool,
    pub passed: bool,
    pub max_error: f64,
    /// Nullspace rescaled to `φ4 = -1`; empty when not applicable.
    pub entries: Vec<PatternEntry>,
}

/// Closed-form nullspace component of a split-ballot parameter at the
/// equal-loading (`λ`), equal-correlation (`ρ`) point, scaled to `φ4 = -1`.
pub fn expected_component(role: SbRole, lambda: f64, rho: f64) -> f64 {
    match role {
        SbRole::Loading { m: 1, .. } => 1.0 / (2.0 * lambda * rho),
        SbRole::Loading { .. } => -1.0 / (2.0 * lambda * rho),
        SbRole::Residual { method: 1 } => (rho - 1.0) / rho,
        SbRole::Residual { .. } => -(rho - 1.0) / rho,
        SbRole::Correlation => 0.0,
        SbRole::MethodVariance { m: 1 } => -1.0,
        SbRole::MethodVariance { .. } => 1.0,
    }
}

/// Checks the nullspace of the split-ballot model at `theta` against the
/// closed-form pattern, to absolute tolerance `tol` on each component.
/// `λ` and `ρ` are read from `l11` and `rho12`.
pub fn nullspace_pattern_check<T: Real>(sb: &SbMtmm<T>, theta: &Theta<T>, tol: f64) -> PatternCheck {
    let spec = &sb.spec;
    let lambda = theta.get("l11").map(Real::as_f64).unwrap_or(f64::NAN);
    let rho = theta.get("rho12").map(Real::as_f64).unwrap_or(f64::NAN);
    let jac = Jacobian {
        matrix: jacobian_raw(spec, &theta.values),
        rows: super::jacobian::moment_labels(spec),
        columns: spec.free_labels().to_vec(),
        offsets: spec.moment_offsets(),
    };
    let report = rank_report(jac, RankTolerance::Default);
    let mut out = PatternCheck {
        lambda,
        rho,
        deficiency: report.deficiency(),
        applicable: report.deficiency() == 1,
        passed: false,
        max_error: f64::NAN,
        entries: Vec::new(),
    };
    if !out.applicable {
        return out;
    }
    let n = report.nullspace.column(0);
    let phi4 = spec.free_index("phi4").map(|i| n[i].as_f64()).unwrap_or(0.0);
    if phi4 == 0.0 {
        out.applicable = false;
        return out;
    }
    let scale = -1.0 / phi4;
    let mut worst = 0.0f64;
    for (i, label) in spec.free_labels().iter().enumerate() {
        let found = n[i].as_f64() * scale;
        let expected = expected_component(sb.roles()[i], lambda, rho);
        worst = worst.max((found - expected).abs());
        out.entries.push(PatternEntry {
            label: label.clone(),
            expected,
            found,
        });
    }
    out.max_error = worst;
    out.passed = worst < tol;
    out
}

/// One row of a rank scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankScanRow {
    pub delta: f64,
    pub smallest_singular_value: f64,
    pub rank: usize,
    /// `σ_max / σ_min` of Δ.
    pub condition_number: f64,
}

/// Rank of Δ along a one-parameter family of θ points.
pub fn rank_scan<T: Real>(
    spec: &ModelSpec<T>,
    family: impl Fn(T) -> Theta<T>,
    grid: &[f64],
    tol: RankTolerance,
) -> Vec<RankScanRow> {
    grid.iter()
        .map(|&delta| {
            let theta = family(T::lit(delta));
            let jac = Jacobian {
                matrix: jacobian_raw(spec, &theta.values),
                rows: Vec::new(),
                columns: spec.free_labels().to_vec(),
                offsets: spec.moment_offsets(),
            };
            let r = rank_report(jac, tol);
            RankScanRow {
                delta,
                smallest_singular_value: r.sigma_min().as_f64(),
                rank: r.rank,
                condition_number: r.condition_number(),
            }
        })
        .collect()
}
