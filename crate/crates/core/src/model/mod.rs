//! Multi-group confirmatory factor models stored as a parameter table over
//! the per-group matrices `(Λ_g, Φ_g, Ψ_g)`.
//!
//! Every matrix cell that no [`ParameterEntry`] mentions is fixed at zero.
//! Entries sharing a label are one free parameter, which is how equality
//! constraints (within and across groups) are expressed.

pub(crate) mod implied;
mod validate;
pub mod vech;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub use implied::{build_matrices, implied_sigma, GroupMatrices};
pub use validate::{validate, Violation, ViolationKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("theta has {got} values but the model has {expected} free parameters")]
    ThetaLength { expected: usize, got: usize },
    #[error("theta labels do not match the model's free-parameter order")]
    ThetaLabels,
    #[error("matrix is not symmetric (max deviation {max_dev:e})")]
    Asymmetric { max_dev: f64 },
    #[error("moment vector length {got} does not match model length {expected}")]
    MomentLength { expected: usize, got: usize },
    #[error("group {group}: expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    GroupDimension {
        group: usize,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("group count mismatch: model has {expected}, input has {got}")]
    GroupCount { expected: usize, got: usize },
    #[error("unknown free parameter label `{0}`")]
    UnknownLabel(String),
    #[error("free-parameter order must list each free label exactly once")]
    BadFreeOrder,
    #[error("group {group}: sample size {n} is below q + 1 = {min}")]
    SampleSize { group: usize, n: usize, min: usize },
}

/// Which model matrix a slot addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatrixKind {
    /// Λ: observed × latent.
    Loading,
    /// Φ: latent × latent.
    FactorCov,
    /// Ψ: observed × observed.
    ResidualCov,
}

impl MatrixKind {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, MatrixKind::Loading)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            MatrixKind::Loading => "Lambda",
            MatrixKind::FactorCov => "Phi",
            MatrixKind::ResidualCov => "Psi",
        }
    }
}

/// A matrix cell: group, matrix, zero-based row and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub group: usize,
    pub matrix: MatrixKind,
    pub row: usize,
    pub col: usize,
}

impl Slot {
    pub fn new(group: usize, matrix: MatrixKind, row: usize, col: usize) -> Self {
        Slot {
            group,
            matrix,
            row,
            col,
        }
    }

    pub fn mirrored(self) -> Self {
        Slot {
            row: self.col,
            col: self.row,
            ..self
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "group {} {}[{},{}]",
            self.group + 1,
            self.matrix.symbol(),
            self.row + 1,
            self.col + 1
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParamStatus {
    Free,
    Fixed,
}

/// One row of the parameter table. `value` is the fixed value for
/// [`ParamStatus::Fixed`] entries and the start value for free ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterEntry<T> {
    pub label: String,
    pub slot: Slot,
    pub status: ParamStatus,
    pub value: T,
}

impl<T: Real> ParameterEntry<T> {
    pub fn free(label: impl Into<String>, slot: Slot, start: T) -> Self {
        ParameterEntry {
            label: label.into(),
            slot,
            status: ParamStatus::Free,
            value: start,
        }
    }

    pub fn fixed(label: impl Into<String>, slot: Slot, value: T) -> Self {
        ParameterEntry {
            label: label.into(),
            slot,
            status: ParamStatus::Fixed,
            value,
        }
    }

    pub fn is_free(&self) -> bool {
        self.status == ParamStatus::Free
    }
}

/// Variable names of one group, in matrix order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub observed: Vec<String>,
    pub latent: Vec<String>,
}

impl GroupSpec {
    pub fn new(observed: Vec<String>, latent: Vec<String>) -> Self {
        GroupSpec { observed, latent }
    }

    pub fn n_observed(&self) -> usize {
        self.observed.len()
    }

    pub fn n_latent(&self) -> usize {
        self.latent.len()
    }

    pub fn n_moments(&self) -> usize {
        let q = self.observed.len();
        q * (q + 1) / 2
    }

    pub fn observed_index(&self, name: &str) -> Option<usize> {
        self.observed.iter().position(|n| n == name)
    }

    pub fn latent_index(&self, name: &str) -> Option<usize> {
        self.latent.iter().position(|n| n == name)
    }
}

/// A multi-group CFA model. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<T> {
    groups: Vec<GroupSpec>,
    entries: Vec<ParameterEntry<T>>,
    free: Arc<Vec<String>>,
    // parallel to `entries`: index into `free` for free entries
    param_of: Vec<Option<usize>>,
}

impl<T: Real> ModelSpec<T> {
    /// Builds a spec; the free-parameter order is the order in which free
    /// labels first appear in `entries`.
    pub fn new(groups: Vec<GroupSpec>, entries: Vec<ParameterEntry<T>>) -> Self {
        let mut free: Vec<String> = Vec::new();
        for e in &entries {
            if e.is_free() && !free.iter().any(|l| l == &e.label) {
                free.push(e.label.clone());
            }
        }
        Self::assemble(groups, entries, free)
    }

    fn assemble(groups: Vec<GroupSpec>, entries: Vec<ParameterEntry<T>>, free: Vec<String>) -> Self {
        let index: HashMap<&str, usize> = free
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let param_of = entries
            .iter()
            .map(|e| {
                if e.is_free() {
                    index.get(e.label.as_str()).copied()
                } else {
                    None
                }
            })
            .collect();
        ModelSpec {
            groups,
            entries,
            free: Arc::new(free),
            param_of,
        }
    }

    /// Returns the same model with θ laid out in `order`, which must be a
    /// permutation of the current free labels.
    pub fn with_free_order<S: AsRef<str>>(self, order: &[S]) -> Result<Self, ModelError> {
        let order: Vec<String> = order.iter().map(|s| s.as_ref().to_string()).collect();
        if order.len() != self.free.len() {
            return Err(ModelError::BadFreeOrder);
        }
        for l in &order {
            if !self.free.contains(l) {
                return Err(ModelError::UnknownLabel(l.clone()));
            }
        }
        let mut seen = order.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != order.len() {
            return Err(ModelError::BadFreeOrder);
        }
        Ok(Self::assemble(self.groups, self.entries, order))
    }

    pub fn groups(&self) -> &[GroupSpec] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn entries(&self) -> &[ParameterEntry<T>] {
        &self.entries
    }

    /// Free-parameter labels in θ order.
    pub fn free_labels(&self) -> &[String] {
        &self.free
    }

    pub fn free_index(&self, label: &str) -> Option<usize> {
        self.free.iter().position(|l| l == label)
    }

    /// Index into θ for entry `i`, if it is free.
    pub fn param_of_entry(&self, i: usize) -> Option<usize> {
        self.param_of[i]
    }

    /// `p`, the number of distinct free labels.
    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// `p*`, the number of non-redundant moments over all groups.
    pub fn n_moments(&self) -> usize {
        self.groups.iter().map(GroupSpec::n_moments).sum()
    }

    pub fn degrees_of_freedom(&self) -> isize {
        self.n_moments() as isize - self.n_free() as isize
    }

    /// Offsets of each group's segment in the stacked moment vector.
    pub fn moment_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.groups.len() + 1);
        let mut acc = 0;
        off.push(0);
        for g in &self.groups {
            acc += g.n_moments();
            off.push(acc);
        }
        off
    }

    /// θ built from the start values stored in the table.
    pub fn start_theta(&self) -> Theta<T> {
        let mut values = DVector::zeros(self.free.len());
        let mut set = vec![false; self.free.len()];
        for (e, p) in self.entries.iter().zip(&self.param_of) {
            if let Some(k) = *p {
                if !set[k] {
                    values[k] = e.value;
                    set[k] = true;
                }
            }
        }
        Theta {
            values,
            labels: self.free.clone(),
        }
    }

    /// Wraps raw values as a θ for this model.
    pub fn theta(&self, values: DVector<T>) -> Result<Theta<T>, ModelError> {
        if values.len() != self.free.len() {
            return Err(ModelError::ThetaLength {
                expected: self.free.len(),
                got: values.len(),
            });
        }
        Ok(Theta {
            values,
            labels: self.free.clone(),
        })
    }

    /// θ from `(label, value)` pairs; labels not mentioned keep their start value.
    pub fn theta_from_pairs<S: AsRef<str>>(&self, pairs: &[(S, T)]) -> Result<Theta<T>, ModelError> {
        let mut theta = self.start_theta();
        for (l, v) in pairs {
            let k = self
                .free_index(l.as_ref())
                .ok_or_else(|| ModelError::UnknownLabel(l.as_ref().to_string()))?;
            theta.values[k] = *v;
        }
        Ok(theta)
    }

    /// Same model with start values replaced by `theta`.
    pub fn with_start(&self, theta: &Theta<T>) -> Result<Self, ModelError> {
        self.check_theta(theta)?;
        let mut out = self.clone();
        for (e, p) in out.entries.iter_mut().zip(&self.param_of) {
            if let Some(k) = *p {
                e.value = theta.values[k];
            }
        }
        Ok(out)
    }

    pub(crate) fn check_theta(&self, theta: &Theta<T>) -> Result<(), ModelError> {
        if theta.values.len() != self.free.len() {
            return Err(ModelError::ThetaLength {
                expected: self.free.len(),
                got: theta.values.len(),
            });
        }
        if !Arc::ptr_eq(&theta.labels, &self.free) && *theta.labels != *self.free {
            return Err(ModelError::ThetaLabels);
        }
        Ok(())
    }

    /// Converts every value to another scalar type.
    pub fn cast<U: Real>(&self) -> ModelSpec<U> {
        let entries = self
            .entries
            .iter()
            .map(|e| ParameterEntry {
                label: e.label.clone(),
                slot: e.slot,
                status: e.status,
                value: U::lit(e.value.as_f64()),
            })
            .collect();
        ModelSpec::assemble(self.groups.clone(), entries, (*self.free).clone())
    }

    /// Structural equivalence: same groups and variable order, same slots
    /// with the same status and value, and free labels that partition the
    /// slots identically (label names themselves may differ).
    pub fn equivalent(&self, other: &ModelSpec<T>) -> bool {
        if self.groups != other.groups || self.n_free() != other.n_free() {
            return false;
        }
        let table = |s: &ModelSpec<T>| {
            let mut m: HashMap<Slot, (ParamStatus, T, Option<usize>)> = HashMap::new();
            for (i, e) in s.entries.iter().enumerate() {
                m.insert(e.slot, (e.status, e.value, s.param_of[i]));
            }
            m
        };
        let a = table(self);
        let b = table(other);
        let nonzero = |m: &HashMap<Slot, (ParamStatus, T, Option<usize>)>| {
            m.iter()
                .filter(|(_, (st, v, _))| *st == ParamStatus::Free || *v != T::zero())
                .count()
        };
        if nonzero(&a) != nonzero(&b) {
            return false;
        }
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut inv: HashMap<usize, usize> = HashMap::new();
        for (slot, (st, v, p)) in &a {
            let (st2, v2, p2) = match b.get(slot) {
                Some(x) => *x,
                None if *st == ParamStatus::Fixed && *v == T::zero() => continue,
                None => return false,
            };
            if *st != st2 {
                return false;
            }
            match (p, p2) {
                (Some(x), Some(y)) => {
                    if *map.entry(*x).or_insert(y) != y || *inv.entry(y).or_insert(*x) != *x {
                        return false;
                    }
                    if (*v - v2).abs() > T::lit(1e-12) * (T::one() + v.abs()) {
                        return false;
                    }
                }
                (None, None) => {
                    if (*v - v2).abs() > T::lit(1e-12) * (T::one() + v.abs()) {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        true
    }
}

/// The free-parameter vector θ with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta<T> {
    pub values: DVector<T>,
    labels: Arc<Vec<String>>,
}

impl<T: Real> Theta<T> {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<T> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.values[i])
    }

    /// Same labels, new values.
    pub fn with_values(&self, values: DVector<T>) -> Self {
        assert_eq!(values.len(), self.labels.len(), "theta length");
        Theta {
            values,
            labels: self.labels.clone(),
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, T)> + '_ {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }
}

/// Stacked per-group vech-ordered (co)variances.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector<T> {
    pub values: DVector<T>,
    offsets: Vec<usize>,
}

impl<T: Real> MomentVector<T> {
    pub fn from_segments(segments: &[DVector<T>]) -> Self {
        let mut offsets = vec![0];
        let total: usize = segments.iter().map(|s| s.len()).sum();
        let mut values = DVector::zeros(total);
        let mut at = 0;
        for s in segments {
            values.rows_mut(at, s.len()).copy_from(s);
            at += s.len();
            offsets.push(at);
        }
        MomentVector { values, offsets }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn segment(&self, g: usize) -> nalgebra::DVectorView<'_, T> {
        let (a, b) = (self.offsets[g], self.offsets[g + 1]);
        self.values.rows(a, b - a)
    }
}

/// Per-group sample covariance matrices and sample sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMoments<T> {
    pub covariances: Vec<DMatrix<T>>,
    pub sizes: Vec<usize>,
}

impl<T: Real> SampleMoments<T> {
    pub fn new(covariances: Vec<DMatrix<T>>, sizes: Vec<usize>) -> Result<Self, ModelError> {
        if covariances.len() != sizes.len() {
            return Err(ModelError::GroupCount {
                expected: covariances.len(),
                got: sizes.len(),
            });
        }
        for (g, s) in covariances.iter().enumerate() {
            if !s.is_square() {
                return Err(ModelError::GroupDimension {
                    group: g + 1,
                    expected: s.nrows(),
                    rows: s.nrows(),
                    cols: s.ncols(),
                });
            }
            let dev = vech::max_asymmetry(s);
            if dev > 1e-8 {
                return Err(ModelError::Asymmetric { max_dev: dev });
            }
        }
        Ok(SampleMoments { covariances, sizes })
    }

    /// Moments of a single group.
    pub fn single(cov: DMatrix<T>, n: usize) -> Result<Self, ModelError> {
        Self::new(vec![cov], vec![n])
    }

    pub fn total_n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// `w_g = n_g / Σ n`.
    pub fn group_weights(&self) -> Vec<T> {
        let total = T::lit(self.total_n() as f64);
        self.sizes
            .iter()
            .map(|&n| T::lit(n as f64) / total)
            .collect()
    }

    /// Checks the moments against a model's group layout.
    pub fn check_against(&self, spec: &ModelSpec<T>) -> Result<(), ModelError> {
        if self.covariances.len() != spec.n_groups() {
            return Err(ModelError::GroupCount {
                expected: spec.n_groups(),
                got: self.covariances.len(),
            });
        }
        for (g, (s, gs)) in self.covariances.iter().zip(spec.groups()).enumerate() {
            let q = gs.n_observed();
            if s.nrows() != q || s.ncols() != q {
                return Err(ModelError::GroupDimension {
                    group: g + 1,
                    expected: q,
                    rows: s.nrows(),
                    cols: s.ncols(),
                });
            }
            if self.sizes[g] < q + 1 {
                return Err(ModelError::SampleSize {
                    group: g + 1,
                    n: self.sizes[g],
                    min: q + 1,
                });
            }
        }
        Ok(())
    }

    /// Stacked `s = (vech(S_1)ᵀ, …)ᵀ`.
    pub fn moment_vector(&self) -> MomentVector<T> {
        let segs: Vec<DVector<T>> = self.covariances.iter().map(vech::vech_unchecked).collect();
        MomentVector::from_segments(&segs)
    }
}
