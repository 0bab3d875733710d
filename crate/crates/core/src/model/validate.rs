use std::collections::HashMap;
use std::fmt;

use super::{MatrixKind, ModelSpec, ParamStatus, Slot};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Slot lies outside the group's declared dimensions.
    Dimension,
    /// Symmetric-matrix off-diagonal slot without a mirrored entry carrying the same label.
    Symmetry,
    /// Entries sharing a label disagree on status or value.
    LabelConflict,
    /// Same slot listed more than once with different content.
    DuplicateSlot,
    /// Group index beyond the declared groups.
    UnknownGroup,
}

/// A broken invariant, naming the offending slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub slot: Slot,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.slot, self.message)
    }
}

/// Lists every invariant violation in the spec; empty means well-formed.
pub fn validate<T: Real>(spec: &ModelSpec<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let groups = spec.groups();
    let mut by_slot: HashMap<Slot, usize> = HashMap::new();
    let mut by_label: HashMap<&str, usize> = HashMap::new();

    for (i, e) in spec.entries().iter().enumerate() {
        let s = e.slot;
        let Some(g) = groups.get(s.group) else {
            out.push(Violation {
                kind: ViolationKind::UnknownGroup,
                slot: s,
                message: format!("model declares only {} group(s)", groups.len()),
            });
            continue;
        };
        let (rows, cols) = match s.matrix {
            MatrixKind::Loading => (g.n_observed(), g.n_latent()),
            MatrixKind::FactorCov => (g.n_latent(), g.n_latent()),
            MatrixKind::ResidualCov => (g.n_observed(), g.n_observed()),
        };
        if s.row >= rows || s.col >= cols {
            out.push(Violation {
                kind: ViolationKind::Dimension,
                slot: s,
                message: format!("outside {rows}x{cols} {}", s.matrix.symbol()),
            });
            continue;
        }

        if let Some(&j) = by_slot.get(&s) {
            let other = &spec.entries()[j];
            if other.status != e.status || other.label != e.label || other.value != e.value {
                out.push(Violation {
                    kind: ViolationKind::DuplicateSlot,
                    slot: s,
                    message: format!("listed twice (`{}` and `{}`)", other.label, e.label),
                });
            }
        } else {
            by_slot.insert(s, i);
        }

        if let Some(&j) = by_label.get(e.label.as_str()) {
            let first = &spec.entries()[j];
            if first.status != e.status {
                out.push(Violation {
                    kind: ViolationKind::LabelConflict,
                    slot: s,
                    message: format!("label `{}` is both free and fixed", e.label),
                });
            } else if first.value != e.value {
                let what = if e.status == ParamStatus::Free {
                    "start values"
                } else {
                    "fixed values"
                };
                out.push(Violation {
                    kind: ViolationKind::LabelConflict,
                    slot: s,
                    message: format!("label `{}` has different {what}", e.label),
                });
            }
        } else {
            by_label.insert(e.label.as_str(), i);
        }
    }

    for e in spec.entries() {
        let s = e.slot;
        if !s.matrix.is_symmetric() || s.row == s.col {
            continue;
        }
        let Some(&j) = by_slot.get(&s.mirrored()) else {
            out.push(Violation {
                kind: ViolationKind::Symmetry,
                slot: s,
                message: format!("mirrored slot {} is missing", s.mirrored()),
            });
            continue;
        };
        let m = &spec.entries()[j];
        if m.label != e.label {
            out.push(Violation {
                kind: ViolationKind::Symmetry,
                slot: s,
                message: format!("mirrored slot carries `{}` instead of `{}`", m.label, e.label),
            });
        }
    }
    out
}
