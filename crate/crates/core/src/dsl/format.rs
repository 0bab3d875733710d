use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::model::{MatrixKind, ModelSpec, ParameterEntry};
use crate::scalar::Real;

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '.')
        && s != "start"
        && s != "group"
}

fn number(v: f64) -> String {
    // Display for f64 is the shortest representation that round-trips.
    format!("{v}")
}

/// Renders a spec as model text that parses back to an equivalent spec.
///
/// Every slot is written out explicitly inside its group's block; free
/// parameters always carry a label and a `start()` so sharing and start
/// values survive. Labels that are not valid identifiers (automatic ones
/// such as `T1=~y1`) are renamed.
pub fn format_spec<T: Real>(spec: &ModelSpec<T>) -> String {
    let labels = rename_labels(spec);
    let mut out = String::new();
    let multi = spec.n_groups() > 1;
    for (g, gs) in spec.groups().iter().enumerate() {
        if multi {
            if g > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "group: {}", g + 1);
        }
        let in_group = |m: MatrixKind| {
            spec.entries()
                .iter()
                .filter(move |e| e.slot.group == g && e.slot.matrix == m)
        };
        let term = |e: &ParameterEntry<T>, var: &str| -> String {
            if e.is_free() {
                format!("{}*start({})*{var}", labels[&e.label], number(e.value.as_f64()))
            } else {
                format!("{}*{var}", number(e.value.as_f64()))
            }
        };

        // residual variances first: this pins the observed-variable order
        for (i, y) in gs.observed.iter().enumerate() {
            let line = match in_group(MatrixKind::ResidualCov).find(|e| e.slot.row == i && e.slot.col == i) {
                Some(e) => format!("{y} ~~ {}", term(e, y)),
                None => format!("{y} ~~ 0*{y}"),
            };
            let _ = writeln!(out, "{line}");
        }
        for (j, l) in gs.latent.iter().enumerate() {
            let terms: Vec<String> = in_group(MatrixKind::Loading)
                .filter(|e| e.slot.col == j)
                .map(|e| term(e, &gs.observed[e.slot.row]))
                .collect();
            if terms.is_empty() {
                let _ = writeln!(out, "{l} =~ 0*{}", gs.observed[0]);
            } else {
                let _ = writeln!(out, "{l} =~ {}", terms.join(" + "));
            }
        }
        for e in in_group(MatrixKind::FactorCov).filter(|e| e.slot.row >= e.slot.col) {
            let (a, b) = (&gs.latent[e.slot.col], &gs.latent[e.slot.row]);
            let _ = writeln!(out, "{a} ~~ {}", term(e, b));
        }
        for e in in_group(MatrixKind::ResidualCov).filter(|e| e.slot.row > e.slot.col) {
            let (a, b) = (&gs.observed[e.slot.col], &gs.observed[e.slot.row]);
            let _ = writeln!(out, "{a} ~~ {}", term(e, b));
        }
    }
    out
}

fn rename_labels<T: Real>(spec: &ModelSpec<T>) -> HashMap<String, String> {
    let taken: HashSet<&str> = spec
        .entries()
        .iter()
        .map(|e| e.label.as_str())
        .filter(|l| is_identifier(l))
        .collect();
    let mut map = HashMap::new();
    let mut k = 0;
    for e in spec.entries().iter().filter(|e| e.is_free()) {
        if map.contains_key(&e.label) {
            continue;
        }
        let name = if is_identifier(&e.label) {
            e.label.clone()
        } else {
            loop {
                k += 1;
                let cand = format!("p{k}");
                if !taken.contains(cand.as_str()) {
                    break cand;
                }
            }
        };
        map.insert(e.label.clone(), name);
    }
    map
}
