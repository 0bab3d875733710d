//! Semantic pass: statements to parameter table.

use std::collections::{BTreeSet, HashMap};

use super::parser::{Modifier, Op, Statement, Term};
use super::{Diagnostic, Pos};
use crate::model::{validate, GroupSpec, MatrixKind, ModelSpec, ParamStatus, ParameterEntry, Slot};
use crate::scalar::Real;

const LOADING_START: f64 = 0.5;
const VARIANCE_START: f64 = 1.0;
const COVARIANCE_START: f64 = 0.0;

type Groups = BTreeSet<usize>;

#[derive(Debug, Clone)]
struct SlotDef {
    label: String,
    status: ParamStatus,
    value: f64,
    explicit_start: bool,
    pos: Option<Pos>,
}

struct Registry {
    defs: HashMap<Slot, SlotDef>,
    order: Vec<Slot>,
}

impl Registry {
    fn get(&self, s: &Slot) -> Option<&SlotDef> {
        self.defs.get(s)
    }

    fn insert(&mut self, s: Slot, d: SlotDef) {
        if self.defs.insert(s, d).is_none() {
            self.order.push(s);
        }
    }
}

fn scope(stmt: &Statement, n_groups: usize) -> Groups {
    match stmt.group {
        Some(g) => [g].into_iter().collect(),
        None => (0..n_groups).collect(),
    }
}

pub(super) fn build<T: Real>(
    stmts: &[Statement],
    n_groups: usize,
    observed_names: Option<&[Vec<String>]>,
) -> (Option<ModelSpec<T>>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let origin = Pos { line: 1, column: 1 };
    if let Some(obs) = observed_names {
        if obs.len() != n_groups {
            diags.push(Diagnostic::error(
                origin,
                format!("model has {n_groups} group(s) but {} observed-variable lists were supplied", obs.len()),
            ));
            return (None, diags);
        }
    }

    // Which groups each latent and each observed name belongs to.
    let mut latent_groups: HashMap<&str, Groups> = HashMap::new();
    let mut obs_groups: HashMap<&str, Groups> = HashMap::new();
    for s in stmts.iter().filter(|s| s.op == Op::Measured) {
        latent_groups.entry(&s.lhs).or_default().extend(scope(s, n_groups));
    }
    for s in stmts.iter().filter(|s| s.op == Op::Measured) {
        for t in &s.terms {
            if latent_groups.contains_key(t.var.as_str()) {
                diags.push(Diagnostic::error(
                    t.pos,
                    format!("latent variable `{}` used as an indicator (higher-order factors are not supported)", t.var),
                ));
                continue;
            }
            obs_groups.entry(&t.var).or_default().extend(scope(s, n_groups));
        }
    }
    let mut introduced: HashMap<&str, Groups> = HashMap::new();
    for s in stmts.iter().filter(|s| s.op == Op::Covaries) {
        for (name, _) in names_of(s) {
            if !latent_groups.contains_key(name) && !obs_groups.contains_key(name) {
                introduced.entry(name).or_default().extend(scope(s, n_groups));
            }
        }
    }
    for (k, v) in introduced {
        obs_groups.insert(k, v);
    }

    if let Some(obs) = observed_names {
        for s in stmts {
            for (name, pos) in names_of(s) {
                if latent_groups.contains_key(name) {
                    continue;
                }
                if !obs.iter().any(|g| g.iter().any(|n| n == name)) {
                    diags.push(Diagnostic::error(pos, format!("unknown variable `{name}`")));
                    continue;
                }
                for g in scope(s, n_groups) {
                    let in_model = obs_groups.get(name).is_some_and(|gs| gs.contains(&g));
                    if in_model && s.op == Op::Measured && !obs[g].iter().any(|n| n == name) {
                        diags.push(Diagnostic::error(
                            pos,
                            format!("variable `{name}` is not observed in group {}", g + 1),
                        ));
                    }
                }
            }
        }
    }
    if has_errors(&diags) {
        return (None, diags);
    }

    // Variable order: first mention among statements that apply to the group.
    let mut groups: Vec<GroupSpec> = (0..n_groups).map(|_| GroupSpec::new(Vec::new(), Vec::new())).collect();
    for s in stmts {
        let sc = scope(s, n_groups);
        for (name, _) in names_of(s) {
            let (member, latent) = match latent_groups.get(name) {
                Some(gs) => (gs, true),
                None => (&obs_groups[name], false),
            };
            for g in sc.intersection(member) {
                let list = if latent {
                    &mut groups[*g].latent
                } else {
                    &mut groups[*g].observed
                };
                if !list.iter().any(|n| n == name) {
                    list.push(name.to_string());
                }
            }
        }
    }
    for (g, gs) in groups.iter().enumerate() {
        if gs.observed.is_empty() {
            diags.push(Diagnostic::error(origin, format!("group {} has no observed variables", g + 1)));
        }
    }
    if has_errors(&diags) {
        return (None, diags);
    }

    let mut reg = Registry {
        defs: HashMap::new(),
        order: Vec::new(),
    };
    for s in stmts {
        let sc = scope(s, n_groups);
        for t in &s.terms {
            let Some(mods) = read_modifiers(t, &mut diags) else {
                continue;
            };
            let lhs_latent = latent_groups.contains_key(s.lhs.as_str());
            let var_latent = latent_groups.contains_key(t.var.as_str());
            let kind = match s.op {
                Op::Measured => MatrixKind::Loading,
                Op::Covaries if lhs_latent && var_latent => MatrixKind::FactorCov,
                Op::Covaries if !lhs_latent && !var_latent => MatrixKind::ResidualCov,
                Op::Covaries => {
                    diags.push(Diagnostic::error(
                        t.pos,
                        format!(
                            "cannot specify a covariance between latent and observed variables (`{}` ~~ `{}`)",
                            s.lhs, t.var
                        ),
                    ));
                    continue;
                }
            };
            let mut applied = false;
            for &g in &sc {
                let gs = &groups[g];
                let slot = match kind {
                    MatrixKind::Loading => match (gs.observed_index(&t.var), gs.latent_index(&s.lhs)) {
                        (Some(r), Some(c)) => Slot::new(g, kind, r, c),
                        _ => continue,
                    },
                    MatrixKind::FactorCov => match (gs.latent_index(&s.lhs), gs.latent_index(&t.var)) {
                        (Some(a), Some(b)) => Slot::new(g, kind, a.max(b), a.min(b)),
                        _ => continue,
                    },
                    MatrixKind::ResidualCov => match (gs.observed_index(&s.lhs), gs.observed_index(&t.var)) {
                        (Some(a), Some(b)) => Slot::new(g, kind, a.max(b), a.min(b)),
                        _ => continue,
                    },
                };
                applied = true;
                let op = if s.op == Op::Measured { "=~" } else { "~~" };
                let auto = match s.group {
                    Some(g) => format!("{}{op}{}.g{}", s.lhs, t.var, g + 1),
                    None => format!("{}{op}{}", s.lhs, t.var),
                };
                let default_start = match kind {
                    MatrixKind::Loading => LOADING_START,
                    _ if slot.row == slot.col => VARIANCE_START,
                    _ => COVARIANCE_START,
                };
                let def = SlotDef {
                    label: mods.label.clone().unwrap_or(auto),
                    status: if mods.fixed.is_some() {
                        ParamStatus::Fixed
                    } else {
                        ParamStatus::Free
                    },
                    value: mods.fixed.or(mods.start).unwrap_or(default_start),
                    explicit_start: mods.fixed.is_none() && mods.start.is_some(),
                    pos: Some(t.pos),
                };
                if let Some(prev) = reg.get(&slot) {
                    let same = prev.status == def.status && prev.value == def.value && prev.label == def.label;
                    let at = prev.pos.map(|p| format!(" (first given at {p})")).unwrap_or_default();
                    if same {
                        diags.push(Diagnostic::warning(t.pos, format!("duplicate specification of {slot}{at}")));
                    } else {
                        diags.push(Diagnostic::error(t.pos, format!("conflicting specification of {slot}{at}")));
                    }
                    continue;
                }
                reg.insert(slot, def);
            }
            if !applied {
                let msg = format!("no group contains both `{}` and `{}`", s.lhs, t.var);
                if s.group.is_some() {
                    diags.push(Diagnostic::error(t.pos, msg));
                } else {
                    diags.push(Diagnostic::warning(t.pos, format!("{msg}; term ignored")));
                }
            }
        }
    }

    // Residual variances not stated explicitly.
    for (g, gs) in groups.iter().enumerate() {
        for (i, name) in gs.observed.iter().enumerate() {
            let slot = Slot::new(g, MatrixKind::ResidualCov, i, i);
            if reg.get(&slot).is_none() {
                reg.insert(
                    slot,
                    SlotDef {
                        label: format!("{name}~~{name}"),
                        status: ParamStatus::Free,
                        value: VARIANCE_START,
                        explicit_start: false,
                        pos: None,
                    },
                );
            }
        }
    }

    reconcile_labels(&mut reg, &mut diags);
    if has_errors(&diags) {
        return (None, diags);
    }

    let mut entries = Vec::with_capacity(reg.order.len() * 2);
    for slot in &reg.order {
        let d = &reg.defs[slot];
        let make = |s: Slot| ParameterEntry {
            label: d.label.clone(),
            slot: s,
            status: d.status,
            value: T::lit(d.value),
        };
        entries.push(make(*slot));
        if slot.matrix.is_symmetric() && slot.row != slot.col {
            entries.push(make(slot.mirrored()));
        }
    }
    let spec = ModelSpec::new(groups, entries);
    for v in validate(&spec) {
        diags.push(Diagnostic::error(origin, format!("internal model error: {v}")));
    }
    if has_errors(&diags) {
        return (None, diags);
    }
    (Some(spec), diags)
}

fn has_errors(d: &[Diagnostic]) -> bool {
    d.iter().any(|d| d.severity == super::Severity::Error)
}

fn names_of(s: &Statement) -> impl Iterator<Item = (&str, Pos)> {
    std::iter::once((s.lhs.as_str(), s.lhs_pos)).chain(s.terms.iter().map(|t| (t.var.as_str(), t.pos)))
}

struct Mods {
    fixed: Option<f64>,
    label: Option<String>,
    start: Option<f64>,
}

fn read_modifiers(t: &Term, diags: &mut Vec<Diagnostic>) -> Option<Mods> {
    let mut m = Mods {
        fixed: None,
        label: None,
        start: None,
    };
    let mut ok = true;
    for (modifier, pos) in &t.modifiers {
        match modifier {
            Modifier::Fixed(v) => match m.fixed {
                Some(prev) if prev != *v => {
                    diags.push(Diagnostic::error(
                        *pos,
                        format!("`{}` is fixed twice with different values ({prev} and {v})", t.var),
                    ));
                    ok = false;
                }
                _ => m.fixed = Some(*v),
            },
            Modifier::Label(l) => match &m.label {
                Some(prev) if prev != l => {
                    diags.push(Diagnostic::error(*pos, format!("`{}` carries two labels (`{prev}`, `{l}`)", t.var)));
                    ok = false;
                }
                _ => m.label = Some(l.clone()),
            },
            Modifier::Start(v) => match m.start {
                Some(prev) if prev != *v => {
                    diags.push(Diagnostic::error(*pos, format!("`{}` has two start values", t.var)));
                    ok = false;
                }
                _ => m.start = Some(*v),
            },
        }
    }
    if m.fixed.is_some() && m.start.is_some() {
        diags.push(Diagnostic::warning(t.pos, format!("start value for fixed `{}` is ignored", t.var)));
    }
    ok.then_some(m)
}

/// Entries sharing a label must agree on status and value. Explicit start
/// values propagate to every slot carrying the label.
fn reconcile_labels(reg: &mut Registry, diags: &mut Vec<Diagnostic>) {
    let mut first: HashMap<String, Slot> = HashMap::new();
    let mut starts: HashMap<String, (f64, Option<Pos>)> = HashMap::new();
    for slot in &reg.order {
        let d = &reg.defs[slot];
        if d.explicit_start {
            match starts.get(&d.label) {
                Some((v, p)) if *v != d.value => {
                    let at = p.map(|p| format!(" (first given at {p})")).unwrap_or_default();
                    diags.push(Diagnostic::error(
                        d.pos.unwrap_or(Pos { line: 1, column: 1 }),
                        format!("label `{}` has conflicting start values{at}", d.label),
                    ));
                }
                Some(_) => {}
                None => {
                    starts.insert(d.label.clone(), (d.value, d.pos));
                }
            }
        }
    }
    let order = reg.order.clone();
    for slot in &order {
        let d = reg.defs[slot].clone();
        match first.get(&d.label) {
            None => {
                first.insert(d.label.clone(), *slot);
            }
            Some(f) => {
                let head = reg.defs[f].clone();
                let pos = d.pos.unwrap_or(Pos { line: 1, column: 1 });
                if head.status != d.status {
                    diags.push(Diagnostic::error(pos, format!("label `{}` is used for both free and fixed parameters", d.label)));
                } else if d.status == ParamStatus::Fixed && head.value != d.value {
                    diags.push(Diagnostic::error(pos, format!("label `{}` is fixed to different values", d.label)));
                }
            }
        }
    }
    let mut value_of: HashMap<String, f64> = HashMap::new();
    for slot in &order {
        let d = &reg.defs[slot];
        let v = starts.get(&d.label).map(|(v, _)| *v).unwrap_or(d.value);
        value_of.entry(d.label.clone()).or_insert(v);
    }
    for slot in &order {
        let def = reg.defs.get_mut(slot).expect("slot registered");
        if def.status == ParamStatus::Free {
            def.value = value_of[&def.label];
        }
    }
}
