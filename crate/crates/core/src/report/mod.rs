//! Deterministic text renderings of simulation and diagnostic results:
//! CSV tables, JSON summaries and small self-contained SVG charts.
//!
//! Numbers use Rust's shortest round-trip formatting, so identical inputs
//! always give byte-identical output.

mod svg;

use std::fmt::Write;

use crate::identification::RankScanRow;
use crate::simulation::{Moments, ShapiroSummary, SimConfig, SimRecord, SimSummary};

pub use svg::{figure2_svg, figure3_svg};

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

/// One row per replicate: experiment, n, delta, rep, converged, stop_reason,
/// admissible, one column per parameter, loss.
pub fn records_csv(config: &SimConfig, records: &[SimRecord]) -> String {
    let mut out = String::from("experiment,n,delta,rep,converged,stop_reason,admissible");
    for l in config.labels() {
        out.push(',');
        out.push_str(&l);
    }
    out.push_str(",loss\n");
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            config.experiment.as_str(),
            r.condition.n,
            num(r.condition.delta),
            r.replicate,
            r.converged,
            r.outcome.as_str(),
            r.admissible
        );
        for &x in &r.theta {
            out.push(',');
            out.push_str(&num(x));
        }
        let _ = writeln!(out, ",{}", num(r.loss));
    }
    out
}

/// One row per condition with the convergence and admissibility proportions.
pub fn summary_csv(summary: &SimSummary) -> String {
    let mut out = String::from("experiment,n,delta,nsim,prop_converged,se_converged,prop_admissible,se_admissible\n");
    for c in &summary.conditions {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            summary.experiment,
            c.condition.n,
            num(c.condition.delta),
            c.nsim,
            num(c.prop_converged),
            num(c.se_converged),
            num(c.prop_admissible),
            num(c.se_admissible)
        );
    }
    out
}

/// Parameter moments in long format: one row per condition, parameter and
/// subset (`all`, `converged`, `nonconverged`).
pub fn params_csv(summary: &SimSummary) -> String {
    let mut out = String::from("experiment,n,delta,param,subset,count,mean,sd\n");
    for c in &summary.conditions {
        for p in &c.params {
            let subsets: [(&str, &Moments); 3] =
                [("all", &p.all), ("converged", &p.converged), ("nonconverged", &p.nonconverged)];
            for (name, m) in subsets {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    summary.experiment,
                    c.condition.n,
                    num(c.condition.delta),
                    p.label,
                    name,
                    m.count,
                    num(m.mean),
                    num(m.sd)
                );
            }
        }
    }
    out
}

/// Full summary as pretty JSON (undefined moments become `null`).
pub fn summary_json(summary: &SimSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

/// ψ̂3 histogram bins for every sample size.
pub fn shapiro_histogram_csv(summaries: &[ShapiroSummary]) -> String {
    let mut out = String::from("n,bin_lower,bin_upper,count\n");
    for s in summaries {
        for &(lo, hi, c) in &s.histogram {
            let _ = writeln!(out, "{},{},{},{}", s.n, num(lo), num(hi), c);
        }
    }
    out
}

/// Per sample size: fraction of negative ψ̂3 and standard-error availability.
pub fn shapiro_summary_csv(summaries: &[ShapiroSummary]) -> String {
    let mut out = String::from("n,nsim,fraction_negative,se_fraction_negative,se_available\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.n,
            s.nsim,
            num(s.fraction_negative),
            num(s.fraction_negative_se),
            num(s.se_available)
        );
    }
    out
}

pub fn rank_scan_csv(rows: &[RankScanRow]) -> String {
    let mut out = String::from("delta,smallest_singular_value,rank,condition_number\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(r.delta),
            num(r.smallest_singular_value),
            r.rank,
            num(r.condition_number)
        );
    }
    out
}
