use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use latent_rank::dsl::{parse_model_verbose, Severity};
use latent_rank::estimation::{fit_from, EstimationError, FitConfig, FitResult, WeightMatrix};
use latent_rank::identification::{
    affected_params, analytic_jacobian, fisher_information, nullspace_pattern_check, rank_report, rank_scan as scan_rows,
    InformationReport, RankTolerance,
};
use latent_rank::model::validate as check_spec;
use latent_rank::report;
use latent_rank::simulation::{run_experiment, shapiro_experiment, Experiment, SimConfig};
use latent_rank::{build_matrices, ModelSource, ModelSpec, SampleMoments, Theta};
use serde_json::{json, Value};

use crate::input::{self, Model};
use crate::{DiagnoseArgs, Failure, FitArgs, RankScanArgs, SimArgs, ValidateArgs};

const HISTOGRAM_BINS: usize = 30;

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(format!("{x}"))
    }
}

fn estimation_failure(e: EstimationError) -> Failure {
    match e {
        EstimationError::Model(m) => Failure::data(m.to_string()),
        EstimationError::Config(m) => Failure::usage(m),
        other => Failure::data(other.to_string()),
    }
}

/// Information at θ with the ML weight of the implied covariances; `None`
/// when some implied Σ is not positive definite.
fn information(
    spec: &ModelSpec<f64>,
    theta: &Theta<f64>,
    group_weights: &[f64],
    n: usize,
    threshold: f64,
) -> Option<InformationReport<f64>> {
    let jac = analytic_jacobian(spec, theta).ok()?;
    let sigmas: Vec<_> = build_matrices(spec, theta).ok()?.iter().map(|m| m.sigma()).collect();
    let v = WeightMatrix::ml(&sigmas).ok()?;
    Some(fisher_information(&jac, &v, group_weights, n, threshold))
}

fn standard_errors(info: &Option<InformationReport<f64>>, p: usize) -> Vec<Option<f64>> {
    match info {
        Some(i) => i.standard_errors.clone(),
        None => vec![None; p],
    }
}

pub fn fit(a: FitArgs) -> Result<u8, Failure> {
    let model = input::load_model(&a.model)?;
    let spec = &model.spec;
    let moments = match (&a.cov, &a.data) {
        (Some(p), _) => input::read_covariances(p, spec)?,
        (_, Some(p)) => input::read_data(p, spec)?,
        _ => return Err(Failure::usage("one of --cov or --data is required".into())),
    };
    let mut cfg = FitConfig::default().with_optimizer(input::parse_optimizer(&a.optimizer)?);
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    if let Some(m) = a.max_iter {
        cfg.max_iter = m;
    }
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let start = match &a.start {
        Some(p) => input::read_theta(p, spec)?,
        None => spec.start_theta(),
    };
    let res = fit_from(spec, &moments, &cfg, &start).map_err(estimation_failure)?;
    let info = information(spec, &res.theta_hat, &moments.group_weights(), moments.total_n(), cfg.singular_threshold);
    let ses = standard_errors(&info, spec.n_free());
    let report = fit_json(&a.model, &cfg, &res, &ses, &moments);
    let text = fit_text(&a.model, &res, &ses);
    if let Some(dir) = &a.out_dir {
        write_file(dir, "fit.json", &json_text(&report))?;
        write_file(dir, "fit.txt", &text)?;
    }
    if a.json {
        print!("{}", json_text(&report));
    } else {
        print!("{text}");
    }
    Ok(match (res.converged, res.admissible) {
        (true, true) => 0,
        (false, _) => 2,
        (true, false) => 3,
    })
}

fn fit_json(
    model: &str,
    cfg: &FitConfig,
    res: &FitResult<f64>,
    ses: &[Option<f64>],
    moments: &SampleMoments<f64>,
) -> Value {
    let params: Vec<Value> = res
        .theta_hat
        .pairs()
        .zip(ses)
        .map(|((label, x), se)| {
            json!({
                "label": label,
                "estimate": num(x),
                "se": se.map(num).unwrap_or_else(|| json!("UNAVAILABLE")),
            })
        })
        .collect();
    let theta: serde_json::Map<String, Value> =
        res.theta_hat.pairs().map(|(l, x)| (l.to_string(), num(x))).collect();
    json!({
        "model": model,
        "optimizer": cfg.optimizer.as_str(),
        "weight_policy": format!("{:?}", res.weight_policy).to_uppercase(),
        "group_sizes": moments.sizes,
        "converged": res.converged,
        "stop_reason": res.stop_reason.as_str(),
        "iterations": res.iterations,
        "loss": num(res.loss),
        "gradient_norm": num(res.gradient_norm),
        "information_condition": num(res.information_condition),
        "admissible": res.admissible,
        "offenses": res.admissibility.offenses.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
        "warnings": res.warnings,
        "parameters": params,
        "theta": theta,
    })
}

fn fit_text(model: &str, res: &FitResult<f64>, ses: &[Option<f64>]) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "model: {model}");
    let _ = writeln!(
        t,
        "stop: {} after {} iterations ({})",
        res.stop_reason,
        res.iterations,
        if res.converged { "converged" } else { "not converged" }
    );
    let _ = writeln!(t, "loss: {:.6e}  max|gradient|: {:.3e}", res.loss, res.gradient_norm);
    let _ = writeln!(t, "information condition number: {:.3e}", res.information_condition);
    for w in &res.warnings {
        let _ = writeln!(t, "warning: {w}");
    }
    let _ = writeln!(t, "\n{:<12} {:>14} {:>14}", "parameter", "estimate", "se");
    for ((label, x), se) in res.theta_hat.pairs().zip(ses) {
        let se = se.map(|s| format!("{s:.6}")).unwrap_or_else(|| "UNAVAILABLE".into());
        let _ = writeln!(t, "{label:<12} {x:>14.6} {se:>14}");
    }
    if res.admissible {
        let _ = writeln!(t, "\nadmissible: yes");
    } else {
        let _ = writeln!(t, "\nadmissible: no");
        for o in &res.admissibility.offenses {
            let _ = writeln!(t, "  {o}");
        }
    }
    t
}

fn diagnose_theta(model: &Model, a: &DiagnoseArgs) -> Result<Theta<f64>, Failure> {
    if let Some(p) = &a.theta {
        return input::read_theta(p, &model.spec);
    }
    Ok(model.population(a.delta).unwrap_or_else(|| model.spec.start_theta()))
}

pub fn diagnose(a: DiagnoseArgs) -> Result<u8, Failure> {
    let model = input::load_model(&a.model)?;
    let spec = &model.spec;
    let theta = diagnose_theta(&model, &a)?;
    let (weights, n) = match &a.cov {
        Some(p) => {
            let m = input::read_covariances(p, spec)?;
            (m.group_weights(), m.total_n())
        }
        None => (vec![1.0 / spec.n_groups() as f64; spec.n_groups()], a.n),
    };
    let jac = analytic_jacobian(spec, &theta).map_err(|e| Failure::data(e.to_string()))?;
    let report = rank_report(jac, RankTolerance::Default);
    let set = affected_params(&report, a.threshold);
    let info = information(spec, &theta, &weights, n, FitConfig::default().singular_threshold);
    let ses = standard_errors(&info, spec.n_free());
    let pattern = model.sb().map(|sb| nullspace_pattern_check(&sb, &theta, 1e-8));

    let labels = spec.free_labels();
    let nullspace: Vec<Value> = (0..report.nullspace.ncols())
        .map(|k| {
            let col: serde_json::Map<String, Value> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), num(report.nullspace[(i, k)])))
                .collect();
            Value::Object(col)
        })
        .collect();
    let theta_json: serde_json::Map<String, Value> = theta.pairs().map(|(l, x)| (l.to_string(), num(x))).collect();
    let json = json!({
        "model": a.model,
        "theta": theta_json,
        "n_params": report.n_params(),
        "n_moments": spec.n_moments(),
        "rank": report.rank,
        "deficiency": report.deficiency(),
        "tolerance": num(report.tolerance),
        "singular_values": report.singular_values.iter().map(|&s| num(s)).collect::<Vec<_>>(),
        "condition_number": num(report.condition_number()),
        "nullspace": nullspace,
        "affected": set.affected,
        "orthogonal": set.orthogonal,
        "components": set.components.iter().map(|(l, c)| json!({"label": l, "max_abs_component": num(*c)})).collect::<Vec<_>>(),
        "information": {
            "n": n,
            "condition_number": info.as_ref().map(|i| num(i.condition_number)).unwrap_or(Value::Null),
            "singular": info.as_ref().map(|i| i.is_singular()).unwrap_or(true),
            "standard_errors": labels.iter().zip(&ses).map(|(l, s)| json!({"label": l, "se": s.map(num).unwrap_or_else(|| json!("UNAVAILABLE"))})).collect::<Vec<_>>(),
        },
        "pattern_check": pattern.as_ref().map(|p| serde_json::to_value(p).expect("pattern serializes")).unwrap_or(Value::Null),
    });

    let mut t = String::new();
    let _ = writeln!(t, "model: {}", a.model);
    let _ = writeln!(
        t,
        "Jacobian: {} moments x {} parameters, rank {} (tolerance {:.3e})",
        spec.n_moments(),
        report.n_params(),
        report.rank,
        report.tolerance
    );
    let _ = writeln!(
        t,
        "singular values: max {:.6e}, min {:.6e}, condition number {:.3e}",
        report.sigma_max(),
        report.sigma_min(),
        report.condition_number()
    );
    if report.deficiency() == 0 {
        let _ = writeln!(t, "no deficiency detected");
    } else {
        let _ = writeln!(t, "rank deficiency {}: nullspace basis", report.deficiency());
        for k in 0..report.nullspace.ncols() {
            let parts: Vec<String> = labels
                .iter()
                .enumerate()
                .filter(|(i, _)| report.nullspace[(*i, k)].abs() >= a.threshold)
                .map(|(i, l)| format!("{l} {:+.6}", report.nullspace[(i, k)]))
                .collect();
            let _ = writeln!(t, "  direction {}: {}", k + 1, parts.join(", "));
        }
        let _ = writeln!(t, "affected by the deficiency: {}", set.affected.join(", "));
        if set.orthogonal.is_empty() {
            let _ = writeln!(t, "every parameter is affected by the deficiency");
        } else {
            let _ = writeln!(t, "unaffected by the deficiency: {}", set.orthogonal.join(", "));
        }
    }
    if let Some(p) = &pattern {
        if p.applicable {
            let _ = writeln!(
                t,
                "closed-form nullspace pattern at lambda {}, rho {}: {} (max error {:.2e})",
                p.lambda,
                p.rho,
                if p.passed { "matches" } else { "does not match" },
                p.max_error
            );
        }
    }
    match &info {
        Some(i) => {
            let _ = writeln!(t, "information condition number: {:.3e} (n = {n})", i.condition_number);
            let unavailable: Vec<&str> = labels
                .iter()
                .zip(&ses)
                .filter(|(_, s)| s.is_none())
                .map(|(l, _)| l.as_str())
                .collect();
            if unavailable.is_empty() {
                let _ = writeln!(t, "standard errors: available for all parameters");
            } else {
                let _ = writeln!(t, "standard errors UNAVAILABLE: {}", unavailable.join(", "));
            }
        }
        None => {
            let _ = writeln!(t, "information: implied covariance not positive definite; standard errors UNAVAILABLE");
        }
    }
    if let Some(dir) = &a.out_dir {
        write_file(dir, "diagnose.json", &json_text(&json))?;
        write_file(dir, "diagnose.txt", &t)?;
    }
    if a.json {
        print!("{}", json_text(&json));
    } else {
        print!("{t}");
    }
    Ok(0)
}

pub fn rank_scan(a: RankScanArgs) -> Result<u8, Failure> {
    let model = input::load_model(&a.model)?;
    let sb = model
        .sb()
        .ok_or_else(|| Failure::usage("rank-scan needs preset:sb-mtmm or preset:sb-mtmm-positional".into()))?;
    let grid = input::parse_deltas(&a.grid)?;
    if grid.is_empty() {
        return Err(Failure::usage("empty grid".into()));
    }
    let rows = scan_rows(&sb.spec, |d| sb.population_theta(d), &grid, RankTolerance::Default);
    let csv = report::rank_scan_csv(&rows);
    if let Some(dir) = &a.out_dir {
        write_file(dir, "rank_scan.csv", &csv)?;
    }
    print!("{csv}");
    Ok(0)
}

fn sim_config(a: &SimArgs, forced: Option<Experiment>) -> Result<(SimConfig, bool), Failure> {
    let file = match &a.config {
        Some(p) => input::read_config(p)?,
        None => input::ConfigFile::default(),
    };
    let experiment = match (forced, file.values.get("experiment")) {
        (Some(e), _) => e,
        (None, Some(s)) => input::parse_experiment(s)?,
        (None, None) => Experiment::SbMtmm,
    };
    let mut cfg = input::default_sim(experiment);
    let mut svg = a.svg;
    let parse_num = |k: &str, v: &str| Failure::usage(format!("config {k}: '{v}' is not valid"));
    for (k, v) in &file.values {
        match k.as_str() {
            "n_grid" => cfg.n_grid = input::parse_sizes(v)?,
            "delta_grid" => cfg.delta_grid = input::parse_deltas(v)?,
            "nsim" => cfg.nsim = v.parse().map_err(|_| parse_num(k, v))?,
            "seed" => cfg.seed = v.parse().map_err(|_| parse_num(k, v))?,
            "optimizer" => cfg.fit.optimizer = input::parse_optimizer(v)?,
            "tol" => cfg.fit.tol = v.parse().map_err(|_| parse_num(k, v))?,
            "max_iter" => cfg.fit.max_iter = v.parse().map_err(|_| parse_num(k, v))?,
            "svg" => svg |= v.parse::<bool>().map_err(|_| parse_num(k, v))?,
            _ => {}
        }
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.nsim {
        cfg.nsim = n;
    }
    if let Some(g) = &a.n {
        cfg.n_grid = input::parse_sizes(g)?;
    }
    if let Some(g) = &a.grid {
        cfg.delta_grid = input::parse_deltas(g)?;
    }
    if let Some(o) = &a.optimizer {
        cfg.fit.optimizer = input::parse_optimizer(o)?;
    }
    if let Some(t) = a.tol {
        cfg.fit.tol = t;
    }
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok((cfg, svg))
}

pub fn simulate(a: SimArgs, forced: Option<Experiment>) -> Result<u8, Failure> {
    let (cfg, svg) = sim_config(&a, forced)?;
    let dir = &a.out_dir;
    let sim_err = |e: latent_rank::simulation::SimError| Failure::usage(e.to_string());
    let summary = match cfg.experiment {
        Experiment::SbMtmm => {
            let (records, summary) = run_experiment(&cfg).map_err(sim_err)?;
            write_file(dir, "records.csv", &report::records_csv(&cfg, &records))?;
            if svg {
                write_file(dir, "figure3.svg", &report::figure3_svg(&summary))?;
            }
            summary
        }
        Experiment::Shapiro => {
            let (records, summary, shapiro) = shapiro_experiment(&cfg, HISTOGRAM_BINS).map_err(sim_err)?;
            write_file(dir, "records.csv", &report::records_csv(&cfg, &records))?;
            write_file(dir, "psi3_histogram.csv", &report::shapiro_histogram_csv(&shapiro))?;
            write_file(dir, "shapiro_summary.csv", &report::shapiro_summary_csv(&shapiro))?;
            if svg {
                write_file(dir, "figure2.svg", &report::figure2_svg(&shapiro))?;
            }
            for s in &shapiro {
                println!(
                    "n={}: {:.1}% of psi3 estimates negative (± {:.1}%), standard errors available in {:.1}% of fits",
                    s.n,
                    100.0 * s.fraction_negative,
                    100.0 * s.fraction_negative_se,
                    100.0 * s.se_available
                );
            }
            summary
        }
    };
    write_file(dir, "summary.csv", &report::summary_csv(&summary))?;
    write_file(dir, "summary.json", &report::summary_json(&summary))?;
    write_file(dir, "params.csv", &report::params_csv(&summary))?;
    print!("{}", report::summary_csv(&summary));
    Ok(0)
}

pub fn validate(a: ValidateArgs) -> Result<u8, Failure> {
    let (spec, warnings) = if a.model.starts_with("preset:") {
        (input::load_model(&a.model)?.spec, Vec::new())
    } else {
        let text = input::read(Path::new(&a.model))?;
        let out = parse_model_verbose::<f64>(&ModelSource::new(text));
        let shown: Vec<String> = out.diagnostics.iter().map(|d| format!("{}:{d}", a.model)).collect();
        match out.spec {
            Some(s) => (
                s,
                out.diagnostics
                    .iter()
                    .zip(shown)
                    .filter(|(d, _)| d.severity == Severity::Warning)
                    .map(|(_, s)| s)
                    .collect(),
            ),
            None => {
                return Err(Failure::usage(shown.join("\n")));
            }
        }
    };
    for w in &warnings {
        println!("{w}");
    }
    let violations = check_spec(&spec);
    for v in &violations {
        println!("{}: violation: {v}", a.model);
    }
    for (g, gs) in spec.groups().iter().enumerate() {
        println!(
            "group {}: observed {} | latent {}",
            g + 1,
            gs.observed.join(" "),
            gs.latent.join(" ")
        );
    }
    println!(
        "{} free parameters, {} moments, {} degrees of freedom",
        spec.n_free(),
        spec.n_moments(),
        spec.degrees_of_freedom()
    );
    println!("free parameters: {}", spec.free_labels().join(", "));
    Ok(if violations.is_empty() { 0 } else { 64 })
}
