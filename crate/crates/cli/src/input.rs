//! Readers for the plain-text inputs: models, covariance blocks, raw data,
//! θ files and experiment configs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use latent_rank::dsl::presets::{self, ResidualLabeling, SbMtmm};
use latent_rank::estimation::{FitConfig, Optimizer};
use latent_rank::simulation::{sample_moments, Experiment, SimConfig};
use latent_rank::{parse_model, ModelSource, ModelSpec, SampleMoments, Theta};
use nalgebra::DMatrix;

use crate::Failure;

pub const PRESETS: [&str; 4] = ["sb-mtmm", "sb-mtmm-positional", "shapiro", "shapiro-direct"];

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

/// A parsed model plus the preset it came from, if any.
pub struct Model {
    pub spec: ModelSpec<f64>,
    pub preset: Option<&'static str>,
}

impl Model {
    /// Population θ of a preset (`delta` only matters for the split-ballot model).
    pub fn population(&self, delta: f64) -> Option<Theta<f64>> {
        match self.preset? {
            "sb-mtmm" | "sb-mtmm-positional" => Some(self.sb()?.population_theta(delta)),
            "shapiro" => Some(presets::shapiro_squared_population(&self.spec)),
            "shapiro-direct" => Some(presets::shapiro_direct_population(&self.spec)),
            _ => None,
        }
    }

    pub fn sb(&self) -> Option<SbMtmm<f64>> {
        match self.preset? {
            "sb-mtmm" => Some(SbMtmm::new(ResidualLabeling::PerVariable)),
            "sb-mtmm-positional" => Some(SbMtmm::new(ResidualLabeling::Positional)),
            _ => None,
        }
    }
}

pub fn load_model(arg: &str) -> Result<Model, Failure> {
    if let Some(name) = arg.strip_prefix("preset:") {
        let preset = PRESETS
            .iter()
            .copied()
            .find(|p| *p == name)
            .ok_or_else(|| Failure::usage(format!("unknown preset '{name}' (known: {})", PRESETS.join(", "))))?;
        let spec = match preset {
            "sb-mtmm" => SbMtmm::new(ResidualLabeling::PerVariable).spec,
            "sb-mtmm-positional" => SbMtmm::new(ResidualLabeling::Positional).spec,
            "shapiro" => presets::shapiro_squared(),
            _ => presets::shapiro_direct(),
        };
        return Ok(Model { spec, preset: Some(preset) });
    }
    let text = read(Path::new(arg))?;
    let spec = parse_model(&ModelSource::new(text)).map_err(|e| {
        let mut msg = format!("{arg}: model has errors");
        for d in &e.diagnostics {
            msg.push_str(&format!("\n  {d}"));
        }
        Failure::usage(msg)
    })?;
    Ok(Model { spec, preset: None })
}

fn numbers(line: &str, lineno: usize, what: &str) -> Result<Vec<f64>, Failure> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Failure::data(format!("{what} line {lineno}: '{t}' is not a number")))
        })
        .collect()
}

/// Covariance blocks: a header of variable names, the matrix rows, then
/// `n=<int>`; blocks separated by blank lines. Each block is reordered to
/// the matching group's variable order.
pub fn read_covariances(path: &Path, spec: &ModelSpec<f64>) -> Result<SampleMoments<f64>, Failure> {
    let text = read(path)?;
    let mut blocks: Vec<Vec<(usize, &str)>> = vec![Vec::new()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if !blocks.last().unwrap().is_empty() {
                blocks.push(Vec::new());
            }
            continue;
        }
        blocks.last_mut().unwrap().push((i + 1, line));
    }
    blocks.retain(|b| !b.is_empty());
    if blocks.len() != spec.n_groups() {
        return Err(Failure::data(format!(
            "{}: {} covariance block(s) for a {}-group model",
            path.display(),
            blocks.len(),
            spec.n_groups()
        )));
    }
    let mut covs = Vec::new();
    let mut sizes = Vec::new();
    for (g, block) in blocks.iter().enumerate() {
        let names: Vec<&str> = block[0].1.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        let q = names.len();
        if block.len() != q + 2 {
            return Err(Failure::data(format!(
                "block {} (line {}): expected {q} matrix rows and an n= line",
                g + 1,
                block[0].0
            )));
        }
        let mut m = DMatrix::zeros(q, q);
        // full rows, or the lower triangle (decided by the first row)
        let lower = q > 1 && numbers(block[1].1, block[1].0, "covariance")?.len() == 1;
        for (r, &(lineno, line)) in block[1..=q].iter().enumerate() {
            let row = numbers(line, lineno, "covariance")?;
            if !lower && row.len() == q {
                for (c, v) in row.into_iter().enumerate() {
                    m[(r, c)] = v;
                }
            } else if row.len() == r + 1 {
                for (c, v) in row.into_iter().enumerate() {
                    m[(r, c)] = v;
                    m[(c, r)] = v;
                }
            } else {
                return Err(Failure::data(format!("covariance line {lineno}: expected {q} values")));
            }
        }
        let (lineno, nline) = block[q + 1];
        let n = nline
            .strip_prefix("n=")
            .or_else(|| nline.strip_prefix("n ="))
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| Failure::data(format!("line {lineno}: expected n=<int>")))?;
        let observed = &spec.groups()[g].observed;
        let perm: Vec<usize> = observed
            .iter()
            .map(|v| {
                names.iter().position(|n| n == v).ok_or_else(|| {
                    Failure::data(format!("block {}: variable '{v}' of group {} is missing", g + 1, g + 1))
                })
            })
            .collect::<Result<_, _>>()?;
        if q != observed.len() {
            return Err(Failure::data(format!(
                "block {}: {q} variables, group {} has {}",
                g + 1,
                g + 1,
                observed.len()
            )));
        }
        covs.push(DMatrix::from_fn(q, q, |i, j| m[(perm[i], perm[j])]));
        sizes.push(n);
    }
    let moments = SampleMoments::new(covs, sizes).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    moments.check_against(spec).map_err(|e| Failure::data(e.to_string()))?;
    Ok(moments)
}

/// Raw CSV data with a header; an optional `group` column (1-based) splits
/// the rows. Covariances use denominator n.
pub fn read_data(path: &Path, spec: &ModelSpec<f64>) -> Result<SampleMoments<f64>, Failure> {
    let text = read(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Failure::data(format!("{}: empty data file", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let group_col = names.iter().position(|n| *n == "group");
    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); spec.n_groups()];
    for (i, line) in lines {
        let vals = numbers(line, i + 1, "data")?;
        if vals.len() != names.len() {
            return Err(Failure::data(format!("data line {}: expected {} fields", i + 1, names.len())));
        }
        let g = match group_col {
            Some(c) => {
                let g = vals[c] as usize;
                if g < 1 || g > spec.n_groups() || vals[c].fract() != 0.0 {
                    return Err(Failure::data(format!("data line {}: bad group {}", i + 1, vals[c])));
                }
                g - 1
            }
            None if spec.n_groups() == 1 => 0,
            None => return Err(Failure::data("multi-group model needs a 'group' column".into())),
        };
        rows[g].push(vals);
    }
    let mut covs = Vec::new();
    let mut sizes = Vec::new();
    for (g, gs) in spec.groups().iter().enumerate() {
        let cols: Vec<usize> = gs
            .observed
            .iter()
            .map(|v| {
                names
                    .iter()
                    .position(|n| n == v)
                    .ok_or_else(|| Failure::data(format!("data has no column '{v}'")))
            })
            .collect::<Result<_, _>>()?;
        let r = &rows[g];
        let x = DMatrix::from_fn(r.len(), cols.len(), |i, j| r[i][cols[j]]);
        let m = sample_moments(&x);
        covs.extend(m.covariances);
        sizes.push(r.len());
    }
    let moments = SampleMoments::new(covs, sizes).map_err(|e| Failure::data(e.to_string()))?;
    moments.check_against(spec).map_err(|e| Failure::data(e.to_string()))?;
    Ok(moments)
}

/// `label = value` lines, or a fit report JSON with a `theta` object.
pub fn read_theta(path: &Path, spec: &ModelSpec<f64>) -> Result<Theta<f64>, Failure> {
    let text = read(path)?;
    let mut pairs: Vec<(String, f64)> = Vec::new();
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let obj = v
            .get("theta")
            .and_then(|t| t.as_object())
            .ok_or_else(|| Failure::data(format!("{}: no 'theta' object", path.display())))?;
        for (k, val) in obj {
            let x = val.as_f64().ok_or_else(|| Failure::data(format!("theta '{k}' is not a number")))?;
            pairs.push((k.clone(), x));
        }
    } else {
        for (k, v) in key_values(&text, path)? {
            let x = v
                .parse::<f64>()
                .map_err(|_| Failure::data(format!("theta '{k}': '{v}' is not a number")))?;
            pairs.push((k, x));
        }
    }
    let mut theta = spec.start_theta();
    for (k, x) in pairs {
        let i = spec
            .free_index(&k)
            .ok_or_else(|| Failure::data(format!("'{k}' is not a free parameter of the model")))?;
        theta.values[i] = x;
    }
    Ok(theta)
}

fn key_values(text: &str, path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_optimizer(s: &str) -> Result<Optimizer, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "gd" | "gradient_descent" => Ok(Optimizer::GradientDescent),
        "fisher" | "fisher_scoring" => Ok(Optimizer::FisherScoring),
        "newton" | "newton_raphson" => Ok(Optimizer::NewtonRaphson),
        _ => Err(Failure::usage(format!("unknown optimizer '{s}' (gd, fisher, newton)"))),
    }
}

pub fn parse_deltas(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Failure::usage(format!("delta grid: '{t}' is not a number"))))
        .collect()
}

/// Sample sizes; scientific notation such as `1e5` is accepted.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<f64>() {
            Ok(x) if x >= 1.0 && x.fract() == 0.0 && x < 1e12 => Ok(x as usize),
            _ => Err(Failure::usage(format!("n grid: '{t}' is not a positive integer"))),
        })
        .collect()
}

/// Defaults for an experiment: the full grids (75 becomes 76, since the
/// split-ballot design needs even n), nsim 200, seed 3452.
pub fn default_sim(experiment: Experiment) -> SimConfig {
    match experiment {
        Experiment::SbMtmm => SimConfig {
            experiment,
            n_grid: vec![50, 76, 100, 500, 1_000, 10_000, 100_000],
            delta_grid: vec![0.0, 0.01, 0.05, 0.1, 0.2, 0.3],
            nsim: 200,
            seed: 3452,
            fit: FitConfig::default(),
        },
        Experiment::Shapiro => SimConfig {
            experiment,
            n_grid: vec![100_000],
            delta_grid: Vec::new(),
            nsim: 200,
            seed: 3452,
            fit: FitConfig::default(),
        },
    }
}

/// Settings read from a config file.
#[derive(Default)]
pub struct ConfigFile {
    pub values: BTreeMap<String, String>,
}

pub fn read_config(path: &Path) -> Result<ConfigFile, Failure> {
    let text = read(path)?;
    let mut values = BTreeMap::new();
    const KEYS: [&str; 9] = ["experiment", "n_grid", "delta_grid", "nsim", "seed", "optimizer", "tol", "max_iter", "svg"];
    for (k, v) in key_values(&text, path)? {
        if !KEYS.contains(&k.as_str()) {
            return Err(Failure::usage(format!("{}: unknown key '{k}'", path.display())));
        }
        values.insert(k, v);
    }
    Ok(ConfigFile { values })
}

pub fn parse_experiment(s: &str) -> Result<Experiment, Failure> {
    match s.to_ascii_uppercase().as_str() {
        "SBMTMM" | "SB-MTMM" => Ok(Experiment::SbMtmm),
        "SHAPIRO" => Ok(Experiment::Shapiro),
        _ => Err(Failure::usage(format!("unknown experiment '{s}' (SBMTMM, SHAPIRO)"))),
    }
}
