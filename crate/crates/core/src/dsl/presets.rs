//! Built-in models: the three-indicator Shapiro model and the CTUM
//! reduced-group split-ballot MTMM model.

use std::fmt::Write;

use super::{parse_model, ModelSource};
use crate::model::{MatrixKind, ModelSpec, Theta};
use crate::scalar::Real;

/// Shapiro population values: loadings and residual standard deviations.
pub const SHAPIRO_LOADINGS: [f64; 3] = [1.0, 0.4, 0.7];
pub const SHAPIRO_RESIDUAL_SD: [f64; 3] = [1.0, 0.3, 0.0];

/// Loadings, plus residual *standard deviations* entering as loadings on
/// unit-variance error factors so that `σ_jj' = λ_jλ_j' + δ_jj' ψ_j²`.
pub const SHAPIRO_SQUARED_TEXT: &str = "\
F =~ l1*y1 + l2*y2 + l3*y3
E1 =~ psi1*y1
E2 =~ psi2*y2
E3 =~ psi3*y3
F ~~ 1*F
E1 ~~ 1*E1
E2 ~~ 1*E2
E3 ~~ 1*E3
y1 ~~ 0*y1
y2 ~~ 0*y2
y3 ~~ 0*y3
";

/// Loadings plus residual variances as free reals (negative estimates possible).
pub const SHAPIRO_DIRECT_TEXT: &str = "\
F =~ l1*y1 + l2*y2 + l3*y3
F ~~ 1*F
y1 ~~ psi1*y1
y2 ~~ psi2*y2
y3 ~~ psi3*y3
";

pub fn shapiro_squared<T: Real>() -> ModelSpec<T> {
    parse_model(&ModelSource::new(SHAPIRO_SQUARED_TEXT)).expect("built-in model parses")
}

pub fn shapiro_direct<T: Real>() -> ModelSpec<T> {
    parse_model(&ModelSource::new(SHAPIRO_DIRECT_TEXT)).expect("built-in model parses")
}

/// Population θ of the Shapiro model in the squared parameterization.
pub fn shapiro_squared_population<T: Real>(spec: &ModelSpec<T>) -> Theta<T> {
    let [l1, l2, l3] = SHAPIRO_LOADINGS;
    let [s1, s2, s3] = SHAPIRO_RESIDUAL_SD;
    spec.theta_from_pairs(&[
        ("l1", T::lit(l1)),
        ("l2", T::lit(l2)),
        ("l3", T::lit(l3)),
        ("psi1", T::lit(s1)),
        ("psi2", T::lit(s2)),
        ("psi3", T::lit(s3)),
    ])
    .expect("shapiro labels")
}

/// Population θ of the Shapiro model in the direct-variance parameterization.
pub fn shapiro_direct_population<T: Real>(spec: &ModelSpec<T>) -> Theta<T> {
    let [l1, l2, l3] = SHAPIRO_LOADINGS;
    let [s1, s2, s3] = SHAPIRO_RESIDUAL_SD;
    spec.theta_from_pairs(&[
        ("l1", T::lit(l1)),
        ("l2", T::lit(l2)),
        ("l3", T::lit(l3)),
        ("psi1", T::lit(s1 * s1)),
        ("psi2", T::lit(s2 * s2)),
        ("psi3", T::lit(s3 * s3)),
    ])
    .expect("shapiro labels")
}

/// How the group-2 residual variances of the split-ballot model are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualLabeling {
    /// `Ψ_2 = diag(ψ1, ψ7, ψ3, ψ8, ψ5, ψ9)`: every observed variable has one
    /// residual variance, shared between the groups that observe it.
    #[default]
    PerVariable,
    /// `Ψ_2 = diag(ψ1, ψ2, ψ3, ψ7, ψ8, ψ9)`: the labeling used by the
    /// closed-form Jacobian, with group-2 residuals labeled by position.
    Positional,
}

/// θ layout of the split-ballot preset.
pub const SB_MTMM_ORDER: [&str; 24] = [
    "l11", "l21", "l31", "l12", "l22", "l32", "l13", "l23", "l33", "psi1", "psi2", "psi3", "psi4",
    "psi5", "psi6", "psi7", "psi8", "psi9", "rho12", "rho13", "rho23", "phi4", "phi5", "phi6",
];

/// Observed variables per group, `y_tm` = trait t measured with method m.
pub const SB_MTMM_GROUP1: [&str; 6] = ["y11", "y12", "y21", "y22", "y31", "y32"];
pub const SB_MTMM_GROUP2: [&str; 6] = ["y11", "y13", "y21", "y23", "y31", "y33"];

/// Model text for the split-ballot CTUM model. Trait variances are fixed
/// to 1, method loadings to 1, method factors are uncorrelated with each
/// other and with the traits, and method variances are free.
pub fn sb_mtmm_text(labeling: ResidualLabeling, rho_start: Option<[f64; 3]>) -> String {
    let mut t = String::new();
    let rho = |k: usize, name: &str| match rho_start {
        Some(r) => format!("{name}*start({})*", r[k]),
        None => format!("{name}*"),
    };
    t.push_str("# correlated traits, uncorrelated methods; methods 1+2 in group 1, 1+3 in group 2\n");
    let _ = writeln!(t, "T1 ~~ 1*T1 + {}T2 + {}T3", rho(0, "rho12"), rho(1, "rho13"));
    let _ = writeln!(t, "T2 ~~ 1*T2 + {}T3", rho(2, "rho23"));
    t.push_str("T3 ~~ 1*T3\nM1 ~~ phi4*M1\n");
    let psi2: [&str; 6] = match labeling {
        ResidualLabeling::PerVariable => ["psi1", "psi7", "psi3", "psi8", "psi5", "psi9"],
        ResidualLabeling::Positional => ["psi1", "psi2", "psi3", "psi7", "psi8", "psi9"],
    };
    let psi1 = ["psi1", "psi2", "psi3", "psi4", "psi5", "psi6"];
    for (g, m, psi) in [(1, 2, psi1), (2, 3, psi2)] {
        let _ = writeln!(t, "\ngroup: {g}");
        for tr in 1..=3 {
            let _ = writeln!(t, "T{tr} =~ l{tr}1*y{tr}1 + l{tr}{m}*y{tr}{m}");
        }
        let _ = writeln!(t, "M1 =~ 1*y11 + 1*y21 + 1*y31");
        let _ = writeln!(t, "M{m} =~ 1*y1{m} + 1*y2{m} + 1*y3{m}");
        let _ = writeln!(t, "M{m} ~~ phi{}*M{m}", m + 3);
        let vars = if g == 1 { SB_MTMM_GROUP1 } else { SB_MTMM_GROUP2 };
        for (y, p) in vars.iter().zip(psi) {
            let _ = writeln!(t, "{y} ~~ {p}*{y}");
        }
    }
    t
}

/// What a free parameter of the split-ballot model is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbRole {
    /// Trait loading of trait `t` measured by method `m` (1-based).
    Loading { t: usize, m: usize },
    /// Residual variance; `method` is the method of the variables it covers.
    Residual { method: usize },
    Correlation,
    /// Variance of method factor `m`.
    MethodVariance { m: usize },
}

/// The split-ballot CTUM preset with parameter-role metadata.
#[derive(Debug, Clone)]
pub struct SbMtmm<T: Real> {
    pub spec: ModelSpec<T>,
    pub labeling: ResidualLabeling,
    roles: Vec<SbRole>,
}

impl<T: Real> SbMtmm<T> {
    /// Preset with DSL default start values.
    pub fn new(labeling: ResidualLabeling) -> Self {
        Self::build(labeling, None)
    }

    /// Preset whose correlation start values are the population values at
    /// distance `delta`: `(0.5 - δ, 0.5, 0.5 + δ)`.
    pub fn with_rho_start(labeling: ResidualLabeling, delta: f64) -> Self {
        Self::build(labeling, Some([0.5 - delta, 0.5, 0.5 + delta]))
    }

    fn build(labeling: ResidualLabeling, rho: Option<[f64; 3]>) -> Self {
        let text = sb_mtmm_text(labeling, rho);
        let spec: ModelSpec<T> = parse_model(&ModelSource::new(text))
            .expect("built-in model parses")
            .with_free_order(&SB_MTMM_ORDER)
            .expect("preset labels");
        let roles = spec
            .free_labels()
            .iter()
            .map(|l| role_of(&spec, l))
            .collect();
        SbMtmm { spec, labeling, roles }
    }

    pub fn roles(&self) -> &[SbRole] {
        &self.roles
    }

    pub fn role(&self, label: &str) -> Option<SbRole> {
        self.spec.free_index(label).map(|i| self.roles[i])
    }

    /// θ with all trait loadings `lambda`, all correlations `rho`, method
    /// variances `phi` and residual variances `psi`.
    pub fn theta_equal(&self, lambda: T, rho: T, phi: T, psi: T) -> Theta<T> {
        self.theta_with(|role| match role {
            SbRole::Loading { .. } => lambda,
            SbRole::Residual { .. } => psi,
            SbRole::Correlation => rho,
            SbRole::MethodVariance { .. } => phi,
        }, [rho, rho, rho])
    }

    /// Population θ of the generating model at distance `delta`: unit
    /// loadings, variances and method variances, correlations
    /// `(ρ12, ρ13, ρ23) = (0.5 - δ, 0.5, 0.5 + δ)`.
    pub fn population_theta(&self, delta: T) -> Theta<T> {
        let half = T::lit(0.5);
        self.theta_with(|_| T::one(), [half - delta, half, half + delta])
    }

    fn theta_with(&self, f: impl Fn(SbRole) -> T, rho: [T; 3]) -> Theta<T> {
        let mut theta = self.spec.start_theta();
        for (k, (label, role)) in self.spec.free_labels().iter().zip(&self.roles).enumerate() {
            theta.values[k] = match (role, label.as_str()) {
                (SbRole::Correlation, "rho12") => rho[0],
                (SbRole::Correlation, "rho13") => rho[1],
                (SbRole::Correlation, _) => rho[2],
                _ => f(*role),
            };
        }
        theta
    }
}

fn role_of<T: Real>(spec: &ModelSpec<T>, label: &str) -> SbRole {
    let digits = |s: &str| -> Vec<usize> { s.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect() };
    if let Some(rest) = label.strip_prefix('l') {
        let d = digits(rest);
        return SbRole::Loading { t: d[0], m: d[1] };
    }
    if label.starts_with("rho") {
        return SbRole::Correlation;
    }
    if let Some(rest) = label.strip_prefix("phi") {
        return SbRole::MethodVariance { m: digits(rest)[0] - 3 };
    }
    // residual: method of the variables whose variance carries this label
    let e = spec
        .entries()
        .iter()
        .find(|e| e.label == label && e.slot.matrix == MatrixKind::ResidualCov)
        .expect("residual label present");
    let name = &spec.groups()[e.slot.group].observed[e.slot.row];
    SbRole::Residual {
        method: digits(name)[1],
    }
}
