#[path = "support/closed_form.rs"]
mod closed_form;

use latent_rank::dsl::presets::{self, ResidualLabeling, SbMtmm};
use latent_rank::estimation::WeightMatrix;
use latent_rank::identification::{
    affected_params, analytic_jacobian, fisher_information, nullspace_pattern_check, numeric_jacobian, rank_report,
    rank_scan, RankTolerance,
};
use latent_rank::implied_sigma;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn positional() -> SbMtmm<f64> {
    SbMtmm::new(ResidualLabeling::Positional)
}

fn per_variable() -> SbMtmm<f64> {
    SbMtmm::new(ResidualLabeling::PerVariable)
}

#[test]
fn closed_form_columns_match_preset_order() {
    let sb = positional();
    assert_eq!(sb.spec.free_labels(), closed_form::COLUMNS.map(String::from).as_slice());
}

#[test]
fn analytic_jacobian_matches_closed_form() {
    let sb = positional();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let t: Vec<f64> = (0..24).map(|_| rng.random_range(-1.5..1.5)).collect();
        let theta = sb.spec.theta(DVector::from_vec(t.clone())).unwrap();
        let jac = analytic_jacobian(&sb.spec, &theta).unwrap();
        let expect = closed_form::closed_form_jacobian(&t);
        let err = (&jac.matrix - &expect).amax();
        assert!(err < 1e-10, "{err}");
        let s = implied_sigma(&sb.spec, &theta).unwrap();
        let m = closed_form::closed_form_moments(&t);
        for (a, b) in s.values.iter().zip(&m) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn shapiro_jacobian_entries() {
    let spec = presets::shapiro_squared::<f64>();
    let theta = presets::shapiro_squared_population(&spec);
    let jac = analytic_jacobian(&spec, &theta).unwrap();
    // row σ11, column l1: 2λ1; row σ33, column psi3: 2ψ3 = 0
    assert_eq!(jac.matrix[(0, 0)], 2.0);
    assert_eq!(jac.matrix[(5, 5)], 0.0);
    assert_eq!(jac.matrix.column(5).amax(), 0.0);
    assert_eq!(jac.rows[5].to_string(), "g1:y3,y3");
    let report = rank_report(jac, RankTolerance::Default);
    assert_eq!(report.rank, 5);
    let n = report.nullspace.column(0);
    assert_eq!(n.len(), 6);
    assert!((n[5] - 1.0).abs() < 1e-12);
    assert!(n.rows(0, 5).amax() < 1e-12);
}

#[test]
fn numeric_jacobian_converges_to_analytic() {
    let sb = per_variable();
    let theta = sb.population_theta(0.2);
    let a = analytic_jacobian(&sb.spec, &theta).unwrap();
    let n1 = numeric_jacobian(&sb.spec, &theta, 1e-5).unwrap();
    assert!((&a.matrix - &n1.matrix).amax() < 1e-8);

    // moments are cubic in θ, so halving h cuts the error by 4
    let coarse = numeric_jacobian(&sb.spec, &theta, 0.1).unwrap();
    let half = numeric_jacobian(&sb.spec, &theta, 0.05).unwrap();
    let e1 = (&a.matrix - &coarse.matrix).amax();
    let e2 = (&a.matrix - &half.matrix).amax();
    assert!(e2 <= e1 * 0.25 + 1e-12, "{e1} {e2}");
}

#[test]
fn rank_at_equal_point_and_off_it() {
    let sb = per_variable();
    for labeling in [ResidualLabeling::PerVariable, ResidualLabeling::Positional] {
        let sb = SbMtmm::<f64>::new(labeling);
        let r = rank_report(
            analytic_jacobian(&sb.spec, &sb.population_theta(0.0)).unwrap(),
            RankTolerance::Default,
        );
        assert_eq!(r.rank, 23);
        assert_eq!(r.deficiency(), 1);
        let delta = r.jacobian.matrix.clone() * r.nullspace.column(0);
        assert!(delta.amax() < 1e-8 * r.sigma_max());
    }
    let full = rank_report(
        analytic_jacobian(&sb.spec, &sb.population_theta(0.05)).unwrap(),
        RankTolerance::Default,
    );
    assert!(full.is_full_rank());
    assert!(full.sigma_min() > 0.01);
}

#[test]
fn single_perturbations_restore_rank() {
    let sb = per_variable();
    let base = sb.population_theta(0.0);
    // residual variances enter Σ linearly and leave Δ unchanged
    let labels: Vec<String> = sb
        .spec
        .free_labels()
        .iter()
        .filter(|l| l.starts_with('l') || l.starts_with("rho"))
        .cloned()
        .collect();
    assert_eq!(labels.len(), 12);
    for label in &labels {
        let mut t = base.clone();
        t.values[sb.spec.free_index(label).unwrap()] += 1e-3;
        let r = rank_report(analytic_jacobian(&sb.spec, &t).unwrap(), RankTolerance::Default);
        assert_eq!(r.rank, 24, "{label}");
    }
}

#[test]
fn affected_and_orthogonal_sets() {
    let sb = per_variable();
    let r = rank_report(
        analytic_jacobian(&sb.spec, &sb.population_theta(0.0)).unwrap(),
        RankTolerance::Default,
    );
    let set = affected_params(&r, 1e-8);
    assert_eq!(set.orthogonal, vec!["rho12", "rho13", "rho23"]);
    assert_eq!(set.affected.len(), 21);
    assert!(set.affected.iter().any(|l| l == "phi4"));
}

#[test]
fn nullspace_pattern_both_labelings() {
    for labeling in [ResidualLabeling::PerVariable, ResidualLabeling::Positional] {
        let sb = SbMtmm::<f64>::new(labeling);
        for (lam, rho) in [(1.0, 0.5), (0.8, 0.3)] {
            let theta = sb.theta_equal(lam, rho, 1.0, 1.0);
            let check = nullspace_pattern_check(&sb, &theta, 1e-8);
            assert!(check.applicable);
            assert!(check.passed, "{labeling:?} ({lam}, {rho}): {}", check.max_error);
            let entry = check.entries.iter().find(|e| e.label == "l11").unwrap();
            assert!((entry.found - 1.0 / (2.0 * lam * rho)).abs() < 1e-8);
        }
    }
}

#[test]
fn pattern_not_applicable_at_full_rank() {
    let sb = per_variable();
    let check = nullspace_pattern_check(&sb, &sb.population_theta(0.01), 1e-8);
    assert_eq!(check.deficiency, 0);
    assert!(!check.applicable);
    assert!(!check.passed);
}

#[test]
fn information_condition_grows_toward_deficiency() {
    let sb = per_variable();
    let mut last = 0.0;
    for delta in [0.3, 0.1, 0.05, 0.01, 0.001] {
        let theta = sb.population_theta(delta);
        let jac = analytic_jacobian(&sb.spec, &theta).unwrap();
        let sigmas: Vec<_> = latent_rank::build_matrices(&sb.spec, &theta)
            .unwrap()
            .iter()
            .map(|m| m.sigma())
            .collect();
        let v = WeightMatrix::ml(&sigmas).unwrap();
        let info = fisher_information(&jac, &v, &[0.5, 0.5], 1000, 1e12);
        assert!(info.condition_number > last, "{delta}");
        last = info.condition_number;
        assert!(!info.is_singular());
        assert!(info.standard_errors.iter().all(Option::is_some));
    }
    let theta = sb.population_theta(0.0);
    let jac = analytic_jacobian(&sb.spec, &theta).unwrap();
    let sigmas: Vec<_> = latent_rank::build_matrices(&sb.spec, &theta)
        .unwrap()
        .iter()
        .map(|m| m.sigma())
        .collect();
    let info = fisher_information(&jac, &WeightMatrix::ml(&sigmas).unwrap(), &[0.5, 0.5], 1000, 1e12);
    assert!(info.is_singular());
}

#[test]
fn shapiro_standard_error_unavailable() {
    let spec = presets::shapiro_squared::<f64>();
    let theta = presets::shapiro_squared_population(&spec);
    let jac = analytic_jacobian(&spec, &theta).unwrap();
    let sigma = latent_rank::build_matrices(&spec, &theta).unwrap()[0].sigma();
    let info = fisher_information(&jac, &WeightMatrix::ml(&[sigma]).unwrap(), &[1.0], 500, 1e12);
    assert!(info.is_singular());
    assert!(info.standard_errors[5].is_none());
}

#[test]
fn rank_scan_tracks_delta() {
    let sb = per_variable();
    let grid = [0.0, 0.01, 0.05, 0.3];
    let rows = rank_scan(&sb.spec, |d| sb.population_theta(d), &grid, RankTolerance::Default);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].rank, 23);
    assert!(rows[1..].iter().all(|r| r.rank == 24));
    // smallest singular value grows linearly near the deficient set
    assert!((rows[2].smallest_singular_value / rows[1].smallest_singular_value - 5.0).abs() < 0.5);
    assert!(rows[1].condition_number > rows[2].condition_number);
    assert!(rows[2].condition_number > rows[3].condition_number);
}

#[test]
fn absolute_tolerance_is_honoured() {
    let sb = per_variable();
    let jac = analytic_jacobian(&sb.spec, &sb.population_theta(0.01)).unwrap();
    let r = rank_report(jac, RankTolerance::Absolute(0.1));
    assert_eq!(r.rank, 23);
    assert_eq!(r.nullspace.ncols(), 1);
}

#[test]
fn underdetermined_jacobian_has_full_nullspace_basis() {
    // one group, two indicators, everything free: 3 moments, 4 parameters
    let text = "F =~ a*y1 + b*y2\nF ~~ 1*F\ny1 ~~ e1*y1\ny2 ~~ e2*y2\n";
    let spec = latent_rank::parse_model::<f64>(&latent_rank::ModelSource::new(text)).unwrap();
    let theta = spec.start_theta();
    let r = rank_report(analytic_jacobian(&spec, &theta).unwrap(), RankTolerance::Default);
    assert_eq!(r.singular_values.len(), 4);
    assert_eq!(r.rank, 3);
    assert_eq!(r.nullspace.ncols(), 1);
    let d = &r.jacobian.matrix * r.nullspace.column(0);
    assert!(d.amax() < 1e-12);
}
