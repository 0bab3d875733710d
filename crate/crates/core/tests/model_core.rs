use latent_rank::dsl::presets::{self, ResidualLabeling, SbMtmm};
use latent_rank::model::vech::{duplication_matrix, vec, vech};
use latent_rank::model::{validate, ViolationKind};
use latent_rank::{
    build_matrices, implied_sigma, GroupSpec, MatrixKind, ModelError, ModelSpec, ParameterEntry, Slot,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn approx(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn shapiro_loading_column() {
    let spec = presets::shapiro_squared::<f64>();
    let theta = presets::shapiro_squared_population(&spec);
    let m = build_matrices(&spec, &theta).unwrap();
    approx(m[0].loadings.column(0).as_slice(), &[1.0, 0.4, 0.7], 0.0);
}

#[test]
fn shapiro_implied_moments() {
    // sigma_jj' = l_j l_j' + [j = j'] psi_j^2 evaluated by hand
    let spec = presets::shapiro_squared::<f64>();
    let theta = presets::shapiro_squared_population(&spec);
    let s = implied_sigma(&spec, &theta).unwrap();
    approx(s.values.as_slice(), &[2.0, 0.4, 0.7, 0.25, 0.28, 0.49], 1e-15);
    let direct = presets::shapiro_direct::<f64>();
    let s2 = implied_sigma(&direct, &presets::shapiro_direct_population(&direct)).unwrap();
    approx(s2.values.as_slice(), s.values.as_slice(), 1e-15);
}

#[test]
fn all_fixed_spec_reproduces_pattern() {
    let groups = vec![GroupSpec::new(vec!["a".into(), "b".into()], vec!["F".into()])];
    let entries = vec![
        ParameterEntry::fixed("f", Slot::new(0, MatrixKind::Loading, 0, 0), 0.3),
        ParameterEntry::fixed("v", Slot::new(0, MatrixKind::FactorCov, 0, 0), 2.0),
        ParameterEntry::fixed("e", Slot::new(0, MatrixKind::ResidualCov, 1, 1), 0.5),
    ];
    let spec = ModelSpec::new(groups, entries);
    assert_eq!(spec.n_free(), 0);
    let theta = spec.theta(DVector::zeros(0)).unwrap();
    let m = build_matrices(&spec, &theta).unwrap();
    assert_eq!(m[0].loadings, DMatrix::from_column_slice(2, 1, &[0.3, 0.0]));
    assert_eq!(m[0].factor_cov[(0, 0)], 2.0);
    assert_eq!(m[0].residual_cov, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.5]));
}

#[test]
fn theta_length_is_checked() {
    let spec = presets::shapiro_direct::<f64>();
    let err = spec.theta(DVector::zeros(3)).unwrap_err();
    assert_eq!(err, ModelError::ThetaLength { expected: 6, got: 3 });
}

#[test]
fn shared_loading_fills_both_groups() {
    let sb = SbMtmm::<f64>::new(ResidualLabeling::PerVariable);
    let mut theta = sb.population_theta(0.2);
    let k = sb.spec.free_index("l11").unwrap();
    theta.values[k] = 0.77;
    let m = build_matrices(&sb.spec, &theta).unwrap();
    assert_eq!(m[0].loadings[(0, 0)], 0.77);
    assert_eq!(m[1].loadings[(0, 0)], 0.77);
}

#[test]
fn sb_mtmm_population_moments_at_delta_zero() {
    let sb = SbMtmm::<f64>::new(ResidualLabeling::PerVariable);
    let m = build_matrices(&sb.spec, &sb.population_theta(0.0)).unwrap();
    let s = m[0].sigma();
    // y11, y12, y21, y22, ...
    assert!((s[(0, 0)] - 3.0).abs() < 1e-15);
    assert!((s[(2, 0)] - 1.5).abs() < 1e-15);
    assert!((s[(3, 0)] - 0.5).abs() < 1e-15);
}

#[test]
fn zero_loadings_give_identity() {
    let groups = vec![GroupSpec::new(vec!["a".into(), "b".into()], vec!["F".into()])];
    let entries = vec![
        ParameterEntry::free("l1", Slot::new(0, MatrixKind::Loading, 0, 0), 0.0),
        ParameterEntry::free("l2", Slot::new(0, MatrixKind::Loading, 1, 0), 0.0),
        ParameterEntry::fixed("v", Slot::new(0, MatrixKind::FactorCov, 0, 0), 3.7),
        ParameterEntry::fixed("e1", Slot::new(0, MatrixKind::ResidualCov, 0, 0), 1.0),
        ParameterEntry::fixed("e2", Slot::new(0, MatrixKind::ResidualCov, 1, 1), 1.0),
    ];
    let spec = ModelSpec::new(groups, entries);
    let s = implied_sigma(&spec, &spec.start_theta()).unwrap();
    assert_eq!(s.values.as_slice(), &[1.0, 0.0, 1.0]);
}

#[test]
fn degrees_of_freedom_of_split_ballot_model() {
    for lab in [ResidualLabeling::PerVariable, ResidualLabeling::Positional] {
        let sb = SbMtmm::<f64>::new(lab);
        assert_eq!(sb.spec.n_moments(), 42);
        assert_eq!(sb.spec.n_free(), 24);
        assert_eq!(sb.spec.degrees_of_freedom(), 18);
        assert_eq!(sb.spec.free_labels(), &presets::SB_MTMM_ORDER);
        assert!(validate(&sb.spec).is_empty());
    }
}

#[test]
fn validate_reports_missing_mirror() {
    let groups = vec![GroupSpec::new(vec!["a".into()], vec!["F".into(), "G".into()])];
    let entries = vec![
        ParameterEntry::free("c", Slot::new(0, MatrixKind::FactorCov, 0, 1), 0.1),
        ParameterEntry::fixed("r", Slot::new(0, MatrixKind::ResidualCov, 0, 0), 1.0),
    ];
    let v = validate(&ModelSpec::new(groups, entries));
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::Symmetry);
    assert_eq!(v[0].slot, Slot::new(0, MatrixKind::FactorCov, 0, 1));
}

#[test]
fn validate_reports_out_of_range_loading() {
    let groups = vec![GroupSpec::new(vec!["a".into(), "b".into()], vec!["F".into()])];
    let entries = vec![ParameterEntry::free("l", Slot::new(0, MatrixKind::Loading, 2, 0), 0.5)];
    let v = validate(&ModelSpec::new(groups, entries));
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::Dimension);
    assert!(v[0].to_string().contains("Lambda[3,1]"));
}

#[test]
fn validate_reports_label_conflicts() {
    let groups = vec![GroupSpec::new(vec!["a".into(), "b".into()], vec!["F".into()])];
    let entries = vec![
        ParameterEntry::free("l", Slot::new(0, MatrixKind::Loading, 0, 0), 0.5),
        ParameterEntry::fixed("l", Slot::new(0, MatrixKind::Loading, 1, 0), 0.5),
    ];
    let v = validate(&ModelSpec::new(groups, entries));
    assert!(v.iter().any(|v| v.kind == ViolationKind::LabelConflict));
}

fn random_symmetric(q: usize, seed: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(q, q);
    let mut k = 0;
    for j in 0..q {
        for i in j..q {
            m[(i, j)] = seed[k % seed.len()] * (1.0 + k as f64 * 0.37).sin();
            m[(j, i)] = m[(i, j)];
            k += 1;
        }
    }
    m
}

proptest! {
    #[test]
    fn duplication_maps_vech_to_vec(q in 1usize..=6, seed in prop::collection::vec(-3.0f64..3.0, 1..30)) {
        let a = random_symmetric(q, &seed);
        let d = duplication_matrix::<f64>(q);
        let err = (&d * vech(&a).unwrap() - vec(&a)).amax();
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn implied_matches_direct_product(vals in prop::collection::vec(-1.5f64..1.5, 24)) {
        let sb = SbMtmm::<f64>::new(ResidualLabeling::PerVariable);
        let theta = sb.spec.theta(DVector::from_vec(vals)).unwrap();
        let mats = build_matrices(&sb.spec, &theta).unwrap();
        let s = implied_sigma(&sb.spec, &theta).unwrap();
        for (g, m) in mats.iter().enumerate() {
            // independent product, element by element
            let q = m.loadings.nrows();
            let k = m.loadings.ncols();
            let mut seg = Vec::new();
            for j in 0..q {
                for i in j..q {
                    let mut acc = m.residual_cov[(i, j)];
                    for a in 0..k {
                        for b in 0..k {
                            acc += m.loadings[(i, a)] * m.factor_cov[(a, b)] * m.loadings[(j, b)];
                        }
                    }
                    seg.push(acc);
                }
            }
            let got = s.segment(g);
            for (x, y) in got.iter().zip(&seg) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perturbing_a_shared_label_moves_every_slot(d in -1.0f64..1.0) {
        let sb = SbMtmm::<f64>::new(ResidualLabeling::PerVariable);
        let base = sb.population_theta(0.1);
        for label in ["l21", "psi3", "rho13", "phi4"] {
            let k = sb.spec.free_index(label).unwrap();
            let mut moved = base.clone();
            moved.values[k] += d;
            let m0 = build_matrices(&sb.spec, &base).unwrap();
            let m1 = build_matrices(&sb.spec, &moved).unwrap();
            for e in sb.spec.entries().iter().filter(|e| e.label == label) {
                let s = e.slot;
                let pick = |m: &latent_rank::model::GroupMatrices<f64>| match s.matrix {
                    MatrixKind::Loading => m.loadings[(s.row, s.col)],
                    MatrixKind::FactorCov => m.factor_cov[(s.row, s.col)],
                    MatrixKind::ResidualCov => m.residual_cov[(s.row, s.col)],
                };
                prop_assert!((pick(&m1[s.group]) - pick(&m0[s.group]) - d).abs() < 1e-14);
            }
        }
    }
}
