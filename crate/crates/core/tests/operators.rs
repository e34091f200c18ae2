use biharm_core::funcs::{bilinear, PairConstraints, PqRelation, QForm};
use biharm_core::verify::{claim_seed, DEFAULT_SEED};
use biharm_core::{
    build_basis, conformality, connection_term, explore_minors, find_claim, haar_sample, iterated_tension, make_pair,
    membership_residual, principal_minor, registry, run_claim, run_suite, tension, tension_coeff_backend, Error,
    Expr, ExprField, GroupKind, GroupSpec, Mat, Overrides, ScalarField, Verdict,
};
use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn basis_sizes_and_orthonormality() {
    use GroupKind::*;
    for (kind, n, dim) in [(U, 3, 9), (SU, 3, 8), (SO, 5, 10), (Sp, 2, 10), (Lorentz, 4, 6)] {
        let spec = GroupSpec::new(kind, n).unwrap();
        assert_eq!(spec.basis.len(), dim, "{kind:?}");
        let g = spec.gram();
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j { spec.basis[i].sign } else { 0.0 };
                assert!((v - expected).abs() < 1e-12, "{kind:?} gram[{i}][{j}] = {v}");
            }
        }
    }
}

#[test]
fn samples_lie_on_the_group() {
    use GroupKind::*;
    let mut r = rng(1);
    for (kind, n) in [(U, 4), (SU, 3), (SO, 5), (Sp, 2), (Lorentz, 4)] {
        for _ in 0..10 {
            let m = haar_sample(kind, n, &mut r);
            assert!(membership_residual(kind, &m).unwrap() < 1e-10, "{kind:?}");
        }
    }
    // A generic non-unitary matrix is rejected.
    let m = Mat::from_fn(2, |i, j| C::new((i + 2 * j) as f64, 0.0));
    assert!(membership_residual(U, &m).unwrap() > 0.1);
}

#[test]
fn connection_vanishes_on_compact_groups() {
    use GroupKind::*;
    for (kind, n) in [(U, 3), (SU, 3), (SO, 4), (Sp, 2)] {
        let spec = GroupSpec::new(kind, n).unwrap();
        for b in build_basis(kind, n).unwrap() {
            assert!(connection_term(&b, &spec).unwrap().max_abs() < 1e-12, "{kind:?}");
        }
    }
}

#[test]
fn coordinate_functions_are_eigenfunctions() {
    // tau(z_ja) = -n z_ja on U(n), -(n-1)/2 x_ja on SO(n), -(2n+1)/2 on Sp(n).
    let cases = [
        (GroupKind::U, 3, -3.0),
        (GroupKind::SO, 5, -2.0),
        (GroupKind::Sp, 2, -2.5),
    ];
    let mut r = rng(2);
    for (kind, n, lambda) in cases {
        let spec = GroupSpec::new(kind, n).unwrap();
        let f = ExprField::new(Expr::entry(1, 2)).unwrap();
        for _ in 0..5 {
            let p = spec.sample(&mut r);
            let t: C = tension(&f, &spec).unwrap().eval(&p).unwrap();
            assert!((t - lambda * p[(0, 1)]).norm() < 1e-12, "{kind:?}: {t}");
        }
    }
}

#[test]
fn kappa_of_coordinates_on_u() {
    // kappa(z_11, z_22) = -z_21 z_12 on U(n).
    let spec = GroupSpec::new(GroupKind::U, 3).unwrap();
    let p = spec.sample(&mut rng(3));
    let (a, b) = (ExprField::new(Expr::entry(1, 1)).unwrap(), ExprField::new(Expr::entry(2, 2)).unwrap());
    let k: C = conformality(&a, &b, &spec).eval(&p).unwrap();
    assert!((k + p[(1, 0)] * p[(0, 1)]).norm() < 1e-12);
}

#[test]
fn principal_minor_eigenvalues() {
    let spec = GroupSpec::new(GroupKind::U, 4).unwrap();
    let p = spec.sample(&mut rng(4));
    for k in 1..=4 {
        let d = ExprField::new(principal_minor(k, 4).unwrap()).unwrap();
        let lambda = -((k * (4 - k + 1)) as f64);
        let v: C = d.eval(&p).unwrap();
        let t: C = tension(&d, &spec).unwrap().eval(&p).unwrap();
        assert!((t - lambda * v).norm() < 1e-10, "k = {k}");
    }
}

#[test]
fn z11_over_z22_on_u2() {
    // f = z11/z22: tau f = -2 kappa(z11, z22)/z22^2 + 2 z11 kappa(z22, z22)/z22^3
    //              = 2 z21 z12 / z22^2 - 2 z11 / z22, and tau^2 f = 0.
    let spec = GroupSpec::new(GroupKind::U, 2).unwrap();
    let f = ExprField::new(Expr::entry(1, 1) / Expr::entry(2, 2)).unwrap();
    let p = spec.sample(&mut rng(5));
    let t: C = tension(&f, &spec).unwrap().eval(&p).unwrap();
    let expected = 2.0 * p[(1, 0)] * p[(0, 1)] / (p[(1, 1)] * p[(1, 1)]) - 2.0 * p[(0, 0)] / p[(1, 1)];
    assert!((t - expected).norm() < 1e-12);
    let t2: C = iterated_tension(&f, 2, &spec).unwrap().eval(&p).unwrap();
    assert!(t2.norm() < 1e-10, "{t2}");
}

#[test]
fn coefficient_backend_matches_frame_on_so() {
    let spec = GroupSpec::new(GroupKind::SO, 4).unwrap();
    let e = Expr::entry(1, 1) * Expr::entry(2, 3) + Expr::entry(4, 4);
    let f = ExprField::new(e.clone()).unwrap();
    let mut r = rng(6);
    for _ in 0..5 {
        let p = spec.sample(&mut r);
        let a: C = tension(&f, &spec).unwrap().eval(&p).unwrap();
        let b = tension_coeff_backend(&e, &p, GroupKind::SO).unwrap();
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn iterated_tension_depth_is_bounded() {
    let spec = GroupSpec::new(GroupKind::U, 2).unwrap();
    let f = ExprField::new(Expr::entry(1, 1)).unwrap();
    assert!(matches!(iterated_tension(&f, 4, &spec), Err(Error::DepthLimit(4))));
}

#[test]
fn singular_points_are_reported() {
    let spec = GroupSpec::new(GroupKind::U, 2).unwrap();
    let f = ExprField::new(Expr::entry(1, 1) / Expr::entry(1, 2)).unwrap();
    let p = Mat::<C>::identity(2);
    assert!(matches!(f.eval::<C>(&p), Err(Error::SingularPoint { .. })));
    assert!(tension(&f, &spec).unwrap().eval::<C>(&p).is_err());
}

#[test]
fn pair_constraints_hold() {
    let mut r = rng(7);
    let cases = [
        (QForm::Isotropic, PqRelation::Zero),
        (QForm::Isotropic, PqRelation::Nonzero),
        (QForm::NonIsotropic, PqRelation::Free),
    ];
    for (q, pq) in cases {
        for _ in 0..20 {
            let (p, qv) = make_pair(4, PairConstraints { q, pq }, &mut r).unwrap();
            let qq = bilinear(&qv, &qv).norm();
            let pqv = bilinear(&p, &qv).norm();
            match q {
                QForm::Isotropic => assert!(qq < 1e-12),
                QForm::NonIsotropic => assert!(qq >= 0.1),
                QForm::Free => {}
            }
            match pq {
                PqRelation::Zero => assert!(pqv < 1e-12),
                PqRelation::Nonzero => assert!(pqv >= 0.1),
                PqRelation::Free => {}
            }
        }
    }
    let isotropic = PairConstraints { q: QForm::Isotropic, pq: PqRelation::Free };
    assert!(matches!(make_pair(1, isotropic, &mut r), Err(Error::UnsatisfiableConstraints(_))));
}

#[test]
fn claim_ids_are_unique_and_findable() {
    let claims = registry();
    let mut ids: Vec<_> = claims.iter().map(|c| c.id.clone()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), claims.len());
    assert!(find_claim("su-theorem-harmonic").is_some());
    assert!(find_claim("no-such-claim").is_none());
}

#[test]
fn reports_are_deterministic_per_seed() {
    let claim = find_claim("su-theorem-biharmonic").unwrap();
    let o = Overrides { samples: Some(10), seed: Some(42), ..Overrides::default() };
    let a = run_claim(&claim.with_overrides(&o, DEFAULT_SEED).unwrap()).unwrap();
    let b = run_claim(&claim.with_overrides(&o, DEFAULT_SEED).unwrap()).unwrap();
    assert_eq!(a.to_json_without_time(), b.to_json_without_time());
    assert_eq!(a.seed, claim_seed(42, "su-theorem-biharmonic"));
    assert_eq!(a.verdict, Verdict::Pass);
    assert_eq!(a.samples.accepted, 10);

    let o = Overrides { samples: Some(10), seed: Some(43), ..Overrides::default() };
    let c = run_claim(&claim.with_overrides(&o, DEFAULT_SEED).unwrap()).unwrap();
    assert_ne!(a.residuals.max, c.residuals.max);
}

#[test]
fn a_false_claim_fails() {
    // Asserting harmonicity for the off-diagonal branch must fail.
    let mut claim = find_claim("su-theorem-biharmonic").unwrap();
    claim.assertion = biharm_core::Assertion::Harmonic;
    claim.samples = 10;
    let report = run_claim(&claim).unwrap();
    assert_eq!(report.verdict, Verdict::Fail);
    assert!(report.residuals.max > 1e-3);
}

#[test]
fn suite_selection_and_overrides() {
    let o = Overrides { samples: Some(5), ..Overrides::default() };
    let reports = run_suite("so-lemma-*", &o, DEFAULT_SEED).unwrap();
    let ids: Vec<_> = reports.iter().map(|r| r.claim.as_str()).collect();
    assert_eq!(ids, ["so-lemma-eigen", "so-lemma-kappa"]);
    assert!(reports.iter().all(|r| r.samples.requested == 5 && r.verdict == Verdict::Pass));

    let o = Overrides { group: Some(GroupKind::SU), n: Some(2), samples: Some(5), ..Overrides::default() };
    let reports = run_suite("su-theorem-harmonic,su2-*", &o, DEFAULT_SEED).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.group == "SU(2)" && r.verdict == Verdict::Pass));

    let bad = Overrides { n: Some(1), samples: Some(5), ..Overrides::default() };
    let reports = run_suite("su-theorem-biharmonic", &bad, DEFAULT_SEED).unwrap();
    assert!(reports[0].error.is_some());
    assert_eq!(reports[0].verdict, Verdict::Fail);
}

#[test]
fn exploration_is_advisory() {
    let report = explore_minors(3, 6, 4, 9).unwrap();
    assert_eq!(report.verdict, Verdict::Advisory);
    assert!(report.advisory);
    assert!(matches!(explore_minors(3, 5, 4, 9), Err(Error::UnsatisfiableConstraints(_))));
}

#[test]
fn sp_cross_kappa_swaps_rows() {
    // kappa(z_1a, w_2a) = -z_2a w_1a / 2 on Sp(2); w_ka is entry (k, 2 + a).
    let spec = GroupSpec::new(GroupKind::Sp, 2).unwrap();
    let p = spec.sample(&mut rng(8));
    let z = ExprField::new(Expr::entry(1, 1)).unwrap();
    let w = ExprField::new(Expr::entry(2, 3)).unwrap();
    let k: C = conformality(&z, &w, &spec).eval(&p).unwrap();
    assert!((k + 0.5 * p[(1, 0)] * p[(0, 2)]).norm() < 1e-12);
    // So the product -z_1a w_2a / 2 is not what comes out.
    assert!((k + 0.5 * p[(0, 0)] * p[(1, 2)]).norm() > 1e-6);
}
