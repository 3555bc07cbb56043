use bmstab::bodies::ConvexBody;
use bmstab::error::Error;
use bmstab::instances::{jittered_simplex, truncated_simplex};
use bmstab::moduli::ModulusCurve;
use bmstab::stability::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn ellipsoid_thresholds() {
    assert_eq!(epsilon0(StabilityKind::Ellipsoid, 2, None).unwrap(), 1.0 / 65_536_000.0);
    assert!(rel(epsilon0(StabilityKind::Ellipsoid, 3, None).unwrap(), 1.0 / 2_519_424_000.0) < 1e-15);
}

#[test]
fn ellipsoid_radius_and_bound() {
    // Extended-precision references.
    let case = StabilityCase::new(StabilityKind::Ellipsoid, 3, 2e-10, None).unwrap();
    assert!(rel(case.r.unwrap(), 0.001_473_612_599_456_154_642) < 1e-14);
    assert!(rel(stability_bound(&case).unwrap(), 2.591_501_607_412_647_013_7) < 1e-14);
    let case = StabilityCase::new(StabilityKind::Ellipsoid, 2, 1e-12, None).unwrap();
    assert!(rel(stability_bound(&case).unwrap(), 1.080_634_947_193_271_882_5) < 1e-14);
    assert!(case.invariants_hold());
}

#[test]
fn polytope_polar_has_zero_threshold() {
    let sq = ConvexBody::cube(2);
    let curve = ModulusCurve::estimate(&sq.polar().unwrap(), &[0.0, 1e-4, 1e-3, 0.5], &Default::default()).unwrap();
    assert_eq!(epsilon0(StabilityKind::General, 2, Some(&curve)).unwrap(), 0.0);
    assert_eq!(solve_r(StabilityKind::General, 2, 0.0, Some(&curve)).unwrap(), 0.0);
    assert!(matches!(solve_r(StabilityKind::General, 2, 1e-20, Some(&curve)), Err(Error::NotApplicable(_))));
}

#[test]
fn coarse_curve_is_uncertified() {
    let curve = ModulusCurve::estimate(&ConvexBody::euclidean_ball(2), &[0.5], &Default::default()).unwrap();
    assert!(matches!(epsilon0(StabilityKind::Symmetric, 2, Some(&curve)), Err(Error::UncertifiedCurve(_))));
}

#[test]
fn case_three_is_exact() {
    for n in 2..=10 {
        let checks = case3_exact(n).unwrap();
        assert!(checks.iter().all(|c| c.holds), "n={n}: {checks:?}");
        let (_, trace) = diameter_bound(n).unwrap();
        assert!(trace.iter().all(|c| c.holds), "n={n}: {trace:?}");
    }
    let (_, trace) = diameter_bound(2).unwrap();
    let growth = trace.iter().find(|c| c.label.starts_with("40n³r")).unwrap();
    assert_eq!(growth.lhs, "5/8");
    let (bound, _) = diameter_bound(3).unwrap();
    assert_eq!(bound.to_string(), "82556485631/9172942848");
}

#[test]
fn lp_corollary_values() {
    let c = lp_corollary(4.0, 2, 1e-12).unwrap();
    assert_eq!(c.branch, LpBranch::Large);
    assert!(c.applicable);
    assert!(rel(c.bound, 2.172_187_384_374_611_832_6) < 1e-14);
    let c = lp_corollary(1.5, 2, 1e-30).unwrap();
    assert_eq!(c.branch, LpBranch::Small);
    assert!(rel(c.bound, 1.000_179_181_338_192_925_9) < 1e-14);
    assert!(rel(c.threshold, 1.850_371_707_708_594_234e-17) < 1e-14);
    assert!(!lp_corollary(1.5, 2, 1e-16).unwrap().applicable);
}

#[test]
fn lp_radii_satisfy_the_symmetric_condition() {
    for n in [2, 3, 4] {
        for p in [2.0, 2.5, 3.0, 4.0, 8.0] {
            let thr = lp_corollary(p, n, 0.0).unwrap().threshold;
            for frac in [1.0, 1e-2, 1e-6] {
                let c = lp_corollary(p, n, frac * thr).unwrap();
                assert!(lp_case2_holds(p, n, c.epsilon, c.r_stated).unwrap(), "p={p} n={n}");
                assert!((c.r_implied - c.r_stated).abs() <= 1e-12 * c.r_stated);
            }
        }
        for p in [1.25, 1.5, 1.75, 2.0] {
            let thr = lp_corollary_branch(LpBranch::Small, p, n, 0.0).unwrap().threshold;
            for frac in [1.0, 1e-2, 1e-6] {
                let c = lp_corollary_branch(LpBranch::Small, p, n, frac * thr).unwrap();
                assert!(lp_case2_holds(p, n, c.epsilon, c.r_stated).unwrap(), "p={p} n={n}");
                // The implied radius meets the condition with equality under
                // δ_q(t) ≥ (t/2)^q/q, so it is checked with a rounding margin.
                assert!(lp_case2_holds(p, n, c.epsilon, c.r_implied * (1.0 + 1e-12)).unwrap(), "p={p} n={n}");
                assert!(!lp_case2_holds(p, n, c.epsilon, c.r_implied * (1.0 - 1e-9)).unwrap(), "p={p} n={n}");
                assert!((c.r_stated - 10.0 * c.r_implied).abs() <= 1e-12 * c.r_stated);
            }
        }
    }
}

/// The large-p threshold sits above `ε₀(B_p^n)` computed from the exact
/// modulus of `B_q^n`, so the generic solver refuses its upper end.
#[test]
fn large_p_threshold_exceeds_epsilon0() {
    for n in [2, 3] {
        for p in [2.0, 4.0] {
            let curve = ModulusCurve::lp_exact(n, p / (p - 1.0), &[]).unwrap();
            let e0 = epsilon0(StabilityKind::Symmetric, n, Some(&curve)).unwrap();
            let thr = lp_corollary(p, n, 0.0).unwrap().threshold;
            assert!(thr > 3.0 * e0 && thr < 5.0 * e0, "p={p} n={n}: {thr:e} vs {e0:e}");
        }
    }
}

#[test]
fn two_is_shared_by_all_three_bounds() {
    for n in [2, 3, 4] {
        let e0 = epsilon0(StabilityKind::Ellipsoid, n, None).unwrap();
        for eps in [e0, 1e-3 * e0, 1e-9 * e0] {
            let ellipsoid = StabilityCase::new(StabilityKind::Ellipsoid, n, eps, None).unwrap().bound.unwrap();
            let small = lp_corollary_branch(LpBranch::Small, 2.0, n, eps).unwrap();
            let large = lp_corollary_branch(LpBranch::Large, 2.0, n, eps).unwrap();
            assert!((small.exponent - 1.0 / 3.0).abs() < 1e-16 && large.exponent == 1.0 / 3.0);
            assert!(ellipsoid <= small.bound && small.bound <= large.bound, "n={n} ε={eps:e}");
        }
    }
}

#[test]
fn equality_instance() {
    for n in [2, 3] {
        let rep = validate_stability(&ConvexBody::euclidean_ball(n), &ConvexBody::regular_simplex(n), StabilityKind::Ellipsoid).unwrap();
        assert_eq!(rep.status, StabilityStatus::Pass);
        assert_eq!(rep.epsilon, 0.0);
        assert_eq!(rep.bound, Some(1.0));
        assert!((rep.proximity.unwrap() - 1.0).abs() < 1e-5);
        assert!(rep.checks.iter().all(|c| c.holds));
        assert!(rep.witness.is_some());
    }
}

#[test]
fn jittered_simplex_passes() {
    let k = jittered_simplex(3, 1e-6, 11, 0);
    let rep = validate_stability(&ConvexBody::euclidean_ball(3), &k, StabilityKind::Ellipsoid).unwrap();
    assert_eq!(rep.status, StabilityStatus::Pass, "{rep:?}");
    assert!(rep.epsilon_raw.abs() < EPSILON_FLOOR);
    let j = rep.to_json_value();
    for key in ["epsilon", "epsilon0", "r", "bound", "proximity", "checks", "witness", "placement"] {
        assert!(j.get(key).is_some(), "{key}");
    }
}

#[test]
fn truncated_simplex_uses_a_positive_epsilon() {
    let rep = validate_stability(&ConvexBody::euclidean_ball(2), &truncated_simplex(2, 1e-8), StabilityKind::Ellipsoid).unwrap();
    assert_eq!(rep.status, StabilityStatus::Pass);
    let eps = rep.epsilon;
    assert!((eps - 5e-9).abs() < 1e-10, "{eps:e}");
    assert!(rep.bound.unwrap() > 2.0 && rep.proximity.unwrap() < 1.0 + 1e-7);
    assert!(rep.epsilon1.unwrap() >= 0.0);
}

#[test]
fn symmetric_and_general_cases_on_lp_balls() {
    for p in [1.5, 4.0] {
        let l = ConvexBody::lp_ball(2, p).unwrap();
        for kind in [StabilityKind::Symmetric, StabilityKind::General] {
            let rep = validate_stability(&l, &jittered_simplex(2, 1e-7, 3, 1), kind).unwrap();
            assert_eq!(rep.status, StabilityStatus::Pass, "p={p} {kind:?}: {:?}", rep.reason);
            assert!(rep.epsilon0.unwrap() > 0.0);
        }
    }
}

#[test]
fn far_from_extremal_is_not_applicable() {
    for n in [2, 3] {
        let rep = validate_stability(&ConvexBody::euclidean_ball(n), &ConvexBody::cube(n), StabilityKind::Ellipsoid).unwrap();
        assert_eq!(rep.status, StabilityStatus::NotApplicable);
        assert!(rep.r.is_none() && rep.proximity.is_none());
        assert!((rep.epsilon - (1.0 - 1.0 / n as f64)).abs() < 1e-12);
    }
}

#[test]
fn polytope_l_is_not_smooth() {
    let rep = validate_stability(&ConvexBody::cross_polytope(2), &ConvexBody::regular_simplex(2), StabilityKind::Symmetric).unwrap();
    assert_eq!(rep.status, StabilityStatus::NotApplicable);
    assert!(rep.reason.unwrap().contains("not smooth"));
}

#[test]
fn kind_must_match_the_body() {
    let tri = ConvexBody::regular_simplex(2);
    assert!(validate_stability(&ConvexBody::cube(2), &tri, StabilityKind::Ellipsoid).is_err());
    assert!(validate_stability(&tri, &tri, StabilityKind::Symmetric).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solve_r_is_monotone_and_guarded(q in 1.2f64..5.0, n in 2usize..5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let curve = ModulusCurve::lp_exact(n, q, &[]).unwrap();
        for kind in [StabilityKind::General, StabilityKind::Symmetric, StabilityKind::Ellipsoid] {
            let e0 = epsilon0(kind, n, Some(&curve)).unwrap();
            let (lo, hi) = (a.min(b) * e0, a.max(b) * e0);
            let r_lo = solve_r(kind, n, lo, Some(&curve)).unwrap();
            let r_hi = solve_r(kind, n, hi, Some(&curve)).unwrap();
            prop_assert!(r_lo <= r_hi);
            prop_assert!(r_hi <= r_guard(n) + 1e-15);
            let case = StabilityCase::new(kind, n, hi, Some(curve.clone())).unwrap();
            prop_assert!(case.invariants_hold());
        }
    }

    #[test]
    fn corollary_radius_dominates_the_solver(p in 2.0f64..8.0, n in 2usize..5, log_frac in -8.0f64..-2.0) {
        let c = lp_corollary(p, n, 10f64.powf(log_frac) * lp_corollary(p, n, 0.0).unwrap().threshold).unwrap();
        let curve = ModulusCurve::lp_exact(n, p / (p - 1.0), &[]).unwrap();
        let r = solve_r(StabilityKind::Symmetric, n, c.epsilon, Some(&curve)).unwrap();
        prop_assert!(r <= c.r_stated * (1.0 + 1e-9));
    }
}
