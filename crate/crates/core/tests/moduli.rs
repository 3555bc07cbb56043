use bmstab::bodies::ConvexBody;
use bmstab::error::Error;
use bmstab::linalg::{vector, Vector};
use bmstab::moduli::*;
use proptest::prelude::*;

fn exact(p: f64, t: f64) -> f64 {
    lp_modulus_exact(p, t).unwrap()
}

fn assert_brackets(e: &ModulusEstimate, value: f64, width: f64) {
    assert!(e.lower <= value + 1e-12 && value <= e.upper + 1e-12, "{} ≤ {value} ≤ {}", e.lower, e.upper);
    assert!(value - e.lower <= width && e.upper - value <= width, "{} / {value} / {}", e.lower, e.upper);
}

#[test]
fn closed_form_reference_values() {
    // Extended-precision references.
    assert!((modulus_lp(2.0, 1.0).unwrap().0 - 0.133_974_596_215_561_353_2).abs() < 1e-16);
    assert!((modulus_lp(4.0, 0.5).unwrap().0 - 0.000_977_996_279_883_232_750_3).abs() < 1e-17);
    let (v, kind) = modulus_lp(1.5, 0.4).unwrap();
    assert!((v - 0.01).abs() < 1e-17 && kind == ModulusKind::Bound);
    for k in 0..=100 {
        let t = k as f64 / 100.0;
        assert!(modulus_lp(2.0, t).unwrap().0 >= t * t / 8.0);
    }
}

#[test]
fn disk_brackets_the_closed_form() {
    let e = modulus_estimate(&ConvexBody::euclidean_ball(2), 1.0).unwrap();
    assert!(e.certified && e.converged);
    assert_brackets(&e, 1.0 - 3f64.sqrt() / 2.0, 1e-3);
}

#[test]
fn four_ball_brackets_the_closed_form() {
    let e = modulus_estimate(&ConvexBody::lp_ball(2, 4.0).unwrap(), 0.5).unwrap();
    assert_brackets(&e, 0.000_977_996_279_883_232_750_3, 1e-3);
}

#[test]
fn small_p_ball_brackets_hanner() {
    let e = modulus_estimate(&ConvexBody::lp_ball(2, 1.5).unwrap(), 0.8).unwrap();
    assert_brackets(&e, exact(1.5, 0.8), 1e-3);
    assert!(e.upper >= modulus_lp(1.5, 0.8).unwrap().0);
}

#[test]
fn reported_pair_attains_the_upper_bound() {
    let body = ConvexBody::lp_ball(2, 3.0).unwrap();
    let e = modulus_estimate_with(&body, 0.6, &ModulusBudget::upper_only()).unwrap();
    let x = Vector::from_column_slice(&e.pair.0);
    let y = Vector::from_column_slice(&e.pair.1);
    assert!(body.gauge(&(&x - &y)).unwrap() >= 0.6);
    assert!((1.0 - body.gauge(&((&x + &y) * 0.5)).unwrap() - e.upper).abs() < 1e-15);
    assert!(body.gauge(&x).unwrap() <= 1.0 + 1e-12 && body.gauge(&y).unwrap() <= 1.0 + 1e-12);
    assert!(!e.certified);
}

#[test]
fn polytopes_have_flat_moduli() {
    for body in [ConvexBody::cube(2), ConvexBody::regular_simplex(2), ConvexBody::cross_polytope(2)] {
        for t in [0.2, 0.5] {
            let e = modulus_estimate(&body, t).unwrap();
            assert_eq!(e.upper, 0.0);
            assert_eq!(e.lower, 0.0);
        }
    }
}

#[test]
fn smooth_balls_are_strictly_convex() {
    for p in [1.5, 2.0, 3.0, 4.0] {
        let e = modulus_estimate(&ConvexBody::lp_ball(2, p).unwrap(), 0.5).unwrap();
        assert!(e.certified && e.lower > 0.0, "p={p}: {}", e.lower);
    }
}

#[test]
fn boundary_pairs_are_not_beaten_inside() {
    let tilted = ConvexBody::lp_ball(2, 3.0).unwrap().shift(&vector(&[0.2, -0.1]));
    for body in [ConvexBody::euclidean_ball(2), tilted] {
        let e = modulus_estimate(&body, 0.5).unwrap();
        assert!(e.interior_min.unwrap() >= e.lower, "{:?} vs {}", e.interior_min, e.lower);
    }
}

#[test]
fn estimated_curve_is_monotone() {
    let body = ConvexBody::lp_ball(2, 3.0).unwrap();
    let budget = ModulusBudget { gap: 5e-4, ..ModulusBudget::default() };
    let c = ModulusCurve::estimate(&body, &[0.8, 0.0, 0.2, 0.5, 1.0], &budget).unwrap();
    assert_eq!(c.samples[0].t, 0.0);
    assert_eq!(c.samples[0].upper, 0.0);
    for w in c.samples.windows(2) {
        assert!(w[0].lower <= w[1].lower && w[0].upper <= w[1].upper);
    }
    for s in &c.samples {
        assert!(0.0 <= s.lower && s.lower <= s.upper && s.upper <= 1.0 && s.certified);
    }
    assert!((c.lower_at(0.6).unwrap() - c.samples[2].lower).abs() == 0.0);
    let j = c.to_json_value();
    assert_eq!(j["grid"].as_array().unwrap().len(), 5);
    assert_eq!(j["source"]["type"], "estimate");
}

#[test]
fn three_dimensional_estimate_is_sampled() {
    let e = modulus_estimate(&ConvexBody::euclidean_ball(3), 0.5).unwrap();
    assert!(!e.certified);
    assert!((e.upper - exact(2.0, 0.5)).abs() < 1e-9);
    assert!(matches!(modulus_estimate(&ConvexBody::cube(2).shift(&vector(&[1.0, 0.0])), 0.5), Err(Error::OriginNotInterior)));
}

#[test]
fn shift_bounds_from_closed_forms() {
    let disk = ModulusCurve::euclidean(2, &[]).unwrap();
    let v = shift_bound_gauge(&disk, 0.5, 1.0, 1.0).unwrap();
    assert!((v - 0.021_169_442_298_763_852_47).abs() < 1e-16);
    let v = corollary_polar_bound(CorollaryKind::General, &disk, 2, 1.0).unwrap();
    assert!((v - 0.000_030_519_440_997_557_606_8).abs() < 1e-18);
    assert_eq!(corollary_polar_bound(CorollaryKind::Symmetric, &disk, 3, 0.0).unwrap(), 0.0);
}

#[test]
fn general_corollary_is_implied_by_the_polar_lemma() {
    for p in [1.5, 2.0, 4.0] {
        let curve = ModulusCurve::lp(2, p, &[]).unwrap();
        for n in 2..=6 {
            let c = 1.0 / (n as f64 + 1.0);
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let cor = corollary_polar_bound(CorollaryKind::General, &curve, n, t).unwrap();
                let sym = corollary_polar_bound(CorollaryKind::Symmetric, &curve, n, t).unwrap();
                let lemma = shift_bound_polar(&curve, c, n as f64, t).unwrap();
                assert!(cor <= lemma, "p={p} n={n} t={t}");
                assert!(sym >= cor);
            }
        }
    }
}

/// The symmetric corollary does not follow from the polar lemma by
/// monotonicity, so it is checked against estimated moduli directly.
#[test]
fn symmetric_corollary_holds_on_shifted_balls() {
    let budget = ModulusBudget::upper_only();
    for p in [1.5, 2.0, 4.0] {
        let l = ConvexBody::lp_ball(2, p).unwrap();
        let curve = ModulusCurve::lp(2, p / (p - 1.0), &[]).unwrap();
        let z = shift_point(&l, &vector(&[1.0, 0.4]), 1.0 / 3.0).unwrap();
        let polar = l.shift(&z).polar().unwrap();
        for t in [0.2, 0.5, 1.0] {
            let bound = corollary_polar_bound(CorollaryKind::Symmetric, &curve, 2, t).unwrap();
            let modulus = modulus_estimate_with(&polar, t, &budget).unwrap().upper;
            assert!(modulus >= bound - SHIFT_TOL, "p={p} t={t}: {modulus} < {bound}");
        }
    }
}

#[test]
fn shift_lemmas_hold_on_polygons() {
    let dir = vector(&[0.3f64.cos(), 0.3f64.sin()]);
    for l in [ConvexBody::cube(2), ConvexBody::regular_simplex(2)] {
        let grid = [0.0, 0.01, 0.1, 0.5, 1.0];
        let curve = ModulusCurve::estimate(&l, &grid, &ModulusBudget::default()).unwrap();
        let polar_curve = ModulusCurve::estimate(&l.polar().unwrap(), &grid, &ModulusBudget::default()).unwrap();
        let checks = validate_shift_lemmas(&l, &curve, &polar_curve, &dir, &[0.3, 0.6, 0.9], &[0.2, 0.5, 0.8], &ModulusBudget::upper_only())
            .unwrap();
        assert_eq!(checks.len(), 9);
        assert!(checks.iter().all(|c| c.holds));
    }
}

#[test]
fn shift_lemmas_hold_on_two_ball() {
    let l = ConvexBody::euclidean_ball(2);
    let curve = ModulusCurve::euclidean(2, &[]).unwrap();
    let dir = vector(&[0.3f64.cos(), 0.3f64.sin()]);
    let checks = validate_shift_lemmas(&l, &curve, &curve, &dir, &[0.3, 0.9], &[0.5], &ModulusBudget::upper_only()).unwrap();
    for c in &checks {
        assert!(c.holds && c.gauge_bound > 0.0 && c.polar_bound > 0.0, "{c:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn estimates_bracket_lp_moduli(p in 1.2f64..6.0, t in 0.05f64..1.0) {
        let budget = ModulusBudget { gap: 1e-3, angles: 2048, ..ModulusBudget::default() };
        let e = modulus_estimate_with(&ConvexBody::lp_ball(2, p).unwrap(), t, &budget).unwrap();
        let v = exact(p, t);
        prop_assert!(e.lower <= v + 1e-12 && v <= e.upper + 1e-12, "{} {} {}", e.lower, v, e.upper);
        prop_assert!(e.upper - e.lower <= 2e-3);
        prop_assert!(modulus_lp(p, t).unwrap().0 <= v + 1e-15);
    }
}
