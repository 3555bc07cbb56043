use bmstab::bodies::{AffineMap, Containment, ConvexBody};
use bmstab::distance::*;
use bmstab::instances::{jittered_simplex, random_pair, rng_for};
use bmstab::john::{john_position, SolverOptions};
use bmstab::linalg::{vector, Matrix, Vector};
use bmstab::optim::gaussian;
use proptest::prelude::*;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn opts() -> DistanceOptions {
    DistanceOptions::default()
}

fn triangle() -> ConvexBody {
    ConvexBody::vpolytope(vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])]).unwrap()
}

fn assert_replays(k: &ConvexBody, l: &ConvexBody, b: &DistanceBound) {
    let w = b.witness.as_ref().expect("witness");
    for c in replay_witness(k, l, w).unwrap() {
        assert!(c.is_yes(), "{c:?}");
    }
}

#[test]
fn containment_factor_examples() {
    let s = ConvexBody::regular_simplex(2);
    assert!((containment_factor(&s, &s, Sign::Positive).unwrap().value - 1.0).abs() < 1e-12);
    let disk = ConvexBody::euclidean_ball(2);
    assert!((containment_factor(&s, &disk, Sign::Negative).unwrap().value - 2.0).abs() < 1e-12);
    let sq = ConvexBody::cube(2).scale(1.0 / SQRT2).unwrap();
    assert!((containment_factor(&sq, &disk, Sign::Positive).unwrap().value - SQRT2).abs() < 1e-12);
}

#[test]
fn simplex_and_ball_reach_the_ceiling() {
    for n in [2, 3] {
        let (g, bm) = distance_bounds(&ConvexBody::regular_simplex(n), &ConvexBody::euclidean_ball(n), &opts()).unwrap();
        assert!((g.upper - n as f64).abs() < 1e-5, "n={n}: {}", g.upper);
        assert!(bm.upper <= n as f64 + 1e-5);
        assert_eq!(g.upper_status, Status::Certified);
    }
}

#[test]
fn square_and_disk_give_sqrt_two() {
    let (sq, disk) = (ConvexBody::cube(2), ConvexBody::euclidean_ball(2));
    let (g, bm) = distance_bounds(&sq, &disk, &opts()).unwrap();
    assert!((g.upper - SQRT2).abs() < 1e-5, "{}", g.upper);
    assert!((bm.upper - SQRT2).abs() < 1e-5, "{}", bm.upper);
    assert_replays(&sq, &disk, &g);
    assert_replays(&sq, &disk, &bm);
}

#[test]
fn body_against_itself_is_one() {
    for body in [random_pair(2, 4, 0).0, random_pair(3, 4, 1).1, ConvexBody::euclidean_ball(3)] {
        let (g, bm) = distance_bounds(&body, &body, &opts()).unwrap();
        assert!((g.upper - 1.0).abs() < 1e-6, "{}", g.upper);
        assert!((bm.upper - 1.0).abs() < 1e-6, "{}", bm.upper);
        assert!((distance_lower_via_asymmetry(&body, &body).unwrap().value - 1.0).abs() < 1e-9);
    }
}

#[test]
fn asymmetry_lower_bounds() {
    let lb = distance_lower_via_asymmetry(&triangle(), &ConvexBody::cube(2)).unwrap();
    assert!((lb.value - 2.0).abs() < 1e-9 && lb.certified && lb.symmetric_pair);
    // Cutting a corner off the triangle lowers s(K) below n.
    let cut = ConvexBody::vpolytope(vec![
        vector(&[0.0, 0.0]),
        vector(&[1.0, 0.0]),
        vector(&[0.0, 0.9]),
        vector(&[0.1, 0.9]),
    ])
    .unwrap();
    let s = bmstab::bodies::asymmetry_constant(&cut).unwrap().value;
    assert!(s < 2.0);
    let lb = distance_lower_via_asymmetry(&cut, &ConvexBody::euclidean_ball(2)).unwrap();
    assert!((lb.value - s).abs() < 1e-12);
    let bm = banach_mazur_upper(&cut, &ConvexBody::euclidean_ball(2), &opts()).unwrap();
    assert!(bm.lower <= bm.upper + 1e-9);
}

#[test]
fn triangle_in_square_brackets() {
    let (g, bm) = distance_bounds(&triangle(), &ConvexBody::cube(2), &opts()).unwrap();
    assert!((bm.lower - 2.0).abs() < 1e-9);
    // d_G = d because the square is symmetric, and d(triangle, square) = 2.
    assert!((bm.upper - 2.0).abs() < 1e-6, "{}", bm.upper);
    assert!((g.upper - 2.0).abs() < 1e-6, "{}", g.upper);
    assert_eq!(g.lower_status, Status::Certified);
}

#[test]
fn grunbaum_bound_is_affinely_invariant() {
    for index in 0..4 {
        let (k, l) = random_pair(2, 31, index);
        let mut rng = rng_for(32, index);
        let lin = Matrix::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.0 } + 0.5 * gaussian(&mut rng));
        let t = AffineMap::new(lin, Vector::from_fn(2, |_, _| gaussian(&mut rng))).unwrap();
        let a = grunbaum_upper(&k, &l, &opts()).unwrap();
        let b = grunbaum_upper(&k.transform(&t), &l.transform(&t), &opts()).unwrap();
        assert!((a.upper - b.upper).abs() < 1e-5, "{} vs {}", a.upper, b.upper);
    }
}

#[test]
fn json_report_carries_witness_and_telemetry() {
    let (k, l) = random_pair(2, 3, 3);
    let g = grunbaum_upper(&k, &l, &opts()).unwrap();
    let j = g.to_json_value();
    assert_eq!(j["kind"], "grunbaum");
    assert!(j["witness"]["map"]["linear"][1].is_array());
    assert!(j["witness"]["sign"] == 1 || j["witness"]["sign"] == -1);
    assert!(j["telemetry"]["positioning"]["log_det"].is_number());
    assert_eq!(j["telemetry"]["factors_at_shift"].as_array().unwrap().len(), 2);
}

#[test]
fn proximity_of_regular_simplex_is_one() {
    for n in [2, 3] {
        let s = ConvexBody::regular_simplex(n);
        let r = john_position(&s, &ConvexBody::euclidean_ball(n), &SolverOptions::default()).unwrap();
        let p = simplex_proximity(&s, Some(&r.certificate)).unwrap();
        assert!((p.upper - 1.0).abs() < 1e-6, "{}", p.upper);
        let w = p.witness.as_ref().unwrap();
        let template = ConvexBody::regular_simplex(n);
        for c in replay_witness(&template, &s, w).unwrap() {
            assert_eq!(c, Containment::CertifiedYes);
        }
    }
}

#[test]
fn proximity_of_disk_without_certificate() {
    let p = simplex_proximity(&ConvexBody::euclidean_ball(2), None).unwrap();
    assert!(p.upper <= 2.0 + 1e-6, "{}", p.upper);
    assert!(p.upper >= 2.0 - 1e-6);
}

#[test]
fn proximity_of_jittered_simplex_is_linear_in_jitter() {
    let eta = 1e-3;
    for index in 0..5 {
        let k = jittered_simplex(3, eta, 11, index);
        let r = john_position(&k, &ConvexBody::euclidean_ball(3), &SolverOptions::default()).unwrap();
        let with_cert = simplex_proximity(&k, Some(&r.certificate)).unwrap().upper;
        let direct = simplex_proximity(&k, None).unwrap().upper;
        // The contact simplex is K itself; direct positioning agrees.
        assert!((with_cert - 1.0).abs() < 1e-9, "{with_cert}");
        assert!(direct <= 1.0 + 10.0 * eta, "{direct}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_pairs_respect_bound_ordering(index in 0u64..10_000, n in 2usize..4) {
        let (k, l) = random_pair(n, 4242, index);
        let (g, bm) = distance_bounds(&k, &l, &opts()).unwrap();
        prop_assert!(g.upper <= n as f64 + 1e-5, "{}", g.upper);
        prop_assert!(g.upper <= bm.upper + 1e-9);
        prop_assert!(bm.lower <= bm.upper + 1e-6);
        prop_assert!(g.lower <= g.upper + 1e-9);
        let factors = g.telemetry.factors_at_shift.unwrap();
        prop_assert!(factors[1] <= n as f64 + 1e-5, "{:?}", factors);
        for b in [&g, &bm] {
            prop_assert_eq!(b.upper_status, Status::Certified);
            for c in replay_witness(&k, &l, b.witness.as_ref().unwrap()).unwrap() {
                prop_assert!(c.is_yes());
            }
        }
    }
}
