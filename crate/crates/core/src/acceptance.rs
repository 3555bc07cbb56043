//! The acceptance suite as library calls, shared by the `acceptance` test
//! target and the CLI `selftest` command. Each criterion returns one
//! [`Outcome`]; tolerances are fixed here and not configurable.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{contains, Containment, ConvexBody};
use crate::distance::{grunbaum_upper, DistanceBound, DistanceOptions};
use crate::error::Result;
use crate::instances::{jittered_simplex, random_pair};
use crate::john::{barrier_gradient_check, john_position, verify_decomposition, SolverOptions};
use crate::linalg::vector;
use crate::moduli::{
    lp_modulus_exact, modulus_estimate, validate_shift_lemmas, ModulusBudget, ModulusCurve,
};
use crate::stability::{
    case3_exact, diameter_bound, epsilon0, lp_corollary, lp_corollary_branch, solve_r, validate_stability_with, LpBranch,
    StabilityCase, StabilityKind, StabilityOptions, StabilityReport, StabilityStatus,
};

#[derive(Debug, Clone)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub pairs_2d: usize,
    pub pairs_3d: usize,
    pub stability_instances: usize,
    pub jitter: f64,
    pub solver: SolverOptions,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig {
            seed: 2024,
            pairs_2d: 100,
            pairs_3d: 30,
            stability_instances: 50,
            jitter: 1e-6,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    /// One report line: `criterion N [PASS|FAIL] title: detail (t s)`.
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {} ({:.1} s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }
}

fn timed(id: u8, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    Outcome { id, title, pass, detail, seconds: start.elapsed().as_secs_f64() }
}

fn instance_pairs(cfg: &AcceptanceConfig) -> Vec<(usize, u64)> {
    (0..cfg.pairs_2d as u64).map(|i| (2, i)).chain((0..cfg.pairs_3d as u64).map(|i| (3, i))).collect()
}

fn distance_opts(cfg: &AcceptanceConfig) -> DistanceOptions {
    DistanceOptions { solver: cfg.solver.clone(), ..DistanceOptions::default() }
}

/// Grünbaum bounds for the seeded pair set; shared by criteria 1 and 9.
pub fn seeded_distance_reports(cfg: &AcceptanceConfig) -> Vec<(usize, u64, Result<DistanceBound>)> {
    let opts = distance_opts(cfg);
    instance_pairs(cfg)
        .into_par_iter()
        .map(|(n, i)| {
            let (k, l) = random_pair(n, cfg.seed, i);
            (n, i, grunbaum_upper(&k, &l, &opts))
        })
        .collect()
}

pub fn criterion1(reports: &[(usize, u64, Result<DistanceBound>)], seconds: f64) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (n, i, r) in reports {
        match r {
            Ok(d) => {
                let excess = d.upper - *n as f64;
                worst = worst.max(excess);
                if excess > 1e-5 {
                    failures.push(format!("n={n} #{i}: {}", d.upper));
                }
            }
            Err(e) => failures.push(format!("n={n} #{i}: {e}")),
        }
    }
    let pass = failures.is_empty() && seconds < 300.0;
    let mut detail = format!("{} pairs, max(G − n) = {worst:.3e}", reports.len());
    if !failures.is_empty() {
        detail += &format!(", failures: {}", failures.join("; "));
    }
    if seconds >= 300.0 {
        detail += ", over the 5 min budget";
    }
    Outcome { id: 1, title: "Grünbaum ceiling", pass, detail, seconds }
}

pub fn criterion2(cfg: &AcceptanceConfig) -> Outcome {
    timed(2, "equality case", || {
        let opts = distance_opts(cfg);
        let mut parts = Vec::new();
        let mut pass = true;
        for n in [2, 3] {
            match grunbaum_upper(&ConvexBody::regular_simplex(n), &ConvexBody::euclidean_ball(n), &opts) {
                Ok(d) => {
                    pass &= (d.upper - n as f64).abs() <= 1e-5;
                    parts.push(format!("n={n}: G = {:.9}", d.upper));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("n={n}: {e}"));
                }
            }
        }
        (pass, parts.join(", "))
    })
}

pub fn criterion3(cfg: &AcceptanceConfig) -> Outcome {
    timed(3, "John certificates", || {
        let rows: Vec<std::result::Result<(f64, f64), String>> = instance_pairs(cfg)
            .into_par_iter()
            .map(|(n, i)| {
                let (k, l) = random_pair(n, cfg.seed, i);
                let r = john_position(&k, &l, &cfg.solver).map_err(|e| format!("n={n} #{i}: {e}"))?;
                let c = &r.certificate;
                let report = verify_decomposition(c, n, 1e-5);
                let residual = report.identity.value.max(report.sum_u.value).max(report.sum_v.value);
                let sum = report.weight_sum.value;
                let z = r.shift();
                let kz = r.image.shift(&z);
                let lz = l.shift(&z);
                let inner = contains(&kz, &lz, 1e-7).map_err(|e| e.to_string())?;
                let outer = contains(&lz, &kz.scale(-(n as f64)).map_err(|e| e.to_string())?, 1e-7).map_err(|e| e.to_string())?;
                let ok = residual <= 1e-5
                    && sum <= 1e-4
                    && c.len() <= n * n + n
                    && inner == Containment::CertifiedYes
                    && outer == Containment::CertifiedYes;
                if ok {
                    Ok((residual, sum))
                } else {
                    Err(format!("n={n} #{i}: residual {residual:e}, |Σa − n| {sum:e}, m {}, sandwich {inner:?}/{outer:?}", c.len()))
                }
            })
            .collect();
        let failures: Vec<&String> = rows.iter().filter_map(|r| r.as_ref().err()).collect();
        let (res, sum) = rows.iter().flatten().fold((0.0f64, 0.0f64), |(a, b), &(r, s)| (a.max(r), b.max(s)));
        let mut detail = format!("{} certificates, max residual {res:.2e}, max |Σa − n| {sum:.2e}", rows.len());
        if !failures.is_empty() {
            detail += &format!(", failures: {}", failures.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; "));
        }
        (failures.is_empty(), detail)
    })
}

pub fn criterion4() -> Outcome {
    timed(4, "moduli closed forms", || {
        let mut jobs: Vec<(f64, f64)> = Vec::new();
        for p in [1.5, 2.0, 3.0, 4.0] {
            for t in [0.2, 0.5, 0.8, 1.0] {
                jobs.push((p, t));
            }
        }
        let rows: Vec<std::result::Result<(bool, f64), String>> = jobs
            .par_iter()
            .map(|&(p, t)| {
                let body = ConvexBody::lp_ball(2, p).map_err(|e| e.to_string())?;
                let e = modulus_estimate(&body, t).map_err(|e| e.to_string())?;
                let exact = lp_modulus_exact(p, t).map_err(|e| e.to_string())?;
                let mut ok = true;
                let mut width = 0.0;
                if p >= 2.0 {
                    width = (exact - e.lower).max(e.upper - exact);
                    ok &= e.lower <= exact + 1e-12 && exact <= e.upper + 1e-12 && width <= 1e-3;
                }
                if p <= 2.0 {
                    ok &= (p - 1.0) * t * t / 8.0 <= e.upper;
                }
                if ok {
                    Ok((ok, width))
                } else {
                    Err(format!("p={p} t={t}: [{}, {}] vs {exact}", e.lower, e.upper))
                }
            })
            .collect();
        let failures: Vec<&String> = rows.iter().filter_map(|r| r.as_ref().err()).collect();
        let width = rows.iter().flatten().fold(0.0f64, |a, &(_, w)| a.max(w));
        let mut detail = format!("{} estimates, max bracket distance {width:.2e}", rows.len());
        if !failures.is_empty() {
            detail += &format!(", failures: {}", failures.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; "));
        }
        (failures.is_empty(), detail)
    })
}

fn shift_bodies() -> Result<Vec<(&'static str, ConvexBody, ModulusCurve, ModulusCurve)>> {
    let grid = [0.0, 0.01, 0.1, 0.5, 1.0];
    let budget = ModulusBudget::default();
    let mut out = Vec::new();
    for (name, body) in [("square", ConvexBody::cube(2)), ("triangle", ConvexBody::regular_simplex(2))] {
        let curve = ModulusCurve::estimate(&body, &grid, &budget)?;
        let polar = ModulusCurve::estimate(&body.polar()?, &grid, &budget)?;
        out.push((name, body, curve, polar));
    }
    for (name, p) in [("B_1.5", 1.5), ("B_2", 2.0), ("B_3", 3.0), ("B_4", 4.0)] {
        out.push((name, ConvexBody::lp_ball(2, p)?, ModulusCurve::lp(2, p, &[])?, ModulusCurve::lp(2, p / (p - 1.0), &[])?));
    }
    Ok(out)
}

pub fn criterion5() -> Outcome {
    timed(5, "shift lemmas", || {
        let bodies = match shift_bodies() {
            Ok(b) => b,
            Err(e) => return (false, format!("curve construction failed: {e}")),
        };
        let dir = vector(&[0.3f64.cos(), 0.3f64.sin()]);
        let budget = ModulusBudget::upper_only();
        let rows: Vec<(String, std::result::Result<(usize, usize, f64), String>)> = bodies
            .par_iter()
            .map(|(name, l, curve, polar)| {
                let r = validate_shift_lemmas(l, curve, polar, &dir, &[0.3, 0.6, 0.9], &[0.2, 0.5, 0.8], &budget)
                    .map(|checks| {
                        let slack = checks
                            .iter()
                            .map(|c| (c.gauge_modulus - c.gauge_bound).min(c.polar_modulus - c.polar_bound))
                            .fold(f64::INFINITY, f64::min);
                        (checks.len(), checks.iter().filter(|c| !c.holds).count(), slack)
                    })
                    .map_err(|e| e.to_string());
                (name.to_string(), r)
            })
            .collect();
        let mut pass = true;
        let mut total = 0;
        let mut parts = Vec::new();
        for (name, r) in &rows {
            match r {
                Ok((len, bad, slack)) => {
                    total += len;
                    pass &= *bad == 0 && *len == 9;
                    parts.push(format!("{name} {bad}/{len} (slack {slack:.1e})"));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("{name}: {e}"));
                }
            }
        }
        (pass, format!("{total} grid points, violations: {}", parts.join(", ")))
    })
}

pub fn criterion6() -> Outcome {
    timed(6, "case-3 exactness", || {
        let mut bad = Vec::new();
        for n in 2..=10 {
            let ok3 = case3_exact(n).map(|c| c.iter().all(|c| c.holds)).unwrap_or(false);
            let okd = diameter_bound(n).map(|(_, t)| t.iter().all(|c| c.holds)).unwrap_or(false);
            if !(ok3 && okd) {
                bad.push(n);
            }
        }
        let growth = diameter_bound(2)
            .ok()
            .and_then(|(_, t)| t.into_iter().find(|c| c.label.starts_with("40n³r")))
            .map(|c| c.lhs)
            .unwrap_or_default();
        let pass = bad.is_empty() && growth == "5/8";
        (pass, format!("n = 2..10 exact, 40n³(16ε)^(1/3) = {growth}, failing n: {bad:?}"))
    })
}

pub fn criterion7() -> Outcome {
    timed(7, "ℓ_p corollary consistency", || {
        let mut fails = Vec::new();
        for n in 2..=6 {
            let Ok(e0) = epsilon0(StabilityKind::Ellipsoid, n, None) else { continue };
            for eps in [e0, 1e-3 * e0, 1e-9 * e0] {
                let ell = StabilityCase::new(StabilityKind::Ellipsoid, n, eps, None).ok().and_then(|c| c.bound);
                let small = lp_corollary_branch(LpBranch::Small, 2.0, n, eps);
                let large = lp_corollary_branch(LpBranch::Large, 2.0, n, eps);
                match (ell, small, large) {
                    (Some(e), Ok(s), Ok(l)) => {
                        let same = (s.exponent - l.exponent).abs() < 1e-15 && (l.exponent - 1.0 / 3.0).abs() < 1e-15;
                        if !(same && e <= s.bound && s.bound <= l.bound) {
                            fails.push(format!("p=2 n={n} ε={eps:e}"));
                        }
                    }
                    _ => fails.push(format!("p=2 n={n}: evaluation failed")),
                }
            }
        }
        let mut worst = 0.0f64;
        for p in [2.5, 4.0] {
            for n in [2, 3, 4] {
                let q = p / (p - 1.0);
                let res = (|| -> Result<(f64, f64)> {
                    let c = lp_corollary(p, n, 0.0)?;
                    let c = lp_corollary(p, n, 1e-2 * c.threshold)?;
                    let curve = ModulusCurve::lp_exact(n, q, &[])?;
                    Ok((solve_r(StabilityKind::Symmetric, n, c.epsilon, Some(&curve))?, c.r_stated))
                })();
                match res {
                    Ok((r, stated)) => {
                        worst = worst.max(r / stated);
                        if r > stated * (1.0 + 1e-9) {
                            fails.push(format!("p={p} n={n}: {r:e} > {stated:e}"));
                        }
                    }
                    Err(e) => fails.push(format!("p={p} n={n}: {e}")),
                }
            }
        }
        (fails.is_empty(), format!("p=2 ordering ellipsoid ≤ small ≤ large, max solve_r/r_stated = {worst:.4}, failures: {fails:?}"))
    })
}

/// Stability reports for the seeded jittered simplices against `B_2^3`.
pub fn jittered_reports(cfg: &AcceptanceConfig, count: usize) -> Vec<Result<StabilityReport>> {
    let l = ConvexBody::euclidean_ball(3);
    let opts = StabilityOptions { solver: cfg.solver.clone(), ..StabilityOptions::default() };
    (0..count as u64)
        .into_par_iter()
        .map(|i| validate_stability_with(&l, &jittered_simplex(3, cfg.jitter, cfg.seed, i), StabilityKind::Ellipsoid, None, &opts))
        .collect()
}

pub fn criterion8(cfg: &AcceptanceConfig) -> Outcome {
    timed(8, "end-to-end stability", || {
        let reports = jittered_reports(cfg, cfg.stability_instances);
        let mut counts = [0usize; 3];
        let mut errors = Vec::new();
        let mut worst = 0.0f64;
        for r in &reports {
            match r {
                Ok(rep) => {
                    counts[rep.status as usize] += 1;
                    if let (Some(p), Some(b)) = (rep.proximity, rep.bound) {
                        worst = worst.max(p - b);
                    }
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
        let opts = StabilityOptions { solver: cfg.solver.clone(), ..StabilityOptions::default() };
        let eq = validate_stability_with(
            &ConvexBody::euclidean_ball(3),
            &ConvexBody::regular_simplex(3),
            StabilityKind::Ellipsoid,
            None,
            &opts,
        );
        let (eq_ok, eq_text) = match eq {
            Ok(rep) => {
                let b = rep.bound.unwrap_or(f64::NAN);
                let p = rep.proximity.unwrap_or(f64::NAN);
                ((b - 1.0).abs() <= 1e-5 && (p - 1.0).abs() <= 1e-5, format!("equality bound {b}, proximity {p:.12}"))
            }
            Err(e) => (false, format!("equality instance: {e}")),
        };
        let pass = counts[StabilityStatus::Violation as usize] == 0
            && counts[StabilityStatus::NotApplicable as usize] == 0
            && errors.is_empty()
            && eq_ok;
        let detail = format!(
            "{} instances: {} pass, {} violations, {} not applicable, {} errors, max(proximity − bound) = {worst:.2e}; {eq_text}",
            reports.len(),
            counts[StabilityStatus::Pass as usize],
            counts[StabilityStatus::Violation as usize],
            counts[StabilityStatus::NotApplicable as usize],
            errors.len()
        );
        (pass, detail)
    })
}

/// Serialized outputs of a small rerunnable slice of criteria 1 and 8.
fn determinism_fingerprint(cfg: &AcceptanceConfig) -> String {
    let slice = AcceptanceConfig { pairs_2d: 4, pairs_3d: 2, ..cfg.clone() };
    let mut out = String::new();
    for (n, i, r) in seeded_distance_reports(&slice) {
        out += &format!("{n}/{i}: ");
        out += &match r {
            Ok(d) => d.to_json_value().to_string(),
            Err(e) => e.to_string(),
        };
        out.push('\n');
    }
    for r in jittered_reports(cfg, 4) {
        out += &match r {
            Ok(rep) => rep.to_json_value().to_string(),
            Err(e) => e.to_string(),
        };
        out.push('\n');
    }
    out
}

pub fn criterion9(cfg: &AcceptanceConfig, reports: &[(usize, u64, Result<DistanceBound>)]) -> Outcome {
    timed(9, "numerics hygiene", || {
        let mut parts = Vec::new();
        let mut pass = true;
        let pairs = [random_pair(2, cfg.seed, 0), random_pair(3, cfg.seed, 0)];
        let grad: Result<Vec<f64>> = pairs.iter().map(|(k, l)| barrier_gradient_check(k, l, 10, cfg.seed)).collect();
        match grad {
            Ok(errs) => {
                let worst = errs.iter().fold(0.0f64, |a, &b| a.max(b));
                pass &= worst <= 1e-4;
                parts.push(format!("gradient rel. error {worst:.2e} at 2×10 points"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("gradient check: {e}"));
            }
        }
        let misordered = reports.iter().filter(|(_, _, r)| r.as_ref().map(|d| d.lower > d.upper).unwrap_or(false)).count();
        pass &= misordered == 0;
        parts.push(format!("{misordered} of {} reports with lower > upper", reports.len()));
        let same = determinism_fingerprint(cfg) == determinism_fingerprint(cfg);
        pass &= same;
        parts.push(format!("rerun byte-identical: {same}"));
        (pass, parts.join(", "))
    })
}

/// Runs criteria 1–9 in order.
pub fn run_all(cfg: &AcceptanceConfig) -> Vec<Outcome> {
    let start = Instant::now();
    let reports = seeded_distance_reports(cfg);
    let c1 = criterion1(&reports, start.elapsed().as_secs_f64());
    vec![
        c1,
        criterion2(cfg),
        criterion3(cfg),
        criterion4(),
        criterion5(),
        criterion6(),
        criterion7(),
        criterion8(cfg),
        criterion9(cfg, &reports),
    ]
}

