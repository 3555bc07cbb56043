//! One function per subcommand. Each returns the rendered report and whether
//! every validation check held; errors are input or solver failures.

use std::path::Path;
use std::time::Instant;

use serde_json::json;

use bmstab::bodies::{Containment, ConvexBody, Shape};
use bmstab::distance::{distance_bounds, replay_witness, DistanceBound, REPLAY_TOL};
use bmstab::instances::jittered_simplex;
use bmstab::john::{john_position, verify_decomposition};
use bmstab::moduli::{lp_modulus_exact, ModulusBudget, ModulusCurve};
use bmstab::stability::{validate_batch, StabilityKind, StabilityReport, StabilityStatus};

use crate::config::RunConfig;
use crate::output::{float, opt_float, Output};
use crate::CliError;

pub struct Outcome {
    pub output: Output,
    pub valid: bool,
}

fn load(path: &Path) -> Result<ConvexBody, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let body = ConvexBody::from_json_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if !(2..=6).contains(&body.dim()) {
        return Err(CliError::Input(format!("{}: dimension {} outside [2, 6]", path.display(), body.dim())));
    }
    Ok(body)
}

fn load_exact(cfg: &RunConfig, count: usize) -> Result<Vec<ConvexBody>, CliError> {
    if cfg.inputs.len() != count {
        return Err(CliError::Input(format!("expected {count} input file(s), got {}", cfg.inputs.len())));
    }
    cfg.inputs.iter().map(|p| load(p)).collect()
}

fn load_pair(cfg: &RunConfig) -> Result<(ConvexBody, ConvexBody), CliError> {
    let mut bodies = load_exact(cfg, 2)?;
    let l = bodies.pop().expect("two bodies");
    let k = bodies.pop().expect("two bodies");
    if k.dim() != l.dim() {
        return Err(CliError::Input(format!("dimension mismatch: {} vs {}", k.dim(), l.dim())));
    }
    Ok((k, l))
}

fn replay_ok(k: &ConvexBody, l: &ConvexBody, d: &DistanceBound) -> Result<bool, CliError> {
    match &d.witness {
        Some(w) => Ok(replay_witness(k, l, w)?.iter().all(|c| *c == Containment::CertifiedYes)),
        None => Ok(false),
    }
}

/// Grünbaum and Banach–Mazur bounds for `K = input[0]`, `L = input[1]`,
/// each with its witness replayed.
pub fn cmd_distance(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (k, l) = load_pair(cfg)?;
    let (g, bm) = distance_bounds(&k, &l, &cfg.distance())?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut valid = true;
    for d in [&g, &bm] {
        let replayed = replay_ok(&k, &l, d)?;
        // Equal bounds may cross by rounding.
        let ordered = d.lower <= d.upper + REPLAY_TOL;
        valid &= replayed && ordered;
        let mut j = d.to_json_value();
        j["witness_replayed"] = json!(replayed);
        reports.push(j);
        rows.push(vec![
            serde_json::to_value(d.kind).expect("kind").as_str().unwrap_or_default().to_string(),
            d.dim.to_string(),
            float(d.upper),
            float(d.lower),
            serde_json::to_value(d.upper_status).expect("status").as_str().unwrap_or_default().to_string(),
            serde_json::to_value(d.lower_status).expect("status").as_str().unwrap_or_default().to_string(),
            replayed.to_string(),
        ]);
    }
    let header = ["kind", "dim", "upper", "lower", "upper_status", "lower_status", "witness_replayed"];
    Ok(Outcome {
        output: Output {
            json: json!({ "command": "distance", "k": k.to_json_value(), "l": l.to_json_value(), "bounds": reports }),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        },
        valid,
    })
}

/// John position of `K = input[0]` in `L = input[1]` with its verified
/// decomposition certificate.
pub fn cmd_john(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (k, l) = load_pair(cfg)?;
    let n = k.dim();
    let j = john_position(&k, &l, &cfg.solver())?;
    let cert = &j.certificate;
    let report = verify_decomposition(cert, n, cfg.tol_certificate);
    let mut header = vec!["index".to_string(), "weight".to_string()];
    header.extend((1..=n).map(|i| format!("u{i}")));
    header.extend((1..=n).map(|i| format!("v{i}")));
    let rows = (0..cert.len())
        .map(|i| {
            let mut row = vec![i.to_string(), float(cert.weights[i])];
            row.extend(cert.u[i].iter().map(|x| float(*x)));
            row.extend(cert.v[i].iter().map(|x| float(*x)));
            row
        })
        .collect();
    Ok(Outcome {
        output: Output {
            json: json!({
                "command": "john",
                "k": k.to_json_value(),
                "l": l.to_json_value(),
                "certificate": cert.to_json_value(),
                "verification": serde_json::to_value(&report).expect("report is serializable"),
                "tolerance": cfg.tol_certificate,
            }),
            header,
            rows,
        },
        valid: report.passed(),
    })
}

/// Exact modulus when the body is an origin-centred linear image of `B_p`.
fn closed_form_p(body: &ConvexBody) -> Option<f64> {
    if !body.pose().is_linear() {
        return None;
    }
    match body.shape() {
        Shape::LpBall { p } => Some(*p),
        Shape::Ellipsoid { .. } => Some(2.0),
        _ => None,
    }
}

/// Slack allowed between a closed form and a certified bracket.
const BRACKET_SLACK: f64 = 1e-9;

/// Estimated modulus curve of `input[0]` on the t-grid, plus the closed form
/// for ℓ_p balls and ellipsoids.
pub fn cmd_modulus(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let body = load_exact(cfg, 1)?.pop().expect("one body");
    let curve = ModulusCurve::estimate(&body, &cfg.t_grid(), &ModulusBudget::default())?;
    let p = closed_form_p(&body);
    let mut valid = true;
    let mut rows = Vec::new();
    let mut closed = Vec::new();
    for s in &curve.samples {
        let exact = p.map(|p| lp_modulus_exact(p, s.t)).transpose()?;
        valid &= s.lower <= s.upper;
        if let Some(e) = exact {
            valid &= e <= s.upper + BRACKET_SLACK && (!s.certified || s.lower <= e + BRACKET_SLACK);
        }
        closed.push(exact);
        rows.push(vec![float(s.t), float(s.lower), float(s.upper), s.certified.to_string(), opt_float(exact)]);
    }
    let header = ["t", "lower", "upper", "certified", "closed_form"];
    Ok(Outcome {
        output: Output {
            json: json!({
                "command": "modulus",
                "body": body.to_json_value(),
                "curve": curve.to_json_value(),
                "closed_form_p": p,
                "closed_form": closed,
            }),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        },
        valid,
    })
}

/// `(L, K)` pairs: consecutive `(K, L)` input files, or `count` jittered
/// simplices against `B_p^n`.
fn stability_pairs(cfg: &RunConfig) -> Result<(Vec<(ConvexBody, ConvexBody)>, &'static str), CliError> {
    if !cfg.inputs.is_empty() {
        if cfg.inputs.len() % 2 != 0 {
            return Err(CliError::Input("stability inputs come in (K, L) pairs".into()));
        }
        let bodies: Vec<ConvexBody> = cfg.inputs.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
        let pairs = bodies.chunks(2).map(|c| (c[1].clone(), c[0].clone())).collect();
        return Ok((pairs, "files"));
    }
    if cfg.kind == StabilityKind::Ellipsoid && cfg.p != 2.0 {
        return Err(CliError::Input(format!("the ellipsoid case needs p = 2, got {}", cfg.p)));
    }
    let l = if cfg.p == 2.0 { ConvexBody::euclidean_ball(cfg.n) } else { ConvexBody::lp_ball(cfg.n, cfg.p)? };
    let pairs = (0..cfg.count as u64).map(|i| (l.clone(), jittered_simplex(cfg.n, cfg.eta, cfg.seed, i))).collect();
    Ok((pairs, "jittered_simplex"))
}

fn status_name(s: StabilityStatus) -> &'static str {
    match s {
        StabilityStatus::Pass => "pass",
        StabilityStatus::Violation => "violation",
        StabilityStatus::NotApplicable => "not_applicable",
    }
}

/// Validates the stability bound per instance. A violation fails the run;
/// inapplicable instances are reported, not failed.
pub fn cmd_stability(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (pairs, source) = stability_pairs(cfg)?;
    for (l, k) in &pairs {
        if k.dim() != l.dim() {
            return Err(CliError::Input(format!("dimension mismatch: {} vs {}", k.dim(), l.dim())));
        }
    }
    let reports: Vec<StabilityReport> = validate_batch(&pairs, cfg.kind, &cfg.stability()).into_iter().collect::<Result<_, _>>()?;
    let count = |s: StabilityStatus| reports.iter().filter(|r| r.status == s).count();
    let (pass, violation, na) = (count(StabilityStatus::Pass), count(StabilityStatus::Violation), count(StabilityStatus::NotApplicable));
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                i.to_string(),
                r.kind.name().to_string(),
                r.n.to_string(),
                float(r.epsilon),
                opt_float(r.epsilon0),
                opt_float(r.r),
                opt_float(r.bound),
                opt_float(r.proximity),
                status_name(r.status).to_string(),
            ]
        })
        .collect();
    let header = ["index", "kind", "n", "epsilon", "epsilon0", "r", "bound", "proximity", "status"];
    let generator = if source == "files" {
        json!(null)
    } else {
        json!({ "family": source, "kind": cfg.kind, "n": cfg.n, "eta": cfg.eta, "p": cfg.p, "count": cfg.count, "seed": cfg.seed })
    };
    Ok(Outcome {
        output: Output {
            json: json!({
                "command": "stability",
                "inputs": cfg.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                "generator": generator,
                "summary": { "instances": reports.len(), "pass": pass, "violation": violation, "not_applicable": na },
                "reports": reports.iter().map(|r| r.to_json_value()).collect::<Vec<_>>(),
            }),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        },
        valid: violation == 0,
    })
}

/// Runs the acceptance suite, printing one line per criterion to stderr as
/// a progress log; the report carries the same lines.
pub fn cmd_selftest(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let outcomes = bmstab::acceptance::run_all(&cfg.acceptance());
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    eprintln!("selftest: {passed} of {} criteria pass ({:.1} s)", outcomes.len(), start.elapsed().as_secs_f64());
    let rows = outcomes
        .iter()
        .map(|o| vec![o.id.to_string(), o.title.to_string(), o.pass.to_string(), format!("{:.3}", o.seconds), o.detail.clone()])
        .collect();
    Ok(Outcome {
        output: Output {
            json: json!({
                "command": "selftest",
                "seed": cfg.seed,
                "criteria": serde_json::to_value(&outcomes).expect("outcomes are serializable"),
                "passed": passed,
            }),
            header: ["criterion", "title", "pass", "seconds", "detail"].iter().map(|s| s.to_string()).collect(),
            rows,
        },
        valid: passed == outcomes.len(),
    })
}
