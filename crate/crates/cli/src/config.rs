//! Run configuration: defaults, then the optional TOML file, then flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use bmstab::acceptance::AcceptanceConfig;
use bmstab::distance::DistanceOptions;
use bmstab::john::{SolverOptions, CONTACT_TOL, VERIFY_TOL};
use bmstab::moduli::ModulusBudget;
use bmstab::stability::{StabilityKind, StabilityOptions};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Distance,
    John,
    Modulus,
    Stability,
    Selftest,
}

/// Every configurable value, all optional; one copy comes from the config
/// file and one from the flags.
#[derive(Debug, Clone, Default, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Body files in JSON.
    #[arg(long, num_args = 1.., global = true)]
    pub input: Option<Vec<PathBuf>>,
    /// Dimension of generated instances.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Newton-decrement stopping tolerance of the positioning solver.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol_solver: Option<f64>,
    /// Boundary slack for contact points.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol_contact: Option<f64>,
    /// Tolerance of the decomposition-certificate checks.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol_certificate: Option<f64>,
    /// Number of intervals of the modulus t-grid on [0, 1].
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Rotated starts per orientation of the positioning solver.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Newton iterations per barrier step.
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Stability case: general, symmetric or ellipsoid.
    #[arg(long, global = true)]
    pub kind: Option<String>,
    /// Generated stability instances.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Vertex jitter of generated simplices.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    /// Exponent of the generated ball `L = B_p^n`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Seeded 2D pairs in the self-test.
    #[arg(long, global = true)]
    pub pairs_2d: Option<usize>,
    /// Seeded 3D pairs in the self-test.
    #[arg(long, global = true)]
    pub pairs_3d: Option<usize>,
}

impl Settings {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Field-wise `self` over `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            input: self.input.or(base.input),
            n: self.n.or(base.n),
            seed: self.seed.or(base.seed),
            tol_solver: self.tol_solver.or(base.tol_solver),
            tol_contact: self.tol_contact.or(base.tol_contact),
            tol_certificate: self.tol_certificate.or(base.tol_certificate),
            grid: self.grid.or(base.grid),
            restarts: self.restarts.or(base.restarts),
            iterations: self.iterations.or(base.iterations),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            kind: self.kind.or(base.kind),
            count: self.count.or(base.count),
            eta: self.eta.or(base.eta),
            p: self.p.or(base.p),
            pairs_2d: self.pairs_2d.or(base.pairs_2d),
            pairs_3d: self.pairs_3d.or(base.pairs_3d),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub n: usize,
    pub seed: u64,
    pub tol_solver: f64,
    pub tol_contact: f64,
    pub tol_certificate: f64,
    pub grid: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub kind: StabilityKind,
    pub count: usize,
    pub eta: f64,
    pub p: f64,
    pub pairs_2d: usize,
    pub pairs_3d: usize,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Input(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(command: Command, s: Settings) -> Result<Self, CliError> {
        let solver = SolverOptions::default();
        let acceptance = AcceptanceConfig::default();
        let kind = match &s.kind {
            Some(k) => k.parse().map_err(|e: bmstab::Error| CliError::Input(e.to_string()))?,
            None => StabilityKind::Ellipsoid,
        };
        let cfg = RunConfig {
            command,
            inputs: s.input.unwrap_or_default(),
            n: s.n.unwrap_or(2),
            seed: s.seed.unwrap_or(if command == Command::Selftest { acceptance.seed } else { 0 }),
            tol_solver: positive("tol-solver", s.tol_solver.unwrap_or(solver.decrement_tol))?,
            tol_contact: positive("tol-contact", s.tol_contact.unwrap_or(CONTACT_TOL))?,
            tol_certificate: positive("tol-certificate", s.tol_certificate.unwrap_or(VERIFY_TOL))?,
            grid: s.grid.unwrap_or(10),
            restarts: s.restarts.unwrap_or(solver.restarts),
            iterations: s.iterations.unwrap_or(solver.max_newton),
            out: s.out,
            format: s.format.unwrap_or(Format::Json),
            kind,
            count: s.count.unwrap_or(10),
            eta: s.eta.unwrap_or(acceptance.jitter),
            p: s.p.unwrap_or(2.0),
            pairs_2d: s.pairs_2d.unwrap_or(acceptance.pairs_2d),
            pairs_3d: s.pairs_3d.unwrap_or(acceptance.pairs_3d),
        };
        if !(2..=6).contains(&cfg.n) {
            return Err(CliError::Input(format!("n must lie in [2, 6], got {}", cfg.n)));
        }
        if cfg.grid == 0 || cfg.restarts == 0 || cfg.iterations == 0 {
            return Err(CliError::Input("grid, restarts and iterations must be positive".into()));
        }
        if !(cfg.eta >= 0.0 && cfg.eta.is_finite()) {
            return Err(CliError::Input(format!("eta must be finite and ≥ 0, got {}", cfg.eta)));
        }
        if !(cfg.p > 1.0 && cfg.p.is_finite()) {
            return Err(CliError::Input(format!("p must lie in (1, ∞), got {}", cfg.p)));
        }
        Ok(cfg)
    }

    /// The seed keys instance generation only; solver restarts keep their
    /// own fixed seed so a body pair gives the same answer under any run seed.
    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            decrement_tol: self.tol_solver,
            contact_tol: self.tol_contact,
            restarts: self.restarts,
            max_newton: self.iterations,
            ..SolverOptions::default()
        }
    }

    pub fn distance(&self) -> DistanceOptions {
        DistanceOptions { solver: self.solver(), ..DistanceOptions::default() }
    }

    pub fn stability(&self) -> StabilityOptions {
        StabilityOptions { solver: self.solver(), modulus: ModulusBudget::default(), ..StabilityOptions::default() }
    }

    /// The acceptance counts and the seed come from the run; tolerances of
    /// the criteria themselves are fixed.
    pub fn acceptance(&self) -> AcceptanceConfig {
        AcceptanceConfig {
            seed: self.seed,
            pairs_2d: self.pairs_2d,
            pairs_3d: self.pairs_3d,
            solver: self.solver(),
            ..AcceptanceConfig::default()
        }
    }

    /// `t_i = i/grid`, `i = 0..=grid`.
    pub fn t_grid(&self) -> Vec<f64> {
        (0..=self.grid).map(|i| i as f64 / self.grid as f64).collect()
    }
}
