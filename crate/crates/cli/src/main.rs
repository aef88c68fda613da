//! `gspear`: command-line front end for relative norms, numerical ranges,
//! spear checks and numerical indices.

mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gspear::geometry::{gnorm_dominance_check, is_smooth, max_atom_pairing, sample_atoms, default_t_grid, DEFAULT_SMOOTH_TOL};
use gspear::gnorm::{default_delta_grid, random_operators, GContext, Method};
use gspear::hilbert::{hilbert_analyze, BOUND_SLACK};
use gspear::indices::{estimate_index, index_chain_check, IndexKind};
use gspear::numrange::{nu_g, s_range_sample, v_range_sample, RangeKind};
use gspear::problem::ProblemFile;
use gspear::report::{flat_csv, range_csv, Json, ToJson};
use gspear::spear::{relative_spear_check, spear_check};
use gspear::{Error, OperatorSpec, SolverBudget};

#[derive(Parser)]
#[command(name = "gspear", version, about = "G-norms, G-numerical ranges, spear checks and numerical indices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ‖T‖_G with its witness.
    Gnorm(Common),
    /// ν_G(T) with its witness pair.
    Nu(Common),
    /// Samples of V_G(T), S_G(T) or S̃_G(T).
    Range {
        #[arg(long, value_enum, default_value = "vg")]
        kind: RangeArg,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Spear or relative spear check of G.
    Check {
        #[arg(long, value_enum, default_value = "spear")]
        kind: CheckArg,
        #[command(flatten)]
        common: Common,
    },
    /// Numerical index estimates.
    Index {
        #[arg(long, default_value = "all")]
        kind: String,
        #[command(flatten)]
        common: Common,
    },
    /// Attained subspace of a Euclidean G and its equivalent conditions.
    Hilbert {
        #[arg(long, default_value_t = 20)]
        deck_size: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Whether ‖·‖_G is smooth at T.
    Smooth(Common),
    /// Sampled dual-ball atoms against ‖T‖_G.
    Dual {
        #[arg(long, default_value_t = 10_000)]
        atoms: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Comparison modulus and ‖·‖_{G₁} ≤ ‖·‖_{G₂} on a deck.
    Dominate {
        #[arg(long)]
        g2: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Runs every executable theorem check and prints a pass/fail matrix.
    VerifyAll(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    problem: PathBuf,
    /// Name of the operator playing G (default: the file's `g`).
    #[arg(long)]
    g: Option<String>,
    /// Name of the target operator (default: the first operator other than G).
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated δ values for the relaxation method.
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    output: Option<OutputArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 when a result is not certified or did not converge.
    #[arg(long)]
    certified: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum RangeArg {
    Vg,
    Sg,
    Stilde,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Spear,
    Relative,
}

/// Failure modes mapped to exit statuses.
enum Failure {
    Validation(String),
    Invariant(String),
    NotConverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invariant(_) => 1,
            Failure::Validation(_) => 2,
            Failure::NotConverged(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

/// A report plus whether its asserted invariants held.
struct Report {
    json: Json,
    csv: Option<String>,
    ok: bool,
}

impl Report {
    fn new(json: Json) -> Self {
        Self { json, csv: None, ok: true }
    }

    fn checked(json: Json, ok: bool) -> Self {
        Self { json, csv: None, ok }
    }
}

/// Parsed problem plus resolved task parameters.
pub(crate) struct Setup {
    pub problem: ProblemFile,
    pub ctx: GContext,
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub method: Method,
    pub delta_grid: Vec<f64>,
    t_name: Option<String>,
}

impl Setup {
    fn target(&self) -> Outcome<OperatorSpec> {
        let name = self.t_name.as_deref().ok_or_else(|| {
            Failure::Validation(format!("operators: no target operator besides {:?}; pass --t NAME", self.problem.g))
        })?;
        Ok(self.problem.target(name)?)
    }

    /// Named targets followed by `samples` random operators.
    pub(crate) fn deck(&self, samples: usize) -> Outcome<Vec<OperatorSpec>> {
        let mut deck: Vec<OperatorSpec> =
            self.problem.t_names().into_iter().map(|n| self.problem.target(n)).collect::<gspear::Result<_>>()?;
        deck.extend(random_operators(self.ctx.g(), samples, self.seed));
        Ok(deck)
    }
}

fn load_problem(path: &Path) -> Outcome<ProblemFile> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    ProblemFile::parse(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn context(problem: &ProblemFile, tol: f64) -> Outcome<GContext> {
    let g = problem.g_operator()?;
    GContext::new(&g, tol, &SolverBudget::default()).map_err(|e| Failure::Validation(format!("operators.{}: {e}", problem.g)))
}

fn setup(c: &Common) -> Outcome<Setup> {
    let mut problem = load_problem(&c.problem)?;
    if let Some(g) = &c.g {
        problem.g = g.clone();
        problem.validate()?;
    }
    let task = problem.task.clone();
    let tol = c.tol.or(task.tol).unwrap_or(1e-8);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Validation(format!("--tol: must be positive, got {tol}")));
    }
    let method = match &c.method {
        Some(m) => m.parse().map_err(|e: Error| Failure::Validation(format!("--method: {e}")))?,
        None => task.method.unwrap_or(Method::Auto),
    };
    let delta_grid = c.delta_grid.clone().or(task.delta_grid).unwrap_or_else(default_delta_grid);
    if let Some(d) = delta_grid.iter().find(|&&d| !(d > 0.0 && d < 1.0)) {
        return Err(Failure::Validation(format!("--delta-grid: {d} is not in (0, 1)")));
    }
    let t_name = match &c.t {
        Some(t) => {
            problem.target(t)?;
            Some(t.clone())
        }
        None => problem.t_names().first().map(|s| s.to_string()),
    };
    let ctx = context(&problem, tol)?;
    Ok(Setup {
        problem,
        ctx,
        tol,
        seed: c.seed.or(task.seed).unwrap_or(0),
        samples: c.samples.or(task.samples).unwrap_or(100),
        method,
        delta_grid,
        t_name,
    })
}

fn require_certified(c: &Common, certified: bool, converged: bool, what: &str) -> Outcome<()> {
    if c.certified && !(certified && converged) {
        return Err(Failure::NotConverged(format!("{what}: result is not certified (converged: {converged})")));
    }
    Ok(())
}

fn run(command: &Command) -> Outcome<(Report, Common)> {
    let (report, common) = match command {
        Command::Gnorm(c) => {
            let s = setup(c)?;
            let t = s.target()?;
            let deltas = (s.ctx.resolve(s.method) == Method::Relaxation).then_some(s.delta_grid.as_slice());
            let r = s.ctx.g_norm_with(&t, s.method, deltas)?;
            require_certified(c, r.certified, r.converged, "gnorm")?;
            (Report::new(r.to_json()), c)
        }
        Command::Nu(c) => {
            let s = setup(c)?;
            let r = nu_g(&s.target()?, &s.ctx)?;
            require_certified(c, r.certified, true, "nu")?;
            (Report::new(r.to_json()), c)
        }
        Command::Range { kind, count, common: c } => {
            let s = setup(c)?;
            let t = s.target()?;
            let sample = match kind {
                RangeArg::Vg => v_range_sample(&t, &s.ctx, *count, s.seed)?,
                RangeArg::Sg => s_range_sample(&t, &s.ctx, RangeKind::SG, *count, s.seed)?,
                RangeArg::Stilde => s_range_sample(&t, &s.ctx, RangeKind::STilde, *count, s.seed)?,
            };
            let field = t.field();
            let summary = gspear::numrange::summarize(&sample, field);
            let json = sample.to_json().with("summary", summary.to_json());
            (Report { json, csv: Some(range_csv(&sample, field)), ok: true }, c)
        }
        Command::Check { kind, common: c } => {
            let s = setup(c)?;
            let r = match kind {
                CheckArg::Spear => spear_check(s.ctx.g(), s.samples, s.seed, s.tol, s.ctx.budget())?,
                CheckArg::Relative => relative_spear_check(&s.ctx, s.samples, s.seed)?,
            };
            (Report::new(r.to_json()), c)
        }
        Command::Index { kind, common: c } => {
            let s = setup(c)?;
            if kind == "all" {
                let ch = index_chain_check(&s.ctx, s.samples, s.seed)?;
                let ok = ch.product_ok && ch.collapse_ok;
                (Report::checked(ch.to_json(), ok), c)
            } else {
                let k: IndexKind = kind.parse().map_err(|e: Error| Failure::Validation(format!("--kind: {e}")))?;
                (Report::new(estimate_index(&s.ctx, k, s.samples, s.seed)?.to_json()), c)
            }
        }
        Command::Hilbert { deck_size, common: c } => {
            let s = setup(c)?;
            let deck = s.deck(*deck_size)?;
            let a = hilbert_analyze(&s.ctx, &deck, &s.delta_grid, s.tol, s.seed)?;
            let ok = a.conditions.agree()
                && a.distance_checks.iter().all(|d| d.violations == 0 && d.max_dist_sq <= d.bound + BOUND_SLACK);
            (Report::checked(a.to_json(), ok), c)
        }
        Command::Smooth(c) => {
            let s = setup(c)?;
            (Report::new(is_smooth(&s.target()?, &s.ctx, DEFAULT_SMOOTH_TOL)?.to_json()), c)
        }
        Command::Dual { atoms, common: c } => {
            let s = setup(c)?;
            let t = s.target()?;
            let set = sample_atoms(&s.ctx, *atoms, s.seed)?;
            let gn = s.ctx.g_norm(&t, Method::Auto)?.value;
            let m = max_atom_pairing(&t, &set);
            let ok = m <= gn + s.tol;
            let json = Json::obj()
                .with("atoms", set.len())
                .with("gnorm", gn)
                .with("max_pairing", m)
                .with("shortfall", gn - m)
                .with("consistent", ok);
            (Report::checked(json, ok), c)
        }
        Command::Dominate { g2, common: c } => {
            let s = setup(c)?;
            let p2 = load_problem(g2)?;
            let c2 = context(&p2, s.tol)?;
            s.ctx.g().check_compatible(c2.g()).map_err(|e| Failure::Validation(format!("{}: {e}", g2.display())))?;
            let r = gnorm_dominance_check(&s.ctx, &c2, &default_t_grid(), s.samples, s.seed)?;
            let ok = !r.modulus.limit_ok || r.dominance_ok;
            (Report::checked(r.to_json(), ok), c)
        }
        Command::VerifyAll(c) => {
            let s = setup(c)?;
            let (json, ok) = verify::verify_all(&s)?;
            (Report::checked(json, ok), c)
        }
    };
    Ok((report, common.clone()))
}

fn default_format(command: &Command) -> OutputArg {
    match command {
        Command::Range { .. } => OutputArg::Csv,
        _ => OutputArg::Json,
    }
}

fn configure_threads() -> Outcome<()> {
    let Ok(v) = std::env::var("GSPEAR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Validation(format!("GSPEAR_THREADS: expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Validation(format!("GSPEAR_THREADS: {e}")))
}

fn emit(report: &Report, common: &Common, format: OutputArg) -> Outcome<()> {
    let bytes = match format {
        OutputArg::Json => report.json.render(),
        OutputArg::Csv => report.csv.clone().unwrap_or_else(|| flat_csv(&report.json)),
    };
    match &common.out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::Validation(format!("--out {}: {e}", path.display()))),
        None => {
            print!("{bytes}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli.command)).and_then(|(report, common)| {
        let format = common.output.unwrap_or(default_format(&cli.command));
        emit(&report, &common, format)?;
        if report.ok {
            Ok(())
        } else {
            Err(Failure::Invariant("an asserted invariant failed; see the report".into()))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) => eprintln!("error: {m}"),
                Failure::Invariant(m) => eprintln!("invariant violated: {m}"),
                Failure::NotConverged(m) => eprintln!("not converged: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
