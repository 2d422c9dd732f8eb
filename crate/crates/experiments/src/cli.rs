//! The `ermtree` command line.
//!
//! Exit codes: 0 on success, 1 on invalid input (flags, model, parameters),
//! 2 when a run fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ermtree::dp::erm_backward_induction;
use ermtree::mcts::{AccMcts, ErmMcts, Planner, ScheduleSpec, SearchResult, DEFAULT_EXPLORATION};
use ermtree::mdp::parse_mdp;
use ermtree::{Mdp4, RiskParam, TabularMdp};
use serde::Serialize;

use crate::concentration::{run_concentration_suite, ConcentrationConfig};
use crate::config::{Algorithm, ExperimentConfig, MdpSource};
use crate::output::{self, Metadata};
use crate::seeds::seed_stream;
use crate::table::{run_convergence_curve_on, run_table1_on};
use crate::{ExpError, Result};

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "ERMTREE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ermtree", version, about = "Risk-averse planning with the entropic risk measure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact ERM-optimal values and policy by backward induction.
    Solve(SolveArgs),
    /// One search from a state.
    Plan(PlanArgs),
    /// Compare algorithms at a fixed search budget.
    Table1(TableArgs),
    /// Compare algorithms over a grid of search budgets.
    Curve(CurveArgs),
    /// Tail and rate checks on a two-armed Bernoulli bandit.
    Concentration(ConcentrationArgs),
    /// Check a model file and list every problem found.
    ValidateMdp { path: PathBuf },
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file, or `mdp4` for the built-in risky/safe benchmark.
    #[arg(long, default_value = "mdp4")]
    mdp: String,
    /// Tail probability of the benchmark's risky action.
    #[arg(long, default_value_t = Mdp4::default().epsilon)]
    epsilon: f64,
    /// Per-step reset probability of the benchmark.
    #[arg(long, default_value_t = Mdp4::default().reset_prob)]
    reset_prob: f64,
    /// Overrides the model's horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Overrides the model's discount factor.
    #[arg(long)]
    gamma: Option<f64>,
}

impl ModelArgs {
    fn source(&self) -> MdpSource {
        if self.mdp == "mdp4" {
            MdpSource::Mdp4 { epsilon: self.epsilon, reset_prob: self.reset_prob }
        } else {
            MdpSource::File { path: PathBuf::from(&self.mdp) }
        }
    }

    fn config(&self) -> ExperimentConfig {
        ExperimentConfig { mdp: self.source(), horizon: self.horizon, gamma: self.gamma, ..Default::default() }
    }

    fn resolve(&self) -> Result<TabularMdp> {
        self.config().resolve_mdp()
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    beta: f64,
    /// Also print the full value table as CSV.
    #[arg(long)]
    values: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Practical,
    Theoretical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SearchAlgo {
    ErmMcts,
    AccMcts,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start state; defaults to the model's initial state.
    #[arg(long)]
    state: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Practical)]
    mode: Mode,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Leaf exponent of the theoretical schedule.
    #[arg(long)]
    xi_terminal: Option<f64>,
    #[arg(long, value_enum, default_value_t = SearchAlgo::ErmMcts)]
    algo: SearchAlgo,
    /// Exploration constant of the accumulated-cost baseline.
    #[arg(long, default_value_t = DEFAULT_EXPLORATION)]
    exploration: f64,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Risk parameters, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0])]
    beta: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = Algorithm::ALL)]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 10_000)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    bootstrap_seed: u64,
    #[arg(long, default_value_t = DEFAULT_EXPLORATION)]
    exploration: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TableArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            betas: self.beta.clone(),
            algorithms: self.algorithms.clone(),
            iterations: self.iterations,
            seeds: self.seeds,
            bootstrap_resamples: self.bootstrap,
            level: self.level,
            bootstrap_seed: self.bootstrap_seed,
            exploration: self.exploration,
            eta: self.eta,
            ..self.model.config()
        }
    }
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Search budgets, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100, 1000])]
    grid: Vec<usize>,
}

#[derive(Debug, Args)]
struct ConcentrationArgs {
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Bernoulli cost probabilities of the arms, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.9])]
    arms: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    runs: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [100, 1000, 10_000])]
    grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 8.0])]
    z: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    eta_prime: f64,
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI with process stdout and stderr.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 1;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Solve(a) => solve(a, out),
        Command::Plan(a) => plan(a, out),
        Command::Table1(a) => table(a, None, out),
        Command::Curve(a) => table(a.table, Some(a.grid), out),
        Command::Concentration(a) => concentration(a, out),
        Command::ValidateMdp { path } => validate(&path, out),
    }
}

fn solve(a: SolveArgs, out: &mut dyn Write) -> Result<()> {
    let mdp = a.model.resolve()?;
    let beta = RiskParam::new(a.beta)?;
    let start = std::time::Instant::now();
    let (v, pi) = erm_backward_induction(&mdp, beta)?;
    writeln!(out, "value {}", v.value(0, mdp.initial_state))?;
    writeln!(out, "action {}", pi.action(0, mdp.initial_state))?;
    writeln!(out, "policy (one row per depth, one column per state)")?;
    for (h, row) in pi.actions.iter().enumerate() {
        let cols: Vec<String> = row.iter().map(|a| a.to_string()).collect();
        writeln!(out, "{h}: {}", cols.join(" "))?;
    }
    let table = |w: &mut dyn Write| -> Result<()> {
        writeln!(w, "depth,state,value,action")?;
        for (h, row) in v.values.iter().enumerate() {
            for (s, x) in row.iter().enumerate() {
                let action = pi.actions.get(h).map(|r| r[s].to_string()).unwrap_or_default();
                writeln!(w, "{h},{s},{x:?},{action}")?;
            }
        }
        Ok(())
    };
    if a.values {
        table(out)?;
    }
    if let Some(dir) = out_dir(a.out) {
        std::fs::create_dir_all(&dir)?;
        table(&mut std::fs::File::create(dir.join("values.csv"))?)?;
        #[derive(Serialize)]
        struct SolveConfig {
            mdp: MdpSource,
            horizon: usize,
            gamma: f64,
            beta: f64,
        }
        let cfg = SolveConfig { mdp: a.model.source(), horizon: mdp.horizon, gamma: mdp.gamma, beta: a.beta };
        let mut meta = Metadata::new("solve", cfg, start.elapsed().as_secs_f64());
        meta.model = Some((&mdp).into());
        output::write_metadata(&dir, &meta)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PlanRecord<'a> {
    algorithm: &'a str,
    beta: f64,
    state: usize,
    horizon: usize,
    seed: u64,
    #[serde(flatten)]
    result: SearchResult,
}

fn plan(a: PlanArgs, out: &mut dyn Write) -> Result<()> {
    let mdp = a.model.resolve()?;
    let beta = RiskParam::new(a.beta)?;
    let state = a.state.unwrap_or(mdp.initial_state);
    let spec = match a.mode {
        Mode::Practical => ScheduleSpec::Practical { eta: a.eta },
        Mode::Theoretical => ScheduleSpec::Theoretical {
            eta: a.eta,
            xi_terminal: a
                .xi_terminal
                .ok_or_else(|| ExpError::Config("--mode theoretical needs --xi-terminal".into()))?,
        },
    };
    let (name, mut planner): (&str, Box<dyn Planner + '_>) = match a.algo {
        SearchAlgo::ErmMcts => ("erm-mcts", Box::new(ErmMcts::new(&mdp, beta, spec)?)),
        SearchAlgo::AccMcts => ("acc-mcts", Box::new(AccMcts::new(&mdp, beta, a.exploration)?)),
    };
    let mut rng = seed_stream(&format!("plan/{name}"), a.seed);
    let result = planner.plan(state, mdp.horizon, a.iterations, &mut rng)?;
    let record = PlanRecord { algorithm: name, beta: a.beta, state, horizon: mdp.horizon, seed: a.seed, result };
    writeln!(out, "{}", serde_json::to_string(&record)?)?;
    Ok(())
}

fn table(a: TableArgs, grid: Option<Vec<usize>>, out: &mut dyn Write) -> Result<()> {
    let cfg = a.config();
    cfg.validate()?;
    let mdp = cfg.resolve_mdp()?;
    let (command, run) = match &grid {
        None => ("table1", run_table1_on(&mdp, &cfg)?),
        Some(g) => ("curve", run_convergence_curve_on(&mdp, &cfg, g)?),
    };
    output::write_summary_csv(&run, &mut *out)?;
    if let Some(dir) = out_dir(a.out) {
        output::write_table_run(&dir, command, &mdp, &run, grid.is_none())?;
    }
    Ok(())
}

fn concentration(a: ConcentrationArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = ConcentrationConfig {
        beta: a.beta,
        arm_probs: a.arms,
        runs: a.runs,
        grid: a.grid,
        z: a.z,
        eta_prime: a.eta_prime,
        confidence: a.confidence,
        seed: a.seed,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let report = run_concentration_suite(&cfg)?;
    writeln!(out, "mu_star {}", report.mu_star)?;
    writeln!(out, "n,mean_abs_error")?;
    for (n, e) in report.grid.iter().zip(&report.mean_abs_error) {
        writeln!(out, "{n},{e:?}")?;
    }
    match report.slope {
        Some(s) => writeln!(out, "slope {s}")?,
        None => writeln!(out, "slope undefined")?,
    }
    writeln!(out, "z,exceedances,runs,frequency,upper")?;
    for t in &report.tails {
        writeln!(out, "{:?},{},{},{:?},{:?}", t.z, t.exceedances, t.runs, t.frequency, t.upper)?;
    }
    writeln!(out, "tails non-increasing: {}", report.tails_non_increasing())?;
    writeln!(out, "tails below one at {} confidence: {}", cfg.confidence, report.tails_below_one())?;
    if let Some(dir) = out_dir(a.out) {
        #[derive(Serialize)]
        struct Record<'a> {
            config: &'a ConcentrationConfig,
            report: &'a crate::concentration::ConcentrationReport,
        }
        let meta = Metadata::new("concentration", Record { config: &cfg, report: &report }, start.elapsed().as_secs_f64());
        output::write_metadata(&dir, &meta)?;
    }
    Ok(())
}

fn validate(path: &Path, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| ExpError::Config(format!("{}: {e}", path.display())))?;
    let mdp = parse_mdp(&text)?;
    writeln!(
        out,
        "ok: {} states, {} actions, horizon {}, gamma {}",
        mdp.num_states, mdp.num_actions, mdp.horizon, mdp.gamma
    )?;
    Ok(())
}
