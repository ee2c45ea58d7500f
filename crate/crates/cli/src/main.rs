use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use merminlab::device::{
    enumerate_chains, extend_violating_chains, load_reference_table, path_check, Chain,
    ReferenceRow,
};
use merminlab::experiment::{
    build_report, phase_grid, resolve_chains, run_on_chains, sweep_phase, write_report_csv,
    write_sweep_csv, ChainResult, ChainSelection, ExperimentConfig, Mode,
};
use merminlab::fixtures::reference_csv;
use merminlab::mermin::{
    analytic_amplitude, build_recursive, canonical_operator, lhv_max_bruteforce, lr_bound,
    recursion_scale, MAX_LHV_QUBITS,
};
use merminlab::noise::NoiseSpec;
use merminlab::verify::{verify_with, VerifyOptions};
use serde::{Deserialize, Serialize};
use serde_json::json;

mod settings;

use settings::{read_noise, read_topology, seed_from_env, FileConfig, Format};

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser, Debug)]
#[command(name = "merminlab", version, about = "Mermin-operator experiments on simulated GHZ-like states")]
struct Cli {
    /// JSON file with defaults for any flag below
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed (falls back to the config file, then MERMINLAB_SEED, then 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per measurement setting [default: 1024]
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Repeats per chain [default: 5]
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// NoiseSpec JSON file
    #[arg(long, global = true, value_name = "JSON-FILE")]
    noise: Option<PathBuf>,
    /// Edge-list file (default: bundled 53-qubit map)
    #[arg(long, global = true, value_name = "EDGE-FILE")]
    topology: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout
    #[arg(short, long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the canonical M_n and M'_n
    BuildOp {
        #[arg(short, long)]
        n: Option<usize>,
        /// Print the unnormalized recursion instead
        #[arg(long)]
        recursive: bool,
    },
    /// <M_n> and <M'_n> over a phase grid
    SweepPhase {
        #[arg(short, long)]
        n: Option<usize>,
        /// Evenly spaced points on [0, 2pi) [default: 32]
        #[arg(long)]
        points: Option<usize>,
        /// Explicit phases (overrides --points)
        #[arg(long = "phi", value_delimiter = ',')]
        phis: Vec<f64>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Orthogonal-pair run over device chains
    Run {
        #[arg(short, long)]
        n: Option<usize>,
        /// `all` or comma-separated chains such as 29-36,36-32
        #[arg(long)]
        chains: Option<String>,
        /// Phase [default: phi_max(n)]
        #[arg(long)]
        phi: Option<f64>,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// List simple paths of n qubits, or grow violating chains by one qubit
    EnumerateChains {
        #[arg(short, long)]
        n: Option<usize>,
        /// JSON output of a previous `run`; extend its chains above --threshold
        #[arg(long, value_name = "FILE")]
        extend_from: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        /// Report bundled reference rows that are not paths of the topology
        #[arg(long)]
        path_check: bool,
    },
    /// Brute-force local-realistic maximum of M_n
    LhvBound {
        #[arg(short, long)]
        n: Option<usize>,
    },
    /// Run the self-check suite; exits 1 on any failure
    Verify {
        /// Seeds per grid point in the sampled checks [default: 50]
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Ranked report from the JSON output of `run`
    Report {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[command(flatten)]
        report: ReportArgs,
    },
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Depolarizing trajectories [default: 128]
    #[arg(long)]
    trajectories: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// `builtin` or a reference CSV to join on chain
    #[arg(long)]
    reference: Option<String>,
    /// Annotation circle radius (repeatable)
    #[arg(long = "circle")]
    circles: Vec<f64>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sampled => Mode::Sampled,
        }
    }
}

/// What `run --format json` writes and `report` reads.
#[derive(Serialize, Deserialize)]
struct RunOutput {
    config: ExperimentConfig,
    results: Vec<ChainResult>,
}

struct Context {
    cli: Cli,
    file: FileConfig,
}

impl Context {
    fn seed(&self) -> CliResult<Option<u64>> {
        match self.cli.seed.or(self.file.seed) {
            Some(s) => Ok(Some(s)),
            None => seed_from_env(),
        }
    }

    fn format(&self, default: Format) -> Format {
        self.cli.format.or(self.file.format).unwrap_or(default)
    }

    fn noise(&self) -> CliResult<NoiseSpec> {
        if let Some(p) = &self.cli.noise {
            return read_noise(&settings::NoiseSource::File(p.clone()));
        }
        match &self.file.noise {
            Some(src) => read_noise(src),
            None => Ok(NoiseSpec::default()),
        }
    }

    fn n(&self, flag: Option<usize>) -> CliResult<usize> {
        flag.or(self.file.n)
            .ok_or_else(|| "the number of qubits is required (--n)".into())
    }

    fn experiment(&self, n: usize, phi: Option<f64>, sim: &SimArgs) -> CliResult<ExperimentConfig> {
        let mut c = ExperimentConfig::new(n);
        c.phi = phi.or(self.file.phi);
        if let Some(s) = self.cli.shots.or(self.file.shots) {
            c.shots = s;
        }
        if let Some(r) = self.cli.repeats.or(self.file.repeats) {
            c.repeats = r;
        }
        c.noise = self.noise()?;
        c.seed = self.seed()?.unwrap_or(0);
        if let Some(m) = sim.mode.map(Mode::from).or(self.file.mode) {
            c.mode = m;
        }
        if let Some(t) = sim.trajectories.or(self.file.trajectories) {
            c.trajectories = t;
        }
        c.validate()?;
        Ok(c)
    }

    fn reference(&self, args: &ReportArgs, n: usize) -> CliResult<Option<Vec<ReferenceRow>>> {
        let Some(src) = args.reference.as_ref().or(self.file.reference.as_ref()) else {
            return Ok(None);
        };
        let rows = if src == "builtin" {
            load_reference_table(reference_csv(n)?.as_bytes(), n)?
        } else {
            let file = fs::File::open(src).map_err(|e| format!("cannot open reference {src}: {e}"))?;
            load_reference_table(file, n)?
        };
        Ok(Some(rows))
    }

    fn circles(&self, args: &ReportArgs) -> Vec<f64> {
        if args.circles.is_empty() {
            self.file.circles.clone().unwrap_or_default()
        } else {
            args.circles.clone()
        }
    }

    fn emit(&self, bytes: &[u8]) -> CliResult<()> {
        match self.cli.output.as_ref().or(self.file.output.as_ref()) {
            Some(path) => write_file(path, bytes),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()).into())
}

fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner().map_err(|e| e.to_string())?)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn parse_chains(text: &str) -> CliResult<ChainSelection> {
    if text.trim() == "all" {
        return Ok(ChainSelection::All);
    }
    let chains = text
        .split(',')
        .map(|s| s.trim().parse::<Chain>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChainSelection::List(chains))
}

fn build_op(ctx: &Context, n: Option<usize>, recursive: bool) -> CliResult<()> {
    let n = ctx.n(n)?;
    let (pair, scale) = if recursive {
        (build_recursive(n)?, 1.0)
    } else {
        (canonical_operator(n)?, recursion_scale(n)?)
    };
    let bytes = match ctx.format(Format::Csv) {
        Format::Json => json_bytes(&json!({
            "n": n,
            "recursive": recursive,
            "recursion_scale": scale,
            "m": pair.m,
            "m_prime": pair.m_prime,
        }))?,
        Format::Csv => {
            let rows = [("M", &pair.m), ("M'", &pair.m_prime)]
                .into_iter()
                .flat_map(|(name, op)| {
                    op.iter()
                        .map(move |(s, c)| vec![name.to_string(), s.to_string(), c.to_string()])
                })
                .collect::<Vec<_>>();
            csv_bytes(&["operator", "term", "coeff"], rows)?
        }
    };
    ctx.emit(&bytes)
}

fn sweep(ctx: &Context, n: Option<usize>, points: Option<usize>, phis: &[f64], sim: &SimArgs) -> CliResult<()> {
    let config = ctx.experiment(ctx.n(n)?, None, sim)?;
    let phis = if phis.is_empty() {
        phase_grid(points.or(ctx.file.points).unwrap_or(32))
    } else {
        phis.to_vec()
    };
    let rows = sweep_phase(&config, &phis)?;
    let bytes = match ctx.format(Format::Csv) {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            buf
        }
    };
    ctx.emit(&bytes)
}

fn report_bytes(
    results: &[ChainResult],
    reference: Option<&[ReferenceRow]>,
    circles: &[f64],
    format: Format,
) -> CliResult<Vec<u8>> {
    let report = build_report(results, reference, circles);
    match format {
        Format::Json => json_bytes(&report),
        Format::Csv => {
            let mut buf = Vec::new();
            write_report_csv(&report, reference.is_some(), &mut buf)?;
            Ok(buf)
        }
    }
}

fn run(ctx: &Context, n: Option<usize>, chains: Option<&str>, phi: Option<f64>, sim: &SimArgs, args: &ReportArgs) -> CliResult<()> {
    let n = ctx.n(n)?;
    let mut config = ctx.experiment(n, phi, sim)?;
    config.chains = match chains {
        Some(text) => parse_chains(text)?,
        None => ctx.file.chains.clone().unwrap_or_default(),
    };
    let graph = read_topology(ctx.cli.topology.as_deref().or(ctx.file.topology.as_deref()))?;
    let chains = resolve_chains(&config, &graph)?;
    let results = run_on_chains(&config, &chains)?;
    let bytes = match ctx.format(Format::Csv) {
        Format::Json => json_bytes(&RunOutput { config, results })?,
        Format::Csv => {
            let reference = ctx.reference(args, n)?;
            report_bytes(&results, reference.as_deref(), &ctx.circles(args), Format::Csv)?
        }
    };
    ctx.emit(&bytes)
}

fn report(ctx: &Context, input: &Path, args: &ReportArgs) -> CliResult<()> {
    let text = fs::read_to_string(input).map_err(|e| format!("cannot read {}: {e}", input.display()))?;
    let run: RunOutput = serde_json::from_str(&text)
        .map_err(|e| format!("{} is not the JSON output of `run`: {e}", input.display()))?;
    let reference = ctx.reference(args, run.config.n)?;
    let bytes = report_bytes(
        &run.results,
        reference.as_deref(),
        &ctx.circles(args),
        ctx.format(Format::Csv),
    )?;
    ctx.emit(&bytes)
}

fn enumerate(ctx: &Context, n: Option<usize>, extend_from: Option<&Path>, threshold: f64, check: bool) -> CliResult<()> {
    let graph = read_topology(ctx.cli.topology.as_deref().or(ctx.file.topology.as_deref()))?;
    let format = ctx.format(Format::Csv);
    if check {
        let ns: Vec<usize> = match n.or(ctx.file.n) {
            Some(n) => vec![n],
            None => (2..=7).collect(),
        };
        let mut issues = Vec::new();
        for n in ns {
            let rows = load_reference_table(reference_csv(n)?.as_bytes(), n)?;
            issues.extend(path_check(&graph, n, &rows));
        }
        let bytes = match format {
            Format::Json => json_bytes(&issues)?,
            Format::Csv => csv_bytes(
                &["n", "no", "chain", "missing_edges"],
                issues.iter().map(|i| {
                    let missing: Vec<String> =
                        i.missing_edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                    vec![i.n.to_string(), i.no.to_string(), i.chain.to_string(), missing.join(" ")]
                }),
            )?,
        };
        return ctx.emit(&bytes);
    }
    let chains = match extend_from {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let run: RunOutput = serde_json::from_str(&text)
                .map_err(|e| format!("{} is not the JSON output of `run`: {e}", path.display()))?;
            let prior: Vec<(Chain, f64)> = run
                .results
                .iter()
                .map(|r| (r.chain.clone(), r.stats.m_norm))
                .collect();
            extend_violating_chains(&prior, &graph, threshold)
        }
        None => {
            let n = ctx.n(n)?;
            if n < 2 {
                return Err("chains need at least two qubits".into());
            }
            enumerate_chains(&graph, n)
        }
    };
    let bytes = match format {
        Format::Json => json_bytes(&chains)?,
        Format::Csv => csv_bytes(&["chain"], chains.iter().map(|c| vec![c.to_string()]))?,
    };
    ctx.emit(&bytes)
}

fn lhv(ctx: &Context, n: Option<usize>) -> CliResult<()> {
    let ns: Vec<usize> = match n.or(ctx.file.n) {
        Some(n) => vec![n],
        None => (2..=MAX_LHV_QUBITS).collect(),
    };
    let mut rows = Vec::new();
    for n in ns {
        let found = lhv_max_bruteforce(&canonical_operator(n)?)?;
        rows.push(json!({
            "n": n,
            "lhv_bruteforce": found,
            "lr_bound": lr_bound(n),
            "quantum_max": analytic_amplitude(n),
        }));
    }
    let bytes = match ctx.format(Format::Csv) {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => csv_bytes(
            &["n", "lhv_bruteforce", "lr_bound", "quantum_max"],
            rows.iter().map(|r| {
                ["n", "lhv_bruteforce", "lr_bound", "quantum_max"]
                    .iter()
                    .map(|k| r[k].to_string())
                    .collect()
            }),
        )?,
    };
    ctx.emit(&bytes)
}

fn verify(ctx: &Context, trials: Option<usize>) -> CliResult<bool> {
    let mut opts = VerifyOptions::default();
    if let Some(seed) = ctx.seed()? {
        opts.seed = seed;
    }
    if let Some(t) = trials.or(ctx.file.trials) {
        opts.seed_trials = t.max(1);
    }
    let report = verify_with(&opts);
    let bytes = match ctx.format(Format::Json) {
        Format::Json => json_bytes(&report)?,
        Format::Csv => csv_bytes(
            &["criterion", "id", "passed", "summary"],
            report.checks.iter().map(|c| {
                vec![
                    c.criterion.to_string(),
                    c.id.clone(),
                    c.passed.to_string(),
                    c.summary.clone(),
                ]
            }),
        )?,
    };
    ctx.emit(&bytes)?;
    Ok(report.passed)
}

fn dispatch(ctx: &Context) -> CliResult<bool> {
    match &ctx.cli.command {
        Command::BuildOp { n, recursive } => build_op(ctx, *n, *recursive)?,
        Command::SweepPhase { n, points, phis, sim } => sweep(ctx, *n, *points, phis, sim)?,
        Command::Run { n, chains, phi, sim, report: args } => {
            run(ctx, *n, chains.as_deref(), *phi, sim, args)?
        }
        Command::EnumerateChains { n, extend_from, threshold, path_check } => {
            enumerate(ctx, *n, extend_from.as_deref(), *threshold, *path_check)?
        }
        Command::LhvBound { n } => lhv(ctx, *n)?,
        Command::Verify { trials } => return verify(ctx, *trials),
        Command::Report { input, report: args } => report(ctx, input, args)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match cli.config.as_deref().map(FileConfig::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let ctx = Context { cli, file };
    match dispatch(&ctx) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
