use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fixedk::distributions::true_functional;
use fixedk::estimators::estimate;
use fixedk::harness::{run_sweep, SweepConfig};
use fixedk::io::{self, Format};
use fixedk::selftest::run_selftest;
use fixedk::theory::{concentration_check, default_radii, erlang_check, moment_bound_check};
use fixedk::{rng, DistributionSpec, Error, FunctionalSpec, Norm, PlugInMap, Result, SampleSet};

#[derive(Parser, Debug)]
#[command(name = "fixedk", version, about = "Fixed-k nearest-neighbor functional estimators and finite-sample checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate a functional from CSV samples or from a sampled test distribution.
    Estimate(EstimateArgs),
    /// Analytic value of a functional for a product-Beta distribution.
    Truth(TruthArgs),
    /// Bias/variance/MSE over an n grid with fitted log-log slopes.
    Sweep(SweepArgs),
    /// Monte Carlo checks of k-NN distance behavior at the cube center.
    Check {
        #[command(subcommand)]
        check: CheckCommand,
    },
    /// Run the exact hand-computed examples.
    Selftest(OutputArgs),
}

#[derive(Subcommand, Debug)]
enum CheckCommand {
    Concentration(ConcentrationArgs),
    Erlang(ErlangArgs),
    Moments(MomentArgs),
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread limit.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct FunctionalArgs {
    /// shannon | renyi | kl | alpha-div | plugin
    #[arg(long, default_value = "shannon")]
    functional: String,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Norm order: 1, 2, inf, or any real >= 1.
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    r: Norm,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    input_q: Option<PathBuf>,
    /// Sample from this distribution instead of reading --input.
    #[arg(long, value_parser = parse_dist)]
    dist: Option<DistributionSpec>,
    #[arg(long, value_parser = parse_dist)]
    dist_q: Option<DistributionSpec>,
    /// Sample size when sampling from --dist.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Sample size of the second sample; defaults to --n.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input dimension; inferred from the first CSV row when absent.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    allow_outside: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct TruthArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    #[arg(long, value_parser = parse_dist)]
    dist: DistributionSpec,
    #[arg(long, value_parser = parse_dist)]
    dist_q: Option<DistributionSpec>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    functional: FunctionalArgs,
    /// One k or a comma-separated list.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    r: Norm,
    #[arg(long, value_parser = parse_dist)]
    dist: DistributionSpec,
    #[arg(long, value_parser = parse_dist)]
    dist_q: Option<DistributionSpec>,
    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    expected_beta: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ConcentrationArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Comma-separated radii; five per side by default.
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "inf", value_parser = parse_norm)]
    r: Norm,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ErlangArgs {
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "inf", value_parser = parse_norm)]
    r: Norm,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct MomentArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "inf", value_parser = parse_norm)]
    r: Norm,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_norm(s: &str) -> std::result::Result<Norm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dist(s: &str) -> std::result::Result<DistributionSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl FunctionalArgs {
    fn spec(&self) -> Result<FunctionalSpec> {
        let need_alpha = || {
            self.alpha
                .ok_or_else(|| Error::Parameter(format!("--functional {} requires --alpha", self.functional)))
        };
        match self.functional.as_str() {
            "shannon" => Ok(FunctionalSpec::shannon()),
            "renyi" => FunctionalSpec::renyi(need_alpha()?),
            "kl" => Ok(FunctionalSpec::kl()),
            "alpha-div" => FunctionalSpec::alpha_divergence(need_alpha()?),
            "plugin" => FunctionalSpec::plug_in(match self.alpha {
                Some(a) => PlugInMap::Power(a - 1.0),
                None => PlugInMap::Log,
            }),
            other => Err(Error::Parameter(format!(
                "unknown functional {other:?}; expected shannon, renyi, kl, alpha-div or plugin"
            ))),
        }
    }
}

/// Report plus whether it passed; failing checks exit with status 2.
struct Outcome {
    text: String,
    pass: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, pass: true }
    }
}

fn require_sup_norm(r: Norm) -> Result<()> {
    if r == Norm::Infinity {
        Ok(())
    } else {
        Err(Error::Parameter(format!("checks use the sup-norm; --r {r} is not supported")))
    }
}

fn read_input(path: &PathBuf, dim: Option<usize>, norm: Norm, allow_outside: bool) -> Result<SampleSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let d = match dim {
        Some(d) => d,
        None => io::detect_dimension(&text)?,
    };
    io::samples_from_str(&text, d, norm, allow_outside)
}

fn run_estimate(a: &EstimateArgs) -> Result<Outcome> {
    let spec = a.functional.spec()?;
    let divergence = spec.kind.is_divergence();
    let (p, q) = match (&a.input, &a.dist) {
        (Some(_), Some(_)) => {
            return Err(Error::Parameter("give either --input or --dist, not both".into()));
        }
        (Some(path), None) => {
            let p = read_input(path, a.dim, a.r, a.allow_outside)?;
            let q = match (&a.input_q, divergence) {
                (Some(path_q), _) => Some(read_input(path_q, Some(p.dimension()), a.r, a.allow_outside)?),
                (None, true) => return Err(Error::Parameter(format!("{} requires --input-q", spec.kind.name()))),
                (None, false) => None,
            };
            (p, q)
        }
        (None, Some(dist)) => {
            let p = dist.sample(a.n, rng::derive_seed(a.seed, &[0]), a.r)?;
            let q = match (&a.dist_q, divergence) {
                (Some(dq), _) => Some(dq.sample(a.m.unwrap_or(a.n), rng::derive_seed(a.seed, &[1]), a.r)?),
                (None, true) => return Err(Error::Parameter(format!("{} requires --dist-q", spec.kind.name()))),
                (None, false) => None,
            };
            (p, q)
        }
        (None, None) => return Err(Error::Parameter("estimate needs --input or --dist".into())),
    };
    let e = estimate(&spec, &p, q.as_ref(), a.k)?;
    Ok(Outcome::ok(io::emit_estimate(&e, a.output.format)))
}

fn run_truth(a: &TruthArgs) -> Result<Outcome> {
    let spec = a.functional.spec()?;
    let t = true_functional(&a.dist, a.dist_q.as_ref(), &spec)?;
    Ok(Outcome::ok(io::emit_truth(&t, a.output.format)))
}

fn run_sweep_cmd(a: &SweepArgs) -> Result<Outcome> {
    let config = SweepConfig {
        dist_p: a.dist.clone(),
        dist_q: a.dist_q.clone(),
        functional: a.functional.spec()?,
        ks: a.k.clone(),
        norm: a.r,
        n_grid: a.n_grid.clone(),
        trials: a.trials,
        master_seed: a.seed,
        expected_beta: a.expected_beta,
        threads: a.output.threads,
    };
    let result = run_sweep(&config)?;
    Ok(Outcome::ok(io::emit_sweep(&result, a.output.format)))
}

fn run_check(c: &CheckCommand) -> Result<Outcome> {
    match c {
        CheckCommand::Concentration(a) => {
            require_sup_norm(a.r)?;
            let radii = if a.radii.is_empty() {
                default_radii(a.n, a.k, a.dim)
            } else {
                a.radii.clone()
            };
            let rep = concentration_check(a.n, a.k, a.dim, &radii, a.trials, a.seed)?;
            Ok(Outcome {
                text: io::emit_concentration(&rep, a.output.format),
                pass: rep.passed(),
            })
        }
        CheckCommand::Erlang(a) => {
            require_sup_norm(a.r)?;
            let rep = erlang_check(a.n, a.k, a.dim, a.trials, a.seed)?;
            Ok(Outcome {
                text: io::emit_erlang(&rep, a.output.format),
                pass: rep.passed(),
            })
        }
        CheckCommand::Moments(a) => {
            require_sup_norm(a.r)?;
            let rep = moment_bound_check(a.n, a.k, a.dim, a.alpha, a.trials, a.seed)?;
            Ok(Outcome {
                text: io::emit_moments(&rep, a.output.format),
                pass: rep.pass,
            })
        }
    }
}

fn output_args(cmd: &Command) -> &OutputArgs {
    match cmd {
        Command::Estimate(a) => &a.output,
        Command::Truth(a) => &a.output,
        Command::Sweep(a) => &a.output,
        Command::Check { check } => match check {
            CheckCommand::Concentration(a) => &a.output,
            CheckCommand::Erlang(a) => &a.output,
            CheckCommand::Moments(a) => &a.output,
        },
        Command::Selftest(o) => o,
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::Truth(a) => run_truth(a),
        Command::Sweep(a) => run_sweep_cmd(a),
        Command::Check { check } => run_check(check),
        Command::Selftest(o) => {
            let cases = run_selftest()?;
            Ok(Outcome {
                text: io::emit_selftest(&cases, o.format),
                pass: cases.iter().all(|c| c.pass),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let out = output_args(&cli.command).clone();
    if let Some(t) = out.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match &out.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{}", outcome.text);
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
