use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ucbmg::bandit::{Delta, PolicyKind};
use ucbmg::experiment::{self, ExperimentConfig, OUTPUT_DIR_ENV};
use ucbmg::instability::InstabilityEvaluator;
use ucbmg::market::io::{instance_to_string, read_instance, read_preferences};
use ucbmg::market::{deferred_acceptance, generate_instance, Generator, PreferenceProfile, Side};
use ucbmg::zerosum::{solve_game, PayoffMatrix};
use ucbmg::{Error, Result};

#[derive(Parser)]
#[command(name = "ucbmg", version, about = "Matching markets with zero-sum games under bandit feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch experiment and write regret traces.
    Simulate(SimulateArgs),
    /// Matching instability of an outcome given as instance, matching and strategy files.
    Audit(AuditArgs),
    /// Value and minimax strategies of a zero-sum matrix game.
    SolveGame(SolveGameArgs),
    /// Deferred acceptance on preference lists or on an instance's game values.
    Match(MatchArgs),
    /// Regret bound for a horizon and market size.
    Bound(BoundArgs),
    /// Draw a random market instance.
    GenInstance(GenInstanceArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    a: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Horizon T.
    #[arg(long, short = 'T')]
    horizon: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seeds_base: Option<u64>,
    /// self-play, nash-response or best-response.
    #[arg(long)]
    policy: Option<PolicyKind>,
    /// gaussian or uniform.
    #[arg(long)]
    generator: Option<Generator>,
    #[arg(long, allow_hyphen_values = true)]
    outside_option: Option<f64>,
    /// `auto` or a number in (0, 1).
    #[arg(long)]
    delta: Option<Delta>,
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    /// Also write the bound without its logarithmic factor.
    #[arg(long)]
    bound_no_log: bool,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    matching: PathBuf,
    #[arg(long)]
    strategies: PathBuf,
    /// Where to write the report; defaults to `audit.json` in the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = experiment::DEFAULT_OUTPUT_DIR)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SolveGameArgs {
    /// Rows separated by `;`, entries by `,`, e.g. "1,-1;-1,1".
    #[arg(long, allow_hyphen_values = true, conflicts_with = "file", required_unless_present = "file")]
    matrix: Option<String>,
    /// JSON file holding an array of rows.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
    prefs: Option<PathBuf>,
    /// Rank partners by the true game values of this instance.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "left")]
    proposing_side: Side,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, short = 't', default_value_t = 1)]
    t: u64,
    #[arg(long, default_value_t = 1)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    a: u64,
    #[arg(long, default_value_t = 1)]
    m: u64,
    #[arg(long, default_value_t = 1)]
    k: u64,
}

#[derive(Args)]
struct GenInstanceArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    a: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "gaussian")]
    generator: Generator,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    outside_option: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write to this file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialise"));
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::read(path)?,
        None => {
            let missing: Vec<&str> = [
                ("--p", args.p.is_none()),
                ("--a", args.a.is_none()),
                ("--m", args.m.is_none()),
                ("--k", args.k.is_none()),
                ("--horizon", args.horizon.is_none()),
            ]
            .iter()
            .filter(|(_, miss)| *miss)
            .map(|(name, _)| *name)
            .collect();
            if !missing.is_empty() {
                return Err(Error::Input(format!(
                    "without --config, {} must be given",
                    missing.join(", ")
                )));
            }
            ExperimentConfig::new(0, 0, 0, 0, 0)
        }
    };
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { config.$field = v; })*
        };
    }
    apply!(p, a, m, k, horizon, runs, seeds_base, policy, generator, outside_option, delta, noise_scale, output_dir);
    config.bound_no_log |= args.bound_no_log;
    config.validate()?;
    let trace = experiment::run_experiment(&config)?;
    let last = trace.mean.len() - 1;
    print_json(&json!({
        "output_dir": config.output_dir,
        "runs": config.runs,
        "horizon": config.horizon,
        "policy": config.policy,
        "final_mean_cum_mi": trace.mean[last],
        "final_std_cum_mi": trace.std[last],
        "final_bound": trace.bound[last],
    }));
    Ok(())
}

fn audit(args: AuditArgs) -> Result<()> {
    let report = experiment::audit(&args.instance, &args.matching, &args.strategies)?;
    let text = serde_json::to_string_pretty(&report).expect("reports serialise") + "\n";
    let output = args.output.unwrap_or_else(|| args.output_dir.join("audit.json"));
    write_text(&output, &text)?;
    print!("{text}");
    Ok(())
}

fn parse_matrix(text: &str) -> Result<PayoffMatrix> {
    let rows = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Input(format!("not a number: {:?}", v.trim())))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    PayoffMatrix::from_rows(&rows)
}

fn solve_game_cmd(args: SolveGameArgs) -> Result<()> {
    let game = match (args.matrix, args.file) {
        (Some(text), _) => parse_matrix(&text)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            PayoffMatrix::from_rows(&rows)?
        }
        (None, None) => unreachable!("clap requires one of --matrix and --file"),
    };
    let solution = solve_game(&game)?;
    print_json(&serde_json::to_value(&solution).expect("solutions serialise"));
    Ok(())
}

fn match_cmd(args: MatchArgs) -> Result<()> {
    let prefs = match (args.prefs, args.instance) {
        (Some(path), _) => read_preferences(&path)?,
        (None, Some(path)) => {
            let instance = read_instance(&path)?;
            let eval = InstabilityEvaluator::new(&instance)?;
            let (p, a) = (instance.left_count(), instance.right_count());
            let left: Vec<Vec<f64>> =
                (0..p).map(|l| (0..a).map(|r| eval.left_value(l, r)).collect()).collect();
            let right: Vec<Vec<f64>> =
                (0..a).map(|r| (0..p).map(|l| eval.right_value(r, l)).collect()).collect();
            PreferenceProfile::from_values(&left, instance.left_outside(), &right, instance.right_outside())?
        }
        (None, None) => unreachable!("clap requires one of --prefs and --instance"),
    };
    let matching = deferred_acceptance(&prefs, args.proposing_side);
    print_json(&json!({
        "pairs": matching.pairs().collect::<Vec<_>>(),
        "compact": matching.to_compact(),
        "preferences": prefs,
    }));
    Ok(())
}

fn bound(args: BoundArgs) -> Result<()> {
    let value = experiment::theoretical_bound(args.t, args.p, args.a, args.m, args.k)?;
    let no_log = experiment::theoretical_bound_no_log(args.t, args.p, args.a, args.m, args.k)?;
    print_json(&json!({
        "t": args.t, "p": args.p, "a": args.a, "m": args.m, "k": args.k,
        "bound": value,
        "bound_no_log": no_log,
    }));
    Ok(())
}

fn gen_instance(args: GenInstanceArgs) -> Result<()> {
    let instance = generate_instance(
        args.p,
        args.a,
        args.m,
        args.k,
        args.generator,
        args.outside_option,
        args.seed,
    )?;
    let text = instance_to_string(&instance);
    match args.output {
        Some(path) => write_text(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Audit(args) => audit(args),
        Command::SolveGame(args) => solve_game_cmd(args),
        Command::Match(args) => match_cmd(args),
        Command::Bound(args) => bound(args),
        Command::GenInstance(args) => gen_instance(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ucbmg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
