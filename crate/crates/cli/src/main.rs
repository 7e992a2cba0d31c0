use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde_json::{json, Map, Value};

use bitoss::binomials::{
    bivbin_direct, mvbin_functorial_with, recover, recover_projected, Coin, GridDist,
};
use bitoss::em::{em_run, EmOptions};
use bitoss::json::{
    dist_from_json, dist_to_json, em_state_to_json, em_trace_to_csv, em_trace_to_json,
    grid_from_json, grid_to_csv, grid_to_json, multiset_from_json, multiset_to_json, parse,
    to_line, AnyDist, JsonScalar, SuccessionRequest,
};
use bitoss::kernel::{sample, Dist, Point};
use bitoss::{Error, Limits, Result};

#[derive(Parser)]
#[command(
    name = "bitoss",
    version,
    about = "Multivariate binomials, succession rules and EM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the multivariate binomial grid of a coin.
    Bivbin(BivbinArgs),
    /// Draw a seeded sample from a distribution.
    Sample(SampleArgs),
    /// Fit a mixture of bivariate binomials to grid data.
    Em(EmArgs),
    /// Evaluate a rule of succession.
    Succession(SuccessionArgs),
    /// Recover a two-coin from the moments of a grid distribution.
    Recover(RecoverArgs),
}

#[derive(Args)]
struct BivbinArgs {
    /// Coin distribution over bit tuples (Dist JSON).
    #[arg(long)]
    coin: PathBuf,
    /// Number of tosses.
    #[arg(long = "K")]
    k: u64,
    /// Expected coin dimension; checked if given.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the grid as CSV (two-coins only).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmArgs {
    /// Data multiset over the grid (Multiset JSON).
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "K")]
    k: u64,
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    iters: usize,
    #[arg(long)]
    seed: u64,
    /// Final state (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Divergence per iteration (CSV).
    #[arg(long)]
    trace: PathBuf,
    /// Full trace with every intermediate state (JSON).
    #[arg(long)]
    trace_json: Option<PathBuf>,
    /// Stop early once successive divergences differ by less than this.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Beta,
    Dirichlet,
    BivbinDirichlet,
    PoissonBinomial,
    PoissonBivbin,
}

#[derive(Args)]
struct SuccessionArgs {
    /// Request file; replaces the rule flags.
    #[arg(long, conflicts_with = "rule")]
    request: Option<PathBuf>,
    #[arg(long, required_unless_present = "request")]
    rule: Option<Rule>,
    #[arg(long)]
    alpha: Option<u64>,
    #[arg(long)]
    beta: Option<u64>,
    #[arg(long = "K")]
    k: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    n1: Option<u64>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Dirichlet parameters (Multiset JSON).
    #[arg(long)]
    psi: Option<PathBuf>,
    /// Observed draw (Multiset JSON).
    #[arg(long)]
    phi: Option<PathBuf>,
    /// Two-coin detector (Dist JSON).
    #[arg(long)]
    coin: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    /// Grid distribution (Dist or grid JSON).
    #[arg(long)]
    grid: PathBuf,
    #[arg(long = "K")]
    k: u64,
    /// Project infeasible moments onto the nearest two-coin instead of failing.
    #[arg(long)]
    project: bool,
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn build_grid<S: JsonScalar>(
    dist: Dist<Point, S>,
    args: &BivbinArgs,
    limits: &Limits,
) -> Result<()> {
    let coin = Coin::with_max_dim(dist, limits.max_dim)?;
    if let Some(n) = args.n {
        if n != coin.dim() {
            return Err(Error::WrongSpace(format!(
                "--n {n} but the coin has dimension {}",
                coin.dim()
            )));
        }
    }
    let grid: GridDist<S> = if coin.dim() == 2 {
        bivbin_direct(args.k, &coin)?
    } else {
        mvbin_functorial_with(args.k, &coin, limits)?
    };
    write_text(&args.out, &to_line(&grid_to_json(&grid)))?;
    if let Some(csv) = &args.csv {
        write_text(csv, &grid_to_csv(&grid)?)?;
    }
    Ok(())
}

fn cmd_bivbin(args: &BivbinArgs) -> Result<()> {
    let limits = Limits::from_env()?;
    match dist_from_json(&read_json(&args.coin)?)? {
        AnyDist::Rational(d) => build_grid(d, args, &limits),
        AnyDist::Float(d) => build_grid(d, args, &limits),
    }
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let drawn = match dist_from_json(&read_json(&args.dist)?)? {
        AnyDist::Rational(d) => sample(&d, args.n, args.seed),
        AnyDist::Float(d) => sample(&d, args.n, args.seed),
    };
    write_text(&args.out, &to_line(&multiset_to_json(&drawn)))
}

fn cmd_em(args: &EmArgs) -> Result<()> {
    let data = multiset_from_json(&read_json(&args.data)?)?;
    let mut opts = EmOptions::new(args.classes, args.k, args.iters, args.seed);
    opts.early_stop = args.tol;
    let trace = em_run(&data, &opts)?;
    write_text(&args.out, &to_line(&em_state_to_json(trace.final_state())))?;
    write_text(&args.trace, &em_trace_to_csv(&trace))?;
    if let Some(path) = &args.trace_json {
        write_text(path, &to_line(&em_trace_to_json(&trace)))?;
    }
    Ok(())
}

fn succession_request(args: &SuccessionArgs) -> Result<Value> {
    if let Some(path) = &args.request {
        return read_json(path);
    }
    let rule = match args.rule.expect("clap requires --rule without --request") {
        Rule::Beta => "beta",
        Rule::Dirichlet => "dirichlet",
        Rule::BivbinDirichlet => "bivbin-dirichlet",
        Rule::PoissonBinomial => "poisson-binomial",
        Rule::PoissonBivbin => "poisson-bivbin",
    };
    let mut req = Map::new();
    req.insert("rule".into(), json!(rule));
    let numbers = [
        ("alpha", args.alpha.map(|v| json!(v))),
        ("beta", args.beta.map(|v| json!(v))),
        ("K", args.k.map(|v| json!(v))),
        ("n", args.n.map(|v| json!(v))),
        ("n1", args.n1.map(|v| json!(v))),
        ("n2", args.n2.map(|v| json!(v))),
        ("r", args.r.map(|v| json!(v))),
        ("lambda", args.lambda.map(|v| json!(v))),
    ];
    for (key, value) in numbers {
        if let Some(v) = value {
            req.insert(key.into(), v);
        }
    }
    for (key, path) in [("psi", &args.psi), ("phi", &args.phi), ("coin", &args.coin)] {
        if let Some(p) = path {
            req.insert(key.into(), read_json(p)?);
        }
    }
    Ok(Value::Object(req))
}

fn cmd_succession(args: &SuccessionArgs) -> Result<()> {
    let request = SuccessionRequest::from_json(&succession_request(args)?)?;
    let answer = request.evaluate()?;
    println!(
        "{}",
        serde_json::to_string(&answer).expect("JSON values serialize")
    );
    Ok(())
}

fn recover_typed<S: JsonScalar>(d: &Dist<Point, S>, k: u64, project: bool) -> Result<Value> {
    let (coin, clamped) = match recover(d, k) {
        Ok(coin) => (coin, false),
        Err(Error::InfeasibleMoments(why)) if project => {
            warn!("moments are not those of a bivariate binomial ({why}); projecting");
            recover_projected(d, k)?
        }
        Err(e) => return Err(e),
    };
    Ok(json!({ "coin": dist_to_json(coin.dist()), "clamped": clamped }))
}

fn cmd_recover(args: &RecoverArgs) -> Result<()> {
    let (dist, k, n) = grid_from_json(&read_json(&args.grid)?)?;
    if k.is_some_and(|k| k != args.k) {
        return Err(Error::Invalid(format!(
            "grid file has K = {}, flag says {}",
            k.unwrap(),
            args.k
        )));
    }
    if n.is_some_and(|n| n != 2) {
        return Err(Error::WrongSpace(
            "recovery needs a two-dimensional grid".into(),
        ));
    }
    let out = match &dist {
        AnyDist::Rational(d) => recover_typed(d, args.k, args.project)?,
        AnyDist::Float(d) => recover_typed(d, args.k, args.project)?,
    };
    println!(
        "{}",
        serde_json::to_string(&out).expect("JSON values serialize")
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Bivbin(a) => cmd_bivbin(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Em(a) => cmd_em(a),
        Command::Succession(a) => cmd_succession(a),
        Command::Recover(a) => cmd_recover(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bitoss: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
