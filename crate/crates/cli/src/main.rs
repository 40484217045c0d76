mod grid;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use divgauge::bounds::BoundResult;
use divgauge::divergences::{maximal_leakage, mutual_information, sibson_mi};
use divgauge::gen::{self, figure_k_rows, mi_gap_constant, DivergencePanel, SubGaussianSetting};
use divgauge::lab::{
    check_gibbs, check_supersample, dominance_report, run_gibbs_experiment, run_suite, BoundSpec, GibbsExperiment,
    Suite, SuperSampleExperiment, VerificationReport,
};
use divgauge::{AbsContPair, DivergenceKind, EventMask, JointFinite};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use grid::Grid;
use output::{num, Cell, Format, Report, Table};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] divgauge::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write output: {0}")]
    Write(std::io::Error),
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = Result<T, CliError>;

const EXIT_ERROR: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "divgauge", version, about = "Change-of-measure and generalization bounds on finite spaces")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    #[serde(skip)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Divergences of a pair, or information measures of a joint.
    Div(DivArgs),
    /// One change-of-measure bound from Q(E) and a divergence value.
    Bound(BoundArgs),
    /// Every bound, or the dominance-table rows, on one event of a pair.
    Compare(CompareArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Tail bounds on the generalization gap over an eta grid.
    Genbound(GenboundArgs),
    /// Check the tail bounds against an exactly enumerated learning experiment.
    Experiment(ExperimentArgs),
    /// Average MI bound against the earlier bound over a grid of I(S;W).
    FigureK(FigureKArgs),
}

#[derive(Debug, Args, Serialize)]
struct DivArgs {
    /// Pair file {"p": {"probs": [..]}, "q": {"probs": [..]}}.
    #[arg(long, conflicts_with = "joint", required_unless_present = "joint")]
    pair: Option<PathBuf>,
    /// Joint file {"matrix": [[..], ..]}.
    #[arg(long)]
    joint: Option<PathBuf>,
    /// Divergence kind such as chi2, power or egamma:gamma=2; repeatable.
    #[arg(long)]
    kind: Vec<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct BoundArgs {
    /// Bound id such as chi2, kl:c=1 or egamma:gamma=2.
    #[arg(long)]
    name: String,
    /// Q(E).
    #[arg(long, required_unless_present = "pair")]
    q: Option<f64>,
    /// The statistic the bound consumes, usually a divergence value.
    #[arg(long, required_unless_present = "pair")]
    div: Option<f64>,
    /// Take Q(E) and the statistic from a pair and an event instead.
    #[arg(long, requires = "event", conflicts_with_all = ["q", "div"])]
    pair: Option<PathBuf>,
    #[arg(long)]
    event: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[arg(long)]
    pair: PathBuf,
    /// Event as a binary literal; the rightmost digit is atom 0.
    #[arg(long)]
    event: String,
    /// Only the dominance-table rows, ours against the earlier bound.
    #[arg(long)]
    table1: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SuiteArg {
    Master,
    YoungFenchel,
    Identities,
    Dominance,
    Gibbs,
    Supersample,
    NegativeControl,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Master => Suite::Master,
            SuiteArg::YoungFenchel => Suite::YoungFenchel,
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Dominance => Suite::Dominance,
            SuiteArg::Gibbs => Suite::Gibbs,
            SuiteArg::Supersample => Suite::Supersample,
            SuiteArg::NegativeControl => Suite::NegativeControl,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    /// Random pairs for the pair suites; the identity and dominance suites use a tenth.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, env = "DIVGAUGE_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct GenboundArgs {
    /// Sub-Gaussian parameter of the loss.
    #[arg(long, required_unless_present = "experiment")]
    sigma: Option<f64>,
    /// Sample size.
    #[arg(long, required_unless_present = "experiment")]
    n: Option<usize>,
    #[arg(long, default_value = "0.02:1:0.02")]
    eta_grid: Grid,
    /// Divergence panel {"egamma": [gamma, E], "chi2": .., "h2": .., "power": [beta, H]}.
    #[arg(long, required_unless_present = "experiment")]
    div_file: Option<PathBuf>,
    /// Maximal leakage; adds the leakage branch.
    #[arg(long)]
    leakage: Option<f64>,
    /// Gibbs experiment file; supplies sigma, n, the panel and the exact tail.
    #[arg(long, conflicts_with_all = ["sigma", "n", "div_file"])]
    experiment: Option<PathBuf>,
    /// E_gamma threshold used with --experiment.
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Power order used with --experiment.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ExperimentKind {
    Gibbs,
    Supersample,
}

#[derive(Debug, Args, Serialize)]
struct ExperimentArgs {
    /// Experiment file {"n", "p_z", "loss", "a", "b", "temperature"}.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = ExperimentKind::Gibbs)]
    kind: ExperimentKind,
    #[arg(long, default_value = "0.02:1:0.02")]
    eta_grid: Grid,
    #[arg(long, env = "DIVGAUGE_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct FigureKArgs {
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value = "0:10:0.01")]
    mi_grid: Grid,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Lib(e.into()))
}

fn parse_kind(s: &str, args: &DivArgs) -> CliResult<DivergenceKind> {
    if s.contains(':') {
        return Ok(s.parse()?);
    }
    Ok(DivergenceKind::from_name(s, args.beta, args.gamma, args.alpha)?)
}

fn kind_params(kind: DivergenceKind) -> Value {
    match kind {
        DivergenceKind::PowerBeta { beta } => json!({ "beta": beta }),
        DivergenceKind::EGamma { gamma } => json!({ "gamma": gamma }),
        DivergenceKind::Renyi { alpha } => json!({ "alpha": alpha }),
        _ => json!({}),
    }
}

fn cmd_div(args: &DivArgs) -> CliResult<Report> {
    let mut table = Table::new(["kind", "value"]);
    let mut rows = Vec::new();
    let mut push = |kind: String, params: Value, value: f64| {
        table.push(vec![kind.clone().into(), value.into()]);
        rows.push(json!({ "kind": kind, "params": params, "value": num(value) }));
    };
    let kinds: Vec<DivergenceKind> = args.kind.iter().map(|k| parse_kind(k, args)).collect::<CliResult<_>>()?;
    if let Some(path) = &args.pair {
        let pair = AbsContPair::from_json_str(&read(path)?)?;
        let kinds = if kinds.is_empty() { DivergenceKind::f_kinds() } else { kinds };
        for kind in kinds {
            let v = divgauge::divergences::f_divergence(&pair, kind)?;
            push(kind.to_string(), kind_params(kind), v.value);
        }
    } else if let Some(path) = &args.joint {
        let joint = JointFinite::from_json_str(&read(path)?)?;
        push("mutual-information".into(), json!({}), mutual_information(&joint));
        push("maximal-leakage".into(), json!({}), maximal_leakage(&joint)?);
        let alphas = args.alpha.map_or_else(|| vec![1.5, 2.0, 4.0], |a| vec![a]);
        for a in alphas {
            push(format!("sibson:alpha={a}"), json!({ "alpha": a }), sibson_mi(&joint, a)?);
        }
        let pair = joint.product_pair();
        for kind in kinds {
            let v = divgauge::divergences::f_divergence(&pair, kind)?;
            push(kind.to_string(), kind_params(kind), v.value);
        }
    }
    Ok(Report {
        result: Value::Array(rows),
        table,
        violations: false,
    })
}

fn bound_json(b: &BoundResult) -> Value {
    serde_json::to_value(b).expect("bound results serialize")
}

fn cmd_bound(args: &BoundArgs) -> CliResult<Report> {
    let spec: BoundSpec = args.name.parse()?;
    let (q, stat, truth) = match (&args.pair, &args.event) {
        (Some(path), Some(event)) => {
            let pair = AbsContPair::from_json_str(&read(path)?)?;
            let event = parse_event(event, &pair)?;
            (pair.q_of(&event), spec.prepare(&pair)?, Some(pair.p_of(&event)))
        }
        _ => (args.q.unwrap_or_default(), args.div.unwrap_or_default(), None),
    };
    let b = spec.evaluate(stat, q)?;
    let mut table = Table::new(["name", "raw", "value", "applicable", "truth"]);
    table.push(vec![
        spec.to_string().into(),
        b.raw.into(),
        b.value.into(),
        b.applicable().into(),
        truth.map_or(Cell::Text(String::new()), Cell::Num),
    ]);
    let mut result = bound_json(&b);
    if let Some(t) = truth {
        result["truth"] = num(t);
    }
    Ok(Report {
        result,
        table,
        violations: false,
    })
}

fn parse_event(s: &str, pair: &AbsContPair) -> CliResult<EventMask> {
    let e: EventMask = s.parse()?;
    if e.len() != pair.len() {
        return Err(CliError::Usage(format!(
            "event {s} has {} digits but the pair has {} atoms",
            e.len(),
            pair.len()
        )));
    }
    Ok(e)
}

fn cmd_compare(args: &CompareArgs) -> CliResult<Report> {
    let pair = AbsContPair::from_json_str(&read(&args.pair)?)?;
    let event = parse_event(&args.event, &pair)?;
    let (p, q) = (pair.p_of(&event), pair.q_of(&event));
    if args.table1 {
        let rows = dominance_report(&pair, &[event])?;
        if rows.is_empty() {
            return Err(CliError::Usage(format!("dominance rows need 0 < Q(E) < 1, got Q(E) = {q}")));
        }
        let mut table = Table::new(["row", "claim", "ours", "competitor", "truth", "verdict"]);
        for r in &rows {
            table.push(vec![
                r.row.clone().into(),
                serde_json::to_value(r.claim).unwrap().as_str().unwrap_or_default().into(),
                r.ours.into(),
                r.competitor.into(),
                r.p_event.into(),
                serde_json::to_value(r.verdict).unwrap().as_str().unwrap_or_default().into(),
            ]);
        }
        let result = json!({ "p_event": num(p), "q_event": num(q), "rows": rows });
        return Ok(Report {
            result,
            table,
            violations: false,
        });
    }
    let mut table = Table::new(["bound", "raw", "value", "applicable", "truth"]);
    let mut rows = Vec::new();
    for spec in BoundSpec::master_suite() {
        let b = spec.evaluate(spec.prepare(&pair)?, q)?;
        table.push(vec![
            spec.to_string().into(),
            b.raw.into(),
            b.value.into(),
            b.applicable().into(),
            p.into(),
        ]);
        let mut v = bound_json(&b);
        v["id"] = json!(spec.to_string());
        rows.push(v);
    }
    Ok(Report {
        result: json!({ "p_event": num(p), "q_event": num(q), "bounds": rows }),
        table,
        violations: false,
    })
}

fn reports_table(reports: &[VerificationReport]) -> Table {
    let mut table = Table::new(["bound", "trials", "checks", "skipped", "violations", "worst_slack", "seed"]);
    for r in reports {
        table.push(vec![
            r.bound.clone().into(),
            r.trials.into(),
            r.checks.into(),
            r.skipped.into(),
            r.violations.into(),
            r.worst_slack.into(),
            r.seed.into(),
        ]);
    }
    table
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<Report> {
    let reports = run_suite(args.suite.into(), args.seed, args.trials)?;
    let violations = reports.iter().any(|r| r.violations > 0);
    Ok(Report {
        result: serde_json::to_value(&reports).expect("reports serialize"),
        table: reports_table(&reports),
        violations,
    })
}

fn cmd_genbound(args: &GenboundArgs) -> CliResult<Report> {
    let (setting, panel, leakage, outcome) = match &args.experiment {
        Some(path) => {
            let exp: GibbsExperiment = read_json(path)?;
            let out = run_gibbs_experiment(&exp)?;
            let p = &out.panel;
            let pick = |list: &[(f64, f64)], key: f64, what: &str| {
                list.iter()
                    .find(|(k, _)| *k == key)
                    .copied()
                    .ok_or_else(|| CliError::Usage(format!("{what} {key} is not in the experiment panel {list:?}")))
            };
            let panel = DivergencePanel {
                egamma: Some(pick(&p.egamma, args.gamma, "gamma")?),
                chi2: Some(p.chi2),
                h2: Some(p.h2.min(2.0)),
                power: Some(pick(&p.power, args.beta, "beta")?),
            };
            (out.setting, panel, Some(p.leakage), Some(out))
        }
        None => {
            let setting = SubGaussianSetting::new(args.sigma.unwrap_or_default(), args.n.unwrap_or_default())?;
            let path = args.div_file.as_ref().expect("clap requires --div-file");
            (setting, read_json::<DivergencePanel>(path)?, args.leakage, None)
        }
    };
    let mut table = Table::default();
    let mut rows = Vec::new();
    let mut violations = false;
    for eta in args.eta_grid.points() {
        let report = gen::gen_tail_bounds(&setting, eta, &panel)?;
        let mut branches: Vec<(String, f64)> = report.branches.iter().map(|b| (b.name.clone(), b.raw)).collect();
        if let Some(l) = leakage {
            branches.push(("gen_ml".into(), gen::gen_tail_ml(&setting, eta, l)?.raw));
        }
        let min = branches.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
        let exact = outcome.as_ref().map(|o| o.exact_tail(eta));
        violations |= exact.is_some_and(|e| e > min + divgauge::lab::SLACK_TOL);
        if table.header.is_empty() {
            table.header.push("eta".into());
            table.header.push("theta".into());
            table.header.extend(branches.iter().map(|b| b.0.clone()));
            table.header.push("min".into());
            if exact.is_some() {
                table.header.push("exact_tail".into());
            }
        }
        let mut row: Vec<Cell> = vec![eta.into(), report.theta.into()];
        row.extend(branches.iter().map(|b| Cell::Num(b.1)));
        row.push(min.into());
        row.extend(exact.map(Cell::Num));
        table.push(row);
        let mut obj = json!({
            "eta": eta,
            "theta": num(report.theta),
            "branches": branches.iter().map(|(n, v)| (n.clone(), num(*v))).collect::<serde_json::Map<_, _>>(),
            "min": num(min),
        });
        if let Some(e) = exact {
            obj["exact_tail"] = num(e);
        }
        rows.push(obj);
    }
    Ok(Report {
        result: json!({ "sigma": setting.sigma, "n": setting.n, "panel": panel, "rows": rows }),
        table,
        violations,
    })
}

fn cmd_experiment(args: &ExperimentArgs) -> CliResult<Report> {
    let exp: GibbsExperiment = read_json(&args.config)?;
    let grid = args.eta_grid.points();
    let (reports, panel) = match args.kind {
        ExperimentKind::Gibbs => {
            let out = run_gibbs_experiment(&exp)?;
            (check_gibbs(&exp, &grid, 0, args.seed)?, serde_json::to_value(&out.panel).expect("panel serializes"))
        }
        ExperimentKind::Supersample => {
            (check_supersample(&SuperSampleExperiment(exp), &grid, 0, args.seed)?, Value::Null)
        }
    };
    let violations = reports.iter().any(|r| r.violations > 0);
    Ok(Report {
        result: json!({ "panel": panel, "reports": reports }),
        table: reports_table(&reports),
        violations,
    })
}

fn cmd_figure_k(args: &FigureKArgs) -> CliResult<Report> {
    let setting = SubGaussianSetting::new(args.sigma, args.n)?;
    let rows = figure_k_rows(&setting, &args.mi_grid.points())?;
    let mut table = Table::new(["mi", "ours", "competitor", "gap"]);
    for r in &rows {
        table.push(vec![r.mi.into(), r.ours.into(), r.competitor.into(), r.gap.into()]);
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.gap.total_cmp(&b.gap))
        .ok_or_else(|| CliError::Usage("empty mi grid".into()))?;
    let unit = args.sigma / (args.n as f64).sqrt();
    Ok(Report {
        result: json!({
            "min_gap": best.gap,
            "argmin_mi": best.mi,
            "min_gap_over_unit": best.gap / unit,
            "gap_constant": mi_gap_constant(),
            "rows": rows,
        }),
        table,
        violations: false,
    })
}

fn dispatch(command: &Command) -> CliResult<Report> {
    match command {
        Command::Div(a) => cmd_div(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Genbound(a) => cmd_genbound(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::FigureK(a) => cmd_figure_k(a),
    }
}

fn run(cli: &Cli) -> CliResult<bool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.common.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| dispatch(&cli.command))?;
    let mut config = serde_json::to_value(&cli.command).expect("config serializes");
    config["out"] = json!(cli.common.out);
    config["format"] = json!(cli.common.format);
    let text = output::render(&config, &report, cli.common.format);
    output::emit(&text, cli.common.out.as_deref()).map_err(CliError::Write)?;
    Ok(report.violations)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("divgauge: verification found violations");
            ExitCode::from(EXIT_VIOLATIONS)
        }
        Err(e) => {
            eprintln!("divgauge: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
