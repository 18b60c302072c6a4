//! `upx`: command-line front end for the ultrapreserve engines.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ultrapreserve::chain::{enumerate_end, enumerate_in, EndoSet, MonoidError};
use ultrapreserve::metric::{FiniteSpace, MappedMatrix};
use ultrapreserve::piecewise::{
    classify, preserving_oracle, Category, OracleCounterexample, OracleMode, PiecewiseFn,
    PreservationVerdict,
};
use ultrapreserve::px::{
    compute_px, conjecture_search, verify_px_is_submonoid, CandidateMap, PxError, PxMonoidReport,
    SearchConfig, SearchMode, SearchReport, SpaceClass,
};
use ultrapreserve::rational::NonNegRational;
use ultrapreserve::verify::{run_suites, VerifyReport};

const EXIT_FOUND: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_BOUND: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "upx",
    version,
    about = "Ultrametric-preserving functions and P_X on finite chains"
)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Exhaustive,
    Random,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide metric, ultrametric and pseudoultrametric for a space file.
    CheckSpace { path: PathBuf },
    /// Classify a piecewise function, optionally cross-checked on a grid.
    ClassifyFn {
        path: PathBuf,
        /// Comma separated distances, e.g. `0,1/2,1,2`.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<NonNegRational>>,
    },
    /// List End(C_n), or In(C_n) with `--in`.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long = "in")]
        injective_kernel: bool,
    },
    /// Compute P_X for a class file.
    Px { path: PathBuf },
    /// Run every invariant suite on C_n.
    Verify {
        #[arg(long)]
        n: usize,
    },
    /// Search subsets A of End(C_n) containing the identity.
    Conjecture {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_subset_size: Option<u64>,
        /// Also report the reading where every right ideal of [A] counts.
        #[arg(long)]
        rbar_literal: bool,
    },
}

#[derive(Debug, Serialize)]
struct RunConfig {
    command: &'static str,
    inputs: Vec<String>,
    n: Option<usize>,
    mode: Option<Mode>,
    seed: Option<u64>,
    samples: Option<u64>,
    max_subset_size: Option<u64>,
    grid: Option<Vec<NonNegRational>>,
    rbar_literal: bool,
    out: Option<String>,
    format: Format,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Self {
        let mut c = RunConfig {
            command: "",
            inputs: Vec::new(),
            n: None,
            mode: None,
            seed: None,
            samples: None,
            max_subset_size: None,
            grid: None,
            rbar_literal: false,
            out: cli.out.as_ref().map(|p| p.display().to_string()),
            format: cli.format,
        };
        match &cli.command {
            Command::CheckSpace { path } => {
                c.command = "check-space";
                c.inputs.push(path.display().to_string());
            }
            Command::ClassifyFn { path, grid } => {
                c.command = "classify-fn";
                c.inputs.push(path.display().to_string());
                c.grid = grid.clone();
            }
            Command::Enumerate { n, .. } => {
                c.command = "enumerate";
                c.n = Some(*n);
            }
            Command::Px { path } => {
                c.command = "px";
                c.inputs.push(path.display().to_string());
            }
            Command::Verify { n } => {
                c.command = "verify";
                c.n = Some(*n);
            }
            Command::Conjecture {
                n,
                mode,
                seed,
                samples,
                max_subset_size,
                rbar_literal,
            } => {
                c.command = "conjecture";
                c.n = Some(*n);
                c.mode = Some(*mode);
                c.seed = *seed;
                c.samples = (*mode == Mode::Random).then_some(*samples);
                c.max_subset_size = *max_subset_size;
                c.rbar_literal = *rbar_literal;
            }
        }
        c
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: T,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<PxError> for Failure {
    fn from(e: PxError) -> Self {
        let code = match e {
            PxError::BoundExceeded { .. } | PxError::Monoid(MonoidError::BoundExceeded { .. }) => {
                EXIT_BOUND
            }
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<MonoidError> for Failure {
    fn from(e: MonoidError) -> Self {
        PxError::from(e).into()
    }
}

/// A rendered report plus the exit code it implies.
struct Outcome {
    json: String,
    text: String,
    code: u8,
}

fn outcome<T: Serialize>(config: &RunConfig, result: T, text: String, code: u8) -> Outcome {
    let env = Envelope {
        tool: "upx",
        version: env!("CARGO_PKG_VERSION"),
        config,
        result,
    };
    let mut json = serde_json::to_string_pretty(&env).expect("reports serialize");
    json.push('\n');
    Outcome { json, text, code }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let raw = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&raw).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Verdict {
    holds: bool,
    witness: Option<String>,
}

impl Verdict {
    fn from_witness(w: Option<String>) -> Self {
        Self {
            holds: w.is_none(),
            witness: w,
        }
    }

    fn render(&self) -> String {
        match &self.witness {
            None => "yes".to_string(),
            Some(w) => format!("no (witness {w})"),
        }
    }
}

#[derive(Serialize)]
struct SpaceReport {
    space: FiniteSpace,
    pseudoultrametric: Verdict,
    ultrametric: Verdict,
    metric: Verdict,
}

fn check_space(config: &RunConfig, path: &Path) -> Result<Outcome, Failure> {
    let space: FiniteSpace = read_json(path)?;
    let label = |i: usize| &space.points()[i];
    let triple = space
        .strong_triangle_violation()
        .map(|t| format!("triple ({}, {}, {})", label(t.x), label(t.y), label(t.z)));
    let pair = space
        .positivity_violation()
        .map(|p| format!("pair ({}, {}) at distance 0", label(p.x), label(p.y)));
    let triangle = space
        .triangle_violation()
        .map(|t| format!("triple ({}, {}, {})", label(t.x), label(t.y), label(t.z)));
    let report = SpaceReport {
        pseudoultrametric: Verdict::from_witness(triple.clone()),
        ultrametric: Verdict::from_witness(pair.clone().or(triple)),
        metric: Verdict::from_witness(pair.or(triangle)),
        space: space.clone(),
    };
    let text = format!(
        "pseudoultrametric: {}, ultrametric: {}, metric: {}\n",
        report.pseudoultrametric.render(),
        report.ultrametric.render(),
        report.metric.render()
    );
    Ok(outcome(config, report, text, 0))
}

#[derive(Serialize)]
struct Counterexample {
    space: FiniteSpace,
    image: Vec<Vec<NonNegRational>>,
}

impl From<OracleCounterexample> for Counterexample {
    fn from(c: OracleCounterexample) -> Self {
        let MappedMatrix { matrix, .. } = c.image;
        Self {
            space: c.space,
            image: matrix,
        }
    }
}

#[derive(Serialize)]
struct OracleReport {
    grid: Vec<NonNegRational>,
    ultra_counterexample: Option<Counterexample>,
    pseudo_counterexample: Option<Counterexample>,
    agrees: bool,
}

#[derive(Serialize)]
struct ClassifyReport {
    verdict: PreservationVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

fn render_matrix(m: &[Vec<NonNegRational>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(ToString::to_string).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn classify_fn(
    config: &RunConfig,
    path: &Path,
    grid: Option<&[NonNegRational]>,
) -> Result<Outcome, Failure> {
    let f: PiecewiseFn = read_json(path)?;
    let verdict = classify(&f);
    let mut text = format!("category: {}\n", verdict.category);
    if let Some(w) = &verdict.witness {
        writeln!(text, "witness: {w}").unwrap();
    }
    let oracle = match grid {
        None => None,
        Some(grid) => {
            let grid: Vec<NonNegRational> = grid
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let ultra = preserving_oracle(&f, &grid, OracleMode::Ultra).map_err(Failure::usage)?;
            let pseudo =
                preserving_oracle(&f, &grid, OracleMode::Pseudo).map_err(Failure::usage)?;
            let agrees = ultra.is_none() == (verdict.category == Category::UltrametricPreserving)
                && pseudo.is_none() == (verdict.category != Category::NotPreserving);
            let report = OracleReport {
                grid,
                ultra_counterexample: ultra.map(Into::into),
                pseudo_counterexample: pseudo.map(Into::into),
                agrees,
            };
            writeln!(
                text,
                "oracle agrees: {}",
                if report.agrees { "yes" } else { "no" }
            )
            .unwrap();
            for (name, c) in [
                ("ultrametric", &report.ultra_counterexample),
                ("pseudoultrametric", &report.pseudo_counterexample),
            ] {
                if let Some(c) = c {
                    writeln!(
                        text,
                        "{name} counterexample: {} -> {}",
                        render_matrix(c.space.matrix()),
                        render_matrix(&c.image)
                    )
                    .unwrap();
                }
            }
            Some(report)
        }
    };
    Ok(outcome(config, ClassifyReport { verdict, oracle }, text, 0))
}

#[derive(Serialize)]
struct EnumerateReport {
    n: usize,
    count: usize,
    tables: EndoSet,
}

fn enumerate(config: &RunConfig, n: usize, only_in: bool) -> Result<Outcome, Failure> {
    let set = if only_in {
        enumerate_in(n)?
    } else {
        enumerate_end(n)?
    };
    let mut text = format!("{} endomorphisms of C_{n}\n", set.len());
    for t in set.tables() {
        writeln!(text, "{t:?}").unwrap();
    }
    let report = EnumerateReport {
        n,
        count: set.len(),
        tables: set,
    };
    Ok(outcome(config, report, text, 0))
}

#[derive(Serialize)]
struct PxReport {
    n: usize,
    spaces: usize,
    px: BTreeSet<CandidateMap>,
    monoid: PxMonoidReport,
}

fn px(config: &RunConfig, path: &Path) -> Result<Outcome, Failure> {
    let class: SpaceClass = read_json(path)?;
    let px = compute_px(&class)?;
    let monoid = verify_px_is_submonoid(&class)?;
    let mut text = format!(
        "|X| = {}, n = {}, |P_X| = {}, identity: {}, closed: {}\n",
        class.len(),
        class.n(),
        px.len(),
        if monoid.identity_present { "yes" } else { "no" },
        if monoid.closure_failure.is_none() {
            "yes"
        } else {
            "no"
        },
    );
    for f in &px {
        writeln!(text, "{:?}", f.table()).unwrap();
    }
    let code = if monoid.passed() { 0 } else { EXIT_FOUND };
    let report = PxReport {
        n: class.n(),
        spaces: class.len(),
        px,
        monoid,
    };
    Ok(outcome(config, report, text, code))
}

fn verify(config: &RunConfig, n: usize) -> Result<Outcome, Failure> {
    let report: VerifyReport = run_suites(n)?;
    let code = if report.passed() { 0 } else { EXIT_FOUND };
    let text = report.to_text();
    Ok(outcome(config, report, text, code))
}

fn conjecture(config: &RunConfig) -> Result<Outcome, Failure> {
    let n = config.n.expect("set for conjecture");
    let mode = config.mode.expect("set for conjecture");
    let search = SearchConfig {
        n,
        mode: match mode {
            Mode::Exhaustive => SearchMode::Exhaustive,
            Mode::Random => SearchMode::Random,
        },
        max_subset_size: config.max_subset_size.map(|m| m as usize),
        samples: config.samples.unwrap_or(0) as usize,
        seed: config.seed,
        rbar_literal: config.rbar_literal,
    };
    if search.mode == SearchMode::Random && search.seed.is_none() {
        return Err(Failure::usage("--mode random requires --seed"));
    }
    let report: SearchReport = conjecture_search(&search)?;
    let code = if report.found_counterexample() {
        EXIT_FOUND
    } else {
        0
    };
    let text = report.to_text();
    Ok(outcome(config, report, text, code))
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let config = RunConfig::from_cli(cli);
    match &cli.command {
        Command::CheckSpace { path } => check_space(&config, path),
        Command::ClassifyFn { path, grid } => classify_fn(&config, path, grid.as_deref()),
        Command::Enumerate {
            n,
            injective_kernel,
        } => enumerate(&config, *n, *injective_kernel),
        Command::Px { path } => px(&config, path),
        Command::Verify { n } => verify(&config, *n),
        Command::Conjecture { .. } => conjecture(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(out) => out,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let body = match cli.format {
        Format::Json => &out.json,
        Format::Text => &out.text,
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, body) {
                eprintln!("error: {}", Failure::io(path, e).message);
                return ExitCode::from(EXIT_IO);
            }
        }
        None => {
            use std::io::Write;
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(body.as_bytes());
        }
    }
    ExitCode::from(out.code)
}
