//! `treeshift`: classify chain recurrence of weighted backward shifts on
//! trees, build and verify δ-chains, and sweep weight grids.
//!
//! Exit codes: 0 decided / valid, 1 input error, 2 inconclusive,
//! 3 construction infeasible at the truncation, 4 invalid chain.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use treeshift::{
    build_chain_from_zero, build_chain_to_zero, build_loop_chain, chain_from_json, chain_to_json,
    classify, classify_closed_form, tree_from_json, verify_chain, weights_from_json,
    Classification, ClosedForm, Error, Recurrence, SeriesVerdict, SpaceSpec, TreeSpec,
    TruncationPolicy, VertexAddress, WeightSpec,
};

const EXIT_INPUT: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INVALID_CHAIN: u8 = 4;

#[derive(Parser)]
#[command(
    name = "treeshift",
    version,
    about = "Chain recurrence of weighted backward shifts on directed trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide chain recurrence at one vertex.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        truncation: TruncationArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Build a verified δ-chain between e_v and 0.
    Chain {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        truncation: TruncationArgs,
        #[command(flatten)]
        direction: DirectionArgs,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check a chain file against a tree and weights.
    Verify {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Overrides the space recorded in the chain file.
        #[arg(long)]
        space: Option<SpaceSpec>,
        /// Overrides the δ recorded in the chain file.
        #[arg(long)]
        delta: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classify a grid of weights, one row per grid point.
    Sweep {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        space: SpaceSpec,
        #[arg(long, default_value = "0:")]
        vertex: VertexAddress,
        /// Constant weights, comma separated.
        #[arg(
            long,
            value_delimiter = ',',
            conflicts_with = "weights_grid",
            required_unless_present = "weights_grid"
        )]
        lambdas: Vec<f64>,
        /// JSON array of weight specs.
        #[arg(long)]
        weights_grid: Option<PathBuf>,
        #[command(flatten)]
        truncation: TruncationArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    /// l1, lp:P or c0.
    #[arg(long)]
    space: SpaceSpec,
    /// Vertex as UP:S1,S2,... relative to the anchor.
    #[arg(long, default_value = "0:")]
    vertex: VertexAddress,
}

#[derive(Args)]
struct TruncationArgs {
    /// Maximum number of levels scanned.
    #[arg(long)]
    nmax: Option<usize>,
    /// Maximum number of explicitly enumerated vertices.
    #[arg(long)]
    cap: Option<usize>,
    /// Partial sum above which a series counts as divergent.
    #[arg(long)]
    threshold: Option<f64>,
    /// Chains stop once the dual sum exceeds margin / δ.
    #[arg(long)]
    margin: Option<f64>,
}

impl TruncationArgs {
    fn policy(&self) -> TruncationPolicy {
        let d = TruncationPolicy::default();
        TruncationPolicy {
            max_level: self.nmax.unwrap_or(d.max_level),
            enumeration_cap: self.cap.unwrap_or(d.enumeration_cap),
            divergence_threshold: self.threshold.unwrap_or(d.divergence_threshold),
            margin: self.margin.unwrap_or(d.margin),
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DirectionArgs {
    #[arg(long)]
    from_zero: bool,
    #[arg(long)]
    to_zero: bool,
    #[arg(long = "loop")]
    loop_: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CriterionNotMetWithinTruncation { .. }
            | Error::EnumerationCapExceeded { .. }
            | Error::ConstructionFailed(_) => EXIT_INFEASIBLE,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_tree(path: &Path) -> Result<TreeSpec, Failure> {
    Ok(tree_from_json(&read(path)?)?)
}

fn load_weights(path: &Path) -> Result<WeightSpec, Failure> {
    Ok(weights_from_json(&read(path)?)?)
}

fn emit(output: &OutputArgs, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_only(output: &OutputArgs, what: &str) -> Result<(), Failure> {
    if output.format == Format::Csv {
        return Err(Failure::input(format!("{what} output is JSON only")));
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifyReport {
    verdict: Recurrence,
    /// `generic` or `closed-form`.
    decided_by: &'static str,
    vertex: VertexAddress,
    space: SpaceSpec,
    root_condition: SeriesVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    left_condition: Option<SeriesVerdict>,
    closed_form: Option<ClosedForm>,
}

fn decide(
    tree: &TreeSpec,
    weights: &WeightSpec,
    space: SpaceSpec,
    v: &VertexAddress,
    policy: &TruncationPolicy,
) -> Result<ClassifyReport, Error> {
    let Classification {
        verdict,
        root_condition,
        left_condition,
    } = classify(tree, weights, space, v, policy)?;
    let closed_form = match classify_closed_form(tree, weights, space, v) {
        Ok(cf) => Some(cf),
        Err(Error::NotCovered(_)) => None,
        Err(e) => return Err(e),
    };
    let (verdict, decided_by) = match (&closed_form, verdict) {
        (Some(cf), Recurrence::Inconclusive) => (cf.verdict, "closed-form"),
        _ => (verdict, "generic"),
    };
    Ok(ClassifyReport {
        verdict,
        decided_by,
        vertex: v.clone(),
        space,
        root_condition,
        left_condition,
        closed_form,
    })
}

fn verdict_code(v: Recurrence) -> u8 {
    match v {
        Recurrence::Inconclusive => EXIT_INCONCLUSIVE,
        _ => 0,
    }
}

fn rule_name(s: &SeriesVerdict) -> String {
    match serde_json::to_value(s.rule).expect("rules serialize") {
        serde_json::Value::String(r) => r,
        _ => "none".into(),
    }
}

fn verdict_name(v: Recurrence) -> String {
    format!("{v:?}")
}

fn cmd_classify(model: &ModelArgs, truncation: &TruncationArgs, output: &OutputArgs) -> CliResult {
    let tree = load_tree(&model.tree)?;
    let weights = load_weights(&model.weights)?;
    let report = decide(
        &tree,
        &weights,
        model.space,
        &model.vertex,
        &truncation.policy(),
    )?;
    let text = match output.format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut t = String::from(
                "vertex,space,verdict,decided_by,root_verdict,root_rule,left_verdict,left_rule\n",
            );
            let left = report.left_condition.as_ref();
            writeln!(
                t,
                "{},{},{},{},{:?},{},{},{}",
                report.vertex,
                report.space,
                verdict_name(report.verdict),
                report.decided_by,
                report.root_condition.verdict,
                rule_name(&report.root_condition),
                left.map_or("".into(), |l| format!("{:?}", l.verdict)),
                left.map_or("".into(), rule_name),
            )
            .expect("string write");
            t
        }
    };
    emit(output, &text)?;
    Ok(verdict_code(report.verdict))
}

fn cmd_chain(
    model: &ModelArgs,
    truncation: &TruncationArgs,
    direction: &DirectionArgs,
    delta: f64,
    output: &OutputArgs,
) -> CliResult {
    json_only(output, "chain")?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Failure::input(format!(
            "--delta must be positive, got {delta}"
        )));
    }
    let tree = load_tree(&model.tree)?;
    let weights = load_weights(&model.weights)?;
    let policy = truncation.policy();
    let build = if direction.from_zero {
        build_chain_from_zero
    } else if direction.to_zero {
        build_chain_to_zero
    } else {
        build_loop_chain
    };
    let chain = build(&model.vertex, delta, &tree, &weights, model.space, &policy)?;
    let mut text = chain_to_json(&chain);
    text.push('\n');
    emit(output, &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyReport {
    valid: bool,
    delta: f64,
    space: SpaceSpec,
    steps: usize,
    defect_norms: Vec<f64>,
    failing_steps: Vec<usize>,
    reconstruction_error: f64,
    step_defects: Vec<treeshift::SparseVector>,
}

fn cmd_verify(
    chain: &Path,
    tree: &Path,
    weights: &Path,
    space: Option<SpaceSpec>,
    delta: Option<f64>,
    output: &OutputArgs,
) -> CliResult {
    json_only(output, "verify")?;
    let chain = chain_from_json(&read(chain)?)?;
    let tree = load_tree(tree)?;
    let weights = load_weights(weights)?;
    let space = space.unwrap_or(chain.space);
    let delta = delta.unwrap_or(chain.delta);
    let r = verify_chain(&chain.vectors, delta, &tree, &weights, space)?;
    let report = VerifyReport {
        valid: r.valid,
        delta,
        space,
        steps: r.step_defects.len(),
        defect_norms: r.defect_norms,
        failing_steps: r.failing_steps,
        reconstruction_error: r.reconstruction_error,
        step_defects: r.step_defects,
    };
    emit(output, &json(&report))?;
    if !report.valid {
        eprintln!(
            "invalid chain: steps {:?} have defects of norm ≥ δ",
            report.failing_steps
        );
        return Ok(EXIT_INVALID_CHAIN);
    }
    Ok(0)
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    /// Set for `--lambdas` grids.
    lambda: Option<f64>,
    verdict: Option<Recurrence>,
    decided_by: Option<&'static str>,
    root_rule: Option<String>,
    left_rule: Option<String>,
    error: Option<String>,
}

fn cmd_sweep(
    tree: &Path,
    space: SpaceSpec,
    vertex: &VertexAddress,
    lambdas: &[f64],
    weights_grid: Option<&Path>,
    truncation: &TruncationArgs,
    output: &OutputArgs,
) -> CliResult {
    let tree = load_tree(tree)?;
    let grid: Vec<(Option<f64>, WeightSpec)> = match weights_grid {
        Some(path) => {
            let specs: Vec<WeightSpec> = serde_json::from_str(&read(path)?)
                .map_err(|e| Failure::input(format!("weight grid: {e}")))?;
            specs.into_iter().map(|w| (None, w)).collect()
        }
        None => lambdas
            .iter()
            .map(|&l| Ok((Some(l), WeightSpec::constant(l)?)))
            .collect::<Result<_, Error>>()?,
    };
    if grid.is_empty() {
        return Err(Failure::input("the grid is empty"));
    }
    let policy = truncation.policy();
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .enumerate()
        .map(
            |(index, (lambda, w))| match decide(&tree, w, space, vertex, &policy) {
                Ok(r) => SweepRow {
                    index,
                    lambda: *lambda,
                    verdict: Some(r.verdict),
                    decided_by: Some(r.decided_by),
                    root_rule: Some(rule_name(&r.root_condition)),
                    left_rule: r.left_condition.as_ref().map(rule_name),
                    error: None,
                },
                Err(e) => SweepRow {
                    index,
                    lambda: *lambda,
                    verdict: None,
                    decided_by: None,
                    root_rule: None,
                    left_rule: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();

    let text = match output.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut t = String::from("index,lambda,verdict,decided_by,root_rule,left_rule,error\n");
            for r in &rows {
                writeln!(
                    t,
                    "{},{},{},{},{},{},{}",
                    r.index,
                    r.lambda.map_or(String::new(), float),
                    r.verdict.map_or(String::new(), verdict_name),
                    r.decided_by.unwrap_or(""),
                    r.root_rule.as_deref().unwrap_or(""),
                    r.left_rule.as_deref().unwrap_or(""),
                    r.error
                        .as_deref()
                        .map_or(String::new(), |e| format!("\"{}\"", e.replace('"', "\"\""))),
                )
                .expect("string write");
            }
            t
        }
    };
    emit(output, &text)?;
    let code = if rows.iter().any(|r| r.error.is_some()) {
        EXIT_INPUT
    } else if rows
        .iter()
        .any(|r| r.verdict == Some(Recurrence::Inconclusive))
    {
        EXIT_INCONCLUSIVE
    } else {
        0
    };
    Ok(code)
}

fn run(cli: Cli) -> CliResult {
    match &cli.command {
        Command::Classify {
            model,
            truncation,
            output,
        } => cmd_classify(model, truncation, output),
        Command::Chain {
            model,
            truncation,
            direction,
            delta,
            output,
        } => cmd_chain(model, truncation, direction, *delta, output),
        Command::Verify {
            chain,
            tree,
            weights,
            space,
            delta,
            output,
        } => cmd_verify(chain, tree, weights, *space, *delta, output),
        Command::Sweep {
            tree,
            space,
            vertex,
            lambdas,
            weights_grid,
            truncation,
            output,
        } => cmd_sweep(
            tree,
            *space,
            vertex,
            lambdas,
            weights_grid.as_deref(),
            truncation,
            output,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
