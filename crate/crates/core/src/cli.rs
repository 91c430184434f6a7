//! Command-line front end: `eval`, `table`, `sweep`, `bound` and `search`.
//!
//! Exit status is 0 on success, 1 when a box, protocol file or computation
//! is rejected, and 2 for usage errors (bad flags, unknown names, depths the
//! requested mode does not support).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::formulas::{input_independent_bound, nonadaptive_bound};
use crate::analysis::region::{distillable_region, format_sig10, write_csv, Grid};
use crate::boxes::{BoxParams, NoSignalingBox};
use crate::error::Error;
use crate::evaluator::{distill, distilled_value, evaluate_nonadaptive};
use crate::protocols::{
    adaptive_parity_protocol, allcock2_protocol, allcock_generalized_protocol, allcock_permuted_protocol,
    embed_nonadaptive, new_depth3_protocol, parity_protocol, NamedProtocol, NonAdaptiveFile, Protocol,
    ProtocolFile,
};
use crate::search;

/// Depth above which `eval` warns about run time (4^n outcome paths).
pub const WARN_DEPTH: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "nlbd", version, about = "Nonlocal-box distillation: exact evaluation, tables, sweeps and search")]
struct Cli {
    /// Worker threads for data-parallel work.
    #[arg(long, env = "NLBD_WORKERS", global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply a protocol to a box and report the distilled box.
    Eval(EvalArgs),
    /// Recompute one of the reference comparison tables.
    Table(TableArgs),
    /// Evaluate protocols over a symmetric (delta, epsilon) grid.
    Sweep(SweepArgs),
    /// Upper bound on non-adaptive wirings and the parity depth attaining it.
    Bound(BoundArgs),
    /// Search protocol space for the best wiring on a box.
    Search(SearchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
#[group(id = "box_source", required = true, multiple = false)]
struct BoxArgs {
    /// Biases "d1,d2,d3,eps" of the four input rows.
    #[arg(long = "box", allow_hyphen_values = true, group = "box_source")]
    biases: Option<String>,
    /// Symmetric box "delta,eps".
    #[arg(long, allow_hyphen_values = true, group = "box_source")]
    symmetric: Option<String>,
    /// JSON file holding biases or 16 raw probabilities {"p": [...]}.
    #[arg(long, group = "box_source")]
    box_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
#[group(id = "protocol_source", required = true, multiple = false)]
struct ProtocolArgs {
    /// parity, bs, gen (need --depth), allcock2, perm, new3, or a numbered form such as parity3.
    #[arg(long, group = "protocol_source")]
    protocol: Option<String>,
    /// JSON protocol file, adaptive or non-adaptive form.
    #[arg(long, group = "protocol_source")]
    protocol_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    source: BoxArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Depth for the parity, bs and gen families.
    #[arg(long)]
    depth: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableId {
    #[value(name = "I", alias = "1")]
    One,
    #[value(name = "II", alias = "2")]
    Two,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(value_enum)]
    which: TableId,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Delta grid "START:STOP:STEP" or a single value.
    #[arg(long, allow_hyphen_values = true, default_value = "-1:1:0.01")]
    delta: String,
    /// Epsilon grid "START:STOP:STEP" or a single value.
    #[arg(long, allow_hyphen_values = true, default_value = "-1:1:0.01")]
    epsilon: String,
    /// Comma-separated protocol names such as parity2,bs2,allcock2,new3.
    #[arg(long, value_delimiter = ',')]
    protocols: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    source: BoxArgs,
    #[arg(long, default_value_t = 8)]
    max_depth: u32,
    /// Include constant outputs (k = 0): the exact optimum for output tables
    /// that ignore the party's input.
    #[arg(long)]
    input_independent: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[group(id = "mode", required = true, multiple = false)]
struct SearchMode {
    #[arg(long, group = "mode")]
    nonadaptive: bool,
    #[arg(long, group = "mode")]
    adaptive: bool,
    /// Compare the built-in protocols of depth at most --depth.
    #[arg(long, group = "mode")]
    builtin: bool,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    source: BoxArgs,
    #[command(flatten)]
    mode: SearchMode,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Sample this many random table pairs instead of enumerating.
    #[arg(long)]
    sample: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Let the first box take any function of the input (adaptive mode).
    #[arg(long)]
    unrestricted: bool,
    /// Use one output table per party, shared by both inputs (non-adaptive mode).
    #[arg(long)]
    input_independent: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Invalid(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Entry point for the binary; returns the process exit status.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let workers = match cli.workers {
        Some(0) => return Err(usage("--workers must be at least 1")),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Table(a) => cmd_table(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Search(a) => cmd_search(a),
    })
}

fn parse_list(flag: &str, s: &str, len: usize) -> CliResult<Vec<f64>> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("--{flag} expects {len} comma-separated numbers, got {s:?}")))?;
    if values.len() != len {
        return Err(usage(format!("--{flag} expects {len} comma-separated numbers, got {}", values.len())));
    }
    Ok(values)
}

fn load_box(a: &BoxArgs) -> CliResult<NoSignalingBox> {
    if let Some(s) = &a.biases {
        let v = parse_list("box", s, 4)?;
        Ok(NoSignalingBox::general(BoxParams::new(v[0], v[1], v[2], v[3])?)?)
    } else if let Some(s) = &a.symmetric {
        let v = parse_list("symmetric", s, 2)?;
        Ok(NoSignalingBox::symmetric(v[0], v[1])?)
    } else if let Some(path) = &a.box_file {
        Ok(NoSignalingBox::load(path)?)
    } else {
        Err(usage("a box is required: --box, --symmetric or --box-file"))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyProtocolFile {
    Adaptive(ProtocolFile),
    NonAdaptive(NonAdaptiveFile),
}

fn load_protocol_file(path: &Path) -> CliResult<Protocol> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let file: AnyProtocolFile = serde_json::from_str(&text).map_err(Error::from)?;
    Ok(match file {
        AnyProtocolFile::Adaptive(p) => p.build()?,
        AnyProtocolFile::NonAdaptive(p) => embed_nonadaptive(&p.build()?),
    })
}

fn resolve_protocol(a: &ProtocolArgs, depth: Option<usize>) -> CliResult<(String, Protocol)> {
    if let Some(path) = &a.protocol_file {
        return Ok((path.display().to_string(), load_protocol_file(path)?));
    }
    let name = a.protocol.as_deref().ok_or_else(|| usage("--protocol or --protocol-file is required"))?;
    let named = NamedProtocol::from_name(name, depth).map_err(|e| usage(e.to_string()))?;
    if named.depth() == 0 || named.depth() > crate::protocols::MAX_DEPTH {
        return Err(usage(format!("depth must be in 1..={}", crate::protocols::MAX_DEPTH)));
    }
    Ok((named.to_string(), named.build().map_err(|e| usage(e.to_string()))?))
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from)?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Error::from)?,
    }
    Ok(())
}

fn to_json(v: &impl Serialize) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v).map_err(Error::from)?)
}

#[derive(Serialize)]
struct EvalReport<'a> {
    protocol: &'a str,
    depth: usize,
    v_in: f64,
    v_out: f64,
    distills: bool,
    distilled: NoSignalingBox,
}

fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    let bx = load_box(&a.source)?;
    let (name, proto) = resolve_protocol(&a.protocol, a.depth)?;
    if proto.depth() > WARN_DEPTH {
        eprintln!("warning: depth {} enumerates 4^{} outcome paths per input pair", proto.depth(), proto.depth());
    }
    let out = distill(&proto, &bx)?;
    let report = EvalReport {
        protocol: &name,
        depth: proto.depth(),
        v_in: bx.chsh_value(),
        v_out: out.chsh_value(),
        distills: out.chsh_value() - bx.chsh_value() > crate::analysis::DISTILL_THRESHOLD,
        distilled: out,
    };
    let text = match a.output.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut header = vec!["protocol".to_string(), "depth".into(), "v_in".into(), "v_out".into(), "distills".into()];
            let mut row = vec![
                report.protocol.to_string(),
                report.depth.to_string(),
                format_sig10(report.v_in),
                format_sig10(report.v_out),
                u8::from(report.distills).to_string(),
            ];
            for xy in 0..4 {
                for ab in 0..4 {
                    header.push(format!("p_{}{}_{}{}", xy >> 1, xy & 1, ab >> 1, ab & 1));
                    row.push(format_sig10(report.distilled.rows()[xy][ab]));
                }
            }
            format!("{}\n{}\n", header.join(","), row.join(","))
        }
    };
    emit(&a.output.out, &text)
}

/// Rounds half away from zero to 4 decimals.
pub fn round4(v: f64) -> f64 {
    let r = (v * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// One recomputed table row: box parameters and `(column, value)` cells.
/// Column `P` is the box's own value; the rest are protocol outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub params: Vec<f64>,
    pub cells: Vec<(&'static str, f64)>,
    /// Parity depth behind the `P_parity` cell when it is optimised over depth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity_depth: Option<usize>,
}

impl TableRow {
    pub fn cell(&self, name: &str) -> Option<f64> {
        self.cells.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    /// Protocol columns whose 4-decimal value equals the row maximum.
    pub fn best(&self) -> Vec<&'static str> {
        let protocols = || self.cells.iter().filter(|(n, _)| *n != "P");
        let top = protocols().map(|(_, v)| round4(*v)).fold(f64::NEG_INFINITY, f64::max);
        protocols().filter(|(_, v)| round4(*v) == top).map(|(n, _)| *n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub param_names: Vec<&'static str>,
    pub rows: Vec<TableRow>,
}

const TABLE_ONE_BOXES: [[f64; 4]; 4] =
    [[0.92, 0.92, 0.92, -0.22], [0.96, 0.84, 0.96, 0.24], [0.96, 0.96, 0.84, 0.24], [0.96, 0.96, 0.96, 0.60]];

const TABLE_TWO_BOXES: [[f64; 2]; 3] = [[0.96, -0.48], [0.96, 0.60], [0.92, -0.22]];

/// Largest depth considered for the optimal-depth parity column.
pub const TABLE_PARITY_MAX_DEPTH: usize = 8;

/// Depth-2 comparison: own value, parity, adaptive parity, Allcock and its
/// permuted variant, all through the evaluator.
pub fn table_one() -> crate::Result<Table> {
    let bs = adaptive_parity_protocol(2)?;
    let parity = parity_protocol(2)?;
    let rows = TABLE_ONE_BOXES
        .iter()
        .map(|p| {
            let bx = NoSignalingBox::general(BoxParams::new(p[0], p[1], p[2], p[3])?)?;
            Ok(TableRow {
                params: p.to_vec(),
                cells: vec![
                    ("P", bx.chsh_value()),
                    ("P_parity", evaluate_nonadaptive(&parity, &bx)?.chsh_value()),
                    ("P_BS", distilled_value(&bs, &bx)?),
                    ("P_A", distilled_value(&allcock2_protocol(), &bx)?),
                    ("P_perm", distilled_value(&allcock_permuted_protocol(), &bx)?),
                ],
                parity_depth: None,
            })
        })
        .collect::<crate::Result<_>>()?;
    Ok(Table { param_names: vec!["delta1", "delta2", "delta3", "epsilon"], rows })
}

/// Best parity depth in `1..=max_depth` (smallest on ties) and its value.
pub fn optimal_parity(bx: &NoSignalingBox, max_depth: usize) -> crate::Result<(usize, f64)> {
    let mut best = (0, f64::NEG_INFINITY);
    for k in 1..=max_depth {
        let v = evaluate_nonadaptive(&parity_protocol(k)?, bx)?.chsh_value();
        if v > best.1 + crate::TOL {
            best = (k, v);
        }
    }
    Ok(best)
}

/// Mixed-depth comparison on symmetric boxes: own value, optimal-depth
/// parity, Allcock, its depth-3 and depth-6 generalisations, and the new
/// depth-3 wiring.
pub fn table_two() -> crate::Result<Table> {
    let gen3 = allcock_generalized_protocol(3)?;
    let gen6 = allcock_generalized_protocol(6)?;
    let rows = TABLE_TWO_BOXES
        .iter()
        .map(|&[d, e]| {
            let bx = NoSignalingBox::symmetric(d, e)?;
            let (k, parity) = optimal_parity(&bx, TABLE_PARITY_MAX_DEPTH)?;
            Ok(TableRow {
                params: vec![d, e],
                cells: vec![
                    ("P", bx.chsh_value()),
                    ("P_parity", parity),
                    ("P_A", distilled_value(&allcock2_protocol(), &bx)?),
                    ("P_3", distilled_value(&gen3, &bx)?),
                    ("P_6", distilled_value(&gen6, &bx)?),
                    ("P_new", distilled_value(&new_depth3_protocol(), &bx)?),
                ],
                parity_depth: Some(k),
            })
        })
        .collect::<crate::Result<_>>()?;
    Ok(Table { param_names: vec!["delta", "epsilon"], rows })
}

/// CSV with 4-decimal cells and a `best` column listing the maximal
/// protocol columns separated by `|`.
pub fn table_csv(t: &Table) -> String {
    let mut header: Vec<String> = t.param_names.iter().map(|s| s.to_string()).collect();
    if let Some(first) = t.rows.first() {
        for (name, _) in &first.cells {
            header.push(name.to_string());
            if *name == "P_parity" && first.parity_depth.is_some() {
                header.push("parity_depth".into());
            }
        }
    }
    header.push("best".into());
    let mut text = header.join(",") + "\n";
    for r in &t.rows {
        let mut line: Vec<String> = r.params.iter().map(|v| format_sig10(*v)).collect();
        for (name, v) in &r.cells {
            line.push(format!("{:.4}", round4(*v)));
            if let (true, Some(k)) = (*name == "P_parity", r.parity_depth) {
                line.push(k.to_string());
            }
        }
        line.push(r.best().join("|"));
        text += &(line.join(",") + "\n");
    }
    text
}

fn cmd_table(a: TableArgs) -> CliResult<()> {
    let table = match a.which {
        TableId::One => table_one()?,
        TableId::Two => table_two()?,
    };
    let text = match a.output.format {
        Format::Csv => table_csv(&table),
        Format::Json => to_json(&table)?,
    };
    emit(&a.output.out, &text)
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let deltas: Grid = a.delta.parse().map_err(|e: Error| usage(format!("--delta: {e}")))?;
    let epsilons: Grid = a.epsilon.parse().map_err(|e: Error| usage(format!("--epsilon: {e}")))?;
    let protocols = if a.protocols.is_empty() {
        NamedProtocol::sweep_defaults()
    } else {
        a.protocols
            .iter()
            .map(|s| s.trim().parse::<NamedProtocol>().map_err(|e| usage(e.to_string())))
            .collect::<CliResult<Vec<_>>>()?
    };
    let records = distillable_region(&protocols, &deltas.points(), &epsilons.points())?;
    let text = match a.output.format {
        Format::Json => to_json(&records)?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&records, &protocols, &mut buf)?;
            String::from_utf8(buf).expect("CSV is ASCII")
        }
    };
    emit(&a.output.out, &text)
}

#[derive(Serialize)]
struct BoundReport {
    bound: f64,
    depth: u32,
    max_depth: u32,
    input_independent: bool,
}

fn cmd_bound(a: BoundArgs) -> CliResult<()> {
    if a.max_depth == 0 {
        return Err(usage("--max-depth must be at least 1"));
    }
    let bx = load_box(&a.source)?;
    let params = bx.correlators().to_params();
    let b = if a.input_independent {
        input_independent_bound(&params, a.max_depth)?
    } else {
        nonadaptive_bound(&params, a.max_depth)?
    };
    let report = BoundReport { bound: b.value, depth: b.depth, max_depth: a.max_depth, input_independent: a.input_independent };
    let text = match a.output.format {
        Format::Json => to_json(&report)?,
        Format::Csv => format!("bound,k\n{},{}\n", format_sig10(b.value), b.depth),
    };
    emit(&a.output.out, &text)
}

fn cmd_search(a: SearchArgs) -> CliResult<()> {
    let bx = load_box(&a.source)?;
    let report = if a.mode.builtin {
        if a.depth == 0 || a.depth > crate::protocols::MAX_DEPTH {
            return Err(usage(format!("--depth must be in 1..={}", crate::protocols::MAX_DEPTH)));
        }
        search::best_builtin(&bx, a.depth)?
    } else if a.mode.adaptive {
        if a.depth != 2 {
            return Err(usage(format!("adaptive search supports --depth 2 only, got {}", a.depth)));
        }
        if a.sample.is_some() || a.input_independent {
            return Err(usage("--sample and --input-independent apply to --nonadaptive"));
        }
        search::search_adaptive_depth2(&bx, !a.unrestricted)?
    } else {
        if a.unrestricted {
            return Err(usage("--unrestricted applies to --adaptive"));
        }
        match (a.sample, a.input_independent) {
            (Some(_), true) => return Err(usage("--sample and --input-independent are exclusive")),
            (Some(n), false) => {
                if a.depth == 0 || a.depth > 6 {
                    return Err(usage(format!("sampled search supports --depth 1..=6, got {}", a.depth)));
                }
                if n == 0 {
                    return Err(usage("--sample must be at least 1"));
                }
                search::search_nonadaptive_sampled(&bx, a.depth, n, a.seed)?
            }
            (None, true) => {
                if a.depth == 0 || a.depth > 3 {
                    return Err(usage(format!(
                        "input-independent search supports --depth 1..=3, got {}",
                        a.depth
                    )));
                }
                search::search_nonadaptive_input_independent(&bx, a.depth)?
            }
            (None, false) => {
                if a.depth == 0 || a.depth > search::MAX_EXHAUSTIVE_NONADAPTIVE {
                    return Err(usage(format!(
                        "exhaustive non-adaptive search supports --depth 1..={}, got {}; use --sample N for larger depths",
                        search::MAX_EXHAUSTIVE_NONADAPTIVE,
                        a.depth
                    )));
                }
                search::search_nonadaptive(&bx, a.depth)?
            }
        }
    };
    emit(&a.out, &report.to_json()?)
}
