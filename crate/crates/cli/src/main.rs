//! `entcap`: entangling-capacity tables, bounds for user gates, and self
//! checks.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use entcap::capacity::{capacity_bracket, CapacityBracket, SearchConfig};
use entcap::channels::{
    gate_family, parse_gate_json, unitary_channel_labeled, GateFamily, KrausChannel,
};
use entcap::experiments::{
    cnot_family, phase_curve, random_qudits, CNOT_COLUMNS, PHASE_COLUMNS, QUDIT_COLUMNS,
};
use entcap::{par, verify, Error};

use output::{emit, sibling, to_csv, to_json, Cell, RunManifest};

#[derive(Parser)]
#[command(
    name = "entcap",
    version,
    about = "Log-negativity entangling capacity of bipartite gates and channels"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct Global {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Restarts per search.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Iteration cap per restart.
    #[arg(long, global = true)]
    iters: Option<usize>,
    /// Convergence tolerance of the search.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Ancilla dimensions `da,db` (default: copy the targets).
    #[arg(long, global = true, value_parser = parse_pair)]
    ancilla_dims: Option<(usize, usize)>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Phase gate exp(iφ Z⊗Z) over φ ∈ [0, π/2].
    PhaseCurve {
        #[arg(long, default_value_t = 33, value_parser = clap::value_parser!(u64).range(2..))]
        grid_points: u64,
    },
    /// Unassisted value and dual bound for Haar random unitaries.
    RandomQudits {
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
        dim: u64,
    },
    /// Controlled-shift gates U_d for d = 2..=d_max.
    CnotFamily {
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
        d_max: u64,
    },
    /// Bounds and capacity bracket for one gate.
    Analyze {
        /// Gate file (JSON).
        #[arg(long, required_unless_present = "family", conflicts_with = "family")]
        gate_file: Option<PathBuf>,
        /// Named gate, e.g. `cnot_d:3`, `swap:2`, `phase:0.5`.
        #[arg(long)]
        family: Option<String>,
    },
    /// Run the invariant groups.
    Verify,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected da,db")?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{t}` is not a dimension"))
    };
    Ok((parse(a)?, parse(b)?))
}

enum Failure {
    Input(String),
    Math(String),
    Verify(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Math(_) => 2,
            Failure::Verify(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Math(m) | Failure::Verify(m) => m,
        }
    }
}

/// Errors from a computation on already validated input.
fn computation(e: Error) -> Failure {
    match e {
        Error::InvalidParameter(_)
        | Error::GateFile(_)
        | Error::UnknownGate(_)
        | Error::NotUnitary(_) => Failure::Input(e.to_string()),
        other => Failure::Math(other.to_string()),
    }
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn search_config(g: &Global) -> Result<SearchConfig, Failure> {
    let mut cfg = SearchConfig {
        seed: g.seed,
        ancilla_dims: g.ancilla_dims,
        ..SearchConfig::default()
    };
    if let Some(r) = g.restarts {
        cfg.restarts = r;
    }
    if let Some(i) = g.iters {
        cfg.max_iters = i;
    }
    if let Some(t) = g.tol {
        cfg.convergence_tol = t;
    }
    cfg.validate().map_err(input)?;
    Ok(cfg)
}

struct Run<'a> {
    out: Option<&'a Path>,
    format: Format,
    outputs: Vec<PathBuf>,
}

impl Run<'_> {
    fn write(&mut self, text: &str) -> Result<(), Failure> {
        if let Some(p) = emit(self.out, text).map_err(input)? {
            self.outputs.push(p);
        }
        Ok(())
    }
}

fn phase(run: &mut Run, points: usize, cfg: &SearchConfig) -> Result<(), Failure> {
    let rows = phase_curve(points, cfg).map_err(computation)?;
    let text = match run.format {
        Format::Json => to_json(&rows).map_err(Failure::Math)?,
        Format::Csv => {
            let cells: Vec<Vec<Cell>> = rows
                .iter()
                .map(|r| r.values().iter().map(|&x| Cell::Num(x)).collect())
                .collect();
            to_csv(&PHASE_COLUMNS, &cells).map_err(Failure::Math)?
        }
    };
    run.write(&text)
}

fn qudits(run: &mut Run, n: usize, dim: usize, cfg: &SearchConfig) -> Result<(), Failure> {
    let report = random_qudits(n, dim, cfg.seed, cfg).map_err(computation)?;
    let text = match run.format {
        Format::Json => to_json(&report).map_err(Failure::Math)?,
        Format::Csv => {
            let cells: Vec<Vec<Cell>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.index as u64),
                        Cell::Int(r.unitary_seed),
                        Cell::Num(r.e_ln_unassisted),
                        Cell::Num(r.e_n_dual),
                        Cell::Num(r.gap),
                    ]
                })
                .collect();
            to_csv(&QUDIT_COLUMNS, &cells).map_err(Failure::Math)?
        }
    };
    run.write(&text)?;
    let summary = to_json(&report.summary).map_err(Failure::Math)?;
    match run.out {
        Some(p) => {
            let path = sibling(p, "summary.json");
            std::fs::write(&path, summary)
                .map_err(|e| input(format!("cannot write {}: {e}", path.display())))?;
            run.outputs.push(path);
        }
        None => eprint!("{summary}"),
    }
    Ok(())
}

fn cnot(run: &mut Run, d_max: usize, cfg: &SearchConfig) -> Result<(), Failure> {
    let rows = cnot_family(d_max, cfg).map_err(computation)?;
    let text = match run.format {
        Format::Json => to_json(&rows).map_err(Failure::Math)?,
        Format::Csv => {
            let cells: Vec<Vec<Cell>> = rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.d as u64),
                        Cell::Num(r.choi_lower_analytic),
                        Cell::Num(r.choi_numeric),
                        Cell::Num(r.ec_numeric),
                        Cell::Num(r.ec_exact),
                        Cell::Num(r.thm2_analytic),
                        Cell::Num(r.thm2_numeric),
                        Cell::Bool(r.choi_agrees),
                        Cell::Bool(r.ec_agrees),
                        Cell::Bool(r.thm2_agrees),
                    ]
                })
                .collect();
            to_csv(&CNOT_COLUMNS, &cells).map_err(Failure::Math)?
        }
    };
    run.write(&text)
}

fn load_channel(gate_file: Option<&Path>, family: Option<&str>) -> Result<KrausChannel, Failure> {
    let (op, label) = match (gate_file, family) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
            (
                parse_gate_json(&text).map_err(input)?,
                path.display().to_string(),
            )
        }
        (None, Some(name)) => {
            let fam: GateFamily = name.parse().map_err(input)?;
            (gate_family(&fam).map_err(input)?, fam.to_string())
        }
        (None, None) => return Err(input("either --gate-file or --family is required")),
    };
    let kraus = op.clone();
    match unitary_channel_labeled(&op, &label) {
        Ok(ch) => Ok(ch),
        Err(Error::NotUnitary(_)) => KrausChannel::new(vec![kraus], label).map_err(input),
        Err(e) => Err(input(e)),
    }
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    channel: &'a str,
    bracket: &'a CapacityBracket,
}

fn analyze(run: &mut Run, ch: &KrausChannel, cfg: &SearchConfig) -> Result<(), Failure> {
    let b = capacity_bracket(ch, cfg).map_err(computation)?;
    let text = match run.format {
        Format::Json => to_json(&AnalyzeReport {
            channel: ch.label(),
            bracket: &b,
        })
        .map_err(Failure::Math)?,
        Format::Csv => {
            let c = &b.certificate;
            let rows = vec![
                vec![Cell::Text("channel".into()), Cell::Text(ch.label().into())],
                vec![Cell::Text("lower".into()), Cell::Num(b.lower)],
                vec![Cell::Text("upper".into()), Cell::Num(b.upper)],
                vec![Cell::Text("width".into()), Cell::Num(b.width)],
                vec![
                    Cell::Text("lower_source".into()),
                    Cell::Text(b.lower_source.into()),
                ],
                vec![
                    Cell::Text("upper_source".into()),
                    Cell::Text(b.upper_source.into()),
                ],
                vec![
                    Cell::Text("operator_norm_bound".into()),
                    Cell::Num(c.upper_thm2),
                ],
                vec![Cell::Text("choi_lower".into()), Cell::Num(c.choi_lower)],
                vec![
                    Cell::Text("basic_closed_form".into()),
                    c.basic_closed_form
                        .map_or(Cell::Text(String::new()), Cell::Num),
                ],
                vec![
                    Cell::Text("unassisted".into()),
                    Cell::Num(b.unassisted.value),
                ],
                vec![Cell::Text("dual".into()), Cell::Num(b.dual.value)],
                vec![
                    Cell::Text("assisted_probe".into()),
                    Cell::Num(b.assisted.value),
                ],
            ];
            to_csv(&["field", "value"], &rows).map_err(Failure::Math)?
        }
    };
    run.write(&text)
}

fn run_verify(run: &mut Run, cfg: &SearchConfig) -> Result<(), Failure> {
    let report = verify::run(cfg, &verify::Hooks::default());
    let text = match run.format {
        Format::Json => to_json(&report).map_err(Failure::Math)?,
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = report
                .groups
                .iter()
                .map(|g| {
                    vec![
                        Cell::Text(g.name.into()),
                        Cell::Bool(g.passed),
                        Cell::Int(g.checks as u64),
                        Cell::Text(g.failures.join("; ")),
                    ]
                })
                .collect();
            to_csv(&["group", "passed", "checks", "failures"], &rows).map_err(Failure::Math)?
        }
    };
    run.write(&text)?;
    if report.passed {
        return Ok(());
    }
    let failed: Vec<String> = report
        .groups
        .iter()
        .filter(|g| !g.passed)
        .map(|g| format!("{}: {}", g.name, g.failures.join("; ")))
        .collect();
    Err(Failure::Verify(format!(
        "verification failed\n{}",
        failed.join("\n")
    )))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("entcap: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let threads = par::threads_from_env().map_err(input)?;
    par::init_thread_pool(threads).map_err(input)?;
    let cfg = search_config(&cli.global)?;
    let tabular = matches!(
        cli.command,
        Command::PhaseCurve { .. } | Command::RandomQudits { .. } | Command::CnotFamily { .. }
    );
    let format = cli
        .global
        .format
        .unwrap_or(if tabular { Format::Csv } else { Format::Json });
    let mut run = Run {
        out: cli.global.out.as_deref(),
        format,
        outputs: Vec::new(),
    };
    let (name, result) = match &cli.command {
        Command::PhaseCurve { grid_points } => {
            ("phase-curve", phase(&mut run, *grid_points as usize, &cfg))
        }
        Command::RandomQudits { n, dim } => (
            "random-qudits",
            qudits(&mut run, *n as usize, *dim as usize, &cfg),
        ),
        Command::CnotFamily { d_max } => ("cnot-family", cnot(&mut run, *d_max as usize, &cfg)),
        Command::Analyze { gate_file, family } => {
            let ch = load_channel(gate_file.as_deref(), family.as_deref())?;
            ("analyze", analyze(&mut run, &ch, &cfg))
        }
        Command::Verify => ("verify", run_verify(&mut run, &cfg)),
    };
    if !matches!(result, Err(Failure::Input(_))) {
        write_manifest(cli, name, &cfg, format, threads, start, &run.outputs)?;
    }
    result
}

fn write_manifest(
    cli: &Cli,
    name: &str,
    cfg: &SearchConfig,
    format: Format,
    threads: Option<usize>,
    start: Instant,
    outputs: &[PathBuf],
) -> Result<(), Failure> {
    let config = serde_json::json!({
        "search": cfg,
        "arguments": &cli.command,
        "format": format,
        "out": &cli.global.out,
    });
    let manifest = RunManifest {
        command: std::env::args().collect(),
        subcommand: name.to_string(),
        config,
        seed: cfg.seed,
        version: entcap::VERSION.to_string(),
        parallel: par::parallel_available() && cfg.parallel,
        threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Math(e.to_string()))? + "\n";
    match &cli.global.out {
        Some(p) => {
            let path = sibling(p, "manifest.json");
            std::fs::write(&path, text)
                .map_err(|e| input(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}
