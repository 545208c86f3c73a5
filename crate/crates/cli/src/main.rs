//! Command-line driver for the contracted-equation ground-state
//! solver: single runs with convergence traces, exact-diagonalization
//! reference energies, and sparsification parameter sweeps that emit
//! plot-ready CSV.
//!
//! Exit codes mirror the solver's termination: 0 converged, 2 hit the
//! iteration cap, 3 line-search failure, 4 stalled (sparsification
//! kept nothing); 1 is reserved for input errors of any kind.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use cqe_core::optimize::{run_cqe, OptimizerKind, RunConfig, RunResult, Termination};
use cqe_core::oracle;
use cqe_core::pauli::{hamiltonian_to_pauli, Encoding};
use cqe_core::{MolecularIntegrals, SparsityCriterion};

#[derive(Parser)]
#[command(
    name = "cqe",
    version,
    about = "Ground-state solver for small molecular Hamiltonians driven by contracted-equation residuals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem, optionally writing a convergence trace.
    Run(RunArgs),
    /// Print the exact ground-state energy of the particle sector.
    Fci(FciArgs),
    /// Run a grid of sparsification settings over one problem.
    Sweep(SweepArgs),
}

/// Solver settings shared by `run` and `sweep`.  Every flag can also
/// be given in a `key=value` configuration file; a flag on the command
/// line wins over the file.
#[derive(Args, Clone, Default)]
struct SolverFlags {
    /// FCIDUMP file with the molecular integrals.
    #[arg(long)]
    fcidump: Option<PathBuf>,
    /// Configuration file (`key=value` lines, `#` comments).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ansatz generator encoding: fermionic | unencoded.
    #[arg(long)]
    encoding: Option<String>,
    /// Optimizer: gd | gd-quad | cg-fr | bfgs | lbfgs.
    #[arg(long)]
    optimizer: Option<String>,
    /// Convergence threshold on the residual norm.
    #[arg(long)]
    threshold: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Merge window depth (0 disables merging).
    #[arg(long)]
    p_depth: Option<usize>,
    /// Relative sparsity cut in [0, 1].
    #[arg(long)]
    sparsity_c: Option<f64>,
    /// Sparsification score: abs | descent.
    #[arg(long)]
    criterion: Option<String>,
    /// Keep merge-window elements regardless of the cut: true | false.
    #[arg(long)]
    include: Option<bool>,
    /// Step length for gd, probe length for gd-quad.
    #[arg(long)]
    alpha_fixed: Option<f64>,
    /// Upper clamp for the gd-quad fitted step.
    #[arg(long)]
    alpha_max: Option<f64>,
    /// Number of curvature pairs kept by lbfgs.
    #[arg(long)]
    lbfgs_memory: Option<usize>,
    /// Sufficient-decrease constant of the line search.
    #[arg(long)]
    wolfe_c1: Option<f64>,
    /// Curvature constant of the line search.
    #[arg(long)]
    wolfe_c2: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    solver: SolverFlags,
    /// Write the per-iteration CSV trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON run summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct FciArgs {
    /// FCIDUMP file with the molecular integrals.
    #[arg(long)]
    fcidump: Option<PathBuf>,
    /// Configuration file (`key=value` lines, `#` comments).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    solver: SolverFlags,
    /// Sparsity cuts to sweep (comma-separated).
    #[arg(long, default_value = "0.125,0.25,0.5,0.9")]
    grid_c: String,
    /// Merge depths to sweep (comma-separated).
    #[arg(long, default_value = "1,3,5,7,9")]
    grid_p_depth: String,
    /// Sparsification criteria to sweep (comma-separated).
    #[arg(long, default_value = "abs,descent")]
    grid_criterion: String,
    /// Include-window settings to sweep (comma-separated).
    #[arg(long, default_value = "false,true")]
    grid_include: String,
    /// Directory for one CSV trace per cell (omit to skip traces).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the combined summary CSV here (omit to print it).
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Fci(args) => cmd_fci(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn exit_code(termination: Termination) -> u8 {
    match termination {
        Termination::Converged => 0,
        Termination::MaxIterations => 2,
        Termination::LineSearchFailed => 3,
        Termination::Stalled => 4,
    }
}

// ---------------------------------------------------------------------------
// Configuration resolution: defaults < config file < command-line flags.

const CONFIG_KEYS: &[&str] = &[
    "fcidump",
    "encoding",
    "optimizer",
    "threshold",
    "max-iter",
    "p-depth",
    "sparsity-c",
    "criterion",
    "include",
    "alpha-fixed",
    "alpha-max",
    "lbfgs-memory",
    "wolfe-c1",
    "wolfe-c2",
    "trace",
    "summary",
];

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    parse_config_text(&text).map_err(|(line, what)| {
        format!("{}:{line}: {what}", path.display())
    })
}

fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, (usize, String)> {
    let mut map = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err((index + 1, format!("expected key=value, got `{line}`")));
        };
        let key = key.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err((index + 1, format!("unknown configuration key `{key}`")));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

struct FileConfig(BTreeMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, String> {
        Ok(Self(match path {
            Some(p) => parse_config_file(p)?,
            None => BTreeMap::new(),
        }))
    }

    /// Parsed value for `key`, or `None` when the file does not set it.
    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| format!("config key {key}: {e}")),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.0.get(key).map(PathBuf::from)
    }
}

#[derive(Debug)]
struct Resolved {
    fcidump: PathBuf,
    run: RunConfig,
    trace: Option<PathBuf>,
    summary: Option<PathBuf>,
}

fn parse_flag<T: FromStr>(value: &Option<String>, what: &str) -> Result<Option<T>, String>
where
    T::Err: Display,
{
    match value {
        None => Ok(None),
        Some(raw) => raw.parse().map(Some).map_err(|e| format!("--{what}: {e}")),
    }
}

fn resolve(
    flags: &SolverFlags,
    trace: Option<&PathBuf>,
    summary: Option<&PathBuf>,
) -> Result<Resolved, String> {
    let file = FileConfig::load(flags.config.as_deref())?;
    let defaults = RunConfig::default();
    let run = RunConfig {
        optimizer: parse_flag::<OptimizerKind>(&flags.optimizer, "optimizer")?
            .or(file.parse("optimizer")?)
            .unwrap_or(defaults.optimizer),
        encoding: parse_flag::<Encoding>(&flags.encoding, "encoding")?
            .or(file.parse("encoding")?)
            .unwrap_or(defaults.encoding),
        threshold: flags
            .threshold
            .or(file.parse("threshold")?)
            .unwrap_or(defaults.threshold),
        max_iterations: flags
            .max_iter
            .or(file.parse("max-iter")?)
            .unwrap_or(defaults.max_iterations),
        p_depth: flags
            .p_depth
            .or(file.parse("p-depth")?)
            .unwrap_or(defaults.p_depth),
        sparsity_c: flags
            .sparsity_c
            .or(file.parse("sparsity-c")?)
            .unwrap_or(defaults.sparsity_c),
        criterion: parse_flag::<SparsityCriterion>(&flags.criterion, "criterion")?
            .or(file.parse("criterion")?)
            .unwrap_or(defaults.criterion),
        include_window: flags
            .include
            .or(file.parse("include")?)
            .unwrap_or(defaults.include_window),
        alpha_fixed: flags
            .alpha_fixed
            .or(file.parse("alpha-fixed")?)
            .unwrap_or(defaults.alpha_fixed),
        alpha_max: flags
            .alpha_max
            .or(file.parse("alpha-max")?)
            .unwrap_or(defaults.alpha_max),
        lbfgs_memory: flags
            .lbfgs_memory
            .or(file.parse("lbfgs-memory")?)
            .unwrap_or(defaults.lbfgs_memory),
        wolfe_c1: flags
            .wolfe_c1
            .or(file.parse("wolfe-c1")?)
            .unwrap_or(defaults.wolfe_c1),
        wolfe_c2: match flags.wolfe_c2 {
            Some(v) => Some(v),
            None => file.parse("wolfe-c2")?,
        },
    };
    run.validate().map_err(|e| e.to_string())?;
    let fcidump = flags
        .fcidump
        .clone()
        .or(file.path("fcidump"))
        .ok_or("missing --fcidump (or a fcidump= line in the config file)")?;
    Ok(Resolved {
        fcidump,
        run,
        trace: trace.cloned().or(file.path("trace")),
        summary: summary.cloned().or(file.path("summary")),
    })
}

// ---------------------------------------------------------------------------
// Output rendering.

const TRACE_HEADER: &str = "iter,energy,grad_norm,alpha,n_layers,n_terms,cnot_circuit,cnot_cumulative";

/// Per-iteration CSV; energies carry 10 decimal digits, norms 6
/// significant digits, so identical runs render identical bytes.
fn render_trace(result: &RunResult) -> String {
    let mut out = String::with_capacity(64 * (result.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &result.records {
        out.push_str(&format!(
            "{},{:.10},{:.5e},{:.10},{},{},{},{}\n",
            r.iteration,
            r.energy,
            r.grad_norm,
            r.alpha,
            r.n_layers,
            r.n_terms,
            r.cnot_circuit,
            r.cnot_cumulative,
        ));
    }
    out
}

#[derive(Serialize)]
struct RunSummary {
    termination: String,
    iterations: usize,
    energy: f64,
    reference_energy: f64,
    final_grad_norm: f64,
    pool_size: usize,
    residual_evaluations: u64,
    cnot_circuit: usize,
    cnot_cumulative: u64,
}

fn render_summary(result: &RunResult) -> String {
    let summary = RunSummary {
        termination: result.termination.to_string(),
        iterations: result.iterations,
        energy: result.energy,
        reference_energy: result.reference_energy,
        final_grad_norm: result.final_grad_norm,
        pool_size: result.pool_size,
        residual_evaluations: result.residual_evaluations,
        cnot_circuit: result.cnot_circuit,
        cnot_cumulative: result.cnot_cumulative,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    text
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
    }
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Subcommands.

fn load_problem(path: &Path) -> Result<MolecularIntegrals, String> {
    MolecularIntegrals::load_fcidump(path)
        .map_err(|e| format!("cannot load {}: {e}", path.display()))
}

fn cmd_run(args: &RunArgs) -> Result<u8, String> {
    let resolved = resolve(&args.solver, args.trace.as_ref(), args.summary.as_ref())?;
    let m = load_problem(&resolved.fcidump)?;
    let result = run_cqe(&m, &resolved.run).map_err(|e| e.to_string())?;
    if let Some(path) = &resolved.trace {
        write_file(path, &render_trace(&result))?;
    }
    if let Some(path) = &resolved.summary {
        write_file(path, &render_summary(&result))?;
    }
    println!("termination: {}", result.termination);
    println!("iterations: {}", result.iterations);
    println!("energy: {:.10}", result.energy);
    Ok(exit_code(result.termination))
}

fn cmd_fci(args: &FciArgs) -> Result<u8, String> {
    let file = FileConfig::load(args.config.as_deref())?;
    let path = args
        .fcidump
        .clone()
        .or(file.path("fcidump"))
        .ok_or("missing --fcidump (or a fcidump= line in the config file)")?;
    let m = load_problem(&path)?;
    let h = hamiltonian_to_pauli(&m);
    let energy = oracle::fci_energy(&m, &h).map_err(|e| e.to_string())?;
    println!("{energy:.10}");
    Ok(0)
}

/// One sweep cell; the tokens preserve the user's spelling so cell
/// file names and summary rows match the requested grid exactly.
struct Cell {
    criterion_token: String,
    criterion: SparsityCriterion,
    include: bool,
    c_token: String,
    c: f64,
    p_depth: usize,
}

fn split_list(raw: &str, what: &str) -> Result<Vec<String>, String> {
    let items: Vec<String> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if items.is_empty() {
        return Err(format!("--{what} lists no values"));
    }
    Ok(items)
}

fn build_grid(args: &SweepArgs) -> Result<Vec<Cell>, String> {
    let criteria = split_list(&args.grid_criterion, "grid-criterion")?;
    let includes = split_list(&args.grid_include, "grid-include")?;
    let cs = split_list(&args.grid_c, "grid-c")?;
    let ps = split_list(&args.grid_p_depth, "grid-p-depth")?;
    let mut cells = Vec::new();
    for criterion_token in &criteria {
        let criterion: SparsityCriterion = criterion_token
            .parse()
            .map_err(|e| format!("--grid-criterion: {e}"))?;
        for include_token in &includes {
            let include: bool = include_token
                .parse()
                .map_err(|_| format!("--grid-include: `{include_token}` is not a bool"))?;
            for c_token in &cs {
                let c: f64 = c_token
                    .parse()
                    .map_err(|_| format!("--grid-c: `{c_token}` is not a number"))?;
                for p_token in &ps {
                    let p_depth: usize = p_token
                        .parse()
                        .map_err(|_| format!("--grid-p-depth: `{p_token}` is not an integer"))?;
                    cells.push(Cell {
                        criterion_token: criterion_token.clone(),
                        criterion,
                        include,
                        c_token: c_token.clone(),
                        c,
                        p_depth,
                    });
                }
            }
        }
    }
    Ok(cells)
}

const SWEEP_HEADER: &str = "criterion,include,c,p_depth,iterations,total_cnot,termination";

fn cmd_sweep(args: &SweepArgs) -> Result<u8, String> {
    let resolved = resolve(&args.solver, None, None)?;
    let m = load_problem(&resolved.fcidump)?;
    let cells = build_grid(args)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }

    // Cells are independent problems; run them in parallel but emit
    // results in grid order.
    let rows: Vec<Result<String, String>> = cells
        .par_iter()
        .map(|cell| {
            let config = RunConfig {
                criterion: cell.criterion,
                include_window: cell.include,
                sparsity_c: cell.c,
                p_depth: cell.p_depth,
                ..resolved.run.clone()
            };
            config.validate().map_err(|e| e.to_string())?;
            let result = run_cqe(&m, &config).map_err(|e| e.to_string())?;
            if let Some(dir) = &args.out_dir {
                let name = format!(
                    "{}_{}_c{}_p{}.csv",
                    cell.criterion_token, cell.include, cell.c_token, cell.p_depth
                );
                write_file(&dir.join(name), &render_trace(&result))?;
            }
            Ok(format!(
                "{},{},{},{},{},{},{}",
                cell.criterion_token,
                cell.include,
                cell.c_token,
                cell.p_depth,
                result.iterations,
                result.cnot_cumulative,
                result.termination,
            ))
        })
        .collect();

    let mut table = String::from(SWEEP_HEADER);
    table.push('\n');
    let mut failures = 0usize;
    for (cell, row) in cells.iter().zip(rows) {
        match row {
            Ok(line) => {
                if !line.ends_with(",converged") {
                    failures += 1;
                }
                table.push_str(&line);
                table.push('\n');
            }
            // A cell-level error becomes a summary row, not an abort.
            Err(message) => {
                failures += 1;
                eprintln!(
                    "cell {} include={} c={} p={}: {message}",
                    cell.criterion_token, cell.include, cell.c_token, cell.p_depth
                );
                table.push_str(&format!(
                    "{},{},{},{},0,0,error\n",
                    cell.criterion_token, cell.include, cell.c_token, cell.p_depth
                ));
            }
        }
    }
    match &args.summary {
        Some(path) => {
            write_file(path, &table)?;
            println!("cells: {}", cells.len());
            println!("not converged: {failures}");
            println!("summary: {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn termination_exit_codes() {
        assert_eq!(exit_code(Termination::Converged), 0);
        assert_eq!(exit_code(Termination::MaxIterations), 2);
        assert_eq!(exit_code(Termination::LineSearchFailed), 3);
        assert_eq!(exit_code(Termination::Stalled), 4);
    }

    #[test]
    fn config_text_parses_comments_and_blanks() {
        let map = parse_config_text(
            "# a comment\n\noptimizer = lbfgs  # trailing\nthreshold=1e-4\nmax-iter = 25\n",
        )
        .unwrap();
        assert_eq!(map.get("optimizer").unwrap(), "lbfgs");
        assert_eq!(map.get("threshold").unwrap(), "1e-4");
        assert_eq!(map.get("max-iter").unwrap(), "25");
    }

    #[test]
    fn config_text_rejects_unknown_keys_and_bad_lines() {
        assert!(parse_config_text("optimiser=bfgs\n").is_err());
        assert!(parse_config_text("just a line\n").is_err());
    }

    #[test]
    fn flags_override_config_file_values() {
        let flags = SolverFlags {
            threshold: Some(1e-3),
            ..SolverFlags::default()
        };
        // No config file: default for everything else.
        let resolved = resolve(
            &SolverFlags {
                fcidump: Some(PathBuf::from("x.fcidump")),
                ..flags
            },
            None,
            None,
        )
        .unwrap();
        assert_eq!(resolved.run.threshold, 1e-3);
        assert_eq!(resolved.run.max_iterations, 300);
        assert_eq!(resolved.run.optimizer, OptimizerKind::Bfgs);
    }

    #[test]
    fn missing_fcidump_is_an_input_error() {
        let err = resolve(&SolverFlags::default(), None, None).unwrap_err();
        assert!(err.contains("fcidump"));
    }

    #[test]
    fn bad_flag_values_are_input_errors() {
        let flags = SolverFlags {
            fcidump: Some(PathBuf::from("x.fcidump")),
            optimizer: Some("newton".into()),
            ..SolverFlags::default()
        };
        assert!(resolve(&flags, None, None).is_err());
        let flags = SolverFlags {
            fcidump: Some(PathBuf::from("x.fcidump")),
            sparsity_c: Some(2.0),
            ..SolverFlags::default()
        };
        assert!(resolve(&flags, None, None).is_err());
    }

    #[test]
    fn grid_cells_enumerate_in_flag_order() {
        let args = SweepArgs {
            solver: SolverFlags::default(),
            grid_c: "0.5,0.25".into(),
            grid_p_depth: "1,3".into(),
            grid_criterion: "descent".into(),
            grid_include: "true".into(),
            out_dir: None,
            summary: None,
        };
        let cells = build_grid(&args).unwrap();
        let order: Vec<(String, usize)> = cells
            .iter()
            .map(|c| (c.c_token.clone(), c.p_depth))
            .collect();
        assert_eq!(
            order,
            vec![
                ("0.5".to_string(), 1),
                ("0.5".to_string(), 3),
                ("0.25".to_string(), 1),
                ("0.25".to_string(), 3),
            ]
        );
    }

    #[test]
    fn trace_rows_have_pinned_formats() {
        use cqe_core::optimize::IterationRecord;
        use cqe_core::Ansatz;
        let result = RunResult {
            termination: Termination::Converged,
            iterations: 1,
            energy: -1.25,
            reference_energy: -1.0,
            final_grad_norm: 5e-6,
            records: vec![IterationRecord {
                iteration: 0,
                energy: -1.2345678901234,
                grad_norm: 0.0669575,
                alpha: 0.5,
                n_layers: 1,
                n_terms: 6,
                cnot_circuit: 288,
                cnot_cumulative: 288,
                line_search_evals: 1,
            }],
            ansatz: Ansatz::new(),
            pool_size: 6,
            residual_evaluations: 6,
            cnot_circuit: 288,
            cnot_cumulative: 288,
        };
        let text = render_trace(&result);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "0,-1.2345678901,6.69575e-2,0.5000000000,1,6,288,288"
        );
        assert!(lines.next().is_none());
    }
}
