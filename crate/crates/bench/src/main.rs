use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ehrelay::oracle::{solve_reduced, OracleConfig};
use ehrelay::{PolicyKind, SystemParams};
use ehrelay_bench::config::{resolve, Overrides, Plan};
use ehrelay_bench::{emit_csv, run_single, run_sweep, write_csv_file, BenchError, FileConfig};

/// Power allocation for an energy-harvesting decode-and-forward relay link.
///
/// Without an axis, solves one instance per selected policy and prints a
/// report. With an axis, sweeps it and writes CSV.
#[derive(Debug, Parser)]
#[command(name = "ehrelay", version)]
struct Cli {
    /// TOML file with system parameters and an optional [sweep] table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Policies, comma separated: OPT, GRE, EQ, SNO, ORACLE.
    #[arg(long, value_delimiter = ',')]
    policy: Option<Vec<String>>,
    /// Sweep axis: N, BETA, P1_INITIAL, P2_INITIAL, GAMMA1, GAMMA1_DIRECT.
    #[arg(long)]
    axis: Option<String>,
    /// Sweep values, "a,b,c" or "start:step:stop".
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Initial source energy.
    #[arg(long)]
    p10: Option<f64>,
    /// Relay energy budget.
    #[arg(long)]
    p20: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    gamma1_direct: Option<f64>,
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also run the numeric oracle and report its gap to OPT on stderr.
    #[arg(long)]
    oracle_check: bool,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_FALLBACK: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                BenchError::Config(_) | BenchError::Solver(_) => EXIT_CONFIG,
                BenchError::Io { .. } | BenchError::Csv(_) => EXIT_FAILURE,
            })
        }
    }
}

fn run(cli: Cli) -> Result<u8, BenchError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let overrides = Overrides {
        n_phases: cli.n,
        bandwidth: cli.bandwidth,
        p1_initial: cli.p10,
        p2_initial: cli.p20,
        gamma1: cli.gamma1,
        gamma2: cli.gamma2,
        gamma1_direct: cli.gamma1_direct,
        beta: cli.beta,
        axis: cli.axis.clone(),
        values: cli.values.clone(),
        policies: cli.policy.clone(),
    };
    match resolve(file, overrides)? {
        Plan::Single { params, policies } => {
            let mut text = String::new();
            let mut fallback = false;
            for policy in policies {
                let report = run_single(&params, policy)?;
                fallback |= report.diagnostics.fallback;
                text.push_str(&format_report(policy, &report));
            }
            if cli.oracle_check {
                oracle_gap(&params)?;
            }
            write_text(&cli.output, &text)?;
            Ok(if fallback { EXIT_FALLBACK } else { 0 })
        }
        Plan::Sweep(spec) => {
            let rows = run_sweep(&spec)?;
            if cli.oracle_check {
                for &v in &spec.values {
                    oracle_gap(&spec.axis.apply(&spec.fixed, v)?)?;
                }
            }
            match &cli.output {
                Some(path) => write_csv_file(&rows, path)?,
                None => emit_csv(&rows, std::io::stdout().lock())?,
            }
            let errors = rows.iter().filter(|r| r.is_error()).count();
            if errors > 0 {
                eprintln!("{errors} row(s) failed; see the branch column");
            }
            Ok(if rows.iter().any(|r| r.is_fallback()) {
                EXIT_FALLBACK
            } else {
                0
            })
        }
    }
}

fn format_report(policy: PolicyKind, r: &ehrelay::SolveReport) -> String {
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.12}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = format!(
        "policy      {policy}\nbranch      {}\nthroughput  {:.15}\nalpha       {:.12}\np1          {}\np2          {}\nfeasible    {} (min residual {:.3e})\n",
        r.branch,
        r.throughput,
        r.allocation.alpha,
        list(&r.allocation.p1),
        list(&r.allocation.p2),
        r.is_feasible(),
        r.feasibility.min_residual(),
    );
    for note in &r.diagnostics.notes {
        s.push_str(&format!("note        {note}\n"));
    }
    s.push('\n');
    s
}

fn oracle_gap(params: &SystemParams) -> Result<(), BenchError> {
    let opt = run_single(params, PolicyKind::Opt)?.throughput;
    let orc = solve_reduced(params, &OracleConfig::default())?.throughput;
    eprintln!(
        "oracle-check N={} beta={} p10={}: OPT {opt:.12} oracle {orc:.12} gap {:.3e}",
        params.n_phases,
        params.beta,
        params.p1_initial,
        opt - orc
    );
    Ok(())
}

fn write_text(path: &Option<PathBuf>, text: &str) -> Result<(), BenchError> {
    let result = match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|source| BenchError::Io {
        path: path
            .as_ref()
            .map_or("<stdout>".into(), |p| p.display().to_string()),
        source,
    })
}
