use std::path::{Path, PathBuf};
use std::process::ExitCode;

use antiplane_cli::run::{build, resolve_output_dir, run_scenario, CliError};
use antiplane_cli::scenario::{parse_scenario, KEYS};
use antiplane_cli::sweep::{run_sweep, Axis};
use antiplane_core::fem::estimate_trace_constant;
use antiplane_core::laws::{check_hypotheses, SampleBox};
use antiplane_core::scheme::{check_smallness, SchemeError};
use clap::{Parser, Subcommand};

/// Antiplane frictional contact with adhesion.
#[derive(Parser)]
#[command(name = "antiplane", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write fields, β, convergence history and bounds.
    Run {
        scenario: PathBuf,
        /// Output directory (overrides output.dir and $ANTIPLANE_OUTPUT_ROOT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a scenario over a grid of parameter values.
    Sweep {
        scenario: PathBuf,
        /// `key=v1,v2,...` with key one of mu_star, c2g, lambda, beta0, T.
        #[arg(long = "axis", required = true)]
        axes: Vec<Axis>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a scenario, sample the structural hypotheses and report the
    /// smallness quantity without solving.
    Check { scenario: PathBuf },
    /// List the accepted scenario keys.
    Keys,
}

fn check(path: &Path) -> Result<(), CliError> {
    let scenario = parse_scenario(path)?;
    let built = build(&scenario, 0)?;
    let p = &built.problem;
    let consts = p.constants();
    let hyp = check_hypotheses(&p.friction, &p.adhesion, &consts, 10_000, &SampleBox::default(), 0);
    let c0 = estimate_trace_constant(&p.mesh, &p.dofs).map_err(SchemeError::from)?;
    let s = check_smallness(p.material.mu_star, &consts, p.beta0.linf(), c0.c0_hat);
    println!(
        "mesh: {} vertices, {} triangles, {} contact vertices",
        p.mesh.n_vertices(),
        p.mesh.n_triangles(),
        p.dofs.n_contact()
    );
    for w in &built.partition.warnings {
        println!("warning: {w}");
    }
    println!("constants: {consts:?}");
    for c in &hyp.checks {
        println!(
            "{:<10} worst slack {:+.3e}, {} violations in {} samples",
            c.name, c.worst_slack, c.violations, hyp.samples
        );
    }
    println!(
        "c0_hat = {}, delta_hat = {} ({})",
        s.c0_hat,
        s.delta_hat,
        if s.pass { "smallness holds" } else { "smallness fails" }
    );
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is our "diverged" status.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run { scenario, out } => parse_scenario(scenario).map_err(CliError::from).and_then(|s| {
            let dir = resolve_output_dir(&s, out.as_deref());
            let outcome = run_scenario(&s, &dir)?;
            print!("{}", outcome.summary);
            Ok(outcome.exit_code())
        }),
        Command::Sweep { scenario, axes, out } => parse_scenario(scenario).map_err(CliError::from).and_then(|s| {
            let dir = resolve_output_dir(&s, out.as_deref());
            let rows = run_sweep(&s, axes, &dir)?;
            for r in &rows {
                match &r.error {
                    Some(e) => println!("{}: error: {e}", r.params_text()),
                    None => println!("{}: {}", r.params_text(), r.termination),
                }
            }
            println!("wrote {}", dir.join("sweep.csv").display());
            Ok(0)
        }),
        Command::Check { scenario } => check(scenario).map(|()| 0),
        Command::Keys => {
            for (k, doc) in KEYS {
                println!("{k:<22} {doc}");
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
