use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use phasesep_core::harness::{
    run_membrane, run_mesh, run_sweep, run_varying, Config, MembraneConfig, RunOptions, SweepConfig, VaryingConfig,
};

/// Phase separation experiments on triangulated surfaces.
#[derive(Debug, Parser)]
#[command(name = "phasesep", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Shared {
    /// Experiment configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory for reports, meshes and fields.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Zero wall-clock columns so repeated runs give identical reports.
    #[arg(long)]
    deterministic: bool,

    /// Worker threads for per-triangle loops.
    #[arg(long, value_name = "N", env = "PHASESEP_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the configured mesh and write it as OFF and OBJ.
    Mesh(Shared),
    /// Minimize over a decreasing list of epsilon values.
    Sweep(Shared),
    /// Diffuse versus sharp two-phase membrane energy on a closed surface.
    Membrane(Shared),
    /// Convergence diagnostics along a family of perturbed spheres.
    Varying(Shared),
}

impl Command {
    fn shared(&self) -> &Shared {
        match self {
            Command::Mesh(s) | Command::Sweep(s) | Command::Membrane(s) | Command::Varying(s) => s,
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "NO"
    }
}

fn run(cli: Cli) -> Result<()> {
    let shared = cli.command.shared();
    if let Some(n) = shared.threads {
        anyhow::ensure!(n > 0, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = Config::load(&shared.config).with_context(|| format!("reading {}", shared.config.display()))?;
    let opts = RunOptions {
        out_dir: shared.out.clone(),
        deterministic: shared.deterministic,
    };
    info!("config {}", shared.config.display());

    match &cli.command {
        Command::Mesh(_) => {
            let s = run_mesh(&cfg, &opts)?;
            println!("vertices          {}", s.vertices);
            println!("triangles         {}", s.triangles);
            println!("edges             {}", s.edges);
            println!("closed            {}", s.closed);
            println!("area              {:.12}", s.area);
            println!("mean edge length  {:.6}", s.mean_edge_length);
        }
        Command::Sweep(_) => {
            let report = run_sweep(&SweepConfig::from_config(&cfg)?, &opts)?;
            println!("{:>10} {:>14} {:>12} {:>10} {:>10}", "eps", "mm_value", "jump_length", "ratio", "iterations");
            for r in &report.records {
                println!(
                    "{:>10.4} {:>14.8} {:>12.6} {:>10.5} {:>10}",
                    r.eps, r.mm_value, r.jump_length, r.ratio, r.iterations
                );
            }
            for f in &report.failures {
                println!("eps {} failed: {}", f.eps, f.error);
            }
            if !report.failures.is_empty() {
                anyhow::bail!("{} of {} epsilon values failed", report.failures.len(), report.failures.len() + report.records.len());
            }
        }
        Command::Membrane(_) => {
            let r = run_membrane(&MembraneConfig::from_config(&cfg)?, &opts)?;
            println!("diffuse total     {:.8}", r.diffuse.total);
            println!("  bending         {:.8}", r.diffuse.willmore);
            println!("  line (mm)       {:.8}", r.diffuse.mm_value);
            println!("sharp total       {:.8}", r.sharp.total);
            println!("  bending         {:.8}", r.sharp.willmore);
            println!("  line            {:.8}", r.sharp.line_energy);
            println!("lower bound       {}", yes_no(r.lower_bound_holds));
            println!("8π hypothesis     {} (threshold {:.6})", yes_no(r.hypothesis_holds), r.hypothesis_threshold);
            println!(
                "density           max {:.4}, bound {:.4}, violation {}",
                r.density.max_density, r.density.bound, r.density.violation
            );
        }
        Command::Varying(_) => {
            let r = run_varying(&VaryingConfig::from_config(&cfg)?, &opts)?;
            println!("{:>10} {:>12} {:>12}", "amplitude", "area gap", "mm_value");
            for ((a, g), e) in r.amplitudes.iter().zip(&r.strictness.gaps).zip(&r.mm_values) {
                println!("{a:>10.5} {g:>12.6} {e:>12.6}");
            }
            println!("area gaps decreasing   {}", yes_no(r.strictness.monotone_convergent));
            for row in &r.mfp.rows {
                println!("mfp gaps {:<13} {}", format!("[{}]", row.test_function), yes_no(row.decreasing));
            }
            println!("limit line energy      {:.8}", r.limit_line_energy);
            println!("liminf within slack    {}", yes_no(r.liminf_holds));
        }
    }
    if let Some(dir) = &opts.out_dir {
        info!("outputs in {}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
