//! `gckf`: run experiments, compare variants and time the cost-ratio sweep.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gckf::exchange::Architecture;
use gckf::harness::timing::sweep_observations;
use gckf::harness::{
    all_variants, bench, compare_variants, run_experiment, write_comparison, write_cost_ratio_csv, write_run_artifacts,
    BenchConfig, ExperimentConfig, GckfVariant,
};
use gckf::GckfError;

#[derive(Parser)]
#[command(name = "gckf", version, about = "Compressed Kalman filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the configured seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time full and compressed filters over a sweep of subsystem counts.
    Bench {
        #[arg(long, default_value_t = 1000)]
        nos: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,20,50")]
        noss_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "II,ELSD_FN,ELSD_FC")]
        arch: Vec<Architecture>,
        #[arg(long)]
        out: PathBuf,
        /// Observed states.
        #[arg(long, default_value_t = 500)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value_t = 4)]
        nof: usize,
        #[arg(long, default_value_t = 8)]
        noc: usize,
        /// Also time both filters against these observation counts
        /// (at the largest noss of the sweep) into observations.csv.
        #[arg(long, value_delimiter = ',')]
        m_sweep: Vec<usize>,
    },
    /// Compare all archetype/architecture combinations on one config.
    Compare {
        /// Defaults to the experiment4 preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a built-in preset as JSON.
    Preset { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match &e {
                e if e.is_config_error() => 2,
                GckfError::Numerical(_) => 3,
                _ => 1,
            })
        }
    }
}

fn execute(cmd: Command) -> gckf::Result<()> {
    match cmd {
        Command::Run { config, out, seed } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            let report = run_experiment(&cfg)?;
            let written = write_run_artifacts(&report, &out)?;
            let s = &report.summary;
            println!(
                "{}: avg_discrepancy {:.6e}, max |std_percent_diff| {:.4}, {} files in {}",
                s.variant,
                s.avg_discrepancy,
                s.max_std_percent_diff,
                written.len(),
                out.display()
            );
        }
        Command::Bench { nos, noss_list, arch, out, m, reps, iterations, nof, noc, m_sweep } => {
            let b =
                BenchConfig { nos, noss_list, archs: arch, m, reps, iterations, nof, noc, ..BenchConfig::default() };
            let rows = bench(&b)?;
            std::fs::create_dir_all(&out)?;
            let mut w = create(&out, "cost_ratio.csv")?;
            write_cost_ratio_csv(&rows, &mut w)?;
            w.flush()?;
            for r in &rows {
                println!(
                    "noss {:>3} {:<8} t_gckf {:>10.3} ms  t_gu {:>10.3} ms  CR {:.3}",
                    r.noss, r.arch, r.t_gckf_ms, r.t_gu_ms, r.cr
                );
            }
            if !m_sweep.is_empty() {
                let noss = b.noss_list.iter().copied().max().unwrap_or(1);
                let mut w = create(&out, "observations.csv")?;
                writeln!(w, "m,t_ff_ms,t_gckf_ms")?;
                for (m, ff, g) in sweep_observations(&b, noss, &m_sweep)? {
                    writeln!(w, "{m},{ff:.6},{g:.6}")?;
                }
                w.flush()?;
            }
        }
        Command::Compare { config, out } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::from_path(p)?,
                None => ExperimentConfig::preset("experiment4")?,
            };
            let summaries = compare_variants(&cfg, &all_variants(&GckfVariant::from_config(&cfg)?))?;
            write_comparison(&summaries, &out)?;
            for s in &summaries {
                println!(
                    "{:<14} avg_discrepancy {:>+.6e}  max |std%| {:>9.4}  mean |std%| {:>9.4}",
                    s.variant, s.avg_discrepancy, s.max_std_percent_diff, s.mean_std_percent_diff
                );
            }
        }
        Command::Preset { name } => println!("{}", ExperimentConfig::preset(&name)?.to_json()),
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> gckf::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}
