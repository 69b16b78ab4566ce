//! Run artifacts: CSV tables and a JSON summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{RunReport, VariantSummary};
use super::metrics::{cost_ratio, gu_cost_proxies, median, Timings};
use super::timing::BenchRow;
use crate::error::Result;
use crate::exchange::write_trace_csv;
use crate::gaussian::{normalized_covariance, write_matrix_csv, GaussianBelief};

fn create(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    written.push(path);
    Ok(BufWriter::new(f))
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Per-iteration costs derived from the wall times recorded during a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunTiming {
    pub t_ff_ms: f64,
    pub t_gckf_ms: f64,
    pub t_gu_ms: f64,
    pub cr: Option<f64>,
}

impl RunTiming {
    pub fn from_report(r: &RunReport) -> Self {
        let steps = (r.config.pf / r.config.guf).round().max(1.0);
        let t = Timings {
            t_ff: median(&r.full.window_ms) / steps,
            t_gckf: median(&r.gckf.window_ms) / steps,
            t_gu: median(&r.gckf.gu_ms),
        };
        Self {
            t_ff_ms: t.t_ff,
            t_gckf_ms: t.t_gckf,
            t_gu_ms: t.t_gu,
            cr: cost_ratio(&t, r.config.pf, r.config.guf).ok(),
        }
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    summary: &'a VariantSummary,
    nos: usize,
    noss: usize,
    global_updates: usize,
    timing: RunTiming,
    gu_cost_proxies: [f64; 3],
    layouts: Vec<Vec<usize>>,
    config: &'a super::config::ExperimentConfig,
}

/// `metrics.csv`: one row per global update and state (first run).
pub fn write_metrics_csv<W: Write>(r: &RunReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "gu_index,time,state,full_mean,gckf_mean,truth,full_std,gckf_std,std_percent_diff")?;
    for g in 0..r.gu_times.len() {
        for i in 0..r.truth_at_gu[g].len() {
            let pct = r.std_percent_diff[g][i].map_or_else(|| "NaN".to_string(), num);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                g + 1,
                r.gu_times[g],
                i,
                num(r.full.means[g][i]),
                num(r.gckf.means[g][i]),
                num(r.truth_at_gu[g][i]),
                num(r.full.stds[g][i]),
                num(r.gckf.stds[g][i]),
                pct
            )?;
        }
    }
    Ok(())
}

fn write_normcov(dir: &Path, name: &str, cov: &nalgebra::DMatrix<f64>, written: &mut Vec<PathBuf>) -> Result<()> {
    let nc = normalized_covariance(&GaussianBelief { mean: nalgebra::DVector::zeros(cov.nrows()), cov: cov.clone() });
    let mut w = create(dir, name, written)?;
    write_matrix_csv(&nc.matrix, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes every artifact of a run into `dir` and returns the paths.
pub fn write_run_artifacts(r: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let mut w = create(dir, "metrics.csv", &mut written)?;
    write_metrics_csv(r, &mut w)?;
    w.flush()?;

    let mut w = create(dir, "discrepancy.csv", &mut written)?;
    writeln!(w, "gu_index,time,avg_discrepancy")?;
    for (g, d) in r.discrepancy.iter().enumerate() {
        writeln!(w, "{},{},{}", g + 1, r.gu_times[g], num(*d))?;
    }
    w.flush()?;

    for (g, cov) in &r.gckf.snapshots {
        write_normcov(dir, &format!("normcov_gu_{g}.csv"), cov, &mut written)?;
    }
    for (g, cov) in &r.full.snapshots {
        write_normcov(dir, &format!("normcov_full_gu_{g}.csv"), cov, &mut written)?;
    }
    for l in &r.gckf.layouts {
        let mut w = create(dir, &format!("layout_epoch_{}.csv", l.epoch), &mut written)?;
        l.write_csv(&mut w, true)?;
        w.flush()?;
    }
    if !r.trace.is_empty() {
        let mut w = create(dir, "exchange_trace.csv", &mut written)?;
        write_trace_csv(&r.trace, &mut w)?;
        w.flush()?;
    }

    let first = &r.gckf.layouts[0];
    let json = ReportJson {
        summary: &r.summary,
        nos: r.config.nos,
        noss: r.config.noss,
        global_updates: r.gu_times.len(),
        timing: RunTiming::from_report(r),
        gu_cost_proxies: gu_cost_proxies(&first.sizes()),
        layouts: r.gckf.layouts.iter().map(|l| l.sizes()).collect(),
        config: &r.config,
    };
    let mut w = create(dir, "report.json", &mut written)?;
    serde_json::to_writer_pretty(&mut w, &json).map_err(std::io::Error::other)?;
    writeln!(w)?;
    w.flush()?;
    Ok(written)
}

/// `compare.csv` and `compare.json` for a set of variants.
pub fn write_comparison(summaries: &[VariantSummary], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut w = create(dir, "compare.csv", &mut written)?;
    writeln!(w, "variant,runs,avg_discrepancy,max_std_percent_diff,mean_std_percent_diff,nc_distance_last")?;
    for s in summaries {
        let nc = s.nc_distance.last().map_or_else(|| "NaN".to_string(), |(_, d)| num(*d));
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.variant,
            s.runs,
            num(s.avg_discrepancy),
            num(s.max_std_percent_diff),
            num(s.mean_std_percent_diff),
            nc
        )?;
    }
    w.flush()?;
    let mut w = create(dir, "compare.json", &mut written)?;
    serde_json::to_writer_pretty(&mut w, summaries).map_err(std::io::Error::other)?;
    writeln!(w)?;
    w.flush()?;
    Ok(written)
}

/// `cost_ratio.csv`, one row per `(noss, arch)`.
pub fn write_cost_ratio_csv<W: Write>(rows: &[BenchRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "noss,arch,m,t_ff_ms,t_gckf_ms,t_gu_ms,cr,proxy_outer,proxy_cross,proxy_block")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:e},{:e},{:e}",
            r.noss, r.arch, r.m, r.t_ff_ms, r.t_gckf_ms, r.t_gu_ms, r.cr, r.proxy_outer, r.proxy_cross, r.proxy_block
        )?;
    }
    Ok(())
}
