//! Plain computations behind the browser bindings.

use gckf::gaussian::{decorrelate_blocks, normalized_covariance, GaussianBelief};
use gckf::harness::experiment::{build_scenario, run_full, run_gckf};
use gckf::harness::metrics::{normcov_distance, std_percent_diff};
use gckf::harness::{ExperimentConfig, FilterSetup, GckfVariant, SystemModel};
use gckf::models::initial_covariance;
use gckf::partition::{build_layout, BoundaryMode, LayoutSpec};
use gckf::Result;
use nalgebra::{DMatrix, DVector};

/// Upper bound on global updates per request, to keep the page responsive.
pub const MAX_GUS: usize = 400;
pub const SERIES_POINTS: usize = 50;

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    // row-major for the canvas
    m.transpose().as_slice().to_vec()
}

fn nc(cov: &DMatrix<f64>) -> DMatrix<f64> {
    normalized_covariance(&GaussianBelief { mean: DVector::zeros(cov.nrows()), cov: cov.clone() }).matrix
}

/// Normalised prior covariance next to its block-decorrelated bound.
#[derive(Debug, Clone)]
pub struct PriorView {
    pub n: usize,
    pub prior: Vec<f64>,
    pub decorrelated: Vec<f64>,
    pub blocks: Vec<usize>,
}

pub fn prior_view(nos: usize, noss: usize, scale: f64, phi: f64, psi: f64) -> Result<PriorView> {
    let cov = initial_covariance(nos, scale, phi, psi)?;
    let spec = LayoutSpec { nos, noss, nof: 1, mode: BoundaryMode::Anchored };
    let layout = build_layout(&spec, 0, 0)?;
    let dec = decorrelate_blocks(&cov, &layout.subsystems)?;
    Ok(PriorView {
        n: nos,
        prior: flatten(&nc(&cov)),
        decorrelated: flatten(&nc(&dec)),
        blocks: layout.subsystems.iter().map(Vec::len).collect(),
    })
}

/// One compressed run against the full filter on the heat rod.
#[derive(Debug, Clone)]
pub struct CorrelationRun {
    pub n: usize,
    pub label: String,
    pub full: Vec<f64>,
    pub gckf: Vec<f64>,
    pub distance: f64,
    /// `(global update, ||NC_gckf - NC_full||_F)` at up to [`SERIES_POINTS`] instants.
    pub distance_series: Vec<(usize, f64)>,
    /// Per state, `std_percent_diff` at the last global update (NaN where undefined).
    pub std_percent: Vec<f64>,
}

/// `fast` selects the `l = 1` rod, otherwise the `l = 15` rod; both run as
/// pure prediction from the shared prior.
pub fn correlation_run(fast: bool, archetype: &str, arch: &str, gus: usize) -> Result<CorrelationRun> {
    let gus = gus.clamp(1, MAX_GUS);
    let mut cfg = ExperimentConfig::preset(if fast { "experiment3" } else { "experiment2" })?;
    cfg.archetype = archetype.parse()?;
    cfg.arch = arch.parse()?;
    cfg.horizon = gus as f64 / cfg.guf;
    let stride = gus.div_ceil(SERIES_POINTS);
    cfg.snapshots = (1..=gus).filter(|g| g % stride == 0 || *g == 1 || *g == gus).collect();
    cfg.seeds = vec![1];
    cfg.validate()?;
    let model = SystemModel::from_config(&cfg)?;
    let setup = FilterSetup::from_config(&cfg)?;
    let variant = GckfVariant::from_config(&cfg)?;
    let scenario = build_scenario(&model, &setup, &cfg.seeds)?;
    let obs = scenario.observations[0].as_ref();
    let full = run_full(&model, &setup, obs)?;
    let gckf = run_gckf(&model, &setup, &variant, obs, None)?;
    let distance_series = cfg
        .snapshots
        .iter()
        .filter_map(|&g| Some((g, normcov_distance(full.snapshot(g)?, gckf.snapshot(g)?))))
        .collect();
    let last_full = full.snapshot(gus).expect("snapshot at the last global update");
    let last_gckf = gckf.snapshot(gus).expect("snapshot at the last global update");
    let std_percent = std_percent_diff(&full.stds[gus - 1], &gckf.stds[gus - 1])?
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    Ok(CorrelationRun {
        n: model.dim(),
        label: variant.label(),
        full: flatten(&nc(last_full)),
        gckf: flatten(&nc(last_gckf)),
        distance: normcov_distance(last_full, last_gckf),
        distance_series,
        std_percent,
    })
}
