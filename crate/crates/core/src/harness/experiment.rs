//! Full-filter and compressed-filter runs on identical observation streams.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::config::{ExperimentConfig, ModelKind, Schedule};
use super::metrics::{avg_discrepancy, discrepancy_series, max_abs_percent, normcov_distance, std_percent_diff};
use super::timing::Stopwatch;
use crate::engine::{
    extract_virtual_likelihood, global_update, init_from_marginal, local_predict, local_update, RestrictedModel,
};
use crate::error::{GckfError, Result};
use crate::exchange::{message_round, plan_exchange, Architecture, ExchangePlan, MessageTrace};
use crate::filters::{FilterCore, LinearProcess, ObservationModel, ProcessModel};
use crate::gaussian::{select, select_vec, GaussianBelief};
use crate::models::{
    generate_truth, heat_transition, initial_covariance, simulate_observations, BurgersModel, GroundTruth, HeatConfig,
    Observations, SemiDiscrete,
};
use crate::partition::{
    next_layout, remap_belief, Archetype, BoundaryMode, LayoutSpec, PartitionLayout, SwitchSchedule,
};

/// RK4 sub-steps per prediction interval for the truth.
pub const TRUTH_SUBSTEPS: usize = 10;

enum TruthSource {
    Heat(crate::models::HeatModel),
    Burgers(BurgersModel),
    Discrete,
}

/// A process model with its fixed input, prior and truth generator.
pub struct SystemModel {
    pub process: Arc<dyn ProcessModel>,
    pub input: DVector<f64>,
    pub prior: GaussianBelief,
    pub truth_x0: DVector<f64>,
    pub dt: f64,
    truth: TruthSource,
}

impl std::fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemModel").field("dim", &self.prior.dim()).field("dt", &self.dt).finish()
    }
}

impl SystemModel {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let n = cfg.nos;
        let c = cfg.cov_init;
        let cov = initial_covariance(n, c.scale, c.phi, c.psi)?;
        let dt = 1.0 / cfg.pf;
        match cfg.model {
            ModelKind::Heat => {
                let h = cfg.heat.ok_or_else(|| GckfError::Config("missing heat section".into()))?;
                let model = heat_transition(&HeatConfig {
                    k: h.k,
                    rho: h.rho,
                    cp: h.cp,
                    l: h.l,
                    nos: n,
                    pf: cfg.pf,
                    boundary: h.boundary,
                    init_temp: h.init_temp,
                })?;
                let x0 = model.initial_state();
                Ok(Self {
                    input: model.boundary_input(),
                    prior: GaussianBelief { mean: x0.clone(), cov },
                    truth_x0: x0,
                    dt,
                    process: Arc::new(model.clone()),
                    truth: TruthSource::Heat(model),
                })
            }
            ModelKind::Burgers => {
                let b = cfg.burgers.ok_or_else(|| GckfError::Config("missing burgers section".into()))?;
                let model = BurgersModel::new(n, b.length, cfg.pf, b.inflow, b.inflow + b.bump_height.max(0.0))?;
                let x0 = DVector::from_iterator(
                    n,
                    model
                        .centres()
                        .into_iter()
                        .map(|x| b.inflow + b.bump_height * (-((x - b.bump_center) / b.bump_width).powi(2)).exp()),
                );
                let m0 = DVector::from_element(n, b.prior_mean.unwrap_or(b.inflow));
                Ok(Self {
                    input: DVector::zeros(0),
                    prior: GaussianBelief { mean: m0, cov },
                    truth_x0: x0,
                    dt,
                    process: Arc::new(model.clone()),
                    truth: TruthSource::Burgers(model),
                })
            }
            ModelKind::Decoupled => {
                let d = cfg.decoupled.unwrap_or_default();
                let f = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| {
                    let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                    d.decay_min + t * (d.decay_max - d.decay_min)
                }));
                let x0 = DVector::from_element(n, d.init);
                Ok(Self {
                    input: DVector::zeros(0),
                    prior: GaussianBelief { mean: x0.clone(), cov },
                    truth_x0: x0,
                    dt,
                    process: Arc::new(LinearProcess::autonomous(f)?),
                    truth: TruthSource::Discrete,
                })
            }
        }
    }

    /// A discrete-time model whose truth is the noise-free recursion of `process`.
    pub fn discrete(
        process: Arc<dyn ProcessModel>,
        input: DVector<f64>,
        prior: GaussianBelief,
        truth_x0: DVector<f64>,
        dt: f64,
    ) -> Result<Self> {
        let n = process.dim_state();
        if prior.dim() != n || truth_x0.len() != n || input.len() != process.dim_input() {
            return Err(GckfError::arg("prior, truth or input does not match the process dimensions"));
        }
        Ok(Self { process, input, prior, truth_x0, dt, truth: TruthSource::Discrete })
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    /// Noise-free truth over `steps` prediction intervals.
    pub fn truth(&self, steps: usize) -> GroundTruth {
        let semi: Option<&dyn SemiDiscrete> = match &self.truth {
            TruthSource::Heat(m) => Some(m),
            TruthSource::Burgers(m) => Some(m),
            TruthSource::Discrete => None,
        };
        match semi {
            Some(m) => generate_truth(m, &self.truth_x0, self.dt, steps, TRUTH_SUBSTEPS),
            None => {
                let mut trajectory = vec![self.truth_x0.clone()];
                for k in 0..steps {
                    let next = self.process.step(&trajectory[k], &self.input);
                    trajectory.push(next);
                }
                GroundTruth { trajectory, sample_times: (0..=steps).map(|k| k as f64 * self.dt).collect() }
            }
        }
    }
}

/// Settings shared by the full filter and every compressed variant.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSetup {
    pub core: FilterCore,
    pub q_var: f64,
    pub r_var: f64,
    /// Observed states, 0-based.
    pub ol: Vec<usize>,
    pub steps_per_gu: usize,
    pub num_gu: usize,
    /// Global updates (1-based) at which covariances are kept.
    pub snapshots: Vec<usize>,
}

impl FilterSetup {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let Schedule { steps_per_gu, num_gu, .. } = cfg.schedule()?;
        Ok(Self {
            core: cfg.filter_core(),
            q_var: cfg.sigma2_s,
            r_var: cfg.sigma2_o,
            ol: cfg.observed_states(),
            steps_per_gu,
            num_gu,
            snapshots: cfg.snapshot_list()?,
        })
    }
}

/// One compressed-filter configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GckfVariant {
    pub arch: Architecture,
    pub archetype: Archetype,
    pub noss: usize,
    pub nof: usize,
    pub noc: usize,
    pub gus_per_switch: usize,
    pub offset_cycle: Option<Vec<usize>>,
    pub boundary_mode: BoundaryMode,
}

impl GckfVariant {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            arch: cfg.arch,
            archetype: cfg.archetype,
            noss: cfg.noss,
            nof: cfg.nof,
            noc: cfg.noc,
            gus_per_switch: cfg.schedule()?.gus_per_switch,
            offset_cycle: cfg.offset_cycle.clone(),
            boundary_mode: cfg.boundary_mode,
        })
    }

    pub fn with(&self, archetype: Archetype, arch: Architecture) -> Self {
        let offset_cycle = if archetype == self.archetype { self.offset_cycle.clone() } else { None };
        Self { arch, archetype, offset_cycle, ..self.clone() }
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.archetype.name(), self.arch.name())
    }

    pub fn schedule(&self, spec: &LayoutSpec) -> Result<SwitchSchedule> {
        let cycle = self.offset_cycle.clone().unwrap_or_else(|| match self.archetype {
            Archetype::Static => vec![0],
            Archetype::Switching => spec.default_cycle(),
        });
        SwitchSchedule::new(self.archetype, self.gus_per_switch, cycle)
    }

    pub fn layout_spec(&self, nos: usize) -> LayoutSpec {
        LayoutSpec { nos, noss: self.noss, nof: self.nof, mode: self.boundary_mode }
    }
}

/// Per-global-update record of one filter run.
#[derive(Debug, Clone)]
pub struct Track {
    /// `means[g]` is the mean right after global update `g + 1`.
    pub means: Vec<DVector<f64>>,
    pub stds: Vec<DVector<f64>>,
    /// `(global update, covariance)` at the requested instants.
    pub snapshots: Vec<(usize, DMatrix<f64>)>,
    /// Wall time of each filtering window, excluding the global update (ms).
    pub window_ms: Vec<f64>,
    /// Wall time of each global update (ms); empty for the full filter.
    pub gu_ms: Vec<f64>,
    /// Distinct layouts visited, by epoch (compressed runs only).
    pub layouts: Vec<PartitionLayout>,
    pub final_belief: GaussianBelief,
}

impl Track {
    fn new(num_gu: usize) -> Self {
        Self {
            means: Vec::with_capacity(num_gu),
            stds: Vec::with_capacity(num_gu),
            snapshots: Vec::new(),
            window_ms: Vec::with_capacity(num_gu),
            gu_ms: Vec::new(),
            layouts: Vec::new(),
            final_belief: GaussianBelief { mean: DVector::zeros(0), cov: DMatrix::zeros(0, 0) },
        }
    }

    fn record(&mut self, gu: usize, b: &GaussianBelief, snapshots: &[usize]) {
        self.means.push(b.mean.clone());
        self.stds.push(b.std_devs());
        if snapshots.contains(&gu) {
            self.snapshots.push((gu, b.cov.clone()));
        }
    }

    pub fn snapshot(&self, gu: usize) -> Option<&DMatrix<f64>> {
        self.snapshots.iter().find(|(g, _)| *g == gu).map(|(_, c)| c)
    }
}

fn observation_at<'a>(
    obs: Option<&'a Observations>,
    setup: &FilterSetup,
    k: usize,
) -> Result<Option<&'a DVector<f64>>> {
    if setup.ol.is_empty() {
        return Ok(None);
    }
    let obs = obs.ok_or_else(|| GckfError::arg("observations required when ol is non-empty"))?;
    obs.values.get(k).map(Some).ok_or_else(|| GckfError::arg(format!("observation stream ends before step {}", k + 1)))
}

/// Runs the full filter; it is the oracle every variant is compared to.
pub fn run_full(model: &SystemModel, setup: &FilterSetup, obs: Option<&Observations>) -> Result<Track> {
    let n = model.dim();
    let q = DMatrix::identity(n, n) * setup.q_var;
    let om = ObservationModel::selection(n, &setup.ol, setup.r_var)?;
    let mut b = model.prior.clone();
    let mut track = Track::new(setup.num_gu);
    for g in 0..setup.num_gu {
        let clock = Stopwatch::start();
        for step in 0..setup.steps_per_gu {
            b = setup.core.predict(&b, model.process.as_ref(), &model.input, &q, None)?;
            if let Some(z) = observation_at(obs, setup, g * setup.steps_per_gu + step)? {
                b = setup.core.update(&b, &om, z)?;
            }
        }
        track.window_ms.push(clock.elapsed_ms());
        track.record(g + 1, &b, &setup.snapshots);
    }
    track.final_belief = b;
    Ok(track)
}

/// Everything that depends only on the current layout.
pub struct EpochContext {
    pub layout: PartitionLayout,
    pub plan: ExchangePlan,
    pub models: Vec<RestrictedModel>,
    /// Per subsystem: positions in the observation vector and the observed global ids.
    pub obs_map: Vec<(Vec<usize>, Vec<usize>)>,
    pub q_local: Vec<DMatrix<f64>>,
}

impl EpochContext {
    pub fn new(
        model: &SystemModel,
        setup: &FilterSetup,
        variant: &GckfVariant,
        layout: PartitionLayout,
    ) -> Result<Self> {
        let plan = plan_exchange(&layout, variant.arch, variant.noc)?;
        let models = layout
            .subsystems
            .iter()
            .enumerate()
            .map(|(k, s)| {
                RestrictedModel::new(model.process.clone(), model.input.clone(), s.clone(), layout.external_ids(k))
            })
            .collect::<Result<Vec<_>>>()?;
        let owners = layout.owners();
        let mut obs_map = vec![(Vec::new(), Vec::new()); layout.noss()];
        for (pos, &i) in setup.ol.iter().enumerate() {
            obs_map[owners[i]].0.push(pos);
            obs_map[owners[i]].1.push(i);
        }
        let q_local = layout.subsystems.iter().map(|s| DMatrix::identity(s.len(), s.len()) * setup.q_var).collect();
        Ok(Self { layout, plan, models, obs_map, q_local })
    }
}

fn with_context(e: GckfError, gu: usize) -> GckfError {
    match e {
        GckfError::Numerical(m) => GckfError::Numerical(format!("global update {gu}: {m}")),
        GckfError::Protocol(m) => GckfError::Protocol(format!("global update {gu}: {m}")),
        other => other,
    }
}

/// One window of the compressed filter: clone, run the subsystem filters
/// for `steps_per_gu` steps, then fold their information into `full`.
pub fn gckf_window(
    full: &GaussianBelief,
    ctx: &EpochContext,
    setup: &FilterSetup,
    obs: Option<&Observations>,
    first_step: usize,
    mut trace: Option<(&mut Vec<MessageTrace>, usize)>,
) -> Result<(GaussianBelief, f64, f64)> {
    let layout = &ctx.layout;
    let inits = remap_belief(full, layout, layout, &ctx.plan.all_frozen())?;
    let mut subs = inits.iter().map(init_from_marginal).collect::<Result<Vec<_>>>()?;
    let priors: Vec<(DMatrix<f64>, DVector<f64>)> =
        layout.subsystems.iter().map(|s| (select(&full.cov, s, s), select_vec(&full.mean, s))).collect();
    let oms = subs
        .iter()
        .zip(&ctx.obs_map)
        .map(|(a, (_, ids))| (!ids.is_empty()).then(|| a.observe_states(ids, setup.r_var)).transpose())
        .collect::<Result<Vec<_>>>()?;

    let clock = Stopwatch::start();
    for step in 0..setup.steps_per_gu {
        let msgs = message_round(&subs, &ctx.plan)?;
        if let Some((rows, gu)) = trace.as_mut() {
            for m in msgs.iter().flatten() {
                rows.extend(MessageTrace::from_message(m, layout.epoch, *gu, step));
            }
        }
        let z = observation_at(obs, setup, first_step + step)?;
        for (k, msg) in msgs.iter().enumerate() {
            let mut a = local_predict(&subs[k], &ctx.models[k], msg.as_ref(), &setup.core, &ctx.q_local[k])?;
            if let (Some(z), Some(om)) = (z, &oms[k]) {
                let zk = select_vec(z, &ctx.obs_map[k].0);
                a = local_update(&a, om, &zk, &setup.core)?;
            }
            subs[k] = a;
        }
    }
    let local_ms = clock.elapsed_ms();

    let clock = Stopwatch::start();
    let liks = subs
        .iter()
        .enumerate()
        .map(|(k, a)| extract_virtual_likelihood(k, a, &priors[k].0, &priors[k].1))
        .collect::<Result<Vec<_>>>()?;
    let next = global_update(full, &liks, layout)?;
    Ok((next, local_ms, clock.elapsed_ms()))
}

/// Runs one compressed-filter variant over the whole horizon.
pub fn run_gckf(
    model: &SystemModel,
    setup: &FilterSetup,
    variant: &GckfVariant,
    obs: Option<&Observations>,
    mut trace: Option<&mut Vec<MessageTrace>>,
) -> Result<Track> {
    let spec = variant.layout_spec(model.dim());
    let schedule = variant.schedule(&spec)?;
    let mut ctx = EpochContext::new(model, setup, variant, schedule.first_layout(&spec)?)?;
    let mut full = model.prior.clone();
    let mut track = Track::new(setup.num_gu);
    track.layouts.push(ctx.layout.clone());
    for g in 0..setup.num_gu {
        let gu = g + 1;
        let tr = trace.as_deref_mut().map(|t| (t, gu));
        let (next, local_ms, gu_ms) =
            gckf_window(&full, &ctx, setup, obs, g * setup.steps_per_gu, tr).map_err(|e| with_context(e, gu))?;
        full = next;
        track.window_ms.push(local_ms);
        track.gu_ms.push(gu_ms);
        track.record(gu, &full, &setup.snapshots);
        if schedule.switches_after(gu) && gu < setup.num_gu {
            let layout = next_layout(&schedule, &ctx.layout)?;
            if layout.same_blocks(&ctx.layout) {
                ctx.layout.epoch = layout.epoch;
            } else {
                ctx = EpochContext::new(model, setup, variant, layout)?;
            }
            if track.layouts.len() <= schedule.offset_cycle.len() {
                track.layouts.push(ctx.layout.clone());
            }
        }
    }
    track.final_belief = full;
    Ok(track)
}

/// Truth and per-seed observation streams shared by every filter.
pub struct Scenario {
    pub truth: GroundTruth,
    pub observations: Vec<Option<Observations>>,
    /// Truth at each global-update instant.
    pub truth_at_gu: Vec<DVector<f64>>,
}

pub fn build_scenario(model: &SystemModel, setup: &FilterSetup, seeds: &[u64]) -> Result<Scenario> {
    let steps = setup.steps_per_gu * setup.num_gu;
    let truth = model.truth(steps);
    let observations = seeds
        .iter()
        .map(|&s| {
            if setup.ol.is_empty() {
                Ok(None)
            } else {
                simulate_observations(&truth, &setup.ol, setup.r_var, s).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let truth_at_gu = (1..=setup.num_gu).map(|g| truth.trajectory[g * setup.steps_per_gu].clone()).collect();
    Ok(Scenario { truth, observations, truth_at_gu })
}

#[cfg(feature = "parallel")]
fn map_runs<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_runs<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).map(f).collect()
}

/// Metrics of one variant against the full filter.
#[derive(Debug, Clone, Serialize)]
pub struct VariantSummary {
    pub variant: String,
    pub runs: usize,
    pub avg_discrepancy: f64,
    /// Largest `|std_percent_diff|` over states and global updates (first run).
    pub max_std_percent_diff: f64,
    /// Mean `|std_percent_diff|` over states and global updates (first run).
    pub mean_std_percent_diff: f64,
    /// `(global update, ||NC_gckf - NC_full||_F)` at the snapshot instants (first run).
    pub nc_distance: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub summary: VariantSummary,
    pub gu_times: Vec<f64>,
    pub truth_at_gu: Vec<DVector<f64>>,
    /// First Monte Carlo run.
    pub full: Track,
    pub gckf: Track,
    pub std_percent_diff: Vec<Vec<Option<f64>>>,
    /// Per global update, averaged over runs and states.
    pub discrepancy: Vec<f64>,
    pub trace: Vec<MessageTrace>,
}

fn summarise(
    label: String,
    full: &[Track],
    gckf: &[Track],
    truth_at_gu: &[DVector<f64>],
) -> Result<(VariantSummary, Vec<Vec<Option<f64>>>, Vec<f64>)> {
    let fm: Vec<Vec<DVector<f64>>> = full.iter().map(|t| t.means.clone()).collect();
    let gm: Vec<Vec<DVector<f64>>> = gckf.iter().map(|t| t.means.clone()).collect();
    let avg = avg_discrepancy(&fm, &gm, truth_at_gu)?;
    let series = discrepancy_series(&fm, &gm, truth_at_gu)?;
    let pct: Vec<Vec<Option<f64>>> =
        full[0].stds.iter().zip(&gckf[0].stds).map(|(f, g)| std_percent_diff(f, g)).collect::<Result<_>>()?;
    let flat: Vec<f64> = pct.iter().flatten().flatten().map(|v| v.abs()).collect();
    let mean_pct = if flat.is_empty() { 0.0 } else { flat.iter().sum::<f64>() / flat.len() as f64 };
    let nc = gckf[0]
        .snapshots
        .iter()
        .filter_map(|(g, c)| full[0].snapshot(*g).map(|f| (*g, normcov_distance(f, c))))
        .collect();
    Ok((
        VariantSummary {
            variant: label,
            runs: full.len(),
            avg_discrepancy: avg,
            max_std_percent_diff: max_abs_percent(&pct),
            mean_std_percent_diff: mean_pct,
            nc_distance: nc,
        },
        pct,
        series,
    ))
}

/// Runs the full filter and the configured variant over every seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let model = SystemModel::from_config(cfg)?;
    let setup = FilterSetup::from_config(cfg)?;
    let variant = GckfVariant::from_config(cfg)?;
    let scenario = build_scenario(&model, &setup, &cfg.seeds)?;
    let runs = map_runs(cfg.seeds.len(), |r| {
        let obs = scenario.observations[r].as_ref();
        let mut trace = Vec::new();
        let full = run_full(&model, &setup, obs)?;
        let gckf = run_gckf(&model, &setup, &variant, obs, (r == 0).then_some(&mut trace))?;
        Ok((full, gckf, trace))
    })?;
    let mut full = Vec::with_capacity(runs.len());
    let mut gckf = Vec::with_capacity(runs.len());
    let mut trace = Vec::new();
    for (r, (f, g, t)) in runs.into_iter().enumerate() {
        full.push(f);
        gckf.push(g);
        if r == 0 {
            trace = t;
        }
    }
    let (summary, pct, series) = summarise(variant.label(), &full, &gckf, &scenario.truth_at_gu)?;
    Ok(RunReport {
        config: cfg.clone(),
        summary,
        gu_times: (1..=setup.num_gu).map(|g| g as f64 / cfg.guf).collect(),
        truth_at_gu: scenario.truth_at_gu,
        full: full.swap_remove(0),
        gckf: gckf.swap_remove(0),
        std_percent_diff: pct,
        discrepancy: series,
        trace,
    })
}

/// All six archetype/architecture combinations.
pub fn all_variants(base: &GckfVariant) -> Vec<GckfVariant> {
    [Archetype::Static, Archetype::Switching]
        .into_iter()
        .flat_map(|t| Architecture::ALL.into_iter().map(move |a| (t, a)))
        .map(|(t, a)| base.with(t, a))
        .collect()
}

/// Runs several variants against one shared full filter per seed.
pub fn compare_variants(cfg: &ExperimentConfig, variants: &[GckfVariant]) -> Result<Vec<VariantSummary>> {
    cfg.validate()?;
    let model = SystemModel::from_config(cfg)?;
    let setup = FilterSetup::from_config(cfg)?;
    let scenario = build_scenario(&model, &setup, &cfg.seeds)?;
    let full = map_runs(cfg.seeds.len(), |r| run_full(&model, &setup, scenario.observations[r].as_ref()))?;
    variants
        .iter()
        .map(|v| {
            let gckf =
                map_runs(cfg.seeds.len(), |r| run_gckf(&model, &setup, v, scenario.observations[r].as_ref(), None))?;
            summarise(v.label(), &full, &gckf, &scenario.truth_at_gu).map(|(s, _, _)| s)
        })
        .collect()
}

/// Full-filter runs with two different cores on the same streams, returning
/// the average discrepancy of `b` against `a` (positive when `b` is closer
/// to the truth).
pub fn compare_cores(cfg: &ExperimentConfig, a: FilterCore, b: FilterCore) -> Result<f64> {
    let model = SystemModel::from_config(cfg)?;
    let setup = FilterSetup::from_config(cfg)?;
    let scenario = build_scenario(&model, &setup, &cfg.seeds)?;
    let run = |core: FilterCore| {
        let s = FilterSetup { core, ..setup.clone() };
        map_runs(cfg.seeds.len(), |r| run_full(&model, &s, scenario.observations[r].as_ref()).map(|t| t.means))
    };
    avg_discrepancy(&run(a)?, &run(b)?, &scenario.truth_at_gu)
}
