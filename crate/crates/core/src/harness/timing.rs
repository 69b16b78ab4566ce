//! Wall-clock measurements and the cost-ratio sweep.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::config::{ExperimentConfig, HeatParams, ModelKind};
use super::experiment::{EpochContext, FilterSetup, GckfVariant, SystemModel};
use super::metrics::{cost_ratio, gu_cost_proxies, Timings};
use crate::engine::{
    extract_virtual_likelihood, global_update, init_from_marginal, local_predict, local_update, AugmentedBelief,
};
use crate::error::{GckfError, Result};
use crate::exchange::{message_round, Architecture};
use crate::filters::{FilterCore, ObservationModel};
use crate::gaussian::{select, select_vec, GaussianBelief};
use crate::partition::{remap_belief, Archetype, BoundaryMode};

/// Monotonic stopwatch; reads zero where no clock is available.
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn elapsed_ms(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64() * 1e3
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Parameters of the timing sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub nos: usize,
    pub noss_list: Vec<usize>,
    pub archs: Vec<Architecture>,
    /// Number of observed states, spread evenly.
    pub m: usize,
    pub pf: f64,
    pub guf: f64,
    pub noc: usize,
    pub nof: usize,
    /// Repetitions; the median is reported.
    pub reps: usize,
    /// Filtering iterations averaged inside each repetition.
    pub iterations: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            nos: 1000,
            noss_list: vec![2, 5, 10, 20, 50],
            archs: Architecture::ALL.to_vec(),
            m: 500,
            pf: 100.0,
            guf: 1.0,
            noc: 8,
            nof: 4,
            reps: 5,
            iterations: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub noss: usize,
    pub arch: String,
    pub m: usize,
    pub t_ff_ms: f64,
    pub t_gckf_ms: f64,
    pub t_gu_ms: f64,
    pub cr: f64,
    pub proxy_outer: f64,
    pub proxy_cross: f64,
    pub proxy_block: f64,
}

/// Evenly spaced 1-based observation locations.
pub fn spread_locations(nos: usize, m: usize) -> Vec<usize> {
    let m = m.min(nos);
    (0..m).map(|i| i * nos / m.max(1) + 1).collect()
}

fn bench_experiment(b: &BenchConfig, noss: usize, arch: Architecture, m: usize) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelKind::Heat,
        pf: b.pf,
        uf: b.pf,
        guf: b.guf,
        sf: None,
        nos: b.nos,
        noss,
        noc: b.noc,
        nof: b.nof,
        ol: spread_locations(b.nos, m),
        sigma2_o: 10.0,
        sigma2_s: 1e-9,
        // fast-dynamics rod with the same grid spacing as the 500-state l = 1 case
        heat: Some(HeatParams { l: (b.nos as f64 + 1.0) / 501.0, ..HeatParams::default() }),
        burgers: None,
        decoupled: None,
        arch,
        archetype: Archetype::Static,
        core: super::config::CoreKind::Kf,
        ukf: Default::default(),
        seeds: vec![1],
        horizon: 1.0 / b.guf,
        cov_init: Default::default(),
        offset_cycle: None,
        boundary_mode: BoundaryMode::Anchored,
        snapshots: vec![],
    }
}

fn measurement(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(GckfError::Measurement(format!("{what} measured as {v} ms")))
    }
}

fn fastest(reps: usize, mut f: impl FnMut() -> Result<f64>) -> Result<f64> {
    (0..reps.max(1)).try_fold(f64::INFINITY, |m, _| Ok(m.min(f()?)))
}

/// Fastest of `reps` full-filter predict + update iterations (ms).
pub fn time_full_iteration(cfg: &ExperimentConfig, reps: usize) -> Result<f64> {
    let model = SystemModel::from_config(cfg)?;
    let setup = FilterSetup::from_config(cfg)?;
    let n = model.dim();
    let q = DMatrix::identity(n, n) * setup.q_var;
    let om = ObservationModel::selection(n, &setup.ol, setup.r_var)?;
    let z = select_vec(&model.prior.mean, &setup.ol);
    let mut b = model.prior.clone();
    // warm-up
    b = setup.core.predict(&b, model.process.as_ref(), &model.input, &q, None)?;
    let t = fastest(reps, || {
        let clock = Stopwatch::start();
        b = setup.core.predict(&b, model.process.as_ref(), &model.input, &q, None)?;
        if !setup.ol.is_empty() {
            b = setup.core.update(&b, &om, &z)?;
        }
        Ok(clock.elapsed_ms())
    })?;
    measurement("full-filter iteration", t)
}

/// A compressed filter prepared for timing on the first layout of a variant.
pub struct GckfTimer {
    ctx: EpochContext,
    core: FilterCore,
    prior: GaussianBelief,
    oms: Vec<Option<ObservationModel>>,
    z: Vec<DVector<f64>>,
    subs: Vec<AugmentedBelief>,
}

impl GckfTimer {
    pub fn new(cfg: &ExperimentConfig, variant: &GckfVariant) -> Result<Self> {
        let model = SystemModel::from_config(cfg)?;
        let setup = FilterSetup::from_config(cfg)?;
        let spec = variant.layout_spec(model.dim());
        let ctx = EpochContext::new(&model, &setup, variant, variant.schedule(&spec)?.first_layout(&spec)?)?;
        let prior = model.prior.clone();
        let z = select_vec(&prior.mean, &setup.ol);
        let subs = remap_belief(&prior, &ctx.layout, &ctx.layout, &ctx.plan.all_frozen())?
            .iter()
            .map(init_from_marginal)
            .collect::<Result<Vec<_>>>()?;
        let oms = subs
            .iter()
            .zip(&ctx.obs_map)
            .map(|(a, (_, ids))| (!ids.is_empty()).then(|| a.observe_states(ids, setup.r_var)).transpose())
            .collect::<Result<Vec<_>>>()?;
        let z = ctx.obs_map.iter().map(|(rows, _)| select_vec(&z, rows)).collect();
        let mut timer = Self { ctx, core: setup.core, prior, oms, z, subs };
        timer.step()?;
        Ok(timer)
    }

    fn step(&mut self) -> Result<()> {
        let msgs = message_round(&self.subs, &self.ctx.plan)?;
        for (k, msg) in msgs.iter().enumerate() {
            let mut a =
                local_predict(&self.subs[k], &self.ctx.models[k], msg.as_ref(), &self.core, &self.ctx.q_local[k])?;
            if let Some(om) = &self.oms[k] {
                a = local_update(&a, om, &self.z[k], &self.core)?;
            }
            self.subs[k] = a;
        }
        Ok(())
    }

    /// Mean time of one compressed iteration (message round, all local
    /// predictions and updates) over `iterations` (ms).
    pub fn iteration_ms(&mut self, iterations: usize) -> Result<f64> {
        let iterations = iterations.max(1);
        let clock = Stopwatch::start();
        for _ in 0..iterations {
            self.step()?;
        }
        measurement("compressed iteration", clock.elapsed_ms() / iterations as f64)
    }

    /// Fastest of `reps` global updates from the current local beliefs (ms).
    pub fn global_update_ms(&self, reps: usize) -> Result<f64> {
        let layout = &self.ctx.layout;
        let liks = self
            .subs
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let s = &layout.subsystems[k];
                extract_virtual_likelihood(k, a, &select(&self.prior.cov, s, s), &select_vec(&self.prior.mean, s))
            })
            .collect::<Result<Vec<_>>>()?;
        global_update(&self.prior, &liks, layout)?;
        let t = fastest(reps, || {
            let clock = Stopwatch::start();
            global_update(&self.prior, &liks, layout)?;
            Ok(clock.elapsed_ms())
        })?;
        measurement("global update", t)
    }
}

/// Cost-ratio sweep over `noss` and architectures. Architectures are timed
/// interleaved and the fastest repetition is kept. The global update does not
/// depend on the architecture, so it is timed once per `noss`.
pub fn bench(b: &BenchConfig) -> Result<Vec<BenchRow>> {
    let t_ff = time_full_iteration(&bench_experiment(b, 1, Architecture::IndependentInput, b.m), b.reps)?;
    let mut rows = Vec::new();
    for &noss in &b.noss_list {
        let mut timers = b
            .archs
            .iter()
            .map(|&arch| {
                let cfg = bench_experiment(b, noss, arch, b.m);
                cfg.validate()?;
                let variant = GckfVariant::from_config(&cfg)?;
                let timer = GckfTimer::new(&cfg, &variant)?;
                Ok((arch, variant, timer))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = vec![f64::INFINITY; timers.len()];
        for _ in 0..b.reps.max(1) {
            for (t, (_, _, timer)) in best.iter_mut().zip(timers.iter_mut()) {
                *t = t.min(timer.iteration_ms(b.iterations)?);
            }
        }
        let Some((_, _, first)) = timers.first() else { continue };
        let t_gu = first.global_update_ms(b.reps)?;
        for ((arch, variant, _), t_gckf) in timers.iter().zip(best) {
            let spec = variant.layout_spec(b.nos);
            let sizes = variant.schedule(&spec)?.first_layout(&spec)?.sizes();
            let [p1, p2, p3] = gu_cost_proxies(&sizes);
            rows.push(BenchRow {
                noss,
                arch: arch.name().to_string(),
                m: b.m,
                t_ff_ms: t_ff,
                t_gckf_ms: t_gckf,
                t_gu_ms: t_gu,
                cr: cost_ratio(&Timings { t_ff, t_gckf, t_gu }, b.pf, b.guf)?,
                proxy_outer: p1,
                proxy_cross: p2,
                proxy_block: p3,
            });
        }
    }
    Ok(rows)
}

/// `(M, t_ff, t_gckf)` for each observation count at fixed `noss`.
pub fn sweep_observations(b: &BenchConfig, noss: usize, ms: &[usize]) -> Result<Vec<(usize, f64, f64)>> {
    ms.iter()
        .map(|&m| {
            let cfg = bench_experiment(b, noss, Architecture::IndependentInput, m);
            let t_ff = time_full_iteration(&cfg, b.reps)?;
            let mut timer = GckfTimer::new(&cfg, &GckfVariant::from_config(&cfg)?)?;
            let t_gckf = fastest(b.reps, || timer.iteration_ms(b.iterations))?;
            Ok((m, t_ff, t_gckf))
        })
        .collect()
}
