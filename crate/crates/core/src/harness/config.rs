//! Experiment configuration (JSON) and its validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GckfError, Result};
use crate::exchange::Architecture;
use crate::filters::{FilterCore, UkfParams};
use crate::partition::{Archetype, BoundaryMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Heat,
    Burgers,
    /// Independent scalar states `x_i' = a_i x_i`, used as an optimality check.
    Decoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoreKind {
    Kf,
    Ekf,
    Ukf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatParams {
    pub k: f64,
    pub rho: f64,
    pub cp: f64,
    pub l: f64,
    pub boundary: (f64, f64),
    pub init_temp: f64,
}

impl Default for HeatParams {
    fn default() -> Self {
        Self { k: 400.0, rho: 8700.0, cp: 385.0, l: 15.0, boundary: (0.0, 400.0), init_temp: 23.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersParams {
    pub length: f64,
    /// Constant inflow value at the left boundary.
    pub inflow: f64,
    /// Truth initial condition: `inflow + height * exp(-((x - center) / width)^2)`.
    pub bump_height: f64,
    pub bump_center: f64,
    pub bump_width: f64,
    /// Filter prior mean (constant); defaults to the inflow value.
    #[serde(default)]
    pub prior_mean: Option<f64>,
}

impl Default for BurgersParams {
    fn default() -> Self {
        Self { length: 1.0, inflow: 1.0, bump_height: 0.5, bump_center: 0.3, bump_width: 0.1, prior_mean: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoupledParams {
    /// Per-state factors are spread evenly over `[decay_min, decay_max]`.
    pub decay_min: f64,
    pub decay_max: f64,
    pub init: f64,
}

impl Default for DecoupledParams {
    fn default() -> Self {
        Self { decay_min: 0.95, decay_max: 0.999, init: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovInit {
    pub scale: f64,
    pub phi: f64,
    pub psi: f64,
}

impl Default for CovInit {
    fn default() -> Self {
        Self { scale: 10.0, phi: 20.0, psi: 1.0 }
    }
}

fn default_noc() -> usize {
    8
}

fn default_nof() -> usize {
    4
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_core() -> CoreKind {
    CoreKind::Kf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub pf: f64,
    pub uf: f64,
    pub guf: f64,
    /// Switching frequency; defaults to `guf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sf: Option<f64>,
    pub nos: usize,
    pub noss: usize,
    #[serde(default = "default_noc")]
    pub noc: usize,
    #[serde(default = "default_nof")]
    pub nof: usize,
    /// Observed states, 1-based. Empty means pure prediction.
    #[serde(default)]
    pub ol: Vec<usize>,
    pub sigma2_o: f64,
    pub sigma2_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat: Option<HeatParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burgers: Option<BurgersParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoupled: Option<DecoupledParams>,
    pub arch: Architecture,
    pub archetype: Archetype,
    #[serde(default = "default_core")]
    pub core: CoreKind,
    #[serde(default)]
    pub ukf: UkfParams,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Simulated time, seconds.
    pub horizon: f64,
    #[serde(default)]
    pub cov_init: CovInit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_cycle: Option<Vec<usize>>,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
    /// Global updates (1-based) at which covariance snapshots are kept.
    #[serde(default)]
    pub snapshots: Vec<usize>,
}

/// Integer counts derived from the frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub steps_per_gu: usize,
    pub num_gu: usize,
    pub gus_per_switch: usize,
}

fn integer_ratio(num: f64, den: f64, what: &str) -> Result<usize> {
    let r = num / den;
    let n = r.round();
    if !(r.is_finite() && n >= 1.0 && (r - n).abs() <= 1e-9 * n.max(1.0)) {
        return Err(GckfError::Config(format!("{what} must be a positive integer, got {r}")));
    }
    Ok(n as usize)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| GckfError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GckfError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            GckfError::Config(m) => GckfError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn schedule(&self) -> Result<Schedule> {
        for (name, v) in [("pf", self.pf), ("uf", self.uf), ("guf", self.guf), ("horizon", self.horizon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GckfError::Config(format!("{name} must be positive")));
            }
        }
        if self.uf != self.pf {
            return Err(GckfError::Config(format!("uf ({}) must equal pf ({})", self.uf, self.pf)));
        }
        let sf = self.sf.unwrap_or(self.guf);
        Ok(Schedule {
            steps_per_gu: integer_ratio(self.pf, self.guf, "pf / guf")?,
            num_gu: integer_ratio(self.horizon * self.guf, 1.0, "horizon * guf")?,
            gus_per_switch: integer_ratio(self.guf, sf, "guf / sf")?,
        })
    }

    /// Observed states, 0-based.
    pub fn observed_states(&self) -> Vec<usize> {
        self.ol.iter().map(|i| i - 1).collect()
    }

    pub fn filter_core(&self) -> FilterCore {
        match self.core {
            CoreKind::Kf => FilterCore::Kf,
            CoreKind::Ekf => FilterCore::Ekf,
            CoreKind::Ukf => FilterCore::Ukf(self.ukf),
        }
    }

    /// Reach of the model's stencil in states.
    pub fn stencil_width(&self) -> usize {
        match self.model {
            ModelKind::Heat | ModelKind::Burgers => 1,
            ModelKind::Decoupled => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sched = self.schedule()?;
        let cfg_err = |m: String| Err(GckfError::Config(m));
        if self.noss == 0 || self.nos < self.noss {
            return cfg_err(format!("noss = {} must be in 1..={}", self.noss, self.nos));
        }
        if self.noss > 1 && self.nof < self.stencil_width() {
            return cfg_err(format!("nof = {} is below the stencil width {}", self.nof, self.stencil_width()));
        }
        let mut seen = vec![false; self.nos];
        for &i in &self.ol {
            if i == 0 || i > self.nos {
                return cfg_err(format!("ol entry {i} outside 1..={}", self.nos));
            }
            if std::mem::replace(&mut seen[i - 1], true) {
                return cfg_err(format!("ol entry {i} repeated"));
            }
        }
        if !(self.sigma2_s >= 0.0) || !(self.sigma2_o >= 0.0) {
            return cfg_err("variances must be non-negative".into());
        }
        if !self.ol.is_empty() && self.sigma2_o <= 0.0 {
            return cfg_err("sigma2_o must be positive when states are observed".into());
        }
        if self.seeds.is_empty() {
            return cfg_err("at least one seed is required".into());
        }
        if self.arch == Architecture::FrozenChosen && self.noc == 0 {
            return cfg_err("ELSD_FC needs noc > 0".into());
        }
        if let Some(c) = &self.offset_cycle {
            if c.is_empty() || (self.archetype == Archetype::Static && c.len() != 1) {
                return cfg_err("offset_cycle must have one entry for NONS and at least one for NOS".into());
            }
        }
        if let Some(&g) = self.snapshots.iter().find(|&&g| g == 0 || g > sched.num_gu) {
            return cfg_err(format!("snapshot {g} outside 1..={}", sched.num_gu));
        }
        let c = self.cov_init;
        if !(c.scale > 0.0 && c.phi > 0.0 && c.psi > 0.0) {
            return cfg_err("cov_init scale, phi and psi must be positive".into());
        }
        match self.model {
            ModelKind::Heat if self.heat.is_none() => return cfg_err("model heat needs a \"heat\" section".into()),
            ModelKind::Burgers if self.burgers.is_none() => {
                return cfg_err("model burgers needs a \"burgers\" section".into())
            }
            ModelKind::Burgers if self.core == CoreKind::Kf => {
                return cfg_err("the Burgers model is nonlinear; use core ekf or ukf".into())
            }
            _ => {}
        }
        Ok(())
    }

    /// Snapshot list, defaulting to the first and last global update.
    pub fn snapshot_list(&self) -> Result<Vec<usize>> {
        let n = self.schedule()?.num_gu;
        let mut s = if self.snapshots.is_empty() { vec![1, n] } else { self.snapshots.clone() };
        s.sort_unstable();
        s.dedup();
        Ok(s)
    }

    /// Built-in configurations, also shipped as JSON under `configs/`.
    pub fn preset(name: &str) -> Result<Self> {
        // 100-state desk scale keeps the grid spacing of the 500-state rod
        let desk_l = |l: f64| l * 101.0 / 501.0;
        let heat = |l: f64| HeatParams { l, ..HeatParams::default() };
        let base = ExperimentConfig {
            model: ModelKind::Heat,
            pf: 100.0,
            uf: 100.0,
            guf: 1.0,
            sf: None,
            nos: 100,
            noss: 4,
            noc: 8,
            nof: 4,
            ol: vec![],
            sigma2_o: 10.0,
            sigma2_s: 1e-9,
            heat: Some(heat(desk_l(15.0))),
            burgers: None,
            decoupled: None,
            arch: Architecture::FrozenNeighbours,
            archetype: Archetype::Switching,
            core: CoreKind::Kf,
            ukf: UkfParams::default(),
            seeds: (1..=25).collect(),
            horizon: 20.0,
            cov_init: CovInit::default(),
            offset_cycle: None,
            boundary_mode: BoundaryMode::Anchored,
            snapshots: vec![],
        };
        let cfg = match name {
            "experiment1" => ExperimentConfig {
                nos: 500,
                noss: 10,
                ol: vec![1, 250, 500],
                heat: Some(heat(15.0)),
                arch: Architecture::IndependentInput,
                archetype: Archetype::Static,
                seeds: vec![1],
                horizon: 10.0,
                ..base
            },
            "experiment2" => {
                ExperimentConfig { noss: 10, arch: Architecture::IndependentInput, seeds: vec![1], ..base }
            }
            "experiment3" => ExperimentConfig {
                noss: 10,
                heat: Some(heat(desk_l(1.0))),
                seeds: vec![1],
                horizon: 200.0,
                snapshots: vec![1, 100, 200],
                ..base
            },
            "experiment4" => {
                ExperimentConfig { heat: Some(heat(desk_l(1.0))), ol: vec![1, 20, 40, 60, 80, 100], ..base }
            }
            "burgers" => ExperimentConfig {
                model: ModelKind::Burgers,
                pf: 200.0,
                uf: 200.0,
                guf: 10.0,
                nos: 50,
                noss: 2,
                nof: 4,
                noc: 8,
                ol: vec![5, 15, 25, 35, 45],
                sigma2_o: 0.01,
                sigma2_s: 1e-6,
                heat: None,
                burgers: Some(BurgersParams::default()),
                arch: Architecture::FrozenChosen,
                core: CoreKind::Ukf,
                seeds: (1..=10).collect(),
                horizon: 1.0,
                cov_init: CovInit { scale: 0.01, phi: 5.0, psi: 0.001 },
                ..base
            },
            other => {
                return Err(GckfError::Config(format!("unknown preset {other:?} (experiment1..experiment4, burgers)")))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub const PRESETS: [&'static str; 5] = ["experiment1", "experiment2", "experiment3", "experiment4", "burgers"];
}
