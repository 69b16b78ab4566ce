//! Subsystem layouts over the global state vector and their switching schedule.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{GckfError, Result};
use crate::gaussian::{marginalize, GaussianBelief};

/// How an offset moves the block boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Non-periodic domain: the first block starts at 0 and the last ends at
    /// `nos`; interior boundaries move by the offset.
    #[default]
    Anchored,
    /// Periodic domain: all blocks rotate by the offset.
    Ring,
}

/// Non-overlapping subsystem archetypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Archetype {
    /// Static subsystems.
    #[serde(rename = "NONS")]
    Static,
    /// Subsystems whose boundaries migrate at switching instants.
    #[serde(rename = "NOS")]
    Switching,
}

impl Archetype {
    pub fn name(&self) -> &'static str {
        match self {
            Archetype::Static => "NONS",
            Archetype::Switching => "NOS",
        }
    }
}

impl std::str::FromStr for Archetype {
    type Err = GckfError;

    fn from_str(s: &str) -> Result<Self> {
        [Archetype::Static, Archetype::Switching]
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GckfError::Config(format!("unknown archetype {s:?} (NONS | NOS)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub nos: usize,
    pub noss: usize,
    /// Neighbour states read across each interface (stencil reach).
    pub nof: usize,
    pub mode: BoundaryMode,
}

impl LayoutSpec {
    /// Size of a block before the remainder is spread.
    pub fn base_block(&self) -> usize {
        self.nos / self.noss.max(1)
    }

    /// Offsets `[0, half block]`.
    pub fn default_cycle(&self) -> Vec<usize> {
        let half = self.base_block() / 2;
        if half == 0 {
            vec![0]
        } else {
            vec![0, half]
        }
    }
}

/// States read by a subsystem from one source subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborGroup {
    pub source: usize,
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionLayout {
    pub spec: LayoutSpec,
    pub offset: usize,
    pub epoch: usize,
    pub subsystems: Vec<Vec<usize>>,
    /// Per subsystem, neighbour groups in ascending source order.
    pub neighbors: Vec<Vec<NeighborGroup>>,
}

impl PartitionLayout {
    pub fn nos(&self) -> usize {
        self.spec.nos
    }

    pub fn noss(&self) -> usize {
        self.subsystems.len()
    }

    /// Owner of every global state.
    pub fn owners(&self) -> Vec<usize> {
        let mut own = vec![usize::MAX; self.nos()];
        for (k, s) in self.subsystems.iter().enumerate() {
            for &i in s {
                own[i] = k;
            }
        }
        own
    }

    /// Concatenated external ids read by subsystem `k`.
    pub fn external_ids(&self, k: usize) -> Vec<usize> {
        self.neighbors[k].iter().flat_map(|g| g.ids.iter().copied()).collect()
    }

    /// Number of distinct source subsystems of `k`.
    pub fn source_count(&self, k: usize) -> usize {
        self.neighbors[k].len()
    }

    /// Same blocks and neighbours (epoch ignored).
    pub fn same_blocks(&self, other: &PartitionLayout) -> bool {
        self.subsystems == other.subsystems && self.neighbors == other.neighbors
    }

    /// Subsystem sizes.
    pub fn sizes(&self) -> Vec<usize> {
        self.subsystems.iter().map(Vec::len).collect()
    }

    /// Writes `epoch,subsystem,first,last`, one row per contiguous run.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "epoch,subsystem,first,last")?;
        }
        for (k, s) in self.subsystems.iter().enumerate() {
            let mut start = 0;
            for i in 1..=s.len() {
                if i == s.len() || s[i] != s[i - 1] + 1 {
                    writeln!(w, "{},{},{},{}", self.epoch, k, s[start], s[i - 1])?;
                    start = i;
                }
            }
        }
        Ok(())
    }
}

pub fn build_layout(spec: &LayoutSpec, offset: usize, epoch: usize) -> Result<PartitionLayout> {
    let LayoutSpec { nos, noss, nof, mode } = *spec;
    if noss == 0 || nos < noss {
        return Err(GckfError::arg(format!("cannot split {nos} states into {noss} subsystems")));
    }
    let limit = nos.div_ceil(noss);
    if offset >= limit {
        return Err(GckfError::arg(format!("offset {offset} must be below {limit}")));
    }
    let base = nos / noss;
    let rem = nos % noss;
    let mut bounds = Vec::with_capacity(noss + 1);
    bounds.push(0);
    for k in 0..noss {
        bounds.push(bounds[k] + base + usize::from(k < rem));
    }
    let subsystems: Vec<Vec<usize>> = match mode {
        BoundaryMode::Anchored => {
            for b in bounds.iter_mut().take(noss).skip(1) {
                *b += offset;
            }
            if bounds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GckfError::arg(format!("offset {offset} empties a subsystem")));
            }
            bounds.windows(2).map(|w| (w[0]..w[1]).collect()).collect()
        }
        BoundaryMode::Ring => bounds.windows(2).map(|w| (w[0]..w[1]).map(|i| (i + offset) % nos).collect()).collect(),
    };

    let mut owner = vec![0; nos];
    for (k, s) in subsystems.iter().enumerate() {
        for &i in s {
            owner[i] = k;
        }
    }
    let neighbors = subsystems
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &i in s {
                for d in 1..=nof {
                    let cands = match mode {
                        BoundaryMode::Anchored => [i.checked_sub(d), (i + d < nos).then_some(i + d)],
                        BoundaryMode::Ring if d < nos => [Some((i + nos - d % nos) % nos), Some((i + d) % nos)],
                        BoundaryMode::Ring => [None, None],
                    };
                    for j in cands.into_iter().flatten() {
                        if owner[j] != k {
                            groups.entry(owner[j]).or_default().push(j);
                        }
                    }
                }
            }
            groups
                .into_iter()
                .map(|(source, mut ids)| {
                    ids.sort_unstable();
                    ids.dedup();
                    NeighborGroup { source, ids }
                })
                .collect()
        })
        .collect();
    Ok(PartitionLayout { spec: *spec, offset, epoch, subsystems, neighbors })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSchedule {
    pub mode: Archetype,
    /// Global updates between switching instants.
    pub gus_per_switch: usize,
    pub offset_cycle: Vec<usize>,
}

impl SwitchSchedule {
    pub fn new(mode: Archetype, gus_per_switch: usize, offset_cycle: Vec<usize>) -> Result<Self> {
        if gus_per_switch == 0 {
            return Err(GckfError::arg("switching interval must be at least one global update"));
        }
        if offset_cycle.is_empty() || (mode == Archetype::Static && offset_cycle.len() != 1) {
            return Err(GckfError::arg(format!(
                "{} needs {} offset(s), got {}",
                mode.name(),
                if mode == Archetype::Static { "exactly one" } else { "at least one" },
                offset_cycle.len()
            )));
        }
        Ok(Self { mode, gus_per_switch, offset_cycle })
    }

    pub fn first_layout(&self, spec: &LayoutSpec) -> Result<PartitionLayout> {
        build_layout(spec, self.offset_cycle[0], 0)
    }

    /// Whether global update number `gu` (1-based) is a switching instant.
    pub fn switches_after(&self, gu: usize) -> bool {
        gu > 0 && gu.is_multiple_of(self.gus_per_switch)
    }
}

pub fn next_layout(s: &SwitchSchedule, current: &PartitionLayout) -> Result<PartitionLayout> {
    let epoch = current.epoch + 1;
    match s.mode {
        Archetype::Static => Ok(PartitionLayout { epoch, ..current.clone() }),
        Archetype::Switching => {
            let offset = s.offset_cycle[epoch % s.offset_cycle.len()];
            build_layout(&current.spec, offset, epoch)
        }
    }
}

/// Marginal of the full belief over `[state_ids; frozen_ids]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemInit {
    pub state_ids: Vec<usize>,
    pub frozen_ids: Vec<usize>,
    pub marginal: GaussianBelief,
}

/// Per-subsystem initialisation data under `new`; `frozen[k]` lists the
/// frozen states of subsystem `k` (empty when unused).
pub fn remap_belief(
    full: &GaussianBelief,
    old: &PartitionLayout,
    new: &PartitionLayout,
    frozen: &[Vec<usize>],
) -> Result<Vec<SubsystemInit>> {
    if old.nos() != new.nos() || full.dim() != new.nos() {
        return Err(GckfError::arg(format!(
            "layouts of dimension {} and {} for a belief of dimension {}",
            old.nos(),
            new.nos(),
            full.dim()
        )));
    }
    if frozen.len() != new.noss() {
        return Err(GckfError::arg("one frozen list per subsystem is required"));
    }
    new.subsystems
        .iter()
        .zip(frozen)
        .map(|(s, f)| {
            let ids: Vec<usize> = s.iter().chain(f).copied().collect();
            Ok(SubsystemInit { state_ids: s.clone(), frozen_ids: f.clone(), marginal: marginalize(full, &ids)? })
        })
        .collect()
}
