//! Information exchange between subsystems.
//!
//! A subsystem whose stencil reads states owned by other subsystems receives,
//! before every prediction step, one message part per source. Under the
//! independent-input architecture (II) the neighbour states enter as
//! independent noisy inputs. Under ELSD they are expressed through a
//! regression on frozen copies of t_a states held in the receiver's
//! augmented belief, which keeps the statistical coupling to the receiver's
//! own states.

use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::engine::{AugmentedBelief, RestrictedModel};
use crate::error::{GckfError, Result};
use crate::gaussian::{block_diag, paired_regression, schur_regression, select, select_vec};
use crate::partition::PartitionLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    /// Independent input.
    #[serde(rename = "II")]
    IndependentInput,
    /// ELSD with frozen copies of the neighbour states.
    #[serde(rename = "ELSD_FN")]
    FrozenNeighbours,
    /// ELSD with frozen copies of chosen states of each source.
    #[serde(rename = "ELSD_FC")]
    FrozenChosen,
}

impl Architecture {
    pub const ALL: [Architecture; 3] =
        [Architecture::IndependentInput, Architecture::FrozenNeighbours, Architecture::FrozenChosen];

    pub fn name(&self) -> &'static str {
        match self {
            Architecture::IndependentInput => "II",
            Architecture::FrozenNeighbours => "ELSD_FN",
            Architecture::FrozenChosen => "ELSD_FC",
        }
    }

    pub fn uses_frozen(&self) -> bool {
        !matches!(self, Architecture::IndependentInput)
    }
}

impl FromStr for Architecture {
    type Err = GckfError;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GckfError::Config(format!("unknown architecture {s:?} (II | ELSD_FN | ELSD_FC)")))
    }
}

/// What one source sends to one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct MessagePart {
    pub source: usize,
    pub requested: Vec<usize>,
    pub alpha: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Current estimate of the requested states.
    pub xb_hat_t: DVector<f64>,
    /// t_a estimate of the anchor states.
    pub xb_hat_ta: DVector<f64>,
    pub anchor_ids: Vec<usize>,
    /// Marginal covariance of the requested states.
    pub marginal_cov: DMatrix<f64>,
    /// Trace of the anchor covariance in the source.
    pub anchor_trace: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeMessage {
    pub arch: Architecture,
    pub target: usize,
    pub parts: Vec<MessagePart>,
}

impl ExchangeMessage {
    pub fn requested_ids(&self) -> Vec<usize> {
        self.parts.iter().flat_map(|p| p.requested.iter().copied()).collect()
    }

    pub fn anchor_ids(&self) -> Vec<usize> {
        self.parts.iter().flat_map(|p| p.anchor_ids.iter().copied()).collect()
    }

    /// `blockdiag(alpha_d)`.
    pub fn assembled_alpha(&self) -> DMatrix<f64> {
        block_diag(&self.parts.iter().map(|p| p.alpha.clone()).collect::<Vec<_>>())
    }

    /// `blockdiag(|M| q_d)`.
    pub fn assembled_q(&self) -> DMatrix<f64> {
        let m = self.parts.len() as f64;
        block_diag(&self.parts.iter().map(|p| &p.q * m).collect::<Vec<_>>())
    }

    /// Same message with every gain set to zero and the marginal covariance
    /// as residual, i.e. the independent-input message in ELSD layout.
    pub fn zero_gain(&self) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|p| MessagePart {
                alpha: DMatrix::zeros(p.alpha.nrows(), p.alpha.ncols()),
                q: p.marginal_cov.clone(),
                ..p.clone()
            })
            .collect();
        Self { parts, ..self.clone() }
    }
}

/// Noisy-input description consumed by the augmented prediction:
/// external states `= alpha * frozen + offset + zeta`, `zeta ~ N(0, input_cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveInputs {
    pub alpha: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub input_cov: DMatrix<f64>,
}

impl EffectiveInputs {
    pub fn empty(frozen: usize) -> Self {
        Self { alpha: DMatrix::zeros(0, frozen), offset: DVector::zeros(0), input_cov: DMatrix::zeros(0, 0) }
    }
}

/// States of one source requested by one receiver, and their anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub source: usize,
    pub requested: Vec<usize>,
    pub anchors: Vec<usize>,
}

/// All requests of a layout under one architecture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangePlan {
    pub arch: Architecture,
    pub requests: Vec<Vec<Request>>,
}

impl ExchangePlan {
    /// Frozen states held by subsystem `k`.
    pub fn frozen_ids(&self, k: usize) -> Vec<usize> {
        self.requests[k].iter().flat_map(|r| r.anchors.iter().copied()).collect()
    }

    pub fn all_frozen(&self) -> Vec<Vec<usize>> {
        (0..self.requests.len()).map(|k| self.frozen_ids(k)).collect()
    }
}

/// The `noc` states of `source` closest to any state of `receiver`, ties
/// broken by the smaller index, returned in ascending order.
pub fn chosen_states(source: &[usize], receiver: &[usize], noc: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, usize)> =
        source.iter().map(|&i| (receiver.iter().map(|&j| i.abs_diff(j)).min().unwrap_or(usize::MAX), i)).collect();
    ranked.sort_unstable();
    let mut out: Vec<usize> = ranked.into_iter().take(noc).map(|(_, i)| i).collect();
    out.sort_unstable();
    out
}

pub fn plan_exchange(layout: &PartitionLayout, arch: Architecture, noc: usize) -> Result<ExchangePlan> {
    if arch == Architecture::FrozenChosen && noc == 0 {
        return Err(GckfError::arg("ELSD_FC needs at least one chosen state per source"));
    }
    let requests = layout
        .neighbors
        .iter()
        .enumerate()
        .map(|(k, groups)| {
            groups
                .iter()
                .map(|g| Request {
                    source: g.source,
                    requested: g.ids.clone(),
                    anchors: match arch {
                        Architecture::IndependentInput => Vec::new(),
                        Architecture::FrozenNeighbours => g.ids.clone(),
                        Architecture::FrozenChosen => {
                            chosen_states(&layout.subsystems[g.source], &layout.subsystems[k], noc)
                        }
                    },
                })
                .collect()
        })
        .collect();
    Ok(ExchangePlan { arch, requests })
}

/// Builds the part a source sends for `requested`. Read-only on `source`.
pub fn synthesize_message(
    source_id: usize,
    source: &AugmentedBelief,
    requested: &[usize],
    arch: Architecture,
    anchors: &[usize],
) -> Result<MessagePart> {
    let locate = |ids: &[usize]| -> Result<Vec<usize>> {
        ids.iter()
            .map(|&g| {
                source.position(g).ok_or_else(|| {
                    GckfError::protocol(format!("state {g} is not owned by source subsystem {source_id}"))
                })
            })
            .collect()
    };
    let n = source.n();
    let cur: Vec<usize> = locate(requested)?.into_iter().map(|p| n + p).collect();
    let marginal_cov = select(&source.belief.cov, &cur, &cur);
    let xb_hat_t = select_vec(&source.belief.mean, &cur);
    let p = requested.len();
    if !arch.uses_frozen() {
        if !anchors.is_empty() {
            return Err(GckfError::protocol("independent input takes no anchors"));
        }
        return Ok(MessagePart {
            source: source_id,
            requested: requested.to_vec(),
            alpha: DMatrix::zeros(p, 0),
            q: marginal_cov.clone(),
            xb_hat_t,
            xb_hat_ta: DVector::zeros(0),
            anchor_ids: Vec::new(),
            marginal_cov,
            anchor_trace: 0.0,
        });
    }
    let anchor_pos = locate(anchors)?;
    let reg = if anchors == requested {
        paired_regression(&source.belief, &anchor_pos, &cur)?
    } else {
        schur_regression(&source.belief, &anchor_pos, &cur)?
    };
    let anchor_trace = select(&source.belief.cov, &anchor_pos, &anchor_pos).trace();
    Ok(MessagePart {
        source: source_id,
        requested: requested.to_vec(),
        alpha: reg.alpha,
        q: reg.q,
        xb_hat_t: reg.mean_c,
        xb_hat_ta: reg.mean_a,
        anchor_ids: anchors.to_vec(),
        marginal_cov,
        anchor_trace,
    })
}

/// Turns a message into the noisy-input description for `local`.
pub fn apply_message(local: &AugmentedBelief, msg: &ExchangeMessage, pm: &RestrictedModel) -> Result<EffectiveInputs> {
    if msg.requested_ids() != pm.external() {
        return Err(GckfError::protocol(format!(
            "message for subsystem {} carries states {:?}, the model reads {:?}",
            msg.target,
            msg.requested_ids(),
            pm.external()
        )));
    }
    if msg.anchor_ids() != local.frozen_ids {
        return Err(GckfError::protocol(format!(
            "message anchors {:?} do not match the frozen states {:?} of subsystem {}",
            msg.anchor_ids(),
            local.frozen_ids,
            msg.target
        )));
    }
    let alpha = msg.assembled_alpha();
    let xb_t: Vec<f64> = msg.parts.iter().flat_map(|p| p.xb_hat_t.iter().copied()).collect();
    let xb_ta: Vec<f64> = msg.parts.iter().flat_map(|p| p.xb_hat_ta.iter().copied()).collect();
    let offset = DVector::from_vec(xb_t) - &alpha * DVector::from_vec(xb_ta);
    Ok(EffectiveInputs { alpha, offset, input_cov: msg.assembled_q() })
}

/// Computes every message from the current (pre-step) beliefs.
pub fn message_round(subsystems: &[AugmentedBelief], plan: &ExchangePlan) -> Result<Vec<Option<ExchangeMessage>>> {
    if subsystems.len() != plan.requests.len() {
        return Err(GckfError::protocol("plan and subsystem count differ"));
    }
    plan.requests
        .iter()
        .enumerate()
        .map(|(k, reqs)| {
            if reqs.is_empty() {
                return Ok(None);
            }
            let parts = reqs
                .iter()
                .map(|r| synthesize_message(r.source, &subsystems[r.source], &r.requested, plan.arch, &r.anchors))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some(ExchangeMessage { arch: plan.arch, target: k, parts }))
        })
        .collect()
}

/// One row of the exchange trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageTrace {
    pub epoch: usize,
    pub gu: usize,
    pub step: usize,
    pub source: usize,
    pub target: usize,
    pub alpha_norm: f64,
    /// `||alpha - I||_F` when the gain is square, otherwise NaN.
    pub alpha_identity_gap: f64,
    pub q_trace: f64,
    pub anchor_trace: f64,
}

impl MessageTrace {
    pub fn from_message(msg: &ExchangeMessage, epoch: usize, gu: usize, step: usize) -> Vec<Self> {
        msg.parts
            .iter()
            .map(|p| MessageTrace {
                epoch,
                gu,
                step,
                source: p.source,
                target: msg.target,
                alpha_norm: p.alpha.norm(),
                alpha_identity_gap: if p.alpha.is_square() && p.alpha.nrows() > 0 {
                    (&p.alpha - DMatrix::identity(p.alpha.nrows(), p.alpha.nrows())).norm()
                } else {
                    f64::NAN
                },
                q_trace: p.q.trace(),
                anchor_trace: p.anchor_trace,
            })
            .collect()
    }
}

pub fn write_trace_csv<W: Write>(rows: &[MessageTrace], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epoch,gu,step,source,target,alpha_norm,alpha_identity_gap,q_trace,anchor_trace")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:e},{:e},{:e},{:e}",
            r.epoch, r.gu, r.step, r.source, r.target, r.alpha_norm, r.alpha_identity_gap, r.q_trace, r.anchor_trace
        )?;
    }
    Ok(())
}
