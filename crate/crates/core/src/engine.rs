//! The compressed estimation engine.
//!
//! Between two global updates each subsystem runs a low-dimensional filter on
//! an augmented state `[clone; current; frozen]`: the clone is a stochastic
//! copy of the subsystem states taken at the last global update, the current
//! block evolves, and the optional frozen block holds copies of neighbour
//! (or chosen) states used by the ELSD exchange. At the global update each
//! subsystem's local information is summarised as a Gaussian virtual
//! likelihood and folded into the full belief.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GckfError, Result};
use crate::exchange::{apply_message, ExchangeMessage};
use crate::filters::{FilterCore, LinearParts, ObservationModel, ProcessModel};
use crate::gaussian::{
    block_diag, clamp_psd, min_eigenvalue, regression_from_blocks, select, select_vec, symmetrize, GaussianBelief,
    PINV_RTOL, SYMMETRY_RTOL,
};
use crate::partition::{PartitionLayout, SubsystemInit};

/// Local belief of one subsystem over `[clone; current; frozen]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBelief {
    pub belief: GaussianBelief,
    /// Global ids of the subsystem states (order of the clone and current blocks).
    pub state_ids: Vec<usize>,
    /// Global ids of the frozen states.
    pub frozen_ids: Vec<usize>,
}

impl AugmentedBelief {
    /// Number of subsystem states.
    pub fn n(&self) -> usize {
        self.state_ids.len()
    }

    pub fn clone_idx(&self) -> Vec<usize> {
        (0..self.n()).collect()
    }

    pub fn current_idx(&self) -> Vec<usize> {
        (self.n()..2 * self.n()).collect()
    }

    pub fn frozen_idx(&self) -> Vec<usize> {
        (2 * self.n()..2 * self.n() + self.frozen_ids.len()).collect()
    }

    pub fn current_mean(&self) -> DVector<f64> {
        self.belief.mean.rows(self.n(), self.n()).into_owned()
    }

    pub fn clone_mean(&self) -> DVector<f64> {
        self.belief.mean.rows(0, self.n()).into_owned()
    }

    /// Local position (within the current block) of a global state id.
    pub fn position(&self, global: usize) -> Option<usize> {
        self.state_ids.iter().position(|&g| g == global)
    }

    /// Selection observation of the listed global states over the augmented vector.
    pub fn observe_states(&self, global_ids: &[usize], var: f64) -> Result<ObservationModel> {
        let idx = global_ids
            .iter()
            .map(|&g| {
                self.position(g)
                    .map(|p| self.n() + p)
                    .ok_or_else(|| GckfError::arg(format!("state {g} is not owned by this subsystem")))
            })
            .collect::<Result<Vec<_>>>()?;
        ObservationModel::selection(self.belief.dim(), &idx, var)
    }
}

/// Gaussian summary of a subsystem's information over one global-update window.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualLikelihood {
    pub subsystem_id: usize,
    pub state_ids: Vec<usize>,
    /// Clone posterior mean minus clone prior mean.
    pub delta_mean: DVector<f64>,
    /// `A0 - A`, clamped PSD.
    pub delta_cov: DMatrix<f64>,
    /// `C A^+`, the map replacing the t_a states by the t_b states.
    pub phi: DMatrix<f64>,
    /// `B - C A^+ C^T`, clamped PSD.
    pub q_xi: DMatrix<f64>,
    pub new_mean_current: DVector<f64>,
    pub clone_mean_posterior: DVector<f64>,
    /// Clone prior (the full-belief marginal at t_a).
    pub prior_mean: DVector<f64>,
    pub prior_cov: DMatrix<f64>,
}

/// Builds the augmented belief from an already marginalised `[sub; frozen]` belief.
pub fn init_from_marginal(init: &SubsystemInit) -> Result<AugmentedBelief> {
    let n = init.state_ids.len();
    let f = init.frozen_ids.len();
    let m = &init.marginal;
    if m.dim() != n + f {
        return Err(GckfError::arg("marginal does not match the subsystem and frozen ids"));
    }
    let d = 2 * n + f;
    // position in the marginal for each augmented coordinate
    let src: Vec<usize> = (0..n).chain(0..n).chain(n..n + f).collect();
    let mean = DVector::from_fn(d, |i, _| m.mean[src[i]]);
    let cov = DMatrix::from_fn(d, d, |i, j| m.cov[(src[i], src[j])]);
    Ok(AugmentedBelief {
        belief: GaussianBelief { mean, cov },
        state_ids: init.state_ids.clone(),
        frozen_ids: init.frozen_ids.clone(),
    })
}

/// Clones the full-belief marginal at `sub_idx` and appends the frozen block.
pub fn init_augmented(full: &GaussianBelief, sub_idx: &[usize], frozen_spec: &[usize]) -> Result<AugmentedBelief> {
    if let Some(i) = frozen_spec.iter().find(|i| sub_idx.contains(i)) {
        return Err(GckfError::arg(format!("state {i} is both a subsystem and a frozen state")));
    }
    let ids: Vec<usize> = sub_idx.iter().chain(frozen_spec).copied().collect();
    let marginal = crate::gaussian::marginalize(full, &ids)?;
    init_from_marginal(&SubsystemInit { state_ids: sub_idx.to_vec(), frozen_ids: frozen_spec.to_vec(), marginal })
}

/// Restriction of a full process model to the rows of one subsystem.
///
/// The restricted input is `[external states; full input]`, where external
/// states are the neighbour values the subsystem rows read.
pub struct RestrictedModel {
    full: Arc<dyn ProcessModel>,
    full_dim: usize,
    rows: Vec<usize>,
    external: Vec<usize>,
    fixed_input: DVector<f64>,
    linear: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl std::fmt::Debug for RestrictedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RestrictedModel")
            .field("rows", &self.rows)
            .field("external", &self.external)
            .field("linear", &self.linear.is_some())
            .finish()
    }
}

impl RestrictedModel {
    pub fn new(
        full: Arc<dyn ProcessModel>,
        fixed_input: DVector<f64>,
        rows: Vec<usize>,
        external: Vec<usize>,
    ) -> Result<Self> {
        let full_dim = full.dim_state();
        if fixed_input.len() != full.dim_input() {
            return Err(GckfError::arg("fixed input does not match the full model input"));
        }
        if let Some(&i) = rows.iter().chain(&external).find(|&&i| i >= full_dim) {
            return Err(GckfError::Index { index: i, dim: full_dim });
        }
        let linear = full.linear_parts().map(|lp| {
            let all_in: Vec<usize> = (0..lp.b.ncols()).collect();
            let f = select(lp.f, &rows, &rows);
            let fe = select(lp.f, &rows, &external);
            let bu = select(lp.b, &rows, &all_in);
            let mut b = DMatrix::zeros(rows.len(), external.len() + all_in.len());
            b.view_mut((0, 0), (rows.len(), external.len())).copy_from(&fe);
            b.view_mut((0, external.len()), (rows.len(), all_in.len())).copy_from(&bu);
            (f, b)
        });
        Ok(Self { full, full_dim, rows, external, fixed_input, linear })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn external(&self) -> &[usize] {
        &self.external
    }

    pub fn dim_external(&self) -> usize {
        self.external.len()
    }

    pub fn fixed_input(&self) -> &DVector<f64> {
        &self.fixed_input
    }

    fn scatter(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let mut full = DVector::zeros(self.full_dim);
        for (k, &r) in self.rows.iter().enumerate() {
            full[r] = x[k];
        }
        for (k, &e) in self.external.iter().enumerate() {
            full[e] = u[k];
        }
        let fu = u.rows(self.external.len(), u.len() - self.external.len()).into_owned();
        (full, fu)
    }
}

impl ProcessModel for RestrictedModel {
    fn dim_state(&self) -> usize {
        self.rows.len()
    }

    fn dim_input(&self) -> usize {
        self.external.len() + self.fixed_input.len()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        if let Some((f, b)) = &self.linear {
            return f * x + b * u;
        }
        let (xf, uf) = self.scatter(x, u);
        select_vec(&self.full.step(&xf, &uf), &self.rows)
    }

    fn jacobian_state(&self, x: &DVector<f64>, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        if let Some((f, _)) = &self.linear {
            return Some(f.clone());
        }
        let (xf, uf) = self.scatter(x, u);
        self.full.jacobian_state(&xf, &uf).map(|j| select(&j, &self.rows, &self.rows))
    }

    fn jacobian_input(&self, x: &DVector<f64>, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        if let Some((_, b)) = &self.linear {
            return Some(b.clone());
        }
        let (xf, uf) = self.scatter(x, u);
        let jx = self.full.jacobian_state(&xf, &uf)?;
        let ju = self.full.jacobian_input(&xf, &uf)?;
        let ext = select(&jx, &self.rows, &self.external);
        let all_in: Vec<usize> = (0..ju.ncols()).collect();
        let fixed = select(&ju, &self.rows, &all_in);
        let mut out = DMatrix::zeros(self.rows.len(), self.dim_input());
        out.view_mut((0, 0), (self.rows.len(), ext.ncols())).copy_from(&ext);
        out.view_mut((0, ext.ncols()), (self.rows.len(), fixed.ncols())).copy_from(&fixed);
        Some(out)
    }

    fn linear_parts(&self) -> Option<LinearParts<'_>> {
        self.linear.as_ref().map(|(f, b)| LinearParts { f, b })
    }
}

/// Process over the augmented vector: clone and frozen blocks are constant,
/// the current block evolves with external states `alpha * frozen + v_ext`.
pub struct AugmentedProcess<'a> {
    local: &'a RestrictedModel,
    alpha: &'a DMatrix<f64>,
    n: usize,
    f: usize,
    linear: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl<'a> AugmentedProcess<'a> {
    /// `n` local states and `f` frozen states; `alpha` maps frozen states to the external ones.
    pub fn new(local: &'a RestrictedModel, alpha: &'a DMatrix<f64>, n: usize, f: usize) -> Self {
        let linear = local.linear_parts().map(|lp| {
            let p = local.dim_external();
            let d = 2 * n + f;
            let mut fa = DMatrix::identity(d, d);
            fa.view_mut((n, n), (n, n)).copy_from(lp.f);
            let fe = lp.b.columns(0, p);
            if f > 0 {
                fa.view_mut((n, 2 * n), (n, f)).copy_from(&(fe * alpha));
            }
            let mut ba = DMatrix::zeros(d, lp.b.ncols());
            ba.view_mut((n, 0), (n, lp.b.ncols())).copy_from(lp.b);
            (fa, ba)
        });
        Self { local, alpha, n, f, linear }
    }

    fn split(&self, z: &DVector<f64>, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let p = self.local.dim_external();
        let cur = z.rows(self.n, self.n).into_owned();
        let mut input = v.clone();
        if self.f > 0 {
            let frozen = z.rows(2 * self.n, self.f);
            let shifted = self.alpha * frozen;
            for i in 0..p {
                input[i] += shifted[i];
            }
        }
        (cur, input)
    }
}

impl ProcessModel for AugmentedProcess<'_> {
    fn dim_state(&self) -> usize {
        2 * self.n + self.f
    }

    fn dim_input(&self) -> usize {
        self.local.dim_input()
    }

    fn step(&self, z: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let (cur, input) = self.split(z, v);
        let mut out = z.clone();
        out.rows_mut(self.n, self.n).copy_from(&self.local.step(&cur, &input));
        out
    }

    fn jacobian_state(&self, z: &DVector<f64>, v: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (cur, input) = self.split(z, v);
        let jx = self.local.jacobian_state(&cur, &input)?;
        let ju = self.local.jacobian_input(&cur, &input)?;
        let d = self.dim_state();
        let mut j = DMatrix::identity(d, d);
        j.view_mut((self.n, self.n), (self.n, self.n)).copy_from(&jx);
        if self.f > 0 {
            let je = ju.columns(0, self.local.dim_external());
            j.view_mut((self.n, 2 * self.n), (self.n, self.f)).copy_from(&(je * self.alpha));
        }
        Some(j)
    }

    fn jacobian_input(&self, z: &DVector<f64>, v: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (cur, input) = self.split(z, v);
        let ju = self.local.jacobian_input(&cur, &input)?;
        let mut j = DMatrix::zeros(self.dim_state(), ju.ncols());
        j.view_mut((self.n, 0), (self.n, ju.ncols())).copy_from(&ju);
        Some(j)
    }

    fn linear_parts(&self) -> Option<LinearParts<'_>> {
        self.linear.as_ref().map(|(f, b)| LinearParts { f, b })
    }
}

/// Kalman/EKF prediction of the augmented belief exploiting the identity
/// rows of the clone and frozen blocks: only the current block and its
/// cross-covariances are recomputed.
fn structured_predict(
    a: &GaussianBelief,
    n: usize,
    f: usize,
    jx: &DMatrix<f64>,
    je_alpha: Option<DMatrix<f64>>,
    new_current: DVector<f64>,
    current_noise: DMatrix<f64>,
) -> GaussianBelief {
    let d = 2 * n + f;
    // G maps [current; frozen] to the new current block
    let mut g = DMatrix::zeros(n, n + f);
    g.view_mut((0, 0), (n, n)).copy_from(jx);
    if let Some(je) = je_alpha {
        g.view_mut((0, n), (n, f)).copy_from(&je);
    }
    let src = a.cov.rows(n, n + f);
    let rows = &g * src; // n x d
    let mut cov = a.cov.clone();
    cov.view_mut((n, 0), (n, d)).copy_from(&rows);
    cov.view_mut((0, n), (d, n)).copy_from(&rows.transpose());
    let rows_src = rows.columns(n, n + f);
    let block = rows_src * g.transpose() + current_noise;
    cov.view_mut((n, n), (n, n)).copy_from(&block);
    symmetrize(&mut cov);
    let mut mean = a.mean.clone();
    mean.rows_mut(n, n).copy_from(&new_current);
    GaussianBelief { mean, cov }
}

/// Advances the current block one step, holding clone and frozen blocks.
///
/// `msg` must be present whenever the subsystem reads external states.
pub fn local_predict(
    a: &AugmentedBelief,
    pm: &RestrictedModel,
    msg: Option<&ExchangeMessage>,
    core: &FilterCore,
    q: &DMatrix<f64>,
) -> Result<AugmentedBelief> {
    let n = a.n();
    let f = a.frozen_ids.len();
    if pm.dim_state() != n || q.nrows() != n || q.ncols() != n {
        return Err(GckfError::arg("process model or Q does not match the subsystem size"));
    }
    let p = pm.dim_external();
    let inputs = match msg {
        Some(m) => apply_message(a, m, pm)?,
        None if p > 0 => {
            return Err(GckfError::protocol(format!(
                "subsystem reads {p} external states but no exchange message was supplied"
            )))
        }
        None => crate::exchange::EffectiveInputs::empty(f),
    };
    let fixed = pm.fixed_input();
    let m = fixed.len();
    let mut u = DVector::zeros(p + m);
    u.rows_mut(0, p).copy_from(&inputs.offset);
    u.rows_mut(p, m).copy_from(fixed);

    let predicted = match core {
        FilterCore::Kf | FilterCore::Ekf => {
            let cur = a.current_mean();
            let mut ext_in = u.clone();
            if f > 0 {
                let shift = &inputs.alpha * a.belief.mean.rows(2 * n, f);
                ext_in.rows_mut(0, p).zip_apply(&shift, |x, s| *x += s);
            }
            let (jx, ju) = match core {
                FilterCore::Kf => {
                    let lp = pm
                        .linear_parts()
                        .ok_or_else(|| GckfError::Capability("kf core requires a linear process model".into()))?;
                    (lp.f.clone(), lp.b.clone())
                }
                _ => (
                    pm.jacobian_state(&cur, &ext_in)
                        .ok_or_else(|| GckfError::Capability("process model has no state Jacobian".into()))?,
                    pm.jacobian_input(&cur, &ext_in)
                        .ok_or_else(|| GckfError::Capability("process model has no input Jacobian".into()))?,
                ),
            };
            let je = ju.columns(0, p).into_owned();
            let mut noise = q.clone();
            if p > 0 {
                noise += &je * &inputs.input_cov * je.transpose();
            }
            let je_alpha = (f > 0).then(|| &je * &inputs.alpha);
            let new_current = pm.step(&cur, &ext_in);
            structured_predict(&a.belief, n, f, &jx, je_alpha, new_current, noise)
        }
        FilterCore::Ukf(_) => {
            let aug = AugmentedProcess::new(pm, &inputs.alpha, n, f);
            let mut q_aug = DMatrix::zeros(2 * n + f, 2 * n + f);
            q_aug.view_mut((n, n), (n, n)).copy_from(q);
            let input_cov = (p > 0).then(|| block_diag(&[inputs.input_cov.clone(), DMatrix::zeros(m, m)]));
            core.predict(&a.belief, &aug, &u, &q_aug, input_cov.as_ref())?
        }
    };

    let mut belief = predicted;
    // clone and frozen means are constants of the local process
    belief.mean.rows_mut(0, n).copy_from(&a.belief.mean.rows(0, n));
    if f > 0 {
        belief.mean.rows_mut(2 * n, f).copy_from(&a.belief.mean.rows(2 * n, f));
    }
    Ok(AugmentedBelief { belief, state_ids: a.state_ids.clone(), frozen_ids: a.frozen_ids.clone() })
}

/// Joint update of all blocks from an observation of current states.
pub fn local_update(
    a: &AugmentedBelief,
    om: &ObservationModel,
    z: &DVector<f64>,
    core: &FilterCore,
) -> Result<AugmentedBelief> {
    let n = a.n();
    if let Some(h) = om.matrix() {
        if h.ncols() != a.belief.dim() {
            return Err(GckfError::arg("observation model does not match the augmented dimension"));
        }
        for j in (0..h.ncols()).filter(|j| *j < n || *j >= 2 * n) {
            if h.column(j).iter().any(|v| *v != 0.0) {
                return Err(GckfError::arg(format!(
                    "observation references augmented coordinate {j}, which is not a current state"
                )));
            }
        }
    }
    let belief = core.update(&a.belief, om, z)?;
    Ok(AugmentedBelief { belief, state_ids: a.state_ids.clone(), frozen_ids: a.frozen_ids.clone() })
}

/// Summarises the local information collected since the clone was taken.
pub fn extract_virtual_likelihood(
    subsystem_id: usize,
    a: &AugmentedBelief,
    a0: &DMatrix<f64>,
    mean0: &DVector<f64>,
) -> Result<VirtualLikelihood> {
    let n = a.n();
    if a0.nrows() != n || a0.ncols() != n || mean0.len() != n {
        return Err(GckfError::arg("clone prior does not match the subsystem size"));
    }
    let clone = a.clone_idx();
    let current = a.current_idx();
    let a_post = select(&a.belief.cov, &clone, &clone);
    let b_post = select(&a.belief.cov, &current, &current);
    let c_post = select(&a.belief.cov, &current, &clone);
    let scale = a_post.diagonal().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if min_eigenvalue(&a_post) < -1e-9 * scale {
        return Err(GckfError::numerical(format!("clone covariance of subsystem {subsystem_id} is not PSD")));
    }
    let mut delta = a0 - &a_post;
    symmetrize(&mut delta);
    let delta_cov = clamp_psd(&delta, SYMMETRY_RTOL)?;
    let (phi, q_xi) = regression_from_blocks(&a_post, &b_post, &c_post)?;
    let clone_mean_posterior = a.clone_mean();
    Ok(VirtualLikelihood {
        subsystem_id,
        state_ids: a.state_ids.clone(),
        delta_mean: &clone_mean_posterior - mean0,
        delta_cov,
        phi,
        q_xi,
        new_mean_current: a.current_mean(),
        clone_mean_posterior,
        prior_mean: mean0.clone(),
        prior_cov: a0.clone(),
    })
}

fn gather_columns(p: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(p.nrows(), idx.len(), |i, j| p[(i, idx[j])])
}

/// Constrained virtual update: conditions the full belief on subsystem
/// `lik`'s information about its t_a states.
///
/// With `G = A0^+ dP A0^+`, `r = A0^+ dm` and the current marginal
/// `(mu_a, P_aa)` of those states, the gain kernel is
/// `(I - G (A0 - P_aa))^-1`, which is the identity while the marginal is
/// still the clone prior.
pub fn constrained_update(full: &mut GaussianBelief, lik: &VirtualLikelihood) -> Result<()> {
    let s = &lik.state_ids;
    let n = s.len();
    let eig = SymmetricEigen::new(lik.prior_cov.clone());
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = PINV_RTOL * top;
    let kept: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cut).collect();
    let dropped: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= cut).collect();
    if !dropped.is_empty() {
        // information about directions the clone prior does not span
        let vn = DMatrix::from_fn(n, dropped.len(), |i, j| eig.eigenvectors[(i, dropped[j])]);
        let leak = (vn.transpose() * &lik.delta_cov * &vn).norm();
        if leak > 1e-6 * top.max(f64::MIN_POSITIVE) {
            return Err(GckfError::numerical(format!(
                "subsystem {}: clone prior is degenerate ({} of {n} directions below tolerance) but carries information {leak:e} there",
                lik.subsystem_id,
                dropped.len()
            )));
        }
    }
    let vk = DMatrix::from_fn(n, kept.len(), |i, j| eig.eigenvectors[(i, kept[j])] / eig.eigenvalues[kept[j]]);
    let vk_plain = DMatrix::from_fn(n, kept.len(), |i, j| eig.eigenvectors[(i, kept[j])]);
    let a0_pinv = &vk * vk_plain.transpose();
    let mut g = &a0_pinv * &lik.delta_cov * &a0_pinv;
    symmetrize(&mut g);
    let r = &a0_pinv * &lik.delta_mean;

    let pa = gather_columns(&full.cov, s);
    let paa = select(&full.cov, s, s);
    let mu_a = select_vec(&full.mean, s);
    let kernel = DMatrix::identity(n, n) - &g * (&lik.prior_cov - &paa);
    let lu = kernel.lu();
    let k = lu.solve(&g);
    let v = lu.solve(&(r - &g * (mu_a - &lik.prior_mean)));
    let (k, v) = match (k, v) {
        (Some(k), Some(v)) if k.iter().chain(v.iter()).all(|x| x.is_finite()) => (k, v),
        _ => {
            return Err(GckfError::numerical(format!(
                "subsystem {}: constrained update kernel is singular",
                lik.subsystem_id
            )))
        }
    };
    full.mean += &pa * v;
    let w = &pa * k;
    full.cov.gemm(-1.0, &w, &pa.transpose(), 1.0);
    symmetrize(&mut full.cov);
    Ok(())
}

/// Uninformative virtual prediction: replaces the t_a states of the
/// subsystem by its t_b states through `x_b = phi (x_a - clone_mean) + current_mean + xi`.
pub fn uninformative_prediction(full: &mut GaussianBelief, lik: &VirtualLikelihood) -> Result<()> {
    let s = &lik.state_ids;
    let dim = full.dim();
    let mu_a = select_vec(&full.mean, s);
    let new_mean = &lik.phi * (mu_a - &lik.clone_mean_posterior) + &lik.new_mean_current;
    for (k, &i) in s.iter().enumerate() {
        full.mean[i] = new_mean[k];
    }
    let rows = DMatrix::from_fn(s.len(), dim, |i, j| full.cov[(s[i], j)]);
    let rows = &lik.phi * rows;
    for (k, &i) in s.iter().enumerate() {
        for j in 0..dim {
            full.cov[(i, j)] = rows[(k, j)];
        }
    }
    let cols = gather_columns(&full.cov, s) * lik.phi.transpose();
    for (k, &i) in s.iter().enumerate() {
        for j in 0..dim {
            full.cov[(j, i)] = cols[(j, k)];
        }
    }
    for (a, &i) in s.iter().enumerate() {
        for (b, &j) in s.iter().enumerate() {
            full.cov[(i, j)] += lik.q_xi[(a, b)];
        }
    }
    symmetrize(&mut full.cov);
    Ok(())
}

/// Folds every subsystem's virtual likelihood into the t_a full belief,
/// in ascending subsystem order, producing the t_b full belief.
pub fn global_update(
    full_at_ta: &GaussianBelief,
    likelihoods: &[VirtualLikelihood],
    layout: &PartitionLayout,
) -> Result<GaussianBelief> {
    if layout.nos() != full_at_ta.dim() {
        return Err(GckfError::protocol(format!(
            "layout covers {} states, full belief has {}",
            layout.nos(),
            full_at_ta.dim()
        )));
    }
    if likelihoods.len() != layout.subsystems.len() {
        return Err(GckfError::protocol(format!(
            "{} likelihoods for {} subsystems",
            likelihoods.len(),
            layout.subsystems.len()
        )));
    }
    let mut order: Vec<&VirtualLikelihood> = likelihoods.iter().collect();
    order.sort_by_key(|l| l.subsystem_id);
    let mut full = full_at_ta.clone();
    for (k, lik) in order.into_iter().enumerate() {
        if lik.subsystem_id != k || lik.state_ids != layout.subsystems[k] {
            return Err(GckfError::protocol(format!(
                "likelihood {} does not match subsystem {k} of the layout",
                lik.subsystem_id
            )));
        }
        constrained_update(&mut full, lik)?;
        uninformative_prediction(&mut full, lik)?;
    }
    Ok(full)
}
