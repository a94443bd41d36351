//! Central supervisor: shrinks the guaranteed-rate period by bisection,
//! adapts the best-effort TTI bounds, and runs the epoch loop.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::be_local::BeConfig;
use crate::error::{config, DmsError, Result};
use crate::game_gamma::{run_gamma, GammaConfig, GammaResult, GammaScenario};
use crate::game_omega::{run_omega, OmegaConfig};
use crate::gbr_local::{BrConfig, PenaltyMode};
use crate::ids::{BsId, UserId};
use crate::metrics::{overhead_bits, time_utilization_index, OverheadParams, Scheme};
use crate::network::{Network, PENALTY_EPS};
use crate::radio::RateModel;
use crate::schedule::{AbsfPattern, ActionProfile, DemandSet};

/// One Γ evaluation during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub t: usize,
    pub unmet: f64,
    pub feasible: bool,
    pub all_used: bool,
    pub rounds: usize,
    pub converged: bool,
}

/// Bisection over the guaranteed-rate period `T ∈ [1, W]`, one probe at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeState {
    pub w: usize,
    pub lo: usize,
    pub hi: usize,
    /// Smallest period seen with zero penalty.
    pub best_t: Option<usize>,
    pub best_profile: Option<ActionProfile>,
    pub probes: Vec<Probe>,
    /// `⌈log2 W⌉`; at most `cap + 1` probes are made.
    pub cap: usize,
    pub done: bool,
    pub infeasible: bool,
    last_profile: Option<ActionProfile>,
}

pub fn ceil_log2(w: usize) -> usize {
    if w <= 1 {
        0
    } else {
        (usize::BITS - (w - 1).leading_zeros()) as usize
    }
}

impl SqueezeState {
    pub fn new(w: usize) -> Result<Self> {
        if w == 0 {
            return config("horizon W must be at least 1");
        }
        Ok(SqueezeState {
            w,
            lo: 1,
            hi: w,
            best_t: None,
            best_profile: None,
            probes: Vec::new(),
            cap: ceil_log2(w),
            done: false,
            infeasible: false,
            last_profile: None,
        })
    }

    /// Period to evaluate next, or `None` once the search has ended.
    pub fn next_probe(&self) -> Option<usize> {
        if self.done || self.infeasible {
            None
        } else if self.probes.is_empty() {
            Some(self.w)
        } else if self.lo >= self.hi || self.probes.len() > self.cap {
            None
        } else {
            Some((self.lo + self.hi) / 2)
        }
    }

    /// Warm start for a probe at `t`: the previous probe's profile, resized.
    pub fn warm_start(&self, t: usize) -> Option<ActionProfile> {
        self.last_profile.as_ref().map(|p| p.resized(t))
    }

    pub fn record(&mut self, probe: Probe, profile: ActionProfile) {
        let t = probe.t;
        if probe.feasible {
            if self.best_t.is_none_or(|b| t <= b) {
                self.best_t = Some(t);
                self.best_profile = Some(profile.clone());
            }
            self.hi = self.hi.min(t);
            if probe.all_used {
                self.done = true;
            }
        } else if t == self.w {
            self.infeasible = true;
        } else {
            self.lo = self.lo.max(t + 1);
        }
        self.probes.push(probe);
        self.last_profile = Some(profile);
        if self.next_probe().is_none() {
            self.done = true;
        }
    }
}

/// Γ at period `t`, judged on realized unmet demand.
pub fn probe(scenario: &GammaScenario, t: usize, initial: Option<ActionProfile>, gamma: &GammaConfig) -> Result<(Probe, GammaResult)> {
    let cfg = GammaConfig { initial, ..gamma.clone() };
    let g = run_gamma(scenario, t, &cfg)?;
    let unmet = scenario.unmet_demand(&g.profile);
    let feasible = unmet <= PENALTY_EPS;
    let all_used = (0..t).all(|s| !g.profile.active_at(s).is_empty());
    let p = Probe { t, unmet, feasible, all_used: feasible && all_used, rounds: g.rounds, converged: g.converged };
    Ok((p, g))
}

/// Advances `state` by one probe; returns the Γ result of that probe.
pub fn squeeze_step(state: &mut SqueezeState, scenario: &GammaScenario, gamma: &GammaConfig) -> Result<Option<GammaResult>> {
    let Some(t) = state.next_probe() else { return Ok(None) };
    let (p, g) = probe(scenario, t, state.warm_start(t), gamma)?;
    state.record(p, g.profile.clone());
    Ok(Some(g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeResult {
    pub t: usize,
    pub profile: ActionProfile,
    pub penalties: BTreeMap<UserId, f64>,
    pub probes: Vec<Probe>,
}

/// Runs the bisection to completion. Unmet demand at `T = W` is an error.
pub fn time_squeeze(scenario: &GammaScenario, w: usize, gamma: &GammaConfig) -> Result<SqueezeResult> {
    let mut state = SqueezeState::new(w)?;
    while squeeze_step(&mut state, scenario, gamma)?.is_some() {}
    if state.infeasible {
        return Err(DmsError::Infeasible { horizon: w, penalty: state.probes[0].unmet });
    }
    let t = state.best_t.expect("a feasible probe exists");
    let profile = state.best_profile.clone().expect("kept with best_t");
    Ok(SqueezeResult { t, penalties: scenario.penalties(&profile), profile, probes: state.probes })
}

/// Additive-increase, multiplicative-decrease control of the best-effort bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AimdState {
    pub m: Vec<usize>,
    pub m_star: Vec<usize>,
    pub eta_prev: f64,
    pub eta_curr: f64,
    pub z: usize,
}

/// An AIMD update: which site changed and to what.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AimdChange {
    pub bs: BsId,
    pub from: usize,
    pub to: usize,
}

impl AimdState {
    /// Every site starts at its floor `⌈Z/|N|⌉`.
    pub fn new(n_bs: usize, z: usize) -> Self {
        let floor = z.div_ceil(n_bs.max(1));
        AimdState { m: vec![floor; n_bs], m_star: vec![floor; n_bs], eta_prev: 0.0, eta_curr: 0.0, z }
    }

    /// Adapts to a new best-effort horizon, clamping the bounds into `[M*, Z]`.
    pub fn rebase(&mut self, z: usize) {
        if z == self.z {
            return;
        }
        let floor = z.div_ceil(self.m.len().max(1));
        self.z = z;
        for (m, s) in self.m.iter_mut().zip(self.m_star.iter_mut()) {
            *s = floor;
            *m = (*m).clamp(floor, z.max(floor));
        }
    }
}

/// One controller step on the per-site utilities of the finished epoch.
pub fn aimd_step(state: &mut AimdState, per_bs_eta: &[f64]) -> Option<AimdChange> {
    state.eta_prev = state.eta_curr;
    state.eta_curr = per_bs_eta.iter().sum();
    // ties go to the lower site index in both directions
    let eta_of = |i: &usize| per_bs_eta[*i];
    if state.eta_curr > state.eta_prev {
        let i = (0..state.m.len())
            .filter(|i| state.m[*i] < state.z)
            .min_by(|a, b| eta_of(a).total_cmp(&eta_of(b)).then(a.cmp(b)))?;
        let from = state.m[i];
        state.m[i] += 1;
        Some(AimdChange { bs: BsId(i), from, to: state.m[i] })
    } else {
        let i = (0..state.m.len())
            .filter(|i| state.m[*i] > state.m_star[*i])
            .max_by(|a, b| eta_of(a).total_cmp(&eta_of(b)).then(b.cmp(a)))?;
        let from = state.m[i];
        state.m[i] = state.m_star[i].max(from.div_ceil(2));
        state.eta_curr = 0.0;
        Some(AimdChange { bs: BsId(i), from, to: state.m[i] })
    }
}

/// Parameters of the epoch loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmsConfig {
    pub w: usize,
    pub epochs: usize,
    pub alpha: f64,
    pub penalty_mode: PenaltyMode,
    pub br: BrConfig,
    pub gamma: GammaConfig,
    pub be: BeConfig,
    /// Ω deadline in rounds; `None` means `|N|²`.
    pub omega_deadline: Option<usize>,
    pub tti_s: f64,
    pub b_bits: u64,
}

impl Default for DmsConfig {
    fn default() -> Self {
        DmsConfig {
            w: 70,
            epochs: 10,
            alpha: 1000.0,
            penalty_mode: PenaltyMode::Residual,
            br: BrConfig::default(),
            gamma: GammaConfig::default(),
            be: BeConfig::default(),
            omega_deadline: None,
            tti_s: 1e-3,
            b_bits: crate::metrics::DEFAULT_B_BITS,
        }
    }
}

/// Demand sets that take effect from a given epoch on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSchedule {
    steps: Vec<(usize, DemandSet)>,
}

impl DemandSchedule {
    pub fn constant(d: DemandSet) -> Self {
        DemandSchedule { steps: vec![(0, d)] }
    }

    /// Steps must start at epoch 0 and be strictly increasing.
    pub fn new(steps: Vec<(usize, DemandSet)>) -> Result<Self> {
        if steps.first().is_none_or(|s| s.0 != 0) {
            return config("demand schedule must start at epoch 0");
        }
        if steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return config("demand schedule epochs must be strictly increasing");
        }
        Ok(DemandSchedule { steps })
    }

    pub fn at(&self, epoch: usize) -> &DemandSet {
        &self.steps.iter().rev().find(|s| s.0 <= epoch).expect("starts at 0").1
    }

    pub fn changes_at(&self, epoch: usize) -> bool {
        self.steps.iter().any(|s| s.0 == epoch)
    }
}

/// Per-epoch rate model; `None` keeps the network's own.
pub type ChannelFn<'a> = dyn Fn(usize) -> Result<Arc<dyn RateModel>> + Sync + 'a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub epoch: usize,
    pub t: usize,
    pub z: usize,
    pub total_penalty: f64,
    pub gbr_infeasible: bool,
    pub gbr_throughput_mbps: f64,
    pub be_throughput_mbps: f64,
    /// `Σ_i η_i`.
    pub eta: f64,
    /// `Σ_i min_u volume`.
    pub eta_hat: f64,
    pub per_bs_eta: Vec<f64>,
    pub m: Vec<usize>,
    pub squeeze_probes: usize,
    pub squeeze_done: bool,
    pub gamma_rounds: usize,
    pub gamma_converged: bool,
    pub omega_rounds: usize,
    pub omega_converged: bool,
    pub utilization_index: f64,
    pub ic_bits: u64,
    pub ib_bits: u64,
    pub gbr_usage: Vec<usize>,
    pub be_usage: Vec<usize>,
    /// ABSF bitmaps of the applied guaranteed-rate profile.
    pub gbr_patterns: Vec<AbsfPattern>,
    /// Bits each user received over the period, both classes.
    pub user_volume: BTreeMap<UserId, f64>,
}

/// GBR traffic delivered, capped at demand, in bits.
fn capped_gbr_bits(network: &Network, demands: &DemandSet, profile: &ActionProfile) -> f64 {
    let served = network.realized_volume(profile);
    network
        .bs_ids()
        .flat_map(|b| network.gbr_users(b).iter().copied())
        .map(|u| served.get(&u).copied().unwrap_or(0.0).min(demands.get(u)))
        .sum()
}

/// The epoch loop: one squeeze probe per epoch until the search ends, Ω on the
/// remaining `Z = W − T` TTIs, then an AIMD step.
pub fn run_dms(network: &Network, demands: &DemandSchedule, cfg: &DmsConfig, channel: Option<&ChannelFn>) -> Result<Vec<RunRecord>> {
    let n = network.n_bs();
    let w = cfg.w;
    let mut squeeze = SqueezeState::new(w)?;
    let mut applied: Option<(usize, ActionProfile)> = None;
    let mut aimd = AimdState::new(n, w);
    let mut be_profile: Option<ActionProfile> = None;
    let mut records = Vec::with_capacity(cfg.epochs);
    let period_s = w as f64 * cfg.tti_s;

    for epoch in 0..cfg.epochs {
        let net = match channel {
            Some(f) => network.with_rates(f(epoch)?),
            None => network.clone(),
        };
        let d = demands.at(epoch);
        let scenario = GammaScenario { network: &net, demands: d, alpha: cfg.alpha, penalty_mode: cfg.penalty_mode, br: cfg.br };
        if epoch > 0 && demands.changes_at(epoch) {
            squeeze = SqueezeState::new(w)?;
            applied = None;
        }

        let mut gamma_rounds = 0;
        let mut gamma_converged = true;
        if channel.is_some() && squeeze.infeasible {
            // the channel moved: W may be feasible now
            squeeze = SqueezeState::new(w)?;
        }
        let mut fresh = false;
        if let Some(g) = squeeze_step(&mut squeeze, &scenario, &cfg.gamma)? {
            gamma_rounds = g.rounds;
            gamma_converged = g.converged;
            if squeeze.probes.last().is_some_and(|p| p.feasible) {
                if let (Some(t), Some(p)) = (squeeze.best_t, &squeeze.best_profile) {
                    applied = Some((t, p.clone()));
                    fresh = true;
                }
            }
        }
        if channel.is_some() && !fresh {
            // the channel moved: re-check the applied period
            if let Some((t, prev)) = applied.clone() {
                let (p, g) = probe(&scenario, t, Some(prev), &cfg.gamma)?;
                gamma_rounds += g.rounds;
                gamma_converged &= g.converged;
                if p.feasible {
                    applied = Some((t, g.profile));
                } else {
                    squeeze = SqueezeState::new(w)?;
                    applied = None;
                    if let Some(g) = squeeze_step(&mut squeeze, &scenario, &cfg.gamma)? {
                        gamma_rounds += g.rounds;
                        gamma_converged &= g.converged;
                        if let (Some(t), Some(p)) = (squeeze.best_t, &squeeze.best_profile) {
                            applied = Some((t, p.clone()));
                        }
                    }
                }
            }
        }

        let infeasible = applied.is_none();
        let (t, gbr_profile) = match &applied {
            Some((t, p)) => (*t, p.clone()),
            None => (w, ActionProfile::empty(n, w)),
        };
        let mut user_volume: BTreeMap<UserId, f64> = if infeasible {
            squeeze.last_profile.as_ref().map(|p| net.realized_volume(p)).unwrap_or_default()
        } else {
            net.realized_volume(&gbr_profile)
        };
        let (total_penalty, gbr_bits, gbr_usage) = if infeasible {
            let last = squeeze.probes.last().map_or(0.0, |p| p.unmet);
            (last, squeeze.last_profile.as_ref().map_or(0.0, |p| capped_gbr_bits(&net, d, p)), vec![w; n])
        } else {
            (scenario.unmet_demand(&gbr_profile), capped_gbr_bits(&net, d, &gbr_profile), gbr_profile.usage())
        };

        let z = w - t;
        let mut rec_eta = (0.0, 0.0, vec![0.0; n], 0, true, vec![0; n], 0.0);
        if z > 0 && net.n_be_users() > 0 {
            aimd.rebase(z);
            let ocfg = OmegaConfig { deadline: cfg.omega_deadline, be: cfg.be, initial: be_profile.clone(), trace: false };
            let o = run_omega(&net, z, &aimd.m, &ocfg)?;
            let be_bits: f64 = o.per_user_volume.values().sum();
            user_volume.extend(o.per_user_volume.iter().map(|(u, v)| (*u, *v)));
            rec_eta = (o.eta_total(), o.utility(), o.per_bs_eta.clone(), o.rounds, o.converged, o.profile.usage(), be_bits);
            be_profile = Some(o.profile);
        }
        let (eta, eta_hat, per_bs_eta, omega_rounds, omega_converged, be_usage, be_bits) = rec_eta;
        let m_now = aimd.m.clone();
        if z > 0 && net.n_be_users() > 0 {
            aimd_step(&mut aimd, &per_bs_eta);
        }

        let users = (net.n_gbr_users() + net.n_be_users()) as u64;
        let oh = OverheadParams { b_bits: cfg.b_bits, w: w as u64, n_bs: n as u64, n_users: users, k: gamma_rounds.max(1) as u64 };
        let (ic_bits, ib_bits) = overhead_bits(&oh, Scheme::Dms);
        records.push(RunRecord {
            epoch,
            t,
            z,
            total_penalty,
            gbr_infeasible: infeasible,
            gbr_throughput_mbps: gbr_bits / period_s / 1e6,
            be_throughput_mbps: be_bits / period_s / 1e6,
            eta,
            eta_hat,
            per_bs_eta,
            m: if z > 0 { m_now } else { vec![0; n] },
            squeeze_probes: squeeze.probes.len(),
            squeeze_done: squeeze.done,
            gamma_rounds,
            gamma_converged,
            omega_rounds,
            omega_converged,
            utilization_index: time_utilization_index(&gbr_usage, t)?,
            ic_bits,
            ib_bits,
            gbr_usage,
            be_usage,
            gbr_patterns: gbr_profile.patterns(),
            user_volume,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::BsSet;
    use crate::radio::TableRates;

    fn single(rate: f64, demand: f64) -> (Network, DemandSet) {
        let mut r = TableRates::new();
        r.insert(UserId(0), BsSet::EMPTY, rate);
        let net = Network::new(vec![vec![UserId(0)]], vec![vec![]], Arc::new(r)).unwrap();
        let d = DemandSet::new([(UserId(0), demand)].into_iter().collect()).unwrap();
        (net, d)
    }

    fn scen<'a>(net: &'a Network, d: &'a DemandSet) -> GammaScenario<'a> {
        GammaScenario { network: net, demands: d, alpha: 100.0, penalty_mode: PenaltyMode::Residual, br: BrConfig::exact() }
    }

    #[test]
    fn log2_ceiling() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(70), 7);
    }

    #[test]
    fn zero_demand_squeezes_to_one() {
        let (net, _) = single(5.0, 0.0);
        let d = DemandSet::new(BTreeMap::new()).unwrap();
        let r = time_squeeze(&scen(&net, &d), 8, &GammaConfig::default()).unwrap();
        assert_eq!(r.t, 1);
        assert!(r.probes.len() <= 4);
        assert!(r.profile.actions().iter().all(|a| a.is_empty()));
    }

    #[test]
    fn exact_three_ttis() {
        let (net, d) = single(5.0, 15.0);
        let r = time_squeeze(&scen(&net, &d), 8, &GammaConfig::default()).unwrap();
        assert_eq!(r.t, 3);
        assert!(r.probes.len() <= 4);
    }

    #[test]
    fn infeasible_at_w() {
        let (net, d) = single(5.0, 100.0);
        let e = time_squeeze(&scen(&net, &d), 8, &GammaConfig::default()).unwrap_err();
        assert!(matches!(e, DmsError::Infeasible { horizon: 8, .. }));
    }

    #[test]
    fn aimd_examples() {
        let mut s = AimdState { m: vec![4, 4], m_star: vec![2, 2], eta_prev: 0.0, eta_curr: 1.0, z: 10 };
        let c = aimd_step(&mut s, &[5.0, 3.0]).unwrap();
        assert_eq!((c.bs, c.to), (BsId(1), 5));

        let mut s = AimdState { m: vec![9, 4], m_star: vec![3, 3], eta_prev: 0.0, eta_curr: 100.0, z: 10 };
        let c = aimd_step(&mut s, &[5.0, 3.0]).unwrap();
        assert_eq!((c.bs, c.from, c.to), (BsId(0), 9, 5));
        assert_eq!(s.eta_curr, 0.0);

        let mut s = AimdState { m: vec![10, 10], m_star: vec![5, 5], eta_prev: 0.0, eta_curr: 1.0, z: 10 };
        assert_eq!(aimd_step(&mut s, &[5.0, 3.0]), None);
        assert_eq!(s.m, vec![10, 10]);
        assert_eq!(s.eta_curr, 8.0);
    }

    #[test]
    fn aimd_rebase_clamps() {
        let mut s = AimdState::new(3, 9);
        assert_eq!(s.m, vec![3, 3, 3]);
        s.m[0] = 9;
        s.rebase(4);
        assert_eq!(s.m_star, vec![2, 2, 2]);
        assert_eq!(s.m, vec![4, 3, 3]);
    }

    #[test]
    fn dms_single_site_static() {
        let (net, d) = single(5.0, 15.0);
        let cfg = DmsConfig { w: 8, epochs: 6, alpha: 100.0, br: BrConfig::exact(), ..Default::default() };
        let recs = run_dms(&net, &DemandSchedule::constant(d), &cfg, None).unwrap();
        assert_eq!(recs.len(), 6);
        assert_eq!(recs.last().unwrap().t, 3);
        for r in &recs {
            assert_eq!(r.total_penalty, 0.0);
            assert_eq!(r.z, 8 - r.t);
            assert!((r.gbr_throughput_mbps - 15.0 / 8e-3 / 1e6).abs() < 1e-12);
            assert_eq!(r.be_throughput_mbps, 0.0);
        }
    }

    #[test]
    fn dms_infeasible_reserves_all() {
        let (net, d) = single(5.0, 100.0);
        let cfg = DmsConfig { w: 4, epochs: 2, ..Default::default() };
        let recs = run_dms(&net, &DemandSchedule::constant(d), &cfg, None).unwrap();
        assert!(recs.iter().all(|r| r.gbr_infeasible && r.t == 4 && r.z == 0));
    }
}
