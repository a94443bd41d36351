//! Exhaustive solvers for tiny instances, used as test oracles.
//!
//! Rates do not depend on the TTI index, so a joint schedule is a multiset of
//! per-TTI configurations (each site serves one of its users or stays blank).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::be_local::{compare_maxmin, LocalBeProblem};
use crate::error::{config, DmsError, Result};
use crate::gbr_local::{penalty_of, LocalGbrProblem, PenaltyMode, Slots};
use crate::ids::{BsId, BsSet, UserId};
use crate::network::{Network, PENALTY_EPS};
use crate::schedule::{Action, ActionProfile, DemandSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_bs: usize,
    pub max_users_per_bs: usize,
    pub max_ttis: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_bs: 3, max_users_per_bs: 3, max_ttis: 6 }
    }
}

impl OracleLimits {
    fn check(&self, n_bs: usize, users_per_bs: usize, ttis: usize) -> Result<()> {
        if n_bs > self.max_bs || users_per_bs > self.max_users_per_bs || ttis > self.max_ttis {
            return Err(DmsError::Capacity {
                what: format!("{n_bs} sites, {users_per_bs} users/site, {ttis} TTIs"),
                limit: format!(
                    "{} sites, {} users/site, {} TTIs",
                    self.max_bs, self.max_users_per_bs, self.max_ttis
                ),
            });
        }
        Ok(())
    }
}

/// One TTI of a joint schedule: the user served at each site, and the rate
/// every scheduled user obtains.
#[derive(Debug, Clone)]
struct Config {
    choice: Vec<Option<UserId>>,
    gains: Vec<(usize, f64)>,
    active: usize,
}

/// All configurations over `users[bs]`, skipping those in which a site serves
/// a user at zero rate (blanking that site is never worse).
fn configs(network: &Network, users: &[Vec<UserId>], index: &BTreeMap<UserId, usize>) -> Vec<Config> {
    let n = users.len();
    let mut out = Vec::new();
    let mut choice = vec![None; n];
    fn rec(
        b: usize,
        choice: &mut Vec<Option<UserId>>,
        users: &[Vec<UserId>],
        network: &Network,
        index: &BTreeMap<UserId, usize>,
        out: &mut Vec<Config>,
    ) {
        if b == users.len() {
            let active: BsSet = (0..users.len()).filter(|k| choice[*k].is_some()).map(BsId).collect();
            if active.is_empty() {
                return;
            }
            let gains: Vec<(usize, f64)> = choice
                .iter()
                .enumerate()
                .filter_map(|(k, u)| u.map(|u| (index[&u], network.rate(u, BsId(k), active))))
                .collect();
            if gains.iter().all(|(_, r)| *r > 0.0) {
                out.push(Config { choice: choice.clone(), gains, active: active.len() });
            }
            return;
        }
        for u in users[b].iter().copied().map(Some).chain([None]) {
            choice[b] = u;
            rec(b + 1, choice, users, network, index, out);
        }
        choice[b] = None;
    }
    rec(0, &mut choice, users, network, index, &mut out);
    out
}

fn user_index(users: &[Vec<UserId>]) -> (Vec<UserId>, BTreeMap<UserId, usize>) {
    let flat: Vec<UserId> = users.iter().flatten().copied().collect();
    let index = flat.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    (flat, index)
}

fn profile_from(n_bs: usize, horizon: usize, picks: &[&Config]) -> ActionProfile {
    let mut slots = vec![vec![None; horizon]; n_bs];
    for (t, c) in picks.iter().enumerate() {
        for (b, u) in c.choice.iter().enumerate() {
            slots[b][t] = *u;
        }
    }
    ActionProfile::new(slots.into_iter().enumerate().map(|(b, s)| Action::from_slots(BsId(b), s)).collect())
        .expect("owners are in order")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralGbrSolution {
    /// Last used TTI, counted from 1; used TTIs form the prefix `[0, L)`.
    pub l: usize,
    pub used_ttis: Vec<bool>,
    /// `bs_activity[i][t]`.
    pub bs_activity: Vec<Vec<bool>>,
    /// `(user, TTI, rate)` for every scheduled pair.
    pub assignment: Vec<(UserId, usize, f64)>,
    pub penalties: BTreeMap<UserId, f64>,
    pub objective: f64,
    pub profile: ActionProfile,
}

impl CentralGbrSolution {
    pub fn per_bs_usage(&self) -> Vec<usize> {
        self.bs_activity.iter().map(|a| a.iter().filter(|x| **x).count()).collect()
    }

    pub fn total_penalty(&self) -> f64 {
        self.penalties.values().sum()
    }
}

struct GbrSearch<'a> {
    configs: &'a [Config],
    demands: Vec<f64>,
    alpha: f64,
    mode: PenaltyMode,
    /// Rate of each user when its site transmits alone: an upper bound per TTI.
    best_rate: Vec<f64>,
    horizon: usize,
    best: Option<(f64, usize, Vec<usize>)>,
}

impl GbrSearch<'_> {
    fn pen_total(&self, served: &[f64]) -> f64 {
        served.iter().zip(&self.demands).map(|(s, d)| penalty_of(self.mode, *d, *s)).sum()
    }

    fn better(&self, obj: f64, usage: usize) -> bool {
        match &self.best {
            None => true,
            Some((bo, bu, _)) => {
                let tol = PENALTY_EPS * obj.abs().max(bo.abs()).max(1.0);
                obj < bo - tol || (obj <= bo + tol && usage < *bu)
            }
        }
    }

    fn rec(&mut self, start: usize, picks: &mut Vec<usize>, served: &mut Vec<f64>, usage: usize) {
        let l = picks.len();
        let obj = l as f64 + self.alpha * self.pen_total(served);
        if self.better(obj, usage) {
            self.best = Some((obj, usage, picks.clone()));
        }
        if l == self.horizon {
            return;
        }
        // k more TTIs give each user at most k times its best rate
        let rem = self.horizon - l;
        let lb = (1..=rem)
            .map(|k| {
                let pen: f64 = served
                    .iter()
                    .zip(&self.demands)
                    .zip(&self.best_rate)
                    .map(|((s, d), r)| penalty_of(self.mode, *d, s + k as f64 * r))
                    .sum();
                (l + k) as f64 + self.alpha * pen
            })
            .fold(f64::INFINITY, f64::min);
        if let Some((bo, _, _)) = &self.best {
            if lb > bo + PENALTY_EPS * bo.abs().max(1.0) {
                return;
            }
        }
        for c in start..self.configs.len() {
            let cfg = &self.configs[c];
            // a satisfied user gains nothing from another TTI
            if cfg.gains.iter().any(|(u, _)| self.demands[*u] - served[*u] <= PENALTY_EPS * self.demands[*u].max(1.0)) {
                continue;
            }
            for (u, r) in &cfg.gains {
                served[*u] += r;
            }
            picks.push(c);
            self.rec(c, picks, served, usage + cfg.active);
            picks.pop();
            for (u, r) in &cfg.gains {
                served[*u] -= r;
            }
        }
    }
}

/// Minimises `L + α·Σρ_u` over all joint schedules of `w` TTIs; ties go to
/// fewer site-TTI activations.
pub fn solve_gbr_central(
    network: &Network,
    demands: &DemandSet,
    w: usize,
    alpha: f64,
    mode: PenaltyMode,
    limits: &OracleLimits,
) -> Result<CentralGbrSolution> {
    let users: Vec<Vec<UserId>> = network.bs_ids().map(|b| network.gbr_users(b).to_vec()).collect();
    let max_users = users.iter().map(Vec::len).max().unwrap_or(0);
    limits.check(network.n_bs(), max_users, w)?;
    let (flat, index) = user_index(&users);
    let configs = configs(network, &users, &index);
    let best_rate = flat
        .iter()
        .map(|u| {
            let b = network.serving_bs(*u).expect("user of this network");
            network.rate(*u, b, BsSet::EMPTY)
        })
        .collect();
    let mut search = GbrSearch {
        configs: &configs,
        demands: flat.iter().map(|u| demands.get(*u)).collect(),
        alpha,
        mode,
        best_rate,
        horizon: w,
        best: None,
    };
    search.rec(0, &mut Vec::new(), &mut vec![0.0; flat.len()], 0);
    let (objective, _, picks) = search.best.expect("the empty schedule is always evaluated");
    let chosen: Vec<&Config> = picks.iter().map(|c| &configs[*c]).collect();
    let profile = profile_from(network.n_bs(), w, &chosen);

    let mut served = vec![0.0; flat.len()];
    let mut assignment = Vec::new();
    for (t, c) in chosen.iter().enumerate() {
        for (u, r) in &c.gains {
            served[*u] += r;
            assignment.push((flat[*u], t, *r));
        }
    }
    let penalties = flat
        .iter()
        .enumerate()
        .map(|(i, u)| (*u, penalty_of(mode, demands.get(*u), served[i])))
        .collect();
    Ok(CentralGbrSolution {
        l: chosen.len(),
        used_ttis: (0..w).map(|t| t < chosen.len()).collect(),
        bs_activity: profile.actions().iter().map(|a| (0..w).map(|t| a.is_active(t)).collect()).collect(),
        assignment,
        penalties,
        objective,
        profile,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralBeSolution {
    pub profile: ActionProfile,
    pub assignment: Vec<(UserId, usize, f64)>,
    pub per_user_volume: BTreeMap<UserId, f64>,
    /// `Σ_i min_u volume`.
    pub utility: f64,
}

struct BeSearch<'a> {
    configs: &'a [Config],
    /// Flat user indices per site.
    sites: Vec<Vec<usize>>,
    best_rate: Vec<f64>,
    horizon: usize,
    best: Option<(f64, Vec<usize>)>,
}

impl BeSearch<'_> {
    fn utility(&self, vol: &[f64]) -> f64 {
        self.sites
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.iter().map(|u| vol[*u]).fold(f64::INFINITY, f64::min))
            .sum()
    }

    fn rec(&mut self, start: usize, picks: &mut Vec<usize>, vol: &mut Vec<f64>) {
        if picks.len() == self.horizon {
            let u = self.utility(vol);
            if self.best.as_ref().is_none_or(|(b, _)| u > b + PENALTY_EPS * b.abs().max(1.0)) {
                self.best = Some((u, picks.clone()));
            }
            return;
        }
        let rem = (self.horizon - picks.len()) as f64;
        let ub: f64 = self
            .sites
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.iter().map(|u| vol[*u] + rem * self.best_rate[*u]).fold(f64::INFINITY, f64::min))
            .sum();
        if let Some((b, _)) = &self.best {
            if ub <= b + PENALTY_EPS * b.abs().max(1.0) {
                return;
            }
        }
        for c in start..self.configs.len() {
            for (u, r) in &self.configs[c].gains {
                vol[*u] += r;
            }
            picks.push(c);
            self.rec(c, picks, vol);
            picks.pop();
            for (u, r) in &self.configs[c].gains {
                vol[*u] -= r;
            }
        }
    }
}

/// Maximises `Σ_i min_u volume` over all joint best-effort schedules of `z` TTIs.
pub fn solve_be_central(network: &Network, z: usize, limits: &OracleLimits) -> Result<CentralBeSolution> {
    let users: Vec<Vec<UserId>> = network.bs_ids().map(|b| network.be_users(b).to_vec()).collect();
    let max_users = users.iter().map(Vec::len).max().unwrap_or(0);
    limits.check(network.n_bs(), max_users, z)?;
    let (flat, index) = user_index(&users);
    let mut configs = configs(network, &users, &index);
    // the all-blank TTI pads schedules that leave TTIs unused
    configs.push(Config { choice: vec![None; network.n_bs()], gains: Vec::new(), active: 0 });
    let sites = users.iter().map(|us| us.iter().map(|u| index[u]).collect()).collect();
    let best_rate = flat
        .iter()
        .map(|u| network.rate(*u, network.serving_bs(*u).expect("user of this network"), BsSet::EMPTY))
        .collect();
    let mut search = BeSearch { configs: &configs, sites, best_rate, horizon: z, best: None };
    search.rec(0, &mut Vec::new(), &mut vec![0.0; flat.len()]);
    let (utility, picks) = search.best.unwrap_or((0.0, Vec::new()));
    let chosen: Vec<&Config> = picks.iter().map(|c| &configs[*c]).collect();
    let profile = profile_from(network.n_bs(), z, &chosen);
    let mut per_user_volume: BTreeMap<UserId, f64> = flat.iter().map(|u| (*u, 0.0)).collect();
    let mut assignment = Vec::new();
    for (t, c) in chosen.iter().enumerate() {
        for (u, r) in &c.gains {
            *per_user_volume.get_mut(&flat[*u]).expect("known user") += r;
            assignment.push((flat[*u], t, *r));
        }
    }
    Ok(CentralBeSolution { profile, assignment, per_user_volume, utility })
}

/// Local problem handed to [`brute_force_local`].
#[derive(Debug, Clone, Copy)]
pub enum LocalProblem<'a> {
    GbrBr(&'a LocalGbrProblem),
    BeMaxmin(&'a LocalBeProblem),
}

/// Largest local instance [`brute_force_local`] accepts: users, TTIs.
pub const BRUTE_FORCE_LIMIT: (usize, usize) = (3, 5);

fn all_slots(users: usize, horizon: usize) -> Vec<Slots> {
    let mut out: Vec<Slots> = vec![Vec::new()];
    for _ in 0..horizon {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..=users).map(move |c| {
                    let mut s = s.clone();
                    s.push((c < users).then_some(c));
                    s
                })
            })
            .collect();
    }
    out
}

/// Optimal local action by enumerating every valid one.
pub fn brute_force_local(problem: LocalProblem) -> Result<Slots> {
    let (users, horizon) = match problem {
        LocalProblem::GbrBr(p) => (p.n_users(), p.horizon()),
        LocalProblem::BeMaxmin(p) => (p.n_users(), p.horizon()),
    };
    if users > BRUTE_FORCE_LIMIT.0 || horizon > BRUTE_FORCE_LIMIT.1 {
        return Err(DmsError::Capacity {
            what: format!("{users} users x {horizon} TTIs"),
            limit: format!("{} users x {} TTIs", BRUTE_FORCE_LIMIT.0, BRUTE_FORCE_LIMIT.1),
        });
    }
    let all = all_slots(users, horizon);
    let best = match problem {
        LocalProblem::GbrBr(p) => {
            let mut best: Option<(f64, Slots)> = None;
            for s in all {
                let c = p.cost(&s);
                let tol = PENALTY_EPS * c.abs().max(1.0);
                if best.as_ref().is_none_or(|(bc, _)| c < bc - tol) {
                    best = Some((c, s));
                }
            }
            best.map(|b| b.1)
        }
        LocalProblem::BeMaxmin(p) => {
            let mut best: Option<Slots> = None;
            for s in all.into_iter().filter(|s| p.is_valid(s)) {
                let better = best
                    .as_ref()
                    .is_none_or(|b| compare_maxmin(&p.volumes(&s), &p.volumes(b)) == std::cmp::Ordering::Greater);
                if better {
                    best = Some(s);
                }
            }
            best
        }
    };
    Ok(best.unwrap_or_else(|| vec![None; horizon]))
}

/// Re-checks a central guaranteed-rate solution against the problem
/// constraints, independently of the solver.
pub fn validate_gbr_solution(
    network: &Network,
    demands: &DemandSet,
    w: usize,
    alpha: f64,
    mode: PenaltyMode,
    sol: &CentralGbrSolution,
) -> Result<()> {
    let p = &sol.profile;
    if p.n_bs() != network.n_bs() || p.horizon() != w {
        return config("solution shape does not match the instance");
    }
    for b in network.bs_ids() {
        p.get(b).validate_users(network.gbr_users(b))?;
        for t in 0..w {
            if p.get(b).is_active(t) != sol.bs_activity[b.0][t] {
                return config(format!("activity of {b} at TTI {t} disagrees with the schedule"));
            }
            if sol.bs_activity[b.0][t] && !sol.used_ttis[t] {
                return config(format!("{b} transmits in unused TTI {t}"));
            }
        }
    }
    let last_used = (0..w).rev().find(|t| sol.used_ttis[*t]).map_or(0, |t| t + 1);
    if last_used != sol.l {
        return config(format!("L = {} but the last used TTI is {last_used}", sol.l));
    }
    let served = network.realized_volume(p);
    let mut pen = 0.0;
    for (u, claimed) in &sol.penalties {
        let actual = penalty_of(mode, demands.get(*u), served.get(u).copied().unwrap_or(0.0));
        if (actual - claimed).abs() > 1e-9 * actual.abs().max(1.0) {
            return config(format!("penalty of {u} is {actual}, claimed {claimed}"));
        }
        pen += actual;
    }
    let obj = sol.l as f64 + alpha * pen;
    if (obj - sol.objective).abs() > 1e-9 * obj.abs().max(1.0) {
        return config(format!("objective is {obj}, claimed {}", sol.objective));
    }
    Ok(())
}

/// Re-checks a central best-effort solution.
pub fn validate_be_solution(network: &Network, z: usize, sol: &CentralBeSolution) -> Result<()> {
    let p = &sol.profile;
    if p.n_bs() != network.n_bs() || p.horizon() != z {
        return config("solution shape does not match the instance");
    }
    for b in network.bs_ids() {
        p.get(b).validate_users(network.be_users(b))?;
    }
    let served = network.realized_volume(p);
    let utility: f64 = network
        .bs_ids()
        .filter(|b| !network.be_users(*b).is_empty())
        .map(|b| {
            network
                .be_users(b)
                .iter()
                .map(|u| served.get(u).copied().unwrap_or(0.0))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    if (utility - sol.utility).abs() > 1e-9 * utility.abs().max(1.0) {
        return config(format!("utility is {utility}, claimed {}", sol.utility));
    }
    Ok(())
}
