//! Local best-effort problem: max-min volume over a site's users using at
//! most `M_i` of the `Z` best-effort TTIs.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{config, DmsError, Result};
use crate::gbr_local::{SolverMode, Slots};
use crate::ids::{BsId, BsSet, UserId};
use crate::network::{Network, PENALTY_EPS};
use crate::schedule::{interferers_from_patterns, tie_order, AbsfPattern, Action};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeConfig {
    pub mode: SolverMode,
    pub exact_max_users: usize,
    pub exact_max_ttis: usize,
}

impl Default for BeConfig {
    fn default() -> Self {
        BeConfig { mode: SolverMode::Auto, exact_max_users: 3, exact_max_ttis: 6 }
    }
}

impl BeConfig {
    pub fn exact() -> Self {
        BeConfig { mode: SolverMode::Exact, ..Default::default() }
    }

    pub fn heuristic() -> Self {
        BeConfig { mode: SolverMode::Heuristic, ..Default::default() }
    }
}

#[derive(Clone)]
pub struct BeLocalInput<'a> {
    pub owner: BsId,
    pub users: Vec<UserId>,
    /// Other sites transmitting in each best-effort TTI.
    pub interferers: Vec<BsSet>,
    pub tti_bound: usize,
    pub network: &'a Network,
}

impl<'a> BeLocalInput<'a> {
    pub fn new(network: &'a Network, owner: BsId, neighbor_patterns: &[AbsfPattern], horizon: usize, tti_bound: usize) -> Self {
        BeLocalInput {
            owner,
            users: network.be_users(owner).to_vec(),
            interferers: interferers_from_patterns(owner, neighbor_patterns, horizon),
            tti_bound,
            network,
        }
    }

    pub fn horizon(&self) -> usize {
        self.interferers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return config(format!("{} has no best-effort users", self.owner));
        }
        if self.horizon() == 0 {
            return config("best-effort horizon must be at least one TTI");
        }
        if self.tti_bound < 1 || self.tti_bound > self.horizon() {
            return config(format!("TTI bound {} outside 1..={}", self.tti_bound, self.horizon()));
        }
        Ok(())
    }

    pub fn problem(&self) -> LocalBeProblem {
        LocalBeProblem {
            rates: self
                .users
                .iter()
                .map(|u| self.interferers.iter().map(|i| self.network.rate(*u, self.owner, *i)).collect())
                .collect(),
            tti_bound: self.tti_bound,
        }
    }

    pub fn to_local(&self, action: &Action) -> Slots {
        action
            .slots()
            .iter()
            .map(|s| s.and_then(|u| self.users.iter().position(|v| *v == u)))
            .collect()
    }

    pub fn solution(&self, problem: &LocalBeProblem, slots: &Slots) -> BeLocalSolution {
        let vol = problem.volumes(slots);
        let per_user_volume: BTreeMap<UserId, f64> = self.users.iter().copied().zip(vol.iter().copied()).collect();
        BeLocalSolution {
            action: Action::from_slots(self.owner, slots.iter().map(|s| s.map(|i| self.users[i])).collect()),
            min_volume: vol.iter().copied().fold(f64::INFINITY, f64::min),
            eta_i: eta(&vol),
            per_user_volume,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeLocalSolution {
    pub action: Action,
    pub per_user_volume: BTreeMap<UserId, f64>,
    pub min_volume: f64,
    pub eta_i: f64,
}

/// Mean volume per user; 0 for an empty slice.
pub fn eta(volumes: &[f64]) -> f64 {
    if volumes.is_empty() {
        0.0
    } else {
        volumes.iter().sum::<f64>() / volumes.len() as f64
    }
}

fn approx_cmp(a: f64, b: f64) -> Ordering {
    let tol = PENALTY_EPS * a.abs().max(b.abs()).max(1.0);
    if a < b - tol {
        Ordering::Less
    } else if a > b + tol {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

/// Lexicographic comparison of ascending-sorted volume vectors.
pub fn compare_maxmin(a: &[f64], b: &[f64]) -> Ordering {
    let sort = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (sa, sb) = (sort(a), sort(b));
    sa.iter()
        .zip(&sb)
        .map(|(x, y)| approx_cmp(*x, *y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Numeric form with per-user, per-TTI rates.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBeProblem {
    pub rates: Vec<Vec<f64>>,
    pub tti_bound: usize,
}

impl LocalBeProblem {
    pub fn n_users(&self) -> usize {
        self.rates.len()
    }

    pub fn horizon(&self) -> usize {
        self.rates.first().map_or(0, Vec::len)
    }

    pub fn volumes(&self, slots: &Slots) -> Vec<f64> {
        let mut v = vec![0.0; self.n_users()];
        for (t, s) in slots.iter().enumerate() {
            if let Some(i) = s {
                v[*i] += self.rates[*i][t];
            }
        }
        v
    }

    pub fn is_valid(&self, slots: &Slots) -> bool {
        slots.len() == self.horizon()
            && slots.iter().flatten().all(|i| *i < self.n_users())
            && slots.iter().filter(|s| s.is_some()).count() <= self.tti_bound
    }

    /// `a` strictly better than `b`: higher max-min vector, then fewer TTIs,
    /// then earlier in the global pair order.
    pub fn better(&self, a: &Slots, b: &Slots) -> bool {
        match compare_maxmin(&self.volumes(a), &self.volumes(b)) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                let (na, nb) = (a.iter().flatten().count(), b.iter().flatten().count());
                na < nb || (na == nb && slots_order(a, b) == Ordering::Less)
            }
        }
    }

    fn pick(&self, candidates: impl IntoIterator<Item = Slots>) -> Slots {
        let mut best: Option<Slots> = None;
        for c in candidates {
            if best.as_ref().is_none_or(|b| self.better(&c, b)) {
                best = Some(c);
            }
        }
        best.unwrap_or_else(|| vec![None; self.horizon()])
    }

    /// Smallest-volume user takes its best remaining TTI, until the bound is
    /// reached or nobody can gain.
    pub fn greedy(&self) -> Slots {
        let horizon = self.horizon();
        let mut slots: Slots = vec![None; horizon];
        let mut vol: Vec<f64> = vec![0.0; self.n_users()];
        let mut stuck = vec![false; self.n_users()];
        let mut used = 0;
        while used < self.tti_bound {
            let Some(i) = (0..self.n_users())
                .filter(|i| !stuck[*i])
                .min_by(|a, b| vol[*a].total_cmp(&vol[*b]).then(a.cmp(b)))
            else {
                break;
            };
            let best_t = (0..horizon)
                .filter(|t| slots[*t].is_none() && self.rates[i][*t] > 0.0)
                .max_by(|a, b| self.rates[i][*a].total_cmp(&self.rates[i][*b]).then(b.cmp(a)));
            match best_t {
                Some(t) => {
                    slots[t] = Some(i);
                    vol[i] += self.rates[i][t];
                    used += 1;
                }
                None => stuck[i] = true,
            }
        }
        slots
    }

    /// First `M_i` TTIs, users served in turn.
    pub fn round_robin(&self) -> Slots {
        let mut slots: Slots = vec![None; self.horizon()];
        if self.n_users() > 0 {
            for (k, s) in slots.iter_mut().take(self.tti_bound).enumerate() {
                *s = Some(k % self.n_users());
            }
        }
        slots
    }

    pub fn heuristic_best(&self, current: Option<&Slots>) -> Slots {
        let mut c = vec![self.greedy(), self.round_robin()];
        if let Some(cur) = current.filter(|s| self.is_valid(s)) {
            c.insert(0, cur.clone());
        }
        self.pick(c)
    }

    /// Exhaustive search with an optimistic bound on the minimum volume.
    pub fn exact_best(&self, incumbent: Option<Slots>) -> Slots {
        let horizon = self.horizon();
        let mut best = self.pick(incumbent.into_iter().chain([self.greedy(), self.round_robin()]));
        let mut slots = vec![None; horizon];
        let mut vol = vec![0.0; self.n_users()];
        self.rec(0, 0, &mut slots, &mut vol, &mut best);
        best
    }

    fn rec(&self, t: usize, used: usize, slots: &mut Slots, vol: &mut Vec<f64>, best: &mut Slots) {
        if t == self.horizon() {
            if self.better(slots, best) {
                *best = slots.clone();
            }
            return;
        }
        let budget = self.tti_bound - used;
        // optimistic min: each user alone gets its best `budget` remaining TTIs
        let opt_min = (0..self.n_users())
            .map(|i| {
                let mut r: Vec<f64> = self.rates[i][t..].to_vec();
                r.sort_by(|a, b| b.total_cmp(a));
                vol[i] + r.iter().take(budget).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        let best_min = self.volumes(best).into_iter().fold(f64::INFINITY, f64::min);
        if approx_cmp(opt_min, best_min) == Ordering::Less {
            return;
        }
        if budget > 0 {
            for i in 0..self.n_users() {
                slots[t] = Some(i);
                vol[i] += self.rates[i][t];
                self.rec(t + 1, used + 1, slots, vol, best);
                vol[i] -= self.rates[i][t];
            }
        }
        slots[t] = None;
        self.rec(t + 1, used, slots, vol, best);
    }
}

fn slots_order(a: &Slots, b: &Slots) -> Ordering {
    let act = |s: &Slots| Action::from_slots(BsId(0), s.iter().map(|u| u.map(UserId)).collect());
    tie_order(&act(a), &act(b))
}

/// Max-min schedule for `input`.
pub fn be_maxmin(input: &BeLocalInput, cfg: &BeConfig) -> Result<BeLocalSolution> {
    be_maxmin_from(input, None, cfg)
}

/// Max-min schedule; a valid `current` action is kept unless strictly beaten.
pub fn be_maxmin_from(input: &BeLocalInput, current: Option<&Action>, cfg: &BeConfig) -> Result<BeLocalSolution> {
    input.validate()?;
    let within = input.users.len() <= cfg.exact_max_users && input.horizon() <= cfg.exact_max_ttis;
    let exact = match cfg.mode {
        SolverMode::Heuristic => false,
        SolverMode::Auto => within,
        SolverMode::Exact if within => true,
        SolverMode::Exact => {
            return Err(DmsError::Capacity {
                what: format!("{} users x {} TTIs", input.users.len(), input.horizon()),
                limit: format!("{} users x {} TTIs", cfg.exact_max_users, cfg.exact_max_ttis),
            })
        }
    };
    let problem = input.problem();
    let cur = current.map(|a| input.to_local(a)).filter(|s| problem.is_valid(s));
    let mut slots = if exact { problem.exact_best(cur.clone()) } else { problem.heuristic_best(cur.as_ref()) };
    if let Some(c) = cur {
        if compare_maxmin(&problem.volumes(&slots), &problem.volumes(&c)) != Ordering::Greater {
            slots = c;
        }
    }
    Ok(input.solution(&problem, &slots))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(rates: Vec<Vec<f64>>, m: usize) -> LocalBeProblem {
        LocalBeProblem { rates, tti_bound: m }
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(&[4.0, 6.0]), 5.0);
        assert_eq!(eta(&[0.0, 0.0]), 0.0);
        assert_eq!(eta(&[1.0, 2.0, 3.0, 4.0]), 2.5);
    }

    #[test]
    fn single_user_takes_all() {
        let q = p(vec![vec![7.0; 4]], 4);
        let s = q.exact_best(None);
        assert_eq!(q.volumes(&s), vec![28.0]);
        assert_eq!(q.volumes(&q.greedy()), vec![28.0]);
    }

    #[test]
    fn symmetric_pair_split() {
        let q = p(vec![vec![3.0; 3], vec![3.0; 3]], 2);
        let s = q.exact_best(None);
        assert_eq!(q.volumes(&s), vec![3.0, 3.0]);
        assert_eq!(q.volumes(&q.greedy()), vec![3.0, 3.0]);
    }

    #[test]
    fn greedy_beats_or_ties_round_robin() {
        let q = p(vec![vec![1.0, 5.0, 2.0], vec![4.0, 0.5, 3.0]], 2);
        let h = q.heuristic_best(None);
        assert_ne!(compare_maxmin(&q.volumes(&h), &q.volumes(&q.round_robin())), Ordering::Less);
        assert!(q.is_valid(&h));
    }

    #[test]
    fn zero_rate_user_does_not_block() {
        let q = p(vec![vec![0.0, 0.0], vec![2.0, 2.0]], 2);
        let s = q.greedy();
        assert_eq!(q.volumes(&s), vec![0.0, 4.0]);
        assert_eq!(q.volumes(&q.exact_best(None)), vec![0.0, 4.0]);
    }

    #[test]
    fn bound_errors() {
        let net = crate::network::table_one::network();
        let n = Network::new(vec![vec![]; 3], (0..3).map(|i| vec![UserId(i)]).collect(), net.rates_arc()).unwrap();
        let mut input = BeLocalInput::new(&n, BsId(0), &[], 2, 0);
        assert!(be_maxmin(&input, &BeConfig::default()).is_err());
        input.tti_bound = 3;
        assert!(be_maxmin(&input, &BeConfig::default()).is_err());
        input.tti_bound = 2;
        let s = be_maxmin(&input, &BeConfig::exact()).unwrap();
        assert_eq!(s.min_volume, 2.0 * 5.55);
    }
}
