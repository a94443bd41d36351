//! The best-effort coordination game: sites take turns computing max-min
//! schedules under their TTI bounds until nothing changes or the deadline hits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::be_local::{be_maxmin_from, eta, BeConfig, BeLocalInput};
use crate::error::{config, Result};
use crate::game_gamma::QuietTracker;
use crate::ids::UserId;
use crate::network::Network;
use crate::schedule::{AbsfPattern, Action, ActionProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaConfig {
    /// Deadline in rounds; `None` means `|N|²`.
    pub deadline: Option<usize>,
    pub be: BeConfig,
    /// Warm start, resized to the game horizon.
    pub initial: Option<ActionProfile>,
    pub trace: bool,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        OmegaConfig { deadline: None, be: BeConfig::default(), initial: None, trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaRound {
    pub round: usize,
    pub profile: ActionProfile,
    pub per_bs_eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaResult {
    pub profile: ActionProfile,
    pub patterns: Vec<AbsfPattern>,
    pub per_bs_eta: Vec<f64>,
    /// Smallest user volume at each site.
    pub per_bs_min: Vec<f64>,
    pub per_user_volume: BTreeMap<UserId, f64>,
    pub rounds: usize,
    pub converged: bool,
    pub terminated_by_deadline: bool,
    pub trace: Vec<OmegaRound>,
}

impl OmegaResult {
    /// `Σ_i η_i`.
    pub fn eta_total(&self) -> f64 {
        self.per_bs_eta.iter().sum()
    }

    /// `Σ_i min_u volume`, the max-min utility.
    pub fn utility(&self) -> f64 {
        self.per_bs_min.iter().sum()
    }
}

/// Per-site mean and minimum volume of best-effort users under `profile`.
pub fn be_outcome(network: &Network, profile: &ActionProfile) -> (Vec<f64>, Vec<f64>, BTreeMap<UserId, f64>) {
    let realized = network.realized_volume(profile);
    let mut etas = Vec::new();
    let mut mins = Vec::new();
    let mut per_user = BTreeMap::new();
    for b in network.bs_ids() {
        let vols: Vec<f64> = network
            .be_users(b)
            .iter()
            .map(|u| {
                let v = realized.get(u).copied().unwrap_or(0.0);
                per_user.insert(*u, v);
                v
            })
            .collect();
        etas.push(eta(&vols));
        mins.push(if vols.is_empty() { 0.0 } else { vols.iter().copied().fold(f64::INFINITY, f64::min) });
    }
    (etas, mins, per_user)
}

fn validate(network: &Network, z: usize, m: &[usize]) -> Result<()> {
    if z == 0 {
        return config("best-effort horizon must be at least one TTI");
    }
    if m.len() != network.n_bs() {
        return config(format!("{} TTI bounds for {} sites", m.len(), network.n_bs()));
    }
    if let Some((i, v)) = m.iter().enumerate().find(|(_, v)| **v < 1 || **v > z) {
        return config(format!("TTI bound of bs{i} is {v}, outside 1..={z}"));
    }
    Ok(())
}

/// Play the game over `z` TTIs with per-site bounds `m`.
pub fn run_omega(network: &Network, z: usize, m: &[usize], cfg: &OmegaConfig) -> Result<OmegaResult> {
    validate(network, z, m)?;
    let n = network.n_bs();
    let deadline = cfg.deadline.unwrap_or(n * n).max(1);
    let mut profile = match &cfg.initial {
        Some(p) if p.n_bs() == n => p.resized(z),
        Some(_) => return config("initial profile does not match the network"),
        None => ActionProfile::empty(n, z),
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    let mut quiet = QuietTracker::new(n);
    while rounds < deadline && !converged {
        rounds += 1;
        for b in network.bs_ids() {
            let next = if network.be_users(b).is_empty() {
                Action::empty(b, z)
            } else {
                let input = BeLocalInput {
                    owner: b,
                    users: network.be_users(b).to_vec(),
                    interferers: (0..z).map(|t| profile.active_at(t).without(b)).collect(),
                    tti_bound: m[b.0],
                    network,
                };
                be_maxmin_from(&input, Some(profile.get(b)), &cfg.be)?.action
            };
            let changed = &next != profile.get(b);
            if changed {
                profile.set(next);
            }
            quiet.record(b, changed, true);
            if quiet.settled() {
                converged = true;
                break;
            }
        }
        if cfg.trace {
            trace.push(OmegaRound { round: rounds, profile: profile.clone(), per_bs_eta: be_outcome(network, &profile).0 });
        }
    }
    let (per_bs_eta, per_bs_min, per_user_volume) = be_outcome(network, &profile);
    Ok(OmegaResult {
        patterns: profile.patterns(),
        per_bs_eta,
        per_bs_min,
        per_user_volume,
        rounds,
        converged,
        terminated_by_deadline: !converged,
        trace,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{BsId, BsSet};
    use crate::radio::TableRates;
    use std::sync::Arc;

    fn isolated(n: usize) -> Network {
        let mut r = TableRates::new();
        for i in 0..n {
            // interference from any other site is negligible
            for mask in 0..(1u64 << n) {
                let s = BsSet(mask).without(BsId(i));
                r.insert(UserId(i), s, 4.0);
            }
        }
        Network::new(vec![vec![]; n], (0..n).map(|i| vec![UserId(i)]).collect(), Arc::new(r)).unwrap()
    }

    #[test]
    fn single_site_one_round() {
        let net = isolated(1);
        let r = run_omega(&net, 3, &[3], &OmegaConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.rounds, 1);
        assert_eq!(r.per_bs_eta, vec![12.0]);
    }

    #[test]
    fn independent_sites_converge_fast() {
        let net = isolated(2);
        let r = run_omega(&net, 4, &[4, 4], &OmegaConfig::default()).unwrap();
        assert!(r.converged && r.rounds <= 2);
        assert_eq!(r.per_bs_eta, vec![16.0, 16.0]);
        assert_eq!(r.utility(), 32.0);
    }

    #[test]
    fn rejects_bad_bounds() {
        let net = isolated(2);
        assert!(run_omega(&net, 4, &[0, 4], &OmegaConfig::default()).is_err());
        assert!(run_omega(&net, 4, &[5, 4], &OmegaConfig::default()).is_err());
        assert!(run_omega(&net, 4, &[4], &OmegaConfig::default()).is_err());
    }

    #[test]
    fn bound_respected() {
        let net = crate::network::table_one::network();
        let be = Network::new(vec![vec![]; 3], (0..3).map(|i| vec![UserId(i)]).collect(), net.rates_arc()).unwrap();
        let r = run_omega(&be, 4, &[2, 1, 3], &OmegaConfig { trace: true, ..Default::default() }).unwrap();
        for round in &r.trace {
            for (a, m) in round.profile.actions().iter().zip([2, 1, 3]) {
                assert!(a.len() <= m);
            }
        }
    }
}
