//! Cell layout shared by the games: which users each site serves and how
//! rates are obtained.

use std::sync::Arc;

use crate::error::{config, Result};
use crate::ids::{BsId, BsSet, UserId, MAX_BS};
use crate::radio::{RateModel, TableRates, Topology};
use crate::schedule::{Action, ActionProfile, DemandSet};

/// Sites, their guaranteed-rate and best-effort users, and the rate model.
#[derive(Clone)]
pub struct Network {
    n_bs: usize,
    gbr_users: Vec<Vec<UserId>>,
    be_users: Vec<Vec<UserId>>,
    rates: Arc<dyn RateModel>,
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("n_bs", &self.n_bs)
            .field("gbr_users", &self.gbr_users)
            .field("be_users", &self.be_users)
            .finish_non_exhaustive()
    }
}

impl Network {
    pub fn new(gbr_users: Vec<Vec<UserId>>, be_users: Vec<Vec<UserId>>, rates: Arc<dyn RateModel>) -> Result<Self> {
        let n_bs = gbr_users.len();
        if n_bs == 0 || n_bs > MAX_BS {
            return config(format!("network must have 1..={MAX_BS} sites"));
        }
        if be_users.len() != n_bs {
            return config("gbr_users and be_users must list the same sites");
        }
        let mut all: Vec<UserId> = gbr_users.iter().chain(be_users.iter()).flatten().copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != n {
            return config("a user is listed twice");
        }
        let sorted = |v: Vec<Vec<UserId>>| {
            v.into_iter()
                .map(|mut u| {
                    u.sort_unstable();
                    u
                })
                .collect()
        };
        Ok(Network { n_bs, gbr_users: sorted(gbr_users), be_users: sorted(be_users), rates })
    }

    /// Split each site's users in `topology`: the first `gbr_per_bs` become
    /// guaranteed-rate users, the rest best-effort users.
    pub fn from_topology(topology: &Topology, gbr_per_bs: usize, rates: Arc<dyn RateModel>) -> Result<Self> {
        let mut gbr = Vec::new();
        let mut be = Vec::new();
        for k in 0..topology.n_bs() {
            let users = topology.users_of(BsId(k));
            let split = gbr_per_bs.min(users.len());
            gbr.push(users[..split].to_vec());
            be.push(users[split..].to_vec());
        }
        Network::new(gbr, be, rates)
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn bs_ids(&self) -> impl Iterator<Item = BsId> {
        (0..self.n_bs).map(BsId)
    }

    pub fn gbr_users(&self, bs: BsId) -> &[UserId] {
        &self.gbr_users[bs.0]
    }

    pub fn be_users(&self, bs: BsId) -> &[UserId] {
        &self.be_users[bs.0]
    }

    pub fn n_gbr_users(&self) -> usize {
        self.gbr_users.iter().map(Vec::len).sum()
    }

    pub fn n_be_users(&self) -> usize {
        self.be_users.iter().map(Vec::len).sum()
    }

    pub fn rates(&self) -> &dyn RateModel {
        self.rates.as_ref()
    }

    pub fn rates_arc(&self) -> Arc<dyn RateModel> {
        Arc::clone(&self.rates)
    }

    /// Same user layout with a different rate model.
    pub fn with_rates(&self, rates: Arc<dyn RateModel>) -> Network {
        Network { rates, ..self.clone() }
    }

    /// Serving site of `user`, if it belongs to this network.
    pub fn serving_bs(&self, user: UserId) -> Option<BsId> {
        self.bs_ids()
            .find(|b| self.gbr_users[b.0].contains(&user) || self.be_users[b.0].contains(&user))
    }

    /// Bits per TTI for `user` at its serving site given the sites active in that TTI.
    pub fn rate(&self, user: UserId, serving: BsId, active: BsSet) -> f64 {
        self.rates.rate(user, serving, active.with(serving))
    }

    /// Volume each scheduled user receives under `profile`, with interference
    /// taken from the profile itself.
    pub fn realized_volume(&self, profile: &ActionProfile) -> std::collections::BTreeMap<UserId, f64> {
        let mut vol = std::collections::BTreeMap::new();
        let active: Vec<BsSet> = (0..profile.horizon()).map(|t| profile.active_at(t)).collect();
        for a in profile.actions() {
            for (u, t) in a.pairs() {
                *vol.entry(u).or_insert(0.0) += self.rate(u, a.owner(), active[t]);
            }
        }
        vol
    }
}

/// Fixed-point tolerance used when deciding whether a penalty is zero.
pub const PENALTY_EPS: f64 = 1e-9;

/// The three-site, two-TTI oscillation example: one user per site, demand 5
/// units, and per-TTI rates 5.55 alone, 5.11 next to the following site,
/// 2.73 next to the one after, 2.51 with both (indices cyclic).
pub mod table_one {
    use super::*;

    pub const RATE_ALONE: f64 = 5.55;
    pub const RATE_WITH_NEXT: f64 = 5.11;
    pub const RATE_WITH_SECOND: f64 = 2.73;
    pub const RATE_ALL: f64 = 2.51;
    pub const DEMAND: f64 = 5.0;
    pub const ALPHA: f64 = 1000.0;
    pub const FIXED_PENALTY: f64 = 0.1;
    pub const HORIZON: usize = 2;

    pub fn rates() -> TableRates {
        let mut t = TableRates::new();
        for i in 0..3 {
            let next = BsId((i + 1) % 3);
            let second = BsId((i + 2) % 3);
            let u = UserId(i);
            t.insert(u, BsSet::EMPTY, RATE_ALONE);
            t.insert(u, BsSet::single(next), RATE_WITH_NEXT);
            t.insert(u, BsSet::single(second), RATE_WITH_SECOND);
            t.insert(u, BsSet::single(next).with(second), RATE_ALL);
        }
        t
    }

    pub fn network() -> Network {
        Network::new(
            (0..3).map(|i| vec![UserId(i)]).collect(),
            vec![Vec::new(); 3],
            Arc::new(rates()),
        )
        .expect("fixture is valid")
    }

    pub fn demands() -> DemandSet {
        DemandSet::new((0..3).map(|i| (UserId(i), DEMAND)).collect()).expect("fixture is valid")
    }

    /// State just before the third site enters: site 0 in TTI 0, site 1 in TTI 1.
    pub fn initial_profile() -> ActionProfile {
        ActionProfile::new(vec![
            Action::from_pairs(BsId(0), HORIZON, [(UserId(0), 0)]).unwrap(),
            Action::from_pairs(BsId(1), HORIZON, [(UserId(1), 1)]).unwrap(),
            Action::empty(BsId(2), HORIZON),
        ])
        .expect("fixture is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_rates_are_cyclic() {
        let n = table_one::network();
        // u1 (index 0) next to site 2 (its "i+2") gets 2.73
        assert_eq!(n.rate(UserId(0), BsId(0), BsSet::single(BsId(2))), 2.73);
        assert_eq!(n.rate(UserId(0), BsId(0), BsSet::single(BsId(1))), 5.11);
        assert_eq!(n.rate(UserId(2), BsId(2), BsSet::single(BsId(0))), 5.11);
        assert_eq!(n.rate(UserId(1), BsId(1), BsSet(0b111)), 2.51);
        assert_eq!(n.rate(UserId(1), BsId(1), BsSet::EMPTY), 5.55);
    }

    #[test]
    fn rejects_duplicate_users() {
        let r: Arc<dyn RateModel> = Arc::new(TableRates::new());
        assert!(Network::new(vec![vec![UserId(0)], vec![UserId(0)]], vec![vec![], vec![]], r.clone()).is_err());
        assert!(Network::new(vec![vec![UserId(0)]], vec![], r).is_err());
    }

    #[test]
    fn realized_volume_uses_profile_activity() {
        let n = table_one::network();
        let mut p = table_one::initial_profile();
        p.set(Action::from_pairs(BsId(2), 2, [(UserId(2), 0)]).unwrap());
        let v = n.realized_volume(&p);
        assert_eq!(v[&UserId(0)], 2.73);
        assert_eq!(v[&UserId(1)], 5.55);
        assert_eq!(v[&UserId(2)], 5.11);
    }
}
