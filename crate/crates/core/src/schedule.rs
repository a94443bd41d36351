//! Scheduling value types shared by both games.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::ids::{BsId, BsSet, UserId};

/// A base station's schedule: at most one user per TTI over `horizon` TTIs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ActionRepr", into = "ActionRepr")]
pub struct Action {
    owner: BsId,
    slots: Vec<Option<UserId>>,
}

#[derive(Serialize, Deserialize)]
struct ActionRepr {
    owner: BsId,
    horizon: usize,
    pairs: Vec<(UserId, usize)>,
}

impl TryFrom<ActionRepr> for Action {
    type Error = crate::error::DmsError;

    fn try_from(r: ActionRepr) -> Result<Self> {
        Action::from_pairs(r.owner, r.horizon, r.pairs)
    }
}

impl From<Action> for ActionRepr {
    fn from(a: Action) -> Self {
        ActionRepr { owner: a.owner, horizon: a.horizon(), pairs: a.pairs().collect() }
    }
}

impl Action {
    pub fn empty(owner: BsId, horizon: usize) -> Self {
        Action { owner, slots: vec![None; horizon] }
    }

    pub fn from_slots(owner: BsId, slots: Vec<Option<UserId>>) -> Self {
        Action { owner, slots }
    }

    /// Build from `(user, tti)` pairs; rejects out-of-range TTIs and two users
    /// in one TTI.
    pub fn from_pairs(owner: BsId, horizon: usize, pairs: impl IntoIterator<Item = (UserId, usize)>) -> Result<Self> {
        let mut a = Action::empty(owner, horizon);
        for (u, t) in pairs {
            if t >= horizon {
                return config(format!("pair ({u}, {t}) outside horizon {horizon}"));
            }
            match a.slots[t] {
                Some(v) if v != u => return config(format!("TTI {t} holds both {v} and {u}")),
                _ => a.slots[t] = Some(u),
            }
        }
        Ok(a)
    }

    pub fn owner(&self) -> BsId {
        self.owner
    }

    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Option<UserId>] {
        &self.slots
    }

    pub fn user_at(&self, t: usize) -> Option<UserId> {
        self.slots.get(t).copied().flatten()
    }

    pub fn set(&mut self, t: usize, user: Option<UserId>) {
        self.slots[t] = user;
    }

    /// `(user, tti)` pairs in ascending TTI order.
    pub fn pairs(&self) -> impl Iterator<Item = (UserId, usize)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(t, u)| u.map(|u| (u, t)))
    }

    /// Number of scheduled pairs, `|S_i|`.
    pub fn len(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_active(&self, t: usize) -> bool {
        self.user_at(t).is_some()
    }

    /// `|self \ other|` as pair sets.
    pub fn count_not_in(&self, other: &Action) -> usize {
        self.slots
            .iter()
            .enumerate()
            .filter(|(t, u)| u.is_some() && other.user_at(*t) != **u)
            .count()
    }

    /// Copy resized to `horizon`: pairs beyond it are dropped, new TTIs blank.
    pub fn resized(&self, horizon: usize) -> Action {
        let mut slots = self.slots.clone();
        slots.resize(horizon, None);
        Action { owner: self.owner, slots }
    }

    /// Pairs sorted by `(user, tti)`, used for deterministic tie-breaking.
    pub fn sorted_pairs(&self) -> Vec<(UserId, usize)> {
        let mut p: Vec<_> = self.pairs().collect();
        p.sort_unstable();
        p
    }

    /// Every scheduled user belongs to `users`.
    pub fn validate_users(&self, users: &[UserId]) -> Result<()> {
        match self.pairs().find(|(u, _)| !users.contains(u)) {
            Some((u, t)) => config(format!("{u} at TTI {t} is not served by {}", self.owner)),
            None => Ok(()),
        }
    }
}

/// Deterministic preference among equal-cost actions: fewer pairs first, then
/// the lexicographically smallest sorted `(user, tti)` list.
pub fn tie_order(a: &Action, b: &Action) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.sorted_pairs().cmp(&b.sorted_pairs()))
}

/// Activity bitmap of one base station: bit `t` set iff it transmits in TTI `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbsfPattern {
    pub owner: BsId,
    pub bits: Vec<bool>,
}

impl AbsfPattern {
    pub fn blank(owner: BsId, horizon: usize) -> Self {
        AbsfPattern { owner, bits: vec![false; horizon] }
    }

    pub fn full(owner: BsId, horizon: usize) -> Self {
        AbsfPattern { owner, bits: vec![true; horizon] }
    }

    pub fn horizon(&self) -> usize {
        self.bits.len()
    }

    pub fn is_set(&self, t: usize) -> bool {
        self.bits.get(t).copied().unwrap_or(false)
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Hex string, TTI 0 in the most significant bit of the first byte.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self
            .bits
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, b)| if *b { acc | (0x80 >> i) } else { acc })
            })
            .collect();
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(owner: BsId, horizon: usize, hex: &str) -> Result<Self> {
        if hex.len() != horizon.div_ceil(8) * 2 {
            return config(format!("pattern hex '{hex}' does not match horizon {horizon}"));
        }
        let mut bits = Vec::with_capacity(horizon);
        for i in 0..hex.len() / 2 {
            let byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                .map_err(|e| crate::error::DmsError::Config(format!("pattern hex: {e}")))?;
            for j in 0..8 {
                if bits.len() < horizon {
                    bits.push(byte & (0x80 >> j) != 0);
                }
            }
        }
        Ok(AbsfPattern { owner, bits })
    }
}

pub fn pattern_from_action(a: &Action) -> AbsfPattern {
    AbsfPattern { owner: a.owner, bits: a.slots.iter().map(Option::is_some).collect() }
}

/// Single-step relation as a pair-set condition:
/// `|next \ prev| <= 1  or  |prev \ next| <= 1`.
pub fn is_single_step(prev: &Action, next: &Action) -> bool {
    next.count_not_in(prev) <= 1 || prev.count_not_in(next) <= 1
}

/// Guaranteed demand `D_u` in bits per horizon.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DemandSet {
    pub demand: BTreeMap<UserId, f64>,
}

impl DemandSet {
    pub fn new(demand: BTreeMap<UserId, f64>) -> Result<Self> {
        if let Some((u, d)) = demand.iter().find(|(_, d)| !(d.is_finite() && **d >= 0.0)) {
            return config(format!("demand of {u} must be finite and non-negative, got {d}"));
        }
        Ok(DemandSet { demand })
    }

    /// Same bit rate for every user: `D_u = rate_bps · W · T_slot`.
    pub fn uniform_rate(users: &[UserId], rate_bps: f64, horizon: usize, tti_s: f64) -> Result<Self> {
        let d = rate_bps * horizon as f64 * tti_s;
        DemandSet::new(users.iter().map(|u| (*u, d)).collect())
    }

    pub fn get(&self, u: UserId) -> f64 {
        self.demand.get(&u).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.demand.values().sum()
    }
}

/// One action per base station, indexed by `BsId`; all share one horizon.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionProfile {
    actions: Vec<Action>,
}

impl ActionProfile {
    pub fn empty(n_bs: usize, horizon: usize) -> Self {
        ActionProfile { actions: (0..n_bs).map(|k| Action::empty(BsId(k), horizon)).collect() }
    }

    pub fn new(actions: Vec<Action>) -> Result<Self> {
        if let Some(first) = actions.first() {
            let h = first.horizon();
            for (k, a) in actions.iter().enumerate() {
                if a.owner() != BsId(k) {
                    return config(format!("action {k} is owned by {}", a.owner()));
                }
                if a.horizon() != h {
                    return config("all actions of a profile must share one horizon");
                }
            }
        }
        Ok(ActionProfile { actions })
    }

    pub fn n_bs(&self) -> usize {
        self.actions.len()
    }

    pub fn horizon(&self) -> usize {
        self.actions.first().map_or(0, Action::horizon)
    }

    pub fn get(&self, bs: BsId) -> &Action {
        &self.actions[bs.0]
    }

    pub fn set(&mut self, action: Action) {
        let k = action.owner().0;
        self.actions[k] = action;
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn patterns(&self) -> Vec<AbsfPattern> {
        self.actions.iter().map(pattern_from_action).collect()
    }

    /// Sites transmitting in TTI `t`.
    pub fn active_at(&self, t: usize) -> BsSet {
        self.actions.iter().filter(|a| a.is_active(t)).map(Action::owner).collect()
    }

    pub fn resized(&self, horizon: usize) -> ActionProfile {
        ActionProfile { actions: self.actions.iter().map(|a| a.resized(horizon)).collect() }
    }

    /// Number of TTIs used by each site.
    pub fn usage(&self) -> Vec<usize> {
        self.actions.iter().map(Action::len).collect()
    }

    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

/// Interferer activity seen by `owner`: for each TTI, the other sites whose
/// pattern bit is set.
pub fn interferers_from_patterns(owner: BsId, patterns: &[AbsfPattern], horizon: usize) -> Vec<BsSet> {
    (0..horizon)
        .map(|t| {
            patterns
                .iter()
                .filter(|p| p.owner != owner && p.is_set(t))
                .map(|p| p.owner)
                .collect()
        })
        .collect()
}
