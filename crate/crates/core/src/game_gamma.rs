//! The guaranteed-rate game: sites take turns playing best responses to the
//! latest patterns of the others.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::gbr_local::{best_response_from, evaluate, ssbr, BrConfig, GbrLocalInput, PenaltyMode};
use crate::ids::{BsId, BsSet, UserId};
use crate::network::{Network, PENALTY_EPS};
use crate::schedule::{AbsfPattern, Action, ActionProfile, DemandSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Br,
    Ssbr,
}

/// Everything that stays fixed while the game is played.
#[derive(Debug, Clone, Copy)]
pub struct GammaScenario<'a> {
    pub network: &'a Network,
    pub demands: &'a DemandSet,
    pub alpha: f64,
    pub penalty_mode: PenaltyMode,
    pub br: BrConfig,
}

impl<'a> GammaScenario<'a> {
    /// Local problem of `bs` against the other sites' actions in `profile`.
    pub fn input(&self, profile: &ActionProfile, bs: BsId) -> GbrLocalInput<'a> {
        let users = self.network.gbr_users(bs).to_vec();
        let demands = users.iter().map(|u| self.demands.get(*u)).collect();
        GbrLocalInput {
            owner: bs,
            users,
            demands,
            interferers: (0..profile.horizon()).map(|t| profile.active_at(t).without(bs)).collect(),
            alpha: self.alpha,
            penalty_mode: self.penalty_mode,
            network: self.network,
        }
    }

    pub fn inputs(&self, profile: &ActionProfile) -> Vec<GbrLocalInput<'a>> {
        self.network.bs_ids().map(|b| self.input(profile, b)).collect()
    }

    pub fn costs(&self, profile: &ActionProfile) -> BTreeMap<BsId, f64> {
        self.network
            .bs_ids()
            .map(|b| (b, evaluate(profile.get(b), &self.input(profile, b)).cost))
            .collect()
    }

    pub fn penalties(&self, profile: &ActionProfile) -> BTreeMap<UserId, f64> {
        self.network
            .bs_ids()
            .flat_map(|b| evaluate(profile.get(b), &self.input(profile, b)).penalties)
            .collect()
    }

    /// Residual demand summed over users, independent of the penalty mode.
    pub fn unmet_demand(&self, profile: &ActionProfile) -> f64 {
        let served = self.network.realized_volume(profile);
        self.network
            .bs_ids()
            .flat_map(|b| self.network.gbr_users(b).iter().copied())
            .map(|u| {
                let d = self.demands.get(u);
                let r = d - served.get(&u).copied().unwrap_or(0.0);
                if r > PENALTY_EPS * d.max(1.0) {
                    r
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn check(&self, profile: &ActionProfile) -> Result<()> {
        if profile.n_bs() != self.network.n_bs() {
            return config(format!(
                "profile has {} sites, network has {}",
                profile.n_bs(),
                self.network.n_bs()
            ));
        }
        for b in self.network.bs_ids() {
            profile.get(b).validate_users(self.network.gbr_users(b))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaState {
    pub profile: ActionProfile,
    pub round: usize,
    pub strategy: Strategy,
    /// Profile fingerprint after each completed round.
    pub history: Vec<u64>,
    pub costs: BTreeMap<BsId, f64>,
}

impl GammaState {
    pub fn new(profile: ActionProfile, scenario: &GammaScenario) -> Result<Self> {
        scenario.check(&profile)?;
        let costs = scenario.costs(&profile);
        Ok(GammaState { profile, round: 0, strategy: Strategy::Br, history: Vec::new(), costs })
    }
}

/// One player's turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub round: usize,
    pub bs: BsId,
    pub strategy: Strategy,
    pub changed: bool,
    pub action: Action,
    /// Every site's cost right after the move.
    pub costs: BTreeMap<BsId, f64>,
}

/// Choose the mover's next action. A best response that is no cheaper than
/// the current action keeps the current action.
fn next_action(scenario: &GammaScenario, profile: &ActionProfile, bs: BsId, strategy: Strategy) -> Result<Action> {
    let input = scenario.input(profile, bs);
    let current = profile.get(bs);
    let candidate = match strategy {
        Strategy::Br => best_response_from(&input, Some(current), &scenario.br)?,
        Strategy::Ssbr => ssbr(current, &input, &scenario.br)?,
    };
    let cur_cost = evaluate(current, &input).cost;
    let tol = PENALTY_EPS * cur_cost.abs().max(1.0);
    if candidate.cost < cur_cost - tol {
        Ok(candidate.action)
    } else {
        Ok(current.clone())
    }
}

/// Detects a fixed point from the move sequence: every player has moved
/// without change since the last change. When responses are idempotent the
/// player that made that change need not move again.
#[derive(Debug, Clone)]
pub(crate) struct QuietTracker {
    n: usize,
    quiet: BsSet,
}

impl QuietTracker {
    pub(crate) fn new(n: usize) -> Self {
        QuietTracker { n, quiet: BsSet::EMPTY }
    }

    pub(crate) fn record(&mut self, bs: BsId, changed: bool, idempotent: bool) {
        if changed {
            self.quiet = if idempotent { BsSet::single(bs) } else { BsSet::EMPTY };
        } else {
            self.quiet = self.quiet.with(bs);
        }
    }

    pub(crate) fn settled(&self) -> bool {
        self.quiet.len() == self.n
    }
}

/// Plays one round; stops early once `quiet` reports a fixed point.
fn play_round_traced(
    state: &mut GammaState,
    scenario: &GammaScenario,
    mut trace: Option<&mut Vec<MoveRecord>>,
    quiet: &mut QuietTracker,
    mut on_move: impl FnMut(&ActionProfile, usize),
) -> Result<bool> {
    let mut changed_any = false;
    state.round += 1;
    for bs in scenario.network.bs_ids() {
        let next = next_action(scenario, &state.profile, bs, state.strategy)?;
        let changed = &next != state.profile.get(bs);
        if changed {
            state.profile.set(next);
            changed_any = true;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(MoveRecord {
                round: state.round,
                bs,
                strategy: state.strategy,
                changed,
                action: state.profile.get(bs).clone(),
                costs: scenario.costs(&state.profile),
            });
        }
        on_move(&state.profile, (bs.0 + 1) % scenario.network.n_bs());
        quiet.record(bs, changed, state.strategy == Strategy::Br);
        if quiet.settled() {
            break;
        }
    }
    state.costs = scenario.costs(&state.profile);
    state.history.push(state.profile.fingerprint());
    Ok(changed_any)
}

/// Every site moves once, in ascending index order, using `state.strategy`.
pub fn play_round(mut state: GammaState, scenario: &GammaScenario) -> Result<GammaState> {
    let mut quiet = QuietTracker::new(usize::MAX);
    play_round_traced(&mut state, scenario, None, &mut quiet, |_, _| {})?;
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    /// Rounds of unrestricted best responses; `None` means `|N|²`.
    pub br_round_cap: Option<usize>,
    /// Rounds of single-step responses; `None` means `ssbr_cap_factor·|N|²`.
    pub ssbr_round_cap: Option<usize>,
    pub ssbr_cap_factor: usize,
    pub initial: Option<ActionProfile>,
    pub trace: bool,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig { br_round_cap: None, ssbr_round_cap: None, ssbr_cap_factor: 4, initial: None, trace: false }
    }
}

impl GammaConfig {
    pub fn br_cap(&self, n_bs: usize) -> usize {
        self.br_round_cap.unwrap_or(n_bs * n_bs)
    }

    pub fn ssbr_cap(&self, n_bs: usize) -> usize {
        self.ssbr_round_cap.unwrap_or(self.ssbr_cap_factor * n_bs * n_bs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    pub profile: ActionProfile,
    pub patterns: Vec<AbsfPattern>,
    pub penalties: BTreeMap<UserId, f64>,
    pub costs: BTreeMap<BsId, f64>,
    pub rounds: usize,
    pub br_rounds: usize,
    pub ssbr_rounds: usize,
    pub converged: bool,
    pub cycle_detected: bool,
    /// Length in moves of the first cycle seen during best-response play.
    pub cycle_period: Option<usize>,
    pub trace: Vec<MoveRecord>,
}

impl GammaResult {
    pub fn total_penalty(&self) -> f64 {
        self.penalties.values().sum()
    }
}

/// Remembers best-response states to find the first cycle.
#[derive(Default)]
struct CycleWatch {
    /// (profile fingerprint, next mover) after every move.
    moves: Vec<(u64, usize)>,
    /// Profiles at round boundaries, keyed by fingerprint.
    rounds: HashMap<u64, Vec<ActionProfile>>,
    found: Option<usize>,
}

impl CycleWatch {
    /// Called at a round boundary; a deep-equal repeat confirms a cycle.
    fn end_round(&mut self, profile: &ActionProfile) {
        if self.found.is_some() {
            return;
        }
        let seen = self.rounds.entry(profile.fingerprint()).or_default();
        if seen.iter().any(|p| p == profile) {
            let last = *self.moves.last().expect("a round has moves");
            let n = self.moves.len();
            self.found = (1..n).find(|p| self.moves[n - 1 - p] == last);
        } else {
            seen.push(profile.clone());
        }
    }
}

/// Best responses for up to `br_cap` rounds, then single-step responses for
/// up to `ssbr_cap` rounds. Stops as soon as the profile is a fixed point.
pub fn run_gamma(scenario: &GammaScenario, horizon: usize, cfg: &GammaConfig) -> Result<GammaResult> {
    let n = scenario.network.n_bs();
    let initial = match &cfg.initial {
        Some(p) if p.horizon() != horizon => return config("initial profile horizon differs from the game horizon"),
        Some(p) => p.clone(),
        None => ActionProfile::empty(n, horizon),
    };
    let mut state = GammaState::new(initial, scenario)?;
    let (br_cap, ssbr_cap) = (cfg.br_cap(n), cfg.ssbr_cap(n));
    let mut trace = Vec::new();
    let mut watch = CycleWatch::default();
    let mut converged = false;
    let (mut br_rounds, mut ssbr_rounds) = (0, 0);
    let mut quiet = QuietTracker::new(n);

    while br_rounds + ssbr_rounds < br_cap + ssbr_cap {
        state.strategy = if br_rounds < br_cap { Strategy::Br } else { Strategy::Ssbr };
        let is_br = state.strategy == Strategy::Br;
        play_round_traced(&mut state, scenario, cfg.trace.then_some(&mut trace), &mut quiet, |p, next| {
            if is_br {
                watch.moves.push((p.fingerprint(), next));
            }
        })?;
        if is_br {
            br_rounds += 1;
            watch.end_round(&state.profile);
        } else {
            ssbr_rounds += 1;
        }
        if quiet.settled() {
            converged = true;
            break;
        }
    }

    Ok(GammaResult {
        patterns: state.profile.patterns(),
        penalties: scenario.penalties(&state.profile),
        costs: state.costs,
        rounds: state.round,
        br_rounds,
        ssbr_rounds,
        converged,
        cycle_detected: watch.found.is_some(),
        cycle_period: watch.found,
        trace,
        profile: state.profile,
    })
}

/// Every site has zero penalty, uses all TTIs, or has only free TTIs that
/// give zero rate to each of its unserved users.
pub fn is_saturation_profile(profile: &ActionProfile, scenario: &GammaScenario) -> bool {
    scenario.network.bs_ids().all(|b| {
        let input = scenario.input(profile, b);
        let action = profile.get(b);
        let sol = evaluate(action, &input);
        if sol.total_penalty() <= PENALTY_EPS {
            return true;
        }
        if action.len() == profile.horizon() {
            return true;
        }
        let unserved: Vec<UserId> = sol.penalties.iter().filter(|(_, p)| **p > 0.0).map(|(u, _)| *u).collect();
        (0..profile.horizon())
            .filter(|t| !action.is_active(*t))
            .all(|t| unserved.iter().all(|u| scenario.network.rate(*u, b, input.interferers[t]) <= 0.0))
    })
}

/// A unilateral deviation that lowers some site's cost, searched with the
/// unrestricted exact best response. `None` certifies a Nash equilibrium.
pub fn improving_deviation(profile: &ActionProfile, scenario: &GammaScenario) -> Result<Option<(BsId, Action, f64)>> {
    let exact = BrConfig::exact();
    for b in scenario.network.bs_ids() {
        let input = scenario.input(profile, b);
        let cur = evaluate(profile.get(b), &input).cost;
        let best = crate::gbr_local::best_response(&input, &exact)?;
        if best.cost < cur - PENALTY_EPS * cur.abs().max(1.0) {
            return Ok(Some((b, best.action, best.cost)));
        }
    }
    Ok(None)
}
