use std::collections::BTreeMap;
use std::sync::Arc;

use dms_core::be_local::{compare_maxmin, BeConfig, LocalBeProblem};
use dms_core::game_gamma::{run_gamma, GammaConfig, GammaScenario};
use dms_core::game_omega::{run_omega, OmegaConfig};
use dms_core::gbr_local::{BrConfig, LocalGbrProblem, PenaltyMode};
use dms_core::oracle::{brute_force_local, LocalProblem};
use dms_core::radio::{compute_gains, generate_hex_topology, sinr, Area, ChannelModel, McsTable, PhysicalRates, RateModel, TableRates};
use dms_core::schedule::{is_single_step, Action, DemandSet};
use dms_core::supervisor::{aimd_step, ceil_log2, run_dms, time_squeeze, AimdState, DemandSchedule, DmsConfig};
use dms_core::{BsId, BsSet, DmsError, Network, UserId};
use proptest::prelude::*;

/// Sites with one or two users each; rates shrink multiplicatively with
/// every interferer, so they are monotone by construction.
fn table_network(n_bs: usize, users: &[usize], base: &[f64], damp: &[f64]) -> Network {
    let mut rates = TableRates::new();
    let mut gbr = vec![Vec::new(); n_bs];
    let mut be = vec![Vec::new(); n_bs];
    let mut next = 0;
    for b in 0..n_bs {
        for k in 0..users[b] {
            let u = UserId(next);
            next += 1;
            if k % 2 == 0 { gbr[b].push(u) } else { be[b].push(u) }
            for mask in 0u64..(1 << n_bs) {
                if mask & (1 << b) != 0 {
                    continue;
                }
                let set = BsSet(mask);
                let r = set.iter().fold(base[u.0 % base.len()], |acc, i| acc * damp[(u.0 + i.0) % damp.len()]);
                rates.insert(u, set, r.floor());
            }
        }
    }
    Network::new(gbr, be, Arc::new(rates)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sinr_and_rate_fall_when_a_site_joins(seed in 0u64..10_000, n_bs in 2usize..8, extra in 0usize..7, mask in 0u64..128) {
        let topo = generate_hex_topology(n_bs, 200.0, Area { width: 600.0, height: 600.0 }, 2, seed).unwrap();
        let model = ChannelModel::default();
        let gains = compute_gains(&topo, &model, seed).unwrap();
        let rates = PhysicalRates::new(gains.clone(), McsTable::default_lte(), &model);
        let extra = BsId(extra % n_bs);
        for (u, &b) in topo.association.iter().enumerate() {
            let u = UserId(u);
            let serving = b;
            let active = BsSet(mask & ((1 << n_bs) - 1)).without(serving);
            let more = active.with(extra).without(serving);
            let s0 = sinr(&gains, u, serving, active, model.tx_power, model.noise_power);
            let s1 = sinr(&gains, u, serving, more, model.tx_power, model.noise_power);
            prop_assert!(s1 <= s0);
            prop_assert!(rates.rate(u, serving, more) <= rates.rate(u, serving, active));
        }
    }

    #[test]
    fn aimd_keeps_bounds_and_moves_one_entry(n in 1usize..8, z in 1usize..40, etas in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 7), 1..60)) {
        let mut s = AimdState::new(n, z);
        for e in etas {
            let before = s.m.clone();
            let change = aimd_step(&mut s, &e[..n]);
            let moved = before.iter().zip(&s.m).filter(|(a, b)| a != b).count();
            prop_assert!(moved <= 1);
            prop_assert_eq!(moved == 1, change.is_some());
            for (m, f) in s.m.iter().zip(&s.m_star) {
                prop_assert!(*f <= *m && *m <= z.max(*f));
            }
            if let Some(c) = change {
                if c.to < c.from {
                    prop_assert!(c.to == s.m_star[c.bs.0] || c.to == c.from.div_ceil(2));
                } else {
                    prop_assert_eq!(c.to, c.from + 1);
                }
            }
        }
    }

    #[test]
    fn exact_best_response_matches_enumeration(
        rates in prop::collection::vec(prop::collection::vec(0u8..4, 4), 1..3),
        demand in prop::collection::vec(0u8..9, 2),
        fixed in any::<bool>(),
    ) {
        let rates: Vec<Vec<f64>> = rates.iter().map(|r| r.iter().map(|x| f64::from(*x)).collect()).collect();
        let demands = demand[..rates.len()].iter().map(|d| f64::from(*d)).collect();
        let mode = if fixed { PenaltyMode::Fixed(0.1) } else { PenaltyMode::Residual };
        let p = LocalGbrProblem { rates, demands, alpha: 10.0, penalty_mode: mode };
        let exact = p.exact_best(None, None);
        let brute = brute_force_local(LocalProblem::GbrBr(&p)).unwrap();
        prop_assert!((p.cost(&exact) - p.cost(&brute)).abs() < 1e-9);
        prop_assert!(p.cost(&p.heuristic_best(None)) >= p.cost(&exact) - 1e-9);
    }

    #[test]
    fn exact_maxmin_matches_enumeration(
        rates in prop::collection::vec(prop::collection::vec(0u8..4, 4), 1..3),
        bound in 1usize..5,
    ) {
        let rates: Vec<Vec<f64>> = rates.iter().map(|r| r.iter().map(|x| f64::from(*x)).collect()).collect();
        let p = LocalBeProblem { rates, tti_bound: bound };
        let exact = p.exact_best(None);
        let brute = brute_force_local(LocalProblem::BeMaxmin(&p)).unwrap();
        prop_assert!(p.is_valid(&exact));
        prop_assert_eq!(compare_maxmin(&p.volumes(&exact), &p.volumes(&brute)), std::cmp::Ordering::Equal);
    }

    #[test]
    fn games_respect_action_constraints(users in prop::collection::vec(1usize..4, 3), base in prop::collection::vec(2.0f64..9.0, 3), damp in prop::collection::vec(0.0f64..1.0, 4), z in 1usize..6, m in prop::collection::vec(1usize..6, 3)) {
        let net = table_network(3, &users, &base, &damp);
        let m: Vec<usize> = m.iter().map(|x| (*x).min(z)).collect();
        let o = run_omega(&net, z, &m, &OmegaConfig { trace: true, ..Default::default() }).unwrap();
        for round in &o.trace {
            for a in round.profile.actions() {
                prop_assert!(a.len() <= m[a.owner().0]);
                prop_assert!(a.validate_users(net.be_users(a.owner())).is_ok());
            }
        }
        let d = DemandSet::new(net.bs_ids().flat_map(|b| net.gbr_users(b).to_vec()).map(|u| (u, 6.0)).collect()).unwrap();
        let s = GammaScenario { network: &net, demands: &d, alpha: 100.0, penalty_mode: PenaltyMode::Residual, br: BrConfig::exact() };
        let g = run_gamma(&s, 4, &GammaConfig { trace: true, ..Default::default() }).unwrap();
        for mv in &g.trace {
            prop_assert!(mv.action.validate_users(net.gbr_users(mv.bs)).is_ok());
        }
    }

    #[test]
    fn squeeze_probes_are_bounded_and_penalty_free(users in prop::collection::vec(1usize..3, 3), base in prop::collection::vec(2.0f64..9.0, 3), damp in prop::collection::vec(0.0f64..1.0, 4), w in 1usize..9, need in 1.0f64..12.0) {
        let net = table_network(3, &users, &base, &damp);
        let d = DemandSet::new(net.bs_ids().flat_map(|b| net.gbr_users(b).to_vec()).map(|u| (u, need)).collect()).unwrap();
        let s = GammaScenario { network: &net, demands: &d, alpha: 100.0, penalty_mode: PenaltyMode::Residual, br: BrConfig::exact() };
        match time_squeeze(&s, w, &GammaConfig::default()) {
            Ok(r) => {
                prop_assert!(r.probes.len() <= ceil_log2(w) + 1);
                prop_assert!(r.penalties.values().all(|p| *p == 0.0));
                prop_assert!(r.t >= 1 && r.t <= w);
            }
            Err(DmsError::Infeasible { horizon, .. }) => prop_assert_eq!(horizon, w),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn ssbr_moves_stay_single_step() {
    let net = table_network(3, &[2, 2, 2], &[5.0, 7.0, 3.0], &[0.5, 0.2, 0.9, 0.0]);
    let d = DemandSet::new(net.bs_ids().flat_map(|b| net.gbr_users(b).to_vec()).map(|u| (u, 9.0)).collect()).unwrap();
    let s = GammaScenario { network: &net, demands: &d, alpha: 100.0, penalty_mode: PenaltyMode::Residual, br: BrConfig::exact() };
    let cfg = GammaConfig { br_round_cap: Some(0), trace: true, ..Default::default() };
    let g = run_gamma(&s, 4, &cfg).unwrap();
    assert!(g.converged);
    let mut last: BTreeMap<BsId, Action> = net.bs_ids().map(|b| (b, Action::empty(b, 4))).collect();
    for mv in &g.trace {
        let prev = &last[&mv.bs];
        assert!(is_single_step(prev, &mv.action));
        last.insert(mv.bs, mv.action.clone());
    }
}

#[test]
fn dms_runs_are_reproducible() {
    let net = table_network(3, &[3, 3, 3], &[5.0, 7.0, 3.0], &[0.5, 0.2, 0.9, 0.0]);
    let d = DemandSet::new(net.bs_ids().flat_map(|b| net.gbr_users(b).to_vec()).map(|u| (u, 8.0)).collect()).unwrap();
    let cfg = DmsConfig { w: 8, epochs: 6, alpha: 100.0, be: BeConfig::default(), ..Default::default() };
    let a = run_dms(&net, &DemandSchedule::constant(d.clone()), &cfg, None).unwrap();
    let b = run_dms(&net, &DemandSchedule::constant(d), &cfg, None).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.squeeze_probes <= ceil_log2(8) + 1));
}
