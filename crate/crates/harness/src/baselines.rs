//! Uncoordinated comparison schemes: legacy (every site always on) and a
//! reuse-3 split emulated in time.
//!
//! Both use the same local solvers as the games, against interferers that
//! transmit in every TTI of the site's share. Guaranteed-rate users are
//! scheduled over the whole period; best-effort users over a given horizon
//! (in `run-dms`, the `Z` TTIs that DMS leaves free).

use std::collections::BTreeMap;

use dms_core::be_local::{be_maxmin, BeConfig, BeLocalInput};
use dms_core::gbr_local::{best_response, BrConfig, GbrLocalInput, PenaltyMode};
use dms_core::ids::{BsSet, UserId};
use dms_core::schedule::DemandSet;
use dms_core::{BsId, Network};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout<'a> {
    Legacy,
    /// Axial lattice coordinates of every site.
    Reuse3(&'a [(i32, i32)]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbrBaseline {
    /// TTIs each site owns.
    pub share: Vec<usize>,
    pub usage: Vec<usize>,
    pub unmet: f64,
    /// Bits delivered, capped at demand.
    pub capped_bits: f64,
    pub user_volume: BTreeMap<UserId, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeBaseline {
    pub share: Vec<usize>,
    pub usage: Vec<usize>,
    pub per_bs_eta: Vec<f64>,
    pub per_bs_min: Vec<f64>,
    pub bits: f64,
    pub user_volume: BTreeMap<UserId, f64>,
}

impl BeBaseline {
    /// `Σ_i min_u volume`.
    pub fn utility(&self) -> f64 {
        self.per_bs_min.iter().sum()
    }
}

/// `(q − r) mod 3` colouring of axial hex coordinates; adjacent cells differ.
pub fn reuse3_colors(axial: &[(i32, i32)]) -> Vec<usize> {
    axial.iter().map(|&(q, r)| (q - r).rem_euclid(3) as usize).collect()
}

/// TTIs owned by each colour: `w` split into near-equal thirds.
pub fn thirds(w: usize) -> [usize; 3] {
    [w.div_ceil(3), (w + 1) / 3, w / 3]
}

/// Interference group and TTI share of every site over a horizon of `w`.
fn plan(layout: Layout, n: usize, w: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    match layout {
        Layout::Legacy => Ok((vec![0; n], vec![w; n])),
        Layout::Reuse3(axial) => {
            if axial.len() != n {
                return Err(HarnessError::Config(format!("reuse3 needs lattice coordinates for all {n} sites")));
            }
            let colors = reuse3_colors(axial);
            let share = thirds(w);
            let shares = colors.iter().map(|c| share[*c]).collect();
            Ok((colors, shares))
        }
    }
}

fn group_of(network: &Network, groups: &[usize], b: BsId) -> BsSet {
    network.bs_ids().filter(|k| *k != b && groups[k.0] == groups[b.0]).collect()
}

pub struct GbrParams<'a> {
    pub network: &'a Network,
    pub demands: &'a DemandSet,
    pub w: usize,
    pub alpha: f64,
    pub penalty_mode: PenaltyMode,
    pub br: BrConfig,
}

pub fn gbr_baseline(p: &GbrParams, layout: Layout) -> Result<GbrBaseline> {
    let net = p.network;
    let n = net.n_bs();
    let (groups, share) = plan(layout, n, p.w)?;
    if let Layout::Reuse3(_) = layout {
        if share.contains(&0) {
            return Err(HarnessError::Config(format!("reuse3 needs W ≥ 3 so every colour owns a TTI, got {}", p.w)));
        }
    }
    let mut out = GbrBaseline { share: share.clone(), usage: vec![0; n], unmet: 0.0, capped_bits: 0.0, user_volume: BTreeMap::new() };
    for b in net.bs_ids() {
        let users = net.gbr_users(b).to_vec();
        if users.is_empty() {
            continue;
        }
        let demands: Vec<f64> = users.iter().map(|u| p.demands.get(*u)).collect();
        let input = GbrLocalInput {
            owner: b,
            users: users.clone(),
            demands: demands.clone(),
            interferers: vec![group_of(net, &groups, b); share[b.0]],
            alpha: p.alpha,
            penalty_mode: p.penalty_mode,
            network: net,
        };
        let s = best_response(&input, &p.br)?;
        out.usage[b.0] = s.action.len();
        for (u, d) in users.iter().zip(&demands) {
            let got = s.served.get(u).copied().unwrap_or(0.0);
            out.capped_bits += got.min(*d);
            out.unmet += (d - got).max(0.0);
            out.user_volume.insert(*u, got);
        }
    }
    Ok(out)
}

/// Best-effort users over `z` TTIs, each site maximising its own minimum.
pub fn be_baseline(network: &Network, z: usize, layout: Layout, be: &BeConfig) -> Result<BeBaseline> {
    let n = network.n_bs();
    let (groups, share) = plan(layout, n, z)?;
    let mut out = BeBaseline {
        share: share.clone(),
        usage: vec![0; n],
        per_bs_eta: vec![0.0; n],
        per_bs_min: vec![0.0; n],
        bits: 0.0,
        user_volume: BTreeMap::new(),
    };
    for b in network.bs_ids() {
        let users = network.be_users(b).to_vec();
        if users.is_empty() {
            continue;
        }
        let h = share[b.0];
        if h == 0 {
            out.user_volume.extend(users.iter().map(|u| (*u, 0.0)));
            continue;
        }
        let input = BeLocalInput { owner: b, users, interferers: vec![group_of(network, &groups, b); h], tti_bound: h, network };
        let s = be_maxmin(&input, be)?;
        out.usage[b.0] = s.action.len();
        out.per_bs_eta[b.0] = s.eta_i;
        out.per_bs_min[b.0] = s.min_volume;
        out.bits += s.per_user_volume.values().sum::<f64>();
        out.user_volume.extend(s.per_user_volume);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dms_core::radio::TableRates;
    use std::sync::Arc;

    #[test]
    fn hex_coloring_is_proper() {
        let axial = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];
        let c = reuse3_colors(&axial);
        let steps = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];
        for (i, a) in axial.iter().enumerate() {
            for (j, b) in axial.iter().enumerate() {
                if steps.contains(&(a.0 - b.0, a.1 - b.1)) {
                    assert_ne!(c[i], c[j], "{a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn thirds_cover() {
        for w in 0..20 {
            let t = thirds(w);
            assert_eq!(t.iter().sum::<usize>(), w);
            assert!(t[0] - t[2] <= 1);
        }
    }

    // two sites that nearly wipe each other out when both transmit
    fn pair() -> Network {
        let mut r = TableRates::new();
        for (u, b) in [(0, 0), (1, 1), (2, 0), (3, 1)] {
            r.insert(UserId(u), BsSet::EMPTY, 10.0);
            r.insert(UserId(u), BsSet::single(BsId(1 - b)), 1.0);
        }
        Network::new(vec![vec![UserId(0)], vec![UserId(1)]], vec![vec![UserId(2)], vec![UserId(3)]], Arc::new(r)).unwrap()
    }

    #[test]
    fn legacy_uses_full_interference() {
        let b = be_baseline(&pair(), 4, Layout::Legacy, &BeConfig::exact()).unwrap();
        assert_eq!(b.per_bs_min, vec![4.0, 4.0]);
        assert_eq!(b.share, vec![4, 4]);
    }

    #[test]
    fn reuse3_separates_neighbors() {
        let net = pair();
        let axial = [(0, 0), (1, 0)];
        let b = be_baseline(&net, 4, Layout::Reuse3(&axial), &BeConfig::exact()).unwrap();
        // colours 0 and 1 own 2 and 1 TTIs, interference free
        assert_eq!(b.per_bs_min, vec![20.0, 10.0]);
        assert!(b.utility() > be_baseline(&net, 4, Layout::Legacy, &BeConfig::exact()).unwrap().utility());
    }

    #[test]
    fn gbr_legacy_single_site_matches_alone() {
        let mut r = TableRates::new();
        r.insert(UserId(0), BsSet::EMPTY, 5.0);
        let net = Network::new(vec![vec![UserId(0)]], vec![vec![]], Arc::new(r)).unwrap();
        let d = DemandSet::new([(UserId(0), 15.0)].into_iter().collect()).unwrap();
        let p = GbrParams { network: &net, demands: &d, w: 8, alpha: 100.0, penalty_mode: PenaltyMode::Residual, br: BrConfig::exact() };
        let g = gbr_baseline(&p, Layout::Legacy).unwrap();
        assert_eq!(g.usage, vec![3]);
        assert_eq!(g.unmet, 0.0);
    }
}
