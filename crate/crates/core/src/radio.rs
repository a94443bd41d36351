//! Network geometry, channel gains, SINR and MCS rate mapping.
//!
//! Sites are laid out on a hexagonal lattice centred in the deployment area
//! and every user is dropped uniformly inside the hexagonal (Voronoi) cell of
//! its serving site. Gains follow a log-distance path-loss law with optional
//! unit-mean Rayleigh power fading.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::ids::{BsId, BsSet, UserId, MAX_BS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Deployment area in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }
}

/// Site and user geometry with the user → serving BS association.
///
/// Users are stored grouped by serving site: the users of site `k` occupy a
/// contiguous block of indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub bs_positions: Vec<Point>,
    /// Axial lattice coordinates `(q, r)` of each site.
    pub bs_axial: Vec<(i32, i32)>,
    pub user_positions: Vec<Point>,
    pub association: Vec<BsId>,
    pub area: Area,
    pub isd: f64,
}

impl Topology {
    pub fn n_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn users_of(&self, bs: BsId) -> Vec<UserId> {
        self.association
            .iter()
            .enumerate()
            .filter(|(_, b)| **b == bs)
            .map(|(u, _)| UserId(u))
            .collect()
    }

    /// Index of the site closest to `p` (lowest index on ties).
    pub fn nearest_bs(&self, p: &Point) -> BsId {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, s) in self.bs_positions.iter().enumerate() {
            let d = s.distance(p);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        BsId(best)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let topo: Topology = serde_json::from_str(text)
            .map_err(|e| crate::error::DmsError::Config(format!("topology json: {e}")))?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bs_positions.is_empty() || self.bs_positions.len() > MAX_BS {
            return config(format!("topology must have 1..={MAX_BS} sites"));
        }
        if self.bs_axial.len() != self.bs_positions.len() {
            return config("bs_axial length differs from bs_positions");
        }
        if self.association.len() != self.user_positions.len() {
            return config("association length differs from user_positions");
        }
        if let Some(b) = self.association.iter().find(|b| b.0 >= self.n_bs()) {
            return config(format!("user associated to unknown site {b}"));
        }
        Ok(())
    }
}

/// Cartesian offset of axial lattice coordinate `(q, r)` for spacing `isd`.
/// The lattice has one neighbour direction along +y.
fn axial_offset(q: i32, r: i32, isd: f64) -> (f64, f64) {
    let (q, r) = (q as f64, r as f64);
    (isd * (3f64.sqrt() / 2.0) * r, isd * (q + r / 2.0))
}

/// Unit vectors from a site towards three of its six lattice neighbours.
fn neighbour_directions() -> [(f64, f64); 3] {
    let h = 3f64.sqrt() / 2.0;
    [(0.0, 1.0), (h, 0.5), (h, -0.5)]
}

/// Whether `(dx, dy)` lies in the hexagonal Voronoi cell of a lattice site.
fn in_hex_cell(dx: f64, dy: f64, isd: f64) -> bool {
    neighbour_directions()
        .iter()
        .all(|(nx, ny)| (dx * nx + dy * ny).abs() <= isd / 2.0)
}

/// Pick `n_bs` lattice sites around the area centre: sites inside the area
/// first, each group ordered by distance from the centre and then by angle.
fn hex_sites(n_bs: usize, isd: f64, area: Area) -> Vec<(i32, i32)> {
    let mut radius = 0i32;
    while 3 * radius * (radius + 1) + 1 < n_bs as i32 {
        radius += 1;
    }
    let half_diag = area.width.hypot(area.height) / 2.0;
    radius = radius.max((half_diag / (isd * 3f64.sqrt() / 2.0)).ceil() as i32 + 1);

    let c = area.center();
    let mut sites = Vec::new();
    for q in -radius..=radius {
        for r in -radius..=radius {
            if (q + r).abs() <= radius {
                sites.push((q, r));
            }
        }
    }
    let key = |s: &(i32, i32)| {
        let (dx, dy) = axial_offset(s.0, s.1, isd);
        let (x, y) = (c.x + dx, c.y + dy);
        let outside = !(0.0..=area.width).contains(&x) || !(0.0..=area.height).contains(&y);
        // squared distance in units of isd^2 is q^2 + qr + r^2 (exact integer)
        let d2 = s.0 * s.0 + s.0 * s.1 + s.1 * s.1;
        let mut ang = dy.atan2(dx);
        if ang < 0.0 {
            ang += std::f64::consts::TAU;
        }
        (outside, d2, ang)
    };
    sites.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
    });
    sites.truncate(n_bs);
    sites
}

/// Lay out `n_bs` sites on a hexagonal grid centred in `area` and drop
/// `users_per_bs` users uniformly in each site's cell.
///
/// The area fixes the deployment centre; larger inter-site distances simply
/// extend the cluster beyond it.
pub fn generate_hex_topology(
    n_bs: usize,
    isd: f64,
    area: Area,
    users_per_bs: usize,
    seed: u64,
) -> Result<Topology> {
    if n_bs == 0 || n_bs > MAX_BS {
        return config(format!("n_bs must be in 1..={MAX_BS}, got {n_bs}"));
    }
    if !(isd.is_finite() && isd > 0.0) {
        return config(format!("isd must be positive and finite, got {isd}"));
    }
    if !(area.width.is_finite() && area.height.is_finite() && area.width > 0.0 && area.height > 0.0) {
        return config("area dimensions must be positive and finite");
    }

    let center = area.center();
    let bs_axial = hex_sites(n_bs, isd, area);
    let bs_positions: Vec<Point> = bs_axial
        .iter()
        .map(|&(q, r)| {
            let (dx, dy) = axial_offset(q, r, isd);
            Point::new(center.x + dx, center.y + dy)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let circumradius = isd / 3f64.sqrt();
    let mut user_positions = Vec::with_capacity(n_bs * users_per_bs);
    let mut association = Vec::with_capacity(n_bs * users_per_bs);
    for (k, site) in bs_positions.iter().enumerate() {
        for _ in 0..users_per_bs {
            let (dx, dy) = loop {
                let dx = rng.random_range(-circumradius..circumradius);
                let dy = rng.random_range(-circumradius..circumradius);
                if in_hex_cell(dx, dy, isd) {
                    break (dx, dy);
                }
            };
            user_positions.push(Point::new(site.x + dx, site.y + dy));
            association.push(BsId(k));
        }
    }

    Ok(Topology {
        bs_positions,
        bs_axial,
        user_positions,
        association,
        area,
        isd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fading {
    None,
    RayleighUnitMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db_per_decade: f64,
    pub fading: Fading,
    /// Background noise N0 in watts.
    pub noise_power: f64,
    /// Per-site transmit power P in watts.
    pub tx_power: f64,
    /// Distances below this are clamped before evaluating path loss.
    pub min_distance_m: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            pathloss_intercept_db: 128.1,
            pathloss_slope_db_per_decade: 37.6,
            fading: Fading::RayleighUnitMean,
            noise_power: 1.085e-14,
            tx_power: dbm_to_watts(30.0),
            min_distance_m: 10.0,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.pathloss_intercept_db,
            self.pathloss_slope_db_per_decade,
            self.noise_power,
            self.tx_power,
            self.min_distance_m,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return config("channel model parameters must be finite");
        }
        if self.noise_power <= 0.0 || self.tx_power <= 0.0 {
            return config("noise_power and tx_power must be positive");
        }
        if self.min_distance_m <= 0.0 {
            return config("min_distance_m must be positive");
        }
        Ok(())
    }

    /// Path loss in dB at `distance_m` (after clamping).
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        let d_km = distance_m.max(self.min_distance_m) / 1000.0;
        self.pathloss_intercept_db + self.pathloss_slope_db_per_decade * d_km.log10()
    }

    /// Linear gain without fading.
    pub fn mean_gain(&self, distance_m: f64) -> f64 {
        10f64.powf(-self.path_loss_db(distance_m) / 10.0)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power gains `G[u][k]`, stored row-major by user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGainMatrix {
    pub n_users: usize,
    pub n_bs: usize,
    pub gains: Vec<f64>,
}

impl LinkGainMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_users = rows.len();
        let n_bs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_bs) {
            return config("gain rows must have equal length");
        }
        let gains: Vec<f64> = rows.into_iter().flatten().collect();
        let m = LinkGainMatrix { n_users, n_bs, gains };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gains.len() != self.n_users * self.n_bs {
            return config("gain matrix size mismatch");
        }
        if self.gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return config("gains must be strictly positive and finite");
        }
        Ok(())
    }

    pub fn get(&self, user: UserId, bs: BsId) -> f64 {
        self.gains[user.0 * self.n_bs + bs.0]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("gains serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: LinkGainMatrix = serde_json::from_str(text)
            .map_err(|e| crate::error::DmsError::Config(format!("gain matrix json: {e}")))?;
        m.validate()?;
        Ok(m)
    }
}

/// `G = 10^(-PL(d)/10) * F` for every (user, site) pair.
///
/// With Rayleigh fading, `F` is drawn from a unit-mean exponential in
/// (user, site) row-major order from a stream seeded by `seed`.
pub fn compute_gains(topology: &Topology, model: &ChannelModel, seed: u64) -> Result<LinkGainMatrix> {
    model.validate()?;
    topology.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_bs = topology.n_bs();
    let mut gains = Vec::with_capacity(topology.n_users() * n_bs);
    for up in &topology.user_positions {
        for bp in &topology.bs_positions {
            let mut g = model.mean_gain(up.distance(bp));
            if model.fading == Fading::RayleighUnitMean {
                let f: f64 = rng.sample(Exp1);
                // an exact zero draw would break strict positivity
                g *= f.max(f64::MIN_POSITIVE);
            }
            gains.push(g);
        }
    }
    let m = LinkGainMatrix { n_users: topology.n_users(), n_bs, gains };
    m.validate()?;
    Ok(m)
}

/// `P·G[u][i] / (N0 + Σ_{k ∈ active, k ≠ i} P·G[u][k])`.
pub fn sinr(gains: &LinkGainMatrix, u: UserId, serving: BsId, active: BsSet, tx_power: f64, noise: f64) -> f64 {
    let interference: f64 = active
        .without(serving)
        .iter()
        .map(|k| tx_power * gains.get(u, k))
        .sum();
    tx_power * gains.get(u, serving) / (noise + interference)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    /// Linear SINR threshold.
    pub sinr_threshold: f64,
    /// Bits per TTI.
    pub rate: f64,
}

/// Ordered (threshold, rate) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<McsEntry>", into = "Vec<McsEntry>")]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl TryFrom<Vec<McsEntry>> for McsTable {
    type Error = crate::error::DmsError;

    fn try_from(entries: Vec<McsEntry>) -> Result<Self> {
        McsTable::new(entries)
    }
}

impl From<McsTable> for Vec<McsEntry> {
    fn from(t: McsTable) -> Self {
        t.entries
    }
}

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self> {
        if entries.is_empty() {
            return config("MCS table must not be empty");
        }
        if entries.iter().any(|e| !e.sinr_threshold.is_finite() || !e.rate.is_finite()) {
            return config("MCS entries must be finite");
        }
        if entries[0].sinr_threshold <= 0.0 {
            return config("lowest MCS threshold must be positive");
        }
        if entries[0].rate <= 0.0 {
            return config("MCS rates must be positive");
        }
        for w in entries.windows(2) {
            if w[1].sinr_threshold <= w[0].sinr_threshold || w[1].rate <= w[0].rate {
                return config("MCS thresholds and rates must be strictly increasing");
            }
        }
        Ok(McsTable { entries })
    }

    /// 15-level LTE-like table: thresholds evenly spread over −6.7…22.7 dB,
    /// spectral efficiencies 0.15…5.55 b/s/Hz, 20 MHz, 1 ms TTI.
    pub fn default_lte() -> Self {
        Self::lte_like(20e6, 1e-3)
    }

    pub fn lte_like(bandwidth_hz: f64, tti_s: f64) -> Self {
        let n = 15;
        let entries = (0..n)
            .map(|m| {
                let f = m as f64 / (n - 1) as f64;
                let db = -6.7 + f * (22.7 - -6.7);
                let eff = 0.15 + f * (5.55 - 0.15);
                McsEntry {
                    sinr_threshold: db_to_linear(db),
                    rate: (eff * bandwidth_hz * tti_s).floor(),
                }
            })
            .collect();
        McsTable::new(entries).expect("built-in table is valid")
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn top_rate(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.rate)
    }

    /// Index of the highest MCS whose threshold is at most `s`.
    pub fn best_index(&self, s: f64) -> Option<usize> {
        // thresholds are sorted: count the ones <= s
        let n = self.entries.partition_point(|e| e.sinr_threshold <= s);
        n.checked_sub(1)
    }
}

/// Rate of the best feasible MCS at SINR `s` (inclusive thresholds), or 0.
pub fn best_rate(s: f64, table: &McsTable) -> f64 {
    table.best_index(s).map_or(0.0, |m| table.entries[m].rate)
}

/// Per-TTI rate a user obtains from its serving site given the set of
/// transmitting sites. Rates never depend on the TTI index.
pub trait RateModel: Send + Sync {
    /// Bits per TTI for `user` served by `serving` while every site in
    /// `active` transmits. `serving` is ignored if present in `active`.
    fn rate(&self, user: UserId, serving: BsId, active: BsSet) -> f64;
}

/// SINR → MCS rate model over a gain matrix.
#[derive(Debug, Clone)]
pub struct PhysicalRates {
    pub gains: LinkGainMatrix,
    pub mcs: McsTable,
    pub tx_power: f64,
    pub noise: f64,
}

impl PhysicalRates {
    pub fn new(gains: LinkGainMatrix, mcs: McsTable, model: &ChannelModel) -> Self {
        PhysicalRates { gains, mcs, tx_power: model.tx_power, noise: model.noise_power }
    }

    pub fn sinr(&self, user: UserId, serving: BsId, active: BsSet) -> f64 {
        sinr(&self.gains, user, serving, active, self.tx_power, self.noise)
    }
}

impl RateModel for PhysicalRates {
    fn rate(&self, user: UserId, serving: BsId, active: BsSet) -> f64 {
        best_rate(self.sinr(user, serving, active), &self.mcs)
    }
}

/// Explicit rate table keyed by `(user, interferers)`, where `interferers`
/// excludes the serving site. Missing entries yield rate 0.
#[derive(Debug, Clone, Default)]
pub struct TableRates {
    entries: HashMap<(UserId, BsSet), f64>,
}

impl TableRates {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user: UserId, interferers: BsSet, rate: f64) {
        self.entries.insert((user, interferers), rate);
    }
}

impl RateModel for TableRates {
    fn rate(&self, user: UserId, serving: BsId, active: BsSet) -> f64 {
        self.entries
            .get(&(user, active.without(serving)))
            .copied()
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area() -> Area {
        Area { width: 300.0, height: 500.0 }
    }

    #[test]
    fn standard_topology_counts() {
        let t = generate_hex_topology(7, 200.0, area(), 10, 1).unwrap();
        assert_eq!(t.n_bs(), 7);
        assert_eq!(t.n_users(), 70);
        for k in 0..7 {
            assert_eq!(t.users_of(BsId(k)).len(), 10);
        }
        // ring 1 sites at exactly one ISD from the centre site
        for k in 1..7 {
            assert!((t.bs_positions[k].distance(&t.bs_positions[0]) - 200.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_site_no_users() {
        let t = generate_hex_topology(1, 123.0, area(), 0, 9).unwrap();
        assert_eq!(t.n_bs(), 1);
        assert!(t.user_positions.is_empty());
        assert_eq!(t.bs_positions[0], area().center());
    }

    #[test]
    fn topology_is_deterministic() {
        let a = generate_hex_topology(7, 200.0, area(), 10, 42).unwrap();
        let b = generate_hex_topology(7, 200.0, area(), 10, 42).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_hex_topology(7, 200.0, area(), 10, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn users_sit_in_their_voronoi_cell() {
        let t = generate_hex_topology(28, 80.0, area(), 20, 5).unwrap();
        for (u, p) in t.user_positions.iter().enumerate() {
            assert_eq!(t.nearest_bs(p), t.association[u]);
        }
    }

    #[test]
    fn dense_grid_fits_the_area() {
        let t = generate_hex_topology(28, 80.0, area(), 0, 0).unwrap();
        let inside = t
            .bs_positions
            .iter()
            .filter(|p| p.x >= 0.0 && p.x <= 300.0 && p.y >= 0.0 && p.y <= 500.0)
            .count();
        assert_eq!(inside, 28);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(generate_hex_topology(0, 200.0, area(), 1, 0).is_err());
        assert!(generate_hex_topology(65, 200.0, area(), 1, 0).is_err());
        assert!(generate_hex_topology(7, -1.0, area(), 1, 0).is_err());
        assert!(generate_hex_topology(7, 1.0, Area { width: 0.0, height: 1.0 }, 1, 0).is_err());
    }

    #[test]
    fn path_loss_at_one_km() {
        let m = ChannelModel { fading: Fading::None, ..Default::default() };
        let g = m.mean_gain(1000.0);
        let expected = 10f64.powf(-12.81);
        assert!((g / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_clamp() {
        let m = ChannelModel::default();
        assert_eq!(m.path_loss_db(0.0), m.path_loss_db(10.0));
        assert!(m.mean_gain(0.0).is_finite());
    }

    #[test]
    fn equal_distance_equal_gain() {
        let topo = Topology {
            bs_positions: vec![Point::new(0.0, 0.0)],
            bs_axial: vec![(0, 0)],
            user_positions: vec![Point::new(30.0, 40.0), Point::new(-50.0, 0.0)],
            association: vec![BsId(0), BsId(0)],
            area: area(),
            isd: 100.0,
        };
        let m = ChannelModel { fading: Fading::None, ..Default::default() };
        let g = compute_gains(&topo, &m, 0).unwrap();
        assert_eq!(g.get(UserId(0), BsId(0)), g.get(UserId(1), BsId(0)));
    }

    #[test]
    fn sinr_without_interferers() {
        let g = LinkGainMatrix::from_rows(vec![vec![1e-9, 1e-10]]).unwrap();
        let s = sinr(&g, UserId(0), BsId(0), BsSet::single(BsId(0)), 1.0, 1e-14);
        assert!((s - 1e-9 / 1e-14).abs() / s < 1e-12);
        // the serving site is never counted as interference
        let s2 = sinr(&g, UserId(0), BsId(0), BsSet::EMPTY, 1.0, 1e-14);
        assert_eq!(s, s2);
    }

    #[test]
    fn sinr_symmetric_interferer_limit() {
        let g = LinkGainMatrix::from_rows(vec![vec![1e-6, 1e-6]]).unwrap();
        let s = sinr(&g, UserId(0), BsId(0), BsSet(0b11), 1.0, 1e-30);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_two_interferers_by_hand() {
        // P = 2, N0 = 0.5, G = [4, 1, 0.25]: 8 / (0.5 + 2 + 0.5) = 8/3
        let g = LinkGainMatrix::from_rows(vec![vec![4.0, 1.0, 0.25]]).unwrap();
        let s = sinr(&g, UserId(0), BsId(0), BsSet(0b111), 2.0, 0.5);
        assert!((s - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn best_rate_boundaries() {
        let t = McsTable::default_lte();
        assert_eq!(t.entries().len(), 15);
        let low = t.entries()[0];
        assert_eq!(best_rate(low.sinr_threshold * 0.999, &t), 0.0);
        for e in t.entries() {
            assert_eq!(best_rate(e.sinr_threshold, &t), e.rate);
        }
        assert_eq!(best_rate(1e9, &t), t.top_rate());
        // floor(5.55 * 20e6 * 1e-3)
        assert_eq!(t.top_rate(), 111_000.0);
        assert_eq!(t.entries()[0].rate, 3_000.0);
    }

    #[test]
    fn mcs_table_validation() {
        let e = |s, r| McsEntry { sinr_threshold: s, rate: r };
        assert!(McsTable::new(vec![]).is_err());
        assert!(McsTable::new(vec![e(0.0, 1.0)]).is_err());
        assert!(McsTable::new(vec![e(1.0, 2.0), e(1.0, 3.0)]).is_err());
        assert!(McsTable::new(vec![e(1.0, 2.0), e(2.0, 2.0)]).is_err());
        assert!(McsTable::new(vec![e(1.0, 2.0), e(2.0, 3.0)]).is_ok());
        let json = r#"[{"sinr_threshold": 2.0, "rate": 1.0}, {"sinr_threshold": 1.0, "rate": 2.0}]"#;
        assert!(serde_json::from_str::<McsTable>(json).is_err());
    }

    #[test]
    fn gains_json_round_trip() {
        let t = generate_hex_topology(3, 100.0, area(), 2, 3).unwrap();
        let g = compute_gains(&t, &ChannelModel::default(), 3).unwrap();
        assert_eq!(LinkGainMatrix::from_json(&g.to_json()).unwrap(), g);
        assert_eq!(Topology::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn table_rates_lookup() {
        let mut t = TableRates::new();
        t.insert(UserId(0), BsSet::EMPTY, 5.0);
        t.insert(UserId(0), BsSet::single(BsId(1)), 3.0);
        assert_eq!(t.rate(UserId(0), BsId(0), BsSet::single(BsId(0))), 5.0);
        assert_eq!(t.rate(UserId(0), BsId(0), BsSet(0b11)), 3.0);
        assert_eq!(t.rate(UserId(0), BsId(0), BsSet(0b111)), 0.0);
    }
}
