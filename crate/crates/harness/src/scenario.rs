//! Turns a validated config and a seed into a concrete network.

use std::sync::Arc;

use dms_core::gbr_local::BrConfig;
use dms_core::be_local::BeConfig;
use dms_core::game_gamma::GammaConfig;
use dms_core::radio::{
    compute_gains, dbm_to_watts, generate_hex_topology, Area, ChannelModel, Fading, LinkGainMatrix, McsTable, PhysicalRates,
    RateModel, Topology,
};
use dms_core::schedule::DemandSet;
use dms_core::supervisor::{DemandSchedule, DmsConfig};
use dms_core::{DmsError, Network};

use crate::config::{FadingRedraw, ScenarioConfig};
use crate::error::{HarnessError, Result};

/// Independent RNG stream for `(seed, stream)` (SplitMix64 finaliser).
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TOPOLOGY_STREAM: u64 = 0;
const FADING_STREAM: u64 = 1;

pub struct Scenario {
    pub seed: u64,
    pub config: ScenarioConfig,
    pub topology: Topology,
    pub channel: ChannelModel,
    pub mcs: McsTable,
    /// Network with the epoch-0 channel.
    pub network: Network,
    pub demands: DemandSchedule,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        let topology = match &config.topology_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                let t = Topology::from_json(&text)?;
                if t.n_bs() != config.n_bs {
                    return Err(HarnessError::Config(format!(
                        "topology_file has {} sites but n_bs = {}",
                        t.n_bs(),
                        config.n_bs
                    )));
                }
                t
            }
            None => generate_hex_topology(
                config.n_bs,
                config.isd_m,
                Area { width: config.area_m[0], height: config.area_m[1] },
                config.users_per_bs + config.be_users_per_bs,
                stream_seed(seed, TOPOLOGY_STREAM),
            )?,
        };
        let channel = ChannelModel {
            pathloss_intercept_db: config.pathloss.intercept_db,
            pathloss_slope_db_per_decade: config.pathloss.slope_db_per_decade,
            fading: config.fading,
            noise_power: config.noise_w,
            tx_power: dbm_to_watts(config.tx_power_dbm),
            min_distance_m: config.pathloss.min_distance_m,
        };
        channel.validate()?;
        let mcs = config.mcs()?;
        let gains = compute_gains(&topology, &channel, fading_seed(seed, 0))?;
        let rates: Arc<dyn RateModel> = Arc::new(PhysicalRates::new(gains, mcs.clone(), &channel));
        let network = Network::from_topology(&topology, config.users_per_bs, rates)?;
        let demands = demand_schedule(config, &network)?;
        Ok(Scenario { seed, config: config.clone(), topology, channel, mcs, network, demands })
    }

    /// Gains drawn for `epoch`.
    pub fn gains(&self, epoch: usize) -> Result<LinkGainMatrix> {
        let e = match self.config.fading_redraw {
            FadingRedraw::PerEpoch => epoch,
            FadingRedraw::Static => 0,
        };
        Ok(compute_gains(&self.topology, &self.channel, fading_seed(self.seed, e))?)
    }

    /// Whether the rate model changes between epochs.
    pub fn time_varying(&self) -> bool {
        self.config.fading_redraw == FadingRedraw::PerEpoch && self.channel.fading != Fading::None
    }

    pub fn rates_at(&self, epoch: usize) -> dms_core::Result<Arc<dyn RateModel>> {
        let e = match self.config.fading_redraw {
            FadingRedraw::PerEpoch => epoch,
            FadingRedraw::Static => 0,
        };
        let gains = compute_gains(&self.topology, &self.channel, fading_seed(self.seed, e))?;
        Ok(Arc::new(PhysicalRates::new(gains, self.mcs.clone(), &self.channel)))
    }

    pub fn network_at(&self, epoch: usize) -> Result<Network> {
        if epoch == 0 || !self.time_varying() {
            Ok(self.network.clone())
        } else {
            Ok(self.network.with_rates(self.rates_at(epoch)?))
        }
    }

    pub fn br_config(&self) -> BrConfig {
        let s = &self.config.solver;
        BrConfig {
            mode: s.br_mode,
            exact_max_users: s.br_exact_max_users,
            exact_max_ttis: s.br_exact_max_ttis,
            neighborhood: s.ssbr_neighborhood,
        }
    }

    pub fn be_config(&self) -> BeConfig {
        BeConfig { mode: self.config.solver.be_mode, ..BeConfig::default() }
    }

    pub fn gamma_config(&self, trace: bool) -> GammaConfig {
        GammaConfig { ssbr_cap_factor: self.config.solver.ssbr_cap_factor, trace, ..GammaConfig::default() }
    }

    pub fn dms_config(&self, epochs: usize) -> DmsConfig {
        let c = &self.config;
        DmsConfig {
            w: c.W,
            epochs,
            alpha: c.alpha,
            penalty_mode: c.penalty_mode,
            br: self.br_config(),
            gamma: self.gamma_config(false),
            be: self.be_config(),
            omega_deadline: Some(c.deadline_policy.rounds(c.n_bs)),
            tti_s: c.tti_s(),
            b_bits: c.B_bits,
        }
    }
}

fn fading_seed(seed: u64, epoch: usize) -> u64 {
    stream_seed(stream_seed(seed, FADING_STREAM), epoch as u64)
}

fn demand_schedule(config: &ScenarioConfig, network: &Network) -> Result<DemandSchedule> {
    let users: Vec<_> = network.bs_ids().flat_map(|b| network.gbr_users(b).to_vec()).collect();
    let make = |mbps: f64| -> std::result::Result<DemandSet, DmsError> {
        DemandSet::uniform_rate(&users, mbps * 1e6, config.W, config.tti_s())
    };
    let mut steps = vec![(0, make(config.gbr_rate_mbps)?)];
    for s in &config.demand_schedule {
        steps.push((s.epoch, make(s.gbr_rate_mbps)?));
    }
    Ok(DemandSchedule::new(steps)?)
}
