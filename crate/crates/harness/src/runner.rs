//! Subcommand drivers. Seeds run in parallel; files are written afterwards in
//! seed order so output does not depend on scheduling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dms_core::game_gamma::{run_gamma, GammaScenario};
use dms_core::game_omega::{run_omega, OmegaConfig};
use dms_core::ids::UserId;
use dms_core::metrics::{
    cdf_quantile, crossover_users, overhead_bits, rate_cdf, time_utilization_index, OverheadParams, Scheme,
};
use dms_core::oracle::{solve_be_central, solve_gbr_central, OracleLimits};
use dms_core::schedule::{ActionProfile, DemandSet};
use dms_core::supervisor::{aimd_step, run_dms, time_squeeze, AimdState, ChannelFn, RunRecord};
use dms_core::{DmsError, Network};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{be_baseline, gbr_baseline, BeBaseline, GbrBaseline, GbrParams, Layout};
use crate::config::{Baseline, ScenarioConfig};
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, file_name, join, read_csv, write_csv, write_json};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GenTopology,
    RunGbr,
    RunBe,
    RunDms,
    Oracle,
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenTopology => "gen-topology",
            Command::RunGbr => "run-gbr",
            Command::RunBe => "run-be",
            Command::RunDms => "run-dms",
            Command::Oracle => "oracle",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub epochs: Option<usize>,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: Command,
    pub version: String,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
    pub per_seed: Vec<serde_json::Value>,
}

/// Loads the config, applies overrides and runs `cmd` into `out`.
pub fn run(cmd: Command, config_path: &Path, out: &Path, ov: &Overrides) -> Result<Summary> {
    let mut cfg = ScenarioConfig::load(config_path)?;
    if let Some(s) = &ov.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(e) = ov.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    run_config(cmd, &cfg, out, ov.trace)
}

pub fn run_config(cmd: Command, cfg: &ScenarioConfig, out: &Path, trace: bool) -> Result<Summary> {
    ensure_dir(out)?;
    let mut files = Vec::new();
    let per_seed = match cmd {
        Command::GenTopology => gen_topology(cfg, out, &mut files)?,
        Command::RunGbr => run_gbr(cfg, out, trace, &mut files)?,
        Command::RunBe => run_be(cfg, out, trace, &mut files)?,
        Command::RunDms => run_dms_cmd(cfg, out, trace, &mut files)?,
        Command::Oracle => oracle(cfg, out, &mut files)?,
        Command::Report => report(cfg, out, &mut files)?,
    };
    let summary = Summary {
        command: cmd,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds: cfg.seeds.clone(),
        files: files.iter().map(|p: &PathBuf| file_name(p)).collect(),
        per_seed,
    };
    write_json(&out.join(format!("summary_{}.json", cmd.name())), &summary)?;
    Ok(summary)
}

fn per_seed<T: Send>(cfg: &ScenarioConfig, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    cfg.seeds.par_iter().map(|s| f(*s)).collect()
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

fn mbps(bits: f64, cfg: &ScenarioConfig) -> f64 {
    bits / (cfg.W as f64 * cfg.tti_s()) / 1e6
}

fn capped_gbr_bits(network: &Network, demands: &DemandSet, profile: &ActionProfile) -> f64 {
    let served = network.realized_volume(profile);
    network
        .bs_ids()
        .flat_map(|b| network.gbr_users(b).to_vec())
        .map(|u| served.get(&u).copied().unwrap_or(0.0).min(demands.get(u)))
        .sum()
}

fn gen_topology(cfg: &ScenarioConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<serde_json::Value>> {
    let built = per_seed(cfg, |s| {
        let sc = Scenario::build(cfg, s)?;
        let gains = sc.gains(0)?;
        Ok((s, sc.topology, gains))
    })?;
    let mut summary = Vec::new();
    for (s, topo, gains) in built {
        let tp = out.join(format!("topology_seed{s}.json"));
        let gp = out.join(format!("gains_seed{s}.json"));
        std::fs::write(&tp, topo.to_json()).map_err(|e| HarnessError::io(&tp, e))?;
        std::fs::write(&gp, gains.to_json()).map_err(|e| HarnessError::io(&gp, e))?;
        summary.push(serde_json::json!({ "seed": s, "n_bs": topo.n_bs(), "n_users": topo.n_users() }));
        files.push(tp);
        files.push(gp);
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrRow {
    pub seed: u64,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    pub probes: usize,
    pub total_penalty: f64,
    pub gbr_infeasible: bool,
    pub gbr_throughput_mbps: f64,
    pub utilization_index: f64,
    pub gamma_rounds: usize,
    pub gamma_converged: bool,
    pub gbr_usage: String,
    pub gbr_patterns: String,
}

fn run_gbr(cfg: &ScenarioConfig, out: &Path, trace: bool, files: &mut Vec<PathBuf>) -> Result<Vec<serde_json::Value>> {
    let results = per_seed(cfg, |s| {
        let sc = Scenario::build(cfg, s)?;
        let d = sc.demands.at(0);
        let scen = GammaScenario {
            network: &sc.network,
            demands: d,
            alpha: cfg.alpha,
            penalty_mode: cfg.penalty_mode,
            br: sc.br_config(),
        };
        let gamma = sc.gamma_config(false);
        match time_squeeze(&scen, cfg.W, &gamma) {
            Ok(r) => {
                let usage = r.profile.usage();
                let row = GbrRow {
                    seed: s,
                    t: r.t,
                    z: cfg.W - r.t,
                    probes: r.probes.len(),
                    total_penalty: scen.unmet_demand(&r.profile),
                    gbr_infeasible: false,
                    gbr_throughput_mbps: mbps(capped_gbr_bits(&sc.network, d, &r.profile), cfg),
                    utilization_index: time_utilization_index(&usage, r.t)?,
                    gamma_rounds: r.probes.iter().map(|p| p.rounds).sum(),
                    gamma_converged: r.probes.iter().all(|p| p.converged),
                    gbr_usage: join(&usage),
                    gbr_patterns: join(&r.profile.patterns().iter().map(|p| p.to_hex()).collect::<Vec<_>>()),
                };
                let tr = if trace {
                    // cold-start Γ at the final T with move recording
                    let gcfg = sc.gamma_config(true);
                    let g = run_gamma(&scen, r.t, &gcfg)?;
                    Some(serde_json::json!({ "probes": r.probes, "moves": g.trace }))
                } else {
                    None
                };
                Ok((row, tr))
            }
            Err(DmsError::Infeasible { horizon, penalty }) => {
                let row = GbrRow {
                    seed: s,
                    t: horizon,
                    z: 0,
                    probes: 1,
                    total_penalty: penalty,
                    gbr_infeasible: true,
                    gbr_throughput_mbps: 0.0,
                    utilization_index: 1.0,
                    gamma_rounds: 0,
                    gamma_converged: false,
                    gbr_usage: join(&vec![horizon; cfg.n_bs]),
                    gbr_patterns: String::new(),
                };
                Ok((row, None))
            }
            Err(e) => Err(e.into()),
        }
    })?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (row, tr) in results {
        if let Some(tr) = tr {
            let p = out.join(format!("trace_gbr_seed{}.json", row.seed));
            write_json(&p, &tr)?;
            files.push(p);
        }
        summary.push(to_value(&row)?);
        rows.push(row);
    }
    let p = out.join("gbr.csv");
    write_csv(&p, &rows)?;
    files.insert(0, p);
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeRow {
    pub seed: u64,
    pub epoch: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    pub eta: f64,
    pub eta_hat: f64,
    pub per_bs_eta: String,
    #[serde(rename = "M")]
    pub m: String,
    pub omega_rounds: usize,
    pub omega_converged: bool,
    pub be_throughput_mbps: f64,
    pub be_usage: String,
}

/// Best-effort only: all `W` TTIs go to Ω, with AIMD between epochs.
fn run_be(cfg: &ScenarioConfig, out: &Path, trace: bool, files: &mut Vec<PathBuf>) -> Result<Vec<serde_json::Value>> {
    if cfg.be_users_per_bs == 0 {
        return Err(HarnessError::Config("run-be needs be_users_per_bs ≥ 1".into()));
    }
    let results = per_seed(cfg, |s| {
        let sc = Scenario::build(cfg, s)?;
        let mut aimd = AimdState::new(cfg.n_bs, cfg.W);
        let mut prev: Option<ActionProfile> = None;
        let mut rows = Vec::new();
        let mut traces = Vec::new();
        for epoch in 0..cfg.epochs {
            let net = sc.network_at(epoch)?;
            let ocfg = OmegaConfig {
                deadline: Some(cfg.deadline_policy.rounds(cfg.n_bs)),
                be: sc.be_config(),
                initial: prev.take(),
                trace,
            };
            let o = run_omega(&net, cfg.W, &aimd.m, &ocfg)?;
            rows.push(BeRow {
                seed: s,
                epoch,
                z: cfg.W,
                eta: o.eta_total(),
                eta_hat: o.utility(),
                per_bs_eta: join(&o.per_bs_eta),
                m: join(&aimd.m),
                omega_rounds: o.rounds,
                omega_converged: o.converged,
                be_throughput_mbps: mbps(o.per_user_volume.values().sum(), cfg),
                be_usage: join(&o.profile.usage()),
            });
            aimd_step(&mut aimd, &o.per_bs_eta);
            if trace {
                traces.push(serde_json::json!({ "epoch": epoch, "rounds": o.trace }));
            }
            prev = Some(o.profile);
        }
        Ok((s, rows, traces))
    })?;
    let mut all = Vec::new();
    let mut summary = Vec::new();
    for (s, rows, traces) in results {
        if trace {
            let p = out.join(format!("trace_be_seed{s}.json"));
            write_json(&p, &traces)?;
            files.push(p);
        }
        let best = rows.iter().map(|r| r.eta_hat).fold(0.0, f64::max);
        summary.push(serde_json::json!({ "seed": s, "best_eta_hat": best, "final": rows.last() }));
        all.extend(rows);
    }
    let p = out.join("be.csv");
    write_csv(&p, &all)?;
    files.insert(0, p);
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmsRow {
    pub scheme: String,
    pub seed: u64,
    pub epoch: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    pub total_penalty: f64,
    pub gbr_infeasible: bool,
    pub gbr_throughput_mbps: f64,
    pub be_throughput_mbps: f64,
    pub eta: f64,
    pub eta_hat: f64,
    pub per_bs_eta: String,
    #[serde(rename = "M")]
    pub m: String,
    pub squeeze_probes: usize,
    pub squeeze_done: bool,
    pub gamma_rounds: usize,
    pub gamma_converged: bool,
    pub omega_rounds: usize,
    pub omega_converged: bool,
    pub utilization_index: f64,
    #[serde(rename = "I_C")]
    pub ic_bits: u64,
    #[serde(rename = "I_B")]
    pub ib_bits: u64,
    pub gbr_usage: String,
    pub be_usage: String,
    pub gbr_patterns: String,
}

impl DmsRow {
    pub fn from_record(seed: u64, r: &RunRecord) -> Self {
        DmsRow {
            scheme: "dms".into(),
            seed,
            epoch: r.epoch,
            t: r.t,
            z: r.z,
            total_penalty: r.total_penalty,
            gbr_infeasible: r.gbr_infeasible,
            gbr_throughput_mbps: r.gbr_throughput_mbps,
            be_throughput_mbps: r.be_throughput_mbps,
            eta: r.eta,
            eta_hat: r.eta_hat,
            per_bs_eta: join(&r.per_bs_eta),
            m: join(&r.m),
            squeeze_probes: r.squeeze_probes,
            squeeze_done: r.squeeze_done,
            gamma_rounds: r.gamma_rounds,
            gamma_converged: r.gamma_converged,
            omega_rounds: r.omega_rounds,
            omega_converged: r.omega_converged,
            utilization_index: r.utilization_index,
            ic_bits: r.ic_bits,
            ib_bits: r.ib_bits,
            gbr_usage: join(&r.gbr_usage),
            be_usage: join(&r.be_usage),
            gbr_patterns: join(&r.gbr_patterns.iter().map(|p| p.to_hex()).collect::<Vec<_>>()),
        }
    }

    /// Guaranteed-rate columns from the baseline over all `W` TTIs; `T`, `Z`
    /// from the DMS epoch; best-effort columns from the baseline on that `Z`.
    fn from_baseline(name: &str, dms: &RunRecord, seed: u64, g: &GbrBaseline, b: Option<&BeBaseline>, cfg: &ScenarioConfig) -> Result<Self> {
        let n = g.usage.len();
        let zero = vec![0.0; n];
        Ok(DmsRow {
            scheme: name.into(),
            seed,
            epoch: dms.epoch,
            t: dms.t,
            z: dms.z,
            total_penalty: g.unmet,
            gbr_infeasible: g.unmet > 0.0,
            gbr_throughput_mbps: mbps(g.capped_bits, cfg),
            be_throughput_mbps: mbps(b.map_or(0.0, |b| b.bits), cfg),
            eta: b.map_or(0.0, |b| b.per_bs_eta.iter().sum()),
            eta_hat: b.map_or(0.0, |b| b.utility()),
            per_bs_eta: join(b.map_or(&zero, |b| &b.per_bs_eta)),
            m: join(&b.map_or(vec![0; n], |b| b.share.clone())),
            squeeze_probes: 0,
            squeeze_done: true,
            gamma_rounds: 0,
            gamma_converged: true,
            omega_rounds: 0,
            omega_converged: true,
            utilization_index: time_utilization_index(&g.share, cfg.W)?,
            ic_bits: 0,
            ib_bits: 0,
            gbr_usage: join(&g.usage),
            be_usage: join(&b.map_or(vec![0; n], |b| b.usage.clone())),
            gbr_patterns: String::new(),
        })
    }
}

fn baseline_name(b: Baseline) -> &'static str {
    match b {
        Baseline::None => "none",
        Baseline::Legacy => "legacy",
        Baseline::Reuse3 => "reuse3",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRow {
    pub scheme: String,
    pub seed: u64,
    pub user: usize,
    pub bs: usize,
    pub class: String,
    pub mbps: f64,
}

fn user_rows(scheme: &str, seed: u64, net: &Network, vol: &BTreeMap<UserId, f64>, cfg: &ScenarioConfig) -> Vec<UserRow> {
    let mut rows = Vec::new();
    for b in net.bs_ids() {
        for (class, users) in [("gbr", net.gbr_users(b)), ("be", net.be_users(b))] {
            for u in users {
                rows.push(UserRow {
                    scheme: scheme.into(),
                    seed,
                    user: u.0,
                    bs: b.0,
                    class: class.into(),
                    mbps: mbps(vol.get(u).copied().unwrap_or(0.0), cfg),
                });
            }
        }
    }
    rows
}

/// One seed of the full loop plus the configured baseline.
pub fn dms_seed(cfg: &ScenarioConfig, seed: u64) -> Result<(Vec<DmsRow>, Vec<UserRow>, Vec<RunRecord>)> {
    let sc = Scenario::build(cfg, seed)?;
    let dcfg = sc.dms_config(cfg.epochs);
    let chan = |e: usize| sc.rates_at(e);
    let channel: Option<&ChannelFn> = if sc.time_varying() { Some(&chan) } else { None };
    let recs = run_dms(&sc.network, &sc.demands, &dcfg, channel)?;
    let mut rows: Vec<DmsRow> = recs.iter().map(|r| DmsRow::from_record(seed, r)).collect();
    let last_net = sc.network_at(cfg.epochs - 1)?;
    let mut users = user_rows("dms", seed, &last_net, &recs.last().expect("epochs ≥ 1").user_volume, cfg);

    if cfg.baseline != Baseline::None {
        let layout = match cfg.baseline {
            Baseline::Reuse3 => Layout::Reuse3(&sc.topology.bs_axial),
            _ => Layout::Legacy,
        };
        let name = baseline_name(cfg.baseline);
        let mut last_volume = BTreeMap::new();
        for rec in &recs {
            let net = sc.network_at(rec.epoch)?;
            let p = GbrParams {
                network: &net,
                demands: sc.demands.at(rec.epoch),
                w: cfg.W,
                alpha: cfg.alpha,
                penalty_mode: cfg.penalty_mode,
                br: sc.br_config(),
            };
            let g = gbr_baseline(&p, layout)?;
            let b = if rec.z > 0 { Some(be_baseline(&net, rec.z, layout, &sc.be_config())?) } else { None };
            rows.push(DmsRow::from_baseline(name, rec, seed, &g, b.as_ref(), cfg)?);
            last_volume = g.user_volume;
            if let Some(b) = b {
                last_volume.extend(b.user_volume);
            }
        }
        users.extend(user_rows(name, seed, &last_net, &last_volume, cfg));
    }
    Ok((rows, users, recs))
}

fn run_dms_cmd(cfg: &ScenarioConfig, out: &Path, trace: bool, files: &mut Vec<PathBuf>) -> Result<Vec<serde_json::Value>> {
    let results = per_seed(cfg, |s| dms_seed(cfg, s).map(|r| (s, r)))?;
    let mut all_rows = Vec::new();
    let mut all_users = Vec::new();
    let mut summary = Vec::new();
    for (s, (rows, users, recs)) in results {
        if trace {
            let p = out.join(format!("trace_dms_seed{s}.json"));
            write_json(&p, &recs)?;
            files.push(p);
        }
        let dms: Vec<&DmsRow> = rows.iter().filter(|r| r.scheme == "dms").collect();
        let mean = |f: &dyn Fn(&DmsRow) -> f64| dms.iter().map(|r| f(r)).sum::<f64>() / dms.len() as f64;
        summary.push(serde_json::json!({
            "seed": s,
            "final_T": dms.last().map(|r| r.t),
            "mean_gbr_throughput_mbps": mean(&|r| r.gbr_throughput_mbps),
            "mean_be_throughput_mbps": mean(&|r| r.be_throughput_mbps),
            "best_eta_hat": dms.iter().map(|r| r.eta_hat).fold(0.0, f64::max),
            "all_gamma_converged": dms.iter().all(|r| r.gamma_converged),
        }));
        all_rows.extend(rows);
        all_users.extend(users);
    }
    let p = out.join("dms.csv");
    write_csv(&p, &all_rows)?;
    let u = out.join("user_rates.csv");
    write_csv(&u, &all_users)?;
    files.insert(0, u);
    files.insert(0, p);
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub seed: u64,
    pub oracle_l: usize,
    pub oracle_penalty: f64,
    pub oracle_mean_usage: f64,
    #[serde(rename = "dms_T")]
    pub dms_t: usize,
    pub dms_penalty: f64,
    pub dms_mean_usage: f64,
    #[serde(rename = "be_Z")]
    pub be_z: usize,
    pub oracle_utility: f64,
    pub dms_utility: f64,
    pub legacy_utility: f64,
}

fn mean_usize(v: &[usize]) -> f64 {
    v.iter().sum::<usize>() as f64 / v.len().max(1) as f64
}

/// Exact optimum vs. the distributed result on one tiny instance.
pub fn oracle_seed(cfg: &ScenarioConfig, seed: u64) -> Result<OracleRow> {
    let limits = OracleLimits::default();
    let sc = Scenario::build(cfg, seed)?;
    let net = &sc.network;
    let d = sc.demands.at(0);
    let central = solve_gbr_central(net, d, cfg.W, cfg.alpha, cfg.penalty_mode, &limits)?;
    let scen = GammaScenario { network: net, demands: d, alpha: cfg.alpha, penalty_mode: cfg.penalty_mode, br: sc.br_config() };
    let (dms_t, dms_penalty, dms_usage) = match time_squeeze(&scen, cfg.W, &sc.gamma_config(false)) {
        Ok(r) => (r.t, scen.unmet_demand(&r.profile), r.profile.usage()),
        Err(DmsError::Infeasible { horizon, penalty }) => (horizon, penalty, vec![horizon; cfg.n_bs]),
        Err(e) => return Err(e.into()),
    };
    let z = cfg.W - dms_t;
    let (mut oracle_utility, mut dms_utility, mut legacy_utility) = (0.0, 0.0, 0.0);
    if z > 0 && net.n_be_users() > 0 {
        oracle_utility = solve_be_central(net, z, &limits)?.utility;
        legacy_utility = be_baseline(net, z, Layout::Legacy, &sc.be_config())?.utility();
        let mut aimd = AimdState::new(cfg.n_bs, z);
        let mut prev = None;
        for _ in 0..cfg.epochs {
            let ocfg = OmegaConfig {
                deadline: Some(cfg.deadline_policy.rounds(cfg.n_bs)),
                be: sc.be_config(),
                initial: prev.take(),
                trace: false,
            };
            let o = run_omega(net, z, &aimd.m, &ocfg)?;
            dms_utility = f64::max(dms_utility, o.utility());
            aimd_step(&mut aimd, &o.per_bs_eta);
            prev = Some(o.profile);
        }
    }
    Ok(OracleRow {
        seed,
        oracle_l: central.l,
        oracle_penalty: central.total_penalty(),
        oracle_mean_usage: mean_usize(&central.per_bs_usage()),
        dms_t,
        dms_penalty,
        dms_mean_usage: mean_usize(&dms_usage),
        be_z: z,
        oracle_utility,
        dms_utility,
        legacy_utility,
    })
}

fn oracle(cfg: &ScenarioConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<serde_json::Value>> {
    let rows = per_seed(cfg, |s| oracle_seed(cfg, s))?;
    let p = out.join("oracle.csv");
    write_csv(&p, &rows)?;
    files.push(p);
    rows.iter().map(to_value).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub scheme: String,
    pub class: String,
    pub rate_mbps: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadRow {
    pub k: u64,
    pub n_users: u64,
    pub crossover_users: u64,
    pub central_ic_bits: u64,
    pub central_ib_bits: u64,
    pub dms_ic_bits: u64,
    pub dms_ib_bits: u64,
}

/// Overhead table for the scenario, and rate CDFs from a previous `run-dms`
/// in the same output directory when present.
fn report(cfg: &ScenarioConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<serde_json::Value>> {
    let n = cfg.n_bs as u64;
    let n_users = n * (cfg.users_per_bs + cfg.be_users_per_bs) as u64;
    let dms_path = out.join("dms.csv");
    let dms_rows: Vec<DmsRow> = if dms_path.exists() { read_csv(&dms_path)? } else { Vec::new() };

    let mut ks = vec![1, n, n * n];
    let observed: Vec<usize> = dms_rows.iter().filter(|r| r.scheme == "dms").map(|r| r.gamma_rounds).collect();
    if let Some(mx) = observed.iter().max() {
        ks.push(*mx as u64);
    }
    ks.sort_unstable();
    ks.dedup();
    let overhead: Vec<OverheadRow> = ks
        .iter()
        .map(|&k| {
            let p = OverheadParams { b_bits: cfg.B_bits, w: cfg.W as u64, n_bs: n, n_users, k: k.max(1) };
            let (cic, cib) = overhead_bits(&p, Scheme::Centralized);
            let (dic, dib) = overhead_bits(&p, Scheme::Dms);
            OverheadRow {
                k: p.k,
                n_users,
                crossover_users: crossover_users(&p),
                central_ic_bits: cic,
                central_ib_bits: cib,
                dms_ic_bits: dic,
                dms_ib_bits: dib,
            }
        })
        .collect();
    let op = out.join("overhead.csv");
    write_csv(&op, &overhead)?;
    files.push(op);

    let mut summary = Vec::new();
    let users_path = out.join("user_rates.csv");
    if users_path.exists() {
        let users: Vec<UserRow> = read_csv(&users_path)?;
        let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for u in users {
            groups.entry((u.scheme, u.class)).or_default().push(u.mbps);
        }
        let mut cdf_rows = Vec::new();
        for ((scheme, class), rates) in &groups {
            let cdf = rate_cdf(rates)?;
            summary.push(serde_json::json!({
                "scheme": scheme,
                "class": class,
                "users": rates.len(),
                "p10_mbps": cdf_quantile(&cdf, 0.1),
                "median_mbps": cdf_quantile(&cdf, 0.5),
                "mean_mbps": rates.iter().sum::<f64>() / rates.len() as f64,
            }));
            cdf_rows.extend(cdf.into_iter().map(|(r, f)| CdfRow {
                scheme: scheme.clone(),
                class: class.clone(),
                rate_mbps: r,
                fraction: f,
            }));
        }
        let cp = out.join("cdf.csv");
        write_csv(&cp, &cdf_rows)?;
        files.push(cp);
    }
    Ok(summary)
}
