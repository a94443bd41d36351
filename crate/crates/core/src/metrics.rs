//! Evaluation metrics and signalling overhead.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Bits per exchanged scalar (double precision).
pub const DEFAULT_B_BITS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadParams {
    pub b_bits: u64,
    pub w: u64,
    pub n_bs: u64,
    pub n_users: u64,
    /// Game rounds.
    pub k: u64,
}

impl OverheadParams {
    /// `k` defaults to `|N|²`.
    pub fn with_default_rounds(b_bits: u64, w: u64, n_bs: u64, n_users: u64) -> Self {
        OverheadParams { b_bits, w, n_bs, n_users, k: n_bs * n_bs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Centralized,
    Dms,
}

/// Signalling bits on the controller interface and on the inter-site interface.
pub fn overhead_bits(p: &OverheadParams, scheme: Scheme) -> (u64, u64) {
    match scheme {
        Scheme::Centralized => (p.b_bits * p.n_users * p.n_bs + p.w * p.n_bs, 0),
        Scheme::Dms => (2 * p.b_bits * p.n_bs, p.w * p.k * p.n_bs),
    }
}

/// Smallest user count for which the distributed scheme signals less:
/// `|U| > 1 + (W/B)(k−1)`, evaluated in integers.
pub fn crossover_users(p: &OverheadParams) -> u64 {
    (p.b_bits + p.w * p.k.saturating_sub(1)) / p.b_bits + 1
}

/// Mean over sites of used TTIs divided by the TTIs a legacy site uses.
pub fn time_utilization_index(per_bs_usage: &[usize], legacy_ttis: usize) -> Result<f64> {
    if legacy_ttis == 0 {
        return config("legacy TTI count must be positive");
    }
    if per_bs_usage.is_empty() {
        return config("no sites to average over");
    }
    let sum: f64 = per_bs_usage.iter().map(|u| *u as f64 / legacy_ttis as f64).sum();
    Ok(sum / per_bs_usage.len() as f64)
}

/// Empirical CDF as sorted `(rate, fraction ≤ rate)` steps.
pub fn rate_cdf(rates: &[f64]) -> Result<Vec<(f64, f64)>> {
    if rates.is_empty() {
        return config("rate CDF needs at least one sample");
    }
    if rates.iter().any(|r| r.is_nan()) {
        return config("rate samples must not be NaN");
    }
    let mut s = rates.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, r) in s.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *r => last.1 = f,
            _ => out.push((*r, f)),
        }
    }
    Ok(out)
}

/// Smallest sample whose cumulative fraction reaches `p`.
pub fn cdf_quantile(cdf: &[(f64, f64)], p: f64) -> Option<f64> {
    cdf.iter().find(|(_, f)| *f >= p - 1e-12).map(|(r, _)| *r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overhead_examples() {
        let p = OverheadParams { b_bits: 64, w: 70, n_bs: 7, n_users: 70, k: 3 };
        assert_eq!(overhead_bits(&p, Scheme::Centralized), (31850, 0));
        assert_eq!(overhead_bits(&p, Scheme::Dms), (896, 1470));
    }

    #[test]
    fn crossover_examples() {
        assert_eq!(crossover_users(&OverheadParams::with_default_rounds(64, 70, 7, 0)), 54);
        assert_eq!(crossover_users(&OverheadParams::with_default_rounds(64, 70, 28, 0)), 858);
        assert_eq!(crossover_users(&OverheadParams { b_bits: 64, w: 70, n_bs: 7, n_users: 0, k: 1 }), 2);
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(time_utilization_index(&[70, 70], 70).unwrap(), 1.0);
        assert_eq!(time_utilization_index(&[35, 70], 70).unwrap(), 0.75);
        assert!((time_utilization_index(&[10; 7], 70).unwrap() - 1.0 / 7.0).abs() < 1e-12);
        assert!(time_utilization_index(&[1], 0).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(rate_cdf(&[3.0]).unwrap(), vec![(3.0, 1.0)]);
        assert_eq!(
            rate_cdf(&[4.0, 2.0, 1.0, 3.0]).unwrap(),
            vec![(1.0, 0.25), (2.0, 0.5), (3.0, 0.75), (4.0, 1.0)]
        );
        assert_eq!(rate_cdf(&[1.0, 1.0]).unwrap(), vec![(1.0, 1.0)]);
        assert!(rate_cdf(&[]).is_err());
    }

    #[test]
    fn cdf_decile_of_uniform_grid() {
        // samples k/n for k = 1..=n: the 10th percentile is 0.1
        let n = 1000;
        let s: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
        let q = cdf_quantile(&rate_cdf(&s).unwrap(), 0.1).unwrap();
        assert!((q - 0.1).abs() <= 1.0 / n as f64);
    }
}
