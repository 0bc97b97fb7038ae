//! Downlink rates under power-domain NOMA and one-layer RSMA.
//!
//! Users are decoded in the order produced by [`order_users`]: the Room-1
//! block first, strongest to weakest, then the Room-2 block. All SINR
//! expressions carry the `e / 2π` factor of the intensity-modulated channel
//! and rates are `B log2(1 + SINR)` in bit/s.

use std::f64::consts::{E, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelGain;
use crate::geometry::Room;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AccessError {
    #[error("NOMA power ratio must lie in (0.5, 1], got {0}")]
    NomaRatio(f64),
    #[error("RSMA common-stream ratio must lie in (0, 1), got {0}")]
    RsmaRatio(f64),
    #[error("at least one user is required")]
    NoUsers,
}

/// `e / 2π`, the capacity-bound factor for intensity modulation.
pub const IM_FACTOR: f64 = E / (2.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// System bandwidth (Hz).
    pub bandwidth: f64,
    /// Noise power spectral density (A²/Hz).
    pub noise_psd: f64,
    /// Photodiode responsivity (A/W).
    pub responsivity: f64,
    /// AP optical transmit power (W).
    pub optical_power: f64,
    /// Electrical-to-optical conversion ratio.
    pub conversion_ratio: f64,
    /// DC bias current (A); removed at the receiver, kept for bookkeeping.
    pub dc_bias: f64,
}

impl LinkBudget {
    /// P_S = (p / q)².
    pub fn electrical_power(&self) -> f64 {
        let r = self.optical_power / self.conversion_ratio;
        r * r
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    pub fn rate(&self, sinr: f64) -> f64 {
        self.bandwidth * (1.0 + sinr).log2()
    }
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            bandwidth: 200e6,
            noise_psd: 1e-21,
            responsivity: 0.53,
            optical_power: 3.0,
            conversion_ratio: 3.0,
            dc_bias: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaConfig {
    pub mu: f64,
}

impl Default for NomaConfig {
    fn default() -> Self {
        Self { mu: 0.6 }
    }
}

/// How the private-stream pool is split between users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivateAllocation {
    #[default]
    Equal,
    NomaAlike,
    Random,
}

impl PrivateAllocation {
    pub fn label(self) -> &'static str {
        match self {
            PrivateAllocation::Equal => "equal",
            PrivateAllocation::NomaAlike => "noma_alike",
            PrivateAllocation::Random => "random",
        }
    }
}

/// How the common stream enters the RSMA sum rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommonAccounting {
    /// Every user's own common-stream decode rate is summed.
    #[default]
    PerUserDecode,
    /// The common stream is counted once, at the rate every user can decode.
    AllocatedShare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsmaConfig {
    pub mu: f64,
    /// SIC threshold (W).
    pub p_tol: f64,
    pub strategy: PrivateAllocation,
    /// Ratio used by [`PrivateAllocation::NomaAlike`].
    pub noma_alike_mu: f64,
    pub accounting: CommonAccounting,
}

impl Default for RsmaConfig {
    fn default() -> Self {
        Self {
            mu: 0.6,
            p_tol: 0.01,
            strategy: PrivateAllocation::Equal,
            noma_alike_mu: 0.6,
            accounting: CommonAccounting::default(),
        }
    }
}

/// c_u = μ(1−μ)^(u−1) for u < U and (1−μ)^(U−1) for the last user.
pub fn noma_coefficients(users: usize, mu: f64) -> Result<Vec<f64>, AccessError> {
    if !(mu > 0.5 && mu <= 1.0) {
        return Err(AccessError::NomaRatio(mu));
    }
    if users == 0 {
        return Err(AccessError::NoUsers);
    }
    let mut c: Vec<f64> = (0..users - 1).map(|u| mu * (1.0 - mu).powi(u as i32)).collect();
    c.push((1.0 - mu).powi(users as i32 - 1));
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedUser {
    /// Position in the caller's user list.
    pub index: usize,
    pub room: Room,
    pub gain: ChannelGain,
}

impl OrderedUser {
    /// Detected amplitude per unit transmit amplitude, `R_PD · exp(ΓD) · H`.
    fn amplitude(&self, responsivity: f64) -> f64 {
        responsivity * self.gain.amp_factor * self.gain.h
    }
}

/// Users in decoding order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedUsers {
    pub users: Vec<OrderedUser>,
}

impl OrderedUsers {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Original indices in decoding order.
    pub fn permutation(&self) -> Vec<usize> {
        self.users.iter().map(|u| u.index).collect()
    }

    fn gains_sq(&self, responsivity: f64) -> Vec<f64> {
        self.users
            .iter()
            .map(|u| {
                let a = u.amplitude(responsivity);
                a * a
            })
            .collect()
    }
}

/// Room-1 block then Room-2 block, each sorted by descending effective
/// gain; ties keep the input order.
pub fn order_users(gains: &[ChannelGain], rooms: &[Room]) -> OrderedUsers {
    assert_eq!(gains.len(), rooms.len(), "one room per gain");
    let mut users: Vec<OrderedUser> = gains
        .iter()
        .zip(rooms)
        .enumerate()
        .map(|(index, (&gain, &room))| OrderedUser { index, room, gain })
        .collect();
    users.sort_by(|a, b| {
        let block = |r: Room| if r == Room::One { 0 } else { 1 };
        block(a.room)
            .cmp(&block(b.room))
            .then(b.gain.effective().total_cmp(&a.gain.effective()))
            .then(a.index.cmp(&b.index))
    });
    OrderedUsers { users }
}

/// Signal-to-interference-plus-noise ratio including the `e / 2π` factor.
pub fn sinr(signal: f64, interference: f64, noise: f64) -> f64 {
    let den = interference + noise;
    if signal == 0.0 {
        return 0.0;
    }
    IM_FACTOR * signal / den
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomaRates {
    /// Rate of each user in decoding order (bit/s).
    pub per_user: Vec<f64>,
    pub sum: f64,
}

/// NOMA sum rate. The first decoded user sees no interference; every later
/// user is interfered by the streams of all users decoded before it.
pub fn noma_sum_rate(
    ordered: &OrderedUsers,
    budget: &LinkBudget,
    cfg: &NomaConfig,
) -> Result<NomaRates, AccessError> {
    if ordered.is_empty() {
        return Err(AccessError::NoUsers);
    }
    let c = noma_coefficients(ordered.len(), cfg.mu)?;
    let ps = budget.electrical_power();
    let noise = budget.noise_power();
    let g2 = ordered.gains_sq(budget.responsivity);
    let mut earlier = 0.0;
    let per_user: Vec<f64> = c
        .iter()
        .zip(&g2)
        .map(|(&ci, &g)| {
            let r = budget.rate(sinr(g * ci * ps, g * earlier * ps, noise));
            earlier += ci;
            r
        })
        .collect();
    let sum = per_user.iter().sum();
    Ok(NomaRates { per_user, sum })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    /// Common-stream power P_0 (W).
    pub common: f64,
    /// Private-stream powers in decoding order (W).
    pub private: Vec<f64>,
}

impl PowerSplit {
    pub fn total(&self) -> f64 {
        self.common + self.private.iter().sum::<f64>()
    }
}

/// Splits P_S into the common stream (μ P_S) and the private pool.
pub fn rsma_power_split<R: Rng + ?Sized>(
    budget: &LinkBudget,
    cfg: &RsmaConfig,
    users: usize,
    rng: &mut R,
) -> Result<PowerSplit, AccessError> {
    if !(cfg.mu > 0.0 && cfg.mu < 1.0) {
        return Err(AccessError::RsmaRatio(cfg.mu));
    }
    if users == 0 {
        return Err(AccessError::NoUsers);
    }
    let ps = budget.electrical_power();
    let common = cfg.mu * ps;
    let pool = ps - common;
    let private = match cfg.strategy {
        PrivateAllocation::Equal => vec![pool / users as f64; users],
        PrivateAllocation::NomaAlike => noma_coefficients(users, cfg.noma_alike_mu)?
            .into_iter()
            .map(|c| c * pool)
            .collect(),
        PrivateAllocation::Random => {
            // uniform point on the simplex via normalized exponentials
            let w: Vec<f64> = (0..users).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| pool * x / s).collect()
        }
    };
    Ok(PowerSplit { common, private })
}

/// Per-user check of the SIC condition
/// `P_0 δ_u − (Σ P_j) δ_u ≥ P_tol`, `δ_u = |H_u|² / N_o`, with `H_u` the
/// effective gain.
pub fn rsma_sic_feasible(split: &PowerSplit, gains: &[f64], noise_psd: f64, p_tol: f64) -> Vec<bool> {
    let private: f64 = split.private.iter().sum();
    gains
        .iter()
        .map(|h| {
            let delta = h * h / noise_psd;
            split.common * delta - private * delta >= p_tol
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonRate {
    /// Common-stream decode rate of each user in decoding order.
    pub per_user_decode: Vec<f64>,
    /// Rate at which every user can decode the common stream.
    pub common_rate: f64,
    /// Decoding position attaining the minimum.
    pub bottleneck: usize,
}

pub fn rsma_common_rate(ordered: &OrderedUsers, budget: &LinkBudget, split: &PowerSplit) -> CommonRate {
    let noise = budget.noise_power();
    let private: f64 = split.private.iter().sum();
    let per_user_decode: Vec<f64> = ordered
        .gains_sq(budget.responsivity)
        .into_iter()
        .map(|g| budget.rate(sinr(g * split.common, g * private, noise)))
        .collect();
    let (bottleneck, common_rate) = per_user_decode
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, r)| if r < best.1 { (i, r) } else { best });
    CommonRate {
        per_user_decode,
        common_rate: if common_rate.is_finite() { common_rate } else { 0.0 },
        bottleneck,
    }
}

/// Private-stream rates in decoding order; the other private streams are
/// treated as noise after the common stream is removed.
pub fn rsma_private_rates(ordered: &OrderedUsers, budget: &LinkBudget, split: &PowerSplit) -> Vec<f64> {
    let noise = budget.noise_power();
    let total: f64 = split.private.iter().sum();
    ordered
        .gains_sq(budget.responsivity)
        .into_iter()
        .zip(&split.private)
        .map(|(g, &p)| budget.rate(sinr(g * p, g * (total - p), noise)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsmaRates {
    pub sum: f64,
    pub common: CommonRate,
    pub private: Vec<f64>,
    /// Common-stream throughput counted in `sum`.
    pub common_contribution: f64,
    pub sic_feasible: Vec<bool>,
}

pub fn rsma_sum_rate(
    ordered: &OrderedUsers,
    budget: &LinkBudget,
    cfg: &RsmaConfig,
    split: &PowerSplit,
) -> Result<RsmaRates, AccessError> {
    if ordered.is_empty() {
        return Err(AccessError::NoUsers);
    }
    let common = rsma_common_rate(ordered, budget, split);
    let private = rsma_private_rates(ordered, budget, split);
    let common_contribution = match cfg.accounting {
        CommonAccounting::PerUserDecode => common.per_user_decode.iter().sum(),
        CommonAccounting::AllocatedShare => common.common_rate,
    };
    let effective: Vec<f64> = ordered.users.iter().map(|u| u.gain.effective()).collect();
    let sic_feasible = rsma_sic_feasible(split, &effective, budget.noise_psd, cfg.p_tol);
    Ok(RsmaRates {
        sum: common_contribution + private.iter().sum::<f64>(),
        common,
        private,
        common_contribution,
        sic_feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(h: f64) -> ChannelGain {
        ChannelGain { h, amp_factor: 1.0 }
    }

    fn rooms1(n: usize) -> Vec<Room> {
        vec![Room::One; n]
    }

    #[test]
    fn noma_coefficient_tables() {
        let c = noma_coefficients(4, 0.6).unwrap();
        let want = [0.6, 0.24, 0.096, 0.064];
        for (a, b) in c.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(c.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_eq!(noma_coefficients(1, 0.6).unwrap(), vec![1.0]);
        let two = noma_coefficients(2, 0.6).unwrap();
        assert_abs_diff_eq!(two[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(two[1], 0.4, epsilon = 1e-15);
        assert_eq!(noma_coefficients(3, 0.5), Err(AccessError::NomaRatio(0.5)));
        assert_eq!(noma_coefficients(3, 1.01), Err(AccessError::NomaRatio(1.01)));
    }

    #[test]
    fn ordering_rules() {
        let o = order_users(&[g(3.0), g(1.0), g(2.0)], &rooms1(3));
        assert_eq!(o.permutation(), vec![0, 2, 1]);
        let o = order_users(&[g(1.0), g(1.0), g(1.0)], &rooms1(3));
        assert_eq!(o.permutation(), vec![0, 1, 2]);
        let o = order_users(
            &[g(9.0), g(0.1), g(5.0), g(0.2)],
            &[Room::Two, Room::One, Room::Two, Room::One],
        );
        assert_eq!(o.permutation(), vec![3, 1, 0, 2]);
    }

    #[test]
    fn ordering_uses_effective_gain() {
        let a = ChannelGain { h: 1.0, amp_factor: 2.0 };
        let b = ChannelGain { h: 1.5, amp_factor: 1.0 };
        let o = order_users(&[b, a], &[Room::Two, Room::Two]);
        assert_eq!(o.permutation(), vec![1, 0]);
    }

    #[test]
    fn single_user_unit_sinr() {
        let budget = LinkBudget::default();
        let ps = budget.electrical_power();
        // (R H)² P_S = N_o B · 2π / e
        let h = (budget.noise_power() / IM_FACTOR / ps).sqrt() / budget.responsivity;
        let o = order_users(&[g(h)], &rooms1(1));
        let r = noma_sum_rate(&o, &budget, &NomaConfig::default()).unwrap();
        assert_relative_eq!(r.sum, 200e6, max_relative = 1e-12);
    }

    #[test]
    fn zero_gains_give_zero_rates() {
        let budget = LinkBudget::default();
        let o = order_users(&[g(0.0), g(0.0), g(0.0)], &rooms1(3));
        assert_eq!(noma_sum_rate(&o, &budget, &NomaConfig::default()).unwrap().sum, 0.0);
        let cfg = RsmaConfig::default();
        let split = rsma_power_split(&budget, &cfg, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(rsma_sum_rate(&o, &budget, &cfg, &split).unwrap().sum, 0.0);
    }

    #[test]
    fn noma_two_user_hand_evaluation() {
        let budget = LinkBudget::default();
        let (h1, h2) = (3.0e-6, 1.2e-6);
        let o = order_users(
            &[ChannelGain { h: h2, amp_factor: 1.01 }, g(h1)],
            &[Room::Two, Room::One],
        );
        let r = noma_sum_rate(&o, &budget, &NomaConfig { mu: 0.6 }).unwrap();
        let ps = 1.0;
        let nb = 1e-21 * 200e6;
        let k = std::f64::consts::E / (2.0 * PI);
        let s1 = (0.53 * h1).powi(2) * 0.6 * ps;
        let r1 = 200e6 * (1.0 + k * s1 / nb).log2();
        let a2 = (0.53 * 1.01 * h2).powi(2);
        let r2 = 200e6 * (1.0 + k * a2 * 0.4 * ps / (a2 * 0.6 * ps + nb)).log2();
        assert_relative_eq!(r.per_user[0], r1, max_relative = 1e-9);
        assert_relative_eq!(r.per_user[1], r2, max_relative = 1e-9);
        assert_relative_eq!(r.sum, r1 + r2, max_relative = 1e-9);
    }

    #[test]
    fn power_split_strategies() {
        let budget = LinkBudget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let eq = rsma_power_split(&budget, &RsmaConfig::default(), 4, &mut rng).unwrap();
        assert_abs_diff_eq!(eq.common, 0.6, epsilon = 1e-15);
        for p in &eq.private {
            assert_abs_diff_eq!(*p, 0.1, epsilon = 1e-15);
        }
        let cfg = RsmaConfig {
            strategy: PrivateAllocation::NomaAlike,
            ..Default::default()
        };
        let na = rsma_power_split(&budget, &cfg, 4, &mut rng).unwrap();
        for (p, c) in na.private.iter().zip([0.6, 0.24, 0.096, 0.064]) {
            assert_abs_diff_eq!(*p, 0.4 * c, epsilon = 1e-15);
        }
        let cfg = RsmaConfig {
            strategy: PrivateAllocation::Random,
            ..Default::default()
        };
        let rn = rsma_power_split(&budget, &cfg, 4, &mut rng).unwrap();
        assert_abs_diff_eq!(rn.private.iter().sum::<f64>(), 0.4, epsilon = 1e-12);
        assert!(rn.private.iter().all(|p| *p > 0.0));
        let bad = RsmaConfig {
            mu: 1.0,
            ..Default::default()
        };
        assert_eq!(
            rsma_power_split(&budget, &bad, 4, &mut rng),
            Err(AccessError::RsmaRatio(1.0))
        );
    }

    #[test]
    fn sic_feasibility_edges() {
        let split = PowerSplit {
            common: 0.5,
            private: vec![0.25, 0.25],
        };
        assert_eq!(rsma_sic_feasible(&split, &[1e-6, 1e-5], 1e-21, 0.01), vec![false, false]);
        let split = PowerSplit {
            common: 0.6,
            private: vec![0.2, 0.2],
        };
        assert_eq!(rsma_sic_feasible(&split, &[0.0, 1e-6], 1e-21, 0.01), vec![false, true]);
    }

    #[test]
    fn common_rate_cases() {
        let budget = LinkBudget::default();
        let o = order_users(&[g(2e-6), g(1e-6), g(3e-6)], &rooms1(3));
        let zero = PowerSplit {
            common: 0.0,
            private: vec![1.0 / 3.0; 3],
        };
        assert_eq!(rsma_common_rate(&o, &budget, &zero).common_rate, 0.0);

        let split = PowerSplit {
            common: 0.6,
            private: vec![0.4 / 3.0; 3],
        };
        let c = rsma_common_rate(&o, &budget, &split);
        let min = c.per_user_decode.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(c.common_rate, min);
        // weakest user is decoded last and is the bottleneck
        assert_eq!(o.users[c.bottleneck].index, 1);

        let single = order_users(&[g(2e-6)], &rooms1(1));
        let s1 = PowerSplit {
            common: 0.6,
            private: vec![0.4],
        };
        let c1 = rsma_common_rate(&single, &budget, &s1);
        assert_eq!(c1.common_rate, c1.per_user_decode[0]);
    }

    #[test]
    fn private_rate_cases() {
        let budget = LinkBudget::default();
        let single = order_users(&[g(2e-6)], &rooms1(1));
        let s = PowerSplit {
            common: 0.6,
            private: vec![0.4],
        };
        let r = rsma_private_rates(&single, &budget, &s);
        let want = budget.rate(IM_FACTOR * (0.53 * 2e-6f64).powi(2) * 0.4 / budget.noise_power());
        assert_relative_eq!(r[0], want, max_relative = 1e-12);

        let two = order_users(&[g(3e-6), ChannelGain { h: 1e-6, amp_factor: 1.002 }], &[Room::One, Room::Two]);
        let s = PowerSplit {
            common: 0.6,
            private: vec![0.0, 0.4],
        };
        let r = rsma_private_rates(&two, &budget, &s);
        assert_eq!(r[0], 0.0);
        let a = (0.53 * 1.002 * 1e-6f64).powi(2);
        let k = std::f64::consts::E / (2.0 * PI);
        let want = 200e6 * (1.0 + k * a * 0.4 / (a * 0.0 + 2e-13)).log2();
        assert_relative_eq!(r[1], want, max_relative = 1e-9);

        let s = PowerSplit {
            common: 0.6,
            private: vec![0.15, 0.25],
        };
        let r = rsma_private_rates(&two, &budget, &s);
        let a1 = (0.53 * 3e-6f64).powi(2);
        let w1 = 200e6 * (1.0 + k * a1 * 0.15 / (a1 * 0.25 + 2e-13)).log2();
        let w2 = 200e6 * (1.0 + k * a * 0.25 / (a * 0.15 + 2e-13)).log2();
        assert_relative_eq!(r[0], w1, max_relative = 1e-9);
        assert_relative_eq!(r[1], w2, max_relative = 1e-9);
    }

    #[test]
    fn rsma_sum_composition() {
        let budget = LinkBudget::default();
        let o = order_users(&[g(2e-6), g(1e-6), g(3e-6), g(0.5e-6)], &rooms1(4));
        for accounting in [CommonAccounting::PerUserDecode, CommonAccounting::AllocatedShare] {
            let cfg = RsmaConfig {
                accounting,
                ..Default::default()
            };
            let split = rsma_power_split(&budget, &cfg, 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let r = rsma_sum_rate(&o, &budget, &cfg, &split).unwrap();
            let common = rsma_common_rate(&o, &budget, &split);
            let private: f64 = rsma_private_rates(&o, &budget, &split).iter().sum();
            let c = match accounting {
                CommonAccounting::PerUserDecode => common.per_user_decode.iter().sum::<f64>(),
                CommonAccounting::AllocatedShare => common.common_rate,
            };
            assert_relative_eq!(r.sum, c + private, max_relative = 1e-9);
        }

        let zero_common = PowerSplit {
            common: 0.0,
            private: vec![0.25; 4],
        };
        let r = rsma_sum_rate(&o, &budget, &RsmaConfig::default(), &zero_common).unwrap();
        assert_relative_eq!(r.sum, r.private.iter().sum::<f64>(), max_relative = 1e-15);
    }

    #[test]
    fn empty_input_is_an_error() {
        let o = order_users(&[], &[]);
        assert_eq!(
            noma_sum_rate(&o, &LinkBudget::default(), &NomaConfig::default()),
            Err(AccessError::NoUsers)
        );
    }
}
