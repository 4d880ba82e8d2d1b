//! Link-budget model shared by every topology planner.
//!
//! Path loss follows the rural-macro NLoS closed form, evaluated per link
//! with the transmitter height picked by link kind: links incident to the
//! PoP use the eNB mast height, links between two access points use the
//! relay height. Distances below `min_distance_m` are clamped up before the
//! log, and the same formula extrapolates beyond its nominal validity range
//! rather than switching models.
//!
//! A link's per resource-block SNR feeds a truncated Shannon mapping:
//! zero below `snr_min_db`, attenuated log2(1+snr) in between, capped at
//! `eff_max_bps_hz`. Full-band capacity is `n_rbs` times the per-RB rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::Node;

/// Thermal noise density in dBm/Hz.
const NOISE_DENSITY_DBM_HZ: f64 = -174.0;

/// Radio and band parameters. Defaults model a 20 MHz UHF carrier split
/// into 100 resource blocks of 180 kHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Carrier frequency in GHz.
    pub center_freq_ghz: f64,
    /// Total transmit power in dBm, shared equally across all RBs.
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    /// Transmitter mast height at the PoP in meters.
    pub enb_height_m: f64,
    /// Antenna height at access points in meters; also the receiver height
    /// in the path-loss law.
    pub rn_height_m: f64,
    /// Number of resource blocks in the band.
    pub n_rbs: u32,
    pub rb_bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Average street width in meters (path-loss environment term).
    pub street_width_m: f64,
    /// Average building height in meters (path-loss environment term).
    pub building_height_m: f64,
    /// SNR below this threshold carries no data, in dB.
    pub snr_min_db: f64,
    /// Spectral-efficiency cap in bit/s/Hz.
    pub eff_max_bps_hz: f64,
    /// Implementation-loss factor applied to log2(1+snr).
    pub eff_scale: f64,
    /// Distances shorter than this are clamped up before evaluation, in
    /// meters.
    pub min_distance_m: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            center_freq_ghz: 0.51,
            tx_power_dbm: 27.0,
            tx_gain_dbi: 10.0,
            rx_gain_dbi: 10.0,
            enb_height_m: 30.0,
            rn_height_m: 10.0,
            n_rbs: 100,
            rb_bandwidth_hz: 180_000.0,
            noise_figure_db: 7.0,
            street_width_m: 20.0,
            building_height_m: 5.0,
            snr_min_db: -10.0,
            eff_max_bps_hz: 4.4,
            eff_scale: 0.75,
            min_distance_m: 10.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), RadioError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(RadioError::InvalidConfig(msg.to_string()))
            }
        };
        let pos = |v: f64| v.is_finite() && v > 0.0;
        check(pos(self.center_freq_ghz), "center_freq_ghz must be positive")?;
        check(self.tx_power_dbm.is_finite(), "tx_power_dbm must be finite")?;
        check(self.tx_gain_dbi.is_finite(), "tx_gain_dbi must be finite")?;
        check(self.rx_gain_dbi.is_finite(), "rx_gain_dbi must be finite")?;
        check(pos(self.enb_height_m), "enb_height_m must be positive")?;
        check(pos(self.rn_height_m), "rn_height_m must be positive")?;
        check(self.n_rbs >= 1, "n_rbs must be at least 1")?;
        check(pos(self.rb_bandwidth_hz), "rb_bandwidth_hz must be positive")?;
        check(
            self.noise_figure_db.is_finite(),
            "noise_figure_db must be finite",
        )?;
        check(pos(self.street_width_m), "street_width_m must be positive")?;
        check(
            pos(self.building_height_m),
            "building_height_m must be positive",
        )?;
        check(self.snr_min_db.is_finite(), "snr_min_db must be finite")?;
        check(pos(self.eff_max_bps_hz), "eff_max_bps_hz must be positive")?;
        check(
            pos(self.eff_scale) && self.eff_scale <= 1.0,
            "eff_scale must be in (0, 1]",
        )?;
        check(pos(self.min_distance_m), "min_distance_m must be positive")?;
        Ok(())
    }

    /// Noise power in one resource block, in dBm.
    pub fn noise_per_rb_dbm(&self) -> f64 {
        NOISE_DENSITY_DBM_HZ + 10.0 * self.rb_bandwidth_hz.log10() + self.noise_figure_db
    }

    /// Transmit power available to one resource block, in dBm.
    pub fn tx_power_per_rb_dbm(&self) -> f64 {
        self.tx_power_dbm - 10.0 * f64::from(self.n_rbs).log10()
    }
}

/// Which mast height the transmitter side of a link uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    /// Link incident to the PoP (node 0).
    EnbRn,
    /// Link between two access points.
    RnRn,
}

#[derive(Debug, Error)]
pub enum RadioError {
    #[error("invalid link distance {0}; must be finite and non-negative")]
    InvalidDistance(f64),
    #[error("link endpoints must be distinct nodes, got node {0} twice")]
    SameEndpoint(usize),
    #[error("invalid radio config: {0}")]
    InvalidConfig(String),
}

/// Resource blocks needed to carry a load on a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RbsRequired {
    Count(u32),
    /// The link rate is zero (or the count overflows) while load is
    /// positive; no finite allocation satisfies it.
    Unsatisfiable,
}

impl RbsRequired {
    pub fn count(self) -> Option<u32> {
        match self {
            RbsRequired::Count(n) => Some(n),
            RbsRequired::Unsatisfiable => None,
        }
    }
}

/// Everything the planners need to know about one link.
#[derive(Debug, Clone, Serialize)]
pub struct LinkMetrics {
    /// Raw endpoint distance in meters, before the minimum-distance clamp.
    pub distance_m: f64,
    pub kind: LinkKind,
    pub path_loss_db: f64,
    pub snr_db: f64,
    pub per_rb_rate_bps: f64,
    /// Full-band capacity: `n_rbs` times the per-RB rate.
    pub capacity_bps: f64,
}

/// NLoS path loss in dB at `distance_m` meters.
///
/// Transmit power does not enter here; only geometry, heights, the carrier
/// frequency, and the environment terms do.
pub fn path_loss_db(distance_m: f64, kind: LinkKind, cfg: &RadioConfig) -> Result<f64, RadioError> {
    if !distance_m.is_finite() || distance_m < 0.0 {
        return Err(RadioError::InvalidDistance(distance_m));
    }
    let d = distance_m.max(cfg.min_distance_m);
    let h_bs = match kind {
        LinkKind::EnbRn => cfg.enb_height_m,
        LinkKind::RnRn => cfg.rn_height_m,
    };
    let h_ut = cfg.rn_height_m;
    let w = cfg.street_width_m;
    let h = cfg.building_height_m;
    let pl = 161.04 - 7.1 * w.log10() + 7.5 * h.log10()
        - (24.37 - 3.7 * (h / h_bs).powi(2)) * h_bs.log10()
        + (43.42 - 3.1 * h_bs.log10()) * (d.log10() - 3.0)
        + 20.0 * cfg.center_freq_ghz.log10()
        - (3.2 * (11.75 * h_ut).log10().powi(2) - 4.97);
    Ok(pl)
}

/// Per resource-block SNR in dB at `distance_m` meters.
pub fn snr_db(distance_m: f64, kind: LinkKind, cfg: &RadioConfig) -> Result<f64, RadioError> {
    let pl = path_loss_db(distance_m, kind, cfg)?;
    Ok(cfg.tx_power_per_rb_dbm() + cfg.tx_gain_dbi + cfg.rx_gain_dbi - pl - cfg.noise_per_rb_dbm())
}

/// Truncated Shannon rate of one resource block, in bit/s.
pub fn per_rb_rate_bps(snr_db: f64, cfg: &RadioConfig) -> f64 {
    if snr_db < cfg.snr_min_db {
        return 0.0;
    }
    let snr_lin = 10f64.powf(snr_db / 10.0);
    let eff = (cfg.eff_scale * (1.0 + snr_lin).log2()).min(cfg.eff_max_bps_hz);
    cfg.rb_bandwidth_hz * eff
}

/// Minimal resource-block count `k` with `k * rate >= load`, in exact f64
/// arithmetic. Zero or negative load needs no blocks. Positive load on a
/// zero-rate link is unsatisfiable.
pub fn rbs_required(load_bps: f64, per_rb_rate_bps: f64) -> RbsRequired {
    if load_bps <= 0.0 {
        return RbsRequired::Count(0);
    }
    if per_rb_rate_bps <= 0.0 {
        return RbsRequired::Unsatisfiable;
    }
    let mut k = (load_bps / per_rb_rate_bps).ceil();
    // The division may round either way; restore the minimal-k invariant
    // under the exact f64 products.
    while k > 0.0 && (k - 1.0) * per_rb_rate_bps >= load_bps {
        k -= 1.0;
    }
    while k * per_rb_rate_bps < load_bps {
        k += 1.0;
    }
    if k > f64::from(u32::MAX) {
        return RbsRequired::Unsatisfiable;
    }
    RbsRequired::Count(k as u32)
}

/// Full link metrics between two scenario nodes. Capacity is symmetric:
/// links touching the PoP use the eNB height in both directions.
pub fn link_metrics(a: &Node, b: &Node, cfg: &RadioConfig) -> Result<LinkMetrics, RadioError> {
    if a.id == b.id {
        return Err(RadioError::SameEndpoint(a.id));
    }
    let kind = if a.id == 0 || b.id == 0 {
        LinkKind::EnbRn
    } else {
        LinkKind::RnRn
    };
    let distance_m =
        ((a.x_km - b.x_km).powi(2) + (a.y_km - b.y_km).powi(2)).sqrt() * 1000.0;
    let pl = path_loss_db(distance_m, kind, cfg)?;
    let snr = cfg.tx_power_per_rb_dbm() + cfg.tx_gain_dbi + cfg.rx_gain_dbi - pl
        - cfg.noise_per_rb_dbm();
    let rate = per_rb_rate_bps(snr, cfg);
    Ok(LinkMetrics {
        distance_m,
        kind,
        path_loss_db: pl,
        snr_db: snr,
        per_rb_rate_bps: rate,
        capacity_bps: f64::from(cfg.n_rbs) * rate,
    })
}
