//! Batch run configuration and environment handling.

use std::path::PathBuf;

use middlemile::eval::CdfFilter;
use middlemile::{BatchConfig, Parallelism, RadioConfig, TopologyChoice};
use serde::{Deserialize, Serialize};

/// JSON config for `mmp batch`. Every field has a default, so a config
/// file only needs the values it wants to change; command-line flags
/// override the file in turn.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub radio: RadioConfig,
    pub n_aps_list: Vec<usize>,
    pub area_list_km: Vec<f64>,
    pub n_scenarios: usize,
    pub topologies: Vec<TopologyChoice>,
    pub master_seed: u64,
    pub demand_set_mbps: Vec<f64>,
    pub pop_at_center: bool,
    pub lp_alpha_fallback: bool,
    pub filter: CdfFilter,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let batch = BatchConfig::default();
        RunConfig {
            radio: batch.radio,
            n_aps_list: batch.n_aps_list,
            area_list_km: batch.area_list_km,
            n_scenarios: batch.n_scenarios,
            topologies: batch.topologies,
            master_seed: batch.master_seed,
            demand_set_mbps: batch.demand_set_mbps,
            pop_at_center: batch.pop_at_center,
            lp_alpha_fallback: batch.lp_alpha_fallback,
            filter: CdfFilter::All,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| format!("cannot parse config {}: {e}", path.display()))
    }

    pub fn batch_config(&self) -> BatchConfig {
        BatchConfig {
            radio: self.radio.clone(),
            n_aps_list: self.n_aps_list.clone(),
            area_list_km: self.area_list_km.clone(),
            n_scenarios: self.n_scenarios,
            topologies: self.topologies.clone(),
            master_seed: self.master_seed,
            demand_set_mbps: self.demand_set_mbps.clone(),
            pop_at_center: self.pop_at_center,
            lp_alpha_fallback: self.lp_alpha_fallback,
        }
    }
}

/// Maps the MMP_THREADS variable to a parallelism mode: unset, empty, or 0
/// uses the default pool, 1 forces the sequential path, anything else caps
/// the pool at that many threads.
pub fn parallelism_from_env() -> Result<Parallelism, String> {
    let raw = match std::env::var("MMP_THREADS") {
        Err(std::env::VarError::NotPresent) => return Ok(Parallelism::Auto),
        Err(std::env::VarError::NotUnicode(_)) => {
            return Err("MMP_THREADS is not valid UTF-8".to_string());
        }
        Ok(s) => s,
    };
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(Parallelism::Auto);
    }
    match trimmed.parse::<usize>() {
        Ok(0) => Ok(Parallelism::Auto),
        Ok(1) => Ok(Parallelism::Sequential),
        Ok(n) => Ok(Parallelism::Threads(n)),
        Err(_) => Err(format!(
            "MMP_THREADS must be a non-negative integer, got {trimmed:?}"
        )),
    }
}
