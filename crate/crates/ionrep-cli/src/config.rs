//! Scenario files: flat UTF-8 `key=value` lines with dotted namespaces.
//!
//! Empty lines and `#` comments are skipped. Unknown keys are errors, not
//! warnings, so typos cannot silently fall back to defaults.

use std::path::Path;

use ionrep::link::CavityParams;
use ionrep::multiplex::{ChainConfig, TimingParams};
use ionrep::repeater::{DirectBaseline, RepeaterConfig, SwapBudget};
use ionrep::LinkParams;

/// A full named parameter set for every command.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Elementary-link parameters; `l0_km` feeds the link-level commands,
    /// repeater commands derive their own L0 from the geometry below.
    pub link: LinkParams,
    pub total_distance_km: f64,
    pub nesting_level: u32,
    pub swap_success: f64,
    pub memory_lifetime_s: f64,
    pub multiplex_factor: u32,
    pub swap_budget: SwapBudget,
    pub direct: DirectBaseline,
    pub cavity: CavityParams,
    pub timing: TimingParams,
    pub chain: ChainConfig,
    pub trials: u64,
    pub seed: u64,
    pub include_swap_overhead: bool,
    pub include_higher_level_comms: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            link: LinkParams::new(62.5, 0.9, 0.9),
            total_distance_km: 1000.0,
            nesting_level: 4,
            swap_success: 1.0,
            memory_lifetime_s: 1.0,
            multiplex_factor: 1,
            swap_budget: SwapBudget::default(),
            direct: DirectBaseline::default(),
            cavity: CavityParams {
                finesse: 1e5,
                length_m: 0.02,
                wavelength_m: 854e-9,
                mode_volume_m3: None,
            },
            timing: TimingParams::default(),
            chain: ChainConfig::default(),
            trials: 10_000,
            seed: 1,
            include_swap_overhead: false,
            include_higher_level_comms: false,
        }
    }
}

impl Scenario {
    /// Loads defaults, overlays the file if given, and validates everything.
    pub fn load(path: Option<&Path>) -> Result<Scenario, String> {
        let mut scenario = Scenario::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            scenario.apply(&text)?;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    fn apply(&mut self, text: &str) -> Result<(), String> {
        for (number, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got `{line}`", number + 1))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", number + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn float(key: &str, value: &str) -> Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|_| format!("key `{key}`: invalid number `{value}`"))
        }
        fn integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("key `{key}`: invalid integer `{value}`"))
        }
        fn boolean(key: &str, value: &str) -> Result<bool, String> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!(
                    "key `{key}`: expected true or false, got `{value}`"
                )),
            }
        }

        match key {
            "link.L0_km" => self.link.l0_km = float(key, value)?,
            "link.Latt_km" => self.link.l_att_km = float(key, value)?,
            "link.c_m_per_s" => self.link.fiber_speed_m_per_s = float(key, value)?,
            "link.p" => self.link.source_efficiency = float(key, value)?,
            "link.eta_d" => self.link.detector_efficiency = float(key, value)?,
            "repeater.L_km" => self.total_distance_km = float(key, value)?,
            "repeater.n" => self.nesting_level = integer(key, value)?,
            "repeater.q" => self.swap_success = float(key, value)?,
            "repeater.memory_s" => self.memory_lifetime_s = float(key, value)?,
            "repeater.multiplex" => self.multiplex_factor = integer(key, value)?,
            "swap.transfer_s" => self.swap_budget.coherent_transfer_s = float(key, value)?,
            "swap.gate_s" => self.swap_budget.bichromatic_gate_s = float(key, value)?,
            "swap.detection_s" => self.swap_budget.ion_detection_s = float(key, value)?,
            "direct.rate_hz" => self.direct.source_rate_hz = float(key, value)?,
            "direct.loss_db_per_km" => self.direct.loss_db_per_km = float(key, value)?,
            "cavity.finesse" => self.cavity.finesse = float(key, value)?,
            "cavity.length_m" => self.cavity.length_m = float(key, value)?,
            "cavity.wavelength_m" => self.cavity.wavelength_m = float(key, value)?,
            "cavity.mode_volume_m3" => self.cavity.mode_volume_m3 = Some(float(key, value)?),
            "timing.raman_hz" => self.timing.raman_rate_hz = float(key, value)?,
            "timing.transport_s_per_mm" => self.timing.transport_time_per_mm_s = float(key, value)?,
            "timing.cavity_length_m" => self.timing.cavity_length_m = float(key, value)?,
            "chain.ions" => {
                let n: usize = integer(key, value)?;
                self.chain.end_node_ions = n;
                self.chain.middle_node_ions = 2 * n;
            }
            "chain.spacing_m" => self.chain.inter_ion_spacing_m = float(key, value)?,
            "chain.waist_m" => self.chain.beam_waist_m = float(key, value)?,
            "sim.trials" => self.trials = integer(key, value)?,
            "sim.seed" => self.seed = integer(key, value)?,
            "sim.swap_overhead" => self.include_swap_overhead = boolean(key, value)?,
            "sim.level_comms" => self.include_higher_level_comms = boolean(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Full validation of every component; commands never start computing on
    /// a partially valid scenario.
    pub fn validate(&self) -> Result<(), String> {
        self.link.validate().map_err(|e| e.to_string())?;
        self.repeater_config()
            .validate()
            .map_err(|e| e.to_string())?;
        self.cavity.validate().map_err(|e| e.to_string())?;
        self.timing.validate().map_err(|e| e.to_string())?;
        self.chain.validate().map_err(|e| e.to_string())?;
        self.direct.validate().map_err(|e| e.to_string())?;
        if self.trials < 1 {
            return Err("parameter `sim.trials` must be at least 1".to_string());
        }
        Ok(())
    }

    /// Repeater built from the scenario geometry (L0 derived from L and n).
    pub fn repeater_config(&self) -> RepeaterConfig {
        self.repeater_config_for(self.total_distance_km, self.nesting_level)
    }

    /// Same hardware over a different span.
    pub fn repeater_config_for(&self, total_km: f64, nesting_level: u32) -> RepeaterConfig {
        let mut config = RepeaterConfig::new(
            total_km,
            nesting_level,
            self.link.source_efficiency,
            self.link.detector_efficiency,
        );
        config.link.l_att_km = self.link.l_att_km;
        config.link.fiber_speed_m_per_s = self.link.fiber_speed_m_per_s;
        config.swap_success = self.swap_success;
        config.swap_budget = self.swap_budget.clone();
        config.memory_lifetime_s = self.memory_lifetime_s;
        config.multiplex_factor = self.multiplex_factor;
        config
    }
}
