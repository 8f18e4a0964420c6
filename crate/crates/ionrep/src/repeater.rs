//! Closed-form timing of the nested repeater.
//!
//! A repeater spanning `L = 2^n · L0` builds entanglement on all elementary
//! links in parallel and extends it by entanglement swapping at each of `n`
//! nesting levels. Waiting for the second of two sub-links costs a factor of
//! about 3/2 per level (one of two succeeds after T/2, the other then needs a
//! full T), giving the standard estimate
//!
//! ```text
//! T_tot ≈ (3/2)^n (L0/c)(1/P0) = 3^n/2^(n-1) · (L0/c) · 1/(p² η_t² η_d²)
//! ```
//!
//! With deterministic ion-gate swapping the per-swap success probability `q`
//! is 1; for probabilistic (e.g. linear-optics) swapping each level instead
//! multiplies by (3/2)/q under the rebuild-both-sub-links failure model. The
//! per-level 3/2 is an approximation; the Monte-Carlo module measures the
//! exact per-level factors (all between 1 and 2).
//!
//! Swap overheads (coherent transfer ~10 µs, bichromatic gate ~50 µs, ion
//! detection ~145 µs) and higher-level classical communication are excluded
//! from `t_total` by default (they are far below `T_link` at the distances
//! of interest) and can be included via [`t_total_with_overheads`].

use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::link::{self, LinkParams};

/// Time budget of one entanglement swapping operation.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapBudget {
    /// Coherent population transfer to the working sublevels (s).
    pub coherent_transfer_s: f64,
    /// Bichromatic gate mapping Bell states to the computational basis (s).
    pub bichromatic_gate_s: f64,
    /// State detection of both ions (s).
    pub ion_detection_s: f64,
}

impl Default for SwapBudget {
    fn default() -> Self {
        SwapBudget {
            coherent_transfer_s: 10e-6,
            bichromatic_gate_s: 50e-6,
            ion_detection_s: 145e-6,
        }
    }
}

impl SwapBudget {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("swap.coherent_transfer_s", self.coherent_transfer_s)?;
        check_non_negative("swap.bichromatic_gate_s", self.bichromatic_gate_s)?;
        check_non_negative("swap.ion_detection_s", self.ion_detection_s)?;
        Ok(())
    }
}

/// Total duration of one swap: transfer + gate + detection.
pub fn swap_overhead(budget: &SwapBudget) -> f64 {
    budget.coherent_transfer_s + budget.bichromatic_gate_s + budget.ion_detection_s
}

/// Direct photon transmission through fiber, the repeater-less baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectBaseline {
    /// Pair generation rate of the source (Hz).
    pub source_rate_hz: f64,
    /// Fiber loss (dB/km).
    pub loss_db_per_km: f64,
}

impl Default for DirectBaseline {
    fn default() -> Self {
        DirectBaseline {
            source_rate_hz: 1e10,
            loss_db_per_km: 0.2,
        }
    }
}

impl DirectBaseline {
    pub fn validate(&self) -> Result<()> {
        check_positive("direct.source_rate_hz", self.source_rate_hz)?;
        check_positive("direct.loss_db_per_km", self.loss_db_per_km)?;
        Ok(())
    }
}

/// Average time (s) to push one pair through `distance_km` of fiber directly.
pub fn t_direct(distance_km: f64, baseline: &DirectBaseline) -> f64 {
    let transmission = 10f64.powf(-baseline.loss_db_per_km * distance_km / 10.0);
    1.0 / (baseline.source_rate_hz * transmission)
}

/// Full description of a nested repeater.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeaterConfig {
    /// Total distance L (km).
    pub total_distance_km: f64,
    /// Nesting level n; the repeater spans 2^n elementary links (n ≤ 4).
    pub nesting_level: u32,
    /// Elementary link; `l0_km` must equal `total_distance_km / 2^n`.
    pub link: LinkParams,
    /// Per-swap success probability q in (0, 1]; 1 for deterministic ion
    /// gates, ≤ 1/2 for linear-optics Bell analysis.
    pub swap_success: f64,
    pub swap_budget: SwapBudget,
    /// Memory lifetime used by the feasibility check (s).
    pub memory_lifetime_s: f64,
    /// Entanglement-creation attempts per communication window (≥ 1).
    pub multiplex_factor: u32,
}

/// Hard cap on the nesting level (16 links), below which purification can
/// plausibly be skipped.
pub const MAX_NESTING_LEVEL: u32 = 4;

impl RepeaterConfig {
    /// Repeater over `total_distance_km` with 2^`nesting_level` links, default
    /// fiber constants, deterministic swapping, 1 s memory, no multiplexing.
    pub fn new(
        total_distance_km: f64,
        nesting_level: u32,
        source_efficiency: f64,
        detector_efficiency: f64,
    ) -> Self {
        let l0_km = total_distance_km / f64::from(1u32 << nesting_level.min(31));
        RepeaterConfig {
            total_distance_km,
            nesting_level,
            link: LinkParams::new(l0_km, source_efficiency, detector_efficiency),
            swap_success: 1.0,
            swap_budget: SwapBudget::default(),
            memory_lifetime_s: 1.0,
            multiplex_factor: 1,
        }
    }

    pub fn num_links(&self) -> u32 {
        1u32 << self.nesting_level
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("repeater.total_distance_km", self.total_distance_km)?;
        if self.nesting_level > MAX_NESTING_LEVEL {
            return Err(Error::InvalidParameter {
                field: "repeater.nesting_level",
                value: f64::from(self.nesting_level),
                constraint: "at most 4 (16 links)",
            });
        }
        self.link.validate()?;
        let expected_l0 = self.total_distance_km / f64::from(self.num_links());
        if (self.link.l0_km - expected_l0).abs() > 1e-9 * expected_l0.max(1.0) {
            return Err(Error::InvalidParameter {
                field: "link.l0_km",
                value: self.link.l0_km,
                constraint: "must equal total_distance_km / 2^nesting_level",
            });
        }
        if !(self.swap_success > 0.0 && self.swap_success <= 1.0) {
            return Err(Error::InvalidParameter {
                field: "repeater.swap_success",
                value: self.swap_success,
                constraint: "must lie in (0, 1]",
            });
        }
        self.swap_budget.validate()?;
        check_non_negative("repeater.memory_lifetime_s", self.memory_lifetime_s)?;
        if self.multiplex_factor < 1 {
            return Err(Error::InvalidParameter {
                field: "repeater.multiplex_factor",
                value: f64::from(self.multiplex_factor),
                constraint: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Average distribution time over two links joined by one deterministic swap:
/// (3/2)·T_link. Requires n = 1 and q = 1.
pub fn t_two_links(config: &RepeaterConfig) -> Result<f64> {
    config.validate()?;
    if config.nesting_level != 1 {
        return Err(Error::InvalidParameter {
            field: "repeater.nesting_level",
            value: f64::from(config.nesting_level),
            constraint: "t_two_links requires exactly one nesting level",
        });
    }
    if config.swap_success != 1.0 {
        return Err(Error::InvalidParameter {
            field: "repeater.swap_success",
            value: config.swap_success,
            constraint: "t_two_links assumes deterministic swapping (q = 1)",
        });
    }
    Ok(1.5 * link::t_link(&config.link)?)
}

/// Average total distribution time (s):
/// (L0/c)·(1/P0)·((3/2)/q)^n / multiplex_factor.
pub fn t_total(config: &RepeaterConfig) -> Result<f64> {
    t_total_with_overheads(config, false, false)
}

/// [`t_total`] with optional per-level swap overhead and classical
/// communication time (2^(k−1)·L0/c at level k).
///
/// Uses the recursion E[T_k] = (1/q)·((3/2)·E[T_(k−1)] + overheads), which
/// reduces to the plain closed form when both options are off; a failed swap
/// rebuilds both sub-links and pays the overhead again. Multiplexing divides
/// only the attempt-slot time, never the overheads.
pub fn t_total_with_overheads(
    config: &RepeaterConfig,
    include_swap_overhead: bool,
    include_comms: bool,
) -> Result<f64> {
    config.validate()?;
    let mut t = link::t_link(&config.link)? / f64::from(config.multiplex_factor);
    let comm = config.link.communication_time_s();
    for level in 1..=config.nesting_level {
        let mut round = 1.5 * t;
        if include_swap_overhead {
            round += swap_overhead(&config.swap_budget);
        }
        if include_comms {
            round += f64::from(1u32 << (level - 1)) * comm;
        }
        t = round / config.swap_success;
    }
    Ok(t)
}

/// Whether the distribution time fits within the memory lifetime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryFeasibility {
    pub feasible: bool,
    /// t_total / memory_lifetime; values above 1 are infeasible.
    pub occupancy: f64,
}

pub fn memory_feasible(config: &RepeaterConfig) -> Result<MemoryFeasibility> {
    let t = t_total(config)?;
    let occupancy = if config.memory_lifetime_s > 0.0 {
        t / config.memory_lifetime_s
    } else {
        f64::INFINITY
    };
    Ok(MemoryFeasibility {
        feasible: t <= config.memory_lifetime_s,
        occupancy,
    })
}
