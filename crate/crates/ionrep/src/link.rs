//! Closed-form elementary-link quantities.
//!
//! An elementary link of length `L0` heralds entanglement between its two end
//! ions via the two-photon scheme of [`crate::photonic`]. Per attempt,
//!
//! ```text
//! eta_t = e^(-L0 / (2 L_att))            per-photon transmission (half link)
//! P0    = ½ p² eta_t² eta_d²             twofold-coincidence probability
//! T_link = (L0/c) / P0                   average time to entangle the link
//! ```
//!
//! Attempts repeat at the classical communication interval `L0/c`, which is
//! what makes `T_link` scale with distance as well as loss, and makes the
//! whole budget scale only like 1/p² in the source efficiency.
//!
//! The source efficiency `p` bundles excited-state preparation, emission into
//! the cavity mode, fiber coupling, and frequency conversion to the telecom
//! band; [`compose_source_efficiency`] multiplies such a budget out. Cavity
//! emission itself is governed by the Purcell factor
//! `F_P = 3 ℓ λ² 𝓕 / (2 π² V0)` with collection efficiency `(F_P − 1)/F_P`.
//!
//! Lengths are kilometers at the interface (converted to SI internally),
//! times are seconds. All functions are stateless and freely concurrent.

use crate::error::{check_non_negative, check_positive, check_probability, Error, Result};

/// Hardware and geometry of one elementary link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    /// Elementary link length L0 (km).
    pub l0_km: f64,
    /// Fiber attenuation length (km); 22 km corresponds to 0.2 dB/km losses
    /// at telecom wavelength.
    pub l_att_km: f64,
    /// Photon velocity in the fiber (m/s).
    pub fiber_speed_m_per_s: f64,
    /// Success probability p for an ion to emit a usable telecom photon.
    pub source_efficiency: f64,
    /// Detector efficiency eta_d.
    pub detector_efficiency: f64,
}

impl LinkParams {
    pub const DEFAULT_ATTENUATION_KM: f64 = 22.0;
    pub const DEFAULT_FIBER_SPEED_M_PER_S: f64 = 2e8;

    /// Link with default fiber constants.
    pub fn new(l0_km: f64, source_efficiency: f64, detector_efficiency: f64) -> Self {
        LinkParams {
            l0_km,
            l_att_km: Self::DEFAULT_ATTENUATION_KM,
            fiber_speed_m_per_s: Self::DEFAULT_FIBER_SPEED_M_PER_S,
            source_efficiency,
            detector_efficiency,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("link.l0_km", self.l0_km)?;
        check_positive("link.l_att_km", self.l_att_km)?;
        check_positive("link.fiber_speed_m_per_s", self.fiber_speed_m_per_s)?;
        check_probability("link.source_efficiency", self.source_efficiency)?;
        check_probability("link.detector_efficiency", self.detector_efficiency)?;
        Ok(())
    }

    /// Classical communication time L0/c (s), the attempt repetition interval.
    pub fn communication_time_s(&self) -> f64 {
        self.l0_km * 1000.0 / self.fiber_speed_m_per_s
    }
}

/// Per-photon fiber transmission over half the elementary link,
/// e^(−L0/(2·L_att)).
pub fn fiber_transmission(params: &LinkParams) -> f64 {
    (-params.l0_km / (2.0 * params.l_att_km)).exp()
}

/// Twofold-coincidence probability per attempt, ½·p²·η_t²·η_d².
pub fn p0(params: &LinkParams) -> f64 {
    let eta_t = fiber_transmission(params);
    let p = params.source_efficiency;
    let eta_d = params.detector_efficiency;
    0.5 * p * p * eta_t * eta_t * eta_d * eta_d
}

/// Average time (s) to entangle one elementary link: (L0/c)/P0.
pub fn t_link(params: &LinkParams) -> Result<f64> {
    let p0 = p0(params);
    if p0 <= 0.0 {
        return Err(Error::InfeasibleLink);
    }
    Ok(params.communication_time_s() / p0)
}

/// Optical cavity around the emitting ion.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityParams {
    pub finesse: f64,
    /// Cavity length ℓ (m).
    pub length_m: f64,
    /// Free-space wavelength λ (m).
    pub wavelength_m: f64,
    /// Mode volume V0 (m³); defaults to ℓ²·λ, the confocal-cavity estimate
    /// for a waist of order sqrt(ℓλ).
    pub mode_volume_m3: Option<f64>,
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("cavity.finesse", self.finesse)?;
        check_positive("cavity.length_m", self.length_m)?;
        check_positive("cavity.wavelength_m", self.wavelength_m)?;
        if let Some(v0) = self.mode_volume_m3 {
            check_positive("cavity.mode_volume_m3", v0)?;
        }
        Ok(())
    }

    pub fn mode_volume(&self) -> f64 {
        self.mode_volume_m3
            .unwrap_or(self.length_m * self.length_m * self.wavelength_m)
    }
}

/// Purcell enhancement of spontaneous emission into the cavity mode,
/// F_P = 3·ℓ·λ²·𝓕 / (2π²·V0).
pub fn purcell_factor(cavity: &CavityParams) -> Result<f64> {
    cavity.validate()?;
    let numerator =
        3.0 * cavity.length_m * cavity.wavelength_m * cavity.wavelength_m * cavity.finesse;
    Ok(numerator / (2.0 * std::f64::consts::PI.powi(2) * cavity.mode_volume()))
}

/// Fraction of spontaneous emission collected into the cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionEfficiency {
    /// (F_P − 1)/F_P, clamped to [0, 1].
    pub value: f64,
    /// Set when F_P < 1, where the formula turns negative and the cavity
    /// offers no collection enhancement; the value is clamped to 0.
    pub degenerate: bool,
}

/// Collection efficiency (F_P − 1)/F_P; monotone in F_P and → 1 as F_P → ∞.
pub fn collection_efficiency(purcell: f64) -> CollectionEfficiency {
    if purcell < 1.0 {
        CollectionEfficiency {
            value: 0.0,
            degenerate: true,
        }
    } else {
        CollectionEfficiency {
            value: ((purcell - 1.0) / purcell).clamp(0.0, 1.0),
            degenerate: false,
        }
    }
}

/// Multiplicative budget behind the source efficiency `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBudget {
    /// Probability to prepare the ion in the excited state.
    pub prep_efficiency: f64,
    /// Photon emission probability into the cavity mode (95% is achievable
    /// with a Raman scheme in a realistic cavity).
    pub cavity_emission: f64,
    /// Coupling from the cavity output into the fiber.
    pub fiber_coupling: f64,
    /// Frequency conversion to the telecom band (56% demonstrated at the
    /// single-photon level).
    pub conversion_efficiency: f64,
}

impl SourceBudget {
    pub fn validate(&self) -> Result<()> {
        check_probability("budget.prep_efficiency", self.prep_efficiency)?;
        check_probability("budget.cavity_emission", self.cavity_emission)?;
        check_probability("budget.fiber_coupling", self.fiber_coupling)?;
        check_probability("budget.conversion_efficiency", self.conversion_efficiency)?;
        Ok(())
    }
}

/// Product of the four budget factors.
pub fn compose_source_efficiency(budget: &SourceBudget) -> Result<f64> {
    budget.validate()?;
    Ok(budget.prep_efficiency
        * budget.cavity_emission
        * budget.fiber_coupling
        * budget.conversion_efficiency)
}
