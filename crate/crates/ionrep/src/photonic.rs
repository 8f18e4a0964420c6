//! Exact state-vector engine for the two-photon heralded entanglement step.
//!
//! Two remote ions, one at site A and one at site B, each sit in a cavity and
//! are excited simultaneously. An ion that emits decays into one of two
//! metastable levels, and the photon polarization is entangled with the final
//! level: an H photon leaves the ion in `g_H`, a V photon in `g_V`. With
//! emission probability `p` per side, each side contributes
//!
//! ```text
//! sqrt(p/2) (|g_H> a_H† + |g_V> a_V†) + sqrt(1-p) |no emit>
//! ```
//!
//! (modes `b_H`, `b_V` on the B side). The two photons travel to a central
//! station and interfere on a polarizing beam splitter whose outputs are
//! monitored in a basis rotated 45° with respect to H-V:
//!
//! ```text
//! d±  = (a_H ± b_V)/√2          d̃± = (b_H ± a_V)/√2
//! ```
//!
//! A twofold coincidence (exactly one photon in {d+, d−} and one in
//! {d̃+, d̃−}) projects the ions onto a maximally entangled state. In the
//! ideal case each of the four coincidence patterns occurs with probability
//! 1/8, for a total herald probability of 1/2.
//!
//! # Phase corrections
//!
//! Conditioned on a coincidence, the ion pair is (|g_H g_H> ± |g_V g_V>)/√2.
//! The sign is fixed by which minus-ports clicked: d± mixes `a_H` with `b_V`,
//! so a d− click imprints a π phase on the branch where ion B holds `g_V`
//! (a Z on ion B); d̃± mixes `b_H` with `a_V`, so a d̃− click imprints the
//! phase on `g_V` of ion A (a Z on ion A). The correction returning every
//! herald to |ψ+> = (|g_H g_H> + |g_V g_V>)/√2 is therefore
//!
//! | pattern      | correction |
//! |--------------|------------|
//! | d+ and d̃+   | I          |
//! | d+ and d̃−   | Z_A        |
//! | d− and d̃+   | Z_B        |
//! | d− and d̃−   | Z_A·Z_B    |
//!
//! (Z_A·Z_B acts as the identity on span{|g_H g_H>, |g_V g_V>}, consistent with
//! the d−/d̃− pattern already being |ψ+>.)
//!
//! # Loss model
//!
//! Fiber transmission and detector efficiency are beam splitters coupling each
//! mode to its own fresh, unobserved loss mode. The evolution stays pure and
//! exactly unitary; detection then projects onto photon-number patterns of the
//! four monitored ports and sums probability over the unobserved loss modes.
//! Loss rescales herald probabilities but never the conditional ion state: a
//! coincidence pattern accounts for both photons, so its conditional state is
//! pure and has unit fidelity with |ψ+> after the tabulated correction.
//!
//! Detectors are photon-number resolving, which keeps the outcome enumeration
//! exact. All operations are pure functions; states are immutable values.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{check_probability, Error, Result};

/// Tolerance for exact algebraic identities (norms, probabilities, fidelities).
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Alarm threshold for numeric drift after a unitary operation.
pub const DRIFT_TOLERANCE: f64 = 1e-9;

/// Which remote site an emission mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    A,
    B,
}

/// Photon polarization at emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

/// One of the four monitored beam-splitter output ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    DPlus,
    DMinus,
    DTildePlus,
    DTildeMinus,
}

impl Port {
    pub const ALL: [Port; 4] = [
        Port::DPlus,
        Port::DMinus,
        Port::DTildePlus,
        Port::DTildeMinus,
    ];

    pub(crate) fn index(self) -> usize {
        match self {
            Port::DPlus => 0,
            Port::DMinus => 1,
            Port::DTildePlus => 2,
            Port::DTildeMinus => 3,
        }
    }

    /// True for the d̃ pair, which collects `b_H` and `a_V`.
    pub fn is_tilde(self) -> bool {
        matches!(self, Port::DTildePlus | Port::DTildeMinus)
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Port::DPlus => "d+",
            Port::DMinus => "d-",
            Port::DTildePlus => "d~+",
            Port::DTildeMinus => "d~-",
        };
        f.write_str(s)
    }
}

/// An optical mode of the model.
///
/// Exactly four signal modes exist (`a_H`, `a_V`, `b_H`, `b_V`); each signal
/// mode and each detector port owns one loss partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Emission mode carrying a photon of the given polarization from a side.
    Signal { side: Side, pol: Polarization },
    /// Loss partner of the corresponding signal mode (fiber/coupling loss).
    Loss { side: Side, pol: Polarization },
    /// Beam-splitter output port monitored by a detector.
    Detector(Port),
    /// Loss partner of a detector port (detector inefficiency).
    DetectorLoss(Port),
}

impl Mode {
    pub const SIGNAL_MODES: [Mode; 4] = [
        Mode::Signal {
            side: Side::A,
            pol: Polarization::H,
        },
        Mode::Signal {
            side: Side::A,
            pol: Polarization::V,
        },
        Mode::Signal {
            side: Side::B,
            pol: Polarization::H,
        },
        Mode::Signal {
            side: Side::B,
            pol: Polarization::V,
        },
    ];

    pub fn signal(side: Side, pol: Polarization) -> Mode {
        Mode::Signal { side, pol }
    }

    pub fn is_signal(self) -> bool {
        matches!(self, Mode::Signal { .. })
    }

    /// The fresh loss mode a lossy channel on this mode couples to.
    fn loss_partner(self) -> Option<Mode> {
        match self {
            Mode::Signal { side, pol } => Some(Mode::Loss { side, pol }),
            Mode::Detector(port) => Some(Mode::DetectorLoss(port)),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Signal { side, pol } => {
                write!(f, "{}_{:?}", if *side == Side::A { "a" } else { "b" }, pol)
            }
            Mode::Loss { side, pol } => write!(
                f,
                "loss({}_{:?})",
                if *side == Side::A { "a" } else { "b" },
                pol
            ),
            Mode::Detector(p) => write!(f, "{p}"),
            Mode::DetectorLoss(p) => write!(f, "loss({p})"),
        }
    }
}

/// Final ion level at emission time.
///
/// `GH`/`GV` are the metastable levels reached by emitting an H/V photon.
/// `NoEmit` is a distinguishable label for the no-photon branch; it can never
/// contribute to a coincidence, which is all the downstream rate analysis
/// needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IonState {
    GH,
    GV,
    NoEmit,
}

/// One basis vector: the two ion labels plus photon occupations per mode.
///
/// Only nonzero occupations are stored; total photon number never exceeds 2.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BasisState {
    pub ion_a: IonState,
    pub ion_b: IonState,
    occupations: BTreeMap<Mode, u8>,
}

impl BasisState {
    /// Vacuum state with the given ion labels.
    pub fn new(ion_a: IonState, ion_b: IonState) -> Self {
        BasisState {
            ion_a,
            ion_b,
            occupations: BTreeMap::new(),
        }
    }

    /// Adds one photon to `mode` (builder style).
    pub fn with_photon(mut self, mode: Mode) -> Self {
        *self.occupations.entry(mode).or_insert(0) += 1;
        self
    }

    pub fn occupation(&self, mode: Mode) -> u8 {
        self.occupations.get(&mode).copied().unwrap_or(0)
    }

    pub fn total_photons(&self) -> u32 {
        self.occupations.values().map(|&n| u32::from(n)).sum()
    }

    pub fn occupations(&self) -> impl Iterator<Item = (Mode, u8)> + '_ {
        self.occupations.iter().map(|(&m, &n)| (m, n))
    }

    fn set_occupation(&mut self, mode: Mode, n: u8) {
        if n == 0 {
            self.occupations.remove(&mode);
        } else {
            self.occupations.insert(mode, n);
        }
    }

    /// Detected photon counts over the four monitored ports.
    fn detection_pattern(&self) -> DetectionPattern {
        let mut counts = [0u8; 4];
        for port in Port::ALL {
            counts[port.index()] = self.occupation(Mode::Detector(port));
        }
        DetectionPattern { counts }
    }

    /// True when every photon sits in a monitored detector port and both ions
    /// emitted, the condition under which a conditional ion state is pure.
    fn fully_detected(&self) -> bool {
        self.ion_a != IonState::NoEmit
            && self.ion_b != IonState::NoEmit
            && self
                .occupations
                .keys()
                .all(|m| matches!(m, Mode::Detector(_)))
    }
}

/// A pure state: complex amplitudes over [`BasisState`]s.
#[derive(Debug, Clone, Default)]
pub struct PhotonicState {
    amplitudes: BTreeMap<BasisState, Complex64>,
}

impl PhotonicState {
    pub fn amplitude(&self, basis: &BasisState) -> Complex64 {
        self.amplitudes.get(basis).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisState, Complex64)> + '_ {
        self.amplitudes.iter().map(|(b, &a)| (b, a))
    }

    pub fn num_terms(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    fn accumulate(&mut self, basis: BasisState, amp: Complex64) {
        use std::collections::btree_map::Entry;
        if amp == Complex64::ZERO {
            return;
        }
        match self.amplitudes.entry(basis) {
            Entry::Vacant(slot) => {
                slot.insert(amp);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += amp;
                // exact cancellation (e.g. the suppressed d+/d- cross term)
                if *slot.get() == Complex64::ZERO {
                    slot.remove();
                }
            }
        }
    }

    fn check_norm(&self, tolerance: f64) -> Result<()> {
        let norm = self.norm_sq();
        if (norm - 1.0).abs() > tolerance {
            Err(Error::NormDrift { norm })
        } else {
            Ok(())
        }
    }
}

/// Photon counts observed on the four monitored ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DetectionPattern {
    counts: [u8; 4],
}

impl DetectionPattern {
    pub fn new(counts: [u8; 4]) -> Self {
        DetectionPattern { counts }
    }

    pub fn count(&self, port: Port) -> u8 {
        self.counts[port.index()]
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().map(|&c| u32::from(c)).sum()
    }

    /// A herald: exactly one photon in {d+, d−} and one in {d̃+, d̃−}.
    pub fn is_coincidence(&self) -> bool {
        let d = self.count(Port::DPlus) + self.count(Port::DMinus);
        let dt = self.count(Port::DTildePlus) + self.count(Port::DTildeMinus);
        d == 1 && dt == 1
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for port in Port::ALL {
            let c = self.count(port);
            if c > 0 {
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{port}:{c}")?;
                first = false;
            }
        }
        if first {
            write!(f, "vacuum")?;
        }
        Ok(())
    }
}

/// Single-qubit phase correction bringing a heralded pair to |ψ+>.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseCorrection {
    Identity,
    ZA,
    ZB,
    ZAZB,
}

impl PhaseCorrection {
    /// Correction for a coincidence pattern: a Z on B per d− click, a Z on A
    /// per d̃− click (see the module-level derivation).
    pub fn for_pattern(pattern: &DetectionPattern) -> PhaseCorrection {
        let za = pattern.count(Port::DTildeMinus) > 0;
        let zb = pattern.count(Port::DMinus) > 0;
        match (za, zb) {
            (false, false) => PhaseCorrection::Identity,
            (true, false) => PhaseCorrection::ZA,
            (false, true) => PhaseCorrection::ZB,
            (true, true) => PhaseCorrection::ZAZB,
        }
    }

    /// Applies the correction to a two-ion amplitude vector ordered
    /// [g_H g_H, g_H g_V, g_V g_H, g_V g_V]. Z_A flips the sign where ion A is
    /// in g_V, Z_B where ion B is.
    pub fn apply(self, state: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = *state;
        let (flip_a, flip_b) = match self {
            PhaseCorrection::Identity => (false, false),
            PhaseCorrection::ZA => (true, false),
            PhaseCorrection::ZB => (false, true),
            PhaseCorrection::ZAZB => (true, true),
        };
        for (i, v) in out.iter_mut().enumerate() {
            let a_is_v = i >= 2;
            let b_is_v = i % 2 == 1;
            let mut sign = 1.0;
            if flip_a && a_is_v {
                sign = -sign;
            }
            if flip_b && b_is_v {
                sign = -sign;
            }
            *v *= sign;
        }
        out
    }
}

/// One measurement outcome: a detection pattern, its probability, and, when
/// the conditional ion state is pure, the normalized two-ion amplitude vector
/// plus the phase correction for coincidence patterns.
#[derive(Debug, Clone)]
pub struct HeraldOutcome {
    pub pattern: DetectionPattern,
    pub probability: f64,
    /// Normalized amplitudes over [g_H g_H, g_H g_V, g_V g_H, g_V g_V];
    /// `None` when the pattern leaves the ions in a mixed state (fewer than
    /// two photons detected).
    pub ion_state: Option<[Complex64; 4]>,
    /// Set for coincidence patterns only.
    pub correction: Option<PhaseCorrection>,
}

/// Builds the post-emission state of both sides with per-side emission
/// probabilities `p_a` and `p_b`.
///
/// Each side carries amplitude sqrt(p/2) on (g_H, one photon in the H signal
/// mode), sqrt(p/2) on (g_V, V photon), and sqrt(1−p) on (no emission,
/// vacuum); the result is their tensor product.
pub fn build_emission_state(p_a: f64, p_b: f64) -> Result<PhotonicState> {
    check_probability("p_a", p_a)?;
    check_probability("p_b", p_b)?;

    let side_terms = |side: Side, p: f64| -> Vec<(IonState, Option<Mode>, f64)> {
        vec![
            (
                IonState::GH,
                Some(Mode::signal(side, Polarization::H)),
                (p / 2.0).sqrt(),
            ),
            (
                IonState::GV,
                Some(Mode::signal(side, Polarization::V)),
                (p / 2.0).sqrt(),
            ),
            (IonState::NoEmit, None, (1.0 - p).sqrt()),
        ]
    };

    let mut state = PhotonicState::default();
    for (ion_a, mode_a, amp_a) in side_terms(Side::A, p_a) {
        for (ion_b, mode_b, amp_b) in side_terms(Side::B, p_b) {
            let amp = amp_a * amp_b;
            if amp == 0.0 {
                continue;
            }
            let mut basis = BasisState::new(ion_a, ion_b);
            if let Some(m) = mode_a {
                basis = basis.with_photon(m);
            }
            if let Some(m) = mode_b {
                basis = basis.with_photon(m);
            }
            state.accumulate(basis, Complex64::new(amp, 0.0));
        }
    }
    state.check_norm(DRIFT_TOLERANCE)?;
    Ok(state)
}

/// Couples `from` to the (empty) loss mode `to` with the given transmissivity:
/// a single photon maps to sqrt(η)·kept + sqrt(1−η)·lost; two photons expand
/// with the bosonic binomial amplitudes. Exactly unitary.
fn lossy_coupling(state: &PhotonicState, from: Mode, to: Mode, eta: f64) -> PhotonicState {
    let mut out = PhotonicState::default();
    for (basis, amp) in state.iter() {
        let n = basis.occupation(from);
        debug_assert_eq!(basis.occupation(to), 0, "loss partner must start empty");
        match n {
            0 => out.accumulate(basis.clone(), amp),
            1 => {
                out.accumulate(basis.clone(), amp * eta.sqrt());
                let mut lost = basis.clone();
                lost.set_occupation(from, 0);
                lost.set_occupation(to, 1);
                out.accumulate(lost, amp * (1.0 - eta).sqrt());
            }
            2 => {
                // |2,0> -> η|2,0> + sqrt(2η(1-η))|1,1> + (1-η)|0,2>
                out.accumulate(basis.clone(), amp * eta);
                let mut one_each = basis.clone();
                one_each.set_occupation(from, 1);
                one_each.set_occupation(to, 1);
                out.accumulate(one_each, amp * (2.0 * eta * (1.0 - eta)).sqrt());
                let mut both_lost = basis.clone();
                both_lost.set_occupation(from, 0);
                both_lost.set_occupation(to, 2);
                out.accumulate(both_lost, amp * (1.0 - eta));
            }
            _ => unreachable!("total photon number is bounded by 2"),
        }
    }
    out
}

/// Applies a loss channel of the given transmissivity to one signal mode.
pub fn apply_loss(state: &PhotonicState, mode: Mode, transmissivity: f64) -> Result<PhotonicState> {
    check_probability("transmissivity", transmissivity)?;
    let partner = if mode.is_signal() {
        mode.loss_partner()
            .expect("signal modes have loss partners")
    } else {
        return Err(Error::NotASignalMode {
            mode: mode.to_string(),
        });
    };
    let out = lossy_coupling(state, mode, partner, transmissivity);
    out.check_norm(DRIFT_TOLERANCE)?;
    Ok(out)
}

/// Creation-operator image of each signal mode under the beam splitter.
fn pbs_image(mode: Mode) -> [(Mode, f64); 2] {
    const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;
    match mode {
        // d± = (a_H ± b_V)/√2  =>  a_H† = (d+† + d−†)/√2, b_V† = (d+† − d−†)/√2
        Mode::Signal {
            side: Side::A,
            pol: Polarization::H,
        } => [
            (Mode::Detector(Port::DPlus), INV_SQRT2),
            (Mode::Detector(Port::DMinus), INV_SQRT2),
        ],
        Mode::Signal {
            side: Side::B,
            pol: Polarization::V,
        } => [
            (Mode::Detector(Port::DPlus), INV_SQRT2),
            (Mode::Detector(Port::DMinus), -INV_SQRT2),
        ],
        // d̃± = (b_H ± a_V)/√2
        Mode::Signal {
            side: Side::B,
            pol: Polarization::H,
        } => [
            (Mode::Detector(Port::DTildePlus), INV_SQRT2),
            (Mode::Detector(Port::DTildeMinus), INV_SQRT2),
        ],
        Mode::Signal {
            side: Side::A,
            pol: Polarization::V,
        } => [
            (Mode::Detector(Port::DTildePlus), INV_SQRT2),
            (Mode::Detector(Port::DTildeMinus), -INV_SQRT2),
        ],
        _ => unreachable!("only signal modes pass through the beam splitter"),
    }
}

fn factorial(n: u8) -> f64 {
    match n {
        0 | 1 => 1.0,
        2 => 2.0,
        _ => unreachable!("occupations are bounded by 2"),
    }
}

/// Rewrites the state in the {d+, d−, d̃+, d̃−} occupation basis.
///
/// Each signal photon is substituted by its superposition of output creation
/// operators; monomials are then converted to normalized number states (a
/// doubly occupied port picks up the bosonic √2). Loss-mode photons pass
/// through untouched. Unitary; the output norm is checked against drift.
pub fn apply_pbs(state: &PhotonicState) -> Result<PhotonicState> {
    let mut out = PhotonicState::default();
    for (basis, amp) in state.iter() {
        let mut fixed = BasisState::new(basis.ion_a, basis.ion_b);
        let mut photons: Vec<Mode> = Vec::new();
        let mut in_norm = 1.0;
        for (mode, n) in basis.occupations() {
            if mode.is_signal() {
                for _ in 0..n {
                    photons.push(mode);
                }
                in_norm *= factorial(n);
            } else {
                fixed = fixed.with_photon(mode);
                if n == 2 {
                    fixed = fixed.with_photon(mode);
                }
            }
        }

        // Expand the product of single-photon superpositions into monomials
        // over output-port occupations.
        let mut monomials: BTreeMap<Vec<(Mode, u8)>, Complex64> = BTreeMap::new();
        monomials.insert(Vec::new(), amp / in_norm.sqrt());
        for photon in photons {
            let mut next: BTreeMap<Vec<(Mode, u8)>, Complex64> = BTreeMap::new();
            for (mono, coeff) in &monomials {
                for (out_mode, c) in pbs_image(photon) {
                    let mut grown = mono.clone();
                    match grown.iter_mut().find(|(m, _)| *m == out_mode) {
                        Some((_, n)) => *n += 1,
                        None => grown.push((out_mode, 1)),
                    }
                    grown.sort();
                    *next.entry(grown).or_insert(Complex64::ZERO) += coeff * c;
                }
            }
            monomials = next;
        }

        for (mono, coeff) in monomials {
            if coeff == Complex64::ZERO {
                continue;
            }
            let mut target = fixed.clone();
            let mut out_norm = 1.0;
            for (mode, n) in mono {
                target.set_occupation(mode, n);
                out_norm *= factorial(n);
            }
            out.accumulate(target, coeff * out_norm.sqrt());
        }
    }
    out.check_norm(DRIFT_TOLERANCE)?;
    Ok(out)
}

fn ion_pair_index(ion_a: IonState, ion_b: IonState) -> Option<usize> {
    let a = match ion_a {
        IonState::GH => 0,
        IonState::GV => 1,
        IonState::NoEmit => return None,
    };
    let b = match ion_b {
        IonState::GH => 0,
        IonState::GV => 1,
        IonState::NoEmit => return None,
    };
    Some(a * 2 + b)
}

/// Photon-number measurement of the four monitored ports.
///
/// Applies a loss channel of transmissivity `detector_efficiency` to each
/// port, then projects on detection patterns. Every pattern with nonzero
/// probability is returned (probabilities sum to 1). Patterns that account
/// for both photons carry their pure conditional ion state; coincidence
/// patterns additionally carry the phase correction from the module-level
/// table.
pub fn measure(state: &PhotonicState, detector_efficiency: f64) -> Result<Vec<HeraldOutcome>> {
    check_probability("detector_efficiency", detector_efficiency)?;
    let norm = state.norm_sq();
    if (norm - 1.0).abs() > DRIFT_TOLERANCE {
        return Err(Error::Unnormalized { norm });
    }
    if state
        .iter()
        .any(|(b, _)| b.occupations().any(|(m, _)| m.is_signal()))
    {
        return Err(Error::NotInDetectionBasis);
    }

    let mut detected = state.clone();
    for port in Port::ALL {
        detected = lossy_coupling(
            &detected,
            Mode::Detector(port),
            Mode::DetectorLoss(port),
            detector_efficiency,
        );
    }
    detected.check_norm(DRIFT_TOLERANCE)?;

    let mut groups: BTreeMap<DetectionPattern, Vec<(BasisState, Complex64)>> = BTreeMap::new();
    for (basis, amp) in detected.iter() {
        groups
            .entry(basis.detection_pattern())
            .or_default()
            .push((basis.clone(), amp));
    }

    let mut outcomes = Vec::with_capacity(groups.len());
    for (pattern, members) in groups {
        let probability: f64 = members.iter().map(|(_, a)| a.norm_sqr()).sum();
        if probability == 0.0 {
            continue;
        }
        let pure = members.iter().all(|(b, _)| b.fully_detected());
        let ion_state = if pure {
            let mut vec = [Complex64::ZERO; 4];
            for (basis, amp) in &members {
                let idx = ion_pair_index(basis.ion_a, basis.ion_b)
                    .expect("fully detected branches have emitted ions");
                vec[idx] += amp / probability.sqrt();
            }
            Some(vec)
        } else {
            None
        };
        let correction = pattern
            .is_coincidence()
            .then(|| PhaseCorrection::for_pattern(&pattern));
        outcomes.push(HeraldOutcome {
            pattern,
            probability,
            ion_state,
            correction,
        });
    }

    let total: f64 = outcomes.iter().map(|o| o.probability).sum();
    if (total - 1.0).abs() > DRIFT_TOLERANCE {
        return Err(Error::NormDrift { norm: total });
    }
    Ok(outcomes)
}

/// Closed-form twofold-coincidence probability ½·p_A·p_B·η_t²·η_d².
///
/// `eta_t` is the per-photon transmission of half an elementary link; the
/// simulated coincidence sum from [`measure`] reproduces this exactly.
pub fn herald_probability(p_a: f64, p_b: f64, eta_t: f64, eta_d: f64) -> Result<f64> {
    check_probability("p_a", p_a)?;
    check_probability("p_b", p_b)?;
    check_probability("eta_t", eta_t)?;
    check_probability("eta_d", eta_d)?;
    Ok(0.5 * p_a * p_b * eta_t * eta_t * eta_d * eta_d)
}

/// |<ψ+|state>|² for a two-ion amplitude vector ordered
/// [g_H g_H, g_H g_V, g_V g_H, g_V g_V].
pub fn psi_plus_fidelity(state: &[Complex64; 4]) -> f64 {
    let overlap = (state[0] + state[3]) * std::f64::consts::FRAC_1_SQRT_2;
    overlap.norm_sqr()
}

/// Runs the full heralding pipeline: emission, identical loss `eta_t` on all
/// four signal modes, beam splitter, then measurement at `eta_d`.
pub fn simulate_heralding(
    p_a: f64,
    p_b: f64,
    eta_t: f64,
    eta_d: f64,
) -> Result<Vec<HeraldOutcome>> {
    let mut state = build_emission_state(p_a, p_b)?;
    for mode in Mode::SIGNAL_MODES {
        state = apply_loss(&state, mode, eta_t)?;
    }
    let state = apply_pbs(&state)?;
    measure(&state, eta_d)
}

/// Sum of the four coincidence-pattern probabilities from the full pipeline.
pub fn simulated_herald_probability(p_a: f64, p_b: f64, eta_t: f64, eta_d: f64) -> Result<f64> {
    let sum: f64 = simulate_heralding(p_a, p_b, eta_t, eta_d)?
        .iter()
        .filter(|o| o.pattern.is_coincidence())
        .map(|o| o.probability)
        .sum();
    Ok(sum + 0.0) // empty sums come back as -0.0
}
