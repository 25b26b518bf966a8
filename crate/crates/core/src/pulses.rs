//! Primitive evolutions from which every gate is composed.
//!
//! All durations are dimensionless `g1·t`. Primitives never renormalize: under
//! the conditional (no-jump) Hamiltonians the lost norm is the failure
//! probability.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::device::{DeviceParams, NoiseConfig};
use crate::error::{non_negative, positive, Error, Result};
use crate::hilbert::{unchecked_index, unchecked_label, StateVector, SQUID_COUNT, SQUID_LEVELS};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Ordered level pair (i, j) of a classical drive. The order fixes the sign
/// convention of the phase: |i⟩ → cos A|i⟩ − i e^{−iφ} sin A|j⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
}

impl Transition {
    pub fn new(from: usize, to: usize) -> Result<Self> {
        if from == to || from >= SQUID_LEVELS || to >= SQUID_LEVELS {
            return Err(Error::InvalidTransition(from, to));
        }
        Ok(Self { from, to })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseKind {
    ClassicalPulse { squid: usize, transition: Transition, area: f64, phase: f64 },
    ResonantExchange { squid: usize },
    DispersiveWait,
    Idle,
}

/// One primitive with its duration (g1·t) and the gate stage it belongs to.
/// `simultaneous` marks a pulse that runs in parallel with the previous step
/// and so adds nothing to the wall-clock time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseStep {
    pub kind: PulseKind,
    pub duration: f64,
    pub stage: u8,
    pub simultaneous: bool,
}

fn check_squid(squid: usize) -> Result<()> {
    if (1..=SQUID_COUNT).contains(&squid) {
        Ok(())
    } else {
        Err(Error::InvalidSquid(squid))
    }
}

/// exp(−iHt) for the 2×2 generator H = [[a, u], [l, b]] (any complex entries).
pub(crate) fn propagator_2x2(a: Complex64, b: Complex64, u: Complex64, l: Complex64, t: f64) -> [[Complex64; 2]; 2] {
    // K = H − m·I satisfies K² = w²·I, so exp(−iKt) = cos(wt) − i sin(wt)/w · K.
    let m = (a + b) * 0.5;
    let h = (a - b) * 0.5;
    let w = (h * h + u * l).sqrt();
    let wt = w * t;
    let cos = wt.cos();
    let sinc = if wt.norm() < 1e-6 {
        // sin(wt)/w to fourth order
        t * (ONE - wt * wt / 6.0 + wt * wt * wt * wt / 120.0)
    } else {
        wt.sin() / w
    };
    let phase = (-I * m * t).exp();
    [
        [phase * (cos - I * sinc * h), phase * (-I * sinc * u)],
        [phase * (-I * sinc * l), phase * (cos + I * sinc * h)],
    ]
}

/// Applies a 2×2 propagator to every pair (|…i…⟩, |…j…⟩) of `squid`, with
/// `manifold` restricting the photon numbers it acts on.
fn apply_pair(
    state: &mut StateVector,
    squid: usize,
    transition: Transition,
    photons: impl Fn(usize) -> bool,
    u: [[Complex64; 2]; 2],
) {
    let n_max = state.n_max();
    let amps = state.amplitudes_mut();
    for idx in 0..amps.len() {
        let label = unchecked_label(idx, n_max);
        if label.level(squid) != transition.from || !photons(label.photons) {
            continue;
        }
        let jdx = unchecked_index(label.with_level(squid, transition.to), n_max);
        let (ai, aj) = (amps[idx], amps[jdx]);
        amps[idx] = u[0][0] * ai + u[0][1] * aj;
        amps[jdx] = u[1][0] * ai + u[1][1] * aj;
    }
}

/// Resonant classical drive on `transition` of `squid`:
/// |i⟩ → cos A|i⟩ − i e^{−iφ} sin A|j⟩, |j⟩ → cos A|j⟩ − i e^{iφ} sin A|i⟩,
/// with A = Ω_ij·t the pulse area.
pub fn classical_pulse(mut state: StateVector, squid: usize, transition: Transition, area: f64, phase: f64) -> Result<StateVector> {
    check_squid(squid)?;
    let transition = Transition::new(transition.from, transition.to)?;
    let (c, s) = (area.cos(), area.sin());
    let u = [
        [Complex64::new(c, 0.0), -I * Complex64::from_polar(s, phase)],
        [-I * Complex64::from_polar(s, -phase), Complex64::new(c, 0.0)],
    ];
    apply_pair(&mut state, squid, transition, |_| true, u);
    Ok(state)
}

/// Resonant SQUID–cavity exchange on the |2⟩↔|3⟩ transition of SQUID 1 or 2
/// for `duration` (g1·t), under
/// H = g_i(a†|2⟩⟨3| + h.c.) − iΓ3|3⟩⟨3| − iκ a†a
/// with the decay terms present only if enabled in `noise`. The generator is
/// block diagonal in {|3⟩|n⟩, |2⟩|n+1⟩}; each block is exponentiated in
/// closed form. At the truncation edge |3⟩|n_max⟩ only decays.
pub fn resonant_exchange(
    mut state: StateVector,
    squid: usize,
    duration: f64,
    noise: &NoiseConfig,
    params: &DeviceParams,
) -> Result<StateVector> {
    check_squid(squid)?;
    if squid == 3 {
        return Err(Error::ExchangeNotAllowed(3));
    }
    non_negative("duration", duration)?;
    let g = params.scaled(params.coupling(squid));
    let gamma = if noise.enable_gamma3 { params.scaled(params.gamma3) } else { 0.0 };
    let kappa = if noise.enable_kappa { params.scaled(params.kappa) } else { 0.0 };

    let n_max = state.n_max();
    let amps = state.amplitudes_mut();
    for idx in 0..amps.len() {
        let label = unchecked_label(idx, n_max);
        let n = label.photons;
        match label.level(squid) {
            3 if n < n_max => {
                let jdx = unchecked_index(label.with_level(squid, 2).with_photons(n + 1), n_max);
                let coupling = Complex64::new(g * ((n + 1) as f64).sqrt(), 0.0);
                let u = propagator_2x2(
                    Complex64::new(0.0, -(gamma + kappa * n as f64)),
                    Complex64::new(0.0, -kappa * (n + 1) as f64),
                    coupling,
                    coupling,
                    duration,
                );
                let (a3, a2) = (amps[idx], amps[jdx]);
                amps[idx] = u[0][0] * a3 + u[0][1] * a2;
                amps[jdx] = u[1][0] * a3 + u[1][1] * a2;
            }
            3 => amps[idx] *= (-(gamma + kappa * n as f64) * duration).exp(),
            2 if n > 0 => {} // partner of a |3⟩|n−1⟩ block
            _ => {
                if n > 0 {
                    amps[idx] *= (-kappa * n as f64 * duration).exp();
                }
            }
        }
    }
    Ok(state)
}

/// Off-resonant cavity–SQUID 3 interaction: with one photon present, level |2⟩
/// of SQUID 3 picks up e^{+i g3² t/Δc} and level |3⟩ e^{−i g3² t/Δc}. The
/// n = 0 manifold is untouched; n ≥ 2 never occurs in the protocol.
pub fn dispersive_wait(mut state: StateVector, duration: f64, params: &DeviceParams) -> Result<StateVector> {
    non_negative("duration", duration)?;
    let angle = params.scaled(params.dispersive_shift()) * duration;
    let up = Complex64::from_polar(1.0, angle);
    let down = Complex64::from_polar(1.0, -angle);
    let n_max = state.n_max();
    for (idx, amp) in state.amplitudes_mut().iter_mut().enumerate() {
        let label = unchecked_label(idx, n_max);
        if label.photons != 1 {
            continue;
        }
        match label.level(3) {
            2 => *amp *= up,
            3 => *amp *= down,
            _ => {}
        }
    }
    Ok(state)
}

/// Free cavity decay: the n-photon amplitude is scaled by e^{−κ t n}.
/// `kappa` is in units of g1.
pub fn free_cavity_decay(mut state: StateVector, duration: f64, kappa: f64) -> Result<StateVector> {
    non_negative("duration", duration)?;
    non_negative("kappa", kappa)?;
    if kappa == 0.0 {
        return Ok(state);
    }
    let stride = state.n_max() + 1;
    let factors: Vec<f64> = (0..stride).map(|n| (-kappa * duration * n as f64).exp()).collect();
    for (idx, amp) in state.amplitudes_mut().iter_mut().enumerate() {
        *amp *= factors[idx % stride];
    }
    Ok(state)
}

/// Amplitudes of the driven SQUID-3 transition when the residual dispersive
/// shift δ acts during a π/2 pulse of Rabi frequency Ω12.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeakageAmplitudes {
    /// cos ξ
    pub alpha: f64,
    /// δ sin ξ / √(δ² + 4Ω12²)
    pub beta: f64,
    /// 2Ω12 sin ξ / √(δ² + 4Ω12²)
    pub gamma: f64,
    /// π √(δ² + 4Ω12²) / (4Ω12)
    pub xi: f64,
}

/// α, β, γ, ξ for a Rabi frequency `omega12` and shift `delta` (same units).
pub fn leakage_amplitudes(omega12: f64, delta: f64) -> Result<LeakageAmplitudes> {
    positive("omega12", omega12)?;
    let s = (delta * delta + 4.0 * omega12 * omega12).sqrt();
    let xi = PI * s / (4.0 * omega12);
    Ok(LeakageAmplitudes {
        alpha: xi.cos(),
        beta: delta * xi.sin() / s,
        gamma: 2.0 * omega12 * xi.sin() / s,
        xi,
    })
}

/// Ω12 pulse on SQUID 3 (ground ↔ |2⟩, ordered that way) of the given area,
/// with the dispersive shift δ = g3²/Δc acting simultaneously on the
/// one-photon manifold. With δ = 0 this is exactly [`classical_pulse`].
pub fn pulse_with_dispersive_leakage(mut state: StateVector, area: f64, phase: f64, params: &DeviceParams) -> Result<StateVector> {
    let omega = params.scaled(params.omega12());
    positive("omega12", omega)?;
    let delta = params.scaled(params.dispersive_shift());
    let transition = Transition::new(params.level_map.physical(3, 1), 2)?;
    let t = area / omega;

    let plain = {
        let (c, s) = (area.cos(), area.sin());
        [
            [Complex64::new(c, 0.0), -I * Complex64::from_polar(s, phase)],
            [-I * Complex64::from_polar(s, -phase), Complex64::new(c, 0.0)],
        ]
    };
    let shifted = propagator_2x2(
        Complex64::new(0.0, 0.0),
        Complex64::new(-delta, 0.0),
        Complex64::from_polar(omega, phase),
        Complex64::from_polar(omega, -phase),
        t,
    );
    apply_pair(&mut state, 3, transition, |n| n != 1, plain);
    apply_pair(&mut state, 3, transition, |n| n == 1, shifted);

    // Undriven |3⟩ of SQUID 3 still carries its dispersive phase.
    let down = Complex64::from_polar(1.0, -delta * t);
    let n_max = state.n_max();
    for (idx, amp) in state.amplitudes_mut().iter_mut().enumerate() {
        let label = unchecked_label(idx, n_max);
        if label.photons == 1 && label.level(3) == 3 {
            *amp *= down;
        }
    }
    Ok(state)
}

/// Executes one scheduled primitive.
pub fn apply_step(state: StateVector, step: &PulseStep, noise: &NoiseConfig, params: &DeviceParams) -> Result<StateVector> {
    let kappa = if noise.enable_kappa { params.scaled(params.kappa) } else { 0.0 };
    match step.kind {
        PulseKind::ClassicalPulse { squid, transition, area, phase } => {
            let leaky = noise.enable_offresonant_leakage
                && squid == 3
                && transition.from == params.level_map.physical(3, 1)
                && transition.to == 2;
            let state = if leaky {
                pulse_with_dispersive_leakage(state, area, phase, params)?
            } else {
                classical_pulse(state, squid, transition, area, phase)?
            };
            if noise.kappa_during_pulses {
                free_cavity_decay(state, step.duration, kappa)
            } else {
                Ok(state)
            }
        }
        PulseKind::ResonantExchange { squid } => resonant_exchange(state, squid, step.duration, noise, params),
        PulseKind::DispersiveWait => {
            let state = dispersive_wait(state, step.duration, params)?;
            if noise.kappa_during_wait {
                free_cavity_decay(state, step.duration, kappa)
            } else {
                Ok(state)
            }
        }
        PulseKind::Idle => free_cavity_decay(state, step.duration, kappa),
    }
}
