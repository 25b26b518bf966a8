//! Single-qubit layers, the eight-stage controlled-phase schedule and the
//! logical 8×8 view of a gate.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::device::{DeviceParams, LevelMap, NoiseConfig};
use crate::error::{Error, Result};
use crate::hilbert::{BasisLabel, StateVector, DEFAULT_N_MAX};
use crate::pulses::{apply_step, classical_pulse, PulseKind, PulseStep, Transition};

/// Tolerance on population outside logical ⊗ vacuum before a phase gate.
pub const PRECONDITION_TOL: f64 = 1e-9;
/// Tolerance on residue outside logical ⊗ vacuum when extracting a matrix.
pub const RESIDUE_TOL: f64 = 1e-10;

/// Logical bits (q1, q2, q3) to the physical basis label with `photons`.
pub fn logical_label(bits: [usize; 3], photons: usize, map: &LevelMap) -> BasisLabel {
    BasisLabel::new(map.physical(1, bits[0]), map.physical(2, bits[1]), map.physical(3, bits[2]), photons)
}

/// Index q1·4 + q2·2 + q3 to bits.
pub fn logical_bits(index: usize) -> [usize; 3] {
    [(index >> 2) & 1, (index >> 1) & 1, index & 1]
}

/// Logical basis state |q1 q2 q3⟩ ⊗ vacuum.
pub fn logical_state(bits: [usize; 3], map: &LevelMap) -> Result<StateVector> {
    for (squid, &b) in bits.iter().enumerate() {
        if b > 1 {
            return Err(Error::LevelOutOfRange { squid: squid + 1, level: b });
        }
    }
    StateVector::basis(logical_label(bits, 0, map), DEFAULT_N_MAX)
}

/// Population of `state` outside the logical ⊗ vacuum subspace.
pub fn population_outside_logical(state: &StateVector, map: &LevelMap) -> f64 {
    let inside: f64 = (0..8).map(|i| state.amplitude(logical_label(logical_bits(i), 0, map)).norm_sqr()).sum();
    (state.norm_sqr() - inside).max(0.0)
}

/// cos θ·I − i sin θ(e^{iφ}|0⟩⟨1| + e^{−iφ}|1⟩⟨0|) on the logical levels of
/// `squid`, i.e. a resonant pulse on the ordered pair (logical 0, logical 1).
/// θ = π/4, φ = −π/2 takes |0⟩ to (|0⟩ + |1⟩)/√2.
pub fn single_qubit_gate(state: StateVector, squid: usize, theta: f64, phi: f64, map: &LevelMap) -> Result<StateVector> {
    if !(1..=3).contains(&squid) {
        return Err(Error::InvalidSquid(squid));
    }
    let t = Transition::new(map.physical(squid, 0), map.physical(squid, 1))?;
    classical_pulse(state, squid, t, theta, phi)
}

/// Hadamard-like layer (θ = π/4, φ = −π/2) on all three SQUIDs.
pub fn walsh_hadamard(state: StateVector, map: &LevelMap) -> Result<StateVector> {
    (1..=3).try_fold(state, |s, q| single_qubit_gate(s, q, FRAC_PI_4, -FRAC_PI_2, map))
}

/// Inverse of [`walsh_hadamard`] (φ shifted by π).
pub fn walsh_hadamard_inverse(state: StateVector, map: &LevelMap) -> Result<StateVector> {
    (1..=3).try_fold(state, |s, q| single_qubit_gate(s, q, FRAC_PI_4, FRAC_PI_2, map))
}

/// −iσ_x on each listed SQUID (π/2 pulse, φ = 0).
pub fn sigma_x_layer(state: StateVector, squids: &[usize], map: &LevelMap) -> Result<StateVector> {
    squids.iter().try_fold(state, |s, &q| single_qubit_gate(s, q, FRAC_PI_2, 0.0, map))
}

/// Ordered list of primitives.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Schedule {
    steps: Vec<PulseStep>,
}

impl Schedule {
    pub fn new(steps: Vec<PulseStep>) -> Self {
        Self { steps }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> &[PulseStep] {
        &self.steps
    }

    /// Wall-clock duration (g1·t). A step flagged `simultaneous` overlaps the
    /// one before it and contributes only the excess of its own duration.
    pub fn total_duration(&self) -> f64 {
        let mut total = 0.0;
        let mut last = 0.0;
        for step in &self.steps {
            if step.simultaneous {
                if step.duration > last {
                    total += step.duration - last;
                    last = step.duration;
                }
            } else {
                total += step.duration;
                last = step.duration;
            }
        }
        total
    }

    /// Number of distinct stage labels.
    pub fn stage_count(&self) -> usize {
        let mut stages: Vec<u8> = self.steps.iter().map(|s| s.stage).collect();
        stages.dedup();
        stages.len()
    }

    /// The steps of stages 1..=`last_stage`.
    pub fn truncated(&self, last_stage: u8) -> Self {
        Self::new(self.steps.iter().copied().filter(|s| s.stage <= last_stage).collect())
    }

    pub fn apply(&self, state: StateVector, noise: &NoiseConfig, params: &DeviceParams) -> Result<StateVector> {
        self.steps.iter().try_fold(state, |s, step| apply_step(s, step, noise, params))
    }

    /// Plain-text table of the schedule with durations in g1·t and ns.
    pub fn dump(&self, params: &DeviceParams) -> String {
        let ns = 1e9 / params.reference_rate();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<5} {:<10} {:<5} {:<10} {:>10} {:>10} {:>10} {:>9}",
            "stage", "kind", "squid", "transition", "area", "phase", "g1*t", "ns"
        );
        for step in &self.steps {
            let (kind, squid, transition, area, phase) = match step.kind {
                PulseKind::ClassicalPulse { squid, transition, area, phase } => (
                    if step.simultaneous { "pulse||" } else { "pulse" },
                    squid.to_string(),
                    format!("{}->{}", transition.from, transition.to),
                    format!("{area:.6}"),
                    format!("{phase:.6}"),
                ),
                PulseKind::ResonantExchange { squid } => ("exchange", squid.to_string(), "2<->3".into(), "-".into(), "-".into()),
                PulseKind::DispersiveWait => ("wait", "3".into(), "2<->3".into(), "-".into(), "-".into()),
                PulseKind::Idle => ("idle", "-".into(), "-".into(), "-".into(), "-".into()),
            };
            let _ = writeln!(
                out,
                "{:<5} {:<10} {:<5} {:<10} {:>10} {:>10} {:>10.6} {:>9.4}",
                step.stage,
                kind,
                squid,
                transition,
                area,
                phase,
                step.duration,
                step.duration * ns
            );
        }
        let _ = writeln!(
            out,
            "total g1*t = {:.6}, {:.4} ns",
            self.total_duration(),
            self.total_duration() * ns
        );
        out
    }
}

fn pulse(params: &DeviceParams, stage: u8, squid: usize, from: usize, to: usize, phase: f64, simultaneous: bool) -> Result<PulseStep> {
    // levels are given as named in the protocol; SQUID 3 maps 0/1
    let (a, b) = (params.level_map.named(squid, from), params.level_map.named(squid, to));
    let transition = Transition::new(a, b)?;
    let rabi = params.scaled(params.rabi(squid, a, b));
    crate::error::positive("rabi", rabi)?;
    Ok(PulseStep {
        kind: PulseKind::ClassicalPulse { squid, transition, area: FRAC_PI_2, phase },
        duration: FRAC_PI_2 / rabi,
        stage,
        simultaneous,
    })
}

fn exchange(params: &DeviceParams, stage: u8, squid: usize) -> PulseStep {
    PulseStep {
        kind: PulseKind::ResonantExchange { squid },
        duration: FRAC_PI_2 / params.scaled(params.coupling(squid)),
        stage,
        simultaneous: false,
    }
}

/// The eight-stage controlled-phase schedule for `params`.
pub fn phase_gate_schedule(params: &DeviceParams) -> Result<Schedule> {
    let p = params;
    let wait = PulseStep {
        kind: PulseKind::DispersiveWait,
        duration: PI / p.scaled(p.dispersive_shift()),
        stage: 4,
        simultaneous: false,
    };
    Ok(Schedule::new(vec![
        pulse(p, 1, 1, 1, 3, PI, false)?,
        exchange(p, 1, 1),
        pulse(p, 2, 1, 0, 2, FRAC_PI_2, false)?,
        pulse(p, 2, 2, 0, 2, -FRAC_PI_2, true)?,
        exchange(p, 3, 2),
        pulse(p, 3, 2, 3, 0, PI, false)?,
        pulse(p, 4, 3, 1, 2, -FRAC_PI_2, false)?,
        wait,
        pulse(p, 5, 3, 1, 2, FRAC_PI_2, false)?,
        pulse(p, 6, 2, 3, 0, PI, false)?,
        exchange(p, 6, 2),
        pulse(p, 7, 2, 0, 2, FRAC_PI_2, false)?,
        pulse(p, 7, 1, 0, 2, -FRAC_PI_2, true)?,
        exchange(p, 8, 1),
        pulse(p, 8, 1, 3, 1, PI, false)?,
    ]))
}

/// Pulse-level three-qubit controlled-phase gate. Noise-free, it flips the
/// sign of |111⟩ and returns the cavity to vacuum. With decay channels on,
/// the unnormalized conditional state is returned.
///
/// The input must lie in logical ⊗ vacuum (to 1e-9) when no noise channel is
/// enabled; with noise the carried leakage of earlier gates is accepted.
pub fn three_qubit_phase_gate(state: StateVector, noise: &NoiseConfig, params: &DeviceParams) -> Result<StateVector> {
    if noise.is_ideal() {
        let population = population_outside_logical(&state, &params.level_map);
        if population > PRECONDITION_TOL {
            return Err(Error::PreconditionViolated { population });
        }
    }
    phase_gate_schedule(params)?.apply(state, noise, params)
}

pub type Matrix8 = SMatrix<Complex64, 8, 8>;

/// A gate restricted to the logical basis |q1 q2 q3⟩ (row/column q1·4+q2·2+q3).
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalGateMatrix {
    matrix: Matrix8,
}

impl LogicalGateMatrix {
    pub fn new(matrix: Matrix8) -> Self {
        Self { matrix }
    }

    /// Q_π = diag(1, 1, 1, 1, 1, 1, 1, −1).
    pub fn controlled_phase() -> Self {
        let mut m = Matrix8::identity();
        m[(7, 7)] = Complex64::new(-1.0, 0.0);
        Self::new(m)
    }

    /// I − 2|t⟩⟨t| for logical index `target`.
    pub fn sign_flip(target: usize) -> Self {
        let mut m = Matrix8::identity();
        m[(target, target)] = Complex64::new(-1.0, 0.0);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix8 {
        &self.matrix
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.matrix.adjoint() * self.matrix - Matrix8::identity()).iter().all(|z| z.norm() < tol)
    }

    /// |tr(M†·other)|/8; 1 iff equal up to a global phase (for unitaries).
    pub fn phase_overlap(&self, other: &Self) -> f64 {
        (self.matrix.adjoint() * other.matrix).trace().norm() / 8.0
    }

    /// Largest entrywise |M − e^{iχ}·other| after the best global phase χ.
    pub fn max_diff_up_to_phase(&self, other: &Self) -> f64 {
        let tr = (other.matrix.adjoint() * self.matrix).trace();
        let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { Complex64::new(1.0, 0.0) };
        (self.matrix - other.matrix * phase).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        (self.matrix - other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Columns are the images of the eight logical basis states ⊗ vacuum under
/// `gate`. Fails if any image leaves population outside logical ⊗ vacuum.
pub fn extract_logical_matrix<F>(gate: F, map: &LevelMap) -> Result<LogicalGateMatrix>
where
    F: Fn(StateVector) -> Result<StateVector>,
{
    let mut m = Matrix8::zeros();
    for col in 0..8 {
        let out = gate(logical_state(logical_bits(col), map)?)?;
        let population = population_outside_logical(&out, map);
        if population > RESIDUE_TOL {
            return Err(Error::NonVacuumResidue { population });
        }
        for row in 0..8 {
            m[(row, col)] = out.amplitude(logical_label(logical_bits(row), 0, map));
        }
    }
    Ok(LogicalGateMatrix::new(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::paper_device;
    use std::f64::consts::FRAC_1_SQRT_2;

    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn map() -> LevelMap {
        LevelMap::default()
    }

    fn near(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn hadamard_like_actions() {
        let m = map();
        for squid in 1..=3 {
            let mut bits = [0, 0, 0];
            let s = single_qubit_gate(logical_state(bits, &m).unwrap(), squid, FRAC_PI_4, -FRAC_PI_2, &m).unwrap();
            assert!(near(s.amplitude(logical_label(bits, 0, &m)), c(FRAC_1_SQRT_2, 0.0)));
            bits[squid - 1] = 1;
            assert!(near(s.amplitude(logical_label(bits, 0, &m)), c(FRAC_1_SQRT_2, 0.0)));

            let s = single_qubit_gate(logical_state(bits, &m).unwrap(), squid, FRAC_PI_4, -FRAC_PI_2, &m).unwrap();
            assert!(near(s.amplitude(logical_label(bits, 0, &m)), c(FRAC_1_SQRT_2, 0.0)));
            bits[squid - 1] = 0;
            assert!(near(s.amplitude(logical_label(bits, 0, &m)), c(-FRAC_1_SQRT_2, 0.0)));
        }
        let s = logical_state([1, 0, 1], &m).unwrap();
        assert_eq!(single_qubit_gate(s.clone(), 3, 0.0, 1.0, &m).unwrap(), s);
    }

    #[test]
    fn walsh_hadamard_makes_uniform_state() {
        let m = map();
        let s = walsh_hadamard(logical_state([0, 0, 0], &m).unwrap(), &m).unwrap();
        for i in 0..8 {
            assert!(near(s.amplitude(logical_label(logical_bits(i), 0, &m)), c(8f64.sqrt().recip(), 0.0)));
        }
        let back = walsh_hadamard_inverse(s, &m).unwrap();
        assert!(near(back.amplitude(logical_label([0, 0, 0], 0, &m)), ONE));
    }

    #[test]
    fn hadamard_inverse_matches_matrix_inverse() {
        let m = map();
        let h = extract_logical_matrix(|s| walsh_hadamard(s, &m), &m).unwrap();
        let hinv = extract_logical_matrix(|s| walsh_hadamard_inverse(s, &m), &m).unwrap();
        let inv = h.matrix().try_inverse().unwrap();
        assert!(LogicalGateMatrix::new(inv).max_diff(&hinv) < 1e-12);
    }

    #[test]
    fn layers_on_distinct_squids_commute() {
        let m = map();
        let s = walsh_hadamard(logical_state([0, 1, 1], &m).unwrap(), &m).unwrap();
        let a = sigma_x_layer(single_qubit_gate(s.clone(), 2, 0.3, 0.9, &m).unwrap(), &[1, 3], &m).unwrap();
        let b = single_qubit_gate(sigma_x_layer(s, &[3, 1], &m).unwrap(), 2, 0.3, 0.9, &m).unwrap();
        let d: f64 = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(d < 1e-15);
    }

    #[test]
    fn sigma_x_layer_examples() {
        let m = map();
        let s = sigma_x_layer(logical_state([0, 0, 0], &m).unwrap(), &[2], &m).unwrap();
        assert!(near(s.amplitude(logical_label([0, 1, 0], 0, &m)), c(0.0, -1.0)));
        let s = sigma_x_layer(sigma_x_layer(logical_state([1, 0, 0], &m).unwrap(), &[1], &m).unwrap(), &[1], &m).unwrap();
        assert!(near(s.amplitude(logical_label([1, 0, 0], 0, &m)), -ONE));
        let s = logical_state([1, 1, 0], &m).unwrap();
        assert_eq!(sigma_x_layer(s.clone(), &[], &m).unwrap(), s);

        // −i·(I ⊗ I ⊗ X)
        let x3 = extract_logical_matrix(|s| sigma_x_layer(s, &[3], &m), &m).unwrap();
        let mut expected = Matrix8::zeros();
        for col in 0..8 {
            expected[(col ^ 1, col)] = c(0.0, -1.0);
        }
        assert!(x3.max_diff(&LogicalGateMatrix::new(expected)) < 1e-15);
    }

    #[test]
    fn identity_schedule_extracts_identity() {
        let d = paper_device();
        let id = extract_logical_matrix(|s| Schedule::identity().apply(s, &NoiseConfig::ideal(), &d), &d.level_map).unwrap();
        assert_eq!(id.matrix(), &Matrix8::identity());
    }

    #[test]
    fn schedule_shape() {
        let d = paper_device();
        let s = phase_gate_schedule(&d).unwrap();
        assert_eq!(s.stage_count(), 8);
        assert_eq!(s.steps().len(), 15);
        // pulses π/(2Ω) with Ω = 10g, exchanges π/2, wait 10π
        let expected = 8.0 * PI / 20.0 + 2.0 * PI + 10.0 * PI;
        assert!((s.total_duration() - expected).abs() < 1e-12);
        let text = s.dump(&d);
        assert_eq!(text.lines().count(), 17);
        assert!(text.contains("wait"));
    }

    type Row = ([usize; 4], f64);

    // named levels (SQUID 3 uses its protocol names), photons; amplitude
    fn check_stage(stage: u8, table: [Row; 8]) {
        let d = paper_device();
        let sched = phase_gate_schedule(&d).unwrap().truncated(stage);
        for (input, (named, amp)) in table.into_iter().enumerate() {
            let s = logical_state(logical_bits(input), &d.level_map).unwrap();
            let out = sched.apply(s, &NoiseConfig::ideal(), &d).unwrap();
            let label = BasisLabel::new(named[0], named[1], d.level_map.named(3, named[2]), named[3]);
            assert!(
                near(out.amplitude(label), c(amp, 0.0)),
                "stage {stage}, input {input}: {:?}",
                out.amplitude(label)
            );
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn occupancy_after_stage_three() {
        check_stage(
            3,
            [
                ([2, 2, 0, 0], -1.0),
                ([2, 2, 1, 0], -1.0),
                ([2, 1, 0, 0], -1.0),
                ([2, 1, 1, 0], -1.0),
                ([0, 0, 0, 0], 1.0),
                ([0, 0, 1, 0], 1.0),
                ([0, 1, 0, 1], 1.0),
                ([0, 1, 1, 1], 1.0),
            ],
        );
    }

    #[test]
    fn occupancy_after_stage_six() {
        check_stage(
            6,
            [
                ([2, 2, 0, 0], -1.0),
                ([2, 2, 1, 0], -1.0),
                ([2, 1, 0, 0], -1.0),
                ([2, 1, 1, 0], -1.0),
                ([0, 2, 0, 1], 1.0),
                ([0, 2, 1, 1], 1.0),
                ([0, 1, 0, 1], 1.0),
                ([0, 1, 1, 1], -1.0),
            ],
        );
    }

    #[test]
    fn occupancy_after_stage_eight() {
        let mut table = [([0; 4], 1.0); 8];
        for (i, row) in table.iter_mut().enumerate() {
            let b = logical_bits(i);
            *row = ([b[0], b[1], b[2], 0], if i == 7 { -1.0 } else { 1.0 });
        }
        check_stage(8, table);
    }

    #[test]
    fn phase_gate_is_controlled_phase() {
        let d = paper_device();
        let q = extract_logical_matrix(|s| three_qubit_phase_gate(s, &NoiseConfig::ideal(), &d), &d.level_map).unwrap();
        let target = LogicalGateMatrix::controlled_phase();
        assert!(q.is_unitary(1e-10));
        assert!((q.phase_overlap(&target) - 1.0).abs() < 1e-10);
        assert!(q.max_diff_up_to_phase(&target) < 1e-10);
    }

    #[test]
    fn phase_gate_examples_and_vacuum_return() {
        let d = paper_device();
        let m = d.level_map;
        let out = three_qubit_phase_gate(logical_state([1, 1, 1], &m).unwrap(), &NoiseConfig::ideal(), &d).unwrap();
        assert!(near(out.amplitude(logical_label([1, 1, 1], 0, &m)), -ONE));
        let out = three_qubit_phase_gate(logical_state([1, 1, 0], &m).unwrap(), &NoiseConfig::ideal(), &d).unwrap();
        assert!(near(out.amplitude(logical_label([1, 1, 0], 0, &m)), ONE));

        let uniform = walsh_hadamard(logical_state([0, 0, 0], &m).unwrap(), &m).unwrap();
        let out = three_qubit_phase_gate(uniform, &NoiseConfig::ideal(), &d).unwrap();
        for i in 0..8 {
            let sign = if i == 7 { -1.0 } else { 1.0 };
            assert!(near(out.amplitude(logical_label(logical_bits(i), 0, &m)), c(sign / 8f64.sqrt(), 0.0)));
        }
        assert!(out.photon_population(1) < 1e-12 && out.photon_population(2) < 1e-12);
    }

    #[test]
    fn phase_gate_rejects_occupied_auxiliary_levels() {
        let d = paper_device();
        let s = StateVector::basis(BasisLabel::new(2, 0, 1, 0), 2).unwrap();
        assert!(matches!(
            three_qubit_phase_gate(s, &NoiseConfig::ideal(), &d),
            Err(Error::PreconditionViolated { .. })
        ));
        let s = StateVector::basis(BasisLabel::new(0, 0, 1, 1), 2).unwrap();
        assert!(three_qubit_phase_gate(s, &NoiseConfig::ideal(), &d).is_err());
    }

    #[test]
    fn extraction_reports_residue() {
        let d = paper_device();
        let half = phase_gate_schedule(&d).unwrap().truncated(3);
        let err = extract_logical_matrix(|s| half.apply(s, &NoiseConfig::ideal(), &d), &d.level_map).unwrap_err();
        assert!(matches!(err, Error::NonVacuumResidue { .. }));
    }

    #[test]
    fn decay_survival_pattern() {
        // Inputs that never populate level |3⟩ keep unit norm; those that
        // pass through one or two exchanges lose norm.
        let d = paper_device().with_gamma3_ratio(0.004);
        let noise = NoiseConfig::gamma3_only();
        let norms: Vec<f64> = (0..8)
            .map(|i| {
                let s = logical_state(logical_bits(i), &d.level_map).unwrap();
                three_qubit_phase_gate(s, &noise, &d).unwrap().norm_sqr()
            })
            .collect();
        for &n in &norms[..4] {
            assert!((n - 1.0).abs() < 1e-15);
        }
        for &n in &norms[4..] {
            assert!(n < 1.0);
        }
        assert!(norms[4] < norms[6]);
    }
}
