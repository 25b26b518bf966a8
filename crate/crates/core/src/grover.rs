//! Marked-state oracles, inversion about the mean and the search loop.

use num_complex::Complex64;
use serde::Serialize;

use crate::device::{DeviceParams, LevelMap, NoiseConfig};
use crate::error::{Error, Result};
use crate::gates::{
    logical_bits, logical_label, logical_state, sigma_x_layer, three_qubit_phase_gate, walsh_hadamard,
    walsh_hadamard_inverse,
};
use crate::hilbert::StateVector;

/// Logical triple (q1, q2, q3).
pub type LogicalState = [usize; 3];

/// Index q1·4 + q2·2 + q3.
pub fn logical_index(bits: LogicalState) -> usize {
    bits[0] * 4 + bits[1] * 2 + bits[2]
}

fn check_target(target: LogicalState) -> Result<()> {
    if target.iter().any(|&b| b > 1) {
        return Err(Error::InvalidParameter {
            name: "target".into(),
            reason: format!("bits must be 0 or 1, got {target:?}"),
        });
    }
    Ok(())
}

/// SQUIDs whose target bit is 0; these are flipped around the phase gate.
fn flipped(target: LogicalState) -> Vec<usize> {
    (1..=3).filter(|&q| target[q - 1] == 0).collect()
}

/// Sign flip of `target`: −iσ_x on the SQUIDs whose target bit is 0, the
/// controlled-phase gate, then the same flips again. Each flipped qubit
/// contributes (−i)², so the logical action is (−1)^m (I − 2|t⟩⟨t|) with m the
/// number of zeros in `target`.
pub fn oracle(state: StateVector, target: LogicalState, noise: &NoiseConfig, params: &DeviceParams) -> Result<StateVector> {
    check_target(target)?;
    let flips = flipped(target);
    let map = &params.level_map;
    let state = sigma_x_layer(state, &flips, map)?;
    let state = three_qubit_phase_gate(state, noise, params)?;
    sigma_x_layer(state, &flips, map)
}

/// Inversion about the mean: Hadamard layer, controlled phase, inverse
/// layer, overall −1. The logical action is 2|ψ⟩⟨ψ| − I with |ψ⟩ uniform.
pub fn diffusion(state: StateVector, noise: &NoiseConfig, params: &DeviceParams) -> Result<StateVector> {
    let map = &params.level_map;
    let state = walsh_hadamard(state, map)?;
    let state = three_qubit_phase_gate(state, noise, params)?;
    let state = walsh_hadamard_inverse(state, map)?;
    Ok(state.scale(Complex64::new(-1.0, 0.0)))
}

/// One search iteration G = −N·C.
pub fn grover_iteration(state: StateVector, target: LogicalState, noise: &NoiseConfig, params: &DeviceParams) -> Result<StateVector> {
    let state = oracle(state, target, noise, params)?;
    let state = diffusion(state, noise, params)?;
    Ok(state.scale(Complex64::new(-1.0, 0.0)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroverConfig {
    pub target: LogicalState,
    pub iterations: usize,
    pub noise: NoiseConfig,
    pub params: DeviceParams,
}

/// Readout of one state: logical probabilities (not renormalized) and the
/// rest of the norm, which sits outside logical ⊗ vacuum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub probabilities: [f64; 8],
    pub leakage: f64,
}

pub fn measure_probabilities(state: &StateVector, map: &LevelMap) -> Measurement {
    let mut probabilities = [0.0; 8];
    for (i, p) in probabilities.iter_mut().enumerate() {
        *p = state.amplitude(logical_label(logical_bits(i), 0, map)).norm_sqr();
    }
    let leakage = (state.norm_sqr() - probabilities.iter().sum::<f64>()).max(0.0);
    Measurement { probabilities, leakage }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// |⟨t|ψ⟩|², norm loss included.
    pub target_probability: f64,
    pub conditional_target_probability: f64,
    /// |⟨ψ_ideal|ψ⟩|².
    pub joint_fidelity: f64,
    pub conditional_fidelity: f64,
    pub norm_sqr: f64,
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub target: LogicalState,
    /// Records for k = 0 (uniform state) through the configured count.
    pub records: Vec<IterationRecord>,
}

impl RunResult {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a run always holds the k = 0 record")
    }
}

/// Noise-free logical state after `k` iterations, from the 8×8 algebra.
pub fn ideal_logical_state(target: LogicalState, k: usize) -> [f64; 8] {
    let t = logical_index(target);
    let mut v = [8f64.sqrt().recip(); 8];
    for _ in 0..k {
        v[t] = -v[t];
        let mean = v.iter().sum::<f64>() / 8.0;
        for x in &mut v {
            *x = 2.0 * mean - *x;
        }
    }
    v
}

/// sin²((2k+1)·arcsin(1/√8)).
pub fn ideal_success_probability(k: usize) -> f64 {
    let angle = (8f64.sqrt().recip()).asin();
    ((2 * k + 1) as f64 * angle).sin().powi(2)
}

fn record(state: &StateVector, iteration: usize, target: LogicalState, map: &LevelMap) -> IterationRecord {
    let m = measure_probabilities(state, map);
    let norm_sqr = state.norm_sqr();
    let ideal = ideal_logical_state(target, iteration);
    let overlap: Complex64 = (0..8)
        .map(|i| state.amplitude(logical_label(logical_bits(i), 0, map)) * ideal[i])
        .sum();
    let joint_fidelity = overlap.norm_sqr();
    let target_probability = m.probabilities[logical_index(target)];
    IterationRecord {
        iteration,
        target_probability,
        conditional_target_probability: target_probability / norm_sqr,
        joint_fidelity,
        conditional_fidelity: joint_fidelity / norm_sqr,
        norm_sqr,
        leakage: m.leakage,
    }
}

/// Hadamard layer on |000⟩ ⊗ vacuum followed by `iterations` rounds of
/// G = −N·C, all at pulse level.
pub fn grover_run(config: &GroverConfig) -> Result<RunResult> {
    check_target(config.target)?;
    let map = &config.params.level_map;
    let mut state = walsh_hadamard(logical_state([0, 0, 0], map)?, map)?;
    let mut records = vec![record(&state, 0, config.target, map)];
    for k in 1..=config.iterations {
        state = grover_iteration(state, config.target, &config.noise, &config.params)?;
        records.push(record(&state, k, config.target, map));
    }
    Ok(RunResult { target: config.target, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::paper_device;
    use crate::gates::{extract_logical_matrix, LogicalGateMatrix, Matrix8};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn config(target: LogicalState, iterations: usize, noise: NoiseConfig, params: DeviceParams) -> GroverConfig {
        GroverConfig { target, iterations, noise, params }
    }

    #[test]
    fn ideal_curve_for_every_target() {
        for t in 0..8 {
            let target = logical_bits(t);
            let run = grover_run(&config(target, 10, NoiseConfig::ideal(), paper_device())).unwrap();
            assert_eq!(run.records.len(), 11);
            for r in &run.records {
                assert!((r.target_probability - ideal_success_probability(r.iteration)).abs() < 1e-9);
                assert!((r.joint_fidelity - 1.0).abs() < 1e-9);
                assert!((r.norm_sqr - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_values() {
        assert!((ideal_success_probability(0) - 0.125).abs() < 1e-15);
        assert!((ideal_success_probability(1) - 25.0 / 32.0).abs() < 1e-15);
        let best = (0..=10).max_by(|&a, &b| ideal_success_probability(a).total_cmp(&ideal_success_probability(b)));
        assert_eq!(best, Some(6));
        assert!((ideal_success_probability(6) - 0.9998).abs() < 1e-4);
        let v = ideal_logical_state([1, 1, 1], 1);
        assert!((v[7].powi(2) - 25.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn non_targets_stay_symmetric() {
        let d = paper_device();
        let target = [0, 1, 0];
        let mut state = walsh_hadamard(logical_state([0, 0, 0], &d.level_map).unwrap(), &d.level_map).unwrap();
        for _ in 0..7 {
            state = grover_iteration(state, target, &NoiseConfig::ideal(), &d).unwrap();
            let m = measure_probabilities(&state, &d.level_map);
            let others: Vec<f64> = (0..8).filter(|&i| i != logical_index(target)).map(|i| m.probabilities[i]).collect();
            let spread = others.iter().cloned().fold(f64::MIN, f64::max) - others.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1e-10);
        }
    }

    fn printed_oracle(target: usize) -> Matrix8 {
        // (−1)^m · X_mask · Q_π · X_mask, m = number of zeros in the target
        let mask = 7 ^ target;
        let m = mask.count_ones() as i32;
        let mut x = Matrix8::zeros();
        for col in 0..8 {
            x[(col ^ mask, col)] = c(1.0);
        }
        x * LogicalGateMatrix::controlled_phase().matrix() * x * c((-1f64).powi(m))
    }

    #[test]
    fn oracle_matches_sign_flip_for_every_target() {
        let d = paper_device();
        for t in 0..8 {
            let m = extract_logical_matrix(|s| oracle(s, logical_bits(t), &NoiseConfig::ideal(), &d), &d.level_map).unwrap();
            assert!(m.max_diff_up_to_phase(&LogicalGateMatrix::sign_flip(t)) < 1e-9);
            // exactly as written, including the overall sign
            assert!(m.max_diff(&LogicalGateMatrix::new(printed_oracle(t))) < 1e-12);
        }
        let c111 = extract_logical_matrix(|s| oracle(s, [1, 1, 1], &NoiseConfig::ideal(), &d), &d.level_map).unwrap();
        assert!(c111.max_diff(&LogicalGateMatrix::controlled_phase()) < 1e-12);
    }

    #[test]
    fn oracle_on_uniform_state() {
        let d = paper_device();
        let map = &d.level_map;
        let uniform = walsh_hadamard(logical_state([0, 0, 0], map).unwrap(), map).unwrap();
        let out = oracle(uniform, [0, 0, 1], &NoiseConfig::ideal(), &d).unwrap();
        for i in 0..8 {
            let sign = if i == 1 { -1.0 } else { 1.0 };
            let a = out.amplitude(logical_label(logical_bits(i), 0, map));
            assert!((a - c(sign / 8f64.sqrt())).norm() < 1e-12);
        }
    }

    #[test]
    fn diffusion_is_inversion_about_mean() {
        let d = paper_device();
        let map = &d.level_map;
        let n = extract_logical_matrix(|s| diffusion(s, &NoiseConfig::ideal(), &d), map).unwrap();
        let reflection = Matrix8::identity() - Matrix8::from_element(c(0.25));
        assert!(n.max_diff_up_to_phase(&LogicalGateMatrix::new(reflection)) < 1e-9);
        assert!(n.max_diff(&LogicalGateMatrix::new(-reflection)) < 1e-12);

        let uniform = walsh_hadamard(logical_state([0, 0, 0], map).unwrap(), map).unwrap();
        let out = diffusion(uniform.clone(), &NoiseConfig::ideal(), &d).unwrap();
        let diff = out.add_scaled(c(-1.0), &uniform).unwrap();
        assert!(diff.norm() < 1e-12);

        // |000⟩ − |001⟩ is orthogonal to the uniform state
        let v = logical_state([0, 0, 0], map)
            .unwrap()
            .add_scaled(c(-1.0), &logical_state([0, 0, 1], map).unwrap())
            .unwrap();
        let out = diffusion(v.clone(), &NoiseConfig::ideal(), &d).unwrap();
        assert!(out.add_scaled(c(1.0), &v).unwrap().norm() < 1e-12);
    }

    #[test]
    fn global_sign_does_not_change_probabilities() {
        let d = paper_device();
        let map = &d.level_map;
        let target = [1, 0, 1];
        let mut with = walsh_hadamard(logical_state([0, 0, 0], map).unwrap(), map).unwrap();
        let mut without = with.clone();
        for _ in 0..4 {
            with = grover_iteration(with, target, &NoiseConfig::ideal(), &d).unwrap();
            without = diffusion(oracle(without, target, &NoiseConfig::ideal(), &d).unwrap(), &NoiseConfig::ideal(), &d).unwrap();
            let (a, b) = (measure_probabilities(&with, map), measure_probabilities(&without, map));
            for i in 0..8 {
                assert!((a.probabilities[i] - b.probabilities[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn measurement_examples() {
        let d = paper_device();
        let map = &d.level_map;
        let m = measure_probabilities(&logical_state([0, 1, 0], map).unwrap(), map);
        assert_eq!(m.probabilities[2], 1.0);
        assert_eq!(m.leakage, 0.0);
        let s = StateVector::basis(crate::hilbert::BasisLabel::new(2, 0, 1, 0), 2).unwrap().scale(c(0.5));
        let m = measure_probabilities(&s, map);
        assert_eq!(m.probabilities, [0.0; 8]);
        assert!((m.leakage - 0.25).abs() < 1e-15);
        let u = walsh_hadamard(logical_state([0, 0, 0], map).unwrap(), map).unwrap();
        for p in measure_probabilities(&u, map).probabilities {
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn norm_decreases_with_iterations_under_decay() {
        for params in [paper_device().with_gamma3_ratio(0.004), paper_device().with_kappa_ratio(0.007)] {
            let noise = NoiseConfig { enable_gamma3: true, enable_kappa: true, ..NoiseConfig::ideal() };
            let run = grover_run(&config([1, 1, 1], 6, noise, params)).unwrap();
            for w in run.records.windows(2) {
                assert!(w[1].norm_sqr <= w[0].norm_sqr + 1e-15);
            }
            for r in &run.records {
                assert!((r.conditional_fidelity * r.norm_sqr - r.joint_fidelity).abs() < 1e-15);
                assert!(r.target_probability <= 1.0 + 1e-9 && r.conditional_fidelity <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_target() {
        assert!(grover_run(&config([0, 2, 1], 1, NoiseConfig::ideal(), paper_device())).is_err());
    }
}
