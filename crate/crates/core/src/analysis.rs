//! Closed-form fidelity and success formulas, their numerical counterparts
//! from the pulse-level gate, the timing budget and figure tables.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::device::{DeviceParams, NoiseConfig};
use crate::error::{non_negative, positive, Error, Result};
use crate::gates::{logical_bits, logical_label, logical_state, phase_gate_schedule};
use crate::grover::{grover_run, ideal_success_probability, GroverConfig, LogicalState, RunResult};
use crate::hilbert::StateVector;
use crate::pulses::leakage_amplitudes;

pub mod quadrature {
    //! Gauss–Legendre rules.

    use std::f64::consts::PI;

    /// Nodes and weights of the `n`-point rule on [−1, 1].
    pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    }

    /// (P_n(x), P_n'(x)) by the three-term recurrence.
    fn legendre(n: usize, x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, x);
        if n == 0 {
            return (1.0, 0.0);
        }
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, d)
    }

    /// ∫_a^b f with the `n`-point rule.
    pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let (x, w) = gauss_legendre(n);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        x.iter().zip(&w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
    }
}

/// Quadrature nodes used for every ν average.
pub const NU_NODES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Quadrature,
    Simulation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FidelityReport {
    pub r: f64,
    pub f_ave: f64,
    pub p: f64,
    pub source: Source,
}

/// Amplitude reaching |2⟩|1⟩ after a quarter-period exchange with level-|3⟩
/// decay: (2g/λ) e^{−πΓ/4g} sin(πλ/4g), λ = √(4g² − Γ²).
pub fn r_factor(gamma3: f64, g: f64) -> Result<f64> {
    non_negative("gamma3", gamma3)?;
    positive("g", g)?;
    if gamma3 >= 2.0 * g {
        return Err(Error::Overdamped { gamma3, two_g: 2.0 * g });
    }
    let lambda = (4.0 * g * g - gamma3 * gamma3).sqrt();
    Ok(2.0 * g / lambda * (-PI * gamma3 / (4.0 * g)).exp() * (PI * lambda / (4.0 * g)).sin())
}

/// Average phase-gate fidelity under level decay, as a polynomial in r.
pub fn favg_level_decay(r: f64) -> f64 {
    let r2 = r * r;
    (63.0 + r2 * (48.0 + r2 * (164.0 + r2 * (32.0 + 8.0 * r2)))) / 315.0
}

/// Fidelity for the product input (cos ν|0⟩ + sin ν|1⟩)^{⊗3} under level decay.
pub fn fidelity_level_decay(nu: f64, r: f64) -> f64 {
    let (c, s) = (nu.cos(), nu.sin());
    let r2 = r * r;
    let amp = 1.0 + c * c * s * s * (r2 * r2 - 1.0) + s.powi(4) * (r2 - 1.0);
    amp * amp
}

/// Logical amplitudes of (cos ν|0⟩ + sin ν|1⟩)^{⊗3}, index q1·4 + q2·2 + q3.
pub fn generic_profile(nu: f64) -> [f64; 8] {
    let (c, s) = (nu.cos(), nu.sin());
    let mut out = [0.0; 8];
    for (i, a) in out.iter_mut().enumerate() {
        let ones = (i as u32).count_ones() as i32;
        *a = c.powi(3 - ones) * s.powi(ones);
    }
    out
}

/// Phase-gate success probability for a normalized logical profile: inputs
/// |10x⟩ survive with r⁸, |11x⟩ with r⁴, the rest with 1.
pub fn success_level_decay(profile: &[f64; 8], r: f64) -> Result<f64> {
    let norm: f64 = profile.iter().map(|a| a * a).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    let r4 = r.powi(4);
    let weights = [1.0, 1.0, 1.0, 1.0, r4 * r4, r4 * r4, r4, r4];
    Ok(profile.iter().zip(weights).map(|(a, w)| w * a * a).sum())
}

/// (F_ave, P) of the phase gate with cavity decay κ over one exchange time
/// `t` (any consistent units).
pub fn favg_cavity_decay(kappa: f64, t: f64) -> Result<(f64, f64)> {
    non_negative("kappa", kappa)?;
    non_negative("t", t)?;
    let e = |x: f64| (-x * kappa * t).exp();
    let amp = 4.0 + 2.0 * e(2.0) + e(1.0) + e(1.5);
    let pop = 4.0 + 2.0 * e(4.0) + e(2.0) + e(3.0);
    Ok((amp * amp / (8.0 * pop), pop / 8.0))
}

/// Average fidelity when the dispersive shift acts during the two SQUID-3
/// pulses, δ = g3²/Δc. Rates in any consistent units.
pub fn favg_offresonant(omega12: f64, g3: f64, delta_c: f64) -> Result<f64> {
    positive("omega12", omega12)?;
    let delta = g3 * g3 / delta_c;
    let la = leakage_amplitudes(omega12, delta)?;
    let (a2, b2, g2) = (la.alpha.powi(2), la.beta.powi(2), la.gamma.powi(2));
    Ok((1.0 + a2 * a2 + b2 * b2 + g2 + g2 * g2 + b2 * (1.0 + 2.0 * g2) - a2 * (1.0 + 2.0 * b2 + 2.0 * g2)) / 3.0)
}

/// F(x) = |1 − x − x(α² − β² − γ²)|², x the |111⟩ population.
pub fn fidelity_offresonant(x: f64, omega12: f64, g3: f64, delta_c: f64) -> Result<f64> {
    positive("omega12", omega12)?;
    let la = leakage_amplitudes(omega12, g3 * g3 / delta_c)?;
    let y = la.alpha.powi(2) - la.beta.powi(2) - la.gamma.powi(2);
    Ok((1.0 - x - x * y).powi(2))
}

/// Images of the eight logical inputs under the pulse-level phase gate.
#[derive(Clone, Debug)]
pub struct GateResponse {
    outputs: Vec<StateVector>,
    params: DeviceParams,
}

impl GateResponse {
    pub fn simulate(noise: &NoiseConfig, params: &DeviceParams) -> Result<Self> {
        let schedule = phase_gate_schedule(params)?;
        let outputs = (0..8)
            .map(|i| schedule.apply(logical_state(logical_bits(i), &params.level_map)?, noise, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { outputs, params: params.clone() })
    }

    pub fn output(&self, input: usize) -> &StateVector {
        &self.outputs[input]
    }

    /// Amplitude of logical |row⟩ ⊗ vacuum in the image of |col⟩.
    pub fn logical_amplitude(&self, row: usize, col: usize) -> Complex64 {
        self.outputs[col].amplitude(logical_label(logical_bits(row), 0, &self.params.level_map))
    }

    /// Survival norm² of each logical input.
    pub fn survival(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (o, s) in out.iter_mut().zip(&self.outputs) {
            *o = s.norm_sqr();
        }
        out
    }

    fn combine(&self, profile: &[f64; 8]) -> StateVector {
        let mut acc = StateVector::zeros(self.outputs[0].n_max());
        for (a, s) in profile.iter().zip(&self.outputs) {
            acc = acc.add_scaled(Complex64::new(*a, 0.0), s).expect("equal dimensions");
        }
        acc
    }

    /// Norm² of the gate image of a logical superposition.
    pub fn survival_of(&self, profile: &[f64; 8]) -> f64 {
        self.combine(profile).norm_sqr()
    }

    /// |⟨ψ_ideal|ψ⟩|² with ψ_ideal = Q_π applied to the profile.
    pub fn joint_fidelity(&self, profile: &[f64; 8]) -> f64 {
        let out = self.combine(profile);
        let overlap: Complex64 = (0..8)
            .map(|i| {
                let sign = if i == 7 { -1.0 } else { 1.0 };
                out.amplitude(logical_label(logical_bits(i), 0, &self.params.level_map)) * (sign * profile[i])
            })
            .sum();
        overlap.norm_sqr()
    }

    /// Joint fidelity averaged over the product family, ½∫F(ν) sin ν dν.
    pub fn favg(&self) -> f64 {
        0.5 * quadrature::integrate(|nu| self.joint_fidelity(&generic_profile(nu)) * nu.sin(), 0.0, PI, NU_NODES)
    }

    /// Same average estimated from `samples` random ν (cos ν uniform).
    pub fn favg_sampled(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: f64 = (0..samples)
            .map(|_| {
                let nu = rng.random_range(-1.0f64..=1.0).acos();
                self.joint_fidelity(&generic_profile(nu))
            })
            .sum();
        total / samples as f64
    }

    /// Fidelity of the uniform input renormalized by its survival.
    pub fn conditional_uniform_fidelity(&self) -> f64 {
        let u = generic_profile(FRAC_PI_4);
        self.joint_fidelity(&u) / self.survival_of(&u)
    }
}

fn with_rates(params: &DeviceParams, gamma3: f64, kappa: f64) -> Result<(DeviceParams, NoiseConfig)> {
    non_negative("gamma3", gamma3)?;
    non_negative("kappa", kappa)?;
    let mut p = params.clone();
    p.gamma3 = gamma3;
    p.kappa = kappa;
    let noise = NoiseConfig { enable_gamma3: gamma3 > 0.0, enable_kappa: kappa > 0.0, ..NoiseConfig::ideal() };
    Ok((p, noise))
}

/// Simulated average fidelity with both decay channels (rates in s⁻¹).
pub fn favg_combined(gamma3: f64, kappa: f64, params: &DeviceParams) -> Result<f64> {
    let (p, noise) = with_rates(params, gamma3, kappa)?;
    Ok(GateResponse::simulate(&noise, &p)?.favg())
}

/// Seeded random-state estimate of [`favg_combined`].
pub fn favg_combined_sampled(gamma3: f64, kappa: f64, params: &DeviceParams, samples: usize, seed: u64) -> Result<f64> {
    let (p, noise) = with_rates(params, gamma3, kappa)?;
    Ok(GateResponse::simulate(&noise, &p)?.favg_sampled(samples, seed))
}

/// Closed-form and simulated reports for level decay Γ3 (s⁻¹).
pub fn level_decay_reports(gamma3: f64, params: &DeviceParams) -> Result<[FidelityReport; 2]> {
    let r = r_factor(gamma3, params.reference_rate())?;
    let uniform = generic_profile(FRAC_PI_4);
    let analytic = FidelityReport { r, f_ave: favg_level_decay(r), p: success_level_decay(&uniform, r)?, source: Source::Analytic };
    let (p, noise) = with_rates(params, gamma3, 0.0)?;
    let sim = GateResponse::simulate(&noise, &p)?;
    let simulated = FidelityReport { r, f_ave: sim.favg(), p: sim.survival_of(&uniform), source: Source::Simulation };
    Ok([analytic, simulated])
}

/// Operation times of the phase gate and of the search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingBudget {
    /// (label, seconds) of each interaction, both halves of the gate combined.
    pub terms: Vec<(String, f64)>,
    pub tau_gate: f64,
    pub tau_single: f64,
    pub g_ref: f64,
}

/// Duration of one single-qubit layer (s).
pub const TAU_SINGLE: f64 = 1.5e-9;

impl TimingBudget {
    /// 2k phase gates and 4k + 1 single-qubit layers.
    pub fn tau_algorithm(&self, k: usize) -> f64 {
        2.0 * k as f64 * self.tau_gate + (4 * k + 1) as f64 * self.tau_single
    }

    pub fn in_units_of_g(&self, seconds: f64) -> f64 {
        seconds * self.g_ref
    }
}

pub fn timing_budget(params: &DeviceParams) -> Result<TimingBudget> {
    let p = params;
    let lm = &p.level_map;
    let omega02 = p.rabi(1, 0, 2).min(p.rabi(2, 0, 2));
    let terms = vec![
        ("pulse 1<->3 (SQUID 1)", p.rabi(1, 1, 3)),
        ("exchange SQUID 1", p.g[0]),
        ("pulse 0<->2 (SQUIDs 1, 2)", omega02),
        ("exchange SQUID 2", p.g[1]),
        ("pulse 3<->0 (SQUID 2)", p.rabi(2, 3, 0)),
        ("pulse 1<->2 (SQUID 3)", p.rabi(3, lm.physical(3, 1), 2)),
        ("dispersive wait", p.dispersive_shift()),
    ];
    let mut out = Vec::with_capacity(terms.len());
    for (name, rate) in terms {
        positive("rate", rate)?;
        out.push((name.to_string(), PI / rate));
    }
    let tau_gate = out.iter().map(|(_, t)| t).sum();
    Ok(TimingBudget { terms: out, tau_gate, tau_single: TAU_SINGLE, g_ref: p.reference_rate() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Figure {
    Fig3,
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
    Fig6,
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 7] = [Figure::Fig3, Figure::Fig4a, Figure::Fig4b, Figure::Fig5a, Figure::Fig5b, Figure::Fig6, Figure::Fig7];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
            Figure::Fig5a => "fig5a",
            Figure::Fig5b => "fig5b",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Figure::Fig3 => "phase-gate average fidelity vs gamma3/g",
            Figure::Fig4a => "target probability vs iteration, level decay",
            Figure::Fig4b => "searched-state fidelity vs iteration, level decay",
            Figure::Fig5a => "target probability vs iteration, cavity decay",
            Figure::Fig5b => "searched-state fidelity vs iteration, cavity decay",
            Figure::Fig6 => "phase-gate average fidelity vs gamma3/g and kappa/g",
            Figure::Fig7 => "phase-gate average fidelity vs omega12/g3 (off-resonant shift)",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL.into_iter().find(|f| f.id() == s).ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Sweep ranges. Rates are in units of g (g3 for `omega12_over_g3`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureGrid {
    pub gamma3_over_g: Vec<f64>,
    pub kappa_over_g: Vec<f64>,
    pub omega12_over_g3: Vec<f64>,
    /// Largest iteration count; iterations 0..=k are emitted.
    pub iterations: usize,
    pub target: LogicalState,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl FigureGrid {
    pub fn default_for(figure: Figure) -> Self {
        let (gamma, kappa) = match figure {
            Figure::Fig3 => (linspace(0.0, 0.01, 21), vec![]),
            Figure::Fig4a | Figure::Fig4b => (vec![0.0, 0.001, 0.004], vec![]),
            Figure::Fig5a | Figure::Fig5b => (vec![], vec![0.0, 0.004, 0.007]),
            Figure::Fig6 => (linspace(0.0, 0.01, 6), linspace(0.0, 0.01, 6)),
            Figure::Fig7 => (vec![], vec![]),
        };
        let omega = if figure == Figure::Fig7 { linspace(0.05, 1.0, 20) } else { vec![] };
        Self { gamma3_over_g: gamma, kappa_over_g: kappa, omega12_over_g3: omega, iterations: 10, target: [1, 1, 1] }
    }
}

/// Header plus numeric rows, in grid order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows }
    }
}

fn nonempty(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidParameter { name: name.into(), reason: "grid is empty".into() });
    }
    Ok(())
}

fn run_search(params: &DeviceParams, noise: NoiseConfig, grid: &FigureGrid) -> Result<RunResult> {
    grover_run(&GroverConfig { target: grid.target, iterations: grid.iterations, noise, params: params.clone() })
}

/// Per-gate analytic factors used for the labeled iteration estimates.
fn gate_factors(figure: Figure, ratio: f64, params: &DeviceParams) -> Result<(f64, f64)> {
    match figure {
        Figure::Fig4a | Figure::Fig4b => {
            let r = r_factor(ratio, 1.0)?;
            Ok((success_level_decay(&generic_profile(FRAC_PI_4), r)?, favg_level_decay(r)))
        }
        _ => {
            let t = FRAC_PI_2 / params.scaled(params.g[0]);
            let (f, p) = favg_cavity_decay(ratio, t)?;
            Ok((p, f))
        }
    }
}

/// Rows for `figure` over `grid`, evaluated in parallel, emitted in grid order.
pub fn figure_data(figure: Figure, grid: &FigureGrid, params: &DeviceParams) -> Result<Table> {
    let g = params.reference_rate();
    match figure {
        Figure::Fig3 => {
            nonempty("gamma3_over_g", &grid.gamma3_over_g)?;
            let rows = grid
                .gamma3_over_g
                .par_iter()
                .map(|&x| {
                    let [analytic, simulated] = level_decay_reports(x * g, params)?;
                    Ok(vec![x, analytic.f_ave, simulated.f_ave])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table::new(&["gamma3_over_g", "favg_analytic", "favg_simulated"], rows))
        }
        Figure::Fig4a | Figure::Fig4b | Figure::Fig5a | Figure::Fig5b => {
            let level = matches!(figure, Figure::Fig4a | Figure::Fig4b);
            let (name, ratios) = if level { ("gamma3_over_g", &grid.gamma3_over_g) } else { ("kappa_over_g", &grid.kappa_over_g) };
            nonempty(name, ratios)?;
            let blocks = ratios
                .par_iter()
                .map(|&x| {
                    let (p, noise) = if level { with_rates(params, x * g, 0.0)? } else { with_rates(params, 0.0, x * g)? };
                    let run = run_search(&p, noise, grid)?;
                    let (p_gate, f_gate) = gate_factors(figure, x, params)?;
                    Ok(run
                        .records
                        .iter()
                        .map(|rec| {
                            let gates = 2 * rec.iteration as i32;
                            let k = rec.iteration as f64;
                            if matches!(figure, Figure::Fig4a | Figure::Fig5a) {
                                let estimate = ideal_success_probability(rec.iteration) * p_gate.powi(gates);
                                vec![x, k, rec.target_probability, rec.conditional_target_probability, estimate]
                            } else {
                                vec![x, k, rec.conditional_fidelity, rec.joint_fidelity, f_gate.powi(gates)]
                            }
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = blocks.into_iter().flatten().collect();
            let header: [&str; 5] = if matches!(figure, Figure::Fig4a | Figure::Fig5a) {
                [name, "iteration", "probability_simulated", "probability_conditional", "probability_analytic_estimate"]
            } else {
                [name, "iteration", "fidelity_conditional", "fidelity_joint", "fidelity_analytic_estimate"]
            };
            Ok(Table::new(&header, rows))
        }
        Figure::Fig6 => {
            nonempty("gamma3_over_g", &grid.gamma3_over_g)?;
            nonempty("kappa_over_g", &grid.kappa_over_g)?;
            let points: Vec<(f64, f64)> = grid
                .gamma3_over_g
                .iter()
                .flat_map(|&a| grid.kappa_over_g.iter().map(move |&b| (a, b)))
                .collect();
            let t = FRAC_PI_2 / params.scaled(params.g[0]);
            let rows = points
                .par_iter()
                .map(|&(a, b)| {
                    let sim = favg_combined(a * g, b * g, params)?;
                    let estimate = favg_level_decay(r_factor(a, 1.0)?) * favg_cavity_decay(b, t)?.0;
                    Ok(vec![a, b, sim, estimate])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table::new(&["gamma3_over_g", "kappa_over_g", "favg_simulated", "favg_analytic_estimate"], rows))
        }
        Figure::Fig7 => {
            nonempty("omega12_over_g3", &grid.omega12_over_g3)?;
            let rows = grid
                .omega12_over_g3
                .par_iter()
                .map(|&w| {
                    let g3 = params.g[2];
                    let analytic = favg_offresonant(w * g3, g3, params.delta_c)?;
                    let simulated = favg_offresonant_simulated(w * g3, params)?;
                    Ok(vec![w, analytic, simulated])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table::new(&["omega12_over_g3", "favg_analytic", "favg_simulated"], rows))
        }
    }
}

/// ∫₀¹ |(1 − x)·a − x·b|² dx, where `a` is the mean relative amplitude of the
/// inputs other than |111⟩ and `b` the relative amplitude of |111⟩, both from
/// the pulse-level gate with the off-resonant shift on.
pub fn favg_offresonant_simulated(omega12: f64, params: &DeviceParams) -> Result<f64> {
    positive("omega12", omega12)?;
    let mut p = params.clone();
    let lower = p.level_map.physical(3, 1);
    p.set_rabi(3, lower, 2, omega12);
    let sim = GateResponse::simulate(&NoiseConfig::leakage_only(), &p)?;
    let rest: Complex64 = (0..7).map(|i| sim.logical_amplitude(i, i)).sum::<Complex64>() / 7.0;
    let last = -sim.logical_amplitude(7, 7);
    // |(1−x)a + x b|² integrates to (|a|² + |b|² + Re(a b̄))/3
    Ok((rest.norm_sqr() + last.norm_sqr() + (rest * last.conj()).re) / 3.0)
}
