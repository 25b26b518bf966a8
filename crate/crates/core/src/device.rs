//! Device parameters, logical-level encodings and unit conversion.
//!
//! Rates are stored in SI (rad/s or 1/s). Simulation code works in the
//! dimensionless time `g1·t`; [`DeviceParams::scaled`] converts a rate to
//! units of g1.

use std::collections::BTreeMap;

use crate::error::{non_negative, positive, Error, Result};
use crate::hilbert::SQUID_COUNT;

/// Logical → physical level assignment for each SQUID.
///
/// SQUIDs 1 and 2 encode |0⟩,|1⟩ in their two lowest levels. SQUID 3 uses the
/// inverted encoding: logical |1⟩ is its ground level, logical |0⟩ its first
/// excited level. Levels |2⟩ and |3⟩ are auxiliary and map to themselves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelMap {
    logical_to_physical: [[usize; 2]; SQUID_COUNT],
}

impl Default for LevelMap {
    fn default() -> Self {
        Self { logical_to_physical: [[0, 1], [0, 1], [1, 0]] }
    }
}

impl LevelMap {
    /// Physical level for a logical bit.
    pub fn physical(&self, squid: usize, bit: usize) -> usize {
        self.logical_to_physical[squid - 1][bit]
    }

    /// Physical level for a level as named in the protocol description:
    /// 0 and 1 go through the logical encoding, 2 and 3 are unchanged.
    pub fn named(&self, squid: usize, level: usize) -> usize {
        match level {
            0 | 1 => self.physical(squid, level),
            other => other,
        }
    }

    /// Logical bit held by a physical level, if it is a logical level.
    pub fn logical(&self, squid: usize, physical: usize) -> Option<usize> {
        self.logical_to_physical[squid - 1].iter().position(|&p| p == physical)
    }
}

/// One classical drive: SQUID plus an unordered pair of physical levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Drive {
    pub squid: usize,
    pub lower: usize,
    pub upper: usize,
}

impl Drive {
    pub fn new(squid: usize, a: usize, b: usize) -> Self {
        Self { squid, lower: a.min(b), upper: a.max(b) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceParams {
    /// SQUID–cavity couplings g1, g2, g3 (rad/s).
    pub g: [f64; SQUID_COUNT],
    /// Detuning Δc = ω_c − ω_32 of SQUID 3 (rad/s).
    pub delta_c: f64,
    /// Rabi frequency used for any drive without an override (rad/s).
    pub rabi_default: f64,
    /// Per-drive Rabi frequency overrides, keyed by physical levels.
    pub rabi: BTreeMap<Drive, f64>,
    /// Decay rate of level |3⟩ (1/s).
    pub gamma3: f64,
    /// Decay rate of level |2⟩ (1/s). Only used by [`DeviceParams::level2_exposure`].
    pub gamma2: f64,
    /// Cavity decay rate (1/s).
    pub kappa: f64,
    pub level_map: LevelMap,
}

/// Literature device: g ≈ 3×10⁹ s⁻¹ for all three SQUIDs, Δc = 10·g3, every
/// Rabi frequency 10·g1, Γ3⁻¹ = 3.2 μs, Γ2⁻¹ = 0.16 ms, κ⁻¹ = 0.76 μs.
pub fn paper_device() -> DeviceParams {
    let g = 3.0e9;
    DeviceParams {
        g: [g; SQUID_COUNT],
        delta_c: 10.0 * g,
        rabi_default: 10.0 * g,
        rabi: BTreeMap::new(),
        gamma3: 1.0 / 3.2e-6,
        gamma2: 1.0 / 0.16e-3,
        kappa: 1.0 / 0.76e-6,
        level_map: LevelMap::default(),
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        paper_device()
    }
}

impl DeviceParams {
    /// The reference rate g1 that defines dimensionless time.
    pub fn reference_rate(&self) -> f64 {
        self.g[0]
    }

    /// `rate` in units of g1.
    pub fn scaled(&self, rate: f64) -> f64 {
        rate / self.reference_rate()
    }

    pub fn coupling(&self, squid: usize) -> f64 {
        self.g[squid - 1]
    }

    /// Rabi frequency of the drive between physical levels `a` and `b` on `squid`.
    pub fn rabi(&self, squid: usize, a: usize, b: usize) -> f64 {
        self.rabi.get(&Drive::new(squid, a, b)).copied().unwrap_or(self.rabi_default)
    }

    pub fn set_rabi(&mut self, squid: usize, a: usize, b: usize, value: f64) {
        self.rabi.insert(Drive::new(squid, a, b), value);
    }

    /// Rabi frequency of the SQUID-3 drive between its ground level (logical
    /// |1⟩) and level |2⟩.
    pub fn omega12(&self) -> f64 {
        self.rabi(3, self.level_map.physical(3, 1), 2)
    }

    /// Dispersive shift δ = g3²/Δc (rad/s).
    pub fn dispersive_shift(&self) -> f64 {
        self.g[2] * self.g[2] / self.delta_c
    }

    /// Δc ≥ 5·g3; below this the dispersive phase model is not trustworthy.
    pub fn dispersive_valid(&self) -> bool {
        self.delta_c >= 5.0 * self.g[2]
    }

    /// Γ2 times the longest time level |2⟩ of SQUID 1 or 2 is occupied during
    /// a phase gate, (π/2Ω02 + π/2g). Level-|2⟩ decay is ignored by the
    /// dynamics, which is sound only while this is ≪ 1.
    pub fn level2_exposure(&self) -> f64 {
        let pulse = std::f64::consts::FRAC_PI_2 / self.rabi(1, 0, 2).min(self.rabi(2, 0, 2));
        let exchange = std::f64::consts::FRAC_PI_2 / self.g[0].min(self.g[1]);
        self.gamma2 * (pulse + exchange)
    }

    pub fn with_gamma3_ratio(mut self, ratio: f64) -> Self {
        self.gamma3 = ratio * self.reference_rate();
        self
    }

    pub fn with_kappa_ratio(mut self, ratio: f64) -> Self {
        self.kappa = ratio * self.reference_rate();
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, name) in ["g1", "g2", "g3"].into_iter().enumerate() {
            positive(name, self.g[i])?;
        }
        positive("delta_c", self.delta_c)?;
        positive("rabi_default", self.rabi_default)?;
        for (drive, &value) in &self.rabi {
            if drive.squid == 0 || drive.squid > SQUID_COUNT || drive.upper > 3 || drive.lower == drive.upper {
                return Err(Error::InvalidParameter {
                    name: "rabi".into(),
                    reason: format!("bad drive {drive:?}"),
                });
            }
            positive("rabi", value)?;
        }
        non_negative("gamma3", self.gamma3)?;
        non_negative("gamma2", self.gamma2)?;
        non_negative("kappa", self.kappa)?;
        if self.level_map != LevelMap::default() {
            return Err(Error::InvalidParameter {
                name: "level_map".into(),
                reason: "only the standard encoding is supported".into(),
            });
        }
        Ok(())
    }
}

/// Which dissipation channels act during a gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NoiseConfig {
    /// −iΓ3|3⟩⟨3| on the exchanging SQUID during resonant exchanges.
    pub enable_gamma3: bool,
    /// −iκ a†a during resonant exchanges.
    pub enable_kappa: bool,
    /// Residual dispersive shift on SQUID 3 while it is driven.
    pub enable_offresonant_leakage: bool,
    /// Also apply cavity decay during classical pulses (needs `enable_kappa`).
    pub kappa_during_pulses: bool,
    /// Also apply cavity decay during the dispersive wait (needs `enable_kappa`).
    pub kappa_during_wait: bool,
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn gamma3_only() -> Self {
        Self { enable_gamma3: true, ..Self::default() }
    }

    pub fn kappa_only() -> Self {
        Self { enable_kappa: true, ..Self::default() }
    }

    pub fn leakage_only() -> Self {
        Self { enable_offresonant_leakage: true, ..Self::default() }
    }

    /// True when any channel removes norm.
    pub fn is_dissipative(&self) -> bool {
        self.enable_gamma3 || self.enable_kappa
    }

    pub fn is_ideal(&self) -> bool {
        !self.is_dissipative() && !self.enable_offresonant_leakage
    }
}

/// Converts a duration in seconds to dimensionless `g_ref·t`.
pub fn to_dimensionless(t: f64, g_ref: f64) -> Result<f64> {
    positive("g_ref", g_ref)?;
    Ok(t * g_ref)
}

/// Converts dimensionless `g_ref·t` back to seconds.
pub fn from_dimensionless(gt: f64, g_ref: f64) -> Result<f64> {
    positive("g_ref", g_ref)?;
    Ok(gt / g_ref)
}
