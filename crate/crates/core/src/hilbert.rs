//! Dense state vectors and operators over the three-SQUID ⊗ cavity space.
//!
//! Basis ordering is SQUID1-major, cavity-minor: the ket |s1 s2 s3⟩|n⟩ lives
//! at `((s1·4 + s2)·4 + s3)·(n_max+1) + n`. Every other module relies on this
//! layout through [`basis_index`] and [`label_of`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Levels per SQUID (|0⟩..|3⟩).
pub const SQUID_LEVELS: usize = 4;
/// Number of SQUIDs in the register.
pub const SQUID_COUNT: usize = 3;
/// Default cavity truncation. The protocol only populates n ≤ 1; n = 2 is a guard.
pub const DEFAULT_N_MAX: usize = 2;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Dimension of the full space for a given photon truncation.
pub fn dimension(n_max: usize) -> usize {
    SQUID_LEVELS.pow(SQUID_COUNT as u32) * (n_max + 1)
}

/// Physical levels of the three SQUIDs plus the cavity photon number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub levels: [usize; SQUID_COUNT],
    pub photons: usize,
}

impl BasisLabel {
    pub const fn new(s1: usize, s2: usize, s3: usize, n: usize) -> Self {
        Self { levels: [s1, s2, s3], photons: n }
    }

    /// Level of SQUID `squid` (1-based).
    pub fn level(&self, squid: usize) -> usize {
        self.levels[squid - 1]
    }

    pub fn with_level(mut self, squid: usize, level: usize) -> Self {
        self.levels[squid - 1] = level;
        self
    }

    pub fn with_photons(mut self, n: usize) -> Self {
        self.photons = n;
        self
    }
}

/// Flat index of `label` in a space truncated at `n_max` photons.
pub fn basis_index(label: BasisLabel, n_max: usize) -> Result<usize> {
    for (i, &level) in label.levels.iter().enumerate() {
        if level >= SQUID_LEVELS {
            return Err(Error::LevelOutOfRange { squid: i + 1, level });
        }
    }
    if label.photons > n_max {
        return Err(Error::PhotonOutOfRange { photons: label.photons, n_max });
    }
    let [s1, s2, s3] = label.levels;
    Ok(((s1 * SQUID_LEVELS + s2) * SQUID_LEVELS + s3) * (n_max + 1) + label.photons)
}

/// Inverse of [`basis_index`].
pub fn label_of(index: usize, n_max: usize) -> Result<BasisLabel> {
    let dim = dimension(n_max);
    if index >= dim {
        return Err(Error::DimensionMismatch { expected: dim, found: index + 1 });
    }
    Ok(unchecked_label(index, n_max))
}

#[inline]
pub(crate) fn unchecked_label(index: usize, n_max: usize) -> BasisLabel {
    let n = index % (n_max + 1);
    let squids = index / (n_max + 1);
    BasisLabel::new(
        squids / (SQUID_LEVELS * SQUID_LEVELS),
        (squids / SQUID_LEVELS) % SQUID_LEVELS,
        squids % SQUID_LEVELS,
        n,
    )
}

#[inline]
pub(crate) fn unchecked_index(label: BasisLabel, n_max: usize) -> usize {
    let [s1, s2, s3] = label.levels;
    ((s1 * SQUID_LEVELS + s2) * SQUID_LEVELS + s3) * (n_max + 1) + label.photons
}

/// Complex amplitudes over |s1 s2 s3⟩|n⟩. Not renormalized by any primitive:
/// norm loss under conditional evolution is carried through to measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    n_max: usize,
}

impl StateVector {
    pub fn zeros(n_max: usize) -> Self {
        Self { amps: vec![C0; dimension(n_max)], n_max }
    }

    /// The basis ket `label` with unit amplitude.
    pub fn basis(label: BasisLabel, n_max: usize) -> Result<Self> {
        let mut s = Self::zeros(n_max);
        s.amps[basis_index(label, n_max)?] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>, n_max: usize) -> Result<Self> {
        let dim = dimension(n_max);
        if amps.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: amps.len() });
        }
        Ok(Self { amps, n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Amplitude of `label`; zero for photon numbers beyond the truncation.
    pub fn amplitude(&self, label: BasisLabel) -> Complex64 {
        basis_index(label, self.n_max).map(|i| self.amps[i]).unwrap_or(C0)
    }

    pub fn set_amplitude(&mut self, label: BasisLabel, value: Complex64) -> Result<()> {
        let i = basis_index(label, self.n_max)?;
        self.amps[i] = value;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Total population with exactly `n` photons.
    pub fn photon_population(&self, n: usize) -> f64 {
        if n > self.n_max {
            return 0.0;
        }
        self.amps
            .iter()
            .skip(n)
            .step_by(self.n_max + 1)
            .map(|a| a.norm_sqr())
            .sum()
    }

    pub fn scale(mut self, factor: Complex64) -> Self {
        self.amps.iter_mut().for_each(|a| *a *= factor);
        self
    }

    /// `self + factor · other`.
    pub fn add_scaled(mut self, factor: Complex64, other: &StateVector) -> Result<Self> {
        if other.n_max != self.n_max {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += factor * b;
        }
        Ok(self)
    }

    /// Multiplies by a full-space operator (e.g. from [`embed_operator`]).
    pub fn apply(&self, op: &DMatrix<Complex64>) -> Result<Self> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.nrows() });
        }
        let out = op * nalgebra::DVector::from_column_slice(&self.amps);
        Ok(Self { amps: out.as_slice().to_vec(), n_max: self.n_max })
    }

    /// Iterator over `(label, amplitude)` pairs in basis order.
    pub fn iter(&self) -> impl Iterator<Item = (BasisLabel, Complex64)> + '_ {
        let n_max = self.n_max;
        self.amps.iter().enumerate().map(move |(i, a)| (unchecked_label(i, n_max), *a))
    }
}

/// ⟨a|b⟩, conjugate-linear in `a`.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.n_max != b.n_max {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// One tensor factor of the composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsystem {
    /// SQUID 1, 2 or 3.
    Squid(usize),
    Cavity,
}

impl Subsystem {
    fn dim(self, n_max: usize) -> usize {
        match self {
            Subsystem::Squid(_) => SQUID_LEVELS,
            Subsystem::Cavity => n_max + 1,
        }
    }

    fn coordinate(self, label: &BasisLabel) -> usize {
        match self {
            Subsystem::Squid(s) => label.levels[s - 1],
            Subsystem::Cavity => label.photons,
        }
    }
}

/// A dense operator on an ordered list of subsystems. The block's row/column
/// index is the mixed-radix number formed by the listed factors, first factor
/// most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBlock {
    matrix: DMatrix<Complex64>,
    subsystems: Vec<Subsystem>,
}

impl OperatorBlock {
    pub fn new(matrix: DMatrix<Complex64>, subsystems: Vec<Subsystem>, n_max: usize) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidSubsystems("empty subsystem list".into()));
        }
        for (i, s) in subsystems.iter().enumerate() {
            if let Subsystem::Squid(q) = s {
                if !(1..=SQUID_COUNT).contains(q) {
                    return Err(Error::InvalidSquid(*q));
                }
            }
            if subsystems[..i].contains(s) {
                return Err(Error::InvalidSubsystems(format!("{s:?} listed twice")));
            }
        }
        let dim: usize = subsystems.iter().map(|s| s.dim(n_max)).product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        Ok(Self { matrix, subsystems })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    fn local_index(&self, label: &BasisLabel, n_max: usize) -> usize {
        self.subsystems
            .iter()
            .fold(0, |acc, s| acc * s.dim(n_max) + s.coordinate(label))
    }
}

/// Lifts `block` to the full space, acting as identity on all other factors.
pub fn embed_operator(block: &OperatorBlock, n_max: usize) -> Result<DMatrix<Complex64>> {
    let expected: usize = block.subsystems.iter().map(|s| s.dim(n_max)).product();
    if block.matrix.nrows() != expected {
        return Err(Error::DimensionMismatch { expected, found: block.matrix.nrows() });
    }
    let dim = dimension(n_max);
    let labels: Vec<BasisLabel> = (0..dim).map(|i| unchecked_label(i, n_max)).collect();
    let untouched = |l: &BasisLabel| {
        let mut key = *l;
        for s in &block.subsystems {
            match s {
                Subsystem::Squid(q) => key.levels[q - 1] = 0,
                Subsystem::Cavity => key.photons = 0,
            }
        }
        key
    };
    let mut full = DMatrix::from_element(dim, dim, C0);
    for (r, lr) in labels.iter().enumerate() {
        let kr = untouched(lr);
        let br = block.local_index(lr, n_max);
        for (c, lc) in labels.iter().enumerate() {
            if untouched(lc) == kr {
                full[(r, c)] = block.matrix[(br, block.local_index(lc, n_max))];
            }
        }
    }
    Ok(full)
}
