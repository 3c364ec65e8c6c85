use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("particle count and dimension must be >= 1 (got n = {n}, d = {d})")]
    Empty { n: usize, d: usize },
    #[error("coordinate buffer has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("non-finite coordinate for particle {particle}")]
    NonFinite { particle: usize },
}

/// Positions and velocities of `n` particles in `d` dimensions.
///
/// Coordinates are stored structure-of-arrays: component `k` of particle
/// `i` lives at `k * n + i`, so the inner loop of the force kernel reads
/// each component as a contiguous stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    n: usize,
    d: usize,
    pub time: f64,
    positions: Vec<f64>,
    velocities: Vec<f64>,
}

impl ParticleState {
    pub fn zeros(n: usize, d: usize) -> Result<Self, StateError> {
        if n == 0 || d == 0 {
            return Err(StateError::Empty { n, d });
        }
        Ok(Self { n, d, time: 0.0, positions: vec![0.0; n * d], velocities: vec![0.0; n * d] })
    }

    /// Builds a state from particle-major rows (`x_i` then `v_i`, each of
    /// length `d`).
    pub fn from_rows(d: usize, time: f64, xs: &[f64], vs: &[f64]) -> Result<Self, StateError> {
        if d == 0 || xs.is_empty() {
            return Err(StateError::Empty { n: xs.len() / d.max(1), d });
        }
        if !xs.len().is_multiple_of(d) {
            return Err(StateError::Length { expected: (xs.len() / d + 1) * d, got: xs.len() });
        }
        let n = xs.len() / d;
        if vs.len() != n * d {
            return Err(StateError::Length { expected: n * d, got: vs.len() });
        }
        let mut s = Self::zeros(n, d)?;
        s.time = time;
        for i in 0..n {
            for k in 0..d {
                s.positions[k * n + i] = xs[i * d + k];
                s.velocities[k * n + i] = vs[i * d + k];
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Builds a state directly from structure-of-arrays buffers.
    pub fn from_soa(
        n: usize,
        d: usize,
        time: f64,
        positions: Vec<f64>,
        velocities: Vec<f64>,
    ) -> Result<Self, StateError> {
        if n == 0 || d == 0 {
            return Err(StateError::Empty { n, d });
        }
        for buf in [&positions, &velocities] {
            if buf.len() != n * d {
                return Err(StateError::Length { expected: n * d, got: buf.len() });
            }
        }
        let s = Self { n, d, time, positions, velocities };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), StateError> {
        for i in 0..self.n {
            for k in 0..self.d {
                if !self.x(i, k).is_finite() || !self.v(i, k).is_finite() {
                    return Err(StateError::NonFinite { particle: i });
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn x(&self, i: usize, k: usize) -> f64 {
        self.positions[k * self.n + i]
    }

    #[inline]
    pub fn v(&self, i: usize, k: usize) -> f64 {
        self.velocities[k * self.n + i]
    }

    #[inline]
    pub fn x_mut(&mut self, i: usize, k: usize) -> &mut f64 {
        &mut self.positions[k * self.n + i]
    }

    #[inline]
    pub fn v_mut(&mut self, i: usize, k: usize) -> &mut f64 {
        &mut self.velocities[k * self.n + i]
    }

    /// Component `k` of all positions.
    #[inline]
    pub fn x_component(&self, k: usize) -> &[f64] {
        &self.positions[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn v_component(&self, k: usize) -> &[f64] {
        &self.velocities[k * self.n..(k + 1) * self.n]
    }

    pub fn positions_soa(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities_soa(&self) -> &[f64] {
        &self.velocities
    }

    pub(crate) fn positions_soa_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub(crate) fn velocities_soa_mut(&mut self) -> &mut [f64] {
        &mut self.velocities
    }

    pub fn position(&self, i: usize) -> Vec<f64> {
        (0..self.d).map(|k| self.x(i, k)).collect()
    }

    pub fn velocity(&self, i: usize) -> Vec<f64> {
        (0..self.d).map(|k| self.v(i, k)).collect()
    }

    /// First `m` particles as a new state.
    pub fn prefix(&self, m: usize) -> Result<Self, StateError> {
        let m = m.min(self.n);
        let mut s = Self::zeros(m, self.d)?;
        s.time = self.time;
        for k in 0..self.d {
            s.positions[k * m..(k + 1) * m].copy_from_slice(&self.x_component(k)[..m]);
            s.velocities[k * m..(k + 1) * m].copy_from_slice(&self.v_component(k)[..m]);
        }
        Ok(s)
    }

    /// Particles reordered so that new particle `i` is old particle `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut s = self.clone();
        for (i, &p) in perm.iter().enumerate() {
            for k in 0..self.d {
                *s.x_mut(i, k) = self.x(p, k);
                *s.v_mut(i, k) = self.v(p, k);
            }
        }
        s
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.n, self.d), (other.n, other.d));
        self.positions
            .iter()
            .zip(&other.positions)
            .chain(self.velocities.iter().zip(&other.velocities))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
