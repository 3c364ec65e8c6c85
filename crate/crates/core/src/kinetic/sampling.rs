use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

#[allow(unused_imports)]
use crate::math::Float;
use crate::dynamics::{ParticleState, StateError};
use crate::math::{norm_sq, seeded_rng};

/// Stream used for initial clouds, independent of every other draw made
/// from the same seed.
const INITIAL_STREAM: u64 = 0x696e6974;

/// Law of one particle's (x, v).
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    /// x and v independent and uniform in balls.
    UniformBall { x_center: Vec<f64>, x_radius: f64, v_center: Vec<f64>, v_radius: f64 },
    /// Isotropic Gaussians redrawn until |z| ≤ `truncation` standard deviations.
    GaussianTruncated { x_mean: Vec<f64>, x_std: f64, v_mean: Vec<f64>, v_std: f64, truncation: f64 },
    /// Fair coin between two uniform-ball clusters.
    TwoCluster { x_centers: [Vec<f64>; 2], v_centers: [Vec<f64>; 2], x_radius: f64, v_radius: f64 },
}

/// `n` i.i.d. particles from `law`, reproducible from `seed`.
///
/// Particles are drawn one after another from a single stream, so the first
/// `m` particles of a cloud of size `n ≥ m` are exactly the cloud of size
/// `m`: clouds of different sizes are nested.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub n: usize,
    pub dimension: usize,
    pub law: InitialLaw,
    pub seed: u64,
}

impl InitialSpec {
    pub fn uniform_ball(n: usize, dimension: usize, x_radius: f64, v_radius: f64, seed: u64) -> Self {
        Self {
            n,
            dimension,
            law: InitialLaw::UniformBall {
                x_center: vec![0.0; dimension],
                x_radius,
                v_center: vec![0.0; dimension],
                v_radius,
            },
            seed,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Radius R₀ of a Euclidean phase-space ball containing every draw.
    pub fn support_bound(&self) -> f64 {
        let reach = |c: &[f64], r: f64| norm_sq(c).sqrt() + r;
        match &self.law {
            InitialLaw::UniformBall { x_center, x_radius, v_center, v_radius } => {
                reach(x_center, *x_radius).hypot(reach(v_center, *v_radius))
            }
            InitialLaw::GaussianTruncated { x_mean, x_std, v_mean, v_std, truncation } => {
                reach(x_mean, x_std * truncation).hypot(reach(v_mean, v_std * truncation))
            }
            InitialLaw::TwoCluster { x_centers, v_centers, x_radius, v_radius } => (0..2)
                .map(|c| reach(&x_centers[c], *x_radius).hypot(reach(&v_centers[c], *v_radius)))
                .fold(0.0, f64::max),
        }
    }

    pub fn validate(&self) -> Result<(), StateError> {
        if self.n == 0 || self.dimension == 0 {
            return Err(StateError::Empty { n: self.n, d: self.dimension });
        }
        let d = self.dimension;
        let lens: Vec<usize> = match &self.law {
            InitialLaw::UniformBall { x_center, v_center, .. } => vec![x_center.len(), v_center.len()],
            InitialLaw::GaussianTruncated { x_mean, v_mean, .. } => vec![x_mean.len(), v_mean.len()],
            InitialLaw::TwoCluster { x_centers, v_centers, .. } => {
                x_centers.iter().chain(v_centers).map(|c| c.len()).collect()
            }
        };
        if let Some(&bad) = lens.iter().find(|&&l| l != d) {
            return Err(StateError::Length { expected: d, got: bad });
        }
        Ok(())
    }
}

fn ball_point<R: Rng>(rng: &mut R, center: &[f64], radius: f64, out: &mut [f64]) {
    let d = center.len();
    for c in out.iter_mut() {
        *c = rng.sample(StandardNormal);
    }
    let n = norm_sq(out).sqrt();
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64);
    let scale = if n > 0.0 { r / n } else { 0.0 };
    for (c, m) in out.iter_mut().zip(center) {
        *c = m + *c * scale;
    }
}

fn truncated_gaussian<R: Rng>(rng: &mut R, mean: &[f64], std: f64, truncation: f64, out: &mut [f64]) {
    loop {
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        if norm_sq(out) <= truncation * truncation {
            break;
        }
    }
    for (c, m) in out.iter_mut().zip(mean) {
        *c = m + std * *c;
    }
}

/// Draws the initial cloud at time 0.
pub fn sample_initial(spec: &InitialSpec) -> Result<ParticleState, StateError> {
    spec.validate()?;
    let d = spec.dimension;
    let mut rng = seeded_rng(spec.seed, INITIAL_STREAM);
    let mut xs = vec![0.0; spec.n * d];
    let mut vs = vec![0.0; spec.n * d];
    for i in 0..spec.n {
        let (x, v) = (&mut xs[i * d..(i + 1) * d], &mut vs[i * d..(i + 1) * d]);
        match &spec.law {
            InitialLaw::UniformBall { x_center, x_radius, v_center, v_radius } => {
                ball_point(&mut rng, x_center, *x_radius, x);
                ball_point(&mut rng, v_center, *v_radius, v);
            }
            InitialLaw::GaussianTruncated { x_mean, x_std, v_mean, v_std, truncation } => {
                truncated_gaussian(&mut rng, x_mean, *x_std, *truncation, x);
                truncated_gaussian(&mut rng, v_mean, *v_std, *truncation, v);
            }
            InitialLaw::TwoCluster { x_centers, v_centers, x_radius, v_radius } => {
                let c = usize::from(rng.random::<bool>());
                ball_point(&mut rng, &x_centers[c], *x_radius, x);
                ball_point(&mut rng, &v_centers[c], *v_radius, v);
            }
        }
    }
    ParticleState::from_rows(d, 0.0, &xs, &vs)
}
