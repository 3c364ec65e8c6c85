use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::Float;
use crate::dynamics::Trajectory;
use crate::model::{cstar, ModelError, ModelSpec};

use super::DiagnosticsError;

/// Decay bound for the velocity fluctuation:
/// g0·e^{−C* t} when α = 1, (B + A t)^{−1/(α−1)} with B = g0^{1−α} and
/// A = (α − 1)C* when α > 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub alpha: f64,
    pub cstar: f64,
    pub g0: f64,
}

impl DecayEnvelope {
    pub fn new(alpha: f64, cstar: f64, g0: f64) -> Result<Self, DiagnosticsError> {
        if !(cstar > 0.0 && cstar.is_finite()) {
            return Err(DiagnosticsError::Parameter(alloc::format!("C* = {cstar} must be > 0")));
        }
        if !(g0 >= 0.0 && g0.is_finite()) {
            return Err(DiagnosticsError::Parameter(alloc::format!("G0 = {g0} must be >= 0")));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(DiagnosticsError::Parameter(alloc::format!("alpha = {alpha} must be >= 1")));
        }
        Ok(Self { alpha, cstar, g0 })
    }

    /// Envelope for `model` started from the first snapshot of `traj`.
    pub fn for_trajectory(model: &ModelSpec, traj: &Trajectory) -> Result<Self, DiagnosticsError> {
        let g0 = traj.first().ok_or(DiagnosticsError::EmptyTrajectory)?.moments.gf.max(0.0);
        let c = cstar(model).map_err(|e: ModelError| DiagnosticsError::Parameter(alloc::format!("{e}")))?;
        Self::new(model.alpha(), c, g0)
    }

    pub fn b(&self) -> f64 {
        self.g0.powf(1.0 - self.alpha)
    }

    pub fn a(&self) -> f64 {
        (self.alpha - 1.0) * self.cstar
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.alpha == 1.0 {
            self.g0 * (-self.cstar * t).exp()
        } else if self.g0 == 0.0 {
            0.0
        } else {
            (self.b() + self.a() * t).powf(-1.0 / (self.alpha - 1.0))
        }
    }
}

pub fn envelope_value(env: &DecayEnvelope, t: f64) -> f64 {
    env.value(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub observed: f64,
    pub bound: f64,
}

/// Outcome of one check. `pass` holds iff `worst_margin ≥ −tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictReport {
    pub name: String,
    pub pass: bool,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub witness_time: f64,
    pub series: Vec<SeriesPoint>,
    pub detail: String,
}

impl VerdictReport {
    /// Builds the verdict from per-point margins (larger is better).
    pub(crate) fn from_margins(
        name: &str,
        tolerance: f64,
        series: Vec<SeriesPoint>,
        margin: impl Fn(&SeriesPoint) -> f64,
        detail: String,
    ) -> Self {
        let mut worst = f64::INFINITY;
        let mut witness = series.first().map_or(0.0, |p| p.t);
        for p in &series {
            let m = margin(p);
            if m < worst || m.is_nan() {
                worst = m;
                witness = p.t;
            }
        }
        let pass = worst >= -tolerance;
        Self { name: name.into(), pass, worst_margin: worst, tolerance, witness_time: witness, series, detail }
    }
}

/// Gf(t) ≤ envelope(t)·(1 + rel_tol) at every snapshot. The margin is the
/// relative slack (bound − observed)/bound; with g0 = 0 it is −Gf(t),
/// compared against `rel_tol` as an absolute tolerance.
pub fn verify_decay(traj: &Trajectory, env: &DecayEnvelope, rel_tol: f64) -> Result<VerdictReport, DiagnosticsError> {
    if traj.is_empty() {
        return Err(DiagnosticsError::EmptyTrajectory);
    }
    let series: Vec<SeriesPoint> =
        traj.snapshots.iter().map(|s| SeriesPoint { t: s.time, observed: s.moments.gf, bound: env.value(s.time) }).collect();
    let detail = alloc::format!("alpha = {}, C* = {}, G0 = {}", env.alpha, env.cstar, env.g0);
    Ok(VerdictReport::from_margins(
        "decay",
        rel_tol,
        series,
        |p| if p.bound > 0.0 { (p.bound - p.observed) / p.bound } else { -p.observed },
        detail,
    ))
}

/// Plateau test on a (t, Γ) series: the growth of max Γ between the two
/// trailing windows of width `window` must not exceed `fraction` of sup Γ.
pub fn gamma_plateau(series: &[(f64, f64)], window: f64, fraction: f64) -> Result<VerdictReport, DiagnosticsError> {
    let (Some(&(t0, _)), Some(&(t_last, _))) = (series.first(), series.last()) else {
        return Err(DiagnosticsError::EmptyTrajectory);
    };
    if !(window > 0.0) || t_last - t0 < 2.0 * window {
        return Err(DiagnosticsError::TooShort { span: t_last - t0, needed: 2.0 * window });
    }
    let sup = series.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let max_in = |lo: f64, hi: f64, closed: bool| {
        series
            .iter()
            .filter(|p| p.0 >= lo && (p.0 < hi || (closed && p.0 <= hi)))
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let last = max_in(t_last - window, t_last, true);
    let prev = max_in(t_last - 2.0 * window, t_last - window, false);
    let increment = last - prev;
    let allowed = fraction * sup;
    let finite = series.iter().all(|p| p.1.is_finite());
    let margin = if !finite || !increment.is_finite() {
        f64::NEG_INFINITY
    } else if sup > 0.0 {
        (allowed - increment) / sup
    } else {
        0.0
    };
    let points = series.iter().map(|&(t, g)| SeriesPoint { t, observed: g, bound: sup }).collect();
    let detail = alloc::format!(
        "sup Gamma = {sup}, trailing-window increment = {increment}, allowed = {allowed} (fraction {fraction}, window {window})"
    );
    let mut report = VerdictReport::from_margins("gamma", 0.0, points, |_| margin, detail);
    report.witness_time = t_last;
    Ok(report)
}

/// [`gamma_plateau`] on the Γ column of a trajectory with the default 5 %
/// fraction.
pub fn verify_gamma_bound(traj: &Trajectory, window: f64) -> Result<VerdictReport, DiagnosticsError> {
    verify_gamma_bound_with(traj, window, 0.05)
}

pub fn verify_gamma_bound_with(traj: &Trajectory, window: f64, fraction: f64) -> Result<VerdictReport, DiagnosticsError> {
    let series: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.time, s.moments.gamma)).collect();
    gamma_plateau(&series, window, fraction)
}

/// R₀e^{Ct} + C(e^{Ct} − 1)^{1/2} with t measured from the first snapshot.
pub fn support_envelope(r0: f64, c: f64, t: f64) -> f64 {
    let e = (c * t).exp();
    r0 * e + c * (e - 1.0).max(0.0).sqrt()
}

/// Relative resolution of the fitted constant.
const FIT_RESOLUTION: f64 = 1e-6;

/// Smallest C ∈ [0, c_cap] for which the support envelope dominates the
/// series (t, R(t)); R₀ is the first value. Fails at `c_cap` if no such C
/// exists.
pub fn fit_support_series(series: &[(f64, f64)], c_cap: f64) -> Result<(f64, f64, VerdictReport), DiagnosticsError> {
    let &(t0, r0) = series.first().ok_or(DiagnosticsError::EmptyTrajectory)?;
    let dominated = |c: f64| series.iter().all(|&(t, r)| r <= support_envelope(r0, c, t - t0));
    let c = if dominated(0.0) {
        0.0
    } else if !dominated(c_cap) {
        c_cap
    } else {
        let (mut lo, mut hi) = (0.0, c_cap);
        while hi - lo > FIT_RESOLUTION * hi {
            let mid = 0.5 * (lo + hi);
            if dominated(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let points: Vec<SeriesPoint> =
        series.iter().map(|&(t, r)| SeriesPoint { t, observed: r, bound: support_envelope(r0, c, t - t0) }).collect();
    let detail = alloc::format!("R0 = {r0}, fitted C = {c}, C_cap = {c_cap}");
    let report = VerdictReport::from_margins(
        "support",
        0.0,
        points,
        |p| if p.bound > 0.0 { (p.bound - p.observed) / p.bound } else { -p.observed },
        detail,
    );
    Ok((r0, c, report))
}

/// [`fit_support_series`] on the support-radius column of a trajectory.
pub fn fit_support_envelope(traj: &Trajectory, c_cap: f64) -> Result<(f64, f64, VerdictReport), DiagnosticsError> {
    let series: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.time, s.moments.support_radius)).collect();
    fit_support_series(&series, c_cap)
}

/// Mean velocity is constant and the mean position moves ballistically:
/// |V₁(t) − V₁(0)| ≤ `v_tol` and |X₁(t) − X₁(0) − V₁(0)t| ≤ `x_tol`.
pub fn verify_conservation(traj: &Trajectory, v_tol: f64, x_tol: f64) -> Result<VerdictReport, DiagnosticsError> {
    let first = traj.first().ok_or(DiagnosticsError::EmptyTrajectory)?;
    let (v0, x0, t0) = (&first.moments.v1, &first.moments.x1, first.time);
    let series: Vec<SeriesPoint> = traj
        .snapshots
        .iter()
        .map(|s| {
            let dv = crate::math::dist(&s.moments.v1, v0);
            let dx = s
                .moments
                .x1
                .iter()
                .zip(x0)
                .zip(v0)
                .map(|((x, x0), v0)| (x - x0 - v0 * (s.time - t0)).powi(2))
                .sum::<f64>()
                .sqrt();
            // observed: the worse of the two normalized drifts.
            SeriesPoint { t: s.time, observed: (dv / v_tol).max(dx / x_tol), bound: 1.0 }
        })
        .collect();
    let detail = alloc::format!("drifts normalized by v_tol = {v_tol:e}, x_tol = {x_tol:e}");
    Ok(VerdictReport::from_margins("conservation", 0.0, series, |p| p.bound - p.observed, detail))
}

/// Largest rise `s_{k+1} − s_k` of a series over points with t ≥ `after`.
pub fn max_rise(series: &[(f64, f64)], after: f64) -> f64 {
    series
        .windows(2)
        .filter(|w| w[0].0 >= after)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Φ* valid along a trajectory: the kernel minimum over the largest
/// pairwise distance seen, bounded by twice the largest distance of a
/// particle to the centre of mass.
pub fn observed_phi_star(model: &ModelSpec, traj: &Trajectory) -> f64 {
    let mut diameter: f64 = 0.0;
    for s in &traj.snapshots {
        let st = &s.state;
        for i in 0..st.len() {
            let r2: f64 = (0..st.dim()).map(|k| (st.x(i, k) - s.moments.x1[k]).powi(2)).sum();
            diameter = diameter.max(2.0 * r2.sqrt());
        }
    }
    model.kernel.min_on(diameter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig, ParticleState};

    fn two_body(t_end: f64) -> Trajectory {
        let s = ParticleState::from_rows(1, 0.0, &[0.0, 1.0], &[1.0, -1.0]).unwrap();
        let cfg = IntegratorConfig { dt: 0.01, t_end, error_tol: 1e-13, observer_stride: 10, ..Default::default() };
        integrate(&s, &ModelSpec::linear_constant(1), &cfg).unwrap()
    }

    #[test]
    fn envelope_examples() {
        let env = DecayEnvelope::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(envelope_value(&env, 0.0), 1.0);
        assert!((envelope_value(&env, 1.0) - 0.135_335_283_236_612_7).abs() < 1e-15);
        let poly = DecayEnvelope::new(1.2, 1.0, 1.0).unwrap();
        assert_eq!(poly.value(0.0), 1.0);
        assert!((poly.value(5.0) - 2f64.powi(-5)).abs() < 1e-15);
        assert!((DecayEnvelope::new(1.2, 1.0, 3.0).unwrap().value(0.0) - 3.0).abs() < 1e-14);
        assert!(DecayEnvelope::new(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn equality_case_passes_with_zero_margin() {
        let traj = two_body(5.0);
        let env = DecayEnvelope::for_trajectory(&ModelSpec::linear_constant(1), &traj).unwrap();
        assert_eq!(env.cstar, 2.0);
        let r = verify_decay(&traj, &env, 1e-5).unwrap();
        assert!(r.pass && r.worst_margin.abs() < 1e-6, "{r:?}");
        let hard = DecayEnvelope { cstar: 4.0, ..env };
        let r = verify_decay(&traj, &hard, 1e-3).unwrap();
        assert!(!r.pass);
        assert_eq!(r.witness_time, traj.snapshots.last().unwrap().time);
        assert!(verify_decay(&Trajectory::default(), &env, 1e-3).is_err());
    }

    #[test]
    fn flat_velocities_pass_the_zero_branch() {
        let s = ParticleState::from_rows(1, 0.0, &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let cfg = IntegratorConfig { t_end: 1.0, ..Default::default() };
        let traj = integrate(&s, &ModelSpec::linear_constant(1), &cfg).unwrap();
        let env = DecayEnvelope::for_trajectory(&ModelSpec::linear_constant(1), &traj).unwrap();
        assert_eq!(env.g0, 0.0);
        assert!(verify_decay(&traj, &env, 1e-12).unwrap().pass);
    }

    #[test]
    fn gamma_plateau_examples() {
        let r = verify_gamma_bound(&two_body(20.0), 5.0).unwrap();
        assert!(r.pass, "{}", r.detail);
        let free: Vec<(f64, f64)> = (0..=200).map(|k| (0.1 * f64::from(k), (0.1 * f64::from(k)).powi(2))).collect();
        assert!(!gamma_plateau(&free, 5.0, 0.05).unwrap().pass);
        assert!(matches!(gamma_plateau(&free, 15.0, 0.05), Err(DiagnosticsError::TooShort { .. })));
        let flat: Vec<(f64, f64)> = (0..=20).map(|k| (f64::from(k), 0.0)).collect();
        assert!(gamma_plateau(&flat, 5.0, 0.05).unwrap().pass);
    }

    #[test]
    fn support_fit_examples() {
        let still: Vec<(f64, f64)> = (0..=10).map(|k| (f64::from(k), 2.0)).collect();
        let (r0, c, r) = fit_support_series(&still, 10.0).unwrap();
        assert_eq!((r0, c), (2.0, 0.0));
        assert!(r.pass);

        let (_, c, r) = fit_support_envelope(&two_body(10.0), 10.0).unwrap();
        assert!(r.pass && c < 1.0, "C = {c}");

        let fast: Vec<(f64, f64)> = (0..=100).map(|k| (0.2 * f64::from(k), (0.04 * f64::from(k * k)).exp())).collect();
        let (_, c, r) = fit_support_series(&fast, 10.0).unwrap();
        assert!(!r.pass && c == 10.0);

        let grow: Vec<(f64, f64)> = (0..=10).map(|k| (f64::from(k), 1.0 + 0.1 * f64::from(k))).collect();
        let (_, c, r) = fit_support_series(&grow, 10.0).unwrap();
        assert!(r.pass && c > 0.0);
        let slightly_less = c * (1.0 - 1e-5);
        assert!(grow.iter().any(|&(t, y)| y > support_envelope(1.0, slightly_less, t)));
    }

    #[test]
    fn conservation_on_two_body() {
        let r = verify_conservation(&two_body(5.0), 1e-12, 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn rise_and_phi_star() {
        assert_eq!(max_rise(&[(0.0, 3.0), (1.0, 2.0), (2.0, 2.5), (3.0, 1.0)], 0.5), 0.5);
        assert_eq!(max_rise(&[(0.0, 3.0), (1.0, 2.0), (2.0, 2.5), (3.0, 1.0)], 1.5), -1.5);
        let model = ModelSpec {
            kernel: crate::model::KernelSpec::CuckerSmale { amplitude: 1.0, decay: 1.0 },
            ..ModelSpec::linear_constant(1)
        };
        let s = ParticleState::from_rows(1, 0.0, &[-1.0, 1.0], &[0.0, 0.0]).unwrap();
        let traj = integrate(&s, &model, &IntegratorConfig { t_end: 0.0, ..Default::default() }).unwrap();
        assert_eq!(observed_phi_star(&model, &traj), 0.2);
    }
}
