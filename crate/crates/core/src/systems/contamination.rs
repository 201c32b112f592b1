use serde::{Deserialize, Serialize};

use super::rng::NoiseRng;
use crate::error::{RdmdError, Result};
use crate::snapshots::TimeSeries;

/// Entrywise i.i.d. measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    Gaussian { sigma: f64 },
    /// Laplace with the given variance (scale `√(variance/2)`).
    Laplace { variance: f64 },
    StudentT { dof: usize },
    /// Cauchy with half-width at half-maximum `gamma`.
    Cauchy { gamma: f64 },
}

impl NoiseKind {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(RdmdError::Config(format!("invalid noise parameter: {what}")));
        match *self {
            NoiseKind::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => bad("sigma"),
            NoiseKind::Laplace { variance } if !(variance >= 0.0 && variance.is_finite()) => bad("variance"),
            NoiseKind::StudentT { dof: 0 } => bad("dof"),
            NoiseKind::Cauchy { gamma } if !(gamma >= 0.0 && gamma.is_finite()) => bad("gamma"),
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut NoiseRng) -> f64 {
        match *self {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian { sigma } => sigma * rng.normal(),
            NoiseKind::Laplace { variance } => rng.laplace((0.5 * variance).sqrt()),
            NoiseKind::StudentT { dof } => rng.student_t(dof),
            NoiseKind::Cauchy { gamma } => rng.cauchy(gamma),
        }
    }
}

/// A constant offset added to every channel over `[start, end]` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierWindow {
    pub start: f64,
    pub end: f64,
    pub magnitude: f64,
}

/// Sparse spikes: each entry receives `η·w + μ·b·z`, `w, z ~ N(0,1)`,
/// `b ~ Bernoulli(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikePlan {
    pub mu: f64,
    pub p: f64,
    pub eta: f64,
}

/// Everything added to a clean series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ContaminationPlan {
    /// Base Gaussian noise, applied in addition to `noise`.
    pub gaussian_sigma: f64,
    pub noise: NoiseKind,
    pub windows: Vec<OutlierWindow>,
    pub spike: Option<SpikePlan>,
    pub seed: u64,
}

impl ContaminationPlan {
    pub fn is_identity(&self) -> bool {
        self.gaussian_sigma == 0.0
            && self.noise == NoiseKind::None
            && self.windows.is_empty()
            && self.spike.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(RdmdError::Config("gaussian_sigma must be nonnegative".into()));
        }
        self.noise.validate()?;
        for w in &self.windows {
            if !(w.start.is_finite() && w.end.is_finite() && w.magnitude.is_finite()) || w.start > w.end {
                return Err(RdmdError::Config(format!(
                    "invalid outlier window [{}, {}]",
                    w.start, w.end
                )));
            }
        }
        if let Some(s) = &self.spike {
            if !(0.0..=1.0).contains(&s.p) {
                return Err(RdmdError::Config(format!("spike rate must lie in [0, 1], got {}", s.p)));
            }
            if !(s.mu.is_finite() && s.eta.is_finite()) {
                return Err(RdmdError::Config("spike levels must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Time tolerance for window membership, relative to `dt`.
const WINDOW_TOL: f64 = 1e-6;

/// Indices of samples whose time lies in the (inclusive) window.
pub fn window_indices(series: &TimeSeries, w: &OutlierWindow) -> Vec<usize> {
    let tol = WINDOW_TOL * series.dt();
    (0..series.len())
        .filter(|&k| {
            let t = series.time(k);
            t >= w.start - tol && t <= w.end + tol
        })
        .collect()
}

/// Applies `plan` to `series`.
///
/// Each stage draws from its own stream derived from `plan.seed`, in
/// sample-major, channel-minor order: base Gaussian noise, the selected
/// noise kind, outlier windows (deterministic), then spikes.
pub fn contaminate(series: &TimeSeries, plan: &ContaminationPlan) -> Result<TimeSeries> {
    plan.validate()?;
    let t_first = series.time(0);
    let t_last = series.time(series.len() - 1);
    let tol = WINDOW_TOL * series.dt();
    for w in &plan.windows {
        if w.start < t_first - tol || w.end > t_last + tol {
            return Err(RdmdError::Domain(format!(
                "outlier window [{}, {}] lies outside the horizon [{t_first}, {t_last}]",
                w.start, w.end
            )));
        }
    }
    let mut out = series.clone();
    if plan.gaussian_sigma > 0.0 {
        let mut rng = NoiseRng::for_stage(plan.seed, "gaussian");
        for x in out.samples_mut() {
            for v in x.iter_mut() {
                *v += plan.gaussian_sigma * rng.normal();
            }
        }
    }
    if plan.noise != NoiseKind::None {
        let mut rng = NoiseRng::for_stage(plan.seed, "noise");
        for x in out.samples_mut() {
            for v in x.iter_mut() {
                *v += plan.noise.sample(&mut rng);
            }
        }
    }
    for w in &plan.windows {
        for k in window_indices(series, w) {
            for v in out.samples_mut()[k].iter_mut() {
                *v += w.magnitude;
            }
        }
    }
    if let Some(spike) = &plan.spike {
        let mut rng = NoiseRng::for_stage(plan.seed, "spike");
        for x in out.samples_mut() {
            for v in x.iter_mut() {
                let base = rng.normal();
                let fire = rng.bernoulli(spike.p);
                let size = rng.normal();
                *v += spike.eta * base + if fire { spike.mu * size } else { 0.0 };
            }
        }
    }
    if out.samples().iter().any(|x| x.iter().any(|v| !v.is_finite())) {
        return Err(RdmdError::Domain("contamination produced non-finite values".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{simulate, BenchmarkSystem};
    use nalgebra::DVector;

    fn linear(steps: usize) -> TimeSeries {
        let sys = BenchmarkSystem::Linear2x2;
        simulate(&sys, &sys.default_x0(), 0.01, steps).unwrap()
    }

    #[test]
    fn empty_plan_is_identity() {
        let s = linear(50);
        let plan = ContaminationPlan { seed: 9, ..Default::default() };
        assert!(plan.is_identity());
        assert_eq!(contaminate(&s, &plan).unwrap(), s);
    }

    #[test]
    fn window_counts_are_inclusive() {
        let s = linear(500);
        let w = OutlierWindow { start: 1.0, end: 1.05, magnitude: 0.3 };
        assert_eq!(window_indices(&s, &w), (100..=105).collect::<Vec<_>>());
        let plan = ContaminationPlan { windows: vec![w], ..Default::default() };
        let c = contaminate(&s, &plan).unwrap();
        let changed: Vec<usize> = (0..s.len()).filter(|&k| c.samples()[k] != s.samples()[k]).collect();
        assert_eq!(changed.len(), 6);
        for k in changed {
            let d = &c.samples()[k] - &s.samples()[k];
            assert!(d.iter().all(|v| (v - 0.3).abs() < 1e-12));
        }
    }

    #[test]
    fn window_outside_horizon_is_domain_error() {
        let s = linear(50);
        let plan = ContaminationPlan {
            windows: vec![OutlierWindow { start: 1.0, end: 1.05, magnitude: 0.3 }],
            ..Default::default()
        };
        assert!(matches!(contaminate(&s, &plan), Err(RdmdError::Domain(_))));
    }

    #[test]
    fn spike_counts_follow_the_binomial() {
        let s = linear(200);
        let mut total = 0usize;
        for seed in 0..100 {
            let plan = ContaminationPlan {
                spike: Some(SpikePlan { mu: 1.0, p: 0.05, eta: 0.0 }),
                seed,
                ..Default::default()
            };
            let c = contaminate(&s, &plan).unwrap();
            let count = (0..s.len())
                .flat_map(|k| (0..2).map(move |i| (k, i)))
                .filter(|&(k, i)| c.samples()[k][i] != s.samples()[k][i])
                .count();
            assert!((8..=36).contains(&count), "seed {seed}: {count}");
            total += count;
        }
        let mean = total as f64 / 100.0;
        assert!((mean - 20.1).abs() < 2.0, "{mean}");
    }

    #[test]
    fn contamination_is_reproducible() {
        let s = linear(100);
        let plan = ContaminationPlan {
            gaussian_sigma: 0.01,
            noise: NoiseKind::Cauchy { gamma: 2.0 },
            windows: vec![OutlierWindow { start: 0.2, end: 0.3, magnitude: 1.0 }],
            spike: Some(SpikePlan { mu: 1.0, p: 0.1, eta: 1e-4 }),
            seed: 7,
        };
        assert_eq!(contaminate(&s, &plan).unwrap(), contaminate(&s, &plan).unwrap());
        let other = ContaminationPlan { seed: 8, ..plan.clone() };
        assert_ne!(contaminate(&s, &plan).unwrap(), contaminate(&s, &other).unwrap());
    }

    #[test]
    fn windows_only_touch_their_samples() {
        let s = TimeSeries::new(0.5, vec![DVector::from_vec(vec![1.0, 2.0]); 9]).unwrap();
        let plan = ContaminationPlan {
            windows: vec![OutlierWindow { start: 1.0, end: 2.0, magnitude: -1.0 }],
            ..Default::default()
        };
        let c = contaminate(&s, &plan).unwrap();
        for k in 0..9 {
            let inside = (2..=4).contains(&k);
            assert_eq!(c.samples()[k] != s.samples()[k], inside);
        }
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let s = linear(10);
        let bad = [
            ContaminationPlan { gaussian_sigma: -1.0, ..Default::default() },
            ContaminationPlan { spike: Some(SpikePlan { mu: 1.0, p: 1.5, eta: 0.0 }), ..Default::default() },
            ContaminationPlan { noise: NoiseKind::StudentT { dof: 0 }, ..Default::default() },
        ];
        for p in bad {
            assert!(contaminate(&s, &p).is_err());
        }
    }
}
