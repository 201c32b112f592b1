use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use super::ode::integrate;
use super::rng::NoiseRng;
use crate::error::{RdmdError, Result};
use crate::snapshots::TimeSeries;

/// Benchmark dynamical systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum BenchmarkSystem {
    /// `ẋ = [[−1, −3], [1, 1]] x`, eigenvalues `±j√2`.
    Linear2x2,
    /// `ẋ = [[1, −2], [1, −1]] x`, eigenvalues `±j`.
    Oscillator,
    /// `s` oscillators on a ring: `θ̇ = ω`, `ω̇ = −Lθ − Dθ`, state `[θ; ω]`.
    Ring { s: usize, damping: f64 },
    /// `ẋ₁ = μx₁`, `ẋ₂ = λ(x₂ − x₁²)`.
    SlowManifold { mu: f64, lambda: f64 },
    /// `ẋ₁ = x₂`, `ẋ₂ = μ(1 − x₁²)x₂ − x₁`; `literal` drops the `−x₁` term.
    VanDerPol { mu: f64, literal: bool },
    /// `ẋ = (G − hI)x` with `G` standard normal and `h` half a unit
    /// beyond the spectral abscissa of `G`.
    RandomLinear { m: usize, seed: u64 },
    /// `ẋ₁ = Wx₁`, `ẋ₂ = −(x₂ − P(x₁))`, `W = diag(μᵢ)` with
    /// `μᵢ ~ −U(0.05, 1)` and `Pᵢ(x₁) = (Σⱼ x₁ⱼ)²`.
    GeneralizedSlowManifold { m: usize, seed: u64 },
}

/// Names accepted by [`BenchmarkSystem::from_name`].
pub const SYSTEM_NAMES: [&str; 7] = [
    "linear2x2",
    "oscillator",
    "ring",
    "slow_manifold",
    "van_der_pol",
    "random_linear",
    "generalized_slow_manifold",
];

/// Optional parameters when building a system by name.
#[derive(Debug, Clone, Default)]
pub struct SystemParams {
    pub s: Option<usize>,
    pub m: Option<usize>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub damping: Option<f64>,
    pub literal: bool,
    pub seed: u64,
}

impl BenchmarkSystem {
    pub fn from_name(name: &str, p: &SystemParams) -> Result<Self> {
        let sys = match name {
            "linear2x2" | "linear" => BenchmarkSystem::Linear2x2,
            "oscillator" => BenchmarkSystem::Oscillator,
            "ring" => BenchmarkSystem::Ring {
                s: p.s.unwrap_or(15),
                damping: p.damping.unwrap_or(0.05),
            },
            "slow_manifold" => BenchmarkSystem::SlowManifold {
                mu: p.mu.unwrap_or(-0.05),
                lambda: p.lambda.unwrap_or(-1.0),
            },
            "van_der_pol" | "vanderpol" => BenchmarkSystem::VanDerPol {
                mu: p.mu.unwrap_or(1.0),
                literal: p.literal,
            },
            "random_linear" => BenchmarkSystem::RandomLinear {
                m: p.m.unwrap_or(50),
                seed: p.seed,
            },
            "generalized_slow_manifold" => BenchmarkSystem::GeneralizedSlowManifold {
                m: p.m.unwrap_or(40),
                seed: p.seed,
            },
            other => {
                return Err(RdmdError::Config(format!(
                    "unknown system '{other}', expected one of {}",
                    SYSTEM_NAMES.join(", ")
                )))
            }
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkSystem::Linear2x2 => "linear2x2",
            BenchmarkSystem::Oscillator => "oscillator",
            BenchmarkSystem::Ring { .. } => "ring",
            BenchmarkSystem::SlowManifold { .. } => "slow_manifold",
            BenchmarkSystem::VanDerPol { .. } => "van_der_pol",
            BenchmarkSystem::RandomLinear { .. } => "random_linear",
            BenchmarkSystem::GeneralizedSlowManifold { .. } => "generalized_slow_manifold",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BenchmarkSystem::Ring { s, damping } => {
                if s < 3 {
                    return Err(RdmdError::Config(format!("ring needs s >= 3, got {s}")));
                }
                if !(damping >= 0.0 && damping.is_finite()) {
                    return Err(RdmdError::Config("ring damping must be nonnegative".into()));
                }
            }
            BenchmarkSystem::SlowManifold { mu, lambda } => {
                if !(mu.is_finite() && lambda.is_finite()) {
                    return Err(RdmdError::Config("slow manifold parameters must be finite".into()));
                }
            }
            BenchmarkSystem::VanDerPol { mu, .. } => {
                if !mu.is_finite() {
                    return Err(RdmdError::Config("Van der Pol mu must be finite".into()));
                }
            }
            BenchmarkSystem::RandomLinear { m, .. } => {
                if m == 0 {
                    return Err(RdmdError::Config("random linear system needs m >= 1".into()));
                }
            }
            BenchmarkSystem::GeneralizedSlowManifold { m, .. } => {
                if m < 2 || m % 2 != 0 {
                    return Err(RdmdError::Config(format!(
                        "generalized slow manifold needs an even m >= 2, got {m}"
                    )));
                }
            }
            BenchmarkSystem::Linear2x2 | BenchmarkSystem::Oscillator => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match *self {
            BenchmarkSystem::Ring { s, .. } => 2 * s,
            BenchmarkSystem::RandomLinear { m, .. } | BenchmarkSystem::GeneralizedSlowManifold { m, .. } => m,
            _ => 2,
        }
    }

    /// Initial state used when none is given.
    pub fn default_x0(&self) -> DVector<f64> {
        let m = self.dim();
        match *self {
            BenchmarkSystem::Linear2x2 | BenchmarkSystem::Oscillator => DVector::from_vec(vec![1.0, 0.0]),
            BenchmarkSystem::Ring { .. } => {
                let mut x = DVector::zeros(m);
                x[0] = 1.0;
                x
            }
            BenchmarkSystem::SlowManifold { .. } => DVector::from_vec(vec![1.0, 2.0]),
            BenchmarkSystem::VanDerPol { .. } => DVector::from_vec(vec![2.0, 0.0]),
            BenchmarkSystem::RandomLinear { .. } => DVector::from_element(m, 1.0),
            BenchmarkSystem::GeneralizedSlowManifold { seed, .. } => {
                let h = m / 2;
                let mut rng = NoiseRng::for_stage(seed, "gsm-x0");
                DVector::from_fn(m, |i, _| {
                    let u = rng.uniform_open();
                    if i < h {
                        0.2 * (0.5 + u)
                    } else {
                        0.5 * u
                    }
                })
            }
        }
    }

    /// The system matrix for linear variants.
    pub fn linear_matrix(&self) -> Option<DMatrix<f64>> {
        match *self {
            BenchmarkSystem::Linear2x2 => Some(DMatrix::from_row_slice(2, 2, &[-1.0, -3.0, 1.0, 1.0])),
            BenchmarkSystem::Oscillator => Some(DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 1.0, -1.0])),
            BenchmarkSystem::Ring { s, damping } => {
                let mut a = DMatrix::zeros(2 * s, 2 * s);
                for k in 0..s {
                    a[(k, s + k)] = 1.0;
                    a[(s + k, k)] = -2.0 - damping;
                    a[(s + k, (k + 1) % s)] += 1.0;
                    a[(s + k, (k + s - 1) % s)] += 1.0;
                }
                Some(a)
            }
            BenchmarkSystem::RandomLinear { m, seed } => Some(random_stable_matrix(m, seed)),
            _ => None,
        }
    }

    /// Slow rates `μᵢ` of the generalized slow manifold.
    pub fn slow_rates(&self) -> Option<Vec<f64>> {
        match *self {
            BenchmarkSystem::GeneralizedSlowManifold { m, seed } => {
                let mut rng = NoiseRng::for_stage(seed, "gsm-rates");
                Some((0..m / 2).map(|_| -(0.05 + 0.95 * rng.uniform_open())).collect())
            }
            _ => None,
        }
    }
}

fn random_stable_matrix(m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = NoiseRng::for_stage(seed, "random-linear");
    // row-major fill so the matrix does not depend on storage order
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = rng.normal();
        }
    }
    let abscissa = Schur::new(g.clone())
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let h = abscissa + 0.5;
    g - DMatrix::identity(m, m) * h
}

/// Integrates `system` from `x0` with `steps` RK4 steps of size `dt`.
pub fn simulate(system: &BenchmarkSystem, x0: &DVector<f64>, dt: f64, steps: usize) -> Result<TimeSeries> {
    system.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(RdmdError::Config(format!("dt must be positive, got {dt}")));
    }
    if steps == 0 {
        return Err(RdmdError::Config("steps must be at least 1".into()));
    }
    if x0.len() != system.dim() {
        return Err(RdmdError::Config(format!(
            "{} has dimension {}, x0 has {}",
            system.name(),
            system.dim(),
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(RdmdError::Config("x0 must be finite".into()));
    }
    let states = if let Some(a) = system.linear_matrix() {
        integrate(|x: &DVector<f64>| &a * x, x0, dt, steps)?
    } else {
        match *system {
            BenchmarkSystem::SlowManifold { mu, lambda } => integrate(
                |x: &DVector<f64>| DVector::from_vec(vec![mu * x[0], lambda * (x[1] - x[0] * x[0])]),
                x0,
                dt,
                steps,
            )?,
            BenchmarkSystem::VanDerPol { mu, literal } => integrate(
                |x: &DVector<f64>| {
                    let restoring = if literal { 0.0 } else { x[0] };
                    DVector::from_vec(vec![x[1], mu * (1.0 - x[0] * x[0]) * x[1] - restoring])
                },
                x0,
                dt,
                steps,
            )?,
            BenchmarkSystem::GeneralizedSlowManifold { m, .. } => {
                let h = m / 2;
                let rates = system.slow_rates().expect("generalized slow manifold");
                integrate(
                    |x: &DVector<f64>| {
                        let sum: f64 = x.rows(0, h).sum();
                        let p = sum * sum;
                        DVector::from_fn(m, |i, _| {
                            if i < h {
                                rates[i] * x[i]
                            } else {
                                -(x[i] - p)
                            }
                        })
                    },
                    x0,
                    dt,
                    steps,
                )?
            }
            _ => unreachable!("linear systems handled above"),
        }
    };
    TimeSeries::new(dt, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::expm;

    fn linear_oracle_error(dt: f64, horizon: f64) -> f64 {
        let sys = BenchmarkSystem::Linear2x2;
        let steps = (horizon / dt).round() as usize;
        let x0 = sys.default_x0();
        let ts = simulate(&sys, &x0, dt, steps).unwrap();
        let step = expm(&(sys.linear_matrix().unwrap() * dt));
        let mut x = x0;
        let mut worst = 0.0_f64;
        for s in ts.samples() {
            worst = worst.max((s - &x).norm());
            x = &step * x;
        }
        worst
    }

    #[test]
    fn linear_center_matches_exponential_and_stays_bounded() {
        assert!(linear_oracle_error(0.01, 10.0) <= 1e-8);
        let ts = simulate(&BenchmarkSystem::Linear2x2, &DVector::from_vec(vec![1.0, 0.0]), 0.01, 1000).unwrap();
        assert!(ts.samples().iter().all(|x| x.norm() <= 10.0));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let coarse = linear_oracle_error(0.2, 4.0);
        let fine = linear_oracle_error(0.1, 4.0);
        assert!(coarse / fine >= 8.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn slow_manifold_is_attracting() {
        let sys = BenchmarkSystem::SlowManifold { mu: -0.05, lambda: -1.0 };
        let ts = simulate(&sys, &DVector::from_vec(vec![1.0, 2.0]), 0.01, 1000).unwrap();
        // the invariant manifold is x₂ = λ/(λ − 2μ) · x₁², which the
        // off-manifold component approaches like e^{λt}
        let c = -1.0 / (-1.0 + 0.1);
        let last = ts.samples().last().unwrap();
        assert!((last[1] - c * last[0] * last[0]).abs() < 1e-3);
    }

    #[test]
    fn one_step_gives_two_samples() {
        for name in SYSTEM_NAMES {
            let p = SystemParams { m: Some(6), s: Some(4), ..Default::default() };
            let sys = BenchmarkSystem::from_name(name, &p).unwrap();
            let ts = simulate(&sys, &sys.default_x0(), 0.01, 1).unwrap();
            assert_eq!(ts.len(), 2);
            assert_eq!(ts.dim(), sys.dim());
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let sys = BenchmarkSystem::RandomLinear { m: 8, seed: 3 };
        let a = simulate(&sys, &sys.default_x0(), 0.01, 50).unwrap();
        let b = simulate(&sys, &sys.default_x0(), 0.01, 50).unwrap();
        assert_eq!(a, b);
        let g = BenchmarkSystem::GeneralizedSlowManifold { m: 10, seed: 3 };
        assert_eq!(
            simulate(&g, &g.default_x0(), 0.01, 50).unwrap(),
            simulate(&g, &g.default_x0(), 0.01, 50).unwrap()
        );
    }

    #[test]
    fn random_linear_is_stable_with_margin() {
        for seed in 0..5 {
            let a = BenchmarkSystem::RandomLinear { m: 30, seed }.linear_matrix().unwrap();
            let worst = Schur::new(a).complex_eigenvalues().iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
            assert!(worst <= -0.4, "seed {seed}: {worst}");
        }
    }

    #[test]
    fn ring_matrix_structure() {
        let a = BenchmarkSystem::Ring { s: 5, damping: 0.05 }.linear_matrix().unwrap();
        assert_eq!(a[(0, 5)], 1.0);
        assert_eq!(a[(5, 0)], -2.05);
        assert_eq!(a[(5, 1)], 1.0);
        assert_eq!(a[(5, 4)], 1.0);
        assert_eq!(a[(5, 2)], 0.0);
    }

    #[test]
    fn oscillator_and_generalized_rates() {
        let a = BenchmarkSystem::Oscillator.linear_matrix().unwrap();
        let eig = Schur::new(a).complex_eigenvalues();
        for c in eig.iter() {
            assert!(c.re.abs() < 1e-12 && (c.im.abs() - 1.0).abs() < 1e-12);
        }
        let rates = BenchmarkSystem::GeneralizedSlowManifold { m: 40, seed: 1 }.slow_rates().unwrap();
        assert_eq!(rates.len(), 20);
        assert!(rates.iter().all(|&r| (-1.0..=-0.05).contains(&r)));
    }

    #[test]
    fn invalid_systems_are_rejected() {
        let p = SystemParams { s: Some(2), m: Some(5), ..Default::default() };
        assert!(BenchmarkSystem::from_name("ring", &p).is_err());
        assert!(BenchmarkSystem::from_name("generalized_slow_manifold", &p).is_err());
        assert!(BenchmarkSystem::from_name("lorenz", &p).is_err());
        let sys = BenchmarkSystem::Linear2x2;
        assert!(simulate(&sys, &DVector::zeros(3), 0.01, 5).is_err());
        assert!(simulate(&sys, &DVector::zeros(2), 0.0, 5).is_err());
    }

    #[test]
    fn literal_van_der_pol_differs() {
        let std = BenchmarkSystem::VanDerPol { mu: 1.0, literal: false };
        let lit = BenchmarkSystem::VanDerPol { mu: 1.0, literal: true };
        let x0 = DVector::from_vec(vec![0.5, 0.5]);
        let a = simulate(&std, &x0, 0.01, 10).unwrap();
        let b = simulate(&lit, &x0, 0.01, 10).unwrap();
        assert_ne!(a.samples()[10], b.samples()[10]);
    }
}
