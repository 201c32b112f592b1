//! Benchmark dynamical systems and contamination of their trajectories.

mod benchmark;
mod contamination;
mod ode;
mod rng;

pub use benchmark::{simulate, BenchmarkSystem, SystemParams, SYSTEM_NAMES};
pub use contamination::{
    contaminate, window_indices, ContaminationPlan, NoiseKind, OutlierWindow, SpikePlan,
};
pub use ode::{integrate, rk4_step};
pub use rng::{derive_seed, NoiseRng};
