pub mod error;
pub mod experiment;
pub mod estimators;
pub mod linalg;
pub mod modal;
pub mod robust_stats;
pub mod snapshots;
pub mod systems;

#[cfg(test)]
mod testutil;
