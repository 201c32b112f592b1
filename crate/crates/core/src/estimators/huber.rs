use crate::robust_stats::{median_in_place, MAD_FACTOR};

/// Huber loss: quadratic inside `|r| ≤ δ`, linear outside.
pub fn huber_rho(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        0.5 * r * r
    } else {
        delta * a - 0.5 * delta * delta
    }
}

/// Huber score `ψ = ρ'`, clipped at `±δ`.
pub fn huber_psi(r: f64, delta: f64) -> f64 {
    if r.abs() <= delta {
        r
    } else {
        delta * r.signum()
    }
}

/// IRLS weight `ψ(u)/u`, taken as 1 at `u = 0`.
pub fn huber_q(u: f64, delta: f64) -> f64 {
    let a = u.abs();
    if a <= delta {
        1.0
    } else {
        delta / a
    }
}

/// Robust residual scale and whether it hit the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustScale {
    pub value: f64,
    pub floored: bool,
}

/// `s = 1.4826 · b_m · median(magnitudes)`, floored at
/// `max(1e-12 · max magnitude, 1e-300)`.
pub fn robust_scale(magnitudes: &[f64], bm: f64) -> RobustScale {
    if magnitudes.is_empty() {
        return RobustScale { value: 1e-300, floored: true };
    }
    let max = magnitudes.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut buf: Vec<f64> = magnitudes.iter().map(|x| x.abs()).collect();
    let s = MAD_FACTOR * bm * median_in_place(&mut buf);
    let floor = (1e-12 * max).max(1e-300);
    if s < floor {
        RobustScale { value: floor, floored: true }
    } else {
        RobustScale { value: s, floored: false }
    }
}
