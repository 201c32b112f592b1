use nalgebra::DVector;

use crate::error::{RdmdError, Result};

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(f: &F, x: &DVector<f64>, dt: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (0.5 * dt)));
    let k3 = f(&(x + &k2 * (0.5 * dt)));
    let k4 = f(&(x + &k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// `steps` fixed RK4 steps from `x0`; returns all `steps + 1` states.
pub fn integrate<F>(f: F, x0: &DVector<f64>, dt: f64, steps: usize) -> Result<Vec<DVector<f64>>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0.clone());
    for k in 0..steps {
        let next = rk4_step(&f, &out[k], dt);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(RdmdError::Divergence { step: k + 1 });
        }
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let x0 = DVector::from_element(1, 1.0);
        let xs = integrate(|x: &DVector<f64>| -x, &x0, 0.1, 10).unwrap();
        assert!((xs[10][0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn blow_up_names_the_step() {
        let x0 = DVector::from_element(1, 1.0);
        let err = integrate(|x: &DVector<f64>| x.map(|v| v * v * v), &x0, 1.0, 50).unwrap_err();
        assert!(matches!(err, RdmdError::Divergence { step } if step > 1));
    }
}
