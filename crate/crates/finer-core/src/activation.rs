//! Activation families for coordinate networks.
//!
//! `Finer` is the variable-periodic unit sin(ω₀·(|x|+1)·x): the local
//! oscillation frequency grows with |x|, so the magnitude of the
//! pre-activation (steered by the bias initialization range) selects the
//! effective frequency. `Sine` is the fixed-period unit sin(ω₀·x).

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Activation {
    Finer { omega0: f64 },
    Sine { omega0: f64 },
    Gaussian { sigma: f64 },
    Identity,
}

impl Activation {
    pub fn finer(omega0: f64) -> Self {
        Activation::Finer { omega0 }
    }

    pub fn sine(omega0: f64) -> Self {
        Activation::Sine { omega0 }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Activation::Gaussian { sigma }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::Finer { omega0 } | Activation::Sine { omega0 } => {
                ensure!(
                    omega0 > 0.0 && omega0.is_finite(),
                    "omega0 must be positive and finite, got {omega0}"
                );
            }
            Activation::Gaussian { sigma } => {
                ensure!(
                    sigma > 0.0 && sigma.is_finite(),
                    "sigma must be positive and finite, got {sigma}"
                );
            }
            Activation::Identity => {}
        }
        Ok(())
    }

    /// Total function: finite input, finite output for every family.
    #[inline]
    pub fn activate(&self, x: f64) -> f64 {
        match *self {
            Activation::Finer { omega0 } => (omega0 * (x.abs() + 1.0) * x).sin(),
            Activation::Sine { omega0 } => (omega0 * x).sin(),
            Activation::Gaussian { sigma } => (-x * x / (2.0 * sigma * sigma)).exp(),
            Activation::Identity => x,
        }
    }

    /// Exact analytic derivative of [`Activation::activate`].
    ///
    /// For `Finer` the inner map (|x|+1)·x is differentiable everywhere with
    /// slope 2|x|+1, so the derivative at 0 is exactly ω₀.
    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        match *self {
            Activation::Finer { omega0 } => {
                omega0 * (2.0 * x.abs() + 1.0) * (omega0 * (x.abs() + 1.0) * x).cos()
            }
            Activation::Sine { omega0 } => omega0 * (omega0 * x).cos(),
            Activation::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                -x / s2 * (-x * x / (2.0 * s2)).exp()
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Finer { .. } => "finer",
            Activation::Sine { .. } => "sine",
            Activation::Gaussian { .. } => "gaussian",
            Activation::Identity => "identity",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn finer_at_zero() {
        let f = Activation::finer(1.0);
        assert_eq!(f.activate(0.0), 0.0);
        assert_eq!(f.grad(0.0), 1.0);
    }

    #[test]
    fn finer_analytic_root() {
        // (|x|+1)·x = π exactly at x = (√(1+4π)−1)/2, so sin vanishes there.
        let x = ((1.0 + 4.0 * std::f64::consts::PI).sqrt() - 1.0) / 2.0;
        let f = Activation::finer(1.0);
        assert!(f.activate(x).abs() < 1e-14);
    }

    #[test]
    fn finer_odd_symmetry() {
        let f = Activation::finer(2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            assert_eq!(f.activate(-x), -f.activate(x));
        }
    }

    #[test]
    fn sine_quarter_period() {
        let s = Activation::sine(30.0);
        let x = std::f64::consts::PI / 60.0;
        assert!((s.activate(x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_peak_grad_zero() {
        let g = Activation::gaussian(0.05);
        assert_eq!(g.grad(0.0), 0.0);
        assert_eq!(g.activate(0.0), 1.0);
    }

    #[test]
    fn grads_match_finite_differences() {
        let families = [
            Activation::finer(2.5),
            Activation::finer(30.0),
            Activation::sine(30.0),
            Activation::gaussian(0.3),
            Activation::Identity,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = 1e-6;
        for fam in families {
            for _ in 0..50 {
                let x: f64 = rng.gen_range(-2.0..2.0);
                let fd = (fam.activate(x + h) - fam.activate(x - h)) / (2.0 * h);
                let an = fam.grad(x);
                let tol = 1e-6 * an.abs().max(fd.abs()).max(1.0) + 1e-9;
                assert!(
                    (fd - an).abs() <= tol,
                    "{fam:?} x={x}: fd={fd} analytic={an}"
                );
            }
        }
    }

    #[test]
    fn validate_rejects_bad_params() {
        assert!(Activation::finer(0.0).validate().is_err());
        assert!(Activation::sine(-2.0).validate().is_err());
        assert!(Activation::gaussian(0.0).validate().is_err());
        assert!(Activation::Identity.validate().is_ok());
    }
}
