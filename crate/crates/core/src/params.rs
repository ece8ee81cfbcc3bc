//! Physical parameters of the single-mode (and optional two-mode) model.
//! All rates are in units of the loss rate, so `gamma_a = 1` is the usual choice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::laguerre_first_zero;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma_a: f64,
    pub epsilon: f64,
    pub alpha_a: f64,
    /// Target Fock level when `alpha_a` was derived from it.
    pub n0: Option<usize>,
    pub delta: f64,
    pub f: f64,
    pub theta: f64,
    pub e_tilde: f64,
    pub gamma_b: f64,
    pub alpha_b: f64,
}

impl ModelParams {
    /// Undriven model stabilizing `|n0>`, with `alpha_a` at the first Laguerre zero.
    pub fn fock(n0: usize, epsilon: f64) -> Result<Self> {
        let alpha = laguerre_first_zero(n0)?;
        let p = Self {
            gamma_a: 1.0,
            epsilon,
            alpha_a: alpha,
            n0: Some(n0),
            delta: 0.0,
            f: 0.0,
            theta: 0.0,
            e_tilde: 0.0,
            gamma_b: 1.0,
            alpha_b: alpha,
        };
        p.validate()?;
        Ok(p)
    }

    /// Driven, damped harmonic oscillator (no gain).
    pub fn coherent(delta: f64, f: f64, theta: f64) -> Self {
        Self {
            gamma_a: 1.0,
            epsilon: 0.0,
            alpha_a: 1.0,
            n0: None,
            delta,
            f,
            theta,
            e_tilde: 0.0,
            gamma_b: 1.0,
            alpha_b: 1.0,
        }
    }

    pub fn with_drive(mut self, delta: f64, f: f64, theta: f64) -> Self {
        self.delta = delta;
        self.f = f;
        self.theta = theta;
        self
    }

    pub fn with_two_mode(mut self, e_tilde: f64, gamma_b: f64, alpha_b: f64) -> Self {
        self.e_tilde = e_tilde;
        self.gamma_b = gamma_b;
        self.alpha_b = alpha_b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma_a,
            self.epsilon,
            self.alpha_a,
            self.delta,
            self.f,
            self.theta,
            self.e_tilde,
            self.gamma_b,
            self.alpha_b,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if !(self.gamma_a > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma_a must be positive, got {}", self.gamma_a)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.f < 0.0 {
            return Err(Error::InvalidParameter(format!("f must be >= 0, got {}", self.f)));
        }
        if !(self.alpha_a > 0.0) || !(self.alpha_b > 0.0) {
            return Err(Error::InvalidParameter("alpha_a and alpha_b must be positive".into()));
        }
        if !(self.gamma_b > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma_b must be positive, got {}", self.gamma_b)));
        }
        Ok(())
    }

    /// `n0` if set, otherwise the level blocked by `alpha_a` estimated as `x11^2 / (4 alpha)`.
    pub fn target_level(&self) -> usize {
        self.n0
            .unwrap_or_else(|| (3.670_8 / self.alpha_a).round().max(1.0) as usize)
    }

    /// Photon number injected by the drive alone, `f^2 / (Delta^2 + gamma^2/4)`.
    pub fn drive_photons(&self) -> f64 {
        self.f * self.f / (self.delta * self.delta + 0.25 * self.gamma_a * self.gamma_a)
    }
}
