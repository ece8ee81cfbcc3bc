//! Kramers-Moyal analytics of the stabilized Fock distribution.
//!
//! With `f(x) = 1F1(-x; 2; alpha)` the photon-number distribution obeys
//! `dP_n/dt = gamma[(n+1)P_{n+1} - n P_n] + eps[n f(n-1)^2 P_{n-1} - (n+1) f(n)^2 P_n]`,
//! whose large-`n0` Gaussian solution is summarized by [`predicted_moments`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::specfun::{bessel_constants, kummer_1f1_neg};

const DERIV_STEP: f64 = 1e-4;

/// Drift `A(n)` and diffusion `B(n)` of the photon number.
pub fn km_coefficients(n: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("n must be >= 1, got {n}")));
    }
    let g = params.gamma_a;
    let e = params.epsilon;
    let f = |x: f64| kummer_1f1_neg(x, params.alpha_a);
    let fm = f(n - 1.0)?;
    let df = (f(n - 1.0 + DERIV_STEP)? - f(n - 1.0 - DERIV_STEP)?) / (2.0 * DERIV_STEP);
    let a = n * g - e * (n + 1.0) * fm * (fm - 2.0 * df);
    let b = 0.5 * ((n + 1.0) * g + e * n * fm * fm);
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabPrediction {
    pub nbar_pred: f64,
    pub var_pred: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    pub n0: usize,
    #[serde(rename = "J")]
    pub j: f64,
}

/// Large-`n0` predictions for the mean and variance of the photon number.
///
/// `nbar = n0 (sqrt(g + 4J^2 e) - sqrt(g))^2 / (4 J^2 e)`, which tends to
/// `n0 (1 - sqrt(g / J^2 e))`, and `var = B0 / A0` with
/// `A0 = sqrt(4 J^2 g e) + g`, `B0 = n0 (g - sqrt(g^3 / J^2 e))`, i.e.
/// `var = n0 (sqrt(J^2 g e) - g) / (2 J^2 e + sqrt(J^2 g e))`.
pub fn predicted_moments(n0: usize, gamma: f64, epsilon: f64) -> Result<StabPrediction> {
    if !(epsilon > 0.0) || !(gamma > 0.0) {
        return Err(Error::Domain("gamma and epsilon must be positive".into()));
    }
    if n0 == 0 {
        return Err(Error::Domain("n0 must be at least 1".into()));
    }
    let j = bessel_constants().j;
    let j2e = j * j * epsilon;
    let n0f = n0 as f64;
    let root = (gamma + 4.0 * j2e).sqrt() - gamma.sqrt();
    let nbar = n0f * root * root / (4.0 * j2e);
    let a0 = (4.0 * j2e * gamma).sqrt() + gamma;
    let b0 = n0f * (gamma - (gamma.powi(3) / j2e).sqrt());
    let var = b0 / a0;
    if !(var > 0.0) {
        return Err(Error::Domain(format!(
            "gain too weak for a stabilized distribution: epsilon must exceed gamma/J^2 = {:.4}",
            gamma / (j * j)
        )));
    }
    Ok(StabPrediction {
        nbar_pred: nbar,
        var_pred: var,
        a0,
        b0,
        n0,
        j,
    })
}

/// Largest violation of the diagonal rate equation by `p`, read as the full
/// distribution of a chain truncated at `p.len()` levels.
pub fn rate_equation_residual(p: &[f64], params: &ModelParams) -> Result<f64> {
    let g = params.gamma_a;
    let e = params.epsilon;
    let m = p.len();
    let f2: Vec<f64> = (0..m)
        .map(|n| kummer_1f1_neg(n as f64, params.alpha_a).map(|v| v * v))
        .collect::<Result<_>>()?;
    let at = |i: usize| p.get(i).copied().unwrap_or(0.0);
    let mut worst: f64 = 0.0;
    for n in 0..m {
        let nf = n as f64;
        let loss = g * ((nf + 1.0) * at(n + 1) - nf * at(n));
        let gain_in = if n > 0 { nf * f2[n - 1] * at(n - 1) } else { 0.0 };
        // the chain is closed at the top level, like the truncated generator
        let gain_out = if n + 1 < m { (nf + 1.0) * f2[n] * at(n) } else { 0.0 };
        let gain = e * (gain_in - gain_out);
        worst = worst.max((loss + gain).abs());
    }
    Ok(worst)
}
