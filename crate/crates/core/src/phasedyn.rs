//! Phase dynamics: cumulant rates of the extended phase from `lambda0(q)`,
//! the noisy Adler (tilted washboard) description, Kramers slip rates and a
//! stochastic reference integrator.

use std::f64::consts::{PI, TAU};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::specfun::kummer_1f1_neg;
use crate::steady::{lambda0_curve, steady_model, Quality, TruncationPolicy};
use crate::observables::fock_stats;

/// Drift `d<phi>/dt` and diffusion `(1/2) d<<phi^2>>/dt` of the extended phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCumulants {
    pub drift: f64,
    pub diffusion: f64,
    /// Difference between the `dq` and `dq/2` stencil estimates.
    pub drift_error: f64,
    pub diffusion_error: f64,
    pub quality: Quality,
    pub nbar: f64,
    pub dim: usize,
}

fn stencil(l0: f64, l1: crate::fock::C64, l2: crate::fock::C64, h: f64) -> (f64, f64) {
    let drift = (8.0 * l1.im - l2.im) / (6.0 * h);
    let second = (-2.0 * l2.re + 32.0 * l1.re - 30.0 * l0) / (12.0 * h * h);
    (drift, -0.5 * second)
}

/// Cumulant rates from five-point stencils on `lambda0` with one Richardson step.
///
/// Only `q >= 0` is solved; negative fields follow from `lambda0(-q) = conj lambda0(q)`.
pub fn phase_cumulants(params: &ModelParams, dq: f64, policy: &TruncationPolicy) -> Result<PhaseCumulants> {
    if !(dq > 0.0 && dq <= 0.1) {
        return Err(Error::Domain(format!("dq must lie in (0, 0.1], got {dq}")));
    }
    let h = dq;
    let qs = [0.0, 0.5 * h, h, 2.0 * h];
    let track = lambda0_curve(params, &qs, policy)?;
    if track.aborted || track.q_values.len() != qs.len() {
        return Err(Error::EigenNonConvergence {
            iterations: track.q_values.len(),
            residual: f64::INFINITY,
        });
    }
    let l = |q: f64| track.value_at(q).expect("solved field");
    let l0 = l(0.0).re;
    let (d_h, k_h) = stencil(l0, l(h), l(2.0 * h), h);
    let (d_half, k_half) = stencil(l0, l(0.5 * h), l(h), 0.5 * h);
    let drift = (16.0 * d_half - d_h) / 15.0;
    let diffusion = (16.0 * k_half - k_h) / 15.0;
    let mut quality = track.quality();
    let smallest = l(0.5 * h).norm();
    let floor = Quality::of_magnitude(smallest, track.norm);
    quality.below_trust_floor |= floor.below_trust_floor;
    quality.near_roundoff |= floor.near_roundoff;
    let base = steady_model(params, &TruncationPolicy { initial: Some(track.dim), ..*policy })?;
    let nbar = fock_stats(&base.rho).1;
    Ok(PhaseCumulants {
        drift,
        diffusion,
        drift_error: (d_half - d_h).abs(),
        diffusion_error: (k_half - k_h).abs(),
        quality,
        nbar,
        dim: track.dim,
    })
}

/// Parameters of `dphi = [Delta - (f/sqrt(nbar)) sin(phi - theta)] dt + sqrt(2D) dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdlerParams {
    pub nbar: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub delta: f64,
    pub f: f64,
    pub theta: f64,
}

impl AdlerParams {
    pub fn new(nbar: f64, d: f64, delta: f64, f: f64, theta: f64) -> Result<Self> {
        if !(nbar > 0.0) || !(d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Adler model needs nbar > 0 and D > 0 (got {nbar}, {d})"
            )));
        }
        Ok(Self {
            nbar,
            d,
            delta,
            f,
            theta,
        })
    }

    /// Locking strength `f / sqrt(nbar)`.
    pub fn coupling(&self) -> f64 {
        self.f / self.nbar.sqrt()
    }

    /// Washboard potential `U(phi) = -Delta phi - K cos(phi - theta)`.
    pub fn potential(&self, phi: f64) -> f64 {
        -self.delta * phi - self.coupling() * (phi - self.theta).cos()
    }

    pub fn is_locked(&self) -> bool {
        self.coupling() > self.delta.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlipRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub err_plus: f64,
    pub err_minus: f64,
}

impl SlipRates {
    pub fn drift(&self) -> f64 {
        TAU * (self.gamma_plus - self.gamma_minus)
    }

    pub fn diffusion(&self) -> f64 {
        2.0 * PI * PI * (self.gamma_plus + self.gamma_minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdlerPrediction {
    pub adler: AdlerParams,
    pub locked: bool,
    pub phi0: Option<f64>,
    pub phase_var: Option<f64>,
    /// Forward and backward barriers of the tilted washboard.
    pub barriers: Option<(f64, f64)>,
    /// Kramers rates when locked, free-running estimate otherwise.
    pub kramers: SlipRates,
}

/// Free phase diffusion `[gamma + eps 1F1(-nbar; 2; alpha)] / (8 nbar)`.
pub fn analytic_free_diffusion(params: &ModelParams, nbar: f64) -> Result<f64> {
    if !(nbar > 0.0) {
        return Err(Error::Domain(format!("nbar must be positive, got {nbar}")));
    }
    let gain = if params.epsilon > 0.0 {
        params.epsilon * kummer_1f1_neg(nbar, params.alpha_a)?
    } else {
        0.0
    };
    Ok((params.gamma_a + gain) / (8.0 * nbar))
}

/// Analytic Adler/Kramers picture for given `nbar` and `D`.
pub fn adler_predictions_with(ap: AdlerParams) -> AdlerPrediction {
    let k = ap.coupling();
    let d = ap.d;
    if ap.is_locked() {
        let s = ap.delta / k;
        let asn = s.asin();
        let phi_min = ap.theta + asn;
        let phi_fwd = ap.theta + PI - asn;
        let phi_bwd = ap.theta - PI - asn;
        let u_min = ap.potential(phi_min);
        let du_plus = ap.potential(phi_fwd) - u_min;
        let du_minus = ap.potential(phi_bwd) - u_min;
        let pref = k * (1.0 - s * s).sqrt() / TAU;
        let gp = pref * (-du_plus / d).exp();
        let gm = pref * (-du_minus / d).exp();
        AdlerPrediction {
            adler: ap,
            locked: true,
            phi0: Some(phi_min),
            phase_var: Some(d / (k * k - ap.delta * ap.delta).sqrt()),
            barriers: Some((du_plus, du_minus)),
            kramers: SlipRates {
                gamma_plus: gp,
                gamma_minus: gm,
                err_plus: 0.0,
                err_minus: 0.0,
            },
        }
    } else {
        let beat = ap.delta.signum() * (ap.delta * ap.delta - k * k).max(0.0).sqrt();
        let diffusive = d / (4.0 * PI * PI);
        AdlerPrediction {
            adler: ap,
            locked: false,
            phi0: None,
            phase_var: None,
            barriers: None,
            kramers: SlipRates {
                gamma_plus: diffusive + beat.max(0.0) / TAU,
                gamma_minus: diffusive + (-beat).max(0.0) / TAU,
                err_plus: 0.0,
                err_minus: 0.0,
            },
        }
    }
}

/// Adler predictions with `nbar` supplied and `D` from [`analytic_free_diffusion`].
pub fn adler_predictions(params: &ModelParams, nbar: f64) -> Result<AdlerPrediction> {
    let d = analytic_free_diffusion(params, nbar)?;
    let ap = AdlerParams::new(nbar, d, params.delta, params.f, params.theta)?;
    Ok(adler_predictions_with(ap))
}

/// Adler predictions with `nbar` from the steady state of `params` itself.
pub fn adler_from_model(params: &ModelParams, policy: &TruncationPolicy) -> Result<AdlerPrediction> {
    let sol = steady_model(params, policy)?;
    let nbar = fock_stats(&sol.rho).1;
    adler_predictions(params, nbar)
}

/// Adler model whose `nbar` and `D` are taken from the undriven quantum model.
///
/// Returns the model and the free cumulants it was calibrated on.
pub fn calibrated_adler(params: &ModelParams, dq: f64, policy: &TruncationPolicy) -> Result<(AdlerParams, PhaseCumulants)> {
    let free = params.clone().with_drive(0.0, 0.0, params.theta);
    let c = phase_cumulants(&free, dq, policy)?;
    let ap = AdlerParams::new(c.nbar, c.diffusion, params.delta, params.f, params.theta)?;
    Ok((ap, c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdeOptions {
    pub dt: f64,
    pub t_total: f64,
    pub n_traj: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdeResult {
    pub drift: f64,
    pub diffusion: f64,
    pub drift_err: f64,
    pub diffusion_err: f64,
    pub slips: SlipRates,
    pub n_plus: u64,
    pub n_minus: u64,
    /// No slip was seen; rates are 95% upper bounds.
    pub upper_bound: bool,
    /// Drift and diffusion from the end-point moments of `phi(T) - phi(0)`.
    pub direct_drift: f64,
    pub direct_diffusion: f64,
}

/// Largest admissible step, `0.01 min(1/D, 1/K)`.
pub fn max_sde_step(ap: &AdlerParams) -> f64 {
    let k = ap.coupling();
    let mut bound = 1.0 / ap.d;
    if k > 0.0 {
        bound = bound.min(1.0 / k);
    }
    if ap.delta != 0.0 {
        bound = bound.min(1.0 / ap.delta.abs());
    }
    0.01 * bound
}

struct TrajStats {
    plus: u64,
    minus: u64,
    displacement: f64,
}

/// Euler-Maruyama integration of the noisy Adler equation with slip counting.
///
/// Each trajectory draws from its own ChaCha stream of the master seed, so the
/// result does not depend on the thread count. A slip is a first passage to the
/// neighbouring well minimum; the anchor then moves to that minimum.
pub fn adler_sde_oracle(ap: &AdlerParams, opts: &SdeOptions) -> Result<SdeResult> {
    if !(opts.dt > 0.0) || !(opts.t_total > 0.0) || opts.n_traj == 0 {
        return Err(Error::InvalidParameter("dt, T and n_traj must be positive".into()));
    }
    let bound = max_sde_step(ap);
    if opts.dt > bound * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "dt = {} exceeds the stability bound {bound:e}",
            opts.dt
        )));
    }
    let steps = (opts.t_total / opts.dt).round() as u64;
    let t_total = steps as f64 * opts.dt;
    let k = ap.coupling();
    let noise = (2.0 * ap.d * opts.dt).sqrt();
    let pred = adler_predictions_with(*ap);
    let stats: Vec<TrajStats> = (0..opts.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let start = pred.phi0.unwrap_or_else(|| rng.random_range(0.0..TAU));
            let mut phi = start;
            let mut anchor = start;
            let mut plus = 0;
            let mut minus = 0;
            for _ in 0..steps {
                let xi: f64 = rng.sample(StandardNormal);
                phi += (ap.delta - k * (phi - ap.theta).sin()) * opts.dt + noise * xi;
                if phi >= anchor + TAU {
                    plus += 1;
                    anchor += TAU;
                } else if phi <= anchor - TAU {
                    minus += 1;
                    anchor -= TAU;
                }
            }
            TrajStats {
                plus,
                minus,
                displacement: phi - start,
            }
        })
        .collect();
    let n_plus: u64 = stats.iter().map(|s| s.plus).sum();
    let n_minus: u64 = stats.iter().map(|s| s.minus).sum();
    let exposure = opts.n_traj as f64 * t_total;
    let upper_bound = n_plus + n_minus == 0;
    let rate = |n: u64| if n == 0 { 3.0 / exposure } else { n as f64 / exposure };
    let slips = SlipRates {
        gamma_plus: if upper_bound { rate(0) } else { n_plus as f64 / exposure },
        gamma_minus: if upper_bound { rate(0) } else { n_minus as f64 / exposure },
        err_plus: (n_plus.max(1) as f64).sqrt() / exposure,
        err_minus: (n_minus.max(1) as f64).sqrt() / exposure,
    };
    let total_err = ((n_plus + n_minus).max(1) as f64).sqrt() / exposure;
    let nt = opts.n_traj as f64;
    let mean = stats.iter().map(|s| s.displacement).sum::<f64>() / nt;
    let var = if opts.n_traj > 1 {
        stats.iter().map(|s| (s.displacement - mean).powi(2)).sum::<f64>() / (nt - 1.0)
    } else {
        0.0
    };
    Ok(SdeResult {
        drift: slips.drift(),
        diffusion: slips.diffusion(),
        drift_err: TAU * total_err,
        diffusion_err: 2.0 * PI * PI * total_err,
        slips,
        n_plus,
        n_minus,
        upper_bound,
        direct_drift: mean / t_total,
        direct_diffusion: 0.5 * var / t_total,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub f: f64,
    pub result: std::result::Result<PhaseCumulants, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub deltas: Vec<f64>,
    pub fs: Vec<f64>,
    /// Row-major: all `f` for the first `delta`, then the next.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn get(&self, i_delta: usize, i_f: usize) -> &SweepPoint {
        &self.points[i_delta * self.fs.len() + i_f]
    }
}

/// Phase cumulants over a `(Delta, f)` grid; failing points are recorded, not fatal.
pub fn arnold_tongue_sweep(
    base: &ModelParams,
    delta_grid: &[f64],
    f_grid: &[f64],
    dq: f64,
    policy: &TruncationPolicy,
) -> Result<SweepResult> {
    if delta_grid.is_empty() || f_grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be non-empty".into()));
    }
    if delta_grid.iter().chain(f_grid).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("sweep grids must be finite".into()));
    }
    let nominal = base.target_level() as f64;
    let rows: Vec<Vec<SweepPoint>> = delta_grid
        .par_iter()
        .map(|&delta| {
            let mut dim = policy.initial;
            f_grid
                .iter()
                .map(|&f| {
                    let p = base.clone().with_drive(delta, f, base.theta);
                    if p.drive_photons() >= nominal {
                        warn!("drive injects {:.2} photons at (delta={delta}, f={f}), beyond the weak-drive regime", p.drive_photons());
                    }
                    let local = TruncationPolicy { initial: dim, ..*policy };
                    let result = phase_cumulants(&p, dq, &local).map_err(|e| e.to_string());
                    if let Ok(c) = &result {
                        dim = Some(c.dim);
                    }
                    SweepPoint { delta, f, result }
                })
                .collect()
        })
        .collect();
    Ok(SweepResult {
        deltas: delta_grid.to_vec(),
        fs: f_grid.to_vec(),
        points: rows.into_iter().flatten().collect(),
    })
}

/// Least-squares line `y = slope x + intercept` with coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("linear fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter("abscissae must not all coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        n: x.len(),
    })
}

/// Exponent of the slip-rate suppression quoted for the undriven Fock state, `8 sqrt(n0/(gamma eps))`.
pub fn printed_kramers_slope(n0: usize, gamma: f64, epsilon: f64) -> f64 {
    8.0 * (n0 as f64 / (gamma * epsilon)).sqrt()
}

/// `d ln(Gamma)/df = -2/(sqrt(nbar) D)` from the barrier `2f/sqrt(nbar)` of the untilted washboard.
pub fn kramers_slope(nbar: f64, d: f64) -> f64 {
    2.0 / (nbar.sqrt() * d)
}

/// Indices of points strictly inside the suppressed-but-resolvable window:
/// diffusion below `fraction * d_free` and above every precision floor.
pub fn suppressed_window(points: &[(f64, PhaseCumulants)], d_free: f64, fraction: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, (_, c))| {
            c.diffusion > 0.0 && c.diffusion < fraction * d_free && !c.quality.below_trust_floor && !c.quality.near_roundoff
        })
        .map(|(i, _)| i)
        .collect()
}
