//! Check of the adiabatic elimination of the lossy mode `b`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::liouville::{liouvillian_two_mode, TWO_MODE_CAP};
use crate::observables::{fock_stats, partial_trace_b, total_variation};
use crate::params::ModelParams;
use crate::steady::{steady_model, steady_state, TruncationPolicy};

#[derive(Debug, Clone, Serialize)]
pub struct EliminationReport {
    pub m_a: usize,
    pub m_b: usize,
    /// Gain rate handed to the single-mode model.
    pub epsilon: f64,
    pub reduced_populations: Vec<f64>,
    pub effective_populations: Vec<f64>,
    pub reduced_nbar: f64,
    pub effective_nbar: f64,
    pub total_variation: f64,
    /// `1/2 ||rho_red - rho_eff||_1`.
    pub trace_distance: f64,
    pub mode_b_population: f64,
}

/// Steady state of the two-mode model, traced over `b`, against the
/// single-mode model with gain `epsilon`. Both share the truncation `M_a`.
pub fn compare_elimination(params: &ModelParams, epsilon: f64, m_a: usize, m_b: usize) -> Result<EliminationReport> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let (sa, sb) = (FockSpace::new(m_a)?, FockSpace::new(m_b)?);
    let l = liouvillian_two_mode(params, (sa, sb), TWO_MODE_CAP)?;
    let rho = steady_state(&l)?;
    let reduced = partial_trace_b(&rho, m_a, m_b)?;
    let mode_b_population: f64 = (0..m_a * m_b)
        .map(|k| (k % m_b) as f64 * rho.get(k, k).re)
        .sum();

    let mut single = params.clone();
    single.epsilon = epsilon;
    single.f = 0.0;
    let eff = steady_model(&single, &TruncationPolicy::fixed(m_a))?.rho;

    let (pr, nr, _) = fock_stats(&reduced);
    let (pe, ne, _) = fock_stats(&eff);
    let diff = reduced.matrix() - eff.matrix();
    let trace_distance = 0.5 * diff.symmetric_eigenvalues().iter().map(|v| v.abs()).sum::<f64>();
    Ok(EliminationReport {
        m_a,
        m_b,
        epsilon,
        total_variation: total_variation(&pr, &pe),
        reduced_populations: pr,
        effective_populations: pe,
        reduced_nbar: nr,
        effective_nbar: ne,
        trace_distance,
        mode_b_population,
    })
}

/// Drive strength `E` giving gain `epsilon` under the convention `epsilon = factor E^2 / gamma_b`.
pub fn e_tilde_for(epsilon: f64, gamma_b: f64, factor: f64) -> f64 {
    (epsilon * gamma_b / factor).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_modes_decay_to_vacuum() {
        let p = ModelParams::fock(2, 20.0).unwrap().with_two_mode(0.0, 5.0, 1.0);
        let r = compare_elimination(&p, 0.0, 6, 3).unwrap();
        assert!((r.reduced_populations[0] - 1.0).abs() < 1e-10);
        assert!(r.total_variation < 1e-10 && r.trace_distance < 1e-10);
        assert!(r.mode_b_population.abs() < 1e-10);
    }

    #[test]
    fn strong_damping_matches_eliminated_gain() {
        // small problem; the eliminated rate is 4 E^2 / gamma_b
        let n0 = 2;
        let gb = 40.0;
        let base = ModelParams::fock(n0, 10.0).unwrap();
        let e = e_tilde_for(10.0, gb, 4.0);
        let alpha_b = 1.0;
        let p = base.with_two_mode(e, gb, alpha_b);
        let r = compare_elimination(&p, 10.0, 9, 3).unwrap();
        assert!(r.total_variation < 0.05, "tv {}", r.total_variation);
        assert!(r.mode_b_population < 0.05);
    }

    #[test]
    fn cap_is_enforced() {
        let p = ModelParams::fock(2, 20.0).unwrap().with_two_mode(1.0, 50.0, 1.0);
        assert!(matches!(compare_elimination(&p, 20.0, 40, 20), Err(Error::DimensionCap { .. })));
    }
}
