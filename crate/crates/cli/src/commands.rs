use anyhow::anyhow;
use log::warn;
use rayon::prelude::*;
use serde_json::{json, Value};

use focksync::observables::{fock_stats, max_phase_density, phase_distribution, wigner, WignerGrid};
use focksync::phasedyn::{
    adler_predictions_with, adler_sde_oracle, arnold_tongue_sweep, calibrated_adler, kramers_slope, linear_fit,
    max_sde_step, phase_cumulants, printed_kramers_slope, suppressed_window, PhaseCumulants, SdeOptions,
};
use focksync::steady::steady_model;
use focksync::twomode::{compare_elimination, e_tilde_for};
use focksync::{Error, ModelParams};

use crate::config::RunConfig;
use crate::output::{Cell, Table};

/// Failure class, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(e) => write!(f, "usage error: {e:#}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e:#}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Domain(_) | Error::DimensionCap { .. } => Failure::Usage(e.into()),
            _ => Failure::Numerical(e.into()),
        }
    }
}

pub type CmdResult = Result<Outcome, Failure>;

/// Tables to write, a summary for the metadata file, and an optional
/// global failure detected after the per-point data was produced.
#[derive(Debug)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub failure: Option<String>,
}

const PARAMS: [&str; 6] = ["gamma_a", "epsilon", "alpha_a", "delta", "f", "theta"];

fn header(extra: &[&str]) -> Vec<String> {
    PARAMS.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn params_row(p: &ModelParams) -> Vec<Cell> {
    vec![
        p.gamma_a.into(),
        p.epsilon.into(),
        p.alpha_a.into(),
        p.delta.into(),
        p.f.into(),
        p.theta.into(),
    ]
}

fn row(p: &ModelParams, rest: Vec<Cell>) -> Vec<Cell> {
    let mut r = params_row(p);
    r.extend(rest);
    r
}

pub fn steady(cfg: &RunConfig) -> CmdResult {
    let p = &cfg.model;
    let sol = steady_model(p, &cfg.policy())?;
    let (pn, nbar, var) = fock_stats(&sol.rho);
    let mpd = max_phase_density(&sol.rho);
    let mut pt = Table::new("steady_pn", &header(&["n", "p_n"]));
    for (n, v) in pn.iter().enumerate() {
        pt.push(row(p, vec![n.into(), (*v).into()]));
    }
    let mut st = Table::new(
        "steady",
        &header(&["dim", "nbar", "var", "var_over_nbar", "max_phase_density", "drive_photons", "residual", "top_population", "min_eigenvalue"]),
    );
    st.push(row(
        p,
        vec![
            sol.space.dim().into(),
            nbar.into(),
            var.into(),
            (var / nbar).into(),
            mpd.into(),
            p.drive_photons().into(),
            sol.residual.into(),
            sol.top_population.into(),
            sol.rho.min_eigenvalue().into(),
        ],
    ));
    let mut tables = vec![st, pt];
    let mut summary = json!({"nbar": nbar, "var": var, "max_phase_density": mpd, "dim": sol.space.dim()});
    if cfg.wigner_points > 0 {
        let (t, s) = wigner_table(cfg, &sol.rho, "steady_wigner")?;
        tables.push(t);
        summary["wigner"] = s;
    }
    Ok(Outcome {
        tables,
        summary,
        failure: None,
    })
}

fn wigner_table(cfg: &RunConfig, rho: &focksync::DensityMatrix, name: &str) -> Result<(Table, Value), Failure> {
    let grid = WignerGrid::square(cfg.wigner_radius, cfg.wigner_points)?;
    let field = wigner(rho, &grid);
    let mut t = Table::new(name, &header(&["re", "im", "w"]));
    for (i, &x) in field.grid.re.iter().enumerate() {
        for (j, &y) in field.grid.im.iter().enumerate() {
            t.push(row(&cfg.model, vec![x.into(), y.into(), field.values[i][j].into()]));
        }
    }
    let s = json!({"min": field.min(), "max": field.max(), "integral": field.integral()});
    Ok((t, s))
}

pub fn wigner_cmd(cfg: &RunConfig) -> CmdResult {
    if cfg.wigner_points < 2 {
        return Err(Failure::Usage(anyhow!("wigner_points must be at least 2")));
    }
    let sol = steady_model(&cfg.model, &cfg.policy())?;
    let (t, s) = wigner_table(cfg, &sol.rho, "wigner")?;
    Ok(Outcome {
        tables: vec![t],
        summary: s,
        failure: None,
    })
}

pub fn phase_dist(cfg: &RunConfig) -> CmdResult {
    let sol = steady_model(&cfg.model, &cfg.policy())?;
    let pd = phase_distribution(&sol.rho, cfg.phase_points)?;
    let mut t = Table::new("phase_dist", &header(&["phi", "p"]));
    for (phi, v) in pd.grid.iter().zip(&pd.values) {
        t.push(row(&cfg.model, vec![(*phi).into(), (*v).into()]));
    }
    Ok(Outcome {
        tables: vec![t],
        summary: json!({"max_phase_density": max_phase_density(&sol.rho)}),
        failure: None,
    })
}

fn cumulant_cells(r: &Result<PhaseCumulants, String>) -> (f64, f64, String) {
    match r {
        Ok(c) => (c.drift, c.diffusion, c.quality.label()),
        Err(_) => (f64::NAN, f64::NAN, "failed".to_string()),
    }
}

pub fn tongue(cfg: &RunConfig) -> CmdResult {
    let sweep = arnold_tongue_sweep(&cfg.model, &cfg.delta_grid, &cfg.f_grid, cfg.dq, &cfg.policy())?;
    let mut t = Table::new("tongue", &["delta", "f", "drift", "diffusion", "quality"]);
    let mut failed = 0;
    for pt in &sweep.points {
        if let Err(e) = &pt.result {
            warn!("tongue point (delta={}, f={}) failed: {e}", pt.delta, pt.f);
            failed += 1;
        }
        let (drift, diffusion, q) = cumulant_cells(&pt.result);
        t.push(vec![pt.delta.into(), pt.f.into(), drift.into(), diffusion.into(), q.into()]);
    }
    let total = sweep.points.len();
    Ok(Outcome {
        tables: vec![t],
        summary: json!({"points": total, "failed": failed}),
        failure: (failed == total).then(|| "every grid point failed".to_string()),
    })
}

pub fn kramers(cfg: &RunConfig) -> CmdResult {
    let policy = cfg.policy();
    let base = &cfg.model;
    let free = phase_cumulants(&base.clone().with_drive(base.delta, 0.0, base.theta), cfg.dq, &policy)?;
    let results: Vec<(f64, Result<PhaseCumulants, String>)> = cfg
        .f_grid
        .par_iter()
        .map(|&f| {
            let p = base.clone().with_drive(base.delta, f, base.theta);
            (f, phase_cumulants(&p, cfg.dq, &policy).map_err(|e| e.to_string()))
        })
        .collect();
    let ok: Vec<(f64, PhaseCumulants)> = results
        .iter()
        .filter_map(|(f, r)| r.as_ref().ok().map(|c| (*f, *c)))
        .collect();
    let window = suppressed_window(&ok, free.diffusion, cfg.window_fraction);
    let in_window: Vec<f64> = window.iter().map(|&i| ok[i].0).collect();
    let mut t = Table::new("kramers", &header(&["diffusion", "ln_diffusion", "quality", "in_window"]));
    for (f, r) in &results {
        let p = base.clone().with_drive(base.delta, *f, base.theta);
        let (_, d, q) = cumulant_cells(r);
        t.push(row(&p, vec![d.into(), d.ln().into(), q.into(), in_window.contains(f).into()]));
    }
    let n0 = base.target_level();
    let printed = printed_kramers_slope(n0, base.gamma_a, base.epsilon);
    let consistent = kramers_slope(free.nbar, free.diffusion);
    let xs: Vec<f64> = window.iter().map(|&i| ok[i].0).collect();
    let ys: Vec<f64> = window.iter().map(|&i| ok[i].1.diffusion.ln()).collect();
    let fit = linear_fit(&xs, &ys);
    let mut ft = Table::new(
        "kramers_fit",
        &header(&["n0", "nbar", "d_free", "slope", "intercept", "r2", "points", "printed_slope", "self_consistent_slope", "status"]),
    );
    let (slope, intercept, r2, status) = match &fit {
        Ok(v) => (v.slope, v.intercept, v.r2, "ok".to_string()),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, "insufficient_window".to_string()),
    };
    let p0 = base.clone().with_drive(base.delta, 0.0, base.theta);
    ft.push(row(
        &p0,
        vec![
            n0.into(),
            free.nbar.into(),
            free.diffusion.into(),
            slope.into(),
            intercept.into(),
            r2.into(),
            xs.len().into(),
            (-printed).into(),
            (-consistent).into(),
            status.clone().into(),
        ],
    ));
    Ok(Outcome {
        tables: vec![t, ft],
        summary: json!({"slope": slope, "r2": r2, "printed_slope": -printed, "self_consistent_slope": -consistent, "window": xs}),
        failure: fit.is_err().then(|| format!("fewer than two resolvable points below {} of the free diffusion", cfg.window_fraction)),
    })
}

pub fn adler(cfg: &RunConfig) -> CmdResult {
    let policy = cfg.policy();
    let p = &cfg.model;
    let quantum = phase_cumulants(p, cfg.dq, &policy)?;
    let (ap, free) = calibrated_adler(p, cfg.dq, &policy)?;
    let pred = adler_predictions_with(ap);
    let opts = SdeOptions {
        dt: cfg.sde_dt.unwrap_or_else(|| max_sde_step(&ap)),
        t_total: cfg.sde_t,
        n_traj: cfg.sde_traj,
        seed: cfg.seed,
    };
    let sde = adler_sde_oracle(&ap, &opts)?;
    let mut t = Table::new(
        "adler",
        &header(&["source", "drift", "diffusion", "drift_err", "diffusion_err", "slips", "quality"]),
    );
    let slips = sde.n_plus + sde.n_minus;
    let sde_quality = if sde.upper_bound { "upper_bound" } else { "ok" };
    t.push(row(
        p,
        vec![
            "quantum".into(),
            quantum.drift.into(),
            quantum.diffusion.into(),
            quantum.drift_error.into(),
            quantum.diffusion_error.into(),
            0usize.into(),
            quantum.quality.label().into(),
        ],
    ));
    t.push(row(
        p,
        vec![
            "sde_slips".into(),
            sde.drift.into(),
            sde.diffusion.into(),
            sde.drift_err.into(),
            sde.diffusion_err.into(),
            slips.into(),
            sde_quality.into(),
        ],
    ));
    t.push(row(
        p,
        vec![
            "sde_direct".into(),
            sde.direct_drift.into(),
            sde.direct_diffusion.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            slips.into(),
            "ok".into(),
        ],
    ));
    t.push(row(
        p,
        vec![
            "kramers".into(),
            pred.kramers.drift().into(),
            pred.kramers.diffusion().into(),
            0.0.into(),
            0.0.into(),
            0usize.into(),
            (if pred.locked { "locked" } else { "unlocked" }).into(),
        ],
    ));
    Ok(Outcome {
        tables: vec![t],
        summary: json!({"adler": ap, "free": free, "dt": opts.dt, "steps_per_traj": (opts.t_total / opts.dt).round()}),
        failure: None,
    })
}

pub fn coherent(cfg: &RunConfig) -> CmdResult {
    let policy = cfg.policy();
    let mut base = cfg.model.clone();
    base.epsilon = 0.0;
    let pts: Vec<(f64, f64)> = cfg
        .delta_grid
        .iter()
        .flat_map(|&d| cfg.f_grid.iter().map(move |&f| (d, f)))
        .collect();
    let results: Vec<Result<(f64, f64), String>> = pts
        .par_iter()
        .map(|&(d, f)| {
            let p = base.clone().with_drive(d, f, base.theta);
            steady_model(&p, &policy)
                .map(|s| (max_phase_density(&s.rho), fock_stats(&s.rho).1))
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut t = Table::new(
        "coherent",
        &header(&["alpha_abs", "max_p0", "small_alpha_prediction", "large_alpha_prediction", "nbar", "quality"]),
    );
    let mut failed = 0;
    for (&(d, f), r) in pts.iter().zip(&results) {
        let p = base.clone().with_drive(d, f, base.theta);
        let a = p.drive_photons().sqrt();
        let (m, n, q) = match r {
            Ok((m, n)) => (*m, *n, "ok"),
            Err(e) => {
                warn!("coherent point (delta={d}, f={f}) failed: {e}");
                failed += 1;
                (f64::NAN, f64::NAN, "failed")
            }
        };
        let large = (8.0 * std::f64::consts::PI).sqrt() * a;
        t.push(row(&p, vec![a.into(), m.into(), (1.0 + 2.0 * a).into(), large.into(), n.into(), q.into()]));
    }
    Ok(Outcome {
        tables: vec![t],
        summary: json!({"points": pts.len(), "failed": failed}),
        failure: (failed == pts.len()).then(|| "every grid point failed".to_string()),
    })
}

pub fn twomode(cfg: &RunConfig) -> CmdResult {
    let mut p = cfg.model.clone();
    p.f = 0.0;
    let factor = cfg.elimination_factor;
    let e = if p.e_tilde > 0.0 {
        p.e_tilde
    } else {
        e_tilde_for(p.epsilon, p.gamma_b, factor)
    };
    let eps = factor * e * e / p.gamma_b;
    let two = p.clone().with_two_mode(e, p.gamma_b, p.alpha_b);
    let r = compare_elimination(&two, eps, cfg.m_a, cfg.m_b)?;
    let mut t = Table::new(
        "twomode",
        &header(&[
            "e_tilde",
            "gamma_b",
            "alpha_b",
            "m_a",
            "m_b",
            "elimination_factor",
            "epsilon_eff",
            "total_variation",
            "trace_distance",
            "reduced_nbar",
            "effective_nbar",
            "mode_b_population",
        ]),
    );
    t.push(row(
        &p,
        vec![
            e.into(),
            p.gamma_b.into(),
            p.alpha_b.into(),
            cfg.m_a.into(),
            cfg.m_b.into(),
            factor.into(),
            eps.into(),
            r.total_variation.into(),
            r.trace_distance.into(),
            r.reduced_nbar.into(),
            r.effective_nbar.into(),
            r.mode_b_population.into(),
        ],
    ));
    let mut pt = Table::new("twomode_pn", &["n", "reduced", "effective"]);
    for (n, (a, b)) in r.reduced_populations.iter().zip(&r.effective_populations).enumerate() {
        pt.push(vec![n.into(), (*a).into(), (*b).into()]);
    }
    Ok(Outcome {
        tables: vec![t, pt],
        summary: json!({"total_variation": r.total_variation, "trace_distance": r.trace_distance, "epsilon_eff": eps}),
        failure: None,
    })
}
