//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured values and then asserts at the stated tolerance.

use std::f64::consts::PI;
use std::io::Write;

use focksync::fock::{self, FockSpace, C64};
use focksync::fockstab::{km_coefficients, predicted_moments, rate_equation_residual};
use focksync::liouville::{liouvillian_single, SuperBuilder, SuperOperator};
use focksync::observables::{fock_stats, max_phase_density, wigner, wigner_point, WignerGrid};
use focksync::phasedyn::{
    adler_predictions_with, adler_sde_oracle, analytic_free_diffusion, arnold_tongue_sweep, calibrated_adler,
    kramers_slope, linear_fit, max_sde_step, phase_cumulants, printed_kramers_slope, suppressed_window,
    PhaseCumulants, SdeOptions,
};
use focksync::specfun::{brent, kummer_1f1_neg, laguerre_first_zero, mehler_heine_f};
use focksync::steady::{lambda0_curve, steady_model, TruncationPolicy};
use focksync::twomode::{compare_elimination, e_tilde_for};
use focksync::ModelParams;

fn report(id: &str, pass: bool, detail: &str) {
    // written past the harness capture so the line is always visible
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    let _ = out.flush();
}

fn policy() -> TruncationPolicy {
    TruncationPolicy::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn test_matrix() -> Vec<(&'static str, ModelParams)> {
    vec![
        ("fock n0=5 eps=20", ModelParams::fock(5, 20.0).unwrap()),
        ("fock n0=10 eps=20", ModelParams::fock(10, 20.0).unwrap()),
        ("fock n0=20 eps=100", ModelParams::fock(20, 100.0).unwrap()),
        ("fock n0=10 driven", ModelParams::fock(10, 20.0).unwrap().with_drive(0.1, 1.0, 0.0)),
        ("fock n0=5 detuned", ModelParams::fock(5, 20.0).unwrap().with_drive(-0.2, 0.6, 0.4)),
        ("coherent", ModelParams::coherent(0.3, 1.0, 0.0)),
    ]
}

#[test]
fn c01_fock_stabilization_moments() {
    let cases = [(5usize, 20.0, 0.25), (10, 20.0, 0.15), (20, 100.0, 0.15)];
    let mut pass = true;
    let mut parts = Vec::new();
    for &(n0, eps, tol) in &cases {
        let p = ModelParams::fock(n0, eps).unwrap();
        let sol = steady_model(&p, &policy()).unwrap();
        let (_, nbar, var) = fock_stats(&sol.rho);
        let pred = predicted_moments(n0, 1.0, eps).unwrap();
        let (en, ev) = (rel(nbar, pred.nbar_pred), rel(var, pred.var_pred));
        let ok = en <= tol && ev <= tol && var / nbar < 1.0;
        pass &= ok;
        parts.push(format!(
            "(n0={n0},eps={eps}) nbar {nbar:.4} vs {:.4} ({:.1}%), var {var:.4} vs {:.4} ({:.1}%), var/nbar {:.3}, tol {:.0}%",
            pred.nbar_pred,
            100.0 * en,
            pred.var_pred,
            100.0 * ev,
            var / nbar,
            100.0 * tol
        ));
    }
    report("C1 Fock stabilization moments", pass, &parts.join("; "));
    assert!(pass);
}

fn refine_minimum(rho: &focksync::DensityMatrix, start: C64, h0: f64) -> (C64, f64) {
    let mut best = start;
    let mut val = wigner_point(rho, best);
    let mut h = h0;
    while h > 1e-6 {
        let mut moved = false;
        for d in [C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(0.0, h), C64::new(0.0, -h)] {
            let v = wigner_point(rho, best + d);
            if v < val {
                val = v;
                best += d;
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (best, val)
}

#[test]
fn c02_wigner_negativity_under_drive() {
    let p = ModelParams::fock(10, 20.0).unwrap().with_drive(0.0, 2.0, 0.0);
    let sol = steady_model(&p, &policy()).unwrap();
    let grid = WignerGrid::square(6.0, 121).unwrap();
    let field = wigner(&sol.rho, &grid);
    let (mut bi, mut bj) = (0, 0);
    for i in 0..grid.re.len() {
        for j in 0..grid.im.len() {
            if field.values[i][j] < field.values[bi][bj] {
                bi = i;
                bj = j;
            }
        }
    }
    let (at, w_min) = refine_minimum(&sol.rho, C64::new(grid.re[bi], grid.im[bj]), 0.1);
    let free = steady_model(&ModelParams::fock(10, 20.0).unwrap(), &policy()).unwrap();
    let grid_free = wigner(&free.rho, &WignerGrid::square(6.0, 61).unwrap());
    let pass = w_min < -0.005;
    report(
        "C2 Wigner negativity under drive",
        pass,
        &format!(
            "min W = {w_min:.3e} at alpha = {:.3}{:+.3}i (need < -5e-3); undriven min {:.3e}; M = {}, integral {:.6}",
            at.re,
            at.im,
            grid_free.min(),
            sol.space.dim(),
            field.integral()
        ),
    );
    assert!(pass);
}

#[test]
fn c03_counting_field_sanity() {
    let qs = [-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2];
    let mut pass = true;
    let mut worst_zero: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for (name, p) in test_matrix() {
        let track = lambda0_curve(&p, &qs, &policy()).unwrap();
        assert!(!track.aborted, "{name}: curve aborted");
        let zero = track.value_at(0.0).unwrap().norm() / track.norm;
        worst_zero = worst_zero.max(zero);
        pass &= zero <= 1e-10;
        for &q in &[0.05, 0.1, 0.2] {
            let d = (track.value_at(-q).unwrap() - track.value_at(q).unwrap().conj()).norm();
            worst_sym = worst_sym.max(d);
            pass &= d <= 1e-10;
        }
    }
    report(
        "C3 counting-field sanity",
        pass,
        &format!("max |lambda0(0)|/||L|| = {worst_zero:.2e} (<= 1e-10), max |lambda0(-q) - conj lambda0(q)| = {worst_sym:.2e} (<= 1e-10)"),
    );
    assert!(pass);
}

#[test]
fn c04_free_diffusion_schawlow_townes() {
    let mut pass = true;
    let mut parts = Vec::new();
    for &n0 in &[5usize, 10, 20] {
        let p = ModelParams::fock(n0, 20.0).unwrap();
        let c = phase_cumulants(&p, 0.02, &policy()).unwrap();
        let formula = analytic_free_diffusion(&p, c.nbar).unwrap();
        let e = rel(c.diffusion, formula);
        pass &= e <= 0.05;
        parts.push(format!(
            "n0={n0}: D = {:.5} (+-{:.1e}), formula {formula:.5} at nbar {:.4}, ratio {:.3}",
            c.diffusion,
            c.diffusion_error,
            c.nbar,
            c.diffusion / formula
        ));
    }
    report("C4 free diffusion vs [g + eps 1F1(-nbar,2,a)]/(8 nbar), 5%", pass, &parts.join("; "));
    assert!(pass);
}

struct Tongue {
    deltas: Vec<f64>,
    fs: Vec<f64>,
    d: Vec<Vec<Option<PhaseCumulants>>>,
}

fn tongue_grid() -> Tongue {
    let base = ModelParams::fock(10, 20.0).unwrap();
    let free = steady_model(&base, &policy()).unwrap();
    let nbar = fock_stats(&free.rho).1;
    let dmax = 0.1 * nbar.sqrt();
    let deltas: Vec<f64> = (0..15).map(|i| -dmax + 2.0 * dmax * i as f64 / 14.0).collect();
    let fs: Vec<f64> = (0..15).map(|i| 3.0 * i as f64 / 14.0).collect();
    let sweep = arnold_tongue_sweep(&base, &deltas, &fs, 0.02, &policy()).unwrap();
    let d = (0..deltas.len())
        .map(|i| (0..fs.len()).map(|j| sweep.get(i, j).result.clone().ok()).collect())
        .collect();
    Tongue { deltas, fs, d }
}

#[test]
fn c05_arnold_tongue() {
    let t = tongue_grid();
    let nd = t.deltas.len();
    let nf = t.fs.len();
    let failed = t.d.iter().flatten().filter(|c| c.is_none()).count();
    let diff = |i: usize, j: usize| t.d[i][j].map(|c| c.diffusion).unwrap_or(f64::NAN);
    let centre = nd / 2;
    let d_free = diff(centre, 0);

    // (a) just above f = 0 the diffusion grows somewhere off resonance
    let mut rise: f64 = 0.0;
    let mut rise_at = (0.0, 0.0);
    for i in 0..nd {
        for j in 1..=2 {
            let r = diff(i, j) / diff(i, 0);
            if r > rise {
                rise = r;
                rise_at = (t.deltas[i], t.fs[j]);
            }
        }
    }
    let a = rise > 1.0;

    // (b) strongest resolvable suppression at the centre row
    let mut supp: f64 = 0.0;
    let mut supp_f = 0.0;
    for j in 0..nf {
        if let Some(c) = t.d[centre][j] {
            if c.quality.is_ok() && d_free / c.diffusion > supp {
                supp = d_free / c.diffusion;
                supp_f = t.fs[j];
            }
        }
    }
    let b = supp >= 1e2;

    // (c) number of detunings with D below a tenth of their free value
    let widths: Vec<usize> = (0..nf)
        .map(|j| (0..nd).filter(|&i| diff(i, j) < 0.1 * diff(i, 0)).count())
        .collect();
    let monotone = widths.windows(2).all(|w| w[1] >= w[0]);
    let first = widths.iter().position(|&w| w > 0);
    let c = monotone && first.is_some_and(|k| widths[nf - 1] > widths[k]);

    let pass = a && b && c && failed == 0;
    report(
        "C5 Arnold tongue",
        pass,
        &format!(
            "grid 15x15, |delta| <= {:.4}, f in [0, 3], failed points {failed}; (a) max D(f>0)/D(f=0) = {rise:.3} at (delta={:.3}, f={:.3}) [{}]; (b) centre suppression {supp:.2e} at f={supp_f:.3} [{}]; (c) suppressed widths {:?} [{}]",
            t.deltas[nd - 1],
            rise_at.0,
            rise_at.1,
            if a { "ok" } else { "no" },
            if b { "ok" } else { "no" },
            widths,
            if c { "ok" } else { "no" }
        ),
    );
    assert!(pass);
}

struct KramersFit {
    nbar: f64,
    d_free: f64,
    slope: f64,
    r2: f64,
    points: usize,
}

fn kramers_fit(n0: usize) -> KramersFit {
    let base = ModelParams::fock(n0, 20.0).unwrap();
    let free = phase_cumulants(&base, 0.02, &policy()).unwrap();
    let fs: Vec<f64> = (1..=24).map(|i| 3.0 * i as f64 / 24.0).collect();
    let pts: Vec<(f64, PhaseCumulants)> = fs
        .iter()
        .filter_map(|&f| {
            phase_cumulants(&base.clone().with_drive(0.0, f, 0.0), 0.02, &policy())
                .ok()
                .map(|c| (f, c))
        })
        .collect();
    let window = suppressed_window(&pts, free.diffusion, 0.1);
    let x: Vec<f64> = window.iter().map(|&i| pts[i].0).collect();
    let y: Vec<f64> = window.iter().map(|&i| pts[i].1.diffusion.ln()).collect();
    let fit = linear_fit(&x, &y).expect("at least two points in the Kramers window");
    KramersFit {
        nbar: free.nbar,
        d_free: free.diffusion,
        slope: fit.slope,
        r2: fit.r2,
        points: x.len(),
    }
}

#[test]
fn c06_kramers_scaling() {
    let fits: Vec<(usize, KramersFit)> = [8usize, 10, 14].iter().map(|&n| (n, kramers_fit(n))).collect();
    let k10 = &fits[1].1;
    let printed = printed_kramers_slope(10, 1.0, 20.0);
    let consistent = kramers_slope(k10.nbar, k10.d_free);
    let linear = k10.r2 >= 0.98;
    let negative = k10.slope < 0.0;
    let factor = (-k10.slope / printed).max(printed / -k10.slope);
    let within2 = negative && factor <= 2.0;
    let within10 = rel(-k10.slope, consistent) <= 0.10;
    let scaled: Vec<f64> = fits.iter().map(|(_, k)| -k.slope / k.nbar.sqrt()).collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi / lo - 1.0;
    let scales = spread <= 0.15;
    let pass = linear && within2 && within10 && scales;
    let per: Vec<String> = fits
        .iter()
        .map(|(n, k)| format!("n0={n}: slope {:.3}, R2 {:.4}, {} pts, nbar {:.3}, D {:.4}", k.slope, k.r2, k.points, k.nbar, k.d_free))
        .collect();
    report(
        "C6 Kramers scaling",
        pass,
        &format!(
            "{}; n0=10 vs 8 sqrt(n0/g e) = {printed:.3}: factor {factor:.2} [{}], vs 2/(sqrt(nbar) D) = {consistent:.3}: {:.1}% [{}]; R2 [{}]; slope/sqrt(nbar) {:?} spread {:.1}% [{}]",
            per.join("; "),
            if within2 { "ok" } else { "no" },
            100.0 * rel(-k10.slope, consistent),
            if within10 { "ok" } else { "no" },
            if linear { "ok" } else { "no" },
            scaled.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>(),
            100.0 * spread,
            if scales { "ok" } else { "no" }
        ),
    );
    assert!(pass);
}

#[test]
fn c07_quantum_vs_stochastic_oracle() {
    let base = ModelParams::fock(10, 20.0).unwrap();
    let candidates = [(0.0, 1.5), (0.0, 1.75), (0.1, 1.75), (0.1, 2.0), (0.2, 2.0), (0.15, 1.5), (0.2, 1.75)];
    let mut chosen = Vec::new();
    for &(delta, f) in &candidates {
        let p = base.clone().with_drive(delta, f, 0.0);
        let c = phase_cumulants(&p, 0.02, &policy()).unwrap();
        if (1e-4..=1e-2).contains(&c.diffusion) && c.quality.is_ok() {
            chosen.push((p, c));
        }
        if chosen.len() == 3 {
            break;
        }
    }
    assert_eq!(chosen.len(), 3, "fewer than three candidate points with 1e-4 <= D <= 1e-2");
    let (ap0, _) = calibrated_adler(&base, 0.02, &policy()).unwrap();
    let n_traj = 32;
    let max_steps: f64 = 3e9;
    let mut pass = true;
    let mut total_slips = 0;
    let mut parts = Vec::new();
    for (p, q) in &chosen {
        let ap = focksync::phasedyn::AdlerParams { delta: p.delta, f: p.f, ..ap0 };
        let pred = adler_predictions_with(ap);
        let rate = pred.kramers.gamma_plus + pred.kramers.gamma_minus;
        let dt = max_sde_step(&ap);
        // aim at 4000 slips per point, 1.2e4 in total
        let t_needed = 4000.0 / (rate * n_traj as f64);
        let t_total = t_needed.min(max_steps * dt / n_traj as f64);
        let r = adler_sde_oracle(
            &ap,
            &SdeOptions {
                dt,
                t_total,
                n_traj,
                seed: 2024,
            },
        )
        .unwrap();
        total_slips += r.n_plus + r.n_minus;
        let ok_drift = (r.drift - q.drift).abs() <= (0.2 * q.drift.abs()).max(3.0 * r.drift_err);
        let ok_diff = (r.diffusion - q.diffusion).abs() <= (0.2 * q.diffusion).max(3.0 * r.diffusion_err);
        pass &= ok_drift && ok_diff;
        parts.push(format!(
            "(delta={}, f={}): quantum drift {:.3e} D {:.3e}; SDE drift {:.3e}+-{:.1e} D {:.3e}+-{:.1e} from {} slips",
            p.delta,
            p.f,
            q.drift,
            q.diffusion,
            r.drift,
            r.drift_err,
            r.diffusion,
            r.diffusion_err,
            r.n_plus + r.n_minus
        ));
    }
    pass &= total_slips >= 10_000;
    report(
        "C7 quantum vs stochastic oracle",
        pass,
        &format!(
            "Adler model calibrated at f=0 (nbar {:.4}, D {:.4}); {}; aggregate slips {total_slips}",
            ap0.nbar,
            ap0.d,
            parts.join("; ")
        ),
    );
    assert!(pass);
}

#[test]
fn c08_coherent_state_control() {
    let max_p0 = |delta: f64, alpha: f64| {
        let f = alpha * (delta * delta + 0.25).sqrt();
        let p = ModelParams::coherent(delta, f, 0.0);
        let sol = steady_model(&p, &policy()).unwrap();
        max_phase_density(&sol.rho)
    };
    let mut pass = true;
    let mut worst_small: f64 = 0.0;
    let mut worst_large: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    for &a in &[0.02, 0.05, 0.1, 4.0, 5.0, 6.0] {
        let vals: Vec<f64> = [0.0, 0.5, 1.5].iter().map(|&d| max_p0(d, a)).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst_spread = worst_spread.max(hi / lo - 1.0);
        if a <= 0.1 {
            worst_small = worst_small.max(rel(vals[0], 1.0 + 2.0 * a));
        } else {
            worst_large = worst_large.max(rel(vals[0], (8.0 * PI).sqrt() * a));
        }
    }
    pass &= worst_small <= 0.02 && worst_large <= 0.05 && worst_spread <= 0.01;
    report(
        "C8 coherent-state control",
        pass,
        &format!(
            "max rel. error vs 1+2|a| (|a|<=0.1) {:.2e} (<= 2%), vs sqrt(8 pi)|a| (|a|>=4) {:.2e} (<= 5%), spread at fixed |a| over delta {:.2e} (<= 1%)",
            worst_small, worst_large, worst_spread
        ),
    );
    assert!(pass);
}

#[test]
fn c09_adiabatic_elimination() {
    let gb = 50.0;
    let eps = 20.0;
    let base = ModelParams::fock(2, eps).unwrap();
    let stated = e_tilde_for(eps, gb, 2.0);
    let r = compare_elimination(&base.clone().with_two_mode(stated, gb, 1.0), eps, 12, 5).unwrap();
    let alt = compare_elimination(&base.clone().with_two_mode(e_tilde_for(eps, gb, 4.0), gb, 1.0), eps, 12, 5).unwrap();
    let pass = r.total_variation <= 0.05;
    report(
        "C9 adiabatic elimination",
        pass,
        &format!(
            "eps = 2E^2/gamma_b: TV {:.4}, trace distance {:.4} (need TV <= 0.05), nbar {:.4} vs {:.4}; with eps = 4E^2/gamma_b: TV {:.4}",
            r.total_variation, r.trace_distance, r.reduced_nbar, r.effective_nbar, alt.total_variation
        ),
    );
    assert!(pass);
}

fn reference_generator(p: &ModelParams, space: FockSpace) -> SuperOperator {
    let m = space.dim();
    let mut a = nalgebra::DMatrix::<C64>::zeros(m, m);
    let mut g = nalgebra::DMatrix::<C64>::zeros(m, m);
    let mut n = nalgebra::DMatrix::<C64>::zeros(m, m);
    for k in 0..m {
        n[(k, k)] = C64::new(k as f64, 0.0);
        if k + 1 < m {
            a[(k, k + 1)] = C64::new(((k + 1) as f64).sqrt(), 0.0);
        }
    }
    let f = nalgebra::DMatrix::<C64>::from_fn(m, m, |r, c| {
        if r == c {
            C64::new(kummer_1f1_neg(r as f64, p.alpha_a).unwrap(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    g.copy_from(&(a.transpose() * &f));
    let mut b = SuperBuilder::new(m, 0.0);
    for (l, rate) in [(&a, p.gamma_a), (&g, p.epsilon)] {
        let r = C64::new(rate, 0.0);
        let ld = l.adjoint();
        b.sandwich(l, &ld, r).unwrap();
        b.left(&(&ld * l), -0.5 * r).unwrap();
        b.right(&(&ld * l), -0.5 * r).unwrap();
    }
    let e = C64::from_polar(1.0, p.theta);
    let i_f = C64::new(0.0, p.f);
    let drive = a.transpose() * (i_f * e.conj()) + &a * (-i_f * e);
    let h = &n * C64::new(p.delta, 0.0) + drive;
    b.left(&h, C64::new(0.0, -1.0)).unwrap();
    b.right(&h, C64::new(0.0, 1.0)).unwrap();
    b.finish()
}

#[test]
fn c10_exactness_checks() {
    let mut worst_rate: f64 = 0.0;
    for &(n0, eps) in &[(3usize, 10.0), (5, 20.0), (10, 20.0), (20, 100.0), (10, 100.0)] {
        let p = ModelParams::fock(n0, eps).unwrap();
        let sol = steady_model(&p, &policy()).unwrap();
        let (pn, _, _) = fock_stats(&sol.rho);
        worst_rate = worst_rate.max(rate_equation_residual(&pn, &p).unwrap());
    }
    let rate_ok = worst_rate <= 1e-9;

    let s = FockSpace::new(16).unwrap();
    let mut ops_ok = true;
    let a = fock::destroy(s, 0.0).unwrap();
    for k in 1..16 {
        ops_ok &= a.get(k - 1, k) == C64::new((k as f64).sqrt(), 0.0);
    }
    let alpha = laguerre_first_zero(6).unwrap();
    let g = fock::gain_jump(s, alpha, 0.0).unwrap();
    let g_ref = fock::create(s, 0.0).unwrap().compose(&fock::gain_profile(s, alpha, 0.0).unwrap()).unwrap();
    ops_ok &= g.matrix() == g_ref.matrix();
    ops_ok &= fock::number(s, 0.0).unwrap().matrix() == fock::number(s, -0.0).unwrap().matrix();
    let mut gen_ok = true;
    for p in [
        ModelParams::fock(6, 20.0).unwrap(),
        ModelParams::fock(6, 20.0).unwrap().with_drive(0.3, 1.1, 0.7),
    ] {
        let l = liouvillian_single(&p, 0.0, s).unwrap();
        gen_ok &= l.to_dense() == reference_generator(&p, s).to_dense();
    }

    let mut worst_doubling: f64 = 0.0;
    for p in [
        ModelParams::fock(5, 20.0).unwrap(),
        ModelParams::fock(10, 20.0).unwrap(),
        ModelParams::fock(10, 20.0).unwrap().with_drive(0.0, 1.0, 0.0),
        ModelParams::coherent(0.2, 1.0, 0.0),
    ] {
        let sol = steady_model(&p, &policy()).unwrap();
        let m = sol.space.dim();
        let n1 = fock_stats(&sol.rho).1;
        let wide = steady_model(&p, &TruncationPolicy::fixed(2 * m)).unwrap();
        let n2 = fock_stats(&wide.rho).1;
        worst_doubling = worst_doubling.max(rel(n1, n2));
    }
    let doubling_ok = worst_doubling < 1e-6;
    let pass = rate_ok && ops_ok && gen_ok && doubling_ok;
    report(
        "C10 exactness checks",
        pass,
        &format!(
            "rate-equation residual {worst_rate:.2e} (<= 1e-9); q=0 operators bit-identical [{}]; q=0 generator bit-identical to undeformed build [{}]; truncation doubling rel. nbar change {worst_doubling:.2e} (< 1e-6)",
            if ops_ok { "ok" } else { "no" },
            if gen_ok { "ok" } else { "no" }
        ),
    );
    assert!(pass);
}

// Stated examples that turned out inconsistent with the stated formulas; kept
// red rather than relaxed.

#[test]
fn s1_drift_vanishes_at_predicted_mean() {
    let p = ModelParams::fock(20, 100.0).unwrap();
    let pred = predicted_moments(20, 1.0, 100.0).unwrap();
    let (a, _) = km_coefficients(pred.nbar_pred, &p).unwrap();
    let root = brent(|n| km_coefficients(n, &p).unwrap().0, pred.nbar_pred, 20.0, 1e-10, 200).unwrap();
    let pass = a.abs() <= 1.0;
    report(
        "S1 A(nbar_pred) ~ 0 at (n0=20, eps=100)",
        pass,
        &format!("A({:.4}) = {a:.3} (need |A| <= 1); actual drift root at n = {root:.4}", pred.nbar_pred),
    );
    assert!(pass);
}

#[test]
fn s2_variance_root_epsilon_scaling() {
    let c: Vec<f64> = [50.0, 100.0, 200.0]
        .iter()
        .map(|&e| predicted_moments(20, 1.0, e).unwrap().var_pred * f64::sqrt(e) / 20.0)
        .collect();
    let spread = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / c.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let pass = spread <= 0.05;
    report(
        "S2 var sqrt(eps)/n0 constant over eps in {50,100,200}",
        pass,
        &format!("values {:.4} {:.4} {:.4}, spread {:.1}% (need <= 5%)", c[0], c[1], c[2], 100.0 * spread),
    );
    assert!(pass);
}

#[test]
fn s3_mehler_heine_relative_accuracy() {
    let exact = kummer_1f1_neg(100.0, 0.0367).unwrap();
    let approx = mehler_heine_f(100.0, 0.0367).unwrap();
    let e = rel(approx, exact);
    let pass = e <= 0.05;
    report(
        "S3 Mehler-Heine vs 1F1 at (100, 0.0367)",
        pass,
        &format!("approx {approx:.4e}, exact {exact:.4e}, rel. error {:.1}% (need <= 5%); n alpha = 3.67 sits at the zero of f", 100.0 * e),
    );
    assert!(pass);
}

#[test]
#[ignore = "large-n0 diagnostic, n0 = 50"]
fn large_fock_50() {
    let p = ModelParams::fock(50, 20.0).unwrap();
    let sol = steady_model(&p, &policy()).unwrap();
    let (_, nbar, var) = fock_stats(&sol.rho);
    let pred = predicted_moments(50, 1.0, 20.0).unwrap();
    let c = phase_cumulants(&p, 0.02, &policy()).unwrap();
    let formula = analytic_free_diffusion(&p, c.nbar).unwrap();
    report(
        "D1 n0=50 eps=20",
        true,
        &format!(
            "M {}, nbar {nbar:.3} (pred {:.3}), var {var:.3} (pred {:.3}), D {:.5} vs formula {formula:.5}",
            sol.space.dim(),
            pred.nbar_pred,
            pred.var_pred,
            c.diffusion
        ),
    );
}
