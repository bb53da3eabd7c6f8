//! Acceptance gate: nine end-to-end criteria, one test per criterion, each
//! printing a single PASS line with its key measured numbers. All tolerances
//! are pinned here.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use chlab::characteristics::riccati_residual;
use chlab::config::{fixture_breaking_config, InitialSpec, RunConfig, VMode};
use chlab::criterion::{compute_k, criterion_margin, evaluate, interval_contains_mod1, tstar_from_g0};
use chlab::dynamics::SolutionState;
use chlab::evolution::{cfl_dt, energy, run, step_rk4, RunOutput, StepControl, Termination};
use chlab::experiments::{cmd_selftest, cmd_simulate, initial_state, RUN_CSV_HEADER};
use chlab::grid::{PeriodicField, PeriodicGrid};
use chlab::kernel::{conv_dp, conv_p, conv_p_minus, conv_p_plus};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn grid(n: usize) -> PeriodicGrid {
    PeriodicGrid::new(n).unwrap()
}

fn random_band_limited(g: &PeriodicGrid, kmax: usize, rng: &mut impl Rng) -> PeriodicField {
    let mut s = g.zeros().to_spectrum();
    for k in 1..=kmax as i64 {
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        *s.coeff_mut(k) = c;
        *s.coeff_mut(-k) = c.conj();
    }
    *s.coeff_mut(0) = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
    let f = s.to_field();
    f.scale(1.0 / f.max_abs())
}

fn bump(g: &PeriodicGrid, a: f64, kappa: f64) -> PeriodicField {
    g.field_from_fn(|x| a * (kappa * ((TWO_PI * (x - 0.5)).cos() - 1.0)).exp())
        .dealias()
}

/// Shared breaking-fixture run (criteria 5, 6, 7).
struct BreakingRun {
    report: chlab::criterion::CriterionReport,
    out: RunOutput,
}

fn breaking_run() -> &'static BreakingRun {
    static RUN: OnceLock<BreakingRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = fixture_breaking_config();
        let z0 = initial_state(&cfg).unwrap();
        let report = evaluate(&z0);
        assert!(report.satisfied, "breaking fixture must satisfy the criterion");
        let out = run(z0, cfg.t_end, &cfg.step, &[report.x0], cfg.dealias);
        BreakingRun { report, out }
    })
}

/// Shared conservation run (criteria 2, 7):
/// u0 = 0.05 cos(2 pi x), v0 = 0.05 sin(2 pi x), n = 256, t_end = 1.
fn conservation_run() -> &'static RunOutput {
    static RUN: OnceLock<RunOutput> = OnceLock::new();
    RUN.get_or_init(|| {
        let g = grid(256);
        let u = g.field_from_fn(|x| 0.05 * (TWO_PI * x).cos());
        let v = g.field_from_fn(|x| 0.05 * (TWO_PI * x).sin());
        let z0 = SolutionState::new(0.0, u.dealias(), v.dealias());
        run(z0, 1.0, &StepControl::default(), &[], true)
    })
}

#[test]
fn criterion_1_kernel_identity_suite() {
    let start = Instant::now();
    let g = grid(256);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let f = random_band_limited(&g, 64, &mut rng);
        let pf = conv_p(&f);
        let helm = pf.derivative().derivative().sub(&pf).add(&f).max_abs();
        let plus = conv_p_plus(&f);
        let minus = conv_p_minus(&f);
        let sum_res = plus.add(&minus).sub(&pf).max_abs();
        let diff_res = minus.sub(&plus).sub(&conv_dp(&f)).max_abs();
        worst = (worst.0.max(helm), worst.1.max(sum_res), worst.2.max(diff_res));
    }
    assert!(worst.0 <= 1e-8, "Helmholtz residual {}", worst.0);
    assert!(worst.1 <= 1e-8, "split sum residual {}", worst.1);
    assert!(worst.2 <= 1e-8, "split difference residual {}", worst.2);

    let one = g.constant(1.0);
    let r_p1 = conv_p(&one).sub(&one).max_abs();
    let r_plus = conv_p_plus(&one).sub(&g.constant(0.5)).max_abs();
    let r_minus = conv_p_minus(&one).sub(&g.constant(0.5)).max_abs();
    assert!(r_p1 <= 1e-12 && r_plus <= 1e-12 && r_minus <= 1e-12);

    let dt = start.elapsed().as_secs_f64();
    assert!(dt < 5.0, "runtime {dt:.2}s exceeds 5s");
    println!(
        "PASS criterion 1: kernel identities, max residuals {:.2e}/{:.2e}/{:.2e} (tol 1e-8), constants {:.1e} (tol 1e-12), {dt:.2}s",
        worst.0, worst.1, worst.2, r_p1.max(r_plus).max(r_minus)
    );
}

#[test]
fn criterion_2_energy_conservation() {
    let start = Instant::now();
    let out = conservation_run();
    assert_eq!(out.record.termination, Termination::ReachedTEnd);
    let e0 = out.record.energy[0];
    let drift = out
        .record
        .energy
        .iter()
        .map(|&e| (e - e0).abs() / e0)
        .fold(0.0f64, f64::max);
    assert!(drift <= 1e-8, "relative energy drift {drift}");
    let dt = start.elapsed().as_secs_f64();
    assert!(dt < 10.0, "runtime {dt:.2}s exceeds 10s");
    println!(
        "PASS criterion 2: energy conserved over {} rows, max relative drift {drift:.2e} (tol 1e-8), {dt:.2}s",
        out.record.times.len()
    );
}

/// Independently coded scalar equation w_t + w w_x = -dP/dx * (w^2 + w_x^2/2),
/// RK4 with the same CFL rule, for the u = v reduction oracle.
fn scalar_rhs(w: &PeriodicField) -> PeriodicField {
    let wx = w.derivative();
    let bundle = w.mul(w).add(&wx.mul(&wx).scale(0.5)).dealias();
    w.mul(&wx).dealias().scale(-1.0).sub(&conv_dp(&bundle))
}

fn scalar_run(mut w: PeriodicField, t_end: f64, ctrl: &StepControl) -> PeriodicField {
    let mut t = 0.0;
    let dx = w.grid().dx();
    while t < t_end - 1e-14 {
        let dt = (ctrl.cfl * dx / w.max_abs().max(1e-12))
            .min(ctrl.dt_max)
            .min(t_end - t);
        let k1 = scalar_rhs(&w);
        let k2 = scalar_rhs(&w.add_scaled(&k1, 0.5 * dt));
        let k3 = scalar_rhs(&w.add_scaled(&k2, 0.5 * dt));
        let k4 = scalar_rhs(&w.add_scaled(&k3, dt));
        w = w
            .add_scaled(&k1, dt / 6.0)
            .add_scaled(&k2, dt / 3.0)
            .add_scaled(&k3, dt / 3.0)
            .add_scaled(&k4, dt / 6.0);
        t += dt;
    }
    w
}

#[test]
fn criterion_3_reduction_oracle() {
    let start = Instant::now();
    let g = grid(256);
    let u0 = bump(&g, 0.05, 10.0);
    let ctrl = StepControl::default();
    let t_end = 0.5;

    // coupled run with u = v, stepping manually to monitor ||u - v|| per step
    let mut s = SolutionState::new(0.0, u0.clone(), u0.clone());
    let mut max_asym = 0.0f64;
    while s.t < t_end - 1e-14 {
        let dt = cfl_dt(&s, &ctrl).unwrap().min(t_end - s.t);
        s = step_rk4(&s, dt, true).unwrap().state;
        max_asym = max_asym.max(s.u.sub(&s.v).max_abs());
    }
    assert!(max_asym <= 1e-10, "max ||u - v|| {max_asym}");

    let w_scalar = scalar_run(u0.scale(2.0), t_end, &ctrl);
    let disc = s.w().sub(&w_scalar).max_abs();
    assert!(disc <= 1e-7, "scalar-equation discrepancy {disc}");

    let dt = start.elapsed().as_secs_f64();
    assert!(dt < 30.0, "runtime {dt:.2}s exceeds 30s");
    println!(
        "PASS criterion 3: u=v reduction, max asymmetry {max_asym:.2e} (tol 1e-10), scalar-equation discrepancy {disc:.2e} (tol 1e-7), {dt:.2}s"
    );
}

#[test]
fn criterion_4_convergence_orders() {
    let start = Instant::now();

    // temporal: fixed grid, dt-halving against a finer reference
    let g = grid(256);
    let u0 = bump(&g, 0.2, 15.0);
    let s0 = SolutionState::new(0.0, u0.clone(), u0.scale(0.5).dealias());
    let t_end = 0.5;
    let solve = |dt: f64| {
        let mut s = s0.clone();
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            s = step_rk4(&s, dt, true).unwrap().state;
        }
        s
    };
    let fine = solve(1.25e-4);
    let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| solve(dt).u.sub(&fine.u).max_abs())
        .collect();
    let order = (errs[0] / errs[1]).log2();
    assert!(order >= 3.9, "temporal order {order}, errors {errs:?}");

    // spatial: n = 128 and 256 against an n = 512 reference at fixed dt
    let spatial = |n: usize| {
        let g = grid(n);
        let u0 = bump(&g, 0.05, 12.0);
        let mut s = SolutionState::new(0.0, u0.clone(), u0);
        for _ in 0..250 {
            s = step_rk4(&s, 1e-3, true).unwrap().state;
        }
        s
    };
    let refine = spatial(512);
    let err_at = |s: &SolutionState| {
        let n = s.u.grid().len();
        let stride = 512 / n;
        s.u.values()
            .iter()
            .enumerate()
            .map(|(j, &v)| (v - refine.u.values()[j * stride]).abs())
            .fold(0.0f64, f64::max)
    };
    let e128 = err_at(&spatial(128));
    let e256 = err_at(&spatial(256));
    let ratio = e128 / e256;
    assert!(ratio >= 100.0, "spatial error ratio {ratio} (e128 {e128:.2e}, e256 {e256:.2e})");

    let dt = start.elapsed().as_secs_f64();
    assert!(dt < 60.0, "runtime {dt:.2}s exceeds 60s");
    println!(
        "PASS criterion 4: temporal order {order:.2} (>= 3.9), spatial error drop {ratio:.0}x (>= 100x), {dt:.2}s"
    );
}

#[test]
fn criterion_5_blowup_prediction_end_to_end() {
    let start = Instant::now();
    let fx = breaking_run();
    let record = &fx.out.record;
    assert_eq!(record.termination, Termination::BreakingDetected);

    let tstar = fx.report.tstar.unwrap();
    let t_break = record.break_time.unwrap();
    let ratio = t_break / tstar;
    assert!(ratio <= 1.05, "t_break/T* = {ratio}");

    let (lo, hi) = fx.report.interval.unwrap();
    let loc = record.break_location.unwrap();
    assert!(
        interval_contains_mod1(lo, hi, loc),
        "break location {loc} outside ({lo}, {hi})"
    );

    let track = &fx.out.tracks[0];
    let speed = (0.5 * fx.report.e0).sqrt();
    for (&t, &q) in track.times.iter().zip(&track.q_unwrapped) {
        let d = (q - track.x0).abs();
        assert!(d <= speed * t + 1e-8, "displacement {d} at t = {t}");
    }

    let dt = start.elapsed().as_secs_f64();
    assert!(dt < 120.0, "runtime {dt:.2}s exceeds 120s");
    println!(
        "PASS criterion 5: breaking at t = {t_break:.4e} <= 1.05 T* (ratio {ratio:.2}), location {loc:.4} in ({lo:.4}, {hi:.4}), displacement bounded, {dt:.2}s"
    );
}

#[test]
fn criterion_6_riccati_monotonicity() {
    let fx = breaking_run();
    let track = &fx.out.tracks[0];
    let record = &fx.out.record;
    let k = fx.report.k;
    let two_k2 = 2.0 * k * k;
    let resolved_floor = -100.0 * fx.report.e0.sqrt();
    let resolved = |i: usize| record.min_slope[i] >= resolved_floor;

    let mut checked = 0usize;
    for i in 0..track.len() {
        if !resolved(i) {
            continue;
        }
        let g = track.g[i].expect("g defined while MN < 0");
        assert!(
            track.m[i] * track.n[i] < -two_k2,
            "MN = {} not below -2K^2 = {} at sample {i}",
            track.m[i] * track.n[i],
            -two_k2
        );
        if i > 0 && resolved(i - 1) {
            let tol_m = 1e-6 * track.m[i - 1].abs().max(1.0);
            assert!(track.m[i] >= track.m[i - 1] - tol_m, "M decreased at {i}");
            let tol_n = 1e-6 * track.n[i - 1].abs().max(1.0);
            assert!(track.n[i] <= track.n[i - 1] + tol_n, "N increased at {i}");
            let g_prev = track.g[i - 1].unwrap();
            assert!(g > g_prev - 1e-6 * g_prev.max(1.0), "g not increasing at {i}");
        }
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} resolved samples");

    let res = riccati_residual(track, k).unwrap();
    let mut min_slack = f64::INFINITY;
    for (j, (&t, &r)) in res.times.iter().zip(&res.g_res).enumerate() {
        // residual index j corresponds to track sample j + 1
        if !resolved(j + 1) {
            continue;
        }
        let g = track.g[j + 1].unwrap();
        let tol = 1e-3 * (g * g).max(1.0);
        assert!(r >= -tol, "dg/dt slack {r} below -{tol} at t = {t}");
        min_slack = min_slack.min(r / (g * g).max(1.0));
    }
    println!(
        "PASS criterion 6: M up / N down / MN < -2K^2 / g up on {checked} samples, min relative Riccati slack {min_slack:.2e} (tol -1e-3)"
    );
}

#[test]
fn criterion_7_apriori_bounds() {
    let mut worst_uv = 0.0f64;
    let mut worst_conv = 0.0f64;
    for out in [conservation_run(), &breaking_run().out] {
        let e0 = out.record.energy[0];
        let bound_uv = 0.5 * e0 * (1.0 + 1e-6);
        let coth_half = 1.0 / (0.5f64).tanh();
        let bound_conv = 2.0 * coth_half * e0 * (1.0 + 1e-6);
        for i in 0..out.record.times.len() {
            assert!(
                out.record.max_uv_sq[i] <= bound_uv,
                "||u^2+v^2|| = {} above E0/2 = {} at row {i}",
                out.record.max_uv_sq[i],
                bound_uv
            );
            let conv = out.record.max_pplus_f[i].max(out.record.max_pminus_f[i]);
            assert!(
                conv <= bound_conv,
                "one-sided convolution {} above 2 coth(1/2) E0 = {} at row {i}",
                conv,
                bound_conv
            );
            worst_uv = worst_uv.max(out.record.max_uv_sq[i] / (0.5 * e0));
            worst_conv = worst_conv.max(conv / (2.0 * coth_half * e0));
        }
    }
    println!(
        "PASS criterion 7: sup-norm bounds hold on both runs, tightest ratios {worst_uv:.3} of E0/2 and {worst_conv:.3} of 2coth(1/2)E0"
    );
}

#[test]
fn criterion_8_criterion_algebra() {
    // closed form of K at unit energy
    let e = std::f64::consts::E;
    let k1 = compute_k(1.0).unwrap();
    let expect = (0.5 + 2.0 * (e + 1.0) / (e - 1.0)).sqrt();
    assert!((k1 - expect).abs() <= 1e-12);

    // exact linear scaling of the margin
    let g = grid(256);
    let u0 = bump(&g, 20.0, 60.0);
    let base = SolutionState::new(0.0, u0.clone(), u0);
    let k_base = compute_k(energy(&base)).unwrap();
    let report = evaluate(&base);
    let mut worst_scaling = 0.0f64;
    for lambda in [0.25, 0.5, 2.0, 5.0] {
        let scaled = SolutionState::new(0.0, base.u.scale(lambda), base.v.scale(lambda));
        let k_scaled = compute_k(energy(&scaled)).unwrap();
        let m = criterion_margin(&scaled, report.x0, k_scaled);
        let rel = (m - lambda * report.margin).abs() / (lambda * report.margin).abs();
        assert!(rel <= 1e-10, "lambda = {lambda}: relative deviation {rel}");
        worst_scaling = worst_scaling.max(rel);
    }
    let _ = k_base;

    // single harmonics reported unsatisfiable at any amplitude
    for a in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let u = g.field_from_fn(|x| a * (TWO_PI * x).sin());
        let z = SolutionState::new(0.0, u, g.zeros());
        assert!(!evaluate(&z).satisfied, "harmonic a = {a} misreported");
    }

    // T* against the equivalent inverse-hyperbolic form on a 20-point grid
    let mut worst_tstar = 0.0f64;
    for (i, &g0) in [3.0, 5.0, 8.0, 20.0, 1e3].iter().enumerate() {
        for &k in &[0.5, 1.0, 1.5, 2.0] {
            let sk = std::f64::consts::SQRT_2 * k;
            assert!(g0 > sk, "grid point {i} invalid");
            let t = tstar_from_g0(g0, k).unwrap();
            let oracle = (2.0 / sk) * (sk / g0).atanh();
            let rel = (t - oracle).abs() / oracle;
            assert!(rel <= 1e-12, "g0 = {g0}, K = {k}: deviation {rel}");
            worst_tstar = worst_tstar.max(rel);
        }
    }
    println!(
        "PASS criterion 8: K closed form to 1e-12, margin scaling deviation {worst_scaling:.1e} (tol 1e-10), harmonics unsatisfiable, T* vs atanh form {worst_tstar:.1e} (tol 1e-12)"
    );
}

#[test]
fn criterion_9_determinism_and_interfaces() {
    let mut sink = Vec::new();
    cmd_selftest(0, &mut sink).expect("selftest must pass");

    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        n: 128,
        t_end: 0.05,
        initial: InitialSpec::Bump {
            a: 0.5,
            kappa: 8.0,
            center: 0.5,
            v_mode: VMode::Equal,
        },
        ..RunConfig::default()
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    cmd_simulate(&cfg, &a).unwrap();
    cmd_simulate(&cfg, &b).unwrap();
    let mut identical = true;
    for name in ["run.csv", "summary.json"] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        identical &= fa == fb;
        assert_eq!(fa, fb, "{name} differs between identical runs");
    }
    let header = std::fs::read_to_string(a.join("run.csv")).unwrap();
    assert!(header.starts_with(RUN_CSV_HEADER));
    println!(
        "PASS criterion 9: selftest clean, repeated runs bit-identical ({identical}), CSV header stable"
    );
}
