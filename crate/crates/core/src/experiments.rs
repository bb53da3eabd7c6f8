//! Command layer: criterion evaluation, simulation with CSV/JSON output,
//! one-parameter sweeps and the numerical selftest.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::characteristics::{displacement_check, jacobian_positivity};
use crate::config::{build_initial, InitialSpec, RunConfig, TrackSpec};
use crate::criterion::{evaluate, interval_contains_mod1, CriterionReport};
use crate::dynamics::{rhs_state, rhs_w, SolutionState};
use crate::evolution::{run, RunOutput, Termination};
use crate::grid::{PeriodicField, PeriodicGrid};
use crate::kernel::{
    conv_dp, conv_p, conv_p_minus, conv_p_plus, conv_split_literal, helmholtz_residual,
};
use crate::Error;

/// CSV column order of run.csv.
pub const RUN_CSV_HEADER: &str = "t,E,min_slope,min_slope_x,q,w_at_q,wx_at_q,M,N,g,dt";

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Build the (dealiased, when configured) initial state of a config.
pub fn initial_state(cfg: &RunConfig) -> Result<SolutionState, Error> {
    let grid = PeriodicGrid::new(cfg.n)?;
    let s = build_initial(&cfg.initial, &grid)?;
    if cfg.dealias {
        Ok(SolutionState::new(s.t, s.u.dealias(), s.v.dealias()))
    } else {
        Ok(s)
    }
}

/// Evaluate the blowup criterion on the configured initial data and write
/// report.json into `out_dir`.
pub fn cmd_criterion(cfg: &RunConfig, out_dir: &Path) -> Result<CriterionReport, Error> {
    let z0 = initial_state(cfg)?;
    let report = evaluate(&z0);
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

/// Everything summary.json records about one simulation.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub n: usize,
    pub t_end: f64,
    pub steps: usize,
    pub final_t: f64,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub break_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub break_location: Option<f64>,
    pub criterion: CriterionReport,
    /// break_time / tstar when both exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub break_time_ratio: Option<f64>,
    /// Arc-aware containment of break_location in the predicted interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub break_in_interval: Option<bool>,
    pub energy_initial: f64,
    pub energy_drift: f64,
    pub tracked_x0: Vec<f64>,
    pub displacement_ok: bool,
    pub jacobian_positive: bool,
}

fn track_points(cfg: &RunConfig, report: &CriterionReport) -> Vec<f64> {
    match &cfg.track {
        TrackSpec::Mode(_) => vec![report.x0],
        TrackSpec::Points(pts) => pts.clone(),
    }
}

fn write_run_csv(path: &Path, out: &RunOutput, stride: usize) -> Result<(), Error> {
    let record = &out.record;
    let track = out.tracks.first();
    let rows = record.times.len();
    let mut text = String::from(RUN_CSV_HEADER);
    text.push('\n');
    for i in 0..rows {
        if i % stride != 0 && i != rows - 1 {
            continue;
        }
        let mut cols: Vec<String> = vec![
            fmt_num(record.times[i]),
            fmt_num(record.energy[i]),
            fmt_num(record.min_slope[i]),
            fmt_num(record.min_slope_location[i]),
        ];
        match track {
            Some(t) if i < t.len() => {
                let (m, n) = (t.m[i], t.n[i]);
                cols.push(fmt_num(t.q[i]));
                cols.push(fmt_num(0.5 * (m + n)));
                cols.push(fmt_num(0.5 * (n - m)));
                cols.push(fmt_num(m));
                cols.push(fmt_num(n));
                cols.push(t.g[i].map(fmt_num).unwrap_or_default());
            }
            _ => cols.extend(std::iter::repeat(String::new()).take(6)),
        }
        cols.push(if i == 0 { String::new() } else { fmt_num(record.dt[i]) });
        let _ = writeln!(text, "{}", cols.join(","));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn summarize(cfg: &RunConfig, out: &RunOutput, report: CriterionReport, x0s: Vec<f64>) -> SimulateSummary {
    let record = &out.record;
    let e0 = record.energy[0];
    let drift = record
        .energy
        .iter()
        .map(|&e| (e - e0).abs())
        .fold(0.0f64, f64::max)
        / e0.max(1e-300);
    let break_time_ratio = match (record.break_time, report.tstar) {
        (Some(bt), Some(ts)) => Some(bt / ts),
        _ => None,
    };
    let break_in_interval = match (record.break_location, report.interval) {
        (Some(loc), Some((lo, hi))) => Some(interval_contains_mod1(lo, hi, loc)),
        _ => None,
    };
    let displacement_ok = out
        .tracks
        .iter()
        .all(|t| displacement_check(t, report.e0));
    let jacobian_positive = out.tracks.iter().all(jacobian_positivity);
    SimulateSummary {
        n: cfg.n,
        t_end: cfg.t_end,
        steps: record.times.len().saturating_sub(1),
        final_t: *record.times.last().expect("record has rows"),
        termination: record.termination,
        break_time: record.break_time,
        break_location: record.break_location,
        criterion: report,
        break_time_ratio,
        break_in_interval,
        energy_initial: e0,
        energy_drift: drift,
        tracked_x0: x0s,
        displacement_ok,
        jacobian_positive,
    }
}

/// Run one simulation and write run.csv and summary.json into `out_dir`.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<SimulateSummary, Error> {
    let z0 = initial_state(cfg)?;
    let report = evaluate(&z0);
    let x0s = track_points(cfg, &report);
    let out = run(z0, cfg.t_end, &cfg.step, &x0s, cfg.dealias);
    std::fs::create_dir_all(out_dir)?;
    write_run_csv(&out_dir.join("run.csv"), &out, cfg.output_stride)?;
    let summary = summarize(cfg, &out, report, x0s);
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// One row of sweep.csv.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub satisfied: bool,
    pub margin: f64,
    pub e0: f64,
    pub k: f64,
    pub tstar: Option<f64>,
    pub break_time: Option<f64>,
}

/// Evaluate the criterion (and optionally simulate) along a linear ramp of
/// one bump parameter; writes sweep.csv into `out_dir`.
pub fn cmd_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<SweepRow>, Error> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep mode needs a [sweep] section".to_string()))?;
    let (a0, kappa0, center, v_mode) = match &cfg.initial {
        InitialSpec::Bump {
            a,
            kappa,
            center,
            v_mode,
        } => (*a, *kappa, *center, *v_mode),
        _ => {
            return Err(Error::Config(
                "sweep mode needs initial.kind = \"bump\"".to_string(),
            ))
        }
    };
    let mut rows = Vec::with_capacity(sweep.count);
    for i in 0..sweep.count {
        let frac = if sweep.count == 1 {
            0.0
        } else {
            i as f64 / (sweep.count - 1) as f64
        };
        let value = sweep.min + frac * (sweep.max - sweep.min);
        let initial = match sweep.parameter.as_str() {
            "a" => InitialSpec::Bump {
                a: value,
                kappa: kappa0,
                center,
                v_mode,
            },
            _ => InitialSpec::Bump {
                a: a0,
                kappa: value,
                center,
                v_mode,
            },
        };
        let member = RunConfig {
            initial,
            sweep: None,
            ..cfg.clone()
        };
        let z0 = initial_state(&member)?;
        let report = evaluate(&z0);
        let break_time = if sweep.simulate {
            run(z0, member.t_end, &member.step, &[], member.dealias)
                .record
                .break_time
        } else {
            None
        };
        rows.push(SweepRow {
            value,
            satisfied: report.satisfied,
            margin: report.margin,
            e0: report.e0,
            k: report.k,
            tstar: report.tstar,
            break_time,
        });
    }
    std::fs::create_dir_all(out_dir)?;
    let mut text = String::from("value,satisfied,margin,E0,K,tstar,break_time\n");
    for r in &rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            fmt_num(r.value),
            r.satisfied,
            fmt_num(r.margin),
            fmt_num(r.e0),
            fmt_num(r.k),
            r.tstar.map(fmt_num).unwrap_or_default(),
            r.break_time.map(fmt_num).unwrap_or_default(),
        );
    }
    std::fs::write(out_dir.join("sweep.csv"), text)?;
    Ok(rows)
}

struct SelftestCheck {
    name: String,
    residual: f64,
    tolerance: f64,
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

/// Invariant suite on randomized band-limited data at n = 64 and n = 256.
///
/// Prints one line per check plus, informationally, the identity residuals
/// of the literal one-sided operators next to the periodic ones. Returns an
/// error iff any check exceeds its tolerance.
pub fn cmd_selftest(seed: u64, mut sink: impl std::io::Write) -> Result<(), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks: Vec<SelftestCheck> = Vec::new();
    let push = |checks: &mut Vec<SelftestCheck>, name: String, residual: f64, tol: f64| {
        checks.push(SelftestCheck {
            name,
            residual,
            tolerance: tol,
        });
    };

    for n in [64usize, 256] {
        let g = PeriodicGrid::new(n)?;
        let kmax = n / 4;
        let f = random_band_limited(&g, kmax, &mut rng);
        let h = random_band_limited(&g, kmax, &mut rng);

        // spectral roundtrip and derivative consistency
        push(
            &mut checks,
            format!("n={n} fft_roundtrip"),
            f.to_spectrum().to_field().sub(&f).max_abs(),
            1e-12,
        );
        push(
            &mut checks,
            format!("n={n} derivative_of_constant"),
            g.constant(0.7).derivative().max_abs(),
            1e-13,
        );

        // Helmholtz inverse and kernel identities
        push(
            &mut checks,
            format!("n={n} helmholtz_residual"),
            helmholtz_residual(&f),
            1e-8,
        );
        let plus = conv_p_plus(&f);
        let minus = conv_p_minus(&f);
        push(
            &mut checks,
            format!("n={n} split_sum_identity"),
            plus.add(&minus).sub(&conv_p(&f)).max_abs(),
            1e-8,
        );
        push(
            &mut checks,
            format!("n={n} split_difference_identity"),
            minus.sub(&plus).sub(&conv_dp(&f)).max_abs(),
            1e-8,
        );

        // dealiasing is a projection
        let d = f.dealias();
        push(
            &mut checks,
            format!("n={n} dealias_projection"),
            d.dealias().sub(&d).max_abs(),
            1e-13,
        );

        // combined-field consistency: rhs_w = du + dv + w w_x
        let s = SolutionState::new(0.0, f.dealias(), h.dealias());
        let (du, dv) = rhs_state(&s, true);
        let w = s.w();
        let wwx = w.mul(&w.derivative()).dealias();
        push(
            &mut checks,
            format!("n={n} w_equation_consistency"),
            rhs_w(&s, true).sub(&du.add(&dv).add(&wwx)).max_abs(),
            1e-8,
        );

        // u = v reduces both component equations to the same field
        let sym = SolutionState::new(0.0, f.dealias(), f.dealias());
        let (du, dv) = rhs_state(&sym, true);
        push(
            &mut checks,
            format!("n={n} component_symmetry"),
            du.sub(&dv).max_abs(),
            1e-10,
        );

        // informational: the literal one-sided formulas are not periodic
        let (lp, lm) = conv_split_literal(&f);
        let literal_sum = lp.add(&lm).sub(&conv_p(&f)).max_abs();
        let literal_diff = lm.sub(&lp).sub(&conv_dp(&f)).max_abs();
        writeln!(
            sink,
            "info  n={n} literal one-sided operators: sum residual {literal_sum:.3e}, \
             difference residual {literal_diff:.3e} (periodic versions above)"
        )?;
    }

    let mut failed = 0usize;
    for c in &checks {
        let ok = c.residual <= c.tolerance;
        if !ok {
            failed += 1;
        }
        writeln!(
            sink,
            "{} {:<36} residual {:.3e}  tol {:.1e}",
            if ok { "ok  " } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance
        )?;
    }
    writeln!(sink, "selftest: {}/{} checks passed", checks.len() - failed, checks.len())?;
    if failed > 0 {
        return Err(Error::Config(format!("selftest failed {failed} check(s)")));
    }
    Ok(())
}
