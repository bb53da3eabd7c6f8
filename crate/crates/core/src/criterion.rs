//! Evaluation of the slope-based blowup criterion on initial data: locate
//! the admissible point x0, compute the energy constant K, the closed-form
//! upper bound T* on the breaking time and the predicted spatial interval
//! containing the breaking location.

use serde::Serialize;

use crate::dynamics::SolutionState;
use crate::evolution::energy;
use crate::Error;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// K = sqrt((1/2 + 2 coth(1/2)) E0).
pub fn compute_k(e0: f64) -> Result<f64, Error> {
    if e0 < 0.0 {
        return Err(Error::NegativeEnergy(e0));
    }
    let coth_half = 1.0 / (0.5f64).tanh();
    Ok(((0.5 + 2.0 * coth_half) * e0).sqrt())
}

/// Criterion margin at x: -(u0x + v0x)(x) - |(u0 + v0)(x)| - sqrt(2) K.
/// Positive means the blowup condition holds at x.
pub fn criterion_margin(z0: &SolutionState, x: f64, k_const: f64) -> f64 {
    let w = z0.w();
    let wx = w.derivative();
    -wx.interpolate(x) - w.interpolate(x).abs() - SQRT_2 * k_const
}

/// Best candidate point of the margin scan, whether or not it qualifies.
fn scan_best(z0: &SolutionState, k_const: f64) -> (f64, f64) {
    let n = z0.u.grid().len();
    let refine = 8 * n;
    let mut best_x = 0.0;
    let mut best_m = f64::NEG_INFINITY;
    for j in 0..refine {
        let x = j as f64 / refine as f64;
        let m = criterion_margin(z0, x, k_const);
        if m > best_m {
            best_m = m;
            best_x = x;
        }
    }
    // golden-section polish around the best node
    let delta = 1.0 / refine as f64;
    let (mut a, mut b) = (best_x - delta, best_x + delta);
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = criterion_margin(z0, c, k_const);
    let mut fd = criterion_margin(z0, d, k_const);
    while (b - a).abs() > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = criterion_margin(z0, c, k_const);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = criterion_margin(z0, d, k_const);
        }
    }
    let x = 0.5 * (a + b);
    let m = criterion_margin(z0, x, k_const);
    if m > best_m {
        (x - x.floor(), m)
    } else {
        (best_x, best_m)
    }
}

/// Maximizer of the criterion margin, when a qualifying point exists.
pub fn scan_x0(z0: &SolutionState, k_const: f64) -> Option<(f64, f64)> {
    let (x0, margin) = scan_best(z0, k_const);
    (margin > 0.0).then_some((x0, margin))
}

/// T* and g0 from g0 = sqrt(w0x^2 - w0^2) at x0:
/// T* = (1/(sqrt(2) K)) ln((g0 + sqrt(2) K)/(g0 - sqrt(2) K)).
pub fn tstar_from_g0(g0: f64, k_const: f64) -> Result<f64, Error> {
    let sk = SQRT_2 * k_const;
    if g0 <= sk {
        return Err(Error::TstarUndefined { g0, sqrt2_k: sk });
    }
    Ok((1.0 / sk) * ((g0 + sk) / (g0 - sk)).ln())
}

/// Closed-form blowup-time bound evaluated at x0. Fails when the criterion
/// does not actually hold there.
pub fn tstar_bound(z0: &SolutionState, x0: f64, k_const: f64) -> Result<(f64, f64), Error> {
    let w = z0.w();
    let wx = w.derivative();
    let w0 = w.interpolate(x0);
    let w0x = wx.interpolate(x0);
    let arg = w0x * w0x - w0 * w0;
    let g0 = if arg > 0.0 { arg.sqrt() } else { 0.0 };
    let tstar = tstar_from_g0(g0, k_const)?;
    Ok((tstar, g0))
}

/// Predicted interval (x0 - sqrt(E0/2) T*, x0 + sqrt(E0/2) T*), unreduced.
pub fn blowup_interval(x0: f64, e0: f64, tstar: f64) -> (f64, f64) {
    assert!(tstar >= 0.0);
    let half_width = (0.5 * e0).sqrt() * tstar;
    (x0 - half_width, x0 + half_width)
}

/// Arc-aware containment of a circle position in an interval given in
/// unreduced coordinates.
pub fn interval_contains_mod1(lo: f64, hi: f64, x: f64) -> bool {
    if hi - lo >= 1.0 {
        return true;
    }
    let x = x - x.floor();
    for shift in [-1.0, 0.0, 1.0] {
        if x + shift >= lo - 1e-14 && x + shift <= hi + 1e-14 {
            return true;
        }
    }
    false
}

/// Outcome of evaluating the blowup criterion on initial data.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub satisfied: bool,
    /// Best candidate point (margin maximizer), qualifying or not.
    pub x0: f64,
    pub margin: f64,
    pub e0: f64,
    pub k: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tstar: Option<f64>,
    /// Unreduced predicted interval (lo, hi).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    /// The same interval endpoints reduced mod 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval_mod: Option<(f64, f64)>,
}

/// Full criterion evaluation: energy, K, scan, and when satisfied the
/// blowup-time bound and interval.
pub fn evaluate(z0: &SolutionState) -> CriterionReport {
    let e0 = energy(z0);
    let k = compute_k(e0).expect("H1 norm is nonnegative");
    let (x0, margin) = scan_best(z0, k);
    let mut report = CriterionReport {
        satisfied: margin > 0.0,
        x0,
        margin,
        e0,
        k,
        g0: None,
        tstar: None,
        interval: None,
        interval_mod: None,
    };
    if report.satisfied {
        if let Ok((tstar, g0)) = tstar_bound(z0, x0, k) {
            let (lo, hi) = blowup_interval(x0, e0, tstar);
            report.g0 = Some(g0);
            report.tstar = Some(tstar);
            report.interval = Some((lo, hi));
            report.interval_mod = Some((lo - lo.floor(), hi - hi.floor()));
        } else {
            // margin > 0 forces g0 > sqrt(2) K analytically; interpolation
            // noise at the boundary could still land here, so report the
            // candidate without a bound rather than fail.
            report.satisfied = false;
        }
    }
    report
}
