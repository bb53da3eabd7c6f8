//! Right-hand sides of the coupled system in nonlocal form, the combined
//! w = u + v dynamics, and runtime checks of the a priori sup-norm bounds.

use serde::Serialize;

use crate::grid::PeriodicField;
use crate::kernel::{conv_dp, conv_p, conv_p_minus, conv_p_plus};

/// Time stamp plus the pair (u, v) advanced by the integrator.
#[derive(Debug, Clone)]
pub struct SolutionState {
    pub t: f64,
    pub u: PeriodicField,
    pub v: PeriodicField,
}

impl SolutionState {
    pub fn new(t: f64, u: PeriodicField, v: PeriodicField) -> Self {
        assert_eq!(u.grid().len(), v.grid().len());
        Self { t, u, v }
    }

    pub fn w(&self) -> PeriodicField {
        self.u.add(&self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

fn maybe_dealias(f: PeriodicField, dealias: bool) -> PeriodicField {
    if dealias {
        f.dealias()
    } else {
        f
    }
}

/// du/dt and dv/dt of the nonlocal system. Quadratic products are formed
/// pointwise in physical space and dealiased before any convolution.
pub fn rhs_state(s: &SolutionState, dealias: bool) -> (PeriodicField, PeriodicField) {
    let u = &s.u;
    let v = &s.v;
    let ux = u.derivative();
    let vx = v.derivative();
    let w = u.add(v);

    let dl = |f: PeriodicField| maybe_dealias(f, dealias);

    // u^2 + 1/2 u_x^2 + u_x v_x + 1/2 v^2 - 1/2 v_x^2
    let bundle_u = dl(u
        .mul(u)
        .add(&ux.mul(&ux).scale(0.5))
        .add(&ux.mul(&vx))
        .add(&v.mul(v).scale(0.5))
        .add(&vx.mul(&vx).scale(-0.5)));
    // v^2 + 1/2 v_x^2 + u_x v_x + 1/2 u^2 - 1/2 u_x^2
    let bundle_v = dl(v
        .mul(v)
        .add(&vx.mul(&vx).scale(0.5))
        .add(&ux.mul(&vx))
        .add(&u.mul(u).scale(0.5))
        .add(&ux.mul(&ux).scale(-0.5)));

    let du = dl(w.mul(&ux))
        .scale(-1.0)
        .sub(&conv_p(&dl(u.mul(&vx))))
        .sub(&conv_dp(&bundle_u));
    let dv = dl(w.mul(&vx))
        .scale(-1.0)
        .sub(&conv_p(&dl(ux.mul(v))))
        .sub(&conv_dp(&bundle_v));
    (du, dv)
}

/// The field F = (3/2) u^2 + u v + 2 u_x v_x + (3/2) v^2, dealiased.
pub fn quadratic_bundle(s: &SolutionState, dealias: bool) -> PeriodicField {
    let ux = s.u.derivative();
    let vx = s.v.derivative();
    let f = s
        .u
        .mul(&s.u)
        .scale(1.5)
        .add(&s.u.mul(&s.v))
        .add(&ux.mul(&vx).scale(2.0))
        .add(&s.v.mul(&s.v).scale(1.5));
    maybe_dealias(f, dealias)
}

/// Material right-hand side of w: w_t + w w_x = -dP/dx * F.
pub fn rhs_w(s: &SolutionState, dealias: bool) -> PeriodicField {
    conv_dp(&quadratic_bundle(s, dealias)).scale(-1.0)
}

/// Advective slope source of w_x along characteristics:
/// -u_x^2 - v_x^2 + (3/2) u^2 + (3/2) v^2 + u v - P * F.
pub fn rhs_wx(s: &SolutionState, dealias: bool) -> PeriodicField {
    let ux = s.u.derivative();
    let vx = s.v.derivative();
    let local = maybe_dealias(
        ux.mul(&ux)
            .scale(-1.0)
            .sub(&vx.mul(&vx))
            .add(&s.u.mul(&s.u).scale(1.5))
            .add(&s.v.mul(&s.v).scale(1.5))
            .add(&s.u.mul(&s.v)),
        dealias,
    );
    local.sub(&conv_p(&quadratic_bundle(s, dealias)))
}

/// Measured sup-norms against the energy-only a priori bounds.
#[derive(Debug, Clone, Serialize)]
pub struct AprioriReport {
    pub max_uv_sq: f64,
    pub max_pplus_f: f64,
    pub max_pminus_f: f64,
    pub bound_uv: f64,
    pub bound_conv: f64,
    pub violated: bool,
}

/// Compare ||u^2+v^2||_inf with E0/2 and ||P+- * (3u^2+2uv+4u_xv_x+3v^2)||_inf
/// with 2 coth(1/2) E0.
pub fn apriori_check(s: &SolutionState, e0: f64, tol: f64) -> AprioriReport {
    let uv_sq = s.u.mul(&s.u).add(&s.v.mul(&s.v));
    let max_uv_sq = uv_sq.values().iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    // 3u^2 + 2uv + 4 u_x v_x + 3v^2 = 2 F
    let big_f = quadratic_bundle(s, false).scale(2.0);
    let max_pplus_f = conv_p_plus(&big_f).max_abs();
    let max_pminus_f = conv_p_minus(&big_f).max_abs();
    let bound_uv = 0.5 * e0;
    let coth_half = 1.0 / (0.5f64).tanh();
    let bound_conv = 2.0 * coth_half * e0;
    let violated = max_uv_sq > bound_uv * (1.0 + tol) + tol
        || max_pplus_f > bound_conv * (1.0 + tol) + tol
        || max_pminus_f > bound_conv * (1.0 + tol) + tol;
    AprioriReport {
        max_uv_sq,
        max_pplus_f,
        max_pminus_f,
        bound_uv,
        bound_conv,
        violated,
    }
}
