//! Lagrangian tracking of a single point q(t, x0) under the velocity u + v,
//! and the diagnostic quantities M = w - w_x, N = w + w_x, g = sqrt(-MN)
//! sampled along the track.

use crate::dynamics::SolutionState;
use crate::grid::PeriodicField;
use crate::Error;

/// One tracked characteristic with its diagnostic series.
#[derive(Debug, Clone)]
pub struct CharacteristicTrack {
    pub x0: f64,
    pub times: Vec<f64>,
    /// Position reduced mod 1.
    pub q: Vec<f64>,
    /// Position without wrapping, for displacement checks.
    pub q_unwrapped: Vec<f64>,
    /// (w - w_x)(t, q).
    pub m: Vec<f64>,
    /// (w + w_x)(t, q).
    pub n: Vec<f64>,
    /// sqrt(-MN) where MN < 0, None elsewhere.
    pub g: Vec<Option<f64>>,
    /// (u_x + v_x)(t, q), for the flow-Jacobian integral.
    pub slope_at_q: Vec<f64>,
}

impl CharacteristicTrack {
    /// Start a track at x0 and sample the initial state.
    pub fn new(x0: f64, initial: &SolutionState) -> Self {
        let mut track = Self {
            x0,
            times: Vec::new(),
            q: Vec::new(),
            q_unwrapped: Vec::new(),
            m: Vec::new(),
            n: Vec::new(),
            g: Vec::new(),
            slope_at_q: Vec::new(),
        };
        track.push_sample(initial, x0);
        track
    }

    /// Record the state sampled at the (unwrapped) position `q`.
    pub fn push_sample(&mut self, s: &SolutionState, q_unwrapped: f64) {
        let (m, n) = sample_mn(s, q_unwrapped);
        self.times.push(s.t);
        self.q.push(q_unwrapped - q_unwrapped.floor());
        self.q_unwrapped.push(q_unwrapped);
        let mn = m * n;
        self.g.push(if mn < 0.0 { Some((-mn).sqrt()) } else { None });
        self.m.push(m);
        self.n.push(n);
        // u_x + v_x = w_x = (N - M)/2
        self.slope_at_q.push(0.5 * (n - m));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// RK4 update of q under dq/dt = (u+v)(t, q), using the same stage velocity
/// fields as the PDE step so both are consistent to fourth order.
///
/// `stage_velocities` are w = u + v at the four RK4 stages.
pub fn advance_q(q: f64, stage_velocities: &[PeriodicField; 4], dt: f64) -> f64 {
    let k1 = stage_velocities[0].interpolate(q);
    let k2 = stage_velocities[1].interpolate(q + 0.5 * dt * k1);
    let k3 = stage_velocities[2].interpolate(q + 0.5 * dt * k2);
    let k4 = stage_velocities[3].interpolate(q + dt * k3);
    q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// w and w_x interpolated at q: M = w - w_x, N = w + w_x.
pub fn sample_mn(s: &SolutionState, q: f64) -> (f64, f64) {
    let w = s.w();
    let wx = w.derivative();
    let wq = w.interpolate(q);
    let wxq = wx.interpolate(q);
    (wq - wxq, wq + wxq)
}

/// Discrete flow Jacobian q_x(t) = exp(int_0^t (u_x+v_x)(tau, q) dtau),
/// evaluated by trapezoid integration of the recorded slope series.
/// Returns the series; positivity holds as long as the exponential is finite.
pub fn jacobian_series(track: &CharacteristicTrack) -> Vec<f64> {
    let mut out = Vec::with_capacity(track.len());
    let mut integral = 0.0;
    for i in 0..track.len() {
        if i > 0 {
            let dt = track.times[i] - track.times[i - 1];
            integral += 0.5 * dt * (track.slope_at_q[i - 1] + track.slope_at_q[i]);
        }
        out.push(integral.exp());
    }
    out
}

/// True iff the discrete flow Jacobian stays positive and finite on the track.
pub fn jacobian_positivity(track: &CharacteristicTrack) -> bool {
    jacobian_series(track).iter().all(|&j| j.is_finite() && j > 0.0)
}

/// Centered-difference residual series of the Riccati comparison system.
#[derive(Debug, Clone)]
pub struct RiccatiResiduals {
    /// Interior sample times the residuals are evaluated at.
    pub times: Vec<f64>,
    /// dg/dt - (g^2/2 - K^2); nonnegative (up to tolerance) while the
    /// comparison hypotheses hold.
    pub g_res: Vec<f64>,
    /// dM/dt + MN/2 + K^2.
    pub m_res: Vec<f64>,
    /// -dN/dt + MN/2 + K^2.
    pub n_res: Vec<f64>,
}

/// Centered differences on the (possibly non-uniform) stored time grid.
fn centered(y0: f64, y1: f64, y2: f64, t0: f64, t1: f64, t2: f64) -> f64 {
    // Three-point derivative at t1 exact for quadratics.
    let h1 = t1 - t0;
    let h2 = t2 - t1;
    (-h2 / (h1 * (h1 + h2))) * y0 + ((h2 - h1) / (h1 * h2)) * y1
        + (h1 / (h2 * (h1 + h2))) * y2
}

/// Residuals of g' >= g^2/2 - K^2 and of the M/N Riccati inequalities, at the
/// interior samples where g is defined on the full three-point stencil.
pub fn riccati_residual(track: &CharacteristicTrack, k_const: f64) -> Result<RiccatiResiduals, Error> {
    let defined = track.g.iter().filter(|g| g.is_some()).count();
    if defined < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            have: defined,
        });
    }
    let mut out = RiccatiResiduals {
        times: Vec::new(),
        g_res: Vec::new(),
        m_res: Vec::new(),
        n_res: Vec::new(),
    };
    let k2 = k_const * k_const;
    for i in 1..track.len() - 1 {
        let (g0, g1, g2) = match (track.g[i - 1], track.g[i], track.g[i + 1]) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => continue,
        };
        let (t0, t1, t2) = (track.times[i - 1], track.times[i], track.times[i + 1]);
        let gdot = centered(g0, g1, g2, t0, t1, t2);
        let mdot = centered(track.m[i - 1], track.m[i], track.m[i + 1], t0, t1, t2);
        let ndot = centered(track.n[i - 1], track.n[i], track.n[i + 1], t0, t1, t2);
        let mn = track.m[i] * track.n[i];
        out.times.push(t1);
        out.g_res.push(gdot - (0.5 * g1 * g1 - k2));
        out.m_res.push(mdot + 0.5 * mn + k2);
        out.n_res.push(-ndot + 0.5 * mn + k2);
    }
    Ok(out)
}

/// True iff |q(t) - x0| <= sqrt(E0/2) * t + 1e-8 at every sample (unwrapped).
pub fn displacement_check(track: &CharacteristicTrack, e0: f64) -> bool {
    let speed = (0.5 * e0).sqrt();
    track
        .times
        .iter()
        .zip(&track.q_unwrapped)
        .all(|(&t, &q)| (q - track.x0).abs() <= speed * t + 1e-8)
}
