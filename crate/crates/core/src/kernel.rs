//! Periodic Helmholtz inverse (1 - d^2/dx^2)^-1 as convolution with its
//! Green's function p, the derivative convolution, and the one-sided split
//! kernels p_plus / p_minus with their operator identities
//! P = P+ + P- and P_x = P- - P+.
//!
//! The default convolution path is spectral: p and the split kernels have
//! closed-form Fourier coefficients (1/(1+4pi^2k^2) and 1/(2(1 -+ 2pi i k))),
//! so the identities hold to machine precision mode by mode. Quadrature
//! paths over the sampled kernels exist for cross-validation only.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::grid::{PeriodicField, PeriodicGrid};

const TWO_PI: f64 = 2.0 * PI;

/// Green's function p(x) = cosh(x - [x] - 1/2) / (2 sinh 1/2).
pub fn green_value(x: f64) -> f64 {
    let z = x - x.floor();
    (z - 0.5).cosh() / (2.0 * (0.5f64).sinh())
}

/// One-sided split of p on [0,1): p+-(z) = exp(-+(z - 1/2)) / (4 sinh 1/2).
///
/// These satisfy p+ + p- = p pointwise and carry the operator identities
/// P = P+ + P- and P_x = P- - P+ against the periodic Green's function.
pub fn split_green_values(z: f64) -> (f64, f64) {
    debug_assert!((0.0..1.0).contains(&z));
    let denom = 4.0 * (0.5f64).sinh();
    let p_plus = (-(z - 0.5)).exp() / denom;
    let p_minus = (z - 0.5).exp() / denom;
    (p_plus, p_minus)
}

/// Exact integral of p over [z0, z1] within one period (0 <= z0 <= z1 <= 1).
pub fn green_cell_integral(z0: f64, z1: f64) -> f64 {
    ((z1 - 0.5).sinh() - (z0 - 0.5).sinh()) / (2.0 * (0.5f64).sinh())
}

/// Sampled kernels on the grid offsets, for the quadrature paths.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: PeriodicGrid,
    /// p at node offsets j/n.
    pub p_values: Vec<f64>,
    /// p+ at midpoint offsets (j + 1/2)/n.
    pub p_plus_values: Vec<f64>,
    /// p- at midpoint offsets (j + 1/2)/n.
    pub p_minus_values: Vec<f64>,
}

impl KernelTable {
    pub fn new(grid: PeriodicGrid) -> Self {
        let n = grid.len();
        let p_values = (0..n).map(|j| green_value(grid.node(j))).collect();
        let mut p_plus_values = Vec::with_capacity(n);
        let mut p_minus_values = Vec::with_capacity(n);
        for j in 0..n {
            let z = (j as f64 + 0.5) / n as f64;
            let (pp, pm) = split_green_values(z);
            p_plus_values.push(pp);
            p_minus_values.push(pm);
        }
        Self {
            grid,
            p_values,
            p_plus_values,
            p_minus_values,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Trapezoid-rule convolution with p (periodic, so a plain node sum).
    pub fn conv_p_quadrature(&self, f: &PeriodicField) -> PeriodicField {
        let n = self.grid.len();
        assert_eq!(f.grid().len(), n);
        let vals = f.values();
        let out = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += self.p_values[j] * vals[(i + n - j) % n];
                }
                acc / n as f64
            })
            .collect();
        PeriodicField::new(self.grid.clone(), out)
    }

    /// Midpoint-offset quadrature convolution with the split kernels.
    ///
    /// The kernels jump at z = 0, so the quadrature nodes sit at cell
    /// midpoints and f is resampled on the half-offset grid spectrally.
    pub fn conv_split_quadrature(&self, f: &PeriodicField) -> (PeriodicField, PeriodicField) {
        let n = self.grid.len();
        assert_eq!(f.grid().len(), n);
        // f at x_j - 1/(2n): shift the spectrum by -dx/2.
        let shift = f.to_spectrum().apply_multiplier(|k| {
            let phase = -TWO_PI * k as f64 * 0.5 / n as f64;
            Complex64::new(phase.cos(), phase.sin())
        });
        let fh = shift.to_field();
        let fv = fh.values();
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for i in 0..n {
            let mut ap = 0.0;
            let mut am = 0.0;
            for m in 0..n {
                // f(x_i - (m + 1/2)/n) = fh[(i - m) mod n]
                let v = fv[(i + n - m) % n];
                ap += self.p_plus_values[m] * v;
                am += self.p_minus_values[m] * v;
            }
            plus.push(ap / n as f64);
            minus.push(am / n as f64);
        }
        (
            PeriodicField::new(self.grid.clone(), plus),
            PeriodicField::new(self.grid.clone(), minus),
        )
    }
}

/// Spectral convolution with p: multiplier 1/(1 + 4 pi^2 k^2).
pub fn conv_p(f: &PeriodicField) -> PeriodicField {
    f.to_spectrum()
        .apply_multiplier(|k| {
            let kk = TWO_PI * k as f64;
            Complex64::new(1.0 / (1.0 + kk * kk), 0.0)
        })
        .to_field()
}

/// Spectral convolution with p_x: multiplier 2 pi i k / (1 + 4 pi^2 k^2).
/// The Nyquist mode is zeroed, matching `derivative`.
pub fn conv_dp(f: &PeriodicField) -> PeriodicField {
    let n = f.grid().len();
    f.to_spectrum()
        .apply_multiplier(|k| {
            if k.unsigned_abs() as usize == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            let kk = TWO_PI * k as f64;
            Complex64::new(0.0, kk / (1.0 + kk * kk))
        })
        .to_field()
}

/// Multiplier for P+ (sign = +1) or P- (sign = -1); at the Nyquist mode the
/// imaginary part is dropped so real fields stay real and the sum/difference
/// identities against conv_p / conv_dp are preserved.
fn split_multiplier(n: usize, sign: f64) -> impl Fn(i64) -> Complex64 {
    move |k| {
        let kk = TWO_PI * k as f64;
        let denom = 2.0 * (1.0 + kk * kk);
        if k.unsigned_abs() as usize == n / 2 {
            Complex64::new(1.0 / denom, 0.0)
        } else {
            // 1 / (2 (1 + sign * 2 pi i k))
            Complex64::new(1.0 / denom, -sign * kk / denom)
        }
    }
}

/// Spectral convolution with the split kernel p+.
pub fn conv_p_plus(f: &PeriodicField) -> PeriodicField {
    let n = f.grid().len();
    f.to_spectrum().apply_multiplier(split_multiplier(n, 1.0)).to_field()
}

/// Spectral convolution with the split kernel p-.
pub fn conv_p_minus(f: &PeriodicField) -> PeriodicField {
    let n = f.grid().len();
    f.to_spectrum().apply_multiplier(split_multiplier(n, -1.0)).to_field()
}

/// Max-norm residual of the identity d^2/dx^2 (p*f) = p*f - f.
pub fn helmholtz_residual(f: &PeriodicField) -> f64 {
    let pf = conv_p(f);
    let second = pf.derivative().derivative();
    pf.sub(&second).sub(f).max_abs()
}

/// Literal one-sided operators as whole-line formulas restricted to [0,1):
/// P+*f(x) = (1/2) e^-x int_0^x e^y f(y) dy,
/// P-*f(x) = (1/2) e^x  int_x^1 e^-y f(y) dy,
/// evaluated by trapezoid quadrature on the grid. These lack the periodic
/// normalization and do not sum to p*f; they are kept so the selftest can
/// report both versions' identity residuals side by side.
pub fn conv_split_literal(f: &PeriodicField) -> (PeriodicField, PeriodicField) {
    let g = f.grid();
    let n = g.len();
    let h = g.dx();
    let vals = f.values();
    // cumulative trapezoid of e^y f(y) from 0 to x_i
    let mut cum_plus = vec![0.0; n + 1];
    let mut cum_minus = vec![0.0; n + 1];
    for j in 0..n {
        let y0 = g.node(j);
        let y1 = y0 + h;
        let f1 = if j + 1 < n { vals[j + 1] } else { vals[0] };
        cum_plus[j + 1] =
            cum_plus[j] + 0.5 * h * (y0.exp() * vals[j] + y1.exp() * f1);
        cum_minus[j + 1] =
            cum_minus[j] + 0.5 * h * ((-y0).exp() * vals[j] + (-y1).exp() * f1);
    }
    let total_minus = cum_minus[n];
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for i in 0..n {
        let x = g.node(i);
        plus.push(0.5 * (-x).exp() * cum_plus[i]);
        minus.push(0.5 * x.exp() * (total_minus - cum_minus[i]));
    }
    (
        PeriodicField::new(g.clone(), plus),
        PeriodicField::new(g.clone(), minus),
    )
}
