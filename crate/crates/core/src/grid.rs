//! Uniform periodic grid on the unit circle with spectral transforms.
//!
//! Fourier convention: f(x) = sum_k c_k exp(2*pi*i*k*x) on the unit-length
//! domain, wavenumbers k = -n/2 .. n/2-1. Coefficients are stored in FFT
//! order (k >= 0 first, then negative k; the Nyquist slot n/2 holds k = -n/2).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::Error;

const TWO_PI: f64 = 2.0 * PI;

struct GridInner {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Uniform grid of n nodes x_j = j/n on the circle R/Z.
#[derive(Clone)]
pub struct PeriodicGrid {
    inner: Arc<GridInner>,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.len()).finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n
    }
}

impl PeriodicGrid {
    /// Build a grid with `n` nodes. `n` must be a power of two and >= 16.
    pub fn new(n: usize) -> Result<Self, Error> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGridSize(n));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner { n, fwd, inv }),
        })
    }

    pub fn len(&self) -> usize {
        self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing, exactly 1/n.
    pub fn dx(&self) -> f64 {
        1.0 / self.inner.n as f64
    }

    /// Position of node `j`, exactly j/n.
    pub fn node(&self, j: usize) -> f64 {
        debug_assert!(j < self.inner.n);
        j as f64 / self.inner.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.inner.n).map(move |j| self.node(j))
    }

    /// Integer wavenumber stored at coefficient slot `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.inner.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Sample a function at the grid nodes.
    pub fn field_from_fn(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        let values = self.nodes().map(f).collect();
        PeriodicField {
            grid: self.clone(),
            values,
        }
    }

    pub fn zeros(&self) -> PeriodicField {
        PeriodicField {
            grid: self.clone(),
            values: vec![0.0; self.inner.n],
        }
    }

    pub fn constant(&self, c: f64) -> PeriodicField {
        PeriodicField {
            grid: self.clone(),
            values: vec![c; self.inner.n],
        }
    }
}

/// Real samples of a function on the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

fn assert_same_grid(a: &PeriodicGrid, b: &PeriodicGrid) {
    assert_eq!(a.len(), b.len(), "fields combine only on identical grids");
}

impl PeriodicField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_same_grid(&self.grid, &other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// a + s*b, the RK4 stage update.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        self.zip_with(other, |a, b| a + s * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Minimum sample value and the node position where it is attained.
    pub fn min_value_location(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut jmin = 0;
        for (j, &v) in self.values.iter().enumerate() {
            if v < min {
                min = v;
                jmin = j;
            }
        }
        (min, self.grid.node(jmin))
    }

    /// Forward discrete Fourier transform.
    pub fn to_spectrum(&self) -> Spectrum {
        let n = self.grid.len();
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.grid.inner.fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        Spectrum {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }

    /// Spectral derivative. The Nyquist mode is zeroed.
    pub fn derivative(&self) -> PeriodicField {
        let mut s = self.to_spectrum();
        let n = s.grid.len();
        for i in 0..n {
            let k = s.grid.wavenumber(i);
            if k.unsigned_abs() as usize == n / 2 {
                s.coeffs[i] = Complex64::new(0.0, 0.0);
            } else {
                s.coeffs[i] *= Complex64::new(0.0, TWO_PI * k as f64);
            }
        }
        s.to_field()
    }

    /// Squared H1 norm, sum_k (1 + 4 pi^2 k^2) |c_k|^2.
    pub fn h1_norm_sq(&self) -> f64 {
        let s = self.to_spectrum();
        let n = s.grid.len();
        let mut total = 0.0;
        for i in 0..n {
            let k = s.grid.wavenumber(i) as f64;
            total += (1.0 + TWO_PI * TWO_PI * k * k) * s.coeffs[i].norm_sqr();
        }
        total
    }

    /// Trigonometric interpolation at an arbitrary position (reduced mod 1).
    pub fn interpolate(&self, x: f64) -> f64 {
        let x = x - x.floor();
        let s = self.to_spectrum();
        let n = s.grid.len();
        let mut val = 0.0;
        for i in 0..n {
            let k = s.grid.wavenumber(i);
            if k.unsigned_abs() as usize == n / 2 {
                // Nyquist as a pure cosine keeps the interpolant real and
                // exact at the nodes.
                val += s.coeffs[i].re * (TWO_PI * k as f64 * x).cos();
            } else {
                let phase = TWO_PI * k as f64 * x;
                let e = Complex64::new(phase.cos(), phase.sin());
                val += (s.coeffs[i] * e).re;
            }
        }
        val
    }

    /// Zero all modes with |k| > n/3 (2/3 rule).
    pub fn dealias(&self) -> PeriodicField {
        self.to_spectrum().dealias().to_field()
    }
}

/// Complex Fourier coefficients of a field, in FFT order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient for integer wavenumber `k` in -n/2 .. n/2-1.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.grid.len() as i64;
        debug_assert!(k >= -n / 2 && k < n / 2);
        let i = if k >= 0 { k } else { k + n };
        self.coeffs[i as usize]
    }

    pub fn coeff_mut(&mut self, k: i64) -> &mut Complex64 {
        let n = self.grid.len() as i64;
        debug_assert!(k >= -n / 2 && k < n / 2);
        let i = if k >= 0 { k } else { k + n };
        &mut self.coeffs[i as usize]
    }

    /// Inverse transform back to physical samples.
    pub fn to_field(&self) -> PeriodicField {
        let mut buf = self.coeffs.clone();
        self.grid.inner.inv.process(&mut buf);
        let values = buf.iter().map(|c| c.re).collect();
        PeriodicField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Zero all modes with |k| > n/3 (2/3 rule). Idempotent projection.
    pub fn dealias(&self) -> Spectrum {
        let n = self.grid.len();
        let mut coeffs = self.coeffs.clone();
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = self.grid.wavenumber(i);
            if 3 * k.unsigned_abs() as usize > n {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Apply a real multiplier per wavenumber.
    pub fn apply_multiplier(&self, m: impl Fn(i64) -> Complex64) -> Spectrum {
        let mut coeffs = self.coeffs.clone();
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c *= m(self.grid.wavenumber(i));
        }
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }
}
