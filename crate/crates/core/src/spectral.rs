//! Periodic grid, discrete Fourier analysis/synthesis, dealiased products,
//! spectral derivatives and coefficient-decay diagnostics.
//!
//! Coefficients follow the convention
//! `c(k) = (1/2pi) int f(x) exp(-ikx) dx`, so that
//! `f(x) = sum_k c(k) exp(ikx)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::fitting::linear_fit;

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_forward(n)
}

fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_inverse(n)
}

/// Equispaced grid on `[-pi, pi)` with an even number of points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicGrid {
    n: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Domain(format!(
                "grid size must be even and >= 8, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `2pi/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// `x_j = -pi + 2pi j / n`.
    pub fn point(&self, j: usize) -> f64 {
        -PI + 2.0 * PI * j as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Index of the grid point closest to `x` (mod 2pi), together with the
    /// snapping error.
    pub fn nearest_index(&self, x: f64) -> (usize, f64) {
        let h = self.spacing();
        let t = (x + PI) / h;
        let j = t.round();
        let err = (t - j) * h;
        let idx = (j as i64).rem_euclid(self.n as i64) as usize;
        (idx, err)
    }
}

/// A real 2pi-periodic function held as grid samples together with its
/// Fourier coefficients (kept consistent).
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: PeriodicGrid,
    values: Vec<f64>,
    /// FFT bin order: bin `i` holds `c(k)` with `k = i` for `i <= n/2` and
    /// `k = i - n` otherwise.
    coeffs: Vec<Complex64>,
}

/// Forward transform: grid values to coefficients under the `1/2pi`
/// convention.
pub fn analyze(grid: &PeriodicGrid, values: &[f64]) -> Result<Vec<Complex64>> {
    let n = grid.len();
    if values.len() != n {
        return Err(Error::Domain(format!(
            "value length {} does not match grid size {n}",
            values.len()
        )));
    }
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan_forward(n).process(&mut buf);
    // x_0 = -pi, so bin k carries a phase (-1)^k relative to the plain DFT.
    for (i, c) in buf.iter_mut().enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *c *= sign / n as f64;
    }
    Ok(buf)
}

/// Inverse transform: coefficients (FFT bin order) to grid values.
pub fn synthesize(grid: &PeriodicGrid, coeffs: &[Complex64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if coeffs.len() != n {
        return Err(Error::Domain(format!(
            "coefficient length {} does not match grid size {n}",
            coeffs.len()
        )));
    }
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| if i % 2 == 0 { c } else { -c })
        .collect();
    plan_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|c| c.re).collect())
}

impl SpectralField {
    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        let coeffs = analyze(&grid, &values)?;
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    pub fn from_coeffs(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        let values = synthesize(&grid, &coeffs)?;
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|j| f(grid.point(j))).collect();
        Self::from_values(grid, values).expect("lengths match by construction")
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coefficients in FFT bin order.
    pub fn coeff_bins(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `c(k)` for `|k| <= n/2`; `k = -n/2` and `k = n/2` share the Nyquist bin.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.grid.len() as i64;
        assert!(k.abs() <= n / 2, "mode {k} not representable on grid");
        let bin = k.rem_euclid(n) as usize;
        self.coeffs[bin]
    }

    /// Trigonometric interpolation at an arbitrary point.
    pub fn eval_at(&self, x: f64) -> f64 {
        let n = self.grid.len();
        let half = n / 2;
        let mut s = self.coeffs[0].re;
        for k in 1..half {
            let e = Complex64::from_polar(1.0, k as f64 * x);
            s += 2.0 * (self.coeffs[k] * e).re;
        }
        // Nyquist bin is a pure cosine mode.
        s += self.coeffs[half].re * (half as f64 * x).cos();
        s
    }

    /// Spatial mean `(1/2pi) int f dx` (exactly the k = 0 coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &v| a.min(v))
    }

    /// Subtracts the mean (used for zero-mean constraints with homogeneous
    /// symbols).
    pub fn project_zero_mean(&self) -> Self {
        let m = self.mean();
        let values = self.values.iter().map(|&v| v - m).collect();
        Self::from_values(self.grid, values).unwrap()
    }

    pub fn scale(&self, a: f64) -> Self {
        let values = self.values.iter().map(|&v| a * v).collect();
        Self::from_values(self.grid, values).unwrap()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a + b)
            .collect();
        Self::from_values(self.grid, values).unwrap()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a - b)
            .collect();
        Self::from_values(self.grid, values).unwrap()
    }

    pub fn add_scalar(&self, a: f64) -> Self {
        let values = self.values.iter().map(|&v| v + a).collect();
        Self::from_values(self.grid, values).unwrap()
    }

    /// Exact band-limited resampling onto a finer grid (`m >= n`).
    pub fn upsample(&self, m: usize) -> Result<Self> {
        let n = self.grid.len();
        if m < n || m % 2 != 0 {
            return Err(Error::Domain(format!("cannot upsample n={n} to m={m}")));
        }
        if m == n {
            return Ok(self.clone());
        }
        let fine = PeriodicGrid::new(m)?;
        let mut c = vec![Complex64::new(0.0, 0.0); m];
        let half = n / 2;
        c[0] = self.coeffs[0];
        for k in 1..half {
            c[k] = self.coeffs[k];
            c[m - k] = self.coeffs[n - k];
        }
        // Split the Nyquist cosine mode across +-n/2 on the finer grid.
        let ny = self.coeffs[half];
        c[half] = 0.5 * ny;
        c[m - half] = 0.5 * ny;
        Self::from_coeffs(fine, c)
    }

    /// Spectral translation `f(x) -> f(x - delta)`.
    pub fn shift(&self, delta: f64) -> Self {
        let n = self.grid.len();
        let half = n / 2;
        let mut c = self.coeffs.clone();
        for (i, ci) in c.iter_mut().enumerate() {
            let k = if i <= half { i as i64 } else { i as i64 - n as i64 };
            if i == half {
                // Keep the Nyquist mode a real cosine: only safe for shifts by
                // a grid multiple; otherwise it is attenuated.
                *ci *= (half as f64 * delta).cos();
            } else {
                *ci *= Complex64::from_polar(1.0, -(k as f64) * delta);
            }
        }
        Self::from_coeffs(self.grid, c).unwrap()
    }

    /// Spectral derivative; the Nyquist mode is zeroed.
    pub fn derivative(&self) -> Self {
        let n = self.grid.len();
        let half = n / 2;
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for (i, &ci) in self.coeffs.iter().enumerate() {
            if i == half {
                continue;
            }
            let k = if i < half { i as i64 } else { i as i64 - n as i64 };
            c[i] = Complex64::new(0.0, k as f64) * ci;
        }
        Self::from_coeffs(self.grid, c).unwrap()
    }
}

/// Pointwise product with 3/2-rule zero padding: the retained modes
/// `|k| <= n/2` carry no aliasing from the quadratic interaction.  The
/// Nyquist mode of the result is zeroed (mode `n` of the true product folds
/// onto it on the padded grid).
pub fn multiply_dealiased(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.grid != g.grid {
        return Err(Error::Domain("grids differ in multiply_dealiased".into()));
    }
    let n = f.grid.len();
    let m = 3 * n / 2;
    let ff = f.upsample(m)?;
    let gf = g.upsample(m)?;
    let prod: Vec<f64> = ff
        .values
        .iter()
        .zip(&gf.values)
        .map(|(&a, &b)| a * b)
        .collect();
    let fine = PeriodicGrid::new(m)?;
    let cp = analyze(&fine, &prod)?;
    let half = n / 2;
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    c[0] = cp[0];
    for k in 1..half {
        c[k] = cp[k];
        c[n - k] = cp[m - k];
    }
    SpectralField::from_coeffs(f.grid, c)
}

/// Outcome of the coefficient-decay diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayRate {
    /// Fitted algebraic slope of `log |c(k)|` against `log k`.
    Algebraic { slope: f64, points: usize },
    /// Every coefficient in the fit window sits below the floor.
    ResolvedToMachinePrecision,
}

const DECAY_FLOOR: f64 = 1e-14;

/// Least-squares slope of `log |c(k)|` vs `log k` over `k in [n/8, n/4]`,
/// ignoring coefficients below `1e-14`.
pub fn decay_rate(f: &SpectralField) -> Result<DecayRate> {
    let n = f.grid.len();
    if f.max_abs() == 0.0 {
        return Err(Error::Domain("decay_rate of the zero field".into()));
    }
    let lo = (n / 8).max(1);
    let hi = n / 4;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in lo..=hi {
        let a = f.coeff(k as i64).norm();
        if a > DECAY_FLOOR {
            xs.push((k as f64).ln());
            ys.push(a.ln());
        }
    }
    if xs.len() < 2 {
        return Ok(DecayRate::ResolvedToMachinePrecision);
    }
    let (slope, _, _) = linear_fit(&xs, &ys);
    Ok(DecayRate::Algebraic {
        slope,
        points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let f = SpectralField::from_fn(grid(16), |x| x.cos());
        assert_abs_diff_eq!(f.coeff(1).re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f.coeff(-1).re, 0.5, epsilon = 1e-14);
        for k in 0..=8i64 {
            if k != 1 {
                assert!(f.coeff(k).norm() <= 1e-14, "stray mode {k}");
            }
        }
    }

    #[test]
    fn constant_is_zero_mode() {
        let f = SpectralField::from_fn(grid(16), |_| 1.0);
        assert_abs_diff_eq!(f.coeff(0).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.mean(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn linear_combination_modes() {
        let f = SpectralField::from_fn(grid(32), |x| (3.0 * x).cos() + 2.0 * x.sin());
        assert_abs_diff_eq!(f.coeff(3).re, 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(f.coeff(1).im, -1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(f.coeff(1).re, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn round_trip_identity() {
        let g = grid(64);
        let values: Vec<f64> = (0..64)
            .map(|j| (g.point(j) * 2.0).sin() + 0.3 * (g.point(j) * 5.0).cos())
            .collect();
        let f = SpectralField::from_values(g, values.clone()).unwrap();
        let back = synthesize(&g, f.coeff_bins()).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn reality_conjugate_symmetry() {
        let g = grid(32);
        let f = SpectralField::from_fn(g, |x| (2.0 * x).sin() + x.cos().powi(3));
        for k in 1..16i64 {
            let d = (f.coeff(-k) - f.coeff(k).conj()).norm();
            assert!(d <= 1e-14);
        }
    }

    #[test]
    fn dealiased_cosine_square() {
        let g = grid(16);
        let f = SpectralField::from_fn(g, |x| x.cos());
        let p = multiply_dealiased(&f, &f).unwrap();
        assert_abs_diff_eq!(p.coeff(0).re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p.coeff(2).re, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(p.coeff(-2).re, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn dealiased_identity_by_one() {
        let g = grid(32);
        let f = SpectralField::from_fn(g, |x| (3.0 * x).sin() + 0.2 * (7.0 * x).cos());
        let one = SpectralField::from_fn(g, |_| 1.0);
        let p = multiply_dealiased(&f, &one).unwrap();
        for (a, b) in p.values().iter().zip(f.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn dealiased_high_mode_does_not_fold() {
        let n = 32;
        let g = grid(n);
        let kh = (n / 2 - 1) as f64;
        let f = SpectralField::from_fn(g, |x| (kh * x).cos());
        let p = multiply_dealiased(&f, &f).unwrap();
        // cos^2 = 1/2 + cos(2 kh x)/2 and the high mode is unrepresentable.
        assert_abs_diff_eq!(p.coeff(0).re, 0.5, epsilon = 1e-13);
        for k in 1..=(n / 2) as i64 {
            assert!(
                p.coeff(k).norm() <= 1e-13,
                "aliased energy at mode {k}: {}",
                p.coeff(k).norm()
            );
        }
    }

    #[test]
    fn derivative_of_single_modes() {
        let g = grid(32);
        let s = SpectralField::from_fn(g, |x| x.sin());
        let ds = s.derivative();
        for j in 0..32 {
            assert_abs_diff_eq!(ds.values()[j], g.point(j).cos(), epsilon = 1e-12);
        }
        let c = SpectralField::from_fn(g, |_| 4.0);
        assert!(c.derivative().max_abs() <= 1e-13);
        let c2 = SpectralField::from_fn(g, |x| (2.0 * x).cos());
        let dc2 = c2.derivative();
        for j in 0..32 {
            assert_abs_diff_eq!(dc2.values()[j], -2.0 * (2.0 * g.point(j)).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn decay_rate_matches_constructed_spectra() {
        let n = 256;
        let g = grid(n);
        for (p, expect) in [(1.0, -1.0), (3.0, -3.0)] {
            let mut c = vec![Complex64::new(0.0, 0.0); n];
            for k in 1..n / 2 {
                let a = (k as f64).powf(-p);
                c[k] = Complex64::new(0.5 * a, 0.0);
                c[n - k] = Complex64::new(0.5 * a, 0.0);
            }
            let f = SpectralField::from_coeffs(g, c).unwrap();
            match decay_rate(&f).unwrap() {
                DecayRate::Algebraic { slope, .. } => {
                    assert!((slope - expect).abs() <= 0.15, "slope {slope} vs {expect}");
                }
                other => panic!("unexpected verdict {other:?}"),
            }
        }
    }

    #[test]
    fn decay_rate_smooth_bump() {
        let g = grid(128);
        // coefficients e^{-2} I_k(2) drop below the floor well before the
        // fit window k in [16, 32]
        let f = SpectralField::from_fn(g, |x| (-2.0 * (1.0 - x.cos())).exp());
        assert_eq!(
            decay_rate(&f).unwrap(),
            DecayRate::ResolvedToMachinePrecision
        );
    }

    #[test]
    fn parseval_consistency_random_band_limited() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 128;
        let g = grid(n);
        for _ in 0..5 {
            let mut c = vec![Complex64::new(0.0, 0.0); n];
            c[0] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for k in 1..n / 3 {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                c[k] = z;
                c[n - k] = z.conj();
            }
            let f = SpectralField::from_coeffs(g, c).unwrap();
            let lhs: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.spacing();
            let rhs: f64 =
                2.0 * PI * f.coeff_bins().iter().map(|c| c.norm_sqr()).sum::<f64>();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn eval_at_matches_grid_and_interpolates() {
        let g = grid(32);
        let f = SpectralField::from_fn(g, |x| (2.0 * x).cos() - 0.4 * (5.0 * x).sin());
        for j in 0..32 {
            assert_abs_diff_eq!(f.eval_at(g.point(j)), f.values()[j], epsilon = 1e-12);
        }
        let x = 0.31;
        assert_abs_diff_eq!(
            f.eval_at(x),
            (2.0 * x).cos() - 0.4 * (5.0 * x).sin(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn length_mismatch_is_domain_error() {
        let g = grid(16);
        assert!(matches!(analyze(&g, &[0.0; 8]), Err(Error::Domain(_))));
    }
}
