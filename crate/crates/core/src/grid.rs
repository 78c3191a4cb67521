//! Uniform periodic grids, sampled complex fields and spectral calculus.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` equispaced nodes `x_j = -L + j h` on the periodic box `[-L, L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive and finite, got {half_width}"
            )));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 16, got {n_points}"
            )));
        }
        Ok(Self {
            half_width,
            n_points,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.node(j))
    }

    /// Angular wavenumbers in FFT order; the Nyquist mode is negative.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = PI / self.half_width;
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as f64 * dk
                } else {
                    (j as f64 - n as f64) * dk
                }
            })
            .collect()
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// Forward and inverse plans of one length.
#[derive(Clone)]
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
        Self {
            forward: p.plan_fft_forward(n),
            inverse: p.plan_fft_inverse(n),
            n,
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }
}

/// How non-periodic samples are differentiated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeRule {
    /// Plain Fourier multiplier; exact for band-limited periodic data.
    Periodic,
    /// Fourier multiplier after removing the endpoint jumps of the first
    /// few derivatives with a localized polynomial blend.
    EndpointCorrected,
}

/// Complex samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        Self { grid, values }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(1.0.into(), other, 1.0.into())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0.into(), other, (-1.0).into())
    }

    /// Real inner product `h Re Σ u conj(v)`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| (u * v.conj()).re)
            .sum();
        Ok(s * self.grid.spacing())
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        (s * self.grid.spacing()).sqrt()
    }

    /// Periodic spectral H¹ norm.
    pub fn norm_h1(&self) -> f64 {
        let spec = self.spectrum();
        let k = self.grid.wavenumbers();
        let n = self.grid.len() as f64;
        let s: f64 = spec
            .iter()
            .zip(&k)
            .map(|(z, k)| (1.0 + k * k) * z.norm_sqr())
            .sum();
        (s * self.grid.spacing() / n).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus over nodes with `|x| <= fraction·L`.
    pub fn interior_max_abs(&self, fraction: f64) -> f64 {
        let lim = fraction * self.grid.half_width();
        self.grid
            .nodes()
            .zip(&self.values)
            .filter(|(x, _)| x.abs() <= lim)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        FftPair::new(self.grid.len()).forward(&mut buf);
        buf
    }

    pub fn from_spectrum(grid: Grid, mut spec: Vec<Complex64>) -> Result<Self> {
        FftPair::new(grid.len()).inverse(&mut spec);
        Self::new(grid, spec)
    }

    /// Band-limited translate `u(x - y)`.
    pub fn fourier_shift(&self, y: f64) -> Self {
        let mut spec = self.spectrum();
        for (z, k) in spec.iter_mut().zip(self.grid.wavenumbers()) {
            *z *= Complex64::from_polar(1.0, -k * y);
        }
        let fft = FftPair::new(self.grid.len());
        fft.inverse(&mut spec);
        Self {
            grid: self.grid,
            values: spec,
        }
    }

    pub fn derivative(&self, order: u32) -> Self {
        let d = derivatives(self, DerivativeRule::EndpointCorrected);
        match order {
            0 => self.clone(),
            1 => d.0,
            2 => d.1,
            _ => periodic_derivative(self, order),
        }
    }
}

/// Spectral derivative `(ik)^m`; odd orders drop the Nyquist mode.
pub fn periodic_derivative(u: &ComplexField, order: u32) -> ComplexField {
    let grid = *u.grid();
    let n = grid.len();
    let mut spec = u.spectrum();
    let ks = grid.wavenumbers();
    for (j, (z, k)) in spec.iter_mut().zip(&ks).enumerate() {
        if order % 2 == 1 && j == n / 2 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= Complex64::new(0.0, *k).powu(order);
        }
    }
    FftPair::new(n).inverse(&mut spec);
    ComplexField::from_parts_unchecked(grid, spec)
}

/// First and second derivatives under the chosen rule.
pub fn derivatives(u: &ComplexField, rule: DerivativeRule) -> (ComplexField, ComplexField) {
    match rule {
        DerivativeRule::Periodic => (periodic_derivative(u, 1), periodic_derivative(u, 2)),
        DerivativeRule::EndpointCorrected => corrected_derivatives(u),
    }
}

const JUMP_ORDERS: usize = 6;
const STENCIL: usize = 13;
const BLEND_MID: f64 = 0.55;
const BLEND_RATE: f64 = 16.0;

/// Finite-difference weights of Fornberg for derivatives `0..=m` at `z`.
pub fn fornberg_weights(z: f64, nodes: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

fn endpoint_weights() -> &'static (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    static W: OnceLock<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = OnceLock::new();
    W.get_or_init(|| {
        let left: Vec<f64> = (0..STENCIL).map(|j| j as f64).collect();
        let right: Vec<f64> = (0..STENCIL).map(|j| j as f64 - STENCIL as f64).collect();
        (
            fornberg_weights(0.0, &left, JUMP_ORDERS - 1),
            fornberg_weights(0.0, &right, JUMP_ORDERS - 1),
        )
    })
}

/// Smooth step in `r`: 1 at `r = 0`, 0 at `r = 1` (both to far below
/// rounding), with a Gaussian-sharp spectrum. Returns the value and the
/// first two `r`-derivatives.
fn blend(r: f64) -> [f64; 3] {
    let z = BLEND_RATE * (r - BLEND_MID);
    let g = (-z * z).exp() / std::f64::consts::PI.sqrt();
    [
        0.5 * libm::erfc(z),
        -BLEND_RATE * g,
        BLEND_RATE * BLEND_RATE * 2.0 * z * g,
    ]
}

fn corrected_derivatives(u: &ComplexField) -> (ComplexField, ComplexField) {
    let grid = *u.grid();
    let n = grid.len();
    let h = grid.spacing();
    let l = grid.half_width();
    let v = u.values();
    if n < 4 * STENCIL {
        return derivatives(u, DerivativeRule::Periodic);
    }
    let (wl, wr) = endpoint_weights();
    let mut jumps = [Complex64::new(0.0, 0.0); JUMP_ORDERS];
    for (m, jm) in jumps.iter_mut().enumerate() {
        let left: Complex64 = (0..STENCIL).map(|j| v[j] * wl[m][j]).sum();
        let right: Complex64 = (0..STENCIL).map(|j| v[n - STENCIL + j] * wr[m][j]).sum();
        *jm = (right - left) / h.powi(m as i32);
    }
    let delta = (64.0 * h).max(2.0).min(l / 4.0);
    // q(x) = blend((L - x)/delta) * T(x - L), T(s) = Σ J_m s^m / m!
    let mut q = vec![[Complex64::new(0.0, 0.0); 3]; n];
    for (j, qj) in q.iter_mut().enumerate() {
        let x = grid.node(j);
        let r = (l - x) / delta;
        if r >= 1.0 {
            continue;
        }
        let eta = blend(r);
        let s = x - l;
        let mut t = [Complex64::new(0.0, 0.0); 3];
        for (d, td) in t.iter_mut().enumerate() {
            let mut fact = 1.0;
            for (m, jm) in jumps.iter().enumerate().skip(d) {
                if m > d {
                    fact *= (m - d) as f64;
                }
                *td += jm * s.powi((m - d) as i32) / fact;
            }
        }
        let (e0, e1, e2) = (eta[0], -eta[1] / delta, eta[2] / (delta * delta));
        qj[0] = t[0] * e0;
        qj[1] = t[0] * e1 + t[1] * e0;
        qj[2] = t[0] * e2 + t[1] * e1 * 2.0 + t[2] * e0;
    }
    let smooth: Vec<Complex64> = v.iter().zip(&q).map(|(a, b)| a - b[0]).collect();
    let g = ComplexField::from_parts_unchecked(grid, smooth);
    let d1 = periodic_derivative(&g, 1);
    let d2 = periodic_derivative(&g, 2);
    let d1 = d1.values().iter().zip(&q).map(|(a, b)| a + b[1]).collect();
    let d2 = d2.values().iter().zip(&q).map(|(a, b)| a + b[2]).collect();
    (
        ComplexField::from_parts_unchecked(grid, d1),
        ComplexField::from_parts_unchecked(grid, d2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(10.0, 100).is_err());
        assert!(Grid::new(10.0, 8).is_err());
        assert!(Grid::new(-1.0, 64).is_err());
        let g = Grid::new(10.0, 64).unwrap();
        assert_relative_eq!(g.spacing() * 64.0, 20.0);
        assert_eq!(g.node(0), -10.0);
    }

    #[test]
    fn fornberg_matches_known_stencil() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_relative_eq!(w[1][0], -0.5);
        assert_relative_eq!(w[1][2], 0.5);
        assert_relative_eq!(w[2][1], -2.0);
    }

    #[test]
    fn corrected_derivative_of_nonperiodic_function() {
        let g = Grid::new(20.0, 1024).unwrap();
        let f = |x: f64| Complex64::new((1.0 + x * x).powf(-0.4), 0.3 * x);
        let u = ComplexField::from_fn(g, f).unwrap();
        let (d1, d2) = derivatives(&u, DerivativeRule::EndpointCorrected);
        let mut e1: f64 = 0.0;
        let mut e2: f64 = 0.0;
        for (j, x) in g.nodes().enumerate() {
            let a = 1.0 + x * x;
            let exact1 = Complex64::new(-0.8 * x * a.powf(-1.4), 0.3);
            let exact2 = Complex64::new(-0.8 * a.powf(-1.4) + 2.24 * x * x * a.powf(-2.4), 0.0);
            if x.abs() < 15.0 {
                e1 = e1.max((d1.values()[j] - exact1).norm());
                e2 = e2.max((d2.values()[j] - exact2).norm());
            }
        }
        assert!(e1 < 1e-8, "first derivative error {e1}");
        assert!(e2 < 1e-7, "second derivative error {e2}");
        let naive = periodic_derivative(&u, 1);
        let en = (naive.values()[g.len() / 2] - Complex64::new(0.0, 0.3)).norm();
        assert!(en > 1e-4);
    }

    #[test]
    fn shift_is_unitary_and_exact_on_trig() {
        let g = Grid::new(PI, 64).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 3.0 * x)).unwrap();
        let s = u.fourier_shift(0.37);
        for (x, z) in g.nodes().zip(s.values()) {
            assert!((z - Complex64::from_polar(1.0, 3.0 * (x - 0.37))).norm() < 1e-12);
        }
        assert_relative_eq!(s.norm_l2(), u.norm_l2(), max_relative = 1e-14);
    }
}
