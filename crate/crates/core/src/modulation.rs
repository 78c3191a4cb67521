//! Modulation parameters `(θ, y)` fitted by the orthogonality conditions
//!
//! ```text
//! F1 = ⟨u, i e^{iθ} φ_c(·−y)⟩ = 0,    F2 = ⟨u, e^{iθ} ∂_xφ_c(·−y)⟩ = 0,
//! ```
//!
//! the distance to the soliton orbit, and the functional
//! `A(u) = ⟨iu, e^{iθ} ψ(·−y)⟩`.
//!
//! Templates live in Fourier space: translating by `y` multiplies the
//! spectrum by `e^{−iky}`, and every pairing is a Parseval sum, so a fit
//! costs `O(N)` per Newton step after one transform of `u`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{density, integrate_density, integrate_pair};
use crate::grid::{ComplexField, Grid};
use crate::negative_direction::NegativeDirection;
use crate::profile::{sample, ClosedField, ProfileKind, WaveParams, Window};
use crate::quadrature::QuadratureSpec;

const I: Complex64 = Complex64::new(0.0, 1.0);
const MAX_NEWTON: usize = 50;
pub const NEWTON_TOL: f64 = 1e-10;
/// Largest relative change of `det J` still counted as inside the tube.
pub const TUBE_JACOBIAN_SPREAD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModulationFit {
    /// In `[0, 2π)`.
    pub theta: f64,
    pub y: f64,
    /// `max(|F1|, |F2|)`
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TubeDistance {
    pub distance: f64,
    pub fit: ModulationFit,
    /// False when the value comes from the lattice fallback alone.
    pub converged: bool,
}

/// Spectra of `φ_c` (and optionally `ψ`) on one grid.
#[derive(Clone, Debug)]
pub struct Templates {
    grid: Grid,
    k: Vec<f64>,
    phi: Vec<Complex64>,
    psi: Option<Vec<Complex64>>,
    /// Core width `1/(σc)` of the profile; caps a single step in `y`.
    width: f64,
    /// `det J` of the sampled soliton against itself.
    soliton_det: f64,
}

/// Spectrum of a field together with its grid, ready for pairings.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(u: &ComplexField) -> Self {
        Self {
            grid: *u.grid(),
            values: u.spectrum(),
        }
    }
}

fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl Templates {
    pub fn new(p: &WaveParams, g: &Grid) -> Self {
        let phi = sample(p, g, ProfileKind::Phi);
        let mut t = Self {
            grid: *g,
            k: g.wavenumbers(),
            phi: phi.spectrum(),
            psi: None,
            width: 1.0 / (p.sigma() * p.c()),
            soliton_det: f64::NAN,
        };
        t.soliton_det = determinant(&t.jacobian(&Spectrum::of(&phi), 0.0, 0.0));
        t
    }

    pub fn with_psi(mut self, psi: &ComplexField) -> Result<Self> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.psi = Some(psi.spectrum());
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check(&self, u: &Spectrum) -> Result<()> {
        if u.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `Σ û conj(e^{−iky} (ik)^m t̂)` for `m = 0, 1, 2`, scaled to pairings.
    fn moments(&self, u: &Spectrum, t: &[Complex64], y: f64) -> [Complex64; 3] {
        let n = self.k.len();
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        for (j, ((a, b), &k)) in u.values.iter().zip(t).zip(&self.k).enumerate() {
            let w = a * (Complex64::from_polar(1.0, -k * y) * b).conj();
            acc[0] += w;
            if j != n / 2 {
                acc[1] += w * Complex64::new(0.0, -k);
            }
            acc[2] += w * (-k * k);
        }
        let s = self.grid.spacing() / n as f64;
        acc.map(|z| z * s)
    }

    /// `⟨u, z e^{iθ} ∂_x^m φ(·−y)⟩` from precomputed moments.
    fn pairing(m: &[Complex64; 3], order: usize, z: Complex64, theta: f64) -> f64 {
        ((z * Complex64::from_polar(1.0, theta)).conj() * m[order]).re
    }

    /// `(F1, F2)`.
    pub fn residuals(&self, u: &Spectrum, theta: f64, y: f64) -> [f64; 2] {
        let m = self.moments(u, &self.phi, y);
        [Self::pairing(&m, 0, I, theta), Self::pairing(&m, 1, 1.0.into(), theta)]
    }

    /// `∂(F1, F2)/∂(θ, y)`, row-major.
    pub fn jacobian(&self, u: &Spectrum, theta: f64, y: f64) -> [[f64; 2]; 2] {
        let m = self.moments(u, &self.phi, y);
        let one = Complex64::new(1.0, 0.0);
        [
            [-Self::pairing(&m, 0, one, theta), -Self::pairing(&m, 1, I, theta)],
            [Self::pairing(&m, 1, I, theta), -Self::pairing(&m, 2, one, theta)],
        ]
    }

    /// `det J(u)/det J(φ_c) − 1` at the fit. The implicit modulation map
    /// is a contraction while this stays below [`TUBE_JACOBIAN_SPREAD`].
    pub fn jacobian_spread(&self, u: &Spectrum, fit: &ModulationFit) -> f64 {
        (determinant(&self.jacobian(u, fit.theta, fit.y)) / self.soliton_det - 1.0).abs()
    }

    /// Converged fit whose Jacobian is still close to the soliton's.
    pub fn in_tube(&self, u: &Spectrum, fit: &ModulationFit) -> bool {
        self.jacobian_spread(u, fit) <= TUBE_JACOBIAN_SPREAD
    }

    /// `⟨u, e^{iθ}φ_c(·−y)⟩`; positive on the near branch of the fit.
    pub fn alignment(&self, u: &Spectrum, theta: f64, y: f64) -> f64 {
        Self::pairing(&self.moments(u, &self.phi, y), 0, 1.0.into(), theta)
    }

    /// Spectral `H¹` norm of `u − e^{iθ}φ_c(·−y)`.
    pub fn distance(&self, u: &Spectrum, theta: f64, y: f64) -> f64 {
        let n = self.k.len();
        let e = Complex64::from_polar(1.0, theta);
        let s: f64 = u
            .values
            .iter()
            .zip(&self.phi)
            .zip(&self.k)
            .map(|((a, b), &k)| (1.0 + k * k) * (a - e * Complex64::from_polar(1.0, -k * y) * b).norm_sqr())
            .sum();
        (s * self.grid.spacing() / n as f64).sqrt()
    }

    /// `⟨iu, e^{iθ}ψ(·−y)⟩`.
    pub fn a_value(&self, u: &Spectrum, theta: f64, y: f64) -> Result<f64> {
        let psi = self
            .psi
            .as_ref()
            .ok_or_else(|| Error::Domain("templates carry no negative direction".into()))?;
        // ⟨iu, w⟩ = ⟨u, −i w⟩
        Ok(Self::pairing(&self.moments(u, psi, y), 0, -I, theta))
    }

    /// Solve `F1 = F2 = 0` from `init`.
    ///
    /// `(F1, −F2)` is the gradient of `G(θ, y) = ⟨u, e^{iθ}φ(·−y)⟩`, the
    /// cross term of the squared `L²` distance. For fixed `y`, `G` is largest
    /// at `θ = arg m(y)` with `m(y) = ⟨u, φ(·−y)⟩_ℂ`, where `F1 = 0`; what
    /// remains is a safeguarded Newton ascent of `|m(y)|` whose stationarity
    /// condition is `F2 = 0`. The initial phase is therefore not used.
    pub fn solve(&self, u: &Spectrum, init: (f64, f64)) -> Result<ModulationFit> {
        self.check(u)?;
        let cap = self.width;
        let eval = |y: f64| {
            let m = self.moments(u, &self.phi, y);
            // m'(y) = −m1, m''(y) = m2
            let (m0, d1, d2) = (m[0], -m[1], m[2]);
            let g = m0.norm();
            let gp = (m0.conj() * d1).re / g;
            let gpp = ((d1.conj() * d1).re + (m0.conj() * d2).re) / g - gp * gp / g;
            (m, g, gp, gpp)
        };
        let fit_at = |y: f64, m: &[Complex64; 3], it: usize| {
            let theta = m[0].arg();
            let f = [
                Self::pairing(m, 0, I, theta),
                Self::pairing(m, 1, 1.0.into(), theta),
            ];
            ModulationFit {
                theta: normalize_angle(theta),
                y,
                residual: f[0].abs().max(f[1].abs()),
                iterations: it,
            }
        };
        let mut y = init.1;
        let (mut m, mut g, mut gp, mut gpp) = eval(y);
        for it in 0..MAX_NEWTON {
            let fit = fit_at(y, &m, it);
            if fit.residual < NEWTON_TOL {
                return Ok(fit);
            }
            if !(g.is_finite() && g > 0.0) {
                break;
            }
            let mut dy = if gpp < 0.0 { -gp / gpp } else { gp.signum() * cap };
            dy = dy.clamp(-cap, cap);
            let mut accepted = false;
            for _ in 0..40 {
                let y1 = y + dy;
                let (m1, g1, gp1, gpp1) = eval(y1);
                if g1 >= g * (1.0 - 8.0 * f64::EPSILON) || dy.abs() < 1e-14 * (1.0 + y.abs()) {
                    (y, m, g, gp, gpp) = (y1, m1, g1, gp1, gpp1);
                    accepted = true;
                    break;
                }
                dy *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let fit = fit_at(y, &m, MAX_NEWTON);
        if fit.residual < NEWTON_TOL {
            return Ok(fit);
        }
        Err(Error::NoConvergence {
            iterations: MAX_NEWTON,
            residual: fit.residual,
        })
    }

    /// Fit on the near branch: a converged Newton solution with positive
    /// alignment.
    fn near_fit(&self, u: &Spectrum, init: (f64, f64)) -> Option<ModulationFit> {
        let fit = self.solve(u, init).ok()?;
        (self.alignment(u, fit.theta, fit.y) > 0.0).then_some(fit)
    }

    /// Distance to the orbit at the fitted parameters; falls back to a
    /// coarse `(θ, y)` lattice when Newton from `init` fails.
    pub fn tube_distance(&self, u: &Spectrum, init: (f64, f64)) -> Result<TubeDistance> {
        self.check(u)?;
        if let Some(fit) = self.near_fit(u, init) {
            return Ok(TubeDistance {
                distance: self.distance(u, fit.theta, fit.y),
                fit,
                converged: true,
            });
        }
        Ok(self.lattice(u))
    }

    /// Distances on an 8 × 64 lattice over `[0, 2π) × [−L, L)`; Newton
    /// from the closest points. Ties: distance, residual, `|y|`, `θ`.
    fn lattice(&self, u: &Spectrum) -> TubeDistance {
        let l = self.grid.half_width();
        let (nt, ny) = (8, 64);
        let mut pts: Vec<TubeDistance> = (0..nt)
            .flat_map(|a| (0..ny).map(move |b| (a, b)))
            .map(|(a, b)| {
                let theta = a as f64 * TAU / nt as f64;
                let y = -l + 2.0 * l * b as f64 / ny as f64;
                let f = self.residuals(u, theta, y);
                TubeDistance {
                    distance: self.distance(u, theta, y),
                    fit: ModulationFit {
                        theta,
                        y,
                        residual: f[0].abs().max(f[1].abs()),
                        iterations: 0,
                    },
                    converged: false,
                }
            })
            .collect();
        let key = |t: &TubeDistance| (t.distance, t.fit.residual, t.fit.y.abs(), t.fit.theta);
        let order = |a: &TubeDistance, b: &TubeDistance| {
            key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
        };
        pts.sort_by(order);
        pts.iter()
            .take(8)
            .filter_map(|s| self.near_fit(u, (s.fit.theta, s.fit.y)))
            .map(|fit| TubeDistance {
                distance: self.distance(u, fit.theta, fit.y),
                fit,
                converged: true,
            })
            .min_by(order)
            .unwrap_or(pts[0])
    }
}

pub fn residuals_f(u: &ComplexField, p: &WaveParams, theta: f64, y: f64) -> [f64; 2] {
    Templates::new(p, u.grid()).residuals(&Spectrum::of(u), theta, y)
}

pub fn solve_modulation(u: &ComplexField, p: &WaveParams, init: (f64, f64)) -> Result<ModulationFit> {
    Templates::new(p, u.grid()).solve(&Spectrum::of(u), init)
}

pub fn tube_distance(u: &ComplexField, p: &WaveParams) -> Result<TubeDistance> {
    Templates::new(p, u.grid()).tube_distance(&Spectrum::of(u), (0.0, 0.0))
}

/// `A(u)` at the fitted modulation parameters.
pub fn a_functional(u: &ComplexField, nd: &NegativeDirection) -> Result<f64> {
    let t = Templates::new(&nd.params, u.grid()).with_psi(&nd.psi)?;
    let s = Spectrum::of(u);
    let fit = t.solve(&s, (0.0, 0.0))?;
    t.a_value(&s, fit.theta, fit.y)
}

/// The soliton Jacobian `∂(F1, F2)/∂(θ, y)` from whole-line integrals:
/// `[[−‖φ‖², −2P], [2P, ‖∂_xφ‖²]]`.
pub fn soliton_jacobian(p: &WaveParams, q: &QuadratureSpec) -> Result<[[f64; 2]; 2]> {
    let phi = ClosedField::profile(p, ProfileKind::Phi);
    let norm_sq = 2.0 * integrate_density(&phi, q, |_, j| density::mass(j))?;
    let mom = integrate_density(&phi, q, |_, j| density::momentum(j))?;
    let grad = integrate_density(&phi, q, |_, j| density::grad_sq(j))?;
    Ok([[-norm_sq, -2.0 * mom], [2.0 * mom, grad]])
}

pub fn determinant(j: &[[f64; 2]; 2]) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// `q(φ_c)`: the direction of the instability argument evaluated at the
/// soliton.
#[derive(Clone, Debug)]
pub struct SolitonDirection {
    pub closed: ClosedField,
    pub field: ComplexField,
    /// `⟨φ, ψ⟩` and `⟨iφ, −∂_xψ⟩`, the scalars multiplying `iθ_u`, `iy_u`.
    pub pairings: [f64; 2],
}

/// With `(θ_u; y_u) = −J^{-1}(iφ; ∂_xφ)`,
///
/// ```text
/// q(φ) = ψ + iθ_u ⟨φ, ψ⟩ + iy_u ⟨iφ, −∂_xψ⟩.
/// ```
pub fn q_at_soliton(nd: &NegativeDirection, q: &QuadratureSpec) -> Result<SolitonDirection> {
    let p = &nd.params;
    let j = soliton_jacobian(p, q)?;
    let det = determinant(&j);
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let phi = ClosedField::profile(p, ProfileKind::Phi);
    let s1 = integrate_pair(&phi, &nd.closed, q, |_, f, s| (f.value() * s.value().conj()).re)?;
    // ⟨iφ, −ψ'⟩ = ⟨i∂_xφ, ψ⟩ after one integration by parts
    let s2 = integrate_pair(&phi, &nd.closed, q, |_, f, s| (I * f.d1() * s.value().conj()).re)?;
    // θ_u = −inv[0][0]·iφ − inv[0][1]·φ', y_u = −inv[1][0]·iφ − inv[1][1]·φ'
    let coef = |row: usize, s: f64| -> [Complex64; 2] {
        [I * (-inv[row][0] * s) * I, I * (-inv[row][1] * s)]
    };
    let mut closed = nd.closed.clone();
    for (row, s) in [(0, s1), (1, s2)] {
        let [c_phi, c_dx] = coef(row, s);
        closed = closed
            .with_term(c_phi, ProfileKind::Phi, Window::Whole)
            .with_term(c_dx, ProfileKind::DxPhi, Window::Whole);
    }
    let field = closed.sample(nd.psi.grid());
    Ok(SolitonDirection {
        closed,
        field,
        pairings: [s1, s2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_parameters_are_recovered() {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = crate::profile::matched_grid(&p, 100.0, 2048).unwrap();
        let phi = sample(&p, &g, ProfileKind::Phi);
        let u = phi.fourier_shift(1.7).scale(Complex64::from_polar(1.0, 0.3));
        let fit = solve_modulation(&u, &p, (0.0, 0.0)).unwrap();
        assert!((fit.theta - 0.3).abs() < 1e-8, "{fit:?}");
        assert!((fit.y - 1.7).abs() < 1e-8, "{fit:?}");
        let d = tube_distance(&u, &p).unwrap();
        assert!(d.distance < 1e-7);
    }

    #[test]
    fn quarter_turn_gives_minus_twice_mass() {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = crate::profile::matched_grid(&p, 100.0, 2048).unwrap();
        let phi = sample(&p, &g, ProfileKind::Phi);
        let f = residuals_f(&phi, &p, std::f64::consts::FRAC_PI_2, 0.0);
        let norm_sq = phi.norm_l2().powi(2);
        assert!((f[0] + norm_sq).abs() < 1e-10 * norm_sq);
    }
}
