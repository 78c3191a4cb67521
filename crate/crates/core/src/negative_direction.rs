//! The localized negative direction
//!
//! ```text
//! ψ = φ_c + μ χ_R ∂_cφ_c + ν i∂_xφ_c,
//! ```
//!
//! with `μ, ν` chosen so that `ψ` is orthogonal to `M'(φ_c) = φ_c` and
//! `P'(φ_c) = i∂_xφ_c`. `∂_cφ_c` itself grows like `|x|^{1−1/σ}`; the
//! cutoff makes `ψ` square integrable.

use num_complex::Complex64;
use serde::Serialize;

pub use crate::cutoff::{cutoff, CutoffSpec};
use crate::error::{Error, Result};
use crate::functionals::{dc_central, dc_mass_momentum, density, integrate_density, integrate_pair};
use crate::grid::{ComplexField, Grid};
use crate::linearization::{apply_local, apply_second_variation, quad_form};
use crate::profile::{ClosedField, LocalJet, ProfileKind, WaveParams, Window};
use crate::quadrature::{integrate_line, integrate_window, QuadratureMethod, QuadratureSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Quantities entering the two quotients for `μ, ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuNuDiagnostics {
    pub radius: f64,
    /// `½∂_c∫χ_R|φ_c|²`
    pub a: f64,
    /// `⟨i∂_xφ_c, χ_R∂_cφ_c⟩`, the pairing that makes `ψ ⊥ P'(φ_c)` exact.
    pub b: f64,
    /// `½∂_c Im∫χ_R φ_c conj(∂_xφ_c)`; differs from `b` by a boundary term
    /// supported where `χ_R' ≠ 0`.
    pub b_derivative_form: f64,
    pub a_central: f64,
    pub b_derivative_form_central: f64,
    pub mass: f64,
    pub momentum: f64,
    pub grad_sq: f64,
    pub denominator: f64,
    pub noise: f64,
    /// `μ, ν` from the derivative form of `b`.
    pub mu_derivative_form: f64,
    pub nu_derivative_form: f64,
    pub mu_limit: f64,
    pub nu_limit: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuNu {
    pub mu: f64,
    pub nu: f64,
    pub diagnostics: MuNuDiagnostics,
}

fn windowed(spec: &CutoffSpec, rel_tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let r = spec.radius();
    let g = |x: f64| cutoff(spec, x) * f(x);
    [(-2.0 * r, -r), (-r, 0.0), (0.0, r), (r, 2.0 * r)]
        .into_iter()
        .map(|(lo, hi)| integrate_window(g, lo, hi, rel_tol))
        .sum()
}

/// `(ρ_a, ρ_b, ρ_b')` at `x`: densities of `a`, `b` and the derivative form.
fn pairing_densities(phi: &LocalJet, dc: &LocalJet) -> (f64, f64, f64) {
    let a = (phi.value().conj() * dc.value()).re;
    let b = (dc.value() * phi.d1().conj()).im;
    let bd = 0.5 * (dc.value() * phi.d1().conj() + phi.value() * dc.d1().conj()).im;
    (a, b, bd)
}

/// `μ` and `ν` from the orthogonality conditions
///
/// ```text
/// 2M + μ a + 2P ν = 0,    2P + μ b + ‖∂_xφ‖² ν = 0.
/// ```
pub fn solve_mu_nu(p: &WaveParams, spec: &CutoffSpec, q: &QuadratureSpec) -> Result<MuNu> {
    if q.method != QuadratureMethod::TransformedAdaptive {
        return Err(crate::QuadratureError::MethodMismatch("grid").into());
    }
    let tol = q.rel_tol.min(1e-12);
    let phi = ClosedField::profile(p, ProfileKind::Phi);
    let dc = ClosedField::profile(p, ProfileKind::DcPhi);
    let at = |x: f64| pairing_densities(&phi.jet(x), &dc.jet(x));
    let a = windowed(spec, tol, |x| at(x).0)?;
    let b = windowed(spec, tol, |x| at(x).1)?;
    let bd = windowed(spec, tol, |x| at(x).2)?;

    let a_central = dc_central(p, |pp| {
        let f = ClosedField::profile(pp, ProfileKind::Phi);
        Ok(0.5 * windowed(spec, tol, |x| f.jet(x).value().norm_sqr())?)
    })?;
    let bd_central = dc_central(p, |pp| {
        let f = ClosedField::profile(pp, ProfileKind::Phi);
        windowed(spec, tol, |x| density::momentum(&f.jet(x)))
    })?;

    let q = QuadratureSpec { rel_tol: tol, ..*q };
    let mass = integrate_density(&phi, &q, |_, j| density::mass(j))?;
    let momentum = integrate_density(&phi, &q, |_, j| density::momentum(j))?;
    let grad_sq = integrate_density(&phi, &q, |_, j| density::grad_sq(j))?;
    let (dm, _) = dc_mass_momentum(p, tol)?;

    let quotients = |b: f64| {
        let den = a * grad_sq - 2.0 * momentum * b;
        let mu = (4.0 * momentum * momentum - 2.0 * mass * grad_sq) / den;
        let nu = (2.0 * mass * b - 2.0 * momentum * a) / den;
        (den, mu, nu)
    };
    let (den, mu, nu) = quotients(b);
    let (_, mu_d, nu_d) = quotients(bd);
    let spread = ((a - a_central).abs() / a.abs()).max(tol);
    let noise = spread * (a.abs() * grad_sq + 2.0 * (momentum * b).abs());
    if !(den.abs() > 10.0 * noise) {
        return Err(Error::SingularDenominator { value: den, noise });
    }
    Ok(MuNu {
        mu,
        nu,
        diagnostics: MuNuDiagnostics {
            radius: spec.radius(),
            a,
            b,
            b_derivative_form: bd,
            a_central,
            b_derivative_form_central: bd_central,
            mass,
            momentum,
            grad_sq,
            denominator: den,
            noise,
            mu_derivative_form: mu_d,
            nu_derivative_form: nu_d,
            mu_limit: -2.0 * (2.0 - p.sigma()) * mass / dm,
            nu_limit: 2.0 / p.c(),
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NegativeDirection {
    pub params: WaveParams,
    pub radius: f64,
    pub mu: f64,
    pub nu: f64,
    #[serde(skip)]
    pub psi: ComplexField,
    #[serde(skip)]
    pub closed: ClosedField,
    /// `⟨S''ψ, ψ⟩` on the whole line.
    pub quad_form_value: f64,
    /// The same pairing on the grid of `psi`.
    pub quad_form_grid: f64,
    /// `⟨M'(φ_c), ψ⟩` and `⟨P'(φ_c), ψ⟩` on the whole line.
    pub orth_mass: f64,
    pub orth_momentum: f64,
    pub diagnostics: MuNuDiagnostics,
}

impl NegativeDirection {
    pub fn cutoff(&self) -> CutoffSpec {
        CutoffSpec::new(self.radius).expect("validated radius")
    }
}

/// `ψ` in closed form.
pub fn psi_closed(p: &WaveParams, spec: &CutoffSpec, mu: f64, nu: f64) -> ClosedField {
    ClosedField::profile(p, ProfileKind::Phi)
        .with_term(mu.into(), ProfileKind::DcPhi, Window::Inside(*spec))
        .with_term(nu.into(), ProfileKind::IDxPhi, Window::Whole)
}

/// Assemble `ψ`, sample it on `g` and evaluate its defining properties.
pub fn build_psi(
    p: &WaveParams,
    spec: &CutoffSpec,
    g: &Grid,
    q: &QuadratureSpec,
) -> Result<NegativeDirection> {
    if g.half_width() < 4.0 * spec.radius() {
        return Err(Error::Domain(format!(
            "grid half-width {} is below 4R = {}",
            g.half_width(),
            4.0 * spec.radius()
        )));
    }
    let mn = solve_mu_nu(p, spec, q)?;
    let closed = psi_closed(p, spec, mn.mu, mn.nu);
    let tight = QuadratureSpec {
        rel_tol: q.rel_tol.min(1e-12),
        ..*q
    };
    let phi = ClosedField::profile(p, ProfileKind::Phi);
    let orth_mass = integrate_pair(&phi, &closed, &tight, |_, f, s| (f.value() * s.value().conj()).re)?;
    let orth_momentum =
        integrate_pair(&phi, &closed, &tight, |_, f, s| (I * f.d1() * s.value().conj()).re)?;
    let quad_form_value = quad_form(p, &closed, &closed, &tight)?;
    let psi = closed.sample(g);
    let quad_form_grid = apply_second_variation(p, &psi).inner(&psi)?;
    Ok(NegativeDirection {
        params: *p,
        radius: spec.radius(),
        mu: mn.mu,
        nu: mn.nu,
        psi,
        closed,
        quad_form_value,
        quad_form_grid,
        orth_mass,
        orth_momentum,
        diagnostics: mn.diagnostics,
    })
}

/// `S_c(φ_c + βψ) − S_c(φ_c)` for each `β`, integrated as one pointwise
/// density difference.
pub fn beta_scan(
    nd: &NegativeDirection,
    betas: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    let p = &nd.params;
    betas
        .iter()
        .map(|&beta| {
            if beta == 0.0 {
                return Ok((beta, 0.0));
            }
            let gap = match q.method {
                QuadratureMethod::TransformedAdaptive => {
                    let phi = ClosedField::profile(p, ProfileKind::Phi);
                    integrate_line(
                        |x| {
                            let f = phi.jet(x);
                            let s = nd.closed.jet(x);
                            density::action(&f.add(&s.scale(beta.into())), p) - density::action(&f, p)
                        },
                        q.rel_tol,
                    )?
                }
                QuadratureMethod::GridTrapezoid => {
                    let phi = crate::profile::sample(p, nd.psi.grid(), ProfileKind::Phi);
                    let u = phi.combine(1.0.into(), &nd.psi, beta.into())?;
                    integrate_pair(&u, &phi, q, |_, a, b| {
                        density::action(a, p) - density::action(b, p)
                    })?
                }
            };
            Ok((beta, gap))
        })
        .collect()
}

/// Log–log regression of the deviations behind `μ(R), ν(R)` and of the
/// exterior operator mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub radii: Vec<f64>,
    /// `½∂_c∫χ_R|φ|² − ∂_cM`
    pub dev_mass: Vec<f64>,
    /// `½∂_c Im∫χ_Rφ conj(φ_x) − ∂_cP`
    pub dev_momentum: Vec<f64>,
    /// `∫|S''((1−χ_R)∂_cφ)|`
    pub tail_mass: Vec<f64>,
    pub slope_mass: f64,
    pub slope_momentum: f64,
    pub slope_tail: f64,
    /// Points used by the regressions after dropping the noise floor.
    pub used: usize,
    pub degenerate: Option<String>,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.abs().ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `Re(φ conj ∂_cφ)` and `½ Im(∂_cφ conj φ_x + φ conj ∂_x∂_cφ)` written
/// through `u = σ²c²x²`; the jet forms of these lose `|x|` digits to
/// cancellation in the far field.
fn scalar_densities(p: &WaveParams, x: f64) -> (f64, f64) {
    let (s, c) = (p.sigma(), p.c());
    let u = s * s * c * c * x * x;
    let amp2 = crate::profile::varphi(p, x).powi(2);
    let alpha = (1.0 - u) / (2.0 * s * c * (1.0 + u));
    let bracket = (u - 1.0).powi(2) / (2.0 * s * (1.0 + u).powi(2))
        - (u - 1.0) / (2.0 * (1.0 + u))
        - 2.0 * u / (1.0 + u).powi(2);
    (amp2 * alpha, 0.5 * amp2 * bracket)
}

/// Exterior deviations for one radius: `(dev_mass, dev_momentum, tail_mass)`.
pub fn exterior_deviations(p: &WaveParams, spec: &CutoffSpec, rel_tol: f64) -> Result<(f64, f64, f64)> {
    let phi = ClosedField::profile(p, ProfileKind::Phi);
    let outside = |x: f64| 1.0 - cutoff(spec, x);
    let dev_mass = -integrate_line(|x| outside(x) * scalar_densities(p, x).0, rel_tol)?;
    let dev_momentum = -integrate_line(|x| outside(x) * scalar_densities(p, x).1, rel_tol)?;
    let ext = ClosedField::zero(p).with_term(1.0.into(), ProfileKind::DcPhi, Window::Outside(*spec));
    let tail_mass = integrate_line(
        |x| {
            let f = ext.jet(x);
            apply_local(p, &phi.jet(x).recarrier(f.k, x), &f).norm()
        },
        rel_tol,
    )?;
    Ok((dev_mass, dev_momentum, tail_mass))
}

pub fn fit_rates(p: &WaveParams, radii: &[f64], q: &QuadratureSpec) -> Result<RateFit> {
    if radii.len() < 5 {
        return Err(Error::Domain(format!("need at least 5 radii, got {}", radii.len())));
    }
    let ratio = radii[1] / radii[0];
    let geometric = radii.iter().all(|r| r.is_finite() && *r > 0.0)
        && ratio > 1.0
        && radii.windows(2).all(|w| ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    if !geometric {
        return Err(Error::Domain("radii must form an increasing geometric sequence".into()));
    }
    let tol = q.rel_tol.min(1e-12);
    let rows = radii
        .iter()
        .map(|&r| exterior_deviations(p, &CutoffSpec::new(r)?, tol))
        .collect::<Result<Vec<_>>>()?;
    let (dm, dp) = dc_mass_momentum(p, tol)?;
    let floor_m = 100.0 * q.rel_tol * dm.abs();
    let floor_p = 100.0 * q.rel_tol * dp.abs();
    let keep: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].0.abs() > floor_m && rows[i].1.abs() > floor_p)
        .collect();
    let pick = |f: fn(&(f64, f64, f64)) -> f64| -> Vec<f64> { keep.iter().map(|&i| f(&rows[i])).collect() };
    let xs: Vec<f64> = keep.iter().map(|&i| radii[i]).collect();
    let (slope_mass, slope_momentum, slope_tail, degenerate) = if keep.len() < 3 {
        (
            f64::NAN,
            f64::NAN,
            f64::NAN,
            Some(format!("only {} radii above the quadrature noise floor", keep.len())),
        )
    } else {
        (
            slope(&xs, &pick(|r| r.0)),
            slope(&xs, &pick(|r| r.1)),
            slope(&xs, &pick(|r| r.2)),
            None,
        )
    };
    Ok(RateFit {
        radii: radii.to_vec(),
        dev_mass: rows.iter().map(|r| r.0).collect(),
        dev_momentum: rows.iter().map(|r| r.1).collect(),
        tail_mass: rows.iter().map(|r| r.2).collect(),
        slope_mass,
        slope_momentum,
        slope_tail,
        used: keep.len(),
        degenerate,
    })
}

/// Largest `|S''((1−χ_R)∂_cφ)|` on `|x| < R/2`, evaluated in closed form
/// and on a grid.
pub fn interior_leak(p: &WaveParams, spec: &CutoffSpec, g: &Grid) -> (f64, f64) {
    let r = spec.radius();
    let phi = ClosedField::profile(p, ProfileKind::Phi);
    let ext = ClosedField::zero(p).with_term(1.0.into(), ProfileKind::DcPhi, Window::Outside(*spec));
    let inside = |x: f64| x.abs() < 0.5 * r;
    let closed = g
        .nodes()
        .filter(|&x| inside(x))
        .map(|x| {
            let f = ext.jet(x);
            apply_local(p, &phi.jet(x).recarrier(f.k, x), &f).norm()
        })
        .fold(0.0, f64::max);
    let applied = apply_second_variation(p, &ext.sample(g));
    let grid = g
        .nodes()
        .zip(applied.values())
        .filter(|(x, _)| inside(*x))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    (closed, grid)
}

/// One row of an `R` sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusRow {
    pub radius: f64,
    pub mu: f64,
    pub nu: f64,
    pub quad_form: f64,
    pub dev_mass: f64,
    pub dev_momentum: f64,
    /// `ν` from the differentiated momentum pairing, which approaches `2/c`
    /// only as `R` grows.
    pub nu_derivative_form: f64,
}

/// `μ, ν, ⟨S''ψ,ψ⟩` and the exterior deviations at each radius, whole-line
/// quadrature throughout.
pub fn radius_sweep(p: &WaveParams, radii: &[f64], q: &QuadratureSpec) -> Result<Vec<RadiusRow>> {
    let tight = QuadratureSpec {
        rel_tol: q.rel_tol.min(1e-12),
        ..*q
    };
    radii
        .iter()
        .map(|&r| {
            let spec = CutoffSpec::new(r)?;
            let mn = solve_mu_nu(p, &spec, q)?;
            let psi = psi_closed(p, &spec, mn.mu, mn.nu);
            let (dev_mass, dev_momentum, _) = exterior_deviations(p, &spec, tight.rel_tol)?;
            Ok(RadiusRow {
                radius: r,
                mu: mn.mu,
                nu: mn.nu,
                quad_form: quad_form(p, &psi, &psi, &tight)?,
                dev_mass,
                dev_momentum,
                nu_derivative_form: mn.diagnostics.nu_derivative_form,
            })
        })
        .collect()
}

/// Smallest radius in `rows` from which `⟨S''ψ,ψ⟩` stays negative.
pub fn negativity_threshold(rows: &[RadiusRow]) -> Option<f64> {
    let last_bad = rows.iter().rposition(|r| !(r.quad_form < 0.0));
    match last_bad {
        None => rows.first().map(|r| r.radius),
        Some(i) => rows.get(i + 1).map(|r| r.radius),
    }
}
