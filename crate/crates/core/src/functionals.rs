//! Mass, momentum, energy, the action `S_c`, the Nehari functional `K_c`,
//! the gradient `S'_c`, and the scalar identities satisfied by `φ_c`.
//!
//! Conventions: `(u, v) = Re ∫ u conj(v)`, `M = ½‖u‖²`,
//! `P = ½ (i u_x, u) = ½ Im ∫ u conj(u_x)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, QuadratureError, Result};
use crate::grid::{derivatives, ComplexField, DerivativeRule};
use crate::profile::{ClosedField, LocalJet, ProfileKind, WaveParams};
use crate::quadrature::{integrate_line, QuadratureMethod, QuadratureSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A field that can be integrated: grid samples or a closed form.
#[derive(Clone, Copy, Debug)]
pub enum Field<'a> {
    Grid(&'a ComplexField),
    Closed(&'a ClosedField),
}

impl<'a> From<&'a ComplexField> for Field<'a> {
    fn from(u: &'a ComplexField) -> Self {
        Field::Grid(u)
    }
}

impl<'a> From<&'a ClosedField> for Field<'a> {
    fn from(u: &'a ClosedField) -> Self {
        Field::Closed(u)
    }
}

/// Local jets of a sampled field at every node.
pub fn grid_jets(u: &ComplexField, rule: DerivativeRule) -> Vec<LocalJet> {
    let (d1, d2) = derivatives(u, rule);
    u.values()
        .iter()
        .zip(d1.values())
        .zip(d2.values())
        .map(|((&v, &a), &b)| LocalJet::plain(v, a, b))
        .collect()
}

/// `∫ density(x, jet(x)) dx` by the rule in `q`.
pub fn integrate_density<'a>(
    u: impl Into<Field<'a>>,
    q: &QuadratureSpec,
    density: impl Fn(f64, &LocalJet) -> f64,
) -> Result<f64> {
    match (u.into(), q.method) {
        (Field::Grid(u), QuadratureMethod::GridTrapezoid) => {
            Ok(integrate_grid(u, DerivativeRule::EndpointCorrected, density))
        }
        (Field::Closed(u), QuadratureMethod::TransformedAdaptive) => {
            integrate_line(|x| density(x, &u.jet(x)), q.rel_tol)
        }
        (Field::Grid(_), QuadratureMethod::TransformedAdaptive) => {
            Err(QuadratureError::MethodMismatch("adaptive").into())
        }
        (Field::Closed(_), QuadratureMethod::GridTrapezoid) => {
            Err(QuadratureError::MethodMismatch("grid").into())
        }
    }
}

pub fn integrate_grid(
    u: &ComplexField,
    rule: DerivativeRule,
    density: impl Fn(f64, &LocalJet) -> f64,
) -> f64 {
    let g = u.grid();
    let jets = grid_jets(u, rule);
    g.nodes().zip(&jets).map(|(x, j)| density(x, j)).sum::<f64>() * g.spacing()
}

/// `∫ density(x, jet_u(x), jet_v(x)) dx`; both fields must be of one kind.
pub fn integrate_pair<'a>(
    u: impl Into<Field<'a>>,
    v: impl Into<Field<'a>>,
    q: &QuadratureSpec,
    density: impl Fn(f64, &LocalJet, &LocalJet) -> f64,
) -> Result<f64> {
    match (u.into(), v.into(), q.method) {
        (Field::Grid(u), Field::Grid(v), QuadratureMethod::GridTrapezoid) => {
            u.check_same_grid(v)?;
            let ju = grid_jets(u, DerivativeRule::EndpointCorrected);
            let jv = grid_jets(v, DerivativeRule::EndpointCorrected);
            let g = u.grid();
            Ok(g
                .nodes()
                .zip(ju.iter().zip(&jv))
                .map(|(x, (a, b))| density(x, a, b))
                .sum::<f64>()
                * g.spacing())
        }
        (Field::Closed(u), Field::Closed(v), QuadratureMethod::TransformedAdaptive) => {
            integrate_line(
                |x| {
                    let a = u.jet(x);
                    let b = v.jet(x).recarrier(a.k, x);
                    density(x, &a, &b)
                },
                q.rel_tol,
            )
        }
        _ => Err(QuadratureError::MethodMismatch(match q.method {
            QuadratureMethod::GridTrapezoid => "grid",
            QuadratureMethod::TransformedAdaptive => "adaptive",
        })
        .into()),
    }
}

pub mod density {
    //! Local densities written against envelopes so that the carrier
    //! `e^{icx/2}` never has to cancel numerically.
    use super::*;

    pub fn mass(j: &LocalJet) -> f64 {
        0.5 * j.value().norm_sqr()
    }

    pub fn momentum(j: &LocalJet) -> f64 {
        0.5 * (j.value() * j.d1().conj()).im
    }

    pub fn grad_sq(j: &LocalJet) -> f64 {
        j.d1().norm_sqr()
    }

    /// `Im(|u|^{2σ} u conj(u_x))`
    pub fn nonlinear(j: &LocalJet, sigma: f64) -> f64 {
        let u = j.value();
        u.norm_sqr().powf(sigma) * (u * j.d1().conj()).im
    }

    pub fn energy(j: &LocalJet, sigma: f64) -> f64 {
        0.5 * grad_sq(j) - nonlinear(j, sigma) / (2.0 * sigma + 2.0)
    }

    /// `|u_x − i(c/2)u|²`, the quadratic part of `K_c`.
    pub fn quadratic(j: &LocalJet, c: f64) -> f64 {
        (j.g[1] + I * (j.k - c / 2.0) * j.g[0]).norm_sqr()
    }

    pub fn action(j: &LocalJet, p: &WaveParams) -> f64 {
        0.5 * quadratic(j, p.c()) - nonlinear(j, p.sigma()) / (2.0 * p.sigma() + 2.0)
    }

    pub fn nehari(j: &LocalJet, p: &WaveParams) -> f64 {
        quadratic(j, p.c()) - nonlinear(j, p.sigma())
    }

    /// `e^{-ikx} S'_c(u)(x)`.
    pub fn gradient(j: &LocalJet, p: &WaveParams) -> Complex64 {
        let (s, c, k) = (p.sigma(), p.c(), j.k);
        let [g0, g1, g2] = j.g;
        let lin = -g2 + I * (c - 2.0 * k) * g1 + (k - c / 2.0).powi(2) * g0;
        lin - I * g0.norm_sqr().powf(s) * j.d1()
    }
}

pub fn mass<'a>(u: impl Into<Field<'a>>, q: &QuadratureSpec) -> Result<f64> {
    integrate_density(u, q, |_, j| density::mass(j))
}

pub fn momentum<'a>(u: impl Into<Field<'a>>, q: &QuadratureSpec) -> Result<f64> {
    integrate_density(u, q, |_, j| density::momentum(j))
}

pub fn energy<'a>(u: impl Into<Field<'a>>, q: &QuadratureSpec, sigma: f64) -> Result<f64> {
    integrate_density(u, q, |_, j| density::energy(j, sigma))
}

/// `(S_c, K_c)`.
pub fn action_and_nehari<'a>(
    u: impl Into<Field<'a>>,
    p: &WaveParams,
    q: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let u = u.into();
    let s = integrate_density(u, q, |_, j| density::action(j, p))?;
    let k = integrate_density(u, q, |_, j| density::nehari(j, p))?;
    Ok((s, k))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalValues {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "P")]
    pub momentum: f64,
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "S_c")]
    pub action: f64,
    #[serde(rename = "K_c")]
    pub nehari: f64,
}

pub fn functional_values<'a>(
    u: impl Into<Field<'a>>,
    p: &WaveParams,
    q: &QuadratureSpec,
) -> Result<FunctionalValues> {
    let u = u.into();
    let (action, nehari) = action_and_nehari(u, p, q)?;
    Ok(FunctionalValues {
        energy: energy(u, q, p.sigma())?,
        momentum: momentum(u, q)?,
        mass: mass(u, q)?,
        action,
        nehari,
    })
}

/// Conserved quantities under a chosen derivative rule, for the
/// evolution loop.
pub fn grid_conserved(u: &ComplexField, sigma: f64, rule: DerivativeRule) -> (f64, f64, f64) {
    let g = u.grid();
    let h = g.spacing();
    let jets = grid_jets(u, rule);
    let (mut e, mut p, mut m) = (0.0, 0.0, 0.0);
    for j in &jets {
        e += density::energy(j, sigma);
        p += density::momentum(j);
        m += density::mass(j);
    }
    (e * h, p * h, m * h)
}

/// `S'_c(u) = −u_xx − i|u|^{2σ}u_x + ciu_x + (c²/4)u` on the grid.
pub fn gradient_sc(u: &ComplexField, p: &WaveParams) -> ComplexField {
    let jets = grid_jets(u, DerivativeRule::EndpointCorrected);
    let values = jets.iter().map(|j| density::gradient(j, p)).collect();
    ComplexField::from_parts_unchecked(*u.grid(), values)
}

/// `A_σ = ∫(x²+1)^{-1/σ}`.
pub fn a_sigma(sigma: f64) -> Result<f64> {
    a_sigma_tol(sigma, 1e-12)
}

pub fn a_sigma_tol(sigma: f64, rel_tol: f64) -> Result<f64> {
    check_sigma(sigma)?;
    integrate_line(|x| (1.0 + x * x).powf(-1.0 / sigma), rel_tol)
}

/// `B_σ = ∫(x²+1)^{-1/σ-1}`.
pub fn b_sigma(sigma: f64) -> Result<f64> {
    b_sigma_tol(sigma, 1e-12)
}

pub fn b_sigma_tol(sigma: f64, rel_tol: f64) -> Result<f64> {
    check_sigma(sigma)?;
    integrate_line(|x| (1.0 + x * x).powf(-1.0 / sigma - 1.0), rel_tol)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 1.0 && sigma < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "sigma must lie strictly inside (1, 2), got {sigma}"
        )))
    }
}

/// `M(φ_c) = ½ σ^{-1} (2σ+2)^{1/σ} A_σ c^{1/σ-1}`.
pub fn mass_closed(p: &WaveParams, a_sigma: f64) -> f64 {
    let s = p.sigma();
    0.5 / s * (2.0 * s + 2.0).powf(1.0 / s) * a_sigma * p.c().powf(1.0 / s - 1.0)
}

/// `P(φ_c) = −(c/2)M + ½ σ^{-1} (2σ+2)^{1/σ} B_σ c^{1/σ}`.
pub fn momentum_closed(p: &WaveParams, a_sigma: f64, b_sigma: f64) -> f64 {
    let s = p.sigma();
    -p.c() / 2.0 * mass_closed(p, a_sigma)
        + 0.5 / s * (2.0 * s + 2.0).powf(1.0 / s) * b_sigma * p.c().powf(1.0 / s)
}

/// `∂_c M(φ_c) = c^{-1}(1/σ − 1) M`.
pub fn dc_mass_closed(p: &WaveParams, mass: f64) -> f64 {
    (1.0 / p.sigma() - 1.0) * mass / p.c()
}

/// Nehari scaling `s > 0` with `K_c(s u) = 0`. Both parts of `K_c` are
/// homogeneous (`s²` and `s^{2σ+2}`), so the root is explicit.
pub fn rescale_to_nehari(u: &ComplexField, p: &WaveParams) -> Result<(f64, ComplexField)> {
    let q = QuadratureSpec::grid();
    let quad = integrate_density(u, &q, |_, j| density::quadratic(j, p.c()))?;
    let nonlin = integrate_density(u, &q, |_, j| density::nonlinear(j, p.sigma()))?;
    if !(nonlin > 0.0) {
        return Err(Error::NoNehariRoot(nonlin));
    }
    let s = (quad / nonlin).powf(1.0 / (2.0 * p.sigma()));
    Ok((s, u.scale_real(s)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
}

impl IdentityCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        let rel_error = (lhs - rhs).abs() / rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE);
        Self {
            name,
            lhs,
            rhs,
            rel_error,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub mass: f64,
    pub momentum: f64,
    pub dc_mass: f64,
    pub dc_momentum: f64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.checks.iter().map(|c| c.rel_error).fold(0.0, f64::max)
    }
}

/// Integrals of `φ_c` entering the identities, by either rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonIntegrals {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub lp_norm: f64,
    pub nonlinear: f64,
    pub nehari: f64,
}

pub fn soliton_integrals(
    p: &WaveParams,
    g: &crate::grid::Grid,
    q: &QuadratureSpec,
) -> Result<SolitonIntegrals> {
    let closed;
    let sampled;
    let field: Field = match q.method {
        QuadratureMethod::TransformedAdaptive => {
            closed = ClosedField::profile(p, ProfileKind::Phi);
            (&closed).into()
        }
        QuadratureMethod::GridTrapezoid => {
            sampled = crate::profile::sample(p, g, ProfileKind::Phi);
            (&sampled).into()
        }
    };
    let s = p.sigma();
    Ok(SolitonIntegrals {
        mass: mass(field, q)?,
        momentum: momentum(field, q)?,
        energy: energy(field, q, s)?,
        grad_sq: integrate_density(field, q, |_, j| density::grad_sq(j))?,
        lp_norm: integrate_density(field, q, |_, j| j.value().norm_sqr().powf(s + 1.0))?,
        nonlinear: integrate_density(field, q, |_, j| density::nonlinear(j, s))?,
        nehari: integrate_density(field, q, |_, j| density::nehari(j, p))?,
    })
}

/// `∂_c M(φ_c)` and `∂_c P(φ_c)` from integrands differentiated in `c`.
pub fn dc_mass_momentum(p: &WaveParams, rel_tol: f64) -> Result<(f64, f64)> {
    let phi = ClosedField::profile(p, ProfileKind::Phi);
    let dc = ClosedField::profile(p, ProfileKind::DcPhi);
    let dm = integrate_line(
        |x| {
            let a = phi.jet(x);
            let b = dc.jet(x);
            (a.value().conj() * b.value()).re
        },
        rel_tol,
    )?;
    // ∂_c ½ Im(φ conj φ_x) = ½ Im(∂_cφ conj φ_x + φ conj ∂_x∂_cφ)
    let dp = integrate_line(
        |x| {
            let a = phi.jet(x);
            let b = dc.jet(x);
            0.5 * (b.value() * a.d1().conj() + a.value() * b.d1().conj()).im
        },
        rel_tol,
    )?;
    Ok((dm, dp))
}

/// Central difference in `c` of a scalar depending on the speed.
pub fn dc_central(p: &WaveParams, f: impl Fn(&WaveParams) -> Result<f64>) -> Result<f64> {
    let d = 1e-5 * p.c();
    let hi = f(&p.with_c(p.c() + d)?)?;
    let lo = f(&p.with_c(p.c() - d)?)?;
    Ok((hi - lo) / (2.0 * d))
}

/// Every scalar identity satisfied by `φ_c`, as `(lhs, rhs, rel_error)`.
/// With grid quadrature the box truncates the tails, so closed forms that
/// live on the whole line are only approached as `L` grows.
pub fn identity_suite(
    p: &WaveParams,
    g: &crate::grid::Grid,
    q: &QuadratureSpec,
) -> Result<IdentityReport> {
    let (s, c) = (p.sigma(), p.c());
    let v = soliton_integrals(p, g, q)?;
    let a = a_sigma(s)?;
    let b = b_sigma(s)?;
    let tight = QuadratureSpec {
        rel_tol: q.rel_tol.min(1e-12),
        ..*q
    };
    let (dm_analytic, dp_analytic) = match q.method {
        QuadratureMethod::TransformedAdaptive => dc_mass_momentum(p, tight.rel_tol)?,
        QuadratureMethod::GridTrapezoid => {
            let phi = crate::profile::sample(p, g, ProfileKind::Phi);
            let dc = crate::profile::sample(p, g, ProfileKind::DcPhi);
            let dm = phi.inner(&dc)?;
            let jp = grid_jets(&phi, DerivativeRule::EndpointCorrected);
            let jd = grid_jets(&dc, DerivativeRule::EndpointCorrected);
            let dp = jp
                .iter()
                .zip(&jd)
                .map(|(a, b)| 0.5 * (b.value() * a.d1().conj() + a.value() * b.d1().conj()).im)
                .sum::<f64>()
                * g.spacing();
            (dm, dp)
        }
    };
    let dm_fd = dc_central(p, |pc| soliton_integrals(pc, g, &tight).map(|v| v.mass))?;
    let dp_fd = dc_central(p, |pc| soliton_integrals(pc, g, &tight).map(|v| v.momentum))?;
    let m = v.mass;
    let checks = vec![
        IdentityCheck::new("P = (c/2)(1-sigma)M", v.momentum, c / 2.0 * (1.0 - s) * m),
        IdentityCheck::new(
            "|phi|_{2s+2}^{2s+2} = 2c(s+1)(2-s)M",
            v.lp_norm,
            2.0 * c * (s + 1.0) * (2.0 - s) * m,
        ),
        IdentityCheck::new("|phi_x|^2 = (c^2/4)|phi|^2", v.grad_sq, c * c / 4.0 * 2.0 * m),
        IdentityCheck::new(
            "Im int |phi|^{2s} phi conj(phi_x) = c^2 M + 2cP",
            v.nonlinear,
            c * c * m + 2.0 * c * v.momentum,
        ),
        IdentityCheck::new("B = (1-sigma/2)A", b, (1.0 - s / 2.0) * a),
        IdentityCheck::new("M closed form", m, mass_closed(p, a)),
        IdentityCheck::new("P closed form", v.momentum, momentum_closed(p, a, b)),
        IdentityCheck::new(
            "M = c sigma (1-sigma)^-1 dM/dc",
            m,
            c * s / (1.0 - s) * dm_analytic,
        ),
        IdentityCheck::new("dM/dc closed vs central difference", dc_mass_closed(p, m), dm_fd),
        IdentityCheck::new("dM/dc analytic vs central difference", dm_analytic, dm_fd),
        IdentityCheck::new("dP/dc analytic vs central difference", dp_analytic, dp_fd),
        IdentityCheck::new("dP/dc = (c/2) dM/dc", dp_analytic, c / 2.0 * dm_analytic),
        IdentityCheck::new(
            "E = c^2 M/4 - (c^2 M + 2cP)/(2s+2)",
            v.energy,
            c * c * m / 4.0 - (c * c * m + 2.0 * c * v.momentum) / (2.0 * s + 2.0),
        ),
    ];
    Ok(IdentityReport {
        mass: m,
        momentum: v.momentum,
        dc_mass: dm_analytic,
        dc_momentum: dp_analytic,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_mass_at_reference_point() {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let a = a_sigma(1.5).unwrap();
        assert_relative_eq!(mass_closed(&p, a), 7.1014, max_relative = 1e-4);
        let phi = ClosedField::profile(&p, ProfileKind::Phi);
        let m = mass(&phi, &QuadratureSpec::adaptive()).unwrap();
        assert_relative_eq!(m, mass_closed(&p, a), max_relative = 1e-9);
    }

    #[test]
    fn method_mismatch_is_an_error() {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let phi = ClosedField::profile(&p, ProfileKind::Phi);
        assert!(mass(&phi, &QuadratureSpec::grid()).is_err());
    }
}
