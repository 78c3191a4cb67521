//! The second variation `S''_c(φ_c)`, a real-linear (not complex-linear)
//! operator:
//!
//! ```text
//! S''f = −f'' + cif' + (c²/4)f − iσ|φ|^{2σ−2} conj(φ) φ' f
//!        − iσ|φ|^{2σ−2} φ φ' conj(f) − i|φ|^{2σ} f'
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{
    a_sigma, dc_mass_momentum, grid_jets, integrate_pair, mass_closed, Field,
};
use crate::grid::{periodic_derivative, ComplexField, DerivativeRule, Grid};
use crate::profile::{sample, ClosedField, LocalJet, ProfileKind, WaveParams};
use crate::quadrature::{integrate_line, QuadratureMethod, QuadratureSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `e^{-ikx} (S''f)(x)` from jets of `φ_c` and `f` sharing the carrier `k`.
pub fn apply_local(p: &WaveParams, phi: &LocalJet, f: &LocalJet) -> Complex64 {
    let (s, c, k) = (p.sigma(), p.c(), f.k);
    debug_assert_eq!(phi.k, k);
    let [g0, g1, g2] = f.g;
    let lin = -g2 + I * (c - 2.0 * k) * g1 + (k - c / 2.0).powi(2) * g0;
    let u = phi.value();
    let du = phi.d1();
    let a2 = u.norm_sqr();
    let w = a2.powf(s - 1.0);
    lin - I * s * w * u.conj() * du * g0 - I * s * w * u * du * g0.conj() - I * (w * a2) * f.d1()
}

/// `S''_c(φ_c) f` on the grid of `f`, with endpoint-corrected derivatives.
pub fn apply_second_variation(p: &WaveParams, f: &ComplexField) -> ComplexField {
    apply_second_variation_with(p, f, DerivativeRule::EndpointCorrected)
}

pub fn apply_second_variation_with(
    p: &WaveParams,
    f: &ComplexField,
    rule: DerivativeRule,
) -> ComplexField {
    let g = f.grid();
    let phi = sample(p, g, ProfileKind::Phi);
    let dphi = sample(p, g, ProfileKind::DxPhi);
    let zero = Complex64::new(0.0, 0.0);
    let values = grid_jets(f, rule)
        .iter()
        .zip(phi.values().iter().zip(dphi.values()))
        .map(|(fj, (&u, &du))| apply_local(p, &LocalJet::plain(u, du, zero), fj))
        .collect();
    ComplexField::new(*g, values).expect("finite operator output")
}

/// `⟨S''f, g⟩ = Re ∫ S''f conj(g)`.
pub fn quad_form<'a>(
    p: &WaveParams,
    f: impl Into<Field<'a>>,
    g: impl Into<Field<'a>>,
    q: &QuadratureSpec,
) -> Result<f64> {
    match (f.into(), g.into()) {
        (Field::Grid(f), Field::Grid(g)) => {
            if q.method != QuadratureMethod::GridTrapezoid {
                return Err(crate::QuadratureError::MethodMismatch("adaptive").into());
            }
            apply_second_variation(p, f).inner(g)
        }
        (Field::Closed(f), Field::Closed(g)) => {
            let phi = ClosedField::profile(p, ProfileKind::Phi);
            integrate_pair(f, g, q, |x, fj, gj| {
                let pj = phi.jet(x).recarrier(fj.k, x);
                (apply_local(p, &pj, fj) * gj.value().conj()).re
            })
        }
        _ => Err(Error::Domain("quadratic form of a sampled and a closed field".into())),
    }
}

/// The operator rewritten with the transport term in skew form,
///
/// ```text
/// −i w f' = −(i/2)(w f' + (w f)') + (i/2) w' f,   w = |φ|^{2σ},
/// ```
///
/// which makes every piece of the discretization separately symmetric.
/// Periodic derivatives; agrees with [`apply_second_variation`] on
/// localized fields up to the discrete product-rule error.
pub fn apply_skew_form(p: &WaveParams, f: &ComplexField) -> ComplexField {
    let g = f.grid();
    let (s, c) = (p.sigma(), p.c());
    let phi = sample(p, g, ProfileKind::Phi);
    let dphi = sample(p, g, ProfileKind::DxPhi);
    let w: Vec<f64> = phi.values().iter().map(|u| u.norm_sqr().powf(s)).collect();
    let wf = ComplexField::from_parts_unchecked(
        *g,
        f.values().iter().zip(&w).map(|(z, w)| z * w).collect(),
    );
    let d1 = periodic_derivative(f, 1);
    let d2 = periodic_derivative(f, 2);
    let dwf = periodic_derivative(&wf, 1);
    let values = (0..g.len())
        .map(|j| {
            let (u, du, fj) = (phi.values()[j], dphi.values()[j], f.values()[j]);
            let a = u.norm_sqr().powf(s - 1.0);
            let real_mult = s * a * (u.conj() * du).im;
            -d2.values()[j] + I * c * d1.values()[j]
                + (c * c / 4.0 + real_mult) * fj
                - I * s * a * u * du * fj.conj()
                - 0.5 * I * (w[j] * d1.values()[j] + dwf.values()[j])
        })
        .collect();
    ComplexField::from_parts_unchecked(*g, values)
}

/// Dense real matrix of [`apply_skew_form`] acting on `(Re f, Im f)`, for
/// `N <= 512`. Symmetric iff the discrete operator is self-adjoint for
/// `h Re Σ f conj g`.
pub fn assemble_dense(p: &WaveParams, g: &Grid) -> Result<Vec<Vec<f64>>> {
    let n = g.len();
    if n > 512 {
        return Err(Error::Domain(format!("dense assembly limited to N <= 512, got {n}")));
    }
    let mut cols = Vec::with_capacity(2 * n);
    for part in [Complex64::new(1.0, 0.0), I] {
        for j in 0..n {
            let mut e = ComplexField::zeros(*g).into_values();
            e[j] = part;
            let f = ComplexField::new(*g, e)?;
            let r = apply_skew_form(p, &f);
            let col: Vec<f64> = r
                .values()
                .iter()
                .map(|z| z.re)
                .chain(r.values().iter().map(|z| z.im))
                .collect();
            cols.push(col);
        }
    }
    Ok((0..2 * n).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadFormReport {
    pub name: &'static str,
    pub value: f64,
    pub closed_form: Option<f64>,
    pub rel_error: Option<f64>,
}

impl QuadFormReport {
    fn new(name: &'static str, value: f64, closed: f64) -> Self {
        Self {
            name,
            value,
            closed_form: Some(closed),
            rel_error: Some((value - closed).abs() / closed.abs()),
        }
    }
}

/// `(σ−1)/(2σ²) (2σ+2)^{1/σ} A_σ c^{1/σ−1}`, the value of
/// `⟨S''∂_cφ, ∂_cφ⟩` with the speed factor kept.
pub fn dc_pairing_closed(p: &WaveParams, a_sigma: f64) -> f64 {
    let s = p.sigma();
    (s - 1.0) / (2.0 * s * s) * (2.0 * s + 2.0).powf(1.0 / s) * a_sigma * p.c().powf(1.0 / s - 1.0)
}

/// The four signed pairings with their closed forms.
pub fn sign_suite(p: &WaveParams, g: &Grid, q: &QuadratureSpec) -> Result<Vec<QuadFormReport>> {
    let (s, c) = (p.sigma(), p.c());
    let a = a_sigma(s)?;
    let m = mass_closed(p, a);
    let (v1, v2, v3, dm, dp) = match q.method {
        QuadratureMethod::TransformedAdaptive => {
            let phi = ClosedField::profile(p, ProfileKind::Phi);
            let idx = ClosedField::profile(p, ProfileKind::IDxPhi);
            let (dm, dp) = dc_mass_momentum(p, q.rel_tol.min(1e-12))?;
            (
                quad_form(p, &phi, &phi, q)?,
                quad_form(p, &idx, &idx, q)?,
                quad_form(p, &idx, &phi, q)?,
                dm,
                dp,
            )
        }
        QuadratureMethod::GridTrapezoid => {
            let phi = sample(p, g, ProfileKind::Phi);
            let idx = sample(p, g, ProfileKind::IDxPhi);
            let dc = sample(p, g, ProfileKind::DcPhi);
            let dm = phi.inner(&dc)?;
            let jp = grid_jets(&phi, DerivativeRule::EndpointCorrected);
            let jd = grid_jets(&dc, DerivativeRule::EndpointCorrected);
            let dp = jp
                .iter()
                .zip(&jd)
                .map(|(a, b)| 0.5 * (b.value() * a.d1().conj() + a.value() * b.d1().conj()).im)
                .sum::<f64>()
                * g.spacing();
            (
                quad_form(p, &phi, &phi, q)?,
                quad_form(p, &idx, &idx, q)?,
                quad_form(p, &idx, &phi, q)?,
                dm,
                dp,
            )
        }
    };
    Ok(vec![
        QuadFormReport::new("<S''phi, phi>", v1, -2.0 * s * (2.0 - s) * c * c * m),
        QuadFormReport::new(
            "<S'' i phi_x, i phi_x>",
            v2,
            -(c.powi(4) / 2.0) * (2.0 - s) * s * m,
        ),
        QuadFormReport::new(
            "<S'' i phi_x, phi>",
            v3,
            -(s + 1.0) * (2.0 - s) * s * c.powi(3) * m,
        ),
        QuadFormReport::new(
            "<S'' d_c phi, d_c phi>",
            -(c / 2.0) * dm - dp,
            dc_pairing_closed(p, a),
        ),
    ])
}

/// Direct whole-line quadrature of `⟨S''∂_cφ, ∂_cφ⟩`. The integrand decays
/// like `|x|^{-2/σ}`, so it converges, slowly; a cross-check only.
pub fn dc_pairing_direct(p: &WaveParams, rel_tol: f64) -> Result<f64> {
    let phi = ClosedField::profile(p, ProfileKind::Phi);
    let dc = ClosedField::profile(p, ProfileKind::DcPhi);
    integrate_line(
        |x| {
            let f = dc.jet(x);
            (apply_local(p, &phi.jet(x), &f) * f.value().conj()).re
        },
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_matrix_is_symmetric() {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = Grid::new(16.0, 128).unwrap();
        let a = assemble_dense(&p, &g).unwrap();
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut asym: f64 = 0.0;
        for i in 0..a.len() {
            for j in 0..i {
                asym = asym.max((a[i][j] - a[j][i]).abs());
            }
        }
        assert!(asym < 1e-10 * scale, "asymmetry {asym} vs scale {scale}");
    }
}
