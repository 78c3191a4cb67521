//! The endpoint solitary wave `φ_c = ϕ_c e^{iΘ}` and its derivatives.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutoff::{cutoff_jet, CutoffSpec};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::jet::{CTaylor, Taylor};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Exponent `σ ∈ (1, 2)` and speed `c > 0`; `ω = c²/4` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WaveParams {
    sigma: f64,
    c: f64,
    omega: f64,
}

impl WaveParams {
    pub fn new(sigma: f64, c: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 1.0 && sigma < 2.0) {
            return Err(Error::InvalidParams(format!(
                "sigma must lie strictly inside (1, 2), got {sigma}"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParams(format!("c must be positive, got {c}")));
        }
        Ok(Self {
            sigma,
            c,
            omega: c * c / 4.0,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Same exponent, different speed.
    pub fn with_c(&self, c: f64) -> Result<Self> {
        Self::new(self.sigma, c)
    }
}

impl<'de> Deserialize<'de> for WaveParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            sigma: f64,
            c: f64,
        }
        let r = Raw::deserialize(d)?;
        WaveParams::new(r.sigma, r.c).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileKind {
    Amplitude,
    Phi,
    DxPhi,
    DcPhi,
    IDxPhi,
}

/// `ϕ_c(x) = (2c(σ+1) / (σ²c²x² + 1))^{1/(2σ)}`.
pub fn varphi(p: &WaveParams, x: f64) -> f64 {
    let (s, c) = (p.sigma, p.c);
    let cx = c * x;
    (2.0 * c * (s + 1.0) / (s * s * cx * cx + 1.0)).powf(1.0 / (2.0 * s))
}

/// `∫_{-∞}^x ϕ_c^{2σ}`.
pub fn phase_integral(p: &WaveParams, x: f64) -> f64 {
    let s = p.sigma;
    2.0 * (s + 1.0) / s * ((s * p.c * x).atan() + FRAC_PI_2)
}

/// `Θ(x) = cx/2 − (1/σ)(arctan(σcx) + π/2)`.
pub fn phase(p: &WaveParams, x: f64) -> f64 {
    p.c * x / 2.0 - ((p.sigma * p.c * x).atan() + FRAC_PI_2) / p.sigma
}

/// Phase with the carrier `cx/2` removed.
fn envelope_phase(p: &WaveParams, x: Taylor) -> Taylor {
    x.scale(p.sigma * p.c).atan().add_const(FRAC_PI_2).scale(-1.0 / p.sigma)
}

fn amplitude_taylor(p: &WaveParams, x: Taylor) -> Taylor {
    let (s, c) = (p.sigma, p.c);
    let q = (x * x).scale(s * s * c * c).add_const(1.0);
    q.powf(-1.0 / (2.0 * s))
        .scale((2.0 * c * (s + 1.0)).powf(1.0 / (2.0 * s)))
}

/// Carrier of the envelope representation of `kind`.
pub fn carrier(p: &WaveParams, kind: ProfileKind) -> f64 {
    match kind {
        ProfileKind::Amplitude => 0.0,
        _ => p.c / 2.0,
    }
}

/// Envelope jet `g` with `profile = e^{i k x} g`, `k = carrier(p, kind)`.
pub fn envelope_jet(p: &WaveParams, kind: ProfileKind, x0: f64) -> CTaylor {
    let x = Taylor::var(x0);
    let amp = amplitude_taylor(p, x);
    if kind == ProfileKind::Amplitude {
        return CTaylor::from_real(amp);
    }
    let g = CTaylor::cis(envelope_phase(p, x)).mul_real(amp);
    let k = p.c / 2.0;
    match kind {
        ProfileKind::Amplitude => unreachable!(),
        ProfileKind::Phi => g,
        ProfileKind::DxPhi => g.derivative() + g.scale(I * k),
        ProfileKind::IDxPhi => (g.derivative() + g.scale(I * k)).scale(I),
        ProfileKind::DcPhi => {
            let (s, c) = (p.sigma, p.c);
            let u = (x * x).scale(s * s * c * c);
            let d = u.add_const(1.0).recip();
            let dlog = (u.scale(-1.0).add_const(1.0) * d).scale(1.0 / (2.0 * s * c));
            let dtheta = x.scale(0.5) - x * d;
            g * CTaylor::from_parts(dlog, dtheta)
        }
    }
}

/// Pointwise value of a profile.
pub fn profile_value(p: &WaveParams, kind: ProfileKind, x: f64) -> Complex64 {
    let g = envelope_jet(p, kind, x).c[0];
    g * Complex64::from_polar(1.0, carrier(p, kind) * x)
}

pub fn sample(p: &WaveParams, g: &Grid, kind: ProfileKind) -> ComplexField {
    let values = g.nodes().map(|x| profile_value(p, kind, x)).collect();
    ComplexField::from_parts_unchecked(*g, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub max_ratio: f64,
    pub argmax: f64,
}

/// `sup |f(x)| / ⟨x⟩^exponent` over the nodes.
pub fn envelope_check(f: &ComplexField, exponent: f64) -> EnvelopeReport {
    f.grid()
        .nodes()
        .zip(f.values())
        .map(|(x, z)| (z.norm() / (1.0 + x * x).sqrt().powf(exponent), x))
        .fold(
            EnvelopeReport {
                max_ratio: 0.0,
                argmax: 0.0,
            },
            |acc, (r, x)| {
                if r > acc.max_ratio {
                    EnvelopeReport {
                        max_ratio: r,
                        argmax: x,
                    }
                } else {
                    acc
                }
            },
        )
}

/// `|φ_c(-L) − φ_c(L)|`, the jump the periodic box sees.
pub fn wrap_mismatch(p: &WaveParams, half_width: f64) -> f64 {
    (profile_value(p, ProfileKind::Phi, -half_width) - profile_value(p, ProfileKind::Phi, half_width))
        .norm()
}

/// Half-width near `target` for which `φ_c` is continuous across the wrap,
/// i.e. `Θ(L) − Θ(−L) = cL − (2/σ)arctan(σcL)` is a multiple of `2π`.
pub fn matched_half_width(p: &WaveParams, target: f64) -> f64 {
    let (s, c) = (p.sigma, p.c);
    let g = |l: f64| c * l - 2.0 / s * (s * c * l).atan();
    let dg = |l: f64| c - 2.0 * c / (1.0 + s * s * c * c * l * l);
    let m = (g(target) / (2.0 * PI)).round().max(1.0);
    let goal = 2.0 * PI * m;
    let mut l = target;
    for _ in 0..50 {
        let step = (g(l) - goal) / dg(l);
        l -= step;
        if step.abs() < 1e-14 * l {
            break;
        }
    }
    l
}

/// Grid on the wrap-matched box closest to `target`.
pub fn matched_grid(p: &WaveParams, target: f64, n_points: usize) -> Result<Grid> {
    Grid::new(matched_half_width(p, target), n_points)
}

/// Interior max-norm residuals of the two profile equations,
///
/// ```text
/// −ϕ'' + (c/2)ϕ^{2σ+1} − (2σ+1)/(2σ+2)² ϕ^{4σ+1} = 0,
/// −φ'' + (c²/4)φ + ciφ' − i|φ|^{2σ}φ' = 0,
/// ```
///
/// with endpoint-corrected spectral derivatives, over `|x| <= L/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileResiduals {
    pub amplitude: f64,
    pub complex: f64,
}

pub fn profile_residuals(p: &WaveParams, g: &Grid) -> ProfileResiduals {
    use crate::grid::{derivatives, DerivativeRule};
    let (s, c) = (p.sigma, p.c);
    let amp = sample(p, g, ProfileKind::Amplitude);
    let phi = sample(p, g, ProfileKind::Phi);
    let (_, a2) = derivatives(&amp, DerivativeRule::EndpointCorrected);
    let (p1, p2) = derivatives(&phi, DerivativeRule::EndpointCorrected);
    let k = (2.0 * s + 1.0) / (2.0 * s + 2.0).powi(2);
    let half = g.half_width() / 2.0;
    let mut out = ProfileResiduals {
        amplitude: 0.0,
        complex: 0.0,
    };
    for (j, x) in g.nodes().enumerate() {
        if x.abs() > half {
            continue;
        }
        let v = amp.values()[j].re;
        let ra = -a2.values()[j].re + c / 2.0 * v.powf(2.0 * s + 1.0) - k * v.powf(4.0 * s + 1.0);
        let u = phi.values()[j];
        let du = p1.values()[j];
        let rc = -p2.values()[j] + c * c / 4.0 * u + I * c * du - I * u.norm_sqr().powf(s) * du;
        out.amplitude = out.amplitude.max(ra.abs());
        out.complex = out.complex.max(rc.norm());
    }
    out
}

/// Value, first and second derivative of an envelope `g` with
/// `f = e^{ikx} g`. Phase-free: the factor `e^{ikx}` is never formed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalJet {
    pub k: f64,
    pub g: [Complex64; 3],
}

impl LocalJet {
    pub fn from_taylor(k: f64, t: &CTaylor) -> Self {
        Self {
            k,
            g: [t.c[0], t.c[1], t.c[2] * 2.0],
        }
    }

    /// Sampled field at a node: carrier 0.
    pub fn plain(v: Complex64, d1: Complex64, d2: Complex64) -> Self {
        Self { k: 0.0, g: [v, d1, d2] }
    }

    pub fn value(&self) -> Complex64 {
        self.g[0]
    }

    /// `e^{-ikx} f'`.
    pub fn d1(&self) -> Complex64 {
        self.g[1] + I * self.k * self.g[0]
    }

    /// `e^{-ikx} f''`.
    pub fn d2(&self) -> Complex64 {
        self.g[2] + I * (2.0 * self.k) * self.g[1] - self.k * self.k * self.g[0]
    }

    /// Same field, envelope taken against carrier `k_new`.
    pub fn recarrier(&self, k_new: f64, x: f64) -> Self {
        let dk = self.k - k_new;
        if dk == 0.0 {
            return *self;
        }
        let e = Complex64::from_polar(1.0, dk * x);
        let [g0, g1, g2] = self.g;
        Self {
            k: k_new,
            g: [
                e * g0,
                e * (g1 + I * dk * g0),
                e * (g2 + I * (2.0 * dk) * g1 - dk * dk * g0),
            ],
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            k: self.k,
            g: self.g.map(|z| z * s),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.k, o.k);
        Self {
            k: self.k,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1], self.g[2] + o.g[2]],
        }
    }
}

/// Multiplicative window applied to a term of a closed-form field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window {
    Whole,
    /// `χ_R`
    Inside(CutoffSpec),
    /// `1 − χ_R`
    Outside(CutoffSpec),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coef: Complex64,
    pub kind: ProfileKind,
    pub window: Window,
}

/// Finite linear combination of windowed profiles, all with the same
/// parameters. Evaluated exactly at any point, so it can be integrated over
/// the whole line.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedField {
    params: WaveParams,
    terms: Vec<Term>,
}

impl ClosedField {
    pub fn profile(p: &WaveParams, kind: ProfileKind) -> Self {
        Self {
            params: *p,
            terms: vec![Term {
                coef: 1.0.into(),
                kind,
                window: Window::Whole,
            }],
        }
    }

    pub fn zero(p: &WaveParams) -> Self {
        Self {
            params: *p,
            terms: Vec::new(),
        }
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn with_term(mut self, coef: Complex64, kind: ProfileKind, window: Window) -> Self {
        self.terms.push(Term { coef, kind, window });
        self
    }

    pub fn scaled(mut self, s: Complex64) -> Self {
        self.terms.iter_mut().for_each(|t| t.coef *= s);
        self
    }

    /// `self + s·other`.
    pub fn plus(mut self, s: Complex64, other: &ClosedField) -> Result<Self> {
        if self.params != other.params {
            return Err(Error::Domain("closed fields with different parameters".into()));
        }
        self.terms
            .extend(other.terms.iter().map(|t| Term { coef: t.coef * s, ..*t }));
        Ok(self)
    }

    pub fn carrier(&self) -> f64 {
        if self.terms.iter().all(|t| t.kind == ProfileKind::Amplitude) {
            0.0
        } else {
            self.params.c / 2.0
        }
    }

    pub fn taylor(&self, x: f64) -> CTaylor {
        let k = self.carrier();
        let p = &self.params;
        let mut acc = CTaylor::zero();
        for t in &self.terms {
            let w = match t.window {
                Window::Whole => None,
                Window::Inside(s) => Some(cutoff_jet(&s, x)),
                Window::Outside(s) => Some(-cutoff_jet(&s, x).add_const(-1.0)),
            };
            if let Some(w) = w {
                if w.c.iter().all(|v| *v == 0.0) {
                    continue;
                }
            }
            let mut e = envelope_jet(p, t.kind, x);
            let kt = carrier(p, t.kind);
            if kt != k {
                e = e * CTaylor::cis(Taylor::var(x).scale(kt - k));
            }
            if let Some(w) = w {
                e = e.mul_real(w);
            }
            acc = acc + e.scale(t.coef);
        }
        acc
    }

    pub fn jet(&self, x: f64) -> LocalJet {
        LocalJet::from_taylor(self.carrier(), &self.taylor(x))
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.jet(x).value() * Complex64::from_polar(1.0, self.carrier() * x)
    }

    pub fn sample(&self, g: &Grid) -> ComplexField {
        let values = g.nodes().map(|x| self.value(x)).collect();
        ComplexField::from_parts_unchecked(*g, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> WaveParams {
        WaveParams::new(1.5, 1.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(WaveParams::new(1.0, 1.0).is_err());
        assert!(WaveParams::new(2.0, 1.0).is_err());
        assert!(WaveParams::new(1.5, 0.0).is_err());
        assert!(WaveParams::new(f64::NAN, 1.0).is_err());
        let q = WaveParams::new(1.3, 3.0).unwrap();
        assert_eq!(q.omega(), 2.25);
        let parsed: std::result::Result<WaveParams, _> =
            serde_json::from_str(r#"{"sigma": 2.2, "c": 1.0}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn amplitude_values() {
        assert_relative_eq!(varphi(&p(), 0.0), 5f64.powf(1.0 / 3.0), max_relative = 1e-15);
        assert_relative_eq!(varphi(&p(), 100.0), (5.0f64 / 22501.0).powf(1.0 / 3.0), max_relative = 1e-15);
        assert_relative_eq!(varphi(&p(), 100.0), 0.060_569_789, max_relative = 1e-8);
    }

    #[test]
    fn phase_limits() {
        assert_relative_eq!(phase(&p(), 0.0), -PI / 3.0, max_relative = 1e-15);
        let far = 1e12;
        assert!((phase(&p(), -far) + far / 2.0).abs() < 1e-9);
        assert!((phase(&p(), far) - far / 2.0 + PI / 1.5).abs() < 1e-3);
    }

    #[test]
    fn envelope_jets_match_pointwise_formulas() {
        let q = WaveParams::new(1.3, 0.7).unwrap();
        for &x in &[-3.0, -0.2, 0.0, 0.9, 12.0] {
            let (s, c) = (q.sigma(), q.c());
            let phi = profile_value(&q, ProfileKind::Phi, x);
            assert_relative_eq!(phi.norm(), varphi(&q, x), max_relative = 1e-14);
            let th = phase(&q, x);
            let dtheta = c / 2.0 - c / (1.0 + s * s * c * c * x * x);
            let damp = -varphi(&q, x) * s * c * c * x / (1.0 + s * s * c * c * x * x);
            let expect = Complex64::from_polar(1.0, th) * Complex64::new(damp, dtheta * varphi(&q, x));
            let got = profile_value(&q, ProfileKind::DxPhi, x);
            assert!((got - expect).norm() < 1e-13);
            assert!((profile_value(&q, ProfileKind::IDxPhi, x) - I * expect).norm() < 1e-13);
        }
    }

    #[test]
    fn matched_box_is_continuous() {
        let l = matched_half_width(&p(), 400.0);
        assert!((l - 400.0).abs() < 4.0);
        assert!(wrap_mismatch(&p(), l) < 1e-10);
        assert!(wrap_mismatch(&p(), 400.0) > 1e-2);
    }

    #[test]
    fn closed_field_windows() {
        let q = p();
        let s = CutoffSpec::new(5.0).unwrap();
        let f = ClosedField::profile(&q, ProfileKind::DcPhi);
        let inside = ClosedField::zero(&q).with_term(1.0.into(), ProfileKind::DcPhi, Window::Inside(s));
        let outside = ClosedField::zero(&q).with_term(1.0.into(), ProfileKind::DcPhi, Window::Outside(s));
        for &x in &[0.0, 6.0, 7.5, 9.0, 20.0] {
            let sum = inside.jet(x).add(&outside.jet(x));
            let whole = f.jet(x);
            for k in 0..3 {
                assert!((sum.g[k] - whole.g[k]).norm() < 1e-12);
            }
        }
        assert_eq!(outside.value(2.0), Complex64::new(0.0, 0.0));
        let mixed = ClosedField::profile(&q, ProfileKind::Amplitude)
            .plus(1.0.into(), &ClosedField::profile(&q, ProfileKind::Phi))
            .unwrap();
        let x = 1.3;
        let expect = varphi(&q, x) + profile_value(&q, ProfileKind::Phi, x);
        assert!((mixed.value(x) - expect).norm() < 1e-13);
    }
}
