use gdnls_core::linearization::apply_second_variation;
use gdnls_core::modulation::{residuals_f, solve_modulation};
use gdnls_core::profile::{matched_grid, sample, varphi};
use gdnls_core::quadrature::integrate_line;
use gdnls_core::{ComplexField, Grid, ProfileKind, WaveParams};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn params() -> impl Strategy<Value = WaveParams> {
    (1.05f64..1.95, 0.3f64..3.0).prop_map(|(s, c)| WaveParams::new(s, c).unwrap())
}

/// Sum of two modulated Gaussians, localized well inside the box.
fn bump() -> impl Strategy<Value = [f64; 10]> {
    prop::array::uniform10(-1.0f64..1.0)
}

fn field(g: &Grid, b: &[f64; 10]) -> ComplexField {
    ComplexField::from_fn(*g, |x| {
        (0..2)
            .map(|i| {
                let o = 5 * i;
                let (x0, w, k) = (4.0 * b[o], 1.0 + 0.5 * b[o + 1], 2.0 * b[o + 2]);
                Complex64::new(b[o + 3], b[o + 4])
                    * (-((x - x0) / w).powi(2)).exp()
                    * Complex64::from_polar(1.0, k * x)
            })
            .sum()
    })
    .unwrap()
}

fn small_grid() -> Grid {
    Grid::new(40.0, 1024).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn amplitude_is_even_and_peaks_at_zero(p in params(), x in -1e4f64..1e4) {
        prop_assert_eq!(varphi(&p, x), varphi(&p, -x));
        prop_assert!(varphi(&p, x) <= varphi(&p, 0.0));
        prop_assert!(varphi(&p, x) > 0.0);
    }

    #[test]
    fn power_tails_integrate(a in 0.55f64..3.0) {
        let v = integrate_line(|x| (1.0 + x * x).powf(-a), 1e-10).unwrap();
        let exact = (0.5 * std::f64::consts::PI.ln()
            + statrs::function::gamma::ln_gamma(a - 0.5)
            - statrs::function::gamma::ln_gamma(a)).exp();
        prop_assert!((v - exact).abs() < 1e-8 * exact, "{} vs {}", v, exact);
    }

    #[test]
    fn second_variation_is_real_linear(f in bump(), h in bump(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = small_grid();
        let (f, h) = (field(&g, &f), field(&g, &h));
        let lhs = apply_second_variation(&p, &f.combine(a.into(), &h, b.into()).unwrap());
        let rhs = apply_second_variation(&p, &f)
            .combine(a.into(), &apply_second_variation(&p, &h), b.into())
            .unwrap();
        let scale = 1.0 + rhs.max_abs();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-11 * scale);
    }

    #[test]
    fn second_variation_is_symmetric(f in bump(), h in bump()) {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = small_grid();
        let (f, h) = (field(&g, &f), field(&g, &h));
        let fh = apply_second_variation(&p, &f).inner(&h).unwrap();
        let hf = apply_second_variation(&p, &h).inner(&f).unwrap();
        let scale = 1.0 + fh.abs().max(hf.abs());
        prop_assert!((fh - hf).abs() < 1e-8 * scale, "{} vs {}", fh, hf);
    }

    #[test]
    fn modulation_fit_is_equivariant(t0 in 0.0f64..TAU, y0 in -5.0f64..5.0, b in bump()) {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = matched_grid(&p, 100.0, 2048).unwrap();
        let phi = sample(&p, &g, ProfileKind::Phi);
        let u = phi.combine(1.0.into(), &field(&g, &b), 0.05.into()).unwrap();
        let base = solve_modulation(&u, &p, (0.0, 0.0)).unwrap();
        let moved = u.fourier_shift(y0).scale(Complex64::from_polar(1.0, t0));
        let fit = solve_modulation(&moved, &p, (0.0, 0.0)).unwrap();
        let dtheta = (fit.theta - base.theta - t0).rem_euclid(TAU);
        prop_assert!(dtheta.min(TAU - dtheta) < 1e-7, "{:?} {:?}", base, fit);
        prop_assert!((fit.y - base.y - y0).abs() < 1e-7, "{:?} {:?}", base, fit);
    }

    #[test]
    fn residuals_vanish_on_the_orbit(t0 in 0.0f64..TAU, y0 in -5.0f64..5.0) {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = matched_grid(&p, 100.0, 2048).unwrap();
        let u = sample(&p, &g, ProfileKind::Phi)
            .fourier_shift(y0)
            .scale(Complex64::from_polar(1.0, t0));
        let [f1, f2] = residuals_f(&u, &p, t0, y0);
        prop_assert!(f1.abs() < 1e-9 && f2.abs() < 1e-9, "{} {}", f1, f2);
    }
}

#[test]
fn second_variation_is_not_complex_linear() {
    let p = WaveParams::new(1.5, 1.0).unwrap();
    let g = small_grid();
    let f = field(&g, &[0.1, 0.2, 0.3, 0.8, -0.2, -0.3, 0.1, -0.4, 0.5, 0.6]);
    let i = Complex64::new(0.0, 1.0);
    let a = apply_second_variation(&p, &f.scale(i));
    let b = apply_second_variation(&p, &f).scale(i);
    assert!(a.sub(&b).unwrap().max_abs() > 1e-2 * b.max_abs());
}

#[test]
fn symmetry_directions_span_the_kernel() {
    let p = WaveParams::new(1.5, 1.0).unwrap();
    let g = matched_grid(&p, 200.0, 8192).unwrap();
    let dx = apply_second_variation(&p, &sample(&p, &g, ProfileKind::DxPhi));
    assert!(dx.interior_max_abs(0.5) < 1e-8);
    let iphi = sample(&p, &g, ProfileKind::Phi).scale(Complex64::new(0.0, 1.0));
    assert!(apply_second_variation(&p, &iphi).interior_max_abs(0.5) < 1e-8);
}
