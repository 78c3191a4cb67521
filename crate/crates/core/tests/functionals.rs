use approx::assert_relative_eq;
use gdnls_core::functionals::{
    a_sigma, action_and_nehari, b_sigma, dc_mass_momentum, identity_suite, mass, mass_closed,
    momentum, rescale_to_nehari,
};
use gdnls_core::profile::{matched_grid, sample};
use gdnls_core::{ClosedField, Grid, ProfileKind, QuadratureMethod, QuadratureSpec, WaveParams};
use statrs::function::gamma::ln_gamma;

// ∫(1+x²)^{-a} = √π Γ(a−½)/Γ(a)
fn beta_oracle(a: f64) -> f64 {
    (0.5 * std::f64::consts::PI.ln() + ln_gamma(a - 0.5) - ln_gamma(a)).exp()
}

#[test]
fn beta_integrals_match_gamma_functions() {
    for s in [1.1, 1.25, 1.5, 1.8, 1.95] {
        assert_relative_eq!(a_sigma(s).unwrap(), beta_oracle(1.0 / s), max_relative = 1e-10);
        assert_relative_eq!(b_sigma(s).unwrap(), beta_oracle(1.0 / s + 1.0), max_relative = 1e-10);
    }
    assert_relative_eq!(a_sigma(1.5).unwrap(), 7.285_951_943_66, max_relative = 1e-11);
}

#[test]
fn reference_mass_and_momentum() {
    let p = WaveParams::new(1.5, 1.0).unwrap();
    let q = QuadratureSpec::adaptive();
    let phi = ClosedField::profile(&p, ProfileKind::Phi);
    let m = mass(&phi, &q).unwrap();
    assert_relative_eq!(m, 7.101_417_574_3, max_relative = 1e-10);
    assert_relative_eq!(m, mass_closed(&p, beta_oracle(2.0 / 3.0)), max_relative = 1e-10);
    assert_relative_eq!(momentum(&phi, &q).unwrap(), -0.25 * m, max_relative = 1e-9);
}

#[test]
fn identities_hold_across_parameters() {
    let g = Grid::new(200.0, 1024).unwrap();
    let q = QuadratureSpec::adaptive();
    for s in [1.2, 1.5, 1.8] {
        for c in [0.5, 1.0, 2.0] {
            let p = WaveParams::new(s, c).unwrap();
            let r = identity_suite(&p, &g, &q).unwrap();
            for chk in &r.checks {
                assert!(chk.rel_error < 1e-6, "sigma {s} c {c}: {chk:?}");
            }
        }
    }
}

#[test]
fn grid_identities_approach_whole_line() {
    let p = WaveParams::new(1.5, 1.0).unwrap();
    let q = QuadratureSpec::grid();
    let g = matched_grid(&p, 400.0, 8192).unwrap();
    let r = identity_suite(&p, &g, &q).unwrap();
    let whole = identity_suite(&p, &g, &QuadratureSpec::adaptive()).unwrap();
    // the box misses a tail of size ∫_{|x|>L} ϕ² ~ L^{1−2/σ}
    assert!((r.mass - whole.mass).abs() / whole.mass < 0.2);
    assert!(r.mass < whole.mass);
}

#[test]
fn c_derivatives_are_proportional() {
    let p = WaveParams::new(1.5, 1.0).unwrap();
    let (dm, dp) = dc_mass_momentum(&p, 1e-12).unwrap();
    assert_relative_eq!(dp, 0.5 * dm, max_relative = 1e-9);
    assert_relative_eq!(dm, -7.101_417_574_3 / 3.0, max_relative = 1e-9);
}

#[test]
fn nehari_rescaling_zeroes_the_constraint() {
    let p = WaveParams::new(1.5, 1.0).unwrap();
    let g = Grid::new(60.0, 2048).unwrap();
    let u = sample(&p, &g, ProfileKind::Phi).scale_real(1.3);
    let (s, v) = rescale_to_nehari(&u, &p).unwrap();
    assert!(s < 1.0);
    let (_, k) = action_and_nehari(&v, &p, &QuadratureSpec::grid()).unwrap();
    assert!(k.abs() < 1e-12);
}

#[test]
fn tolerance_validation() {
    assert!(QuadratureSpec::new(QuadratureMethod::TransformedAdaptive, 0.5).is_err());
    assert!(QuadratureSpec::new(QuadratureMethod::GridTrapezoid, 1e-8).is_ok());
}
