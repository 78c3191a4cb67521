use approx::assert_relative_eq;
use gdnls_core::functionals::a_sigma;
use gdnls_core::linearization::{dc_pairing_closed, dc_pairing_direct, sign_suite};
use gdnls_core::negative_direction::{interior_leak, CutoffSpec};
use gdnls_core::{Grid, QuadratureSpec, WaveParams};

#[test]
fn signed_pairings_match_closed_forms() {
    let g = Grid::new(200.0, 1024).unwrap();
    for s in [1.2, 1.5, 1.8] {
        let p = WaveParams::new(s, 1.0).unwrap();
        let suite = sign_suite(&p, &g, &QuadratureSpec::adaptive()).unwrap();
        assert_eq!(suite.len(), 4);
        for r in &suite {
            assert!(r.rel_error.unwrap() < 1e-5, "sigma {s}: {r:?}");
        }
        assert!(suite[..3].iter().all(|r| r.value < 0.0));
        assert!(suite[3].value > 0.0);
    }
}

#[test]
fn c_factor_is_kept_away_from_unit_speed() {
    let p = WaveParams::new(1.5, 2.0).unwrap();
    let suite = sign_suite(&p, &Grid::new(200.0, 1024).unwrap(), &QuadratureSpec::adaptive()).unwrap();
    assert!(suite[3].rel_error.unwrap() < 1e-6);
    let unit = dc_pairing_closed(&WaveParams::new(1.5, 1.0).unwrap(), a_sigma(1.5).unwrap());
    assert_relative_eq!(suite[3].value, unit * 2f64.powf(1.0 / 1.5 - 1.0), max_relative = 1e-6);
}

#[test]
fn direct_pairing_converges() {
    let p = WaveParams::new(1.5, 1.0).unwrap();
    let direct = dc_pairing_direct(&p, 1e-10).unwrap();
    let closed = dc_pairing_closed(&p, a_sigma(1.5).unwrap());
    assert_relative_eq!(direct, closed, max_relative = 1e-7);
}

#[test]
fn exterior_piece_does_not_leak_inward() {
    let p = WaveParams::new(1.5, 1.0).unwrap();
    let (closed, grid) = interior_leak(&p, &CutoffSpec::new(50.0).unwrap(), &Grid::new(200.0, 8192).unwrap());
    assert_eq!(closed, 0.0);
    assert!(grid < 1e-11);
}
