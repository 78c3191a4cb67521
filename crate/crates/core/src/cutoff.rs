//! Smooth plateau cutoff `χ_R(x) = χ(x/R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Taylor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    radius: f64,
}

impl CutoffSpec {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain(format!("cutoff radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

fn flat(t: Taylor) -> Taylor {
    if t.value() <= 0.0 {
        Taylor::zero()
    } else {
        t.recip().scale(-1.0).exp()
    }
}

/// Jet of `χ` at the point described by `u` (already divided by R).
fn chi_jet(u: Taylor) -> Taylor {
    let a = u.value().abs();
    if a <= 1.0 {
        return Taylor::constant(1.0);
    }
    if a >= 2.0 {
        return Taylor::zero();
    }
    let abs = if u.value() < 0.0 { -u } else { u };
    let up = flat(abs.scale(-1.0).add_const(2.0));
    let down = flat(abs.add_const(-1.0));
    up * (up + down).recip()
}

/// `χ_R` expanded at `x`.
pub fn cutoff_jet(spec: &CutoffSpec, x: f64) -> Taylor {
    chi_jet(Taylor::var(x).scale(1.0 / spec.radius))
}

pub fn cutoff(spec: &CutoffSpec, x: f64) -> f64 {
    cutoff_jet(spec, x).value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_band() {
        let s = CutoffSpec::new(10.0).unwrap();
        assert_eq!(cutoff(&s, 5.0), 1.0);
        assert_eq!(cutoff(&s, -10.0), 1.0);
        assert_eq!(cutoff(&s, 30.0), 0.0);
        let v = cutoff(&s, 15.0);
        assert!(v > 0.0 && v < 1.0);
        assert_eq!(v, cutoff(&s, -15.0));
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_difference() {
        let s = CutoffSpec::new(3.0).unwrap();
        for &x in &[3.3, 4.1, 5.2, -4.4] {
            let j = cutoff_jet(&s, x);
            let h = 1e-5;
            let fd = (cutoff(&s, x + h) - cutoff(&s, x - h)) / (2.0 * h);
            assert!((j.deriv(1) - fd).abs() < 1e-8);
            assert!(j.deriv(1) * x.signum() <= 0.0);
        }
    }
}
