//! Quadrature rules: the periodic trapezoid for sampled fields and a
//! globally adaptive Gauss–Kronrod rule for closed-form integrands on the
//! whole line.
//!
//! Integrands here decay only algebraically (as slowly as `|x|^{-2/σ}` with
//! `2/σ` close to 1), so a compactifying map cannot resolve the far field in
//! double precision. The line is split at `±X`: the core is integrated in
//! `x = sinh s` and each tail is summed exactly for the power law fitted
//! from `f(X), f(2X), f(4X)`.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{QuadratureError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureMethod {
    GridTrapezoid,
    TransformedAdaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    pub rel_tol: f64,
}

impl QuadratureSpec {
    pub fn new(method: QuadratureMethod, rel_tol: f64) -> Result<Self> {
        if !(rel_tol.is_finite() && rel_tol > 0.0 && rel_tol < 1e-4) {
            return Err(crate::Error::Domain(format!(
                "rel_tol must lie in (0, 1e-4), got {rel_tol}"
            )));
        }
        Ok(Self { method, rel_tol })
    }

    pub fn adaptive() -> Self {
        Self {
            method: QuadratureMethod::TransformedAdaptive,
            rel_tol: 1e-10,
        }
    }

    pub fn grid() -> Self {
        Self {
            method: QuadratureMethod::GridTrapezoid,
            rel_tol: 1e-10,
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::adaptive()
    }
}

/// Periodic trapezoid sum.
pub fn trapezoid(values: impl IntoIterator<Item = f64>, h: f64) -> f64 {
    values.into_iter().sum::<f64>() * h
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk21(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> std::result::Result<Panel, QuadratureError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite(x))
        }
    };
    let fc = eval(c)?;
    let mut f1 = [0.0; 10];
    let mut f2 = [0.0; 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        f1[j] = eval(c - dx)?;
        f2[j] = eval(c + dx)?;
    }
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    let mut abs = WGK[10] * fc.abs();
    for j in 0..10 {
        k += WGK[j] * (f1[j] + f2[j]);
        abs += WGK[j] * (f1[j].abs() + f2[j].abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1[j] + f2[j]);
        }
    }
    let value = k * h;
    let abs = abs * h.abs();
    let mut error = ((k - g) * h).abs();
    let mean = k * 0.5;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    asc *= h.abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs);
    }
    Ok(Panel {
        a,
        b,
        value,
        error,
        abs,
    })
}

/// Adaptive Gauss–Kronrod (10/21) on `[a, b]`.
pub fn integrate_interval(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_panels: usize,
) -> std::result::Result<(f64, f64), QuadratureError> {
    adaptive(f, a, b, rel_tol, max_panels).map(|(v, e, _)| (v, e))
}

/// Value, error estimate and `∫|f|`.
fn adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_panels: usize,
) -> std::result::Result<(f64, f64, f64), QuadratureError> {
    let first = gk21(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut err = first.error;
    let mut abs = first.abs;
    heap.push(first);
    let mut panels = 1;
    loop {
        let tol = (rel_tol * total.abs())
            .max(1e-3 * rel_tol * abs)
            .max(100.0 * f64::EPSILON * abs)
            .max(1e-300);
        if err <= tol {
            return Ok((total, err, abs));
        }
        if panels >= max_panels {
            return Err(QuadratureError::ToleranceNotMet {
                tol,
                intervals: panels,
                estimate: err,
            });
        }
        let worst = heap.pop().expect("non-empty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(QuadratureError::ToleranceNotMet {
                tol,
                intervals: panels,
                estimate: err,
            });
        }
        let l = gk21(&f, worst.a, mid)?;
        let r = gk21(&f, mid, worst.b)?;
        total += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        abs += l.abs + r.abs - worst.abs;
        heap.push(l);
        heap.push(r);
        panels += 1;
        if panels % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
            abs = heap.iter().map(|p| p.abs).sum();
        }
    }
}

/// Split point between the resolved core and the summed power-law tails.
pub const TAIL_START: f64 = 1e8;

/// `∫_X^∞ f` for `f ~ C x^{-p}`, from samples at `X, 2X, 4X`. A tail whose
/// samples are below `floor` is rounding noise and counts as zero.
fn power_tail(
    f: &impl Fn(f64) -> f64,
    x: f64,
    floor: f64,
) -> std::result::Result<f64, QuadratureError> {
    let f1 = f(x);
    let f2 = f(2.0 * x);
    let f4 = f(4.0 * x);
    for (v, at) in [(f1, x), (f2, 2.0 * x), (f4, 4.0 * x)] {
        if !v.is_finite() {
            return Err(QuadratureError::NonFinite(at));
        }
    }
    if f1 == 0.0 && f2 == 0.0 && f4 == 0.0 {
        return Ok(0.0);
    }
    let negligible = [f1, f2, f4].iter().all(|v| v.abs() * x <= floor);
    let irregular = if f1 * f2 <= 0.0 || f2 * f4 <= 0.0 {
        true
    } else {
        let p1 = (f1 / f2).log2();
        let p2 = (f2 / f4).log2();
        (p1 - p2).abs() > 1e-5 * p1.abs().max(1.0)
    };
    if irregular {
        return if negligible {
            Ok(0.0)
        } else {
            Err(QuadratureError::IrregularTail)
        };
    }
    let p1 = (f1 / f2).log2();
    if p1 <= 1.0 + 1e-9 {
        return Err(QuadratureError::NonIntegrableTail { exponent: p1 });
    }
    Ok(f1 * x / (p1 - 1.0))
}

/// `∫_ℝ f` for an integrand that is smooth on `[-X, X]` and a power law
/// beyond.
pub fn integrate_line(f: impl Fn(f64) -> f64, rel_tol: f64) -> Result<f64> {
    let s_max = TAIL_START.asinh();
    let g = |s: f64| {
        let (sh, ch) = (s.sinh(), s.cosh());
        f(sh) * ch
    };
    let (core, _, abs) = adaptive(g, -s_max, s_max, rel_tol, 20_000)?;
    let floor = 1e-3 * rel_tol * abs;
    let right = power_tail(&f, TAIL_START, floor)?;
    let left = power_tail(&|x: f64| f(-x), TAIL_START, floor)?;
    Ok(core + right + left)
}

/// `∫_a^b f`, for integrands supported in a known bounded window.
pub fn integrate_window(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    Ok(integrate_interval(f, a, b, rel_tol, 4000)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn smooth_interval() {
        let (v, _) = integrate_interval(|x| x.sin(), 0.0, PI, 1e-12, 100).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
    }

    #[test]
    fn lorentzian_and_gaussian() {
        let v = integrate_line(|x| 1.0 / (1.0 + x * x), 1e-12).unwrap();
        assert_relative_eq!(v, PI, max_relative = 1e-11);
        let v = integrate_line(|x| (-x * x).exp(), 1e-12).unwrap();
        assert_relative_eq!(v, PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn slow_tail_is_summed() {
        // ∫ (1+x²)^{-0.52} = √π Γ(0.02)/Γ(0.52)
        let exact = PI.sqrt() * statrs::function::gamma::gamma(0.02) / statrs::function::gamma::gamma(0.52);
        let v = integrate_line(|x| (1.0 + x * x).powf(-0.52), 1e-11).unwrap();
        assert_relative_eq!(v, exact, max_relative = 1e-9);
    }

    #[test]
    fn divergent_tail_is_rejected() {
        let e = integrate_line(|x| (1.0 + x * x).powf(-0.5), 1e-10).unwrap_err();
        assert!(matches!(
            e,
            crate::Error::Quadrature(QuadratureError::NonIntegrableTail { .. })
        ));
    }

    #[test]
    fn odd_integrand_vanishes() {
        let v = integrate_line(|x| x / (1.0 + x * x).powi(2), 1e-10).unwrap();
        assert!(v.abs() < 1e-12);
    }
}
