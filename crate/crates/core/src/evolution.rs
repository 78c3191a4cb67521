//! Pseudo-spectral integration of
//!
//! ```text
//! ∂_t u = i ∂_x² u − |u|^{2σ} ∂_x u
//! ```
//!
//! on the periodic box, by the integrating-factor fourth-order Runge–Kutta
//! scheme: the dispersive part is propagated exactly by `e^{−ik²t}` and the
//! nonlinear term is evaluated pointwise, with an optional 2/3 mask on its
//! spectrum. `|u|^{2σ}` is formed as `(|u|²)^σ`, which is `C¹` at zero for
//! `σ > 1`.
//!
//! Explicit stability is governed by the transport term: with
//! `a = max|u|^{2σ}` and `k_max` the largest retained wavenumber,
//! `dt · a · k_max` must stay below `2√2 ≈ 2.83`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::grid_conserved;
use crate::grid::{ComplexField, DerivativeRule, FftPair, Grid};
use crate::modulation::{Spectrum, Templates};
use crate::negative_direction::NegativeDirection;
use crate::profile::{profile_value, ProfileKind, WaveParams};

/// Imaginary-axis stability bound of classical RK4.
pub const RK4_STABILITY: f64 = 2.828;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// Trace sampling period in steps.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Drop the nonlinear term (free Schrödinger flow).
    #[serde(default)]
    pub linear_only: bool,
}

fn default_true() -> bool {
    true
}

fn default_sample_every() -> usize {
    100
}

impl IntegratorSpec {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let s = Self {
            dt,
            t_end,
            dealias: true,
            sample_every: default_sample_every(),
            linear_only: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(Error::Domain("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }

    /// Largest wavenumber kept by the nonlinear evaluation on `g`.
    pub fn k_max(&self, g: &Grid) -> f64 {
        let nyquist = std::f64::consts::PI / g.spacing();
        if self.dealias {
            2.0 / 3.0 * nyquist
        } else {
            nyquist
        }
    }

    /// `dt · max|u|^{2σ} · k_max`, to be compared with [`RK4_STABILITY`].
    pub fn stability_number(&self, u: &ComplexField, sigma: f64) -> f64 {
        let a = u.values().iter().map(|z| z.norm_sqr().powf(sigma)).fold(0.0, f64::max);
        self.dt * a * self.k_max(u.grid())
    }
}

/// Reusable state for stepping one grid.
pub struct Stepper {
    sigma: f64,
    dt: f64,
    k: Vec<f64>,
    lin: Vec<Complex64>,
    lin2: Vec<Complex64>,
    mask: Vec<f64>,
    fft: FftPair,
    linear_only: bool,
    buf_u: Vec<Complex64>,
    buf_ux: Vec<Complex64>,
}

impl Stepper {
    pub fn new(g: &Grid, sigma: f64, spec: &IntegratorSpec) -> Result<Self> {
        spec.validate()?;
        let n = g.len();
        let k = g.wavenumbers();
        let k_cut = spec.k_max(g);
        let phase = |t: f64| k.iter().map(|k| Complex64::from_polar(1.0, -k * k * t)).collect();
        Ok(Self {
            sigma,
            dt: spec.dt,
            lin: phase(spec.dt),
            lin2: phase(0.5 * spec.dt),
            mask: k
                .iter()
                .enumerate()
                .map(|(j, k)| if j == n / 2 || k.abs() > k_cut * (1.0 + 1e-12) { 0.0 } else { 1.0 })
                .collect(),
            k,
            fft: FftPair::new(n),
            linear_only: spec.linear_only,
            buf_u: vec![Complex64::new(0.0, 0.0); n],
            buf_ux: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    /// Spectrum of `−|u|^{2σ} u_x`, masked.
    fn nonlinear(&mut self, uh: &[Complex64], out: &mut [Complex64]) {
        if self.linear_only {
            out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            return;
        }
        let n = uh.len();
        self.buf_u.copy_from_slice(uh);
        for (j, (d, (z, k))) in self.buf_ux.iter_mut().zip(uh.iter().zip(&self.k)).enumerate() {
            *d = if j == n / 2 { Complex64::new(0.0, 0.0) } else { z * Complex64::new(0.0, *k) };
        }
        self.fft.inverse(&mut self.buf_u);
        self.fft.inverse(&mut self.buf_ux);
        let s = self.sigma;
        for (o, (u, ux)) in out.iter_mut().zip(self.buf_u.iter().zip(&self.buf_ux)) {
            *o = -u.norm_sqr().powf(s) * ux;
        }
        self.fft.forward(out);
        for (o, m) in out.iter_mut().zip(&self.mask) {
            *o *= m;
        }
    }

    /// One step on the spectrum `uh`.
    pub fn step_spectrum(&mut self, uh: &mut [Complex64]) {
        let n = uh.len();
        let dt = self.dt;
        let zero = Complex64::new(0.0, 0.0);
        let mut a = vec![zero; n];
        let mut b = vec![zero; n];
        let mut c = vec![zero; n];
        let mut d = vec![zero; n];
        let mut tmp = vec![zero; n];
        self.nonlinear(uh, &mut a);
        for j in 0..n {
            tmp[j] = self.lin2[j] * (uh[j] + 0.5 * dt * a[j]);
        }
        self.nonlinear(&tmp, &mut b);
        for j in 0..n {
            tmp[j] = self.lin2[j] * uh[j] + 0.5 * dt * b[j];
        }
        self.nonlinear(&tmp, &mut c);
        for j in 0..n {
            tmp[j] = self.lin[j] * uh[j] + dt * self.lin2[j] * c[j];
        }
        self.nonlinear(&tmp, &mut d);
        for j in 0..n {
            uh[j] = self.lin[j] * uh[j]
                + dt / 6.0 * (self.lin[j] * a[j] + 2.0 * self.lin2[j] * (b[j] + c[j]) + d[j]);
        }
    }
}

fn to_field(g: &Grid, fft: &FftPair, uh: &[Complex64]) -> ComplexField {
    let mut v = uh.to_vec();
    fft.inverse(&mut v);
    ComplexField::from_parts_unchecked(*g, v)
}

/// Growth beyond which the run is treated as a suspected blow-up.
const BLOW_UP_FACTOR: f64 = 1e3;

fn check_finite(uh: &[Complex64], bound: f64, time: f64) -> Result<()> {
    let e: f64 = uh.iter().map(|z| z.norm_sqr()).sum();
    if !e.is_finite() || e > bound {
        return Err(Error::BlowUpSuspected { time });
    }
    Ok(())
}

/// One time step of the full equation.
pub fn step(u: &ComplexField, p: &WaveParams, spec: &IntegratorSpec) -> Result<ComplexField> {
    let g = u.grid();
    let mut st = Stepper::new(g, p.sigma(), spec)?;
    let mut uh = u.spectrum();
    st.step_spectrum(&mut uh);
    check_finite(&uh, f64::MAX, spec.dt)?;
    Ok(to_field(g, &st.fft, &uh))
}

/// `u` advanced to `t_end` with no monitoring.
pub fn propagate(u: &ComplexField, p: &WaveParams, spec: &IntegratorSpec) -> Result<ComplexField> {
    let g = u.grid();
    let mut st = Stepper::new(g, p.sigma(), spec)?;
    let mut uh = u.spectrum();
    let bound = uh.iter().map(|z| z.norm_sqr()).sum::<f64>() * BLOW_UP_FACTOR.powi(2);
    for s in 0..spec.steps() {
        st.step_spectrum(&mut uh);
        if s % 64 == 63 {
            check_finite(&uh, bound, (s + 1) as f64 * spec.dt)?;
        }
    }
    check_finite(&uh, bound, spec.t_end)?;
    Ok(to_field(g, &st.fft, &uh))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub e_drift: Vec<f64>,
    pub p_drift: Vec<f64>,
    pub m_drift: Vec<f64>,
    pub tube_distance: Vec<f64>,
    /// `A(u(t))` while the modulation fit converges; absent afterwards.
    pub a_values: Vec<Option<f64>>,
    pub theta_fit: Vec<f64>,
    pub y_fit: Vec<f64>,
    /// First sample at which the modulation fit failed or left the tube.
    pub exit_time: Option<f64>,
    /// Time at which a suspected blow-up stopped the run.
    pub aborted_at: Option<f64>,
}

impl EvolutionTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_drift(&self) -> f64 {
        self.e_drift
            .iter()
            .chain(&self.p_drift)
            .chain(&self.m_drift)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Fraction of consecutive pre-exit samples over which `A` does not
    /// decrease.
    pub fn a_monotone_fraction(&self) -> Option<f64> {
        let a: Vec<f64> = self.a_values.iter().map_while(|v| *v).collect();
        if a.len() < 2 {
            return None;
        }
        let up = a.windows(2).filter(|w| w[1] >= w[0]).count();
        Some(up as f64 / (a.len() - 1) as f64)
    }
}

fn rel(v: f64, v0: f64) -> f64 {
    if v0 == 0.0 {
        v - v0
    } else {
        (v - v0) / v0.abs()
    }
}

/// Evolve `u0`, sampling conserved quantities, the modulation fit, the
/// distance to the soliton orbit and, with `nd`, the functional `A`.
pub fn evolve(
    u0: &ComplexField,
    p: &WaveParams,
    spec: &IntegratorSpec,
    nd: Option<&NegativeDirection>,
) -> Result<(EvolutionTrace, ComplexField)> {
    let g = *u0.grid();
    let mut templates = Templates::new(p, &g);
    if let Some(nd) = nd {
        templates = templates.with_psi(&nd.psi)?;
    }
    let mut st = Stepper::new(&g, p.sigma(), spec)?;
    let mut uh = u0.spectrum();
    let start = to_field(&g, &st.fft, &uh);
    let (e0, p0, m0) = grid_conserved(&start, p.sigma(), DerivativeRule::Periodic);
    let bound = uh.iter().map(|z| z.norm_sqr()).sum::<f64>() * BLOW_UP_FACTOR.powi(2);
    let mut trace = EvolutionTrace::default();
    let mut last = (0.0, 0.0);
    let mut in_tube = true;
    let mut record = |t: f64, uh: &[Complex64], trace: &mut EvolutionTrace| {
        let u = to_field(&g, &st_fft(&g), uh);
        let (e, pp, m) = grid_conserved(&u, p.sigma(), DerivativeRule::Periodic);
        let s = Spectrum::of(&u);
        let fit = templates.solve(&s, last);
        let (theta, y, a) = match fit {
            Ok(f) if in_tube && templates.in_tube(&s, &f) => {
                let a = nd.map(|_| templates.a_value(&s, f.theta, f.y)).transpose()?;
                (f.theta, f.y, a)
            }
            _ => {
                if in_tube {
                    in_tube = false;
                    trace.exit_time = Some(t);
                }
                (f64::NAN, f64::NAN, None)
            }
        };
        let dist = templates.tube_distance(&s, last)?;
        last = (dist.fit.theta, dist.fit.y);
        trace.times.push(t);
        trace.e_drift.push(rel(e, e0));
        trace.p_drift.push(rel(pp, p0));
        trace.m_drift.push(rel(m, m0));
        trace.tube_distance.push(dist.distance);
        trace.a_values.push(a);
        trace.theta_fit.push(if theta.is_nan() { dist.fit.theta } else { theta });
        trace.y_fit.push(if y.is_nan() { dist.fit.y } else { y });
        Ok::<(), Error>(())
    };
    record(0.0, &uh, &mut trace)?;
    for s in 1..=spec.steps() {
        st.step_spectrum(&mut uh);
        let t = s as f64 * spec.dt;
        if s % spec.sample_every == 0 || s == spec.steps() {
            if let Err(Error::BlowUpSuspected { time }) = check_finite(&uh, bound, t) {
                trace.aborted_at = Some(time);
                break;
            }
            record(t, &uh, &mut trace)?;
        }
    }
    Ok((trace, to_field(&g, &st.fft, &uh)))
}

fn st_fft(g: &Grid) -> FftPair {
    FftPair::new(g.len())
}

/// `e^{ic²t/4} φ_c(x − ct)` sampled on `g`.
pub fn exact_soliton(p: &WaveParams, g: &Grid, t: f64) -> ComplexField {
    let c = p.c();
    let rot = Complex64::from_polar(1.0, p.omega() * t);
    ComplexField::from_fn(*g, |x| rot * profile_value(p, ProfileKind::Phi, x - c * t))
        .expect("finite profile")
}

/// The field seen in the frame moving with speed `c`.
pub fn comoving_view(u: &ComplexField, p: &WaveParams, t: f64) -> ComplexField {
    u.fourier_shift(-p.c() * t)
}

/// Escape thresholds of the instability experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeCriteria {
    /// Escape when the distance exceeds this multiple of its initial value.
    pub escape_factor: f64,
    /// The control run must stay below this multiple of `control_floor`.
    pub control_factor: f64,
    /// Distance attributed to discretization error alone.
    pub control_floor: f64,
}

impl Default for EscapeCriteria {
    fn default() -> Self {
        Self {
            escape_factor: 10.0,
            control_factor: 3.0,
            control_floor: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub beta: f64,
    pub escaped: bool,
    pub escape_time: Option<f64>,
    pub initial_distance: f64,
    pub max_distance: f64,
    pub control_max_distance: f64,
    pub control_clean: bool,
    pub a_monotone_fraction: Option<f64>,
    /// Largest relative drift of `E`, `P`, `M` in the perturbed run; large
    /// values mean the run outgrew the grid.
    pub max_drift: f64,
    /// True when neither escape nor control contamination was observed.
    pub inconclusive: bool,
    #[serde(skip)]
    pub trace: EvolutionTrace,
    #[serde(skip)]
    pub control: EvolutionTrace,
}

/// Evolve `φ_c + βψ` and the control `φ_c` side by side.
pub fn instability_experiment(
    nd: &NegativeDirection,
    beta: f64,
    spec: &IntegratorSpec,
    criteria: &EscapeCriteria,
) -> Result<ExperimentOutcome> {
    if !(beta.abs() <= 0.05) {
        return Err(Error::Domain(format!("|beta| must not exceed 0.05, got {beta}")));
    }
    let p = &nd.params;
    let g = *nd.psi.grid();
    let phi = crate::profile::sample(p, &g, ProfileKind::Phi);
    let u0 = phi.combine(1.0.into(), &nd.psi, beta.into())?;
    let (run, control) = std::thread::scope(|s| {
        let a = s.spawn(|| evolve(&u0, p, spec, Some(nd)));
        let b = s.spawn(|| evolve(&phi, p, spec, Some(nd)));
        (
            a.join().expect("perturbed run panicked"),
            b.join().expect("control run panicked"),
        )
    });
    let (trace, _) = run?;
    let (control, _) = control?;
    Ok(assess(beta, trace, control, criteria))
}

/// Escape bookkeeping for a perturbed run and its control.
pub fn assess(
    beta: f64,
    trace: EvolutionTrace,
    control: EvolutionTrace,
    criteria: &EscapeCriteria,
) -> ExperimentOutcome {
    let d0 = trace.tube_distance.first().copied().unwrap_or(0.0);
    let threshold = criteria.escape_factor * d0;
    let escape_time = if beta == 0.0 {
        None
    } else {
        trace
            .times
            .iter()
            .zip(&trace.tube_distance)
            .find(|(_, d)| **d > threshold)
            .map(|(t, _)| *t)
    };
    let max_distance = trace.tube_distance.iter().fold(0.0, |m: f64, v| m.max(*v));
    let control_max_distance = control.tube_distance.iter().fold(0.0, |m: f64, v| m.max(*v));
    let control_clean = control_max_distance < criteria.control_factor * criteria.control_floor;
    let escaped = escape_time.is_some() && control_clean;
    ExperimentOutcome {
        beta,
        escaped,
        escape_time,
        initial_distance: d0,
        max_distance,
        control_max_distance,
        control_clean,
        a_monotone_fraction: trace.a_monotone_fraction(),
        max_drift: trace.max_drift(),
        inconclusive: escape_time.is_none() && control_clean,
        trace,
        control,
    }
}

/// Observed orders from a sequence of step halvings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    /// `‖u_{dt} − u_{dt/2}‖_∞` for consecutive pairs.
    pub differences: Vec<f64>,
    pub orders: Vec<f64>,
}

/// Temporal self-convergence: `refinements` halvings starting from
/// `spec.dt`, all run to `spec.t_end`.
pub fn convergence_study(
    u0: &ComplexField,
    p: &WaveParams,
    spec: &IntegratorSpec,
    refinements: usize,
) -> Result<ConvergenceReport> {
    if refinements < 3 {
        return Err(Error::Domain(format!("need at least 3 refinements, got {refinements}")));
    }
    let dts: Vec<f64> = (0..refinements).map(|i| spec.dt / 2f64.powi(i as i32)).collect();
    let finals = std::thread::scope(|s| {
        let handles: Vec<_> = dts
            .iter()
            .map(|&dt| {
                let sp = IntegratorSpec { dt, ..*spec };
                s.spawn(move || propagate(u0, p, &sp))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("convergence run panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let differences: Vec<f64> = finals
        .windows(2)
        .map(|w| w[0].sub(&w[1]).map(|d| d.max_abs()))
        .collect::<Result<_>>()?;
    let orders = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ConvergenceReport {
        dts,
        differences,
        orders,
    })
}

/// `|φ_c(−L) − φ_c(L)|`: how badly the profile's tails wrap on the box.
pub fn wrap_diagnostic(p: &WaveParams, g: &Grid) -> f64 {
    crate::profile::wrap_mismatch(p, g.half_width())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_stays_zero() {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = Grid::new(20.0, 64).unwrap();
        let spec = IntegratorSpec::new(1e-3, 1e-3).unwrap();
        let u = step(&ComplexField::zeros(g), &p, &spec).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn free_flow_is_unitary() {
        let p = WaveParams::new(1.5, 1.0).unwrap();
        let g = Grid::new(40.0, 512).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        let spec = IntegratorSpec {
            linear_only: true,
            ..IntegratorSpec::new(1e-2, 1e-2).unwrap()
        };
        let v = step(&u, &p, &spec).unwrap();
        assert!((v.norm_l2() / u.norm_l2() - 1.0).abs() < 1e-12);
    }
}
