use std::f64::consts::TAU;
use std::path::Path;

use gdnls_core::evolution::{assess, evolve, EvolutionTrace, ExperimentOutcome};
use gdnls_core::functionals::identity_suite;
use gdnls_core::linearization::{apply_second_variation, sign_suite};
use gdnls_core::modulation::{determinant, soliton_jacobian, solve_modulation};
use gdnls_core::negative_direction::{
    build_psi, fit_rates, negativity_threshold, radius_sweep, CutoffSpec, NegativeDirection,
};
use gdnls_core::profile::{matched_grid, profile_residuals, sample};
use gdnls_core::{ComplexField, Grid, ProfileKind};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::RunConfig;
use crate::report::{write_csv, Check, Report};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] gdnls_core::Error),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// What a command produced and how the process should exit.
pub struct Outcome {
    pub report: Report,
    pub aborted: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.aborted {
            3
        } else if self.report.passed() {
            0
        } else {
            1
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, RunError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?)
}

fn experiment_grid(cfg: &RunConfig) -> Result<Grid, RunError> {
    let e = &cfg.experiment.grid;
    Ok(matched_grid(&cfg.params(), e.half_width, e.n_points)?)
}

fn negative_direction(cfg: &RunConfig) -> Result<NegativeDirection, RunError> {
    let g = experiment_grid(cfg)?;
    // the wrap-matched box may shrink slightly below 4R
    let r = cfg.cutoff.radius.min(g.half_width() / 4.0);
    Ok(build_psi(&cfg.params(), &CutoffSpec::new(r)?, &g, &cfg.quadrature)?)
}

/// Modulated Gaussian used for randomized checks.
fn random_bump(g: &Grid, rng: &mut ChaCha8Rng) -> ComplexField {
    let (x0, w, k) = (rng.gen_range(-10.0..10.0), rng.gen_range(0.5..3.0), rng.gen_range(-2.0..2.0));
    let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    ComplexField::from_fn(*g, |x| a * (-((x - x0) / w).powi(2)).exp() * Complex64::from_polar(1.0, k * x))
        .expect("finite bump")
}

/// Run `f`; on error keep placeholders for the checks it would have made.
fn attempt(
    report: &mut Report,
    errors: &mut Vec<String>,
    placeholders: &[(&str, &'static str)],
    f: impl FnOnce(&mut Vec<Check>) -> Result<(), RunError>,
) {
    let mut checks = Vec::new();
    match f(&mut checks) {
        Ok(()) => report.checks.extend(checks),
        Err(e) => {
            errors.push(format!("{}: {e}", placeholders.first().map_or("", |p| p.0)));
            report.checks.extend(checks);
            for (name, anchor) in placeholders {
                if !report.checks.iter().any(|c| c.name == *name) {
                    report.checks.push(Check::failed(*name, anchor));
                }
            }
        }
    }
}

#[derive(Serialize)]
struct VerifyData {
    quad_form_psi: Option<f64>,
    errors: Vec<String>,
}

/// The verification battery at one `(σ, c)`.
pub fn verify(cfg: &RunConfig) -> Outcome {
    let p = cfg.params();
    let g = cfg.grid();
    let q = cfg.quadrature;
    let mut report = Report::new("verify", cfg);
    let mut errors = Vec::new();
    let mut quad_form_psi = None;
    let mut phi_form = None;

    let r = profile_residuals(&p, &g);
    report.checks.push(Check::below("amplitude residual", "profile equation", r.amplitude, 1e-6));
    report.checks.push(Check::below("complex residual", "profile equation", r.complex, 1e-6));

    attempt(&mut report, &mut errors, &[("identities", "scalar identities")], |out| {
        for c in identity_suite(&p, &g, &q)?.checks {
            out.push(Check::relative(c.name, "scalar identities", c.lhs, c.rhs, 1e-6));
        }
        Ok(())
    });

    attempt(&mut report, &mut errors, &[("signed pairings", "second variation")], |out| {
        let suite = sign_suite(&p, &g, &q)?;
        phi_form = Some(suite[0].value);
        for r in suite {
            out.push(Check::relative(r.name, "second variation", r.value, r.closed_form.unwrap_or(f64::NAN), 1e-5));
        }
        Ok(())
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let small = Grid::new(40.0, 4096).expect("fixed grid");
    let asym = (0..20)
        .map(|_| {
            let (f, h) = (random_bump(&small, &mut rng), random_bump(&small, &mut rng));
            let fh = apply_second_variation(&p, &f).inner(&h).expect("same grid");
            let hf = apply_second_variation(&p, &h).inner(&f).expect("same grid");
            (fh - hf).abs() / (1.0 + fh.abs())
        })
        .fold(0.0, f64::max);
    report.checks.push(Check::absolute("self-adjointness", "second variation", asym, 0.0, 1e-8));

    attempt(
        &mut report,
        &mut errors,
        &[
            ("orthogonality to M'", "negative direction"),
            ("orthogonality to P'", "negative direction"),
            ("<S''psi,psi> < 0", "negative direction"),
            ("<S''psi,psi> < <S''phi,phi>", "negative direction"),
        ],
        |out| {
            let nd = negative_direction(cfg)?;
            quad_form_psi = Some(nd.quad_form_value);
            out.push(Check::absolute("orthogonality to M'", "negative direction", nd.orth_mass, 0.0, 1e-7));
            out.push(Check::absolute("orthogonality to P'", "negative direction", nd.orth_momentum, 0.0, 1e-7));
            out.push(Check::below("<S''psi,psi> < 0", "negative direction", nd.quad_form_value, 0.0));
            out.push(Check::below(
                "<S''psi,psi> < <S''phi,phi>",
                "negative direction",
                nd.quad_form_value,
                phi_form.unwrap_or(f64::NAN),
            ));
            Ok(())
        },
    );

    attempt(
        &mut report,
        &mut errors,
        &[
            ("modulation equivariance", "modulation"),
            ("Jacobian determinant", "modulation"),
            ("planted recovery", "modulation"),
        ],
        |out| {
            let eg = experiment_grid(cfg)?;
            let phi = sample(&p, &eg, ProfileKind::Phi);
            let mut equi: f64 = 0.0;
            for _ in 0..10 {
                let u = phi.combine(1.0.into(), &random_bump(&eg, &mut rng), 0.05.into())?;
                let base = solve_modulation(&u, &p, (0.0, 0.0))?;
                let (t0, y0) = (rng.gen_range(0.0..TAU), rng.gen_range(-5.0..5.0));
                let moved = u.fourier_shift(y0).scale(Complex64::from_polar(1.0, t0));
                let fit = solve_modulation(&moved, &p, (0.0, 0.0))?;
                let d = (fit.theta - base.theta - t0).rem_euclid(TAU);
                equi = equi.max(d.min(TAU - d)).max((fit.y - base.y - y0).abs());
            }
            out.push(Check::absolute("modulation equivariance", "modulation", equi, 0.0, 1e-7));
            let m = identity_suite(&p, &g, &q)?.mass;
            let (s, c) = (p.sigma(), p.c());
            let det = determinant(&soliton_jacobian(&p, &q)?);
            out.push(Check::relative("Jacobian determinant", "modulation", det, -s * (2.0 - s) * c * c * m * m, 1e-5));
            let (t0, y0) = (rng.gen_range(0.0..TAU), rng.gen_range(-5.0..5.0));
            let planted = phi.fourier_shift(y0).scale(Complex64::from_polar(1.0, t0));
            let fit = solve_modulation(&planted, &p, (0.0, 0.0))?;
            let d = (fit.theta - t0).rem_euclid(TAU);
            let err = d.min(TAU - d).max((fit.y - y0).abs());
            out.push(Check::absolute("planted recovery", "modulation", err, 0.0, 1e-8));
            Ok(())
        },
    );

    report.data = serde_json::to_value(VerifyData {
        quad_form_psi,
        errors: errors.clone(),
    })
    .expect("serializable");
    Outcome {
        report,
        aborted: !errors.is_empty(),
    }
}

/// `μ, ν, ⟨S''ψ,ψ⟩` over the configured radii and the deviation rates.
pub fn negdir(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let p = cfg.params();
    let q = cfg.quadrature;
    let radii = &cfg.cutoff.sweep;
    let rows = radius_sweep(&p, radii, &q)?;
    let fit = fit_rates(&p, radii, &q)?;
    let mn = gdnls_core::negative_direction::solve_mu_nu(&p, &CutoffSpec::new(radii[0])?, &q)?;
    std::fs::create_dir_all(out)?;
    write_csv(
        &out.join("negdir.csv"),
        &["R", "mu", "nu", "quad_form", "err_mass_rate", "err_mom_rate", "nu_derivative_form"],
        rows.iter().map(|r| {
            [r.radius, r.mu, r.nu, r.quad_form, r.dev_mass, r.dev_momentum, r.nu_derivative_form]
                .map(Some)
                .to_vec()
        }),
    )?;

    let mut report = Report::new("negdir", cfg);
    let anchor = "negative direction";
    let threshold = negativity_threshold(&rows);
    let above = rows
        .iter()
        .filter(|r| threshold.is_some_and(|t| r.radius >= t))
        .map(|r| r.quad_form)
        .fold(f64::NEG_INFINITY, f64::max);
    report.checks.push(Check::below("quad_form negative above R*", anchor, above, 0.0));
    let two_over_c = 2.0 / p.c();
    let nd_gaps: Vec<f64> = rows.iter().map(|r| (r.nu_derivative_form - two_over_c).abs()).collect();
    let non_monotone = nd_gaps.windows(2).filter(|w| w[1] > w[0]).count();
    report.checks.push(Check::absolute(
        "nu (derivative form) monotone toward 2/c",
        anchor,
        non_monotone as f64,
        0.0,
        0.0,
    ));
    let last = rows.last().expect("at least five radii");
    report.checks.push(Check::relative("mu at largest R", anchor, last.mu, mn.diagnostics.mu_limit, 1e-2));
    report.checks.push(Check::relative("nu at largest R", anchor, last.nu, two_over_c, 1e-2));
    let rate = 1.0 - 2.0 / p.sigma();
    report.checks.push(Check::absolute("mass deviation slope", "deviation rates", fit.slope_mass, rate, 0.15));
    report.checks.push(Check::absolute("momentum deviation slope", "deviation rates", fit.slope_momentum, rate, 0.15));
    report.data = json!({
        "rows": rows,
        "rates": fit,
        "negativity_threshold": threshold,
        "mu_limit": mn.diagnostics.mu_limit,
        "nu_limit": mn.diagnostics.nu_limit,
    });
    Ok(Outcome {
        report,
        aborted: false,
    })
}

fn beta_label(beta: f64) -> String {
    format!("{beta}")
}

fn write_trace(path: &Path, t: &EvolutionTrace) -> std::io::Result<()> {
    write_csv(
        path,
        &["t", "E_drift", "P_drift", "M_drift", "distance", "theta", "y", "A"],
        (0..t.len()).map(|i| {
            vec![
                Some(t.times[i]),
                Some(t.e_drift[i]),
                Some(t.p_drift[i]),
                Some(t.m_drift[i]),
                Some(t.tube_distance[i]),
                Some(t.theta_fit[i]),
                Some(t.y_fit[i]),
                t.a_values[i],
            ]
        }),
    )
}

#[derive(Serialize)]
struct RunSummary {
    #[serde(flatten)]
    outcome: ExperimentOutcome,
    exit_time: Option<f64>,
    aborted_at: Option<f64>,
}

/// Perturbed runs `φ_c + βψ` for every configured `β`, plus the control.
pub fn evolve_cmd(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Outcome, RunError> {
    let p = cfg.params();
    let nd = negative_direction(cfg)?;
    let g = *nd.psi.grid();
    let phi = sample(&p, &g, ProfileKind::Phi);
    let mut betas = cfg.experiment.betas.clone();
    if !betas.contains(&0.0) {
        betas.insert(0, 0.0);
    }
    let traces = pool(jobs)?.install(|| {
        betas
            .par_iter()
            .map(|&beta| {
                let u0 = phi.combine(1.0.into(), &nd.psi, beta.into())?;
                Ok(evolve(&u0, &p, &cfg.integrator, Some(&nd))?.0)
            })
            .collect::<Result<Vec<_>, RunError>>()
    })?;
    std::fs::create_dir_all(out)?;
    for (beta, t) in betas.iter().zip(&traces) {
        write_trace(&out.join(format!("trace_{}.csv", beta_label(*beta))), t)?;
    }
    let control = traces[betas.iter().position(|b| *b == 0.0).expect("control present")].clone();
    let criteria = cfg.criteria();
    let mut report = Report::new("evolve", cfg);
    let mut runs = Vec::new();
    let mut aborted = false;
    for (beta, trace) in betas.iter().zip(traces) {
        let (exit_time, aborted_at) = (trace.exit_time, trace.aborted_at);
        aborted |= aborted_at.is_some();
        let o = assess(*beta, trace, control.clone(), &criteria);
        let name = |what: &str| format!("{what} (beta {})", beta_label(*beta));
        if *beta == 0.0 {
            report.checks.push(Check::below(
                name("control stays near the orbit"),
                "instability experiment",
                o.control_max_distance,
                criteria.control_factor * criteria.control_floor,
            ));
        } else {
            report.checks.push(Check::at_least(
                name("tube escape"),
                "instability experiment",
                o.max_distance,
                criteria.escape_factor * o.initial_distance,
            ));
            report.checks.push(Check::at_least(
                name("A nondecreasing fraction before exit"),
                "instability experiment",
                o.a_monotone_fraction.unwrap_or(f64::NAN),
                0.95,
            ));
        }
        runs.push(RunSummary {
            outcome: o,
            exit_time,
            aborted_at,
        });
    }
    report.data = json!({ "runs": runs, "radius": nd.radius, "grid_half_width": g.half_width() });
    Ok(Outcome { report, aborted })
}

#[derive(Serialize)]
struct PointRecord {
    sigma: f64,
    c: f64,
    status: &'static str,
    failed_checks: Vec<String>,
    message: Option<String>,
    quad_form_psi: Option<f64>,
}

/// `verify` over the `(σ, c)` grid, records in lexicographic order.
pub fn sweep(cfg: &RunConfig, jobs: usize) -> Result<Outcome, RunError> {
    let mut points: Vec<(f64, f64)> = cfg
        .sweep
        .sigmas
        .iter()
        .flat_map(|&s| cfg.sweep.speeds.iter().map(move |&c| (s, c)))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let records: Vec<PointRecord> = pool(jobs)?.install(|| {
        points
            .par_iter()
            .map(|&(sigma, c)| {
                let point = cfg.with_point(sigma, c);
                if let Err(e) = point.validate() {
                    return PointRecord {
                        sigma,
                        c,
                        status: "invalid",
                        failed_checks: Vec::new(),
                        message: Some(e.to_string()),
                        quad_form_psi: None,
                    };
                }
                let o = verify(&point);
                let failed: Vec<String> =
                    o.report.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
                PointRecord {
                    sigma,
                    c,
                    status: if o.aborted {
                        "error"
                    } else if failed.is_empty() {
                        "pass"
                    } else {
                        "fail"
                    },
                    failed_checks: failed,
                    message: None,
                    quad_form_psi: o.report.data["quad_form_psi"].as_f64(),
                }
            })
            .collect()
    });
    let mut report = Report::new("sweep", cfg);
    for r in &records {
        report.checks.push(Check::absolute(
            format!("verify at sigma {}, c {}", r.sigma, r.c),
            "parameter sweep",
            if r.status == "pass" { 0.0 } else { 1.0 },
            0.0,
            0.0,
        ));
    }
    let margin = records
        .iter()
        .filter_map(|r| r.quad_form_psi)
        .map(f64::abs)
        .fold(f64::INFINITY, f64::min);
    report.data = json!({
        "points": records,
        "worst_negativity_margin": margin.is_finite().then_some(margin),
    });
    Ok(Outcome {
        report,
        aborted: false,
    })
}
