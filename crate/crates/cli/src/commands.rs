//! One function per subcommand. Each returns the full output body and its
//! exit status; nothing is written until the run has finished.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use nalab::assoc::{
    build_power_expression, core_expectation, m_power, normalize, vacuum_expectation_corrections,
    Expr, VacuumTerm,
};
use nalab::charge::{energy_report, sample_grid, ChargeModel, UnitsConfig};
use nalab::numerics::{Controls, Stepping};
use nalab::shooting::{
    decay_rate, derive_fields, find_regular_eta0, integrate_profile_on_grid, CouplingParams,
    DecayFit, ShootControls, ShootResult, Termination,
};
use nalab::torsion::{run_identity_suite, IdentityReport};
use nalab::Execution;

use crate::args::Format;
use crate::config::{Coupling, Job, RunConfig};
use crate::output::{csv_row, fmt_text as t, to_json};

#[derive(Debug, Error)]
pub enum RunError {
    /// Input that passed flag parsing but is rejected by a module.
    #[error("{0}")]
    Usage(String),
    /// Classifier ambiguity, invalid bracket or other non-convergence.
    #[error("{0}")]
    Numerical(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub struct Outcome {
    pub body: String,
    pub exit: i32,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            exit: EXIT_OK,
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome, RunError> {
    match &config.job {
        Job::Assoc { .. } => assoc(config),
        Job::TorsionCheck { .. } => torsion_check(config),
        Job::Exact { .. } => exact(config),
        Job::Shoot { .. } => shoot(config),
        Job::Profile { .. } => profile(config),
    }
}

fn header(config: &RunConfig) -> String {
    format!("# config: {}\n", to_json(config))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    result: T,
}

fn envelope<T: Serialize>(config: &RunConfig, result: T) -> String {
    let mut s = to_json(&Envelope { config, result });
    s.push('\n');
    s
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

// ---------------------------------------------------------------- assoc

#[derive(Serialize)]
#[serde(untagged)]
enum Coefficient {
    Symbolic(String),
    Value(f64),
}

#[derive(Serialize)]
struct TermOut {
    j: u32,
    k: u32,
    coefficient: Coefficient,
    expression: String,
}

fn coefficient(j: u32, m2: Option<f64>, ascii: bool) -> Option<Coefficient> {
    match m2 {
        Some(v) => {
            let c = v.powi(j as i32);
            (c != 0.0).then_some(Coefficient::Value(c))
        }
        None if j == 0 => Some(Coefficient::Symbolic("1".into())),
        None if ascii => Some(Coefficient::Symbolic(format!("m^{}", 2 * j))),
        None => Some(Coefficient::Symbolic(m_power(j))),
    }
}

fn coefficient_text(c: &Coefficient) -> String {
    match c {
        Coefficient::Symbolic(s) => s.clone(),
        Coefficient::Value(v) => t(*v),
    }
}

fn assoc(config: &RunConfig) -> Result<Outcome, RunError> {
    let Job::Assoc {
        power,
        vacuum,
        m2,
        indexed,
        ascii,
    } = config.job
    else {
        unreachable!()
    };
    let bad = |e: nalab::assoc::ExprError| RunError::Usage(e.to_string());

    if vacuum {
        let poly = vacuum_expectation_corrections(power).map_err(bad)?;
        let core = |k: u32| {
            if ascii {
                format!("<core{k}>")
            } else {
                core_expectation(k)
            }
        };
        let mut parts = Vec::new();
        let mut terms = Vec::new();
        for t in &poly.terms {
            let (j, k) = match *t {
                VacuumTerm::Core { j, k } => (j, Some(k)),
                VacuumTerm::Number { j } => (j, None),
            };
            let Some(c) = coefficient(j, m2, ascii) else {
                continue;
            };
            let text = match (k, &c) {
                (Some(k), Coefficient::Symbolic(s)) if s == "1" => core(k),
                (Some(k), c) => format!("{}{}", coefficient_text(c), core(k)),
                (None, c) => coefficient_text(c),
            };
            parts.push(text.clone());
            terms.push(TermOut {
                j,
                k: k.unwrap_or(0),
                coefficient: c,
                expression: text,
            });
        }
        let polynomial = if parts.is_empty() {
            "0".to_owned()
        } else {
            parts.join(" + ")
        };
        return Ok(Outcome::ok(match config.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Out {
                    polynomial: String,
                    terms: Vec<TermOut>,
                }
                envelope(config, Out { polynomial, terms })
            }
            _ => format!("{}{polynomial}\n", header(config)),
        }));
    }

    let normalized = normalize(&build_power_expression(power).map_err(bad)?).map_err(bad)?;
    let render = |e: &Expr| {
        if indexed {
            e.render_indexed()
        } else {
            e.to_string()
        }
    };
    let all = std::iter::once((0, normalized.power, &normalized.core))
        .chain(normalized.series.terms.iter().map(|t| (t.j, t.k, &t.core)));
    let terms: Vec<TermOut> = all
        .filter_map(|(j, k, e)| {
            coefficient(j, m2, ascii).map(|coefficient| TermOut {
                j,
                k,
                coefficient,
                expression: render(e),
            })
        })
        .collect();
    Ok(Outcome::ok(match config.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                terms: Vec<TermOut>,
            }
            envelope(config, Out { terms })
        }
        _ => {
            let mut s = header(config);
            for t in &terms {
                let _ = writeln!(s, "{} {}", coefficient_text(&t.coefficient), t.expression);
            }
            s
        }
    }))
}

// ---------------------------------------------------------------- torsion-check

fn torsion_check(config: &RunConfig) -> Result<Outcome, RunError> {
    let Job::TorsionCheck {
        seed,
        trials,
        sequential,
    } = config.job
    else {
        unreachable!()
    };
    let report: IdentityReport = run_identity_suite(seed, trials, execution(sequential));
    let exit = if report.passed {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    };
    let body = match config.format {
        Format::Json => envelope(config, report),
        _ => {
            let mut s = header(config);
            let residuals = serde_json::to_value(report.residuals).expect("plain data");
            if let serde_json::Value::Object(map) = residuals {
                for (name, v) in map {
                    let _ = writeln!(s, "{name} = {}", t(v.as_f64().unwrap_or(f64::NAN)));
                }
            }
            let _ = writeln!(s, "max_residual = {}", t(report.max_residual));
            let _ = writeln!(s, "tolerance = {}", t(report.tolerance));
            let _ = writeln!(
                s,
                "result = {}",
                if report.passed { "PASS" } else { "FAIL" }
            );
            s
        }
    };
    Ok(Outcome { body, exit })
}

// ---------------------------------------------------------------- exact

fn exact(config: &RunConfig) -> Result<Outcome, RunError> {
    let Job::Exact {
        q,
        g,
        c,
        rmin,
        grid,
        tol,
    } = config.job
    else {
        unreachable!()
    };
    let units = UnitsConfig::new(g, c).map_err(|e| RunError::Usage(e.to_string()))?;
    let model = ChargeModel::new(q, units);
    let energy =
        energy_report(&model, rmin, tol).map_err(|e| RunError::Numerical(e.to_string()))?;
    Ok(Outcome::ok(match config.format {
        Format::Csv => {
            let samples = sample_grid(&model, &grid.points(), Execution::Parallel)
                .map_err(|e| RunError::Usage(e.to_string()))?;
            let mut s = header(config);
            let _ = writeln!(s, "# energy: {}", to_json(&energy));
            s.push_str("r,phi,E_r,rho\n");
            for p in samples {
                s.push_str(&csv_row(&[p.r, p.phi, p.e_r, p.rho]));
                s.push('\n');
            }
            s
        }
        _ => envelope(config, energy),
    }))
}

// ---------------------------------------------------------------- shoot / profile

fn controls(c: &Coupling, r_max: f64) -> ShootControls {
    ShootControls {
        eps: c.eps,
        r_max,
        ode: Controls {
            stepping: Stepping::Adaptive {
                rtol: c.rtol,
                atol: c.atol,
                h_initial: None,
            },
            ..Controls::default()
        },
        stop_at_classification: true,
    }
}

fn params(c: &Coupling) -> Result<CouplingParams, RunError> {
    CouplingParams::new(c.lambda, c.m).map_err(|e| RunError::Usage(e.to_string()))
}

pub fn describe(term: &Termination) -> String {
    match term {
        Termination::ReachedRMax => "reached r_max".to_owned(),
        Termination::Overshoot { r } => format!("overshoot at r = {}", t(*r)),
        Termination::Undershoot { r } => format!("undershoot at r = {}", t(*r)),
        Termination::BlowUp { r, reason } => format!("blow-up at r = {} ({reason:?})", t(*r)),
    }
}

#[derive(Serialize)]
struct ShootOut<'a> {
    #[serde(flatten)]
    result: &'a ShootResult,
    vacuum_eta: f64,
    yukawa_rate: f64,
    tail_fit: Option<DecayFit>,
    tail_fit_error: Option<String>,
}

fn shoot(config: &RunConfig) -> Result<Outcome, RunError> {
    let Job::Shoot {
        coupling,
        bracket,
        tol,
        rmax,
        fit_window,
        sequential,
    } = config.job
    else {
        unreachable!()
    };
    let p = params(&coupling)?;
    let result = find_regular_eta0(
        &p,
        bracket,
        tol,
        &controls(&coupling, rmax),
        execution(sequential),
    )
    .map_err(|e| RunError::Numerical(e.to_string()))?;
    let fit = decay_rate(&result.trajectory, fit_window);
    let out = ShootOut {
        result: &result,
        vacuum_eta: p.vacuum_eta(),
        yukawa_rate: p.yukawa_rate(),
        tail_fit: fit.as_ref().ok().copied(),
        tail_fit_error: fit.as_ref().err().map(ToString::to_string),
    };
    Ok(Outcome::ok(match config.format {
        Format::Json => envelope(config, out),
        _ => {
            let mut s = header(config);
            let _ = writeln!(s, "eta0_star = {}", result.eta0_star);
            let _ = writeln!(s, "bracket = {}:{}", result.bracket.0, result.bracket.1);
            let _ = writeln!(s, "iterations = {}", result.iterations);
            let _ = writeln!(
                s,
                "lower = {} ({})",
                result.lower.eta0,
                describe(&result.lower.termination)
            );
            let _ = writeln!(
                s,
                "upper = {} ({})",
                result.upper.eta0,
                describe(&result.upper.termination)
            );
            let _ = writeln!(s, "separatrix_eta0 = {}", result.separatrix_eta0);
            let _ = writeln!(
                s,
                "separatrix = {}",
                describe(&result.trajectory.termination)
            );
            let _ = writeln!(s, "vacuum_eta = {}", out.vacuum_eta);
            let _ = writeln!(s, "yukawa_rate = {}", out.yukawa_rate);
            match &fit {
                Ok(f) => {
                    let _ = writeln!(
                        s,
                        "tail_mu = {} over {}:{} ({} points, max residual {})",
                        t(f.mu),
                        t(fit_window.0),
                        t(fit_window.1),
                        f.points,
                        t(f.max_residual)
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "tail_mu = unavailable ({e})");
                }
            }
            s
        }
    }))
}

#[derive(Serialize)]
struct Row {
    r: f64,
    eta: f64,
    deta_dr: f64,
    phi_scaled: f64,
    #[serde(rename = "E_scaled")]
    e_scaled: f64,
    rho_scaled: f64,
}

fn profile(config: &RunConfig) -> Result<Outcome, RunError> {
    let Job::Profile {
        coupling,
        eta0,
        grid,
    } = config.job
    else {
        unreachable!()
    };
    let p = params(&coupling)?;
    let c = ShootControls {
        stop_at_classification: false,
        ..controls(&coupling, grid.end)
    };
    let traj = integrate_profile_on_grid(eta0, &p, &c, &grid.points())
        .map_err(|e| RunError::Usage(e.to_string()))?;
    let prof = derive_fields(&traj, &UnitsConfig::default())
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    let rows: Vec<Row> = prof
        .samples
        .iter()
        .map(|s| Row {
            r: s.r,
            eta: s.eta,
            deta_dr: s.deta_dr,
            phi_scaled: s.phi_scaled,
            e_scaled: s.e_scaled,
            rho_scaled: s.rho_scaled,
        })
        .collect();
    Ok(Outcome::ok(match config.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                termination: Termination,
                samples: Vec<Row>,
            }
            envelope(
                config,
                Out {
                    termination: traj.termination,
                    samples: rows,
                },
            )
        }
        _ => {
            let mut s = header(config);
            let _ = writeln!(s, "# termination: {}", to_json(&traj.termination));
            s.push_str("r,eta,deta_dr,phi_scaled,E_scaled,rho_scaled\n");
            for r in rows {
                s.push_str(&csv_row(&[
                    r.r,
                    r.eta,
                    r.deta_dr,
                    r.phi_scaled,
                    r.e_scaled,
                    r.rho_scaled,
                ]));
                s.push('\n');
            }
            s
        }
    }))
}
