//! Resolved, validated run configuration. This is what gets echoed at the
//! top of every output.

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::args::{
    AssocArgs, Cli, Command, CouplingArgs, ExactArgs, Format, ProfileArgs, ShootArgs, TorsionArgs,
};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    /// Both end points are hit exactly.
    pub fn points(&self) -> Vec<f64> {
        let n = self.points;
        let mut out: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + (self.end - self.start) * t,
                    Spacing::Log => (self.start.ln() + (self.end.ln() - self.start.ln()) * t).exp(),
                }
            })
            .collect();
        out[0] = self.start;
        out[n - 1] = self.end;
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coupling {
    pub lambda: f64,
    pub m: f64,
    pub eps: f64,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Job {
    Assoc {
        power: usize,
        vacuum: bool,
        m2: Option<f64>,
        indexed: bool,
        ascii: bool,
    },
    TorsionCheck {
        seed: u64,
        trials: u64,
        sequential: bool,
    },
    Exact {
        q: f64,
        #[serde(rename = "G")]
        g: f64,
        c: f64,
        rmin: f64,
        grid: GridSpec,
        tol: f64,
    },
    Shoot {
        #[serde(flatten)]
        coupling: Coupling,
        bracket: (f64, f64),
        tol: f64,
        rmax: f64,
        fit_window: (f64, f64),
        sequential: bool,
    },
    Profile {
        #[serde(flatten)]
        coupling: Coupling,
        eta0: f64,
        grid: GridSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub job: Job,
    pub format: Format,
    pub output: Option<PathBuf>,
}

fn parse_f64(token: &str, what: &str) -> Result<f64, UsageError> {
    match token.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => usage(format!("{what}: '{token}' is not a finite number")),
    }
}

/// `lo:hi` with `lo < hi`.
pub fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), UsageError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b] = parts.as_slice() else {
        return usage(format!("{what}: expected lo:hi, got '{s}'"));
    };
    let (a, b) = (parse_f64(a, what)?, parse_f64(b, what)?);
    if a >= b {
        return usage(format!("{what}: need lo < hi, got '{s}'"));
    }
    Ok((a, b))
}

/// `a:b:n` with `a < b` and `n ≥ min_points`; log spacing needs `a > 0`.
pub fn parse_grid(
    s: &str,
    linear: bool,
    min_points: usize,
    what: &str,
) -> Result<GridSpec, UsageError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return usage(format!("{what}: expected a:b:n, got '{s}'"));
    };
    let (start, end) = (parse_f64(a, what)?, parse_f64(b, what)?);
    let points: usize = n
        .trim()
        .parse()
        .map_err(|_| UsageError(format!("{what}: '{n}' is not a point count")))?;
    if start >= end {
        return usage(format!("{what}: need a < b, got '{s}'"));
    }
    if points < min_points {
        return usage(format!(
            "{what}: need at least {min_points} points, got {points}"
        ));
    }
    let spacing = if linear {
        Spacing::Linear
    } else {
        Spacing::Log
    };
    if spacing == Spacing::Log && start <= 0.0 {
        return usage(format!(
            "{what}: a log-spaced grid needs a > 0 (use --linear otherwise)"
        ));
    }
    Ok(GridSpec {
        start,
        end,
        points,
        spacing,
    })
}

fn positive(v: f64, flag: &str) -> Result<f64, UsageError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        usage(format!("{flag} must be positive, got {v}"))
    }
}

fn finite(v: f64, flag: &str) -> Result<f64, UsageError> {
    if v.is_finite() {
        Ok(v)
    } else {
        usage(format!("{flag} must be finite, got {v}"))
    }
}

fn format_for(
    requested: Option<Format>,
    allowed: &[Format],
    sub: &str,
) -> Result<Format, UsageError> {
    let f = requested.unwrap_or(allowed[0]);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        let names: Vec<&str> = allowed.iter().map(|f| f.name()).collect();
        usage(format!("{sub} supports --format {}", names.join("|")))
    }
}

fn coupling(c: &CouplingArgs) -> Result<Coupling, UsageError> {
    let atol = finite(c.atol, "--atol")?;
    if atol < 0.0 {
        return usage("--atol must be non-negative");
    }
    Ok(Coupling {
        lambda: positive(c.lambda, "--lambda")?,
        m: positive(c.m, "--m")?,
        eps: positive(c.eps, "--eps")?,
        rtol: positive(c.rtol, "--rtol")?,
        atol,
    })
}

pub fn resolve(cli: &Cli) -> Result<RunConfig, UsageError> {
    match &cli.command {
        Command::Assoc(a) => resolve_assoc(a),
        Command::TorsionCheck(a) => resolve_torsion(a),
        Command::Exact(a) => resolve_exact(a),
        Command::Shoot(a) => resolve_shoot(a),
        Command::Profile(a) => resolve_profile(a),
    }
}

fn resolve_assoc(a: &AssocArgs) -> Result<RunConfig, UsageError> {
    if a.power == 0 {
        return usage("--power must be at least 1");
    }
    if let Some(m2) = a.m2 {
        finite(m2, "--m2")?;
    }
    Ok(RunConfig {
        job: Job::Assoc {
            power: a.power,
            vacuum: a.vacuum,
            m2: a.m2,
            indexed: a.indexed,
            ascii: a.ascii,
        },
        format: format_for(a.out.format, &[Format::Text, Format::Json], "assoc")?,
        output: a.out.output.clone(),
    })
}

fn resolve_torsion(a: &TorsionArgs) -> Result<RunConfig, UsageError> {
    if a.trials == 0 {
        return usage("--trials must be at least 1");
    }
    Ok(RunConfig {
        job: Job::TorsionCheck {
            seed: a.seed,
            trials: a.trials,
            sequential: a.sequential,
        },
        format: format_for(a.out.format, &[Format::Text, Format::Json], "torsion-check")?,
        output: a.out.output.clone(),
    })
}

fn resolve_exact(a: &ExactArgs) -> Result<RunConfig, UsageError> {
    Ok(RunConfig {
        job: Job::Exact {
            q: finite(a.q, "--q")?,
            g: positive(a.g, "--G")?,
            c: positive(a.c, "--c")?,
            rmin: positive(a.rmin, "--rmin")?,
            grid: parse_grid(&a.grid, a.linear, 3, "--grid")?,
            tol: positive(a.tol, "--tol")?,
        },
        format: format_for(a.out.format, &[Format::Json, Format::Csv], "exact")?,
        output: a.out.output.clone(),
    })
}

fn resolve_shoot(a: &ShootArgs) -> Result<RunConfig, UsageError> {
    let coupling = coupling(&a.coupling)?;
    let rmax = positive(a.rmax, "--rmax")?;
    if rmax <= coupling.eps {
        return usage("--rmax must exceed --eps");
    }
    let fit_window = parse_pair(&a.fit_window, "--fit-window")?;
    if fit_window.0 <= coupling.eps || fit_window.1 > rmax {
        return usage("--fit-window must lie inside (eps, rmax]");
    }
    Ok(RunConfig {
        job: Job::Shoot {
            coupling,
            bracket: parse_pair(&a.bracket, "--bracket")?,
            tol: positive(a.tol, "--tol")?,
            rmax,
            fit_window,
            sequential: a.sequential,
        },
        format: format_for(a.out.format, &[Format::Text, Format::Json], "shoot")?,
        output: a.out.output.clone(),
    })
}

fn resolve_profile(a: &ProfileArgs) -> Result<RunConfig, UsageError> {
    let coupling = coupling(&a.coupling)?;
    let grid = parse_grid(&a.grid, a.linear, 5, "--grid")?;
    if grid.start <= coupling.eps {
        return usage(format!(
            "--grid must start beyond the series radius eps = {}",
            coupling.eps
        ));
    }
    Ok(RunConfig {
        job: Job::Profile {
            coupling,
            eta0: finite(a.eta0, "--eta0")?,
            grid,
        },
        format: format_for(a.out.format, &[Format::Csv, Format::Json], "profile")?,
        output: a.out.output.clone(),
    })
}
