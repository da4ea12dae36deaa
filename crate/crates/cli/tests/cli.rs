use clap::Parser;
use nalab_cli::args::Format;
use nalab_cli::config::{resolve, Job, Spacing};
use nalab_cli::{run, Cli, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

fn parse(args: &[&str]) -> Result<nalab_cli::RunConfig, String> {
    let cli = Cli::try_parse_from(std::iter::once("nalab").chain(args.iter().copied()))
        .map_err(|e| e.to_string())?;
    resolve(&cli).map_err(|e| e.to_string())
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("nalab").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn shoot_defaults_are_filled() {
    let c = parse(&["shoot", "--lambda", "1", "--m", "0.1"]).unwrap();
    match c.job {
        Job::Shoot {
            coupling,
            bracket,
            tol,
            rmax,
            ..
        } => {
            assert_eq!((coupling.lambda, coupling.m), (1.0, 0.1));
            assert_eq!(coupling.eps, 1e-6);
            assert_eq!(bracket, (0.2, 2.0));
            assert_eq!(tol, 1e-5);
            assert_eq!(rmax, 80.0);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(c.format, Format::Text);
}

#[test]
fn profile_grid_is_log_spaced_by_default() {
    let c = parse(&[
        "profile",
        "--lambda",
        "1",
        "--m",
        "0.1",
        "--eta0",
        "0.9083",
        "--grid",
        "1e-3:80:2000",
    ])
    .unwrap();
    let Job::Profile { grid, eta0, .. } = c.job else {
        panic!()
    };
    assert_eq!(eta0, 0.9083);
    assert_eq!(grid.spacing, Spacing::Log);
    let pts = grid.points();
    assert_eq!(pts.len(), 2000);
    assert_eq!((pts[0], pts[1999]), (1e-3, 80.0));
    let ratios: Vec<f64> = pts.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-9));

    let lin = parse(&[
        "profile",
        "--lambda",
        "1",
        "--m",
        "0.1",
        "--eta0",
        "1",
        "--grid",
        "0.5:10:20",
        "--linear",
    ])
    .unwrap();
    let Job::Profile { grid, .. } = lin.job else {
        panic!()
    };
    assert_eq!(grid.spacing, Spacing::Linear);
    assert!((grid.points()[1] - 1.0).abs() < 1e-15);
}

#[test]
fn closed_enums_and_bad_values_are_usage_errors() {
    let (code, _, err) = invoke(&["exact", "--format", "xml"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("xml"));
    let (code, _, err) = invoke(&["shoot", "--lambda", "1", "--m", "0.1", "--frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--frobnicate"));
    let (code, _, err) = invoke(&["shoot", "--lambda", "1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--m"));
    let (code, _, err) = invoke(&["shoot", "--lambda", "-1", "--m", "0.1"]);
    assert_eq!(code, EXIT_USAGE, "{err}");
    let (code, _, err) = invoke(&["shoot", "--lambda", "1", "--m", "0.1", "--bracket", "2:1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--bracket"));
    let (code, _, _) = invoke(&[
        "profile", "--lambda", "1", "--m", "0.1", "--eta0", "1", "--grid", "0:1:10",
    ]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = invoke(&["assoc", "--power", "0"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = invoke(&["shoot", "--lambda", "1", "--m", "0.1", "--format", "csv"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn help_lists_defaults() {
    let (code, out, _) = invoke(&["shoot", "--help"]);
    assert_eq!(code, EXIT_OK);
    for flag in [
        "--lambda",
        "--m",
        "--bracket",
        "--tol",
        "--rmax",
        "--eps",
        "--format",
        "--output",
    ] {
        assert!(out.contains(flag), "{flag}");
    }
    assert!(
        out.contains("[default: 0.2:2.0]")
            && out.contains("[default: 1e-5]")
            && out.contains("[default: 80]")
    );
}

#[test]
fn ambiguity_and_invalid_brackets_exit_two() {
    let (code, out, err) = invoke(&["shoot", "--lambda", "1", "--m", "0.01"]);
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(out.is_empty());
    assert!(err.contains("r_max"), "{err}");
    let (code, _, err) = invoke(&[
        "shoot",
        "--lambda",
        "1",
        "--m",
        "0.1",
        "--bracket",
        "1.2:1.4",
    ]);
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(err.contains("overshoot"));
}

#[test]
fn shoot_reports_diagnostics() {
    let (code, out, _) = invoke(&["shoot", "--lambda", "1", "--m", "0.1"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("# config: {"));
    let eta: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("eta0_star = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((eta - 0.9083).abs() < 5e-4);
    assert!(out.contains("lower = 0.2 (undershoot at r = "));
    assert!(out.contains("upper = 2 (overshoot at r = "));
}

#[test]
fn exact_json_mirrors_energy_report() {
    let (code, out, _) = invoke(&["exact", "--q", "1", "--rmin", "1e-3"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["field_energy"].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert!((v["self_energy"].as_f64().unwrap() - 499.5).abs() < 1e-6);
    for key in [
        "closed_form_field_energy",
        "closed_form_self_energy",
        "config",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["config"]["subcommand"], "exact");
}

#[test]
fn csv_outputs_have_one_header_row() {
    let (code, out, _) = invoke(&["exact", "--format", "csv", "--grid", "0.1:10:7"]);
    assert_eq!(code, EXIT_OK);
    let data: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "r,phi,E_r,rho");
    assert_eq!(data.len(), 8);
    assert!(data[1..]
        .iter()
        .all(|l| l.split(',').all(|x| x.parse::<f64>().is_ok())));

    let (code, out, _) = invoke(&[
        "profile",
        "--lambda",
        "1",
        "--m",
        "0.1",
        "--eta0",
        "0.9083",
        "--grid",
        "1e-3:80:300",
    ]);
    assert_eq!(code, EXIT_OK);
    let data: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "r,eta,deta_dr,phi_scaled,E_scaled,rho_scaled");
    assert_eq!(data.len(), 301);
    let last: Vec<f64> = data[300].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 80.0);
}

#[test]
fn output_file_receives_the_body() {
    let path = std::env::temp_dir().join(format!("nalab-cli-test-{}.txt", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, out, _) = invoke(&["assoc", "--power", "2", "--output", p]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let body = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(body.contains("1 f.(b.(f.(b |psi>)))"));
    assert!(body.contains("m² |psi>"));
}

#[test]
fn torsion_check_passes_for_other_seeds() {
    let (code, out, _) = invoke(&["torsion-check", "--seed", "3", "--trials", "50"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.trim_end().ends_with("result = PASS"));
}
