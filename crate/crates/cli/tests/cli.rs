use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fiducial_cli::bundle::{read_csv, OutputBundle, Payload};
use tempfile::TempDir;

fn fiducial(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiducial"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const MIXED: &str = "l,r\n0,1.5\n0.5,2\n1,1\n2,inf\n0.2,0.9\n1.5,3\n";

#[test]
fn alpha_outside_unit_interval_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.csv", MIXED);
    let o = fiducial(&["fit", s(&input), "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bad_row_names_the_row() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.csv", "l,r\n0,1\n3,2\n");
    let o = fiducial(&["fit", s(&input)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_an_input_error() {
    let o = fiducial(&["npmle", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn simulate_rejects_bad_flags() {
    for args in [
        &["simulate", "--scenario", "1", "--reps", "0"][..],
        &["simulate", "--scenario", "5"],
        &["simulate", "--scenario", "1", "--n", "0"],
        &["simulate"],
    ] {
        let o = fiducial(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn keep_samples_needs_json() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.csv", MIXED);
    let o = fiducial(&["fit", s(&input), "--keep-samples", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fixed_seed_reproduces_output_files() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.csv", MIXED);
    let out = dir.path().join("fit.json");
    let run = |seed: &str| {
        let o = fiducial(&["fit", s(&input), "--seed", seed, "--n-mcmc", "200", "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(&out).unwrap()
    };
    let first = run("7");
    assert_eq!(first, run("7"));
    assert_ne!(first, run("8"));
}

#[test]
fn json_bundle_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.csv", MIXED);
    let out = dir.path().join("fit.json");
    let o = fiducial(&[
        "fit", s(&input), "--method", "both", "--keep-samples", "--n-mcmc", "50", "--seed", "3", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let bundle = OutputBundle::read_json(&text).unwrap();
    assert_eq!(bundle.provenance.seed, Some(3));
    let mut again = Vec::new();
    bundle.write_json(&mut again).unwrap();
    assert_eq!(OutputBundle::read_json(std::str::from_utf8(&again).unwrap()).unwrap(), bundle);
    let Payload::Fit(fit) = &bundle.result else { panic!("not a fit") };
    assert_eq!(fit.n, 6);
    assert_eq!(fit.estimates.len(), 2);
    assert_eq!(fit.samples.as_ref().unwrap().len(), 50);
    for e in &fit.estimates {
        for k in 0..fit.grid.len() {
            assert!(e.lower[k] <= e.point[k] + 1e-12 && e.point[k] <= e.upper[k] + 1e-12);
        }
    }
}

#[test]
fn default_grid_has_101_points() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.csv", MIXED);
    let o = fiducial(&["fit", s(&input), "--n-mcmc", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bundle = OutputBundle::read_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let Payload::Fit(fit) = bundle.result else { panic!("not a fit") };
    assert_eq!(fit.grid.len(), 101);
    assert_eq!(fit.estimates[0].point.len(), 101);
}

#[test]
fn csv_output_carries_provenance() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.csv", MIXED);
    let out = dir.path().join("fit.csv");
    let o = fiducial(&[
        "fit", s(&input), "--format", "csv", "--grid-size", "10", "--n-mcmc", "30", "--seed", "11", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let file = fs::File::open(&out).unwrap();
    let (prov, header, rows) = read_csv(std::io::BufReader::new(file)).unwrap();
    assert_eq!(prov.seed, Some(11));
    assert_eq!(header, ["t", "point", "lower", "upper"]);
    assert_eq!(rows.len(), 11);
    let json = fiducial(&[
        "fit", s(&input), "--grid-size", "10", "--n-mcmc", "30", "--seed", "11",
    ]);
    let bundle = OutputBundle::read_json(&String::from_utf8(json.stdout).unwrap()).unwrap();
    let Payload::Fit(fit) = bundle.result else { panic!("not a fit") };
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], fit.grid[k]);
        assert_eq!(row[1], fit.estimates[0].point[k]);
    }
}

#[test]
fn simulation_table_is_independent_of_jobs() {
    let run = |jobs: &str| {
        let o = fiducial(&[
            "simulate", "--scenario", "1,3", "--n", "20", "--reps", "4", "--n-mcmc", "40", "--burn-in", "10",
            "--seed", "5", "--jobs", jobs,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("8"));
    assert!(String::from_utf8(one).unwrap().lines().count() >= 3);
}

#[test]
fn simulation_json_lists_every_cell() {
    let o = fiducial(&[
        "simulate", "--scenario", "2", "--scenario", "4", "--n", "10,20", "--reps", "2", "--n-mcmc", "20",
        "--burn-in", "5", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bundle = OutputBundle::read_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let Payload::Simulation(sim) = bundle.result else { panic!("not a simulation") };
    assert_eq!(sim.rows.len(), 4);
}

fn npmle_json(dir: &TempDir, body: &str, extra: &[&str]) -> (OutputBundle, String) {
    let input = write(dir, "n.csv", body);
    let mut args = vec!["npmle", s(&input)];
    args.extend_from_slice(extra);
    let o = fiducial(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    (OutputBundle::read_json(&String::from_utf8(o.stdout).unwrap()).unwrap(), err)
}

#[test]
fn npmle_on_right_censored_data_matches_product_limit() {
    let dir = TempDir::new().unwrap();
    // product limit: S = 3/4 after 1, 3/8 after 2, 0 after 3
    let (b, _) = npmle_json(&dir, "l,r\n1,1\n1.5,inf\n2,2\n3,3\n", &[]);
    let Payload::Npmle(fit) = b.result else { panic!("not npmle") };
    let atoms: Vec<(f64, f64)> = fit.intervals.iter().filter(|j| j.mass > 1e-9).map(|j| (j.left, j.mass)).collect();
    let expected = [(1.0, 0.25), (2.0, 0.375), (3.0, 0.375)];
    assert_eq!(atoms.len(), 3);
    for ((t, w), (et, ew)) in atoms.iter().zip(expected) {
        assert_eq!(*t, et);
        assert!((w - ew).abs() < 1e-8, "{w} vs {ew}");
    }
    assert!(fit.intervals.iter().all(|j| j.atom));
}

#[test]
fn single_observation_gets_all_mass() {
    let dir = TempDir::new().unwrap();
    let (b, _) = npmle_json(&dir, "l,r\n0.5,2\n", &[]);
    let Payload::Npmle(fit) = b.result else { panic!("not npmle") };
    assert_eq!(fit.intervals.len(), 1);
    assert_eq!(fit.intervals[0].mass, 1.0);
    assert!(fit.converged);
}

#[test]
fn rules_differ_only_inside_intervals() {
    let dir = TempDir::new().unwrap();
    let (left, _) = npmle_json(&dir, MIXED, &["--rule", "left"]);
    let (right, _) = npmle_json(&dir, MIXED, &["--rule", "right"]);
    let (Payload::Npmle(l), Payload::Npmle(r)) = (left.result, right.result) else { panic!("not npmle") };
    assert_eq!(l.upper, r.upper);
    assert_eq!(l.lower, r.lower);
    for (k, &t) in l.grid.iter().enumerate() {
        let inside = l
            .intervals
            .iter()
            .any(|j| !j.atom && j.mass > 0.0 && j.left < t && j.right.is_none_or(|r| t < r));
        if !inside {
            assert_eq!(l.point[k], r.point[k], "t = {t}");
        }
        assert!(r.point[k] <= l.point[k]);
    }
}

#[test]
fn non_convergence_is_reported_not_fatal() {
    let dir = TempDir::new().unwrap();
    let (b, err) = npmle_json(&dir, MIXED, &["--max-iter", "1", "--plain", "--tol", "1e-300"]);
    let Payload::Npmle(fit) = b.result else { panic!("not npmle") };
    assert!(!fit.converged);
    assert!(err.contains("warning"), "{err}");
}

#[test]
fn uninformative_rows_warn() {
    let dir = TempDir::new().unwrap();
    let (_, err) = npmle_json(&dir, "l,r\n0,inf\n1,2\n", &[]);
    assert!(err.contains("(0, inf)"), "{err}");
}
