use std::process::{Command, Output};

const HEADER: &str =
    "study,method,omega,n,h,dofs,rel_err_h1semi,rel_err_l2,norm_1h,j0,j1,c_sta,residual,assemble_ms,solve_ms";

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_elastodg"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("ELASTODG_THREADS", t),
        None => cmd.env_remove("ELASTODG_THREADS"),
    };
    cmd.output().unwrap()
}

fn stdout_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

/// Drops the two wall-time columns.
fn without_timings(rows: &[Vec<String>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r[..13].to_vec()).collect()
}

const SWEEP: &[&str] = &["stability", "--omega", "1:6", "--n", "4,6", "--method", "both"];

#[test]
fn unknown_method_is_a_usage_error() {
    let out = run(&["single", "--method", "hdg"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hdg"));
}

#[test]
fn single_rejects_both_methods() {
    let out = run(&["single", "--omega", "2", "--n", "2", "--method", "both"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stability_rows_are_sorted_and_reproducible() {
    let first = stdout_rows(&run(SWEEP, Some("1")));
    let second = stdout_rows(&run(SWEEP, Some("1")));
    assert_eq!(first.len(), 6 * 2 * 2);
    assert_eq!(without_timings(&first), without_timings(&second));
    assert_eq!(first[0][..4], ["stability", "dg", "1", "4"]);
    assert_eq!(first[1][..4], ["stability", "dg", "1", "6"]);
    assert!(first.iter().all(|r| r[12].parse::<f64>().unwrap() <= 1e-10));
}

#[test]
fn thread_count_does_not_change_results() {
    let one = stdout_rows(&run(SWEEP, Some("1")));
    let two = stdout_rows(&run(SWEEP, Some("2")));
    assert_eq!(one.len(), two.len());
    for (a, b) in one.iter().zip(&two) {
        assert_eq!(a[..6], b[..6]);
        for k in 6..13 {
            let (x, y): (f64, f64) = (a[k].parse().unwrap(), b[k].parse().unwrap());
            assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300), "{}: {x} vs {y}", HEADER.split(',').nth(k).unwrap());
        }
    }
}

#[test]
fn pollution_rules_pick_mesh_sizes() {
    let rows = stdout_rows(&run(
        &["pollution", "--omega", "2,4", "--rule", "omega*h=1", "--rule", "w3h2=1"],
        None,
    ));
    let ns: Vec<(&str, &str, &str)> = rows.iter().map(|r| (r[0].as_str(), r[2].as_str(), r[3].as_str())).collect();
    assert!(ns.contains(&("pollution[omega*h=1]", "2", "2")));
    assert!(ns.contains(&("pollution[omega*h=1]", "4", "4")));
    assert!(ns.contains(&("pollution[omega^3*h^2=1]", "2", "3")));
    assert!(ns.contains(&("pollution[omega^3*h^2=1]", "4", "8")));
}

#[test]
fn out_file_and_companion_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cmp.csv");
    let svg = dir.path().join("cmp.svg");
    let out = run(
        &[
            "compare",
            "--omega",
            "3",
            "--n",
            "4",
            "--samples",
            "11",
            "--out",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some(HEADER));
    assert_eq!(text.lines().count(), 3);
    let cross = std::fs::read_to_string(dir.path().join("cmp.cross.csv")).unwrap();
    assert_eq!(cross.lines().next(), Some("omega,n,t,exact,dg,fem"));
    assert_eq!(cross.lines().count(), 12);
    assert!(std::fs::read_dir(dir.path()).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
}

#[test]
fn single_writes_centroid_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("u.csv");
    let out = run(&["single", "--omega", "3", "--n", "3", "--dump", dump.to_str().unwrap()], None);
    let rows = stdout_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..4], ["single", "dg", "3", "3"]);
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,re_u1,im_u1,re_u2,im_u2"));
    assert_eq!(text.lines().count(), 1 + 2 * 9);
}
