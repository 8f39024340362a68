use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn manifests() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests")
}

fn convpoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convpoly"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest_arg(name: &str) -> String {
    manifests().join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn radius_of_exponential() {
    let out = convpoly(&["radius", "--manifest", &manifest_arg("exponential.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("knots=-63/64@-63/64"), "{text}");
    assert!(text.contains("estimate at order 64"));
}

#[test]
fn order_flag_overrides_manifest() {
    let out = convpoly(&["radius", "--manifest", &manifest_arg("exponential.toml"), "--order", "128"]);
    assert!(stdout(&out).contains("knots=-127/128@-127/128"));
}

#[test]
fn trivial_connection_is_the_cap() {
    let out = convpoly(&["radius", "--manifest", &manifest_arg("trivial_disc.toml"), "--order", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("polygon=domain=-inf..0 slope=0 anchor=0@0"));
    assert!(stdout(&out).contains("provenance=cap"));
}

#[test]
fn polygon_report_and_files() {
    let dir = scratch("polygon");
    let out = convpoly(&[
        "polygon",
        "--manifest",
        &manifest_arg("exponential.toml"),
        "--out",
        dir.to_str().unwrap(),
        "--samples",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = std::fs::read_to_string(dir.join("polygon.txt")).unwrap();
    assert_eq!(text, stdout(&out));
    assert!(text.contains("orientation: annuli by increasing s; discs from centre to boundary"));
    assert!(text.contains("no non-constancy detected on probed branches at order 64"));
    let tsv = std::fs::read_to_string(dir.join("polygon.tsv")).unwrap();
    assert_eq!(
        tsv,
        "s\tvalue\tvalue_decimal\n-2\t0\t0.000000\n-3/2\t0\t0.000000\n-1\t0\t0.000000\n-1/2\t-31/64\t-0.484375\n0\t-63/64\t-0.984375\n"
    );
}

#[test]
fn polygon_is_deterministic() {
    let args = ["polygon", "--manifest", &manifest_arg("slope_two.toml")];
    let a = convpoly(&args);
    let b = convpoly(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("slope=2"));
}

#[test]
fn truncation_artifact_exits_one() {
    let out = convpoly(&["polygon", "--manifest", &manifest_arg("rank_two.toml")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("fail (piece 1 slope 1/16)"));
}

#[test]
fn dirichlet_star() {
    let out = convpoly(&["dirichlet", "--manifest", &manifest_arg("star.toml")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\nc\t1\t1.000000\n"), "{}", stdout(&out));
}

#[test]
fn laplacian_path() {
    let out = convpoly(&["laplacian", "--manifest", &manifest_arg("path.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("a\t1\t1.000000\nx\t-2\t-2.000000\nb\t1\t1.000000\n"), "{text}");
    assert!(text.contains("interior=superharmonic"));
}

#[test]
fn malformed_rational_is_a_parse_error() {
    let dir = scratch("bad");
    let path = dir.join("bad.toml");
    let src = std::fs::read_to_string(manifests().join("exponential.toml"))
        .unwrap()
        .replace("s1 = \"-2\"", "s1 = \"1/0\"");
    std::fs::write(&path, src).unwrap();
    let out = convpoly(&["radius", "--manifest", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:6:6"), "{err}");
}

#[test]
fn missing_block_names_it() {
    let out = convpoly(&["dirichlet", "--manifest", &manifest_arg("exponential.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing [graph] block"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(convpoly(&["radius"]).status.code(), Some(2));
    assert_eq!(convpoly(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_bundled_suite() {
    let out = convpoly(&["verify", "--manifest", &manifest_arg("exponential.toml")]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 11);
    assert!(text.ends_with("11 of 11 passed\n"));
}
