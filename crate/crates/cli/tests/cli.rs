use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use offsetph_cli::{parse_instance, write_instance, BarcodeFile};
use tempfile::TempDir;

const TWO_SQUARES: &str = r#"{"polygons": [[[0,0],[1,0],[1,1],[0,1]], [[2,0],[3,0],[3,1],[2,1]]]}"#;
const RING: &str = r#"{"polygons": [
  [[0.01,0],[1.01,0],[1.01,1],[0.01,1]],
  [[3,0],[4,0],[4,1],[3,1]],
  [[3,3],[4,3],[4,4],[3,4]],
  [[0,3],[1,3],[1,4],[0,4]]
]}"#;

fn offsetph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_offsetph")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = offsetph(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    offsetph(args).status.code().unwrap()
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exact_two_squares() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "two.json", TWO_SQUARES);
    let bf = BarcodeFile::parse(&stdout(&["exact", s(&inst)])).unwrap();
    assert_eq!(bf.barcode.dim0.len(), 2);
    assert_eq!((bf.barcode.dim0[0].birth, bf.barcode.dim0[0].death), (0.0, 0.5));
    assert!(bf.barcode.dim0[1].is_essential());
    assert!(bf.barcode.dim1.is_empty());
    assert_eq!(bf.meta.pipeline, "restricted");
    assert_eq!(bf.meta.filtration_size, 3);
    assert_eq!(bf.meta.elapsed_seconds, None);
}

#[test]
fn single_polygon_and_small_cech_sizes() {
    let dir = TempDir::new().unwrap();
    let one = file(&dir, "one.json", r#"{"polygons": [[[0,0],[1,0],[0,1]]]}"#);
    for cmd in ["exact", "cech"] {
        let bf = BarcodeFile::parse(&stdout(&[cmd, s(&one)])).unwrap();
        assert_eq!(bf.barcode.dim0.len(), 1);
        assert!(bf.barcode.dim0[0].is_essential() && bf.barcode.dim0[0].birth == 0.0);
        assert!(bf.barcode.dim1.is_empty());
        assert_eq!(bf.meta.filtration_size, 1);
    }
    let ring = file(&dir, "ring.json", RING);
    assert_eq!(BarcodeFile::parse(&stdout(&["cech", s(&ring)])).unwrap().meta.filtration_size, 14);
}

#[test]
fn generated_ten_sites() {
    let text = stdout(&["gen", "-n", "10", "--seed", "1"]);
    assert_eq!(text, stdout(&["gen", "-n", "10", "--seed", "1"]));
    let sites = parse_instance(&text).unwrap();
    assert_eq!(sites.len(), 10);
    for p in sites.polygons() {
        assert!(p.len() <= 5);
        assert!(p.vertices().iter().all(|v| (0.0..=100.0).contains(&v.x) && (0.0..=100.0).contains(&v.y)));
    }
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "g.json", &text);
    let exact = BarcodeFile::parse(&stdout(&["exact", s(&inst)])).unwrap();
    let cech = BarcodeFile::parse(&stdout(&["cech", s(&inst)])).unwrap();
    assert_eq!(cech.meta.filtration_size, 175);
    assert!(exact.meta.filtration_size < 175 / 2, "{}", exact.meta.filtration_size);
}

#[test]
fn instance_round_trip() {
    let text = stdout(&["gen", "-n", "25", "--seed", "3"]);
    let sites = parse_instance(&text).unwrap();
    assert_eq!(write_instance(&sites), text);
    assert_eq!(parse_instance(&write_instance(&sites)).unwrap(), sites);
    // clockwise input is canonicalized to counterclockwise
    let cw = parse_instance(r#"{"polygons": [[[0,0],[0,1],[1,1],[1,0]]]}"#).unwrap();
    let ccw = parse_instance(r#"{"polygons": [[[0,0],[1,0],[1,1],[0,1]]]}"#).unwrap();
    assert_eq!(cw, ccw);
}

#[test]
fn sample_single_square_short_holes() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "sq.json", r#"{"polygons": [[[0,0],[3,0],[3,3],[0,3]]]}"#);
    let bf = BarcodeFile::parse(&stdout(&["sample", s(&inst), "--eps", "0.5", "--show-zero-bars"])).unwrap();
    assert_eq!(bf.meta.epsilon, Some(0.5));
    assert_eq!(bf.meta.pipeline, "sample");
    assert!(bf.barcode.dim1.iter().all(|b| b.persistence() <= 0.5));
    assert_eq!(bf.barcode.dim0.iter().filter(|b| b.is_essential()).count(), 1);
}

#[test]
fn compare_reports() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "two.json", TWO_SQUARES);
    let a = dir.path().join("a.json");
    assert_eq!(code(&["exact", s(&inst), "--out", s(&a)]), 0);
    assert_eq!(
        stdout(&["compare", s(&a), s(&a)]),
        "bottleneck dim0 0.0\nbottleneck dim1 0.0\nbars dim0 2 2 +0\nbars dim1 0 0 +0\n"
    );
    let one = file(
        &dir,
        "one.json",
        "{\"dim0\": [[0, \"inf\"]], \"dim1\": [], \"meta\": {\"pipeline\": \"x\", \"n_sites\": 1, \"filtration_size\": 1, \"elapsed_seconds\": null}}",
    );
    let b = file(
        &dir,
        "b.json",
        "{\"dim0\": [[0, \"inf\"], [0, \"inf\"]], \"dim1\": [], \"meta\": {\"pipeline\": \"x\", \"n_sites\": 2, \"filtration_size\": 2, \"elapsed_seconds\": null}}",
    );
    let report = stdout(&["compare", s(&one), s(&b)]);
    assert!(report.starts_with("bottleneck dim0 inf\n"), "{report}");
}

#[test]
fn plots() {
    let dir = TempDir::new().unwrap();
    let empty = file(
        &dir,
        "e.json",
        "{\"dim0\": [], \"dim1\": [], \"meta\": {\"pipeline\": \"x\", \"n_sites\": 0, \"filtration_size\": 0, \"elapsed_seconds\": null}}",
    );
    let svg = stdout(&["plot", s(&empty)]);
    assert!(svg.starts_with("<svg") && svg.contains("offset radius"));
    assert!(!svg.contains("stroke=\"red\"") && !svg.contains("stroke=\"blue\""));

    let count = |svg: &str, c: &str| svg.matches(&format!("stroke=\"{c}\" stroke-width")).count();
    let two = file(&dir, "two.json", TWO_SQUARES);
    let b = dir.path().join("two_bars.json");
    assert_eq!(code(&["exact", s(&two), "--out", s(&b)]), 0);
    let svg = stdout(&["plot", s(&b)]);
    assert_eq!((count(&svg, "red"), count(&svg, "blue")), (2, 0));
    assert_eq!(svg.matches("marker-end").count(), 1);

    let ring = file(&dir, "ring.json", RING);
    let b = dir.path().join("ring_bars.json");
    assert_eq!(code(&["exact", s(&ring), "--out", s(&b)]), 0);
    let svg = stdout(&["plot", s(&b)]);
    assert_eq!((count(&svg, "red"), count(&svg, "blue")), (4, 1));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let two = file(&dir, "two.json", TWO_SQUARES);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["nope"]), 1);
    assert_eq!(code(&["gen", "-n", "0"]), 1);
    assert_eq!(code(&["sample", s(&two), "--eps", "0"]), 1);
    assert_eq!(code(&["sample", s(&two), "--eps", "-1"]), 1);
    assert_eq!(code(&["bench", "--sizes", "3", "--seeds", ""]), 1);
    assert_eq!(code(&["--help"]), 0);

    let overlap = file(&dir, "o.json", r#"{"polygons": [[[0,0],[2,0],[2,2],[0,2]], [[1,1],[3,1],[3,3]]]}"#);
    let nonconvex = file(&dir, "n.json", r#"{"polygons": [[[0,0],[2,0],[1,0.5],[2,2],[0,2]]]}"#);
    let garbage = file(&dir, "g.json", "{\"polygons\": 3}");
    for f in [&overlap, &nonconvex, &garbage] {
        let out = offsetph(&["exact", s(f)]);
        assert_eq!(out.status.code(), Some(2));
        assert!(out.stdout.is_empty());
    }
    let stderr = String::from_utf8(offsetph(&["exact", s(&nonconvex)]).stderr).unwrap();
    assert!(stderr.contains("polygon 0"), "{stderr}");

    let sym = file(
        &dir,
        "sym.json",
        r#"{"polygons": [[[0,0],[1,0],[1,1],[0,1]], [[3,0],[4,0],[4,1],[3,1]], [[3,3],[4,3],[4,4],[3,4]], [[0,3],[1,3],[1,4],[0,4]]]}"#,
    );
    assert_eq!(code(&["exact", s(&sym)]), 3);
    assert_eq!(code(&["cech", s(&two), "--cech-cap", "1"]), 4);
    assert_eq!(code(&["sample", s(&two), "--eps", "1e-6"]), 5);
    let bad = file(&dir, "bad.json", "{\"dim0\": [[1, 0]], \"dim1\": []}");
    assert_eq!(code(&["plot", s(&bad)]), 6);
    assert_eq!(code(&["compare", s(&bad), s(&bad)]), 6);
    assert_eq!(code(&["gen", "-n", "100000", "--min-side", "20", "--max-side", "30"]), 7);
}

#[test]
fn bench_csv() {
    let csv = stdout(&["bench", "--sizes", "4,6", "--seeds", "1,2", "--eps", "1", "--cech-cap", "5"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "pipeline,n_vertices,filtration_size,filtration_time_s,persistence_time_s,total_s");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("restricted,"));
    assert!(lines[2].starts_with("sample(eps=1.0),"));
    assert!(lines[3].starts_with("cech,") && lines[3].split(',').nth(2) == Some("14.0"));
    assert!(lines[6].starts_with("cech,") && lines[6].ends_with(",-,-,-,-"));
}

#[test]
fn timing_flag_fills_elapsed() {
    let dir = TempDir::new().unwrap();
    let two = file(&dir, "two.json", TWO_SQUARES);
    let bf = BarcodeFile::parse(&stdout(&["exact", s(&two), "--timing"])).unwrap();
    assert!(bf.meta.elapsed_seconds.is_some_and(|t| t >= 0.0));
}
