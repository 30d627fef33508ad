use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qzone::decomposition::{select_active_set, Ranking};
use qzone::engine::{run_hybrid, HybridConfig};
use qzone::experiment::ComparisonReport;
use qzone::subsolvers::{solve_exact, SolverKind, SubSolverConfig};
use qzone::zoning::{build_qubo, read_instance, write_instance, Edge, SolutionFile};
use qzone::{Assignment, TrafficInstance};
use tempfile::TempDir;

fn qzone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qzone")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = qzone(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    qzone(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, rows: &str, cols: &str, seed: &str) -> PathBuf {
    let path = dir.path().join(name);
    ok(&[
        "gen",
        "--rows",
        rows,
        "--cols",
        cols,
        "--attrs",
        "3",
        "--seed",
        seed,
        "--out",
        p(&path),
    ]);
    path
}

fn write_solution(dir: &TempDir, name: &str, inst: &Path, x: Assignment) -> PathBuf {
    let m = build_qubo(&read_instance(inst).unwrap()).unwrap();
    let part = qzone::Partition::evaluate(&m, x).unwrap();
    let path = dir.path().join(name);
    SolutionFile::new(&part, "manual", None, 0).write(&path).unwrap();
    path
}

#[test]
fn gen_examples() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.json", "8", "8", "7");
    let inst = read_instance(&a).unwrap();
    assert_eq!(inst.num_zones(), 64);
    assert_eq!(inst.edges().len(), 112);
    let b = gen(&dir, "b.json", "8", "8", "7");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let out = ok(&[
        "gen",
        "--rows",
        "1",
        "--cols",
        "2",
        "--out",
        p(&dir.path().join("t.json")),
    ]);
    assert!(out.contains("zones: 2") && out.contains("edges: 1"), "{out}");
    assert_eq!(
        code(&[
            "gen",
            "--rows",
            "0",
            "--cols",
            "2",
            "--out",
            p(&dir.path().join("z.json"))
        ]),
        2
    );
    assert_eq!(code(&["gen", "--rows", "x", "--cols", "2", "--out", "z.json"]), 1);
}

#[test]
fn direct_exact_finds_the_optimum() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "3", "3", "1");
    let prefix = dir.path().join("d");
    ok(&[
        "solve",
        "--instance",
        p(&inst),
        "--method",
        "direct",
        "--subsolver",
        "exact",
        "--out-prefix",
        p(&prefix),
    ]);
    let sol = SolutionFile::read(&dir.path().join("d.solution.json")).unwrap();
    let m = build_qubo(&read_instance(&inst).unwrap()).unwrap();
    let opt = solve_exact(&m, 24).unwrap();
    assert_eq!(sol.assignment, opt.assignment);
    assert_eq!(sol.objective, opt.energy);

    let prefix = dir.path().join("h");
    ok(&[
        "solve",
        "--instance",
        p(&inst),
        "--method",
        "hybrid",
        "--subsolver",
        "exact",
        "--q",
        "9",
        "--out-prefix",
        p(&prefix),
    ]);
    let hybrid = SolutionFile::read(&dir.path().join("h.solution.json")).unwrap();
    assert_eq!(hybrid.assignment, sol.assignment);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("h.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["final_objective"].as_f64().unwrap(), hybrid.objective);
    assert!(summary["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(summary["config"]["q"], 9);
}

#[test]
fn solve_matches_library_run() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "5", "5", "3");
    let prefix = dir.path().join("r");
    ok(&[
        "solve",
        "--instance",
        p(&inst),
        "--q",
        "8",
        "--seed",
        "4",
        "--subsolver",
        "tabu",
        "--out-prefix",
        p(&prefix),
    ]);
    let m = build_qubo(&read_instance(&inst).unwrap()).unwrap();
    let t = run_hybrid(
        &m,
        &HybridConfig {
            q: 8,
            seed: 4,
            subsolver: SubSolverConfig::new(SolverKind::Tabu, 4),
            ..HybridConfig::default()
        },
    )
    .unwrap();
    let sol = SolutionFile::read(&dir.path().join("r.solution.json")).unwrap();
    assert_eq!(sol.assignment, t.final_partition.assignment);
    assert_eq!(
        fs::read_to_string(dir.path().join("r.trajectory.csv")).unwrap(),
        t.to_csv_string()
    );
}

#[test]
fn solve_rejections() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "8", "8", "7");
    let prefix = dir.path().join("x");
    assert_eq!(code(&["solve", "--method", "hybrid"]), 1);
    assert_eq!(code(&["solve", "--instance", p(&inst), "--method", "sideways"]), 1);
    assert_eq!(
        code(&[
            "solve",
            "--instance",
            p(&inst),
            "--subsolver",
            "exact",
            "--q",
            "30",
            "--out-prefix",
            p(&prefix)
        ]),
        2
    );
    assert!(!dir.path().join("x.solution.json").exists());
    assert_eq!(code(&["solve", "--instance", p(&dir.path().join("missing.json"))]), 2);
    assert_eq!(
        code(&[
            "solve",
            "--instance",
            p(&inst),
            "--subsolver",
            "external",
            "--out-prefix",
            p(&prefix)
        ]),
        2
    );
    assert_eq!(
        code(&[
            "solve",
            "--instance",
            p(&inst),
            "--method",
            "direct",
            "--subsolver",
            "external",
            "--external-cmd",
            "false",
            "--out-prefix",
            p(&prefix),
        ]),
        3
    );
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn external_solver_from_environment() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "3", "4", "2");
    let prefix = dir.path().join("e");
    let backend = format!("{} backend --kind exact", env!("CARGO_BIN_EXE_qzone"));
    let out = Command::new(env!("CARGO_BIN_EXE_qzone"))
        .args([
            "solve",
            "--instance",
            p(&inst),
            "--method",
            "direct",
            "--subsolver",
            "external",
            "--out-prefix",
            p(&prefix),
        ])
        .env("QZONE_EXTERNAL_SOLVER", backend)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = SolutionFile::read(&dir.path().join("e.solution.json")).unwrap();
    let m = build_qubo(&read_instance(&inst).unwrap()).unwrap();
    assert_eq!(sol.objective, solve_exact(&m, 24).unwrap().energy);
}

#[test]
fn warm_start_from_a_solution() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "4", "4", "5");
    let warm = write_solution(&dir, "w.json", &inst, Assignment::from_bits(vec![true; 16]));
    let prefix = dir.path().join("w");
    ok(&[
        "solve",
        "--instance",
        p(&inst),
        "--warm-start",
        p(&warm),
        "--q",
        "4",
        "--out-prefix",
        p(&prefix),
    ]);
    let csv = fs::read_to_string(dir.path().join("w.trajectory.csv")).unwrap();
    let first: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let m = build_qubo(&read_instance(&inst).unwrap()).unwrap();
    assert_eq!(first, m.evaluate(&Assignment::from_bits(vec![true; 16])).unwrap());

    let small = gen(&dir, "s.json", "2", "2", "5");
    assert_eq!(code(&["solve", "--instance", p(&small), "--warm-start", p(&warm)]), 2);
}

#[test]
fn compare_tables() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "4", "4", "9");
    let json = dir.path().join("r.json");
    let out = ok(&[
        "compare",
        "--instance",
        p(&inst),
        "--seeds",
        "3,",
        "--methods",
        "hybrid",
        "--budget",
        "2000",
        "--q",
        "6",
        "--json-out",
        p(&json),
    ]);
    assert_eq!(out.lines().count(), 2, "{out}");
    let report: ComparisonReport = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.config.seeds, vec![3]);

    ok(&[
        "compare",
        "--instance",
        p(&inst),
        "--seeds",
        "4",
        "--budget",
        "4000",
        "--q",
        "6",
        "--json-out",
        p(&json),
    ]);
    let report: ComparisonReport = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.config.seeds, vec![0, 1, 2, 3]);
    assert_eq!(report.runs.len(), 12);
    assert!(report.rows.windows(2).all(|w| w[0].median <= w[1].median));

    assert_eq!(code(&["compare", "--instance", p(&inst), "--seeds", "a,b"]), 2);
    assert_eq!(code(&["compare", "--instance", p(&inst), "--seeds", "0"]), 2);
    let big = gen(&dir, "b.json", "8", "8", "1");
    assert_eq!(
        code(&["compare", "--instance", p(&big), "--subsolver", "exact", "--q", "30"]),
        2
    );
}

fn checkerboard(rows: usize, cols: usize) -> Assignment {
    Assignment::from_bits((0..rows * cols).map(|i| (i / cols + i % cols) % 2 == 1).collect())
}

#[test]
fn render_svg_and_ppm() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "i.json", "8", "8", "7");
    let board = write_solution(&dir, "c.json", &inst, checkerboard(8, 8));
    let svg = dir.path().join("c.svg");
    let out = ok(&[
        "render",
        "--instance",
        p(&inst),
        "--solution",
        p(&board),
        "--out",
        p(&svg),
    ]);
    assert!(out.contains("112 cut edges"));
    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed svg");
    let lines = doc.descendants().filter(|n| n.has_tag_name("line")).count();
    assert_eq!(lines, 112);

    let zeros = write_solution(&dir, "z.json", &inst, Assignment::zeros(64));
    let svg0 = dir.path().join("z.svg");
    ok(&[
        "render",
        "--instance",
        p(&inst),
        "--solution",
        p(&zeros),
        "--out",
        p(&svg0),
        "--palette",
        "#ffffff,#000000",
    ]);
    let text = fs::read_to_string(&svg0).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let fills: std::collections::BTreeSet<&str> = doc
        .descendants()
        .filter(|n| n.has_tag_name("rect"))
        .map(|n| n.attribute("fill").unwrap())
        .collect();
    assert_eq!(fills.into_iter().collect::<Vec<_>>(), vec!["#ffffff"]);
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("line")).count(), 0);

    let ppm = dir.path().join("c.ppm");
    ok(&[
        "render",
        "--instance",
        p(&inst),
        "--solution",
        p(&board),
        "--out",
        p(&ppm),
        "--cell-size",
        "5",
    ]);
    let bytes = fs::read(&ppm).unwrap();
    let header = b"P6\n40 40\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    assert_eq!(bytes.len(), header.len() + 40 * 40 * 3);

    let small = gen(&dir, "s.json", "2", "2", "1");
    assert_eq!(
        code(&[
            "render",
            "--instance",
            p(&small),
            "--solution",
            p(&board),
            "--out",
            p(&svg)
        ]),
        2
    );
    assert_eq!(
        code(&[
            "render",
            "--instance",
            p(&inst),
            "--solution",
            p(&board),
            "--out",
            p(&svg),
            "--cell-size",
            "0"
        ]),
        2
    );
}

#[test]
fn impacts_report() {
    let dir = TempDir::new().unwrap();
    let inst_path = gen(&dir, "i.json", "6", "6", "4");
    let inst = read_instance(&inst_path).unwrap();
    let m = build_qubo(&inst).unwrap();
    let x = checkerboard(6, 6);
    let sol = write_solution(&dir, "c.json", &inst_path, x.clone());
    let heat = dir.path().join("h.svg");
    let out = ok(&[
        "impacts",
        "--instance",
        p(&inst_path),
        "--solution",
        p(&sol),
        "--top",
        "7",
        "--heatmap",
        p(&heat),
    ]);
    let impacts = m.impact_vector(&x).unwrap();
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(2)
        .take(7)
        .map(|l| l.split_whitespace().collect())
        .collect();
    let mut zones: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    for r in &rows {
        let z: usize = r[1].parse().unwrap();
        assert_eq!(format!("{:.9}", impacts[z]), r[5]);
        assert_eq!(inst.coords(z), (r[2].parse().unwrap(), r[3].parse().unwrap()));
    }
    zones.sort_unstable();
    assert_eq!(zones, select_active_set(&m, &x, 7, Ranking::Magnitude).unwrap().indices);
    roxmltree::Document::parse(&fs::read_to_string(&heat).unwrap()).unwrap();

    assert_eq!(code(&["impacts", "--instance", p(&inst_path)]), 2);
    assert_eq!(
        code(&[
            "impacts",
            "--instance",
            p(&inst_path),
            "--solution",
            p(&sol),
            "--init",
            "zeros"
        ]),
        1
    );
}

#[test]
fn zero_model_has_zero_impacts() {
    let dir = TempDir::new().unwrap();
    let inst = TrafficInstance::new(2, 2, vec![vec![0.0]; 4], vec![Edge { i: 0, j: 1, w: 1.0 }], 0.0, None).unwrap();
    let path = dir.path().join("z.json");
    write_instance(&inst, &path).unwrap();
    let out = ok(&["impacts", "--instance", p(&path), "--init", "random", "--top", "4"]);
    for line in out.lines().skip(2) {
        let v: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn backend_rejects_malformed_requests() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_qzone"))
        .args(["backend"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"{\"nope\":1}").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}
