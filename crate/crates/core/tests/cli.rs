mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mplandscape::bands;
use mplandscape::landscape::{self, Grid, LandscapeGrid};
use mplandscape::pointcloud;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mplandscape"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn read_grid(path: &Path) -> LandscapeGrid {
    landscape::read_json(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

fn write_grid(path: &Path, l: &LandscapeGrid) {
    landscape::write_json(fs::File::create(path).unwrap(), l).unwrap();
}

fn constant(grid: Grid, v: f64) -> LandscapeGrid {
    let mut l = LandscapeGrid::zeros(grid, 1, 1);
    l.values.iter_mut().for_each(|x| *x = v);
    l
}

#[test]
fn generate_writes_one_csv_per_sample() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["generate", "--shape", "sphere", "--N", "500", "--R", "3", "--samples", "5", "--seed", "7", "--out", "a"]);
    let out = files(&tmp.path().join("a"));
    assert_eq!(out.len(), 5);
    for f in &out {
        let (pc, dens) = pointcloud::read_csv(std::io::BufReader::new(fs::File::open(f).unwrap())).unwrap();
        assert_eq!(pc.len(), 500);
        assert!(dens.is_none());
    }
    ok(tmp.path(), &["generate", "--shape", "sphere", "--N", "500", "--R", "3", "--samples", "5", "--seed", "7", "--out", "b"]);
    for (a, b) in out.iter().zip(files(&tmp.path().join("b"))) {
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }
}

#[test]
fn generate_rejects_bad_radius() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["generate", "--shape", "sphere", "--R", "0", "--out", "a"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("R must be > 0"));
    assert_eq!(code(tmp.path(), &["generate", "--shape", "torus", "--R", "1", "--r", "2", "--out", "a"]), 2);
}

#[test]
fn landscape_modes_and_envelope() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["generate", "--shape", "torus", "--N", "60", "--samples", "2", "--seed", "3", "--out", "c"]);
    ok(d, &["landscape", "c", "--m", "8", "--max-scale", "2.5", "--csv", "--save-bifiltration", "--out", "l"]);
    ok(d, &["landscape", "c", "--m", "8", "--max-scale", "2.5", "--mode", "sph", "--out", "s"]);
    for f in files(&d.join("l")).iter().filter(|f| f.extension().unwrap() == "json") {
        let l = read_grid(f);
        assert_eq!((l.grid.d, l.grid.m, l.k, l.degree), (2, 8, 1, 1));
        common::assert_landscape_ok(&l);
    }
    assert!(d.join("l/torus_0000.csv").exists());
    assert!(d.join("l/torus_0000.bif").exists());
    for f in files(&d.join("s")) {
        let l = read_grid(&f);
        assert_eq!(l.grid.d, 1);
        common::assert_landscape_ok(&l);
    }
    let rank = ok(d, &["rank", "--input", "l/torus_0000.bif", "--degree", "0", "--x", "0.5,0.5", "--y", "1,1"]);
    let rank: usize = rank.trim().parse().unwrap();
    assert!(rank >= 1);
    let from_cloud = ok(d, &["rank", "--input", "c/torus_0000.csv", "--max-scale", "2.5", "--degree", "0", "--x", "0.5,0.5", "--y", "1,1"]);
    assert_eq!(from_cloud.trim().parse::<usize>().unwrap(), rank);
    assert_eq!(code(d, &["rank", "--input", "l/torus_0000.bif", "--x", "1,1", "--y", "0,0"]), 0);
}

#[test]
fn landscape_validation_and_io_errors() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("empty.csv"), "").unwrap();
    assert_eq!(code(d, &["landscape", "empty.csv", "--out", "l"]), 2);
    fs::write(d.join("bad.csv"), "x,y,z\n1,2\n").unwrap();
    assert_eq!(code(d, &["landscape", "bad.csv", "--out", "l"]), 2);
    assert_eq!(code(d, &["landscape", "missing.csv", "--out", "l"]), 3);
    fs::write(d.join("one.csv"), "x,y,z\n0,0,0\n1,0,0\n").unwrap();
    assert_eq!(code(d, &["landscape", "one.csv", "--T", "0", "--out", "l"]), 2);
    assert_eq!(code(d, &["landscape", "one.csv", "--k", "0", "--out", "l"]), 2);
    assert_eq!(code(d, &["landscape", "one.csv", "--m", "1", "--out", "l"]), 2);
}

#[test]
fn band_zero_width_for_identical_grids() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::create_dir(d.join("g")).unwrap();
    let grid = Grid::new(1.0, 5, 2).unwrap();
    for i in 0..4 {
        write_grid(&d.join(format!("g/{i}.json")), &constant(grid, 0.125));
    }
    ok(d, &["band", "g", "--B", "50", "--out", "band.json"]);
    let band = bands::read_json(std::io::BufReader::new(fs::File::open(d.join("band.json")).unwrap())).unwrap();
    assert_eq!(band.z_tilde, 0.0);
    assert_eq!(band.lower, band.mean.values);
    assert_eq!(band.upper, band.mean.values);
    assert!(fs::read_to_string(d.join("band.csv")).unwrap().starts_with("x1,x2,mean,lower,upper"));
    assert_eq!(code(d, &["band", "g", "--alpha", "1.5", "--out", "x.json"]), 2);
    assert_eq!(code(d, &["band", "g", "--B", "0", "--out", "x.json"]), 2);
}

#[test]
fn band_quantile_matches_dumped_replicates() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::create_dir(d.join("g")).unwrap();
    let grid = Grid::new(1.0, 5, 2).unwrap();
    for i in 0..9 {
        let mut l = constant(grid, 0.0);
        l.values.iter_mut().enumerate().for_each(|(j, v)| *v = ((i * 7 + j * 3) % 11) as f64 / 40.0);
        write_grid(&d.join(format!("g/{i}.json")), &l);
    }
    ok(d, &["band", "g", "--method", "multiplier", "--B", "1000", "--alpha", "0.05", "--seed", "4", "--dump-theta", "theta.txt", "--out", "band.json"]);
    let theta: Vec<f64> = fs::read_to_string(d.join("theta.txt")).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(theta.len(), 1000);
    let band = bands::read_json(std::io::BufReader::new(fs::File::open(d.join("band.json")).unwrap())).unwrap();
    assert_eq!(band.z_tilde, bands::empirical_quantile(&theta, 0.05).unwrap());
    assert_eq!(band.replicates, 1000);
}

fn write_classes(d: &Path, per_class: usize) -> Vec<String> {
    let grid = Grid::new(1.0, 4, 2).unwrap();
    let mut dirs = Vec::new();
    for (c, name) in ["alpha", "beta", "gamma"].iter().enumerate() {
        let dir = d.join(name);
        fs::create_dir(&dir).unwrap();
        for i in 0..per_class {
            write_grid(&dir.join(format!("{i:02}.json")), &constant(grid, c as f64 * 0.1));
        }
        dirs.push(dir.to_string_lossy().into_owned());
    }
    dirs
}

#[test]
fn classify_separable_classes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let dirs = write_classes(d, 6);
    let mut args: Vec<&str> = vec!["classify"];
    args.extend(dirs.iter().map(String::as_str));
    args.extend(["--folds", "5", "--B", "30", "--seed", "2", "--out", "r1.json"]);
    let stdout = ok(d, &args);
    assert!(stdout.contains("1.00 ± 0.00"), "{stdout}");
    let confusion = fs::read_to_string(d.join("r1_confusion.csv")).unwrap();
    assert_eq!(confusion.lines().next().unwrap(), "true\\predicted,alpha,beta,gamma");
    let n = args.len();
    args[n - 1] = "r2.json";
    ok(d, &args);
    assert_eq!(fs::read(d.join("r1.json")).unwrap(), fs::read(d.join("r2.json")).unwrap());
    args[n - 1] = "r3.json";
    let folds = args.iter().position(|a| *a == "--folds").unwrap() + 1;
    args[folds] = "7";
    assert_eq!(code(d, &args), 2);
}
