//! Command-line front end.
//!
//! Every command is a pure function of its input files, flags and `--seed`;
//! sub-seeds are derived per stage and index, so output does not depend on
//! `--threads`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::bands::{self, BandConfig, Method};
use crate::bifiltration::{self, Bigrade, Bifiltration};
use crate::classify::{self, ClassSamples};
use crate::error::{Error, Result};
use crate::landscape::{self, Grid, LandscapeGrid};
use crate::pointcloud::{self, DensityEstimate, PointCloud};
use crate::rng::derive_seed;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_INVARIANT: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "mplandscape", version, about = "Multiparameter persistence landscapes and bootstrap confidence bands")]
pub struct Cli {
    /// Master seed; every stage derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample noisy point clouds and write one CSV per sample.
    Generate(GenerateArgs),
    /// Compute landscape grids from point-cloud CSVs.
    Landscape(LandscapeArgs),
    /// Bootstrap a confidence band from landscape grids.
    Band(BandArgs),
    /// Cross-validate the band-depth classifier over per-class directories.
    Classify(ClassifyArgs),
    /// Evaluate the rank invariant between two bigrades.
    Rank(RankArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Sphere,
    Torus,
    Klein,
}

impl Shape {
    fn name(self) -> &'static str {
        match self {
            Shape::Sphere => "sphere",
            Shape::Torus => "torus",
            Shape::Klein => "klein",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Two-parameter Rips x codensity landscape.
    Mph,
    /// Single-parameter Rips landscape.
    Sph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Standard,
    Multiplier,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Standard => Method::Standard,
            MethodArg::Multiplier => Method::Multiplier,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub shape: Shape,
    /// Points per cloud.
    #[arg(long = "N", default_value_t = 500)]
    pub n_points: usize,
    /// Sphere radius or torus major radius.
    #[arg(long = "R", default_value_t = 3.0)]
    pub major: f64,
    /// Torus minor radius.
    #[arg(long = "r", default_value_t = 0.7)]
    pub minor: f64,
    /// Number of clouds to write.
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    /// Gaussian noise scale.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Fraction of points displaced by salt-and-pepper noise.
    #[arg(long, default_value_t = 0.005)]
    pub salt_fraction: f64,
    /// Largest salt-and-pepper displacement.
    #[arg(long, default_value_t = 0.5)]
    pub max_disp: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct FiltrationArgs {
    /// Box bound after normalization.
    #[arg(long = "T", default_value_t = 1.0)]
    pub t: f64,
    /// Longest Rips edge (default: the cloud diameter).
    #[arg(long)]
    pub max_scale: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub max_dim: usize,
    /// KDE bandwidth (default: Scott's rule).
    #[arg(long)]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    /// Point-cloud CSV files or directories of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Mph)]
    pub mode: Mode,
    #[command(flatten)]
    pub filtration: FiltrationArgs,
    /// Grid points per axis.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    /// Homology degree.
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Landscape level.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Also write an `x1,x2,value` CSV next to each grid.
    #[arg(long)]
    pub csv: bool,
    /// Also write the normalized bifiltration of each cloud (mph mode).
    #[arg(long)]
    pub save_bifiltration: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct BootstrapArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Standard)]
    pub method: MethodArg,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Scale standard replicates by sqrt(floor(n/2)) instead of sqrt(n).
    #[arg(long)]
    pub scale_half: bool,
    /// Clamp the lower band at zero.
    #[arg(long)]
    pub clamp_zero: bool,
}

impl BootstrapArgs {
    fn config(&self, seed: u64) -> BandConfig {
        BandConfig {
            scale_half: self.scale_half,
            clamp_zero: self.clamp_zero,
            ..BandConfig::new(self.method.into(), self.replicates, self.alpha, seed)
        }
    }
}

#[derive(Debug, Args)]
pub struct BandArgs {
    /// Landscape grid files or directories of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    /// Write the bootstrap replicates, one per line, to this file.
    #[arg(long)]
    pub dump_theta: Option<PathBuf>,
    /// Band document path; a CSV export is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// One directory of landscape grids per class; the directory name is the label.
    #[arg(required = true)]
    pub classes: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    /// Results document path; a confusion-matrix CSV is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Bifiltration text file, or a point-cloud CSV to build one from.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Lower bigrade `scale,codensity`.
    #[arg(long, value_parser = parse_bigrade, allow_hyphen_values = true)]
    pub x: Bigrade,
    /// Upper bigrade `scale,codensity`.
    #[arg(long, value_parser = parse_bigrade, allow_hyphen_values = true)]
    pub y: Bigrade,
    #[command(flatten)]
    pub filtration: FiltrationArgs,
}

fn parse_bigrade(s: &str) -> std::result::Result<Bigrade, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected 'scale,codensity', got '{s}'"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bad scale '{a}': {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bad codensity '{b}': {e}"))?;
    if !(a.is_finite() && b.is_finite()) {
        return Err("bigrade components must be finite".into());
    }
    Ok(Bigrade::new(a, b))
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter(_) | Error::InvalidInput(_) | Error::Parse(_) | Error::Json(_) => {
            EXIT_VALIDATION
        }
        Error::Io(_) => EXIT_IO,
        Error::Invariant(_) => EXIT_INVARIANT,
    }
}

/// Parse-free entry point used by the binary.
pub fn main_with(cli: Cli) -> ExitCode {
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Generate(a) => cmd_generate(a, cli.seed),
        Command::Landscape(a) => cmd_landscape(a),
        Command::Band(a) => cmd_band(a, cli.seed),
        Command::Classify(a) => cmd_classify(a, cli.seed),
        Command::Rank(a) => cmd_rank(a),
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Expand directories into their files with the given extension, sorted.
fn expand_inputs(inputs: &[PathBuf], ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == ext))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput(format!("no .{ext} input files found")));
    }
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let name = format!("{}{suffix}", stem(path));
    path.with_file_name(name)
}

pub fn cmd_generate(a: &GenerateArgs, seed: u64) -> Result<()> {
    if a.n_points == 0 {
        return Err(Error::InvalidParameter("--N must be at least 1".into()));
    }
    if a.samples == 0 {
        return Err(Error::InvalidParameter("--samples must be at least 1".into()));
    }
    let tag = format!("generate/{}", a.shape.name());
    let clouds = (0..a.samples)
        .into_par_iter()
        .map(|i| {
            let base = derive_seed(seed, &tag, i as u64);
            let shape_seed = derive_seed(base, "shape", 0);
            let clean = match a.shape {
                Shape::Sphere => pointcloud::sample_sphere(a.n_points, a.major, shape_seed)?,
                Shape::Torus => pointcloud::sample_torus(a.n_points, a.major, a.minor, shape_seed)?,
                Shape::Klein => pointcloud::sample_klein_bottle(a.n_points, shape_seed)?,
            };
            let noisy = pointcloud::add_gaussian_noise(&clean, a.sigma, derive_seed(base, "gauss", 0))?;
            let mut out = pointcloud::add_salt_pepper_noise(
                &noisy,
                a.salt_fraction,
                a.max_disp,
                derive_seed(base, "salt", 0),
            )?;
            out.seed = base;
            Ok(out)
        })
        .collect::<Result<Vec<PointCloud>>>()?;
    fs::create_dir_all(&a.out)?;
    for (i, pc) in clouds.iter().enumerate() {
        let path = a.out.join(format!("{}_{i:04}.csv", a.shape.name()));
        let mut w = create(&path)?;
        pointcloud::write_csv(&mut w, pc, None)?;
        w.flush()?;
    }
    println!("wrote {} {} clouds of {} points to {}", a.samples, a.shape.name(), a.n_points, a.out.display());
    Ok(())
}

fn density_for(pc: &PointCloud, given: Option<Vec<f64>>, bandwidth: Option<f64>) -> Result<DensityEstimate> {
    match (given, bandwidth) {
        (Some(values), None) => Ok(DensityEstimate { values, bandwidth: f64::NAN }),
        (_, Some(h)) => pointcloud::gaussian_kde(pc, h),
        (None, None) => pointcloud::gaussian_kde(pc, pointcloud::scott_bandwidth(pc)),
    }
}

fn check_filtration(f: &FiltrationArgs) -> Result<()> {
    if !(f.t > 0.0 && f.t.is_finite()) {
        return Err(Error::InvalidParameter(format!("--T must be > 0 (got {})", f.t)));
    }
    if f.max_dim < 1 {
        return Err(Error::InvalidParameter("--max-dim must be at least 1".into()));
    }
    if let Some(s) = f.max_scale {
        if s.is_nan() || s <= 0.0 {
            return Err(Error::InvalidParameter(format!("--max-scale must be > 0 (got {s})")));
        }
    }
    if let Some(h) = f.bandwidth {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("--bandwidth must be > 0 (got {h})")));
        }
    }
    Ok(())
}

fn max_scale_for(pc: &PointCloud, f: &FiltrationArgs) -> f64 {
    f.max_scale.unwrap_or_else(|| {
        let d = pc.diameter();
        if d > 0.0 {
            d
        } else {
            1.0
        }
    })
}

/// Read a cloud and build its normalized Rips x codensity bifiltration.
pub fn cloud_bifiltration(path: &Path, f: &FiltrationArgs) -> Result<Bifiltration> {
    let (pc, dens) = pointcloud::read_csv(open(path)?)?;
    let density = density_for(&pc, dens, f.bandwidth)?;
    let bif = bifiltration::build_rips_codensity(&pc, &density, max_scale_for(&pc, f), f.max_dim)?;
    bifiltration::normalize(&bif, f.t)
}

fn landscape_of(path: &Path, a: &LandscapeArgs, grid: &Grid) -> Result<(LandscapeGrid, Option<Bifiltration>)> {
    match a.mode {
        Mode::Mph => {
            let bif = cloud_bifiltration(path, &a.filtration)?;
            let l = landscape::compute_landscape(&bif, a.degree, a.k, grid)?;
            Ok((l, a.save_bifiltration.then_some(bif)))
        }
        Mode::Sph => {
            let (pc, _) = pointcloud::read_csv(open(path)?)?;
            let l = landscape::compute_landscape_1p(
                &pc,
                a.degree,
                a.k,
                grid,
                max_scale_for(&pc, &a.filtration),
                a.filtration.max_dim,
            )?;
            Ok((l, None))
        }
    }
}

pub fn cmd_landscape(a: &LandscapeArgs) -> Result<()> {
    check_filtration(&a.filtration)?;
    if a.k == 0 {
        return Err(Error::InvalidParameter("--k must be at least 1".into()));
    }
    let d = match a.mode {
        Mode::Mph => 2,
        Mode::Sph => 1,
    };
    let grid = Grid::new(a.filtration.t, a.m, d)?;
    let files = expand_inputs(&a.inputs, "csv")?;
    let results = files
        .par_iter()
        .map(|p| landscape_of(p, a, &grid))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&a.out)?;
    for (path, (l, bif)) in files.iter().zip(&results) {
        let problems = l.invariant_violations();
        if let Some(first) = problems.first() {
            return Err(Error::Invariant(format!("{}: {first}", path.display())));
        }
        let name = stem(path);
        let mut w = create(&a.out.join(format!("{name}.json")))?;
        landscape::write_json(&mut w, l)?;
        w.flush()?;
        if a.csv {
            let mut w = create(&a.out.join(format!("{name}.csv")))?;
            landscape::write_csv(&mut w, l)?;
            w.flush()?;
        }
        if let Some(bif) = bif {
            let mut w = create(&a.out.join(format!("{name}.bif")))?;
            bifiltration::write_text(&mut w, bif)?;
            w.flush()?;
        }
    }
    println!("wrote {} landscape grids to {}", results.len(), a.out.display());
    Ok(())
}

fn check_bootstrap(b: &BootstrapArgs) -> Result<()> {
    if !(b.alpha > 0.0 && b.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("--alpha must lie in (0, 1) (got {})", b.alpha)));
    }
    if b.replicates == 0 {
        return Err(Error::InvalidParameter("--B must be at least 1".into()));
    }
    Ok(())
}

fn read_landscapes(inputs: &[PathBuf]) -> Result<Vec<LandscapeGrid>> {
    expand_inputs(inputs, "json")?
        .iter()
        .map(|p| landscape::read_json(open(p)?))
        .collect()
}

pub fn cmd_band(a: &BandArgs, seed: u64) -> Result<()> {
    check_bootstrap(&a.bootstrap)?;
    let ls = read_landscapes(&a.inputs)?;
    let cfg = a.bootstrap.config(seed);
    let theta = bands::bootstrap_replicates(&ls, &cfg)?;
    let band = bands::band_from_replicates(&ls, &theta, &cfg)?;
    let mut w = create(&a.out)?;
    bands::write_json(&mut w, &band)?;
    w.flush()?;
    let mut w = create(&sibling(&a.out, ".csv"))?;
    bands::write_csv(&mut w, &band)?;
    w.flush()?;
    if let Some(path) = &a.dump_theta {
        let mut w = create(path)?;
        for t in &theta {
            writeln!(w, "{t}")?;
        }
        w.flush()?;
    }
    println!(
        "n = {}, {} bootstrap, B = {}, alpha = {}: z_tilde = {}, half-width = {}",
        band.n,
        band.method,
        band.replicates,
        band.alpha,
        band.z_tilde,
        band.half_width()
    );
    Ok(())
}

pub fn cmd_classify(a: &ClassifyArgs, seed: u64) -> Result<()> {
    check_bootstrap(&a.bootstrap)?;
    if a.folds < 2 {
        return Err(Error::InvalidParameter(format!("--folds must be at least 2 (got {})", a.folds)));
    }
    let samples = a
        .classes
        .iter()
        .map(|dir| {
            let label = dir
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string());
            Ok(ClassSamples::new(label, read_landscapes(std::slice::from_ref(dir))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = classify::cross_validate(&samples, a.folds, &a.bootstrap.config(seed))?;
    let mut w = create(&a.out)?;
    classify::write_report_json(&mut w, &report)?;
    w.flush()?;
    let mut w = create(&sibling(&a.out, "_confusion.csv"))?;
    classify::write_confusion_csv(&mut w, &report)?;
    w.flush()?;
    println!("accuracy {} over {} folds", report.summary(), a.folds);
    Ok(())
}

pub fn cmd_rank(a: &RankArgs) -> Result<()> {
    check_filtration(&a.filtration)?;
    let text = fs::read_to_string(&a.input)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", a.input.display()))))?;
    let bif = if text.starts_with("T=") {
        bifiltration::read_text(text.as_bytes())?
    } else {
        cloud_bifiltration(&a.input, &a.filtration)?
    };
    let rank = landscape::rank_invariant(&bif, a.degree, a.x, a.y)?;
    println!("{rank}");
    Ok(())
}
