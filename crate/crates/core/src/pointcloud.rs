//! Synthetic point clouds and Gaussian kernel density estimates.
//!
//! Three shapes are supported: a round sphere, a ring torus and the
//! figure-8 immersion of the Klein bottle. Torus and Klein bottle angles are
//! drawn uniformly, so the induced surface measure is not area-uniform.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid_param, Error, Result};
use crate::rng;

/// Radius parameter of the figure-8 Klein bottle immersion.
pub const KLEIN_A: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    /// Seed the cloud was generated from (provenance only).
    pub seed: u64,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>, seed: u64) -> Result<Self> {
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("point cloud has a non-finite coordinate".into()));
        }
        Ok(Self { points, seed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest pairwise Euclidean distance (0 for fewer than two points).
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.max(dist(p, q));
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

pub(crate) fn dist2(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    dx * dx + dy * dy + dz * dz
}

pub(crate) fn dist(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    dist2(p, q).sqrt()
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return invalid_param("sample size n must be at least 1");
    }
    Ok(())
}

fn standard_normal3<R: Rng>(rng: &mut R) -> [f64; 3] {
    [
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    ]
}

/// Uniform sample on the sphere of radius `radius` centred at the origin.
pub fn sample_sphere(n: usize, radius: f64, seed: u64) -> Result<PointCloud> {
    check_count(n)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return invalid_param(format!("sphere radius R must be > 0 (got {radius})"));
    }
    let mut rng = rng::from_seed(seed);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let g = standard_normal3(&mut rng);
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if norm < 1e-12 {
            continue;
        }
        points.push([radius * g[0] / norm, radius * g[1] / norm, radius * g[2] / norm]);
    }
    PointCloud::new(points, seed)
}

/// Point of the ring torus at tube angle `theta` and ring angle `phi`.
pub fn torus_point(major: f64, minor: f64, theta: f64, phi: f64) -> [f64; 3] {
    let ring = major + minor * theta.cos();
    [ring * phi.cos(), ring * phi.sin(), minor * theta.sin()]
}

pub fn sample_torus(n: usize, major: f64, minor: f64, seed: u64) -> Result<PointCloud> {
    check_count(n)?;
    if !(minor > 0.0 && major.is_finite() && minor < major) {
        return invalid_param(format!(
            "torus radii must satisfy 0 < r < R (got R = {major}, r = {minor})"
        ));
    }
    let mut rng = rng::from_seed(seed);
    let points = (0..n)
        .map(|_| {
            let theta = rng.random::<f64>() * 2.0 * PI;
            let phi = rng.random::<f64>() * 2.0 * PI;
            torus_point(major, minor, theta, phi)
        })
        .collect();
    PointCloud::new(points, seed)
}

/// Figure-8 immersion of the Klein bottle with `a = KLEIN_A`.
pub fn klein_point(u: f64, v: f64) -> [f64; 3] {
    let (half_s, half_c) = (u / 2.0).sin_cos();
    let factor = KLEIN_A + half_c * v.sin() - half_s * (2.0 * v).sin();
    [
        factor * u.cos(),
        factor * u.sin(),
        half_s * v.sin() + half_c * (2.0 * v).sin(),
    ]
}

pub fn sample_klein_bottle(n: usize, seed: u64) -> Result<PointCloud> {
    check_count(n)?;
    let mut rng = rng::from_seed(seed);
    let points = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * 2.0 * PI;
            let v = rng.random::<f64>() * 2.0 * PI;
            klein_point(u, v)
        })
        .collect();
    PointCloud::new(points, seed)
}

/// Perturb every coordinate by independent `N(0, sigma^2)` noise.
pub fn add_gaussian_noise(pc: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid_param(format!("noise sigma must be >= 0 (got {sigma})"));
    }
    if sigma == 0.0 {
        return Ok(pc.clone());
    }
    let mut rng = rng::from_seed(seed);
    let points = pc
        .points
        .iter()
        .map(|p| {
            let g = standard_normal3(&mut rng);
            [p[0] + sigma * g[0], p[1] + sigma * g[1], p[2] + sigma * g[2]]
        })
        .collect();
    PointCloud::new(points, pc.seed)
}

/// Number of points displaced by salt-and-pepper noise: `round(fraction * n)`,
/// rounding halves up.
pub fn salt_pepper_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

/// Displace `round(fraction * n)` distinct points by vectors drawn uniformly
/// from the Euclidean ball of radius `max_disp`.
pub fn add_salt_pepper_noise(
    pc: &PointCloud,
    fraction: f64,
    max_disp: f64,
    seed: u64,
) -> Result<PointCloud> {
    if !(0.0..=1.0).contains(&fraction) {
        return invalid_param(format!("salt-and-pepper fraction must lie in [0, 1] (got {fraction})"));
    }
    if !(max_disp >= 0.0 && max_disp.is_finite()) {
        return invalid_param(format!("max displacement must be >= 0 (got {max_disp})"));
    }
    let n = pc.len();
    let count = salt_pepper_count(fraction, n).min(n);
    let mut out = pc.clone();
    if count == 0 || max_disp == 0.0 {
        return Ok(out);
    }
    let mut rng = rng::from_seed(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        // rejection sampling in the cube [-1, 1]^3
        let d = loop {
            let c: [f64; 3] = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            if c[0] * c[0] + c[1] * c[1] + c[2] * c[2] <= 1.0 {
                break c;
            }
        };
        let p = &mut out.points[i];
        for (coord, delta) in p.iter_mut().zip(d) {
            *coord += max_disp * delta;
        }
    }
    Ok(out)
}

/// Scott's rule for a 3-d Gaussian kernel: `h = n^(-1/7) * sigma`, where
/// `sigma` is the root mean of the per-axis sample variances. Falls back
/// to 1 for clouds with fewer than two distinct points.
pub fn scott_bandwidth(pc: &PointCloud) -> f64 {
    let n = pc.len();
    if n < 2 {
        return 1.0;
    }
    let nf = n as f64;
    let mut var_sum = 0.0;
    for axis in 0..3 {
        let mean = pc.points.iter().map(|p| p[axis]).sum::<f64>() / nf;
        let ss: f64 = pc.points.iter().map(|p| (p[axis] - mean).powi(2)).sum();
        var_sum += ss / (nf - 1.0);
    }
    let sigma = (var_sum / 3.0).sqrt();
    if sigma > 0.0 {
        nf.powf(-1.0 / 7.0) * sigma
    } else {
        1.0
    }
}

/// Gaussian KDE evaluated at the cloud's own points.
pub fn gaussian_kde(pc: &PointCloud, bandwidth: f64) -> Result<DensityEstimate> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return invalid_param(format!("KDE bandwidth must be > 0 (got {bandwidth})"));
    }
    if pc.is_empty() {
        return Err(Error::InvalidInput("KDE needs a nonempty point cloud".into()));
    }
    let n = pc.len() as f64;
    let h2 = bandwidth * bandwidth;
    let norm = (2.0 * PI * h2).powf(-1.5) / n;
    let values = pc
        .points
        .par_iter()
        .map(|p| {
            let s: f64 = pc
                .points
                .iter()
                .map(|q| (-dist2(p, q) / (2.0 * h2)).exp())
                .sum();
            norm * s
        })
        .collect();
    Ok(DensityEstimate { values, bandwidth })
}

/// Write `x,y,z[,density]` CSV with 17 significant digits per value.
pub fn write_csv<W: Write>(mut w: W, pc: &PointCloud, density: Option<&[f64]>) -> Result<()> {
    if let Some(d) = density {
        if d.len() != pc.len() {
            return Err(Error::InvalidInput(format!(
                "density has {} values for {} points",
                d.len(),
                pc.len()
            )));
        }
    }
    let mut buf = String::new();
    buf.push_str(if density.is_some() { "x,y,z,density\n" } else { "x,y,z\n" });
    for (i, p) in pc.points.iter().enumerate() {
        write!(buf, "{:.16e},{:.16e},{:.16e}", p[0], p[1], p[2]).unwrap();
        if let Some(d) = density {
            write!(buf, ",{:.16e}", d[i]).unwrap();
        }
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

/// Read a cloud written by [`write_csv`]. The density column is optional.
pub fn read_csv<R: BufRead>(r: R) -> Result<(PointCloud, Option<Vec<f64>>)> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::Parse("empty point-cloud file".into())),
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let with_density = match cols.as_slice() {
        ["x", "y", "z"] => false,
        ["x", "y", "z", "density"] => true,
        _ => return Err(Error::Parse(format!("unexpected point-cloud header '{}'", header.trim()))),
    };
    let width = if with_density { 4 } else { 3 };
    let mut points = Vec::new();
    let mut density = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))?;
        if vals.len() != width {
            return Err(Error::Parse(format!(
                "row {}: expected {width} columns, found {}",
                lineno + 2,
                vals.len()
            )));
        }
        points.push([vals[0], vals[1], vals[2]]);
        if with_density {
            density.push(vals[3]);
        }
    }
    if points.is_empty() {
        return Err(Error::Parse("point-cloud file has no rows".into()));
    }
    let pc = PointCloud::new(points, 0)?;
    Ok((pc, with_density.then_some(density)))
}
