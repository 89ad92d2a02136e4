//! Bootstrap confidence bands for the mean landscape.
//!
//! Both variants estimate the quantile `Z(alpha)` of the sup-norm deviation
//! `sup_x |G_n(x)|` on the grid and report the band
//! `mean +- Z(alpha) / sqrt(n)`:
//!
//! * standard: resample `floor(n/2)` landscapes with replacement and take
//!   `sup |sqrt(n) (resample mean - mean)|`;
//! * multiplier: weight the centred landscapes by i.i.d. `N(0, 1)`
//!   multipliers and take `sup |sum xi_i (l_i - mean)| / sqrt(n)`.

use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::landscape::{check_all_compatible, mean_landscape, pointwise_mean, Grid, LandscapeGrid};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Standard,
    Multiplier,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Standard => "standard",
            Method::Multiplier => "multiplier",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "multiplier" => Ok(Method::Multiplier),
            other => invalid_param(format!("unknown bootstrap method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandConfig {
    pub method: Method,
    /// Number of bootstrap replicates `B`.
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Scale standard replicates by `sqrt(floor(n/2))` instead of `sqrt(n)`.
    pub scale_half: bool,
    /// Clamp the lower band at 0.
    pub clamp_zero: bool,
}

impl BandConfig {
    pub fn new(method: Method, replicates: usize, alpha: f64, seed: u64) -> Self {
        Self {
            method,
            replicates,
            alpha,
            seed,
            scale_half: false,
            clamp_zero: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return invalid_param("number of bootstrap replicates B must be >= 1");
        }
        check_alpha(self.alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid_param(format!("alpha must lie in (0, 1) (got {alpha})"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub mean: LandscapeGrid,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub z_tilde: f64,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub method: Method,
    pub seed: u64,
    pub n: usize,
}

impl ConfidenceBand {
    pub fn half_width(&self) -> f64 {
        self.z_tilde / (self.n as f64).sqrt()
    }

    pub fn grid(&self) -> &Grid {
        &self.mean.grid
    }
}

/// Smallest `z` such that at most `floor(alpha * B)` replicates exceed it.
pub fn empirical_quantile(theta: &[f64], alpha: f64) -> Result<f64> {
    if theta.is_empty() {
        return invalid_param("empirical quantile of an empty sample");
    }
    check_alpha(alpha)?;
    let mut sorted = theta.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let idx = ((alpha * theta.len() as f64).floor() as usize).min(theta.len() - 1);
    Ok(sorted[idx])
}

/// `sup_x |scale * (mean of ls[indices] - mean)|`.
pub fn standard_statistic(ls: &[LandscapeGrid], mean: &[f64], indices: &[usize], scale: f64) -> f64 {
    let resampled = pointwise_mean(indices.iter().map(|&i| ls[i].values.as_slice()));
    resampled
        .iter()
        .zip(mean)
        .map(|(r, m)| (scale * (r - m)).abs())
        .fold(0.0, f64::max)
}

/// `sup_x |sum_i xi_i (l_i(x) - mean(x))| / sqrt(n)`.
pub fn multiplier_statistic(ls: &[LandscapeGrid], mean: &[f64], xi: &[f64]) -> f64 {
    let mut acc = vec![0.0; mean.len()];
    for (l, &w) in ls.iter().zip(xi) {
        for ((a, v), m) in acc.iter_mut().zip(&l.values).zip(mean) {
            *a += w * (v - m);
        }
    }
    let root_n = (ls.len() as f64).sqrt();
    acc.iter().map(|a| a.abs() / root_n).fold(0.0, f64::max)
}

fn check_sample(ls: &[LandscapeGrid]) -> Result<()> {
    if ls.len() < 2 {
        return invalid_param(format!("bootstrap needs n >= 2 landscapes (got {})", ls.len()));
    }
    check_all_compatible(ls)
}

/// The `B` bootstrap replicates `theta*_b`. Replicate `b` draws from its own
/// stream `(seed, b)`.
pub fn bootstrap_replicates(ls: &[LandscapeGrid], cfg: &BandConfig) -> Result<Vec<f64>> {
    check_sample(ls)?;
    cfg.validate()?;
    let n = ls.len();
    let mean = mean_landscape(ls)?.values;
    let half = n / 2;
    let scale = if cfg.scale_half { (half as f64).sqrt() } else { (n as f64).sqrt() };
    let theta = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(cfg.seed, "bootstrap", b);
            match cfg.method {
                Method::Standard => {
                    let idx: Vec<usize> = (0..half).map(|_| rng.random_range(0..n)).collect();
                    standard_statistic(ls, &mean, &idx, scale)
                }
                Method::Multiplier => {
                    let xi: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    multiplier_statistic(ls, &mean, &xi)
                }
            }
        })
        .collect();
    Ok(theta)
}

/// Assemble the band from precomputed replicates.
pub fn band_from_replicates(ls: &[LandscapeGrid], theta: &[f64], cfg: &BandConfig) -> Result<ConfidenceBand> {
    check_sample(ls)?;
    cfg.validate()?;
    if theta.len() != cfg.replicates {
        return invalid_input(format!(
            "expected {} bootstrap replicates, got {}",
            cfg.replicates,
            theta.len()
        ));
    }
    let mean = mean_landscape(ls)?;
    let z_tilde = empirical_quantile(theta, cfg.alpha)?;
    let n = ls.len();
    let hw = z_tilde / (n as f64).sqrt();
    let lower = mean
        .values
        .iter()
        .map(|m| {
            let l = m - hw;
            if cfg.clamp_zero {
                l.max(0.0)
            } else {
                l
            }
        })
        .collect();
    let upper = mean.values.iter().map(|m| m + hw).collect();
    Ok(ConfidenceBand {
        mean,
        lower,
        upper,
        z_tilde,
        alpha: cfg.alpha,
        replicates: cfg.replicates,
        method: cfg.method,
        seed: cfg.seed,
        n,
    })
}

pub fn bootstrap_band(ls: &[LandscapeGrid], cfg: &BandConfig) -> Result<ConfidenceBand> {
    let theta = bootstrap_replicates(ls, cfg)?;
    band_from_replicates(ls, &theta, cfg)
}

/// `sqrt(n) (mean(ls) - mu)` at every node.
pub fn empirical_process(ls: &[LandscapeGrid], mu: &LandscapeGrid) -> Result<Vec<f64>> {
    let mean = mean_landscape(ls)?;
    mean.check_compatible(mu)?;
    let root_n = (ls.len() as f64).sqrt();
    Ok(mean.values.iter().zip(&mu.values).map(|(a, m)| root_n * (a - m)).collect())
}

/// Sample covariance of the landscape values at nodes `x` and `y`
/// (divisor `n`).
pub fn empirical_covariance(ls: &[LandscapeGrid], x: usize, y: usize) -> Result<f64> {
    if ls.len() < 2 {
        return invalid_param("covariance needs at least two landscapes");
    }
    check_all_compatible(ls)?;
    let len = ls[0].values.len();
    if x >= len || y >= len {
        return invalid_param(format!("node index out of range (grid has {len} nodes)"));
    }
    let n = ls.len() as f64;
    let first = (ls[0].values[x], ls[0].values[y]);
    let mx = first.0 + ls.iter().map(|l| l.values[x] - first.0).sum::<f64>() / n;
    let my = first.1 + ls.iter().map(|l| l.values[y] - first.1).sum::<f64>() / n;
    Ok(ls.iter().map(|l| (l.values[x] - mx) * (l.values[y] - my)).sum::<f64>() / n)
}

#[derive(Serialize, Deserialize)]
struct BandDoc {
    alpha: f64,
    #[serde(rename = "B")]
    replicates: usize,
    method: Method,
    n: usize,
    seed: u64,
    z_tilde: f64,
    #[serde(flatten)]
    grid: Grid,
    k: usize,
    degree: usize,
    mean: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

pub fn write_json<W: Write>(mut w: W, band: &ConfidenceBand) -> Result<()> {
    let doc = BandDoc {
        alpha: band.alpha,
        replicates: band.replicates,
        method: band.method,
        n: band.n,
        seed: band.seed,
        z_tilde: band.z_tilde,
        grid: band.mean.grid,
        k: band.mean.k,
        degree: band.mean.degree,
        mean: band.mean.values.clone(),
        lower: band.lower.clone(),
        upper: band.upper.clone(),
    };
    serde_json::to_writer(&mut w, &doc)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: BufRead>(r: R) -> Result<ConfidenceBand> {
    let doc: BandDoc = serde_json::from_reader(r)?;
    let grid = Grid::new(doc.grid.t, doc.grid.m, doc.grid.d)?;
    let len = grid.len();
    if doc.mean.len() != len || doc.lower.len() != len || doc.upper.len() != len {
        return Err(Error::Parse("band arrays do not match the grid".into()));
    }
    Ok(ConfidenceBand {
        mean: LandscapeGrid {
            grid,
            k: doc.k,
            degree: doc.degree,
            values: doc.mean,
        },
        lower: doc.lower,
        upper: doc.upper,
        z_tilde: doc.z_tilde,
        alpha: doc.alpha,
        replicates: doc.replicates,
        method: doc.method,
        seed: doc.seed,
        n: doc.n,
    })
}

/// CSV `x1,x2,mean,lower,upper` (`x1,mean,lower,upper` for 1-d grids).
pub fn write_csv<W: Write>(mut w: W, band: &ConfidenceBand) -> Result<()> {
    let grid = band.grid();
    let mut buf = String::from(if grid.d == 1 {
        "x1,mean,lower,upper\n"
    } else {
        "x1,x2,mean,lower,upper\n"
    });
    for idx in 0..grid.len() {
        for c in grid.coords(idx) {
            write!(buf, "{c},").unwrap();
        }
        writeln!(buf, "{},{},{}", band.mean.values[idx], band.lower[idx], band.upper[idx]).unwrap();
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}
