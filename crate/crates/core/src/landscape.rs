//! Multiparameter persistence landscapes on regular grids.
//!
//! For `x` in the box `[0, T]^2`, `lambda(k, x)` is the largest `eps` such
//! that at least `k` classes survive from `x - eps*(1,1)` to `x + eps*(1,1)`.
//! Smaller perturbations `h <= eps*(1,1)` only give larger ranks, so the
//! diagonal is the binding direction and the landscape at every node of one
//! diagonal line comes from a single barcode of that line.
//!
//! The module is treated as zero outside the box, so values never exceed
//! the distance to the box boundary, and in particular `T/2`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifiltration::{normalize_scale, rips_simplices, Bifiltration, Bigrade};
use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::persistence::{kth_tent, reduce, reduce_columns, slice, slice_columns, FilteredComplex, SliceLine};
use crate::pointcloud::PointCloud;

/// Regular grid `{ i T / (m - 1) }^d` over `[0, T]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "T")]
    pub t: f64,
    pub m: usize,
    pub d: usize,
}

impl Grid {
    pub fn new(t: f64, m: usize, d: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return invalid_param(format!("grid bound T must be > 0 (got {t})"));
        }
        if m < 2 {
            return invalid_param(format!("grid resolution m must be >= 2 (got {m})"));
        }
        if d != 1 && d != 2 {
            return invalid_param(format!("grid dimension d must be 1 or 2 (got {d})"));
        }
        Ok(Self { t, m, d })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.t * (i as f64 / (self.m - 1) as f64)
    }

    pub fn spacing(&self) -> f64 {
        self.t / (self.m - 1) as f64
    }

    /// Number of nodes, `m^d`.
    pub fn len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of the node with row-major index `idx`.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        match self.d {
            1 => vec![self.node(idx)],
            _ => vec![self.node(idx / self.m), self.node(idx % self.m)],
        }
    }

    /// l-infinity distance from a node to the boundary of the box.
    fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter().fold(f64::INFINITY, |acc, &v| acc.min(v).min(self.t - v))
    }
}

/// Landscape values sampled on a grid. For `d = 2` the value at
/// `(node(i), node(j))` is stored at `i * m + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    #[serde(flatten)]
    pub grid: Grid,
    pub k: usize,
    pub degree: usize,
    pub values: Vec<f64>,
}

impl LandscapeGrid {
    pub fn zeros(grid: Grid, k: usize, degree: usize) -> Self {
        Self {
            grid,
            k,
            degree,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn check_compatible(&self, other: &LandscapeGrid) -> Result<()> {
        if self.grid != other.grid || self.k != other.k || self.degree != other.degree {
            return invalid_input(format!(
                "incompatible landscape grids: (T={}, m={}, d={}, k={}, degree={}) vs (T={}, m={}, d={}, k={}, degree={})",
                self.grid.t, self.grid.m, self.grid.d, self.k, self.degree,
                other.grid.t, other.grid.m, other.grid.d, other.k, other.degree
            ));
        }
        if self.values.len() != other.values.len() || self.values.len() != self.grid.len() {
            return invalid_input("landscape value array does not match its grid");
        }
        Ok(())
    }

    /// Envelope `[0, T/2]` and discrete 1-Lipschitz violations, as messages.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.values.len() != self.grid.len() {
            out.push(format!(
                "grid has {} values, expected {}",
                self.values.len(),
                self.grid.len()
            ));
            return out;
        }
        let half = self.grid.t / 2.0;
        for (i, &v) in self.values.iter().enumerate() {
            if !(0.0..=half).contains(&v) {
                out.push(format!("value {v} at node {i} outside [0, {half}]"));
            }
        }
        let tol = self.grid.spacing() + 1e-9;
        let m = self.grid.m;
        let mut check = |a: usize, b: usize| {
            let diff = (self.values[a] - self.values[b]).abs();
            if diff > tol {
                out.push(format!("nodes {a} and {b} differ by {diff} > {tol}"));
            }
        };
        if self.grid.d == 1 {
            for i in 1..m {
                check(i - 1, i);
            }
        } else {
            for i in 0..m {
                for j in 0..m {
                    let a = i * m + j;
                    if i + 1 < m {
                        check(a, a + m);
                    }
                    if j + 1 < m {
                        check(a, a + 1);
                    }
                    if i + 1 < m && j + 1 < m {
                        check(a, a + m + 1);
                    }
                    if i + 1 < m && j > 0 {
                        check(a, a + m - 1);
                    }
                }
            }
        }
        out
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn check_level(k: usize) -> Result<()> {
    if k == 0 {
        return invalid_param("landscape level k must be >= 1");
    }
    Ok(())
}

/// Evaluate `lambda(k, .)` of homology `degree` on a 2-d grid.
///
/// One diagonal slice is reduced per grid offset `x2 - x1`; the
/// bifiltration must already lie in `[0, T]^2` (see
/// [`normalize`](crate::bifiltration::normalize)).
pub fn compute_landscape(bif: &Bifiltration, degree: usize, k: usize, grid: &Grid) -> Result<LandscapeGrid> {
    check_level(k)?;
    if grid.d != 2 {
        return invalid_param("compute_landscape needs a 2-d grid");
    }
    let t = grid.t;
    if let Some(s) = bif.simplices().iter().find(|s| {
        !((0.0..=t).contains(&s.grade.scale) && (0.0..=t).contains(&s.grade.codensity))
    }) {
        return invalid_input(format!(
            "simplex {:?} graded {} lies outside [0, {t}]^2; normalize first",
            s.vertices, s.grade
        ));
    }
    let m = grid.m as isize;
    let has_cells = bif.simplices().iter().any(|s| s.dim() == degree);

    let diagonals: Vec<(isize, Vec<f64>)> = (-(m - 1)..m)
        .into_par_iter()
        .map(|j| {
            let lo = (-j).max(0);
            let hi = (m - 1).min(m - 1 - j);
            let nodes = (lo..=hi).map(|i1| (i1 as usize, (i1 + j) as usize));
            if !has_cells {
                return Ok((j, vec![0.0; (hi - lo + 1) as usize]));
            }
            let offset = if j >= 0 {
                grid.node(j as usize)
            } else {
                -grid.node((-j) as usize)
            };
            // the line (s, s + offset) leaves the box at s = T - max(offset, 0);
            // later simplices only move deaths past it, which the box clamp hides
            let exit = t - offset.max(0.0);
            let cols = slice_columns(bif, &SliceLine::Diagonal { offset }, degree + 1, exit)?;
            let mut bc = reduce_columns(&cols);
            bc.clamp_infinite(exit);
            let bars = bc.degree(degree);
            let vals = nodes
                .map(|(i1, i2)| {
                    let x = [grid.node(i1), grid.node(i2)];
                    kth_tent(bars, k, x[0]).min(grid.boundary_distance(&x))
                })
                .collect();
            Ok((j, vals))
        })
        .collect::<Result<_>>()?;

    let mut out = LandscapeGrid::zeros(*grid, k, degree);
    for (j, vals) in diagonals {
        let lo = (-j).max(0);
        for (step, v) in vals.into_iter().enumerate() {
            let i1 = lo + step as isize;
            let i2 = i1 + j;
            out.values[i1 as usize * grid.m + i2 as usize] = v;
        }
    }
    Ok(out)
}

/// Rank of the map `H_degree(K_x) -> H_degree(K_y)`; 0 unless `x <= y`.
pub fn rank_invariant(bif: &Bifiltration, degree: usize, x: Bigrade, y: Bigrade) -> Result<usize> {
    if !x.leq(&y) {
        return Ok(0);
    }
    let (line, tx, ty) = if x == y {
        (SliceLine::Diagonal { offset: x.codensity - x.scale }, x.scale, x.scale)
    } else {
        (SliceLine::segment(x, y)?, 0.0, 1.0)
    };
    let fc = slice(bif, &line)?;
    let bc = reduce(&fc)?;
    Ok(bc
        .degree(degree)
        .iter()
        .filter(|b| b.birth <= tx && b.death > ty)
        .count())
}

/// Single-parameter Rips landscape on a 1-d grid, density ignored.
///
/// The scale axis is rescaled onto `[0, T]` and infinite bars are clamped
/// at `T`.
pub fn compute_landscape_1p(
    pc: &PointCloud,
    degree: usize,
    k: usize,
    grid: &Grid,
    max_scale: f64,
    max_dim: usize,
) -> Result<LandscapeGrid> {
    check_level(k)?;
    if grid.d != 1 {
        return invalid_param("compute_landscape_1p needs a 1-d grid");
    }
    if max_scale.is_nan() || max_scale <= 0.0 {
        return invalid_param(format!("max_scale must be > 0 (got {max_scale})"));
    }
    if max_dim < 1 {
        return invalid_param("max_dim must be at least 1");
    }
    let t = grid.t;
    let mut rips = rips_simplices(&pc.points, max_scale, max_dim);
    normalize_scale(&mut rips, t);
    let fc = FilteredComplex::new(rips)?;
    let mut bc = reduce(&fc)?;
    bc.clamp_infinite(t);
    let bars = bc.degree(degree);
    let mut out = LandscapeGrid::zeros(*grid, k, degree);
    for (i, v) in out.values.iter_mut().enumerate() {
        let x = grid.node(i);
        *v = kth_tent(bars, k, x).min(grid.boundary_distance(&[x]));
    }
    Ok(out)
}

/// Pointwise mean `first + sum(v_i - first) / n`, which reproduces a
/// constant sample exactly.
pub(crate) fn pointwise_mean<'a>(rows: impl ExactSizeIterator<Item = &'a [f64]> + Clone) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut it = rows.clone();
    let Some(first) = it.next() else {
        return Vec::new();
    };
    let mut acc = vec![0.0; first.len()];
    for row in rows {
        for ((a, &v), &f) in acc.iter_mut().zip(row).zip(first) {
            *a += v - f;
        }
    }
    first.iter().zip(acc).map(|(&f, a)| f + a / n).collect()
}

pub(crate) fn check_all_compatible(ls: &[LandscapeGrid]) -> Result<()> {
    let Some(first) = ls.first() else {
        return invalid_input("need at least one landscape");
    };
    for l in ls {
        first.check_compatible(l)?;
    }
    Ok(())
}

pub fn mean_landscape(ls: &[LandscapeGrid]) -> Result<LandscapeGrid> {
    check_all_compatible(ls)?;
    let first = &ls[0];
    Ok(LandscapeGrid {
        grid: first.grid,
        k: first.k,
        degree: first.degree,
        values: pointwise_mean(ls.iter().map(|l| l.values.as_slice())),
    })
}

/// Grid approximation of `sup_x |a(x) - b(x)|`.
pub fn sup_abs_diff(a: &LandscapeGrid, b: &LandscapeGrid) -> Result<f64> {
    a.check_compatible(b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

pub fn write_json<W: Write>(mut w: W, l: &LandscapeGrid) -> Result<()> {
    serde_json::to_writer(&mut w, l)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: BufRead>(r: R) -> Result<LandscapeGrid> {
    let l: LandscapeGrid = serde_json::from_reader(r)?;
    Grid::new(l.grid.t, l.grid.m, l.grid.d)?;
    if l.values.len() != l.grid.len() {
        return Err(Error::Parse(format!(
            "landscape document has {} values for a grid of {} nodes",
            l.values.len(),
            l.grid.len()
        )));
    }
    Ok(l)
}

/// Plot-friendly CSV: `x1,x2,value` (or `x1,value` for 1-d grids).
pub fn write_csv<W: Write>(mut w: W, l: &LandscapeGrid) -> Result<()> {
    let mut buf = String::from(if l.grid.d == 1 { "x1,value\n" } else { "x1,x2,value\n" });
    for (idx, v) in l.values.iter().enumerate() {
        for c in l.grid.coords(idx) {
            write!(buf, "{c},").unwrap();
        }
        writeln!(buf, "{v}").unwrap();
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}
