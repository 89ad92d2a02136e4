//! Single-parameter persistence over F2.
//!
//! A [`SliceLine`] restricts a bifiltration to a one-parameter filtration,
//! which [`reduce`] turns into a [`Barcode`] with the standard column
//! algorithm (with clearing).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bifiltration::{Bifiltration, Bigrade};
use crate::error::{invalid_input, invalid_param, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSimplex {
    pub vertices: Vec<u32>,
    pub entry_time: f64,
}

impl FilteredSimplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// A simplicial complex together with a filtration order.
#[derive(Debug, Clone)]
pub struct FilteredComplex {
    simplices: Vec<FilteredSimplex>,
    boundaries: Vec<Vec<usize>>,
}

impl FilteredComplex {
    /// Sort `(vertices, entry_time)` pairs into the canonical filtration
    /// order (entry time, then dimension, then vertex tuple) and index faces.
    pub fn new(entries: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        let mut simplices = canonical_simplices(entries)?;
        simplices.sort_by(|a, b| {
            a.entry_time
                .total_cmp(&b.entry_time)
                .then_with(|| a.vertices.len().cmp(&b.vertices.len()))
                .then_with(|| a.vertices.cmp(&b.vertices))
        });
        Self::index(simplices)
    }

    /// Keep the given order as the filtration order. The order is checked by
    /// [`reduce`], not here.
    pub fn from_ordered(entries: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        Self::index(canonical_simplices(entries)?)
    }

    fn index(simplices: Vec<FilteredSimplex>) -> Result<Self> {
        let pos: HashMap<&[u32], usize> = simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices.as_slice(), i))
            .collect();
        if pos.len() != simplices.len() {
            return invalid_input("filtered complex lists a simplex twice");
        }
        let mut boundaries = Vec::with_capacity(simplices.len());
        for s in &simplices {
            let mut col = Vec::new();
            if s.vertices.len() > 1 {
                for skip in 0..s.vertices.len() {
                    let mut face = s.vertices.clone();
                    face.remove(skip);
                    match pos.get(face.as_slice()) {
                        Some(&j) => col.push(j),
                        None => {
                            return invalid_input(format!(
                                "simplex {:?} is missing face {face:?}",
                                s.vertices
                            ))
                        }
                    }
                }
            }
            col.sort_unstable();
            boundaries.push(col);
        }
        drop(pos);
        Ok(Self { simplices, boundaries })
    }

    pub fn simplices(&self) -> &[FilteredSimplex] {
        &self.simplices
    }

    pub fn boundary(&self, i: usize) -> &[usize] {
        &self.boundaries[i]
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }
}

fn canonical_simplices(entries: Vec<(Vec<u32>, f64)>) -> Result<Vec<FilteredSimplex>> {
    entries
        .into_iter()
        .map(|(mut vertices, entry_time)| {
            if vertices.is_empty() {
                return invalid_input("simplex with no vertices");
            }
            if entry_time.is_nan() {
                return invalid_input("NaN entry time");
            }
            vertices.sort_unstable();
            if vertices.windows(2).any(|w| w[0] == w[1]) {
                return invalid_input(format!("simplex {vertices:?} repeats a vertex"));
            }
            Ok(FilteredSimplex { vertices, entry_time })
        })
        .collect()
}

/// A line in the parameter plane along which a bifiltration is restricted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceLine {
    /// `{(t, t + offset) : t in R}`.
    Diagonal { offset: f64 },
    /// `{from + t (to - from) : t in R}` with `from <= to`, `from != to`.
    Segment { from: Bigrade, to: Bigrade },
}

impl SliceLine {
    pub fn segment(from: Bigrade, to: Bigrade) -> Result<Self> {
        let line = SliceLine::Segment { from, to };
        line.check()?;
        Ok(line)
    }

    fn check(&self) -> Result<()> {
        match *self {
            SliceLine::Diagonal { offset } if !offset.is_finite() => {
                invalid_param("diagonal offset must be finite")
            }
            SliceLine::Segment { from, to } if !from.leq(&to) || from == to => invalid_param(
                format!("segment line needs from <= to and from != to (got {from} -> {to})"),
            ),
            _ => Ok(()),
        }
    }

    /// Least line parameter whose point dominates `g`; `+inf` if none does.
    pub fn entry_time(&self, g: &Bigrade) -> f64 {
        match *self {
            SliceLine::Diagonal { offset } => g.scale.max(g.codensity - offset),
            SliceLine::Segment { from, to } => {
                let axis = |x: f64, y: f64, v: f64| {
                    let dir = y - x;
                    if dir > 0.0 {
                        (v - x) / dir
                    } else if x >= v {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                };
                axis(from.scale, to.scale, g.scale).max(axis(from.codensity, to.codensity, g.codensity))
            }
        }
    }
}

/// Restrict a bifiltration to a line. Simplices the line never reaches are
/// dropped.
pub fn slice(bif: &Bifiltration, line: &SliceLine) -> Result<FilteredComplex> {
    let (order, times, rank) = slice_order(bif, line, usize::MAX, f64::INFINITY)?;
    let mut simplices = Vec::with_capacity(order.len());
    let mut boundaries = Vec::with_capacity(order.len());
    for &i in &order {
        let s = &bif.simplices()[i];
        simplices.push(FilteredSimplex {
            vertices: s.vertices.clone(),
            entry_time: times[i],
        });
        let mut col: Vec<usize> = bif.faces(i).iter().map(|&f| rank[f]).collect();
        col.sort_unstable();
        boundaries.push(col);
    }
    Ok(FilteredComplex { simplices, boundaries })
}

/// Returns the filtration order, every simplex's entry time and its
/// position in the order. Only simplices entering by `until` are kept.
fn slice_order(
    bif: &Bifiltration,
    line: &SliceLine,
    max_dim: usize,
    until: f64,
) -> Result<(Vec<usize>, Vec<f64>, Vec<usize>)> {
    line.check()?;
    if !bif.is_closed() {
        return invalid_input("cannot slice a bifiltration that is not closed under faces");
    }
    let times: Vec<f64> = bif.simplices().iter().map(|s| line.entry_time(&s.grade)).collect();
    let mut order: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] < f64::INFINITY && times[i] <= until && bif.simplices()[i].dim() <= max_dim)
        .collect();
    // bifiltration order is (dim, lex), so this realizes (time, dim, lex)
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    let mut rank = vec![usize::MAX; times.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    Ok((order, times, rank))
}

/// Flattened boundary matrix: column `j` is `faces[start[j]..start[j + 1]]`.
pub(crate) struct Columns {
    dims: Vec<usize>,
    times: Vec<f64>,
    start: Vec<usize>,
    faces: Vec<usize>,
}

impl Columns {
    fn len(&self) -> usize {
        self.dims.len()
    }

    fn column(&self, j: usize) -> &[usize] {
        &self.faces[self.start[j]..self.start[j + 1]]
    }
}

/// Like [`slice`] but without vertex lists, keeping simplices up to
/// `max_dim` that enter by `until`.
pub(crate) fn slice_columns(bif: &Bifiltration, line: &SliceLine, max_dim: usize, until: f64) -> Result<Columns> {
    let (order, times, rank) = slice_order(bif, line, max_dim, until)?;
    let mut cols = Columns {
        dims: Vec::with_capacity(order.len()),
        times: Vec::with_capacity(order.len()),
        start: Vec::with_capacity(order.len() + 1),
        faces: Vec::new(),
    };
    cols.start.push(0);
    for &i in &order {
        let from = cols.faces.len();
        cols.faces.extend(bif.faces(i).iter().map(|&f| rank[f]));
        cols.faces[from..].sort_unstable();
        cols.start.push(cols.faces.len());
        cols.dims.push(bif.simplices()[i].dim());
        cols.times.push(times[i]);
    }
    Ok(cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub birth: f64,
    pub death: f64,
}

impl Bar {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    /// Right-open lifetime: alive at `t` iff `birth <= t < death`.
    pub fn contains(&self, t: f64) -> bool {
        self.birth <= t && t < self.death
    }

    /// Tent function `max(0, min(t - birth, death - t))`.
    pub fn tent(&self, t: f64) -> f64 {
        (t - self.birth).min(self.death - t).max(0.0)
    }
}

/// Bars grouped by homology degree. Zero-length bars are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Barcode {
    bars: Vec<Vec<Bar>>,
}

impl Barcode {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, degree: usize, bar: Bar) {
        if bar.birth == bar.death {
            return;
        }
        if self.bars.len() <= degree {
            self.bars.resize_with(degree + 1, Vec::new);
        }
        self.bars[degree].push(bar);
    }

    pub fn degree(&self, degree: usize) -> &[Bar] {
        self.bars.get(degree).map_or(&[], Vec::as_slice)
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.bars.len().checked_sub(1)
    }

    /// Replace infinite deaths by `limit` (bars born at or after `limit`
    /// disappear).
    pub fn clamp_infinite(&mut self, limit: f64) {
        for bars in &mut self.bars {
            for b in bars.iter_mut() {
                if b.death == f64::INFINITY {
                    b.death = limit;
                }
            }
            bars.retain(|b| b.birth < b.death);
        }
    }

    /// Sort each degree by (birth, death) for order-insensitive comparison.
    pub fn sorted(mut self) -> Self {
        for bars in &mut self.bars {
            bars.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
        }
        while self.bars.last().is_some_and(Vec::is_empty) {
            self.bars.pop();
        }
        self
    }

    /// Number of bars of `degree` alive at `t`.
    pub fn count_alive(&self, degree: usize, t: f64) -> usize {
        self.degree(degree).iter().filter(|b| b.contains(t)).count()
    }
}

fn add_columns(target: &mut Vec<usize>, other: &[usize], scratch: &mut Vec<usize>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&target[i..]);
    scratch.extend_from_slice(&other[j..]);
    std::mem::swap(target, scratch);
}

/// Persistence barcode of a filtered complex.
pub fn reduce(fc: &FilteredComplex) -> Result<Barcode> {
    let mut cols = Columns {
        dims: Vec::with_capacity(fc.len()),
        times: Vec::with_capacity(fc.len()),
        start: vec![0],
        faces: Vec::new(),
    };
    for (j, s) in fc.simplices.iter().enumerate() {
        for &f in &fc.boundaries[j] {
            if f >= j || fc.simplices[f].entry_time > s.entry_time {
                return Err(Error::InvalidInput(format!(
                    "face {:?} does not precede simplex {:?} in the filtration",
                    fc.simplices[f].vertices, s.vertices
                )));
            }
        }
        cols.dims.push(s.dim());
        cols.times.push(s.entry_time);
        cols.faces.extend_from_slice(&fc.boundaries[j]);
        cols.start.push(cols.faces.len());
    }
    Ok(reduce_columns(&cols))
}

pub(crate) fn reduce_columns(cols: &Columns) -> Barcode {
    let n = cols.len();
    let max_dim = cols.dims.iter().copied().max().unwrap_or(0);
    let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); max_dim + 1];
    for (j, &d) in cols.dims.iter().enumerate() {
        by_dim[d].push(j);
    }

    const NONE: usize = usize::MAX;
    let mut pivot_owner = vec![NONE; n];
    let mut death_of = vec![NONE; n];
    let mut is_death = vec![false; n];
    let mut cleared = vec![false; n];
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut scratch = Vec::new();

    for dim in (1..=max_dim).rev() {
        for &j in &by_dim[dim] {
            if cleared[j] {
                continue;
            }
            let mut col = cols.column(j).to_vec();
            while let Some(&low) = col.last() {
                let owner = pivot_owner[low];
                if owner == NONE {
                    break;
                }
                add_columns(&mut col, &columns[owner], &mut scratch);
            }
            if let Some(&low) = col.last() {
                pivot_owner[low] = j;
                death_of[low] = j;
                is_death[j] = true;
                cleared[low] = true;
                columns[j] = col;
            }
        }
    }

    let mut barcode = Barcode::new();
    for i in 0..n {
        if is_death[i] {
            continue;
        }
        let death = match death_of[i] {
            NONE => f64::INFINITY,
            j => cols.times[j],
        };
        barcode.push(cols.dims[i], Bar::new(cols.times[i], death));
    }
    barcode
}

/// `k`-th largest tent value among `bars` at `t` (0 if fewer than `k`).
///
/// # Panics
///
/// Panics if `k == 0`.
pub fn kth_tent(bars: &[Bar], k: usize, t: f64) -> f64 {
    assert!(k >= 1, "landscape level k must be at least 1");
    if bars.len() < k {
        return 0.0;
    }
    if k == 1 {
        return bars.iter().map(|b| b.tent(t)).fold(0.0, f64::max);
    }
    let mut vals: Vec<f64> = bars.iter().map(|b| b.tent(t)).collect();
    let (_, kth, _) = vals.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    *kth
}

/// Single-parameter landscape `lambda_k(t)` of one homology degree.
///
/// Infinite deaths are used as they are; clamp them with
/// [`Barcode::clamp_infinite`] first to truncate at a box boundary.
pub fn landscape_1d(bc: &Barcode, degree: usize, k: usize, t: f64) -> f64 {
    kth_tent(bc.degree(degree), k, t)
}

pub fn write_barcode_csv<W: Write>(mut w: W, bc: &Barcode) -> Result<()> {
    let mut buf = String::from("degree,birth,death\n");
    for degree in 0..bc.bars.len() {
        for b in bc.degree(degree) {
            if b.death == f64::INFINITY {
                writeln!(buf, "{degree},{},inf", b.birth).unwrap();
            } else {
                writeln!(buf, "{degree},{},{}", b.birth, b.death).unwrap();
            }
        }
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn read_barcode_csv<R: BufRead>(r: R) -> Result<Barcode> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "degree,birth,death" {
        return Err(Error::Parse("expected header 'degree,birth,death'".into()));
    }
    let mut bc = Barcode::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("barcode row {}: '{line}'", lineno + 2));
        let mut it = line.trim().split(',');
        let (Some(d), Some(b), Some(e), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(bad());
        };
        let degree: usize = d.parse().map_err(|_| bad())?;
        let birth: f64 = b.parse().map_err(|_| bad())?;
        let death: f64 = if e == "inf" { f64::INFINITY } else { e.parse().map_err(|_| bad())? };
        bc.push(degree, Bar::new(birth, death));
    }
    Ok(bc)
}
