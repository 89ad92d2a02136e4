//! One-critical Rips x codensity bifiltrations.
//!
//! Every simplex carries a single bigrade `(scale, codensity)`. The scale is
//! the simplex diameter; the codensity is `max density - density` maximised
//! over the vertices, which turns the superlevel-set density filtration into
//! a sublevel one sharing the persistence engine with the scale axis.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::pointcloud::{dist, DensityEstimate, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bigrade {
    pub scale: f64,
    pub codensity: f64,
}

impl Bigrade {
    pub const fn new(scale: f64, codensity: f64) -> Self {
        Self { scale, codensity }
    }

    /// Componentwise (product) order.
    pub fn leq(&self, other: &Bigrade) -> bool {
        self.scale <= other.scale && self.codensity <= other.codensity
    }

    pub fn join(&self, other: &Bigrade) -> Bigrade {
        Bigrade::new(self.scale.max(other.scale), self.codensity.max(other.codensity))
    }
}

impl fmt::Display for Bigrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.scale, self.codensity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiSimplex {
    /// Strictly increasing vertex indices.
    pub vertices: Vec<u32>,
    pub grade: Bigrade,
}

impl BiSimplex {
    pub fn new(vertices: Vec<u32>, grade: Bigrade) -> Self {
        Self { vertices, grade }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// A finite bifiltered simplicial complex.
///
/// Simplices are kept sorted by dimension, then lexicographically by vertex
/// tuple. Face indices are resolved once at construction so that slicing
/// along many lines does not repeat the lookup.
#[derive(Debug, Clone)]
pub struct Bifiltration {
    simplices: Vec<BiSimplex>,
    faces: Vec<Vec<usize>>,
    closed: bool,
    t: f64,
    max_dim: usize,
}

impl PartialEq for Bifiltration {
    fn eq(&self, other: &Self) -> bool {
        self.simplices == other.simplices && self.t == other.t && self.max_dim == other.max_dim
    }
}

impl Bifiltration {
    /// Canonicalize and index a list of simplices.
    ///
    /// Fails on empty or repeated vertex tuples, duplicated simplices,
    /// simplices above `max_dim` and non-finite grades. Missing faces are not
    /// an error here; [`validate`] reports them.
    pub fn new(mut simplices: Vec<BiSimplex>, t: f64, max_dim: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return invalid_param(format!("box bound T must be > 0 (got {t})"));
        }
        for s in &mut simplices {
            if s.vertices.is_empty() {
                return invalid_input("simplex with no vertices");
            }
            s.vertices.sort_unstable();
            if s.vertices.windows(2).any(|w| w[0] == w[1]) {
                return invalid_input(format!("simplex {:?} repeats a vertex", s.vertices));
            }
            if s.dim() > max_dim {
                return invalid_input(format!(
                    "simplex {:?} exceeds max_dim = {max_dim}",
                    s.vertices
                ));
            }
            if !(s.grade.scale.is_finite() && s.grade.codensity.is_finite()) {
                return invalid_input(format!("simplex {:?} has a non-finite grade", s.vertices));
            }
        }
        simplices.sort_by(|a, b| {
            a.vertices
                .len()
                .cmp(&b.vertices.len())
                .then_with(|| a.vertices.cmp(&b.vertices))
        });
        if let Some(w) = simplices.windows(2).find(|w| w[0].vertices == w[1].vertices) {
            return invalid_input(format!("simplex {:?} listed twice", w[0].vertices));
        }

        let index: HashMap<&[u32], usize> = simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices.as_slice(), i))
            .collect();
        let mut closed = true;
        let mut faces = Vec::with_capacity(simplices.len());
        for s in &simplices {
            let mut f = Vec::new();
            if s.vertices.len() > 1 {
                let mut face = Vec::with_capacity(s.vertices.len() - 1);
                for skip in 0..s.vertices.len() {
                    face.clear();
                    face.extend(
                        s.vertices
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != skip)
                            .map(|(_, v)| *v),
                    );
                    match index.get(face.as_slice()) {
                        Some(&j) => f.push(j),
                        None => closed = false,
                    }
                }
            }
            faces.push(f);
        }
        drop(index);
        Ok(Self {
            simplices,
            faces,
            closed,
            t,
            max_dim,
        })
    }

    pub fn empty(t: f64, max_dim: usize) -> Result<Self> {
        Self::new(Vec::new(), t, max_dim)
    }

    pub fn simplices(&self) -> &[BiSimplex] {
        &self.simplices
    }

    /// Indices of the codimension-one faces of simplex `i`.
    pub fn faces(&self, i: usize) -> &[usize] {
        &self.faces[i]
    }

    /// Whether every face of every simplex is present.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count_dim(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|s| s.dim() == dim).count()
    }

    /// True when all grades lie in `[0, T]^2`.
    pub fn in_box(&self) -> bool {
        let t = self.t;
        self.simplices.iter().all(|s| {
            (0.0..=t).contains(&s.grade.scale) && (0.0..=t).contains(&s.grade.codensity)
        })
    }

    fn with_grades(&self, grades: impl Fn(&Bigrade) -> Bigrade, t: f64) -> Self {
        let simplices = self
            .simplices
            .iter()
            .map(|s| BiSimplex::new(s.vertices.clone(), grades(&s.grade)))
            .collect();
        Self {
            simplices,
            faces: self.faces.clone(),
            closed: self.closed,
            t,
            max_dim: self.max_dim,
        }
    }
}

/// Simplices of the Vietoris-Rips (flag) complex with their diameters.
///
/// Edges of length `<= max_scale` form the 1-skeleton; higher simplices are
/// the cliques of that graph up to `max_dim`. Output is sorted by dimension,
/// then lexicographically.
pub fn rips_simplices(points: &[[f64; 3]], max_scale: f64, max_dim: usize) -> Vec<(Vec<u32>, f64)> {
    let n = points.len();
    let mut dm = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(&points[i], &points[j]);
            dm[i * n + j] = d;
            dm[j * n + i] = d;
        }
    }
    let upper: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            (i + 1..n)
                .filter(|&j| dm[i * n + j] <= max_scale)
                .map(|j| j as u32)
                .collect()
        })
        .collect();

    let mut out: Vec<(Vec<u32>, f64)> = Vec::new();
    let mut stack = Vec::with_capacity(max_dim + 1);
    for v in 0..n {
        stack.clear();
        stack.push(v as u32);
        expand(&mut stack, 0.0, &upper[v], &upper, &dm, n, max_dim, &mut out);
    }
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    out
}

#[allow(clippy::too_many_arguments)]
fn expand(
    simplex: &mut Vec<u32>,
    diam: f64,
    candidates: &[u32],
    upper: &[Vec<u32>],
    dm: &[f64],
    n: usize,
    max_dim: usize,
    out: &mut Vec<(Vec<u32>, f64)>,
) {
    out.push((simplex.clone(), diam));
    if simplex.len() > max_dim {
        return;
    }
    for (ci, &w) in candidates.iter().enumerate() {
        let wd = simplex
            .iter()
            .map(|&u| dm[u as usize * n + w as usize])
            .fold(diam, f64::max);
        let next: Vec<u32> = candidates[ci + 1..]
            .iter()
            .copied()
            .filter(|x| upper[w as usize].binary_search(x).is_ok())
            .collect();
        simplex.push(w);
        expand(simplex, wd, &next, upper, dm, n, max_dim, out);
        simplex.pop();
    }
}

/// Affinely map the scale values of `simplices` from their observed range
/// onto `[0, t]` (all 0 when the range is degenerate).
pub fn normalize_scale(simplices: &mut [(Vec<u32>, f64)], t: f64) {
    let (lo, hi) = simplices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)));
    for (_, v) in simplices.iter_mut() {
        *v = if hi > lo { (*v - lo) / (hi - lo) * t } else { 0.0 };
    }
}

/// Two-parameter filtration: Rips scale against KDE codensity.
pub fn build_rips_codensity(
    pc: &PointCloud,
    density: &DensityEstimate,
    max_scale: f64,
    max_dim: usize,
) -> Result<Bifiltration> {
    if density.values.len() != pc.len() {
        return invalid_input(format!(
            "density has {} values for a cloud of {} points",
            density.values.len(),
            pc.len()
        ));
    }
    if max_dim < 1 {
        return invalid_param("max_dim must be at least 1");
    }
    if max_scale.is_nan() || max_scale <= 0.0 {
        return invalid_param(format!("max_scale must be > 0 (got {max_scale})"));
    }
    let dmax = density.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let codensity: Vec<f64> = density.values.iter().map(|d| dmax - d).collect();

    let rips = rips_simplices(&pc.points, max_scale, max_dim);
    let mut t = 0.0f64;
    let simplices: Vec<BiSimplex> = rips
        .into_iter()
        .map(|(vs, diam)| {
            let cod = vs
                .iter()
                .map(|&v| codensity[v as usize])
                .fold(0.0f64, f64::max);
            t = t.max(diam).max(cod);
            BiSimplex::new(vs, Bigrade::new(diam, cod))
        })
        .collect();
    Bifiltration::new(simplices, if t > 0.0 { t } else { 1.0 }, max_dim)
}

/// Rescale each grade axis from its observed range onto `[0, t]`.
///
/// A degenerate axis (all grades equal) maps to 0.
pub fn normalize(bif: &Bifiltration, t: f64) -> Result<Bifiltration> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid_param(format!("box bound T must be > 0 (got {t})"));
    }
    let range = |f: fn(&Bigrade) -> f64| {
        bif.simplices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            let v = f(&s.grade);
            (lo.min(v), hi.max(v))
        })
    };
    let (s_lo, s_hi) = range(|g| g.scale);
    let (c_lo, c_hi) = range(|g| g.codensity);
    let map = |v: f64, lo: f64, hi: f64| {
        if hi > lo {
            if lo == 0.0 && hi == t {
                v
            } else {
                (v - lo) / (hi - lo) * t
            }
        } else {
            0.0
        }
    };
    Ok(bif.with_grades(
        |g| Bigrade::new(map(g.scale, s_lo, s_hi), map(g.codensity, c_lo, c_hi)),
        t,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `face` is a face of `simplex` but is not listed.
    MissingFace { simplex: Vec<u32>, face: Vec<u32> },
    /// `face` enters strictly after, or incomparably to, its coface.
    NotMonotone {
        face: Vec<u32>,
        face_grade: Bigrade,
        simplex: Vec<u32>,
        grade: Bigrade,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingFace { simplex, face } => {
                write!(f, "simplex {simplex:?} is missing face {face:?}")
            }
            Violation::NotMonotone {
                face,
                face_grade,
                simplex,
                grade,
            } => write!(
                f,
                "face {face:?} at {face_grade} is not below simplex {simplex:?} at {grade}"
            ),
        }
    }
}

/// Check closure under faces and grade monotonicity.
pub fn validate(bif: &Bifiltration) -> Vec<Violation> {
    let grades: HashMap<&[u32], Bigrade> = bif
        .simplices
        .iter()
        .map(|s| (s.vertices.as_slice(), s.grade))
        .collect();
    let mut out = Vec::new();
    for s in &bif.simplices {
        if s.vertices.len() < 2 {
            continue;
        }
        for skip in 0..s.vertices.len() {
            let mut face = s.vertices.clone();
            face.remove(skip);
            match grades.get(face.as_slice()) {
                None => out.push(Violation::MissingFace {
                    simplex: s.vertices.clone(),
                    face,
                }),
                Some(g) if !g.leq(&s.grade) => out.push(Violation::NotMonotone {
                    face,
                    face_grade: *g,
                    simplex: s.vertices.clone(),
                    grade: s.grade,
                }),
                Some(_) => {}
            }
        }
    }
    out
}

/// Serialize in the line format `dim v0 .. vk scale codensity`.
pub fn write_text<W: Write>(mut w: W, bif: &Bifiltration) -> Result<()> {
    let mut buf = String::new();
    writeln!(buf, "T={} max_dim={}", bif.t, bif.max_dim).unwrap();
    for s in &bif.simplices {
        write!(buf, "{}", s.dim()).unwrap();
        for v in &s.vertices {
            write!(buf, " {v}").unwrap();
        }
        writeln!(buf, " {} {}", s.grade.scale, s.grade.codensity).unwrap();
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<Bifiltration> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::Parse("empty bifiltration file".into())),
    };
    let mut t = None;
    let mut max_dim = None;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("T", v)) => t = v.parse::<f64>().ok(),
            Some(("max_dim", v)) => max_dim = v.parse::<usize>().ok(),
            _ => {}
        }
    }
    let (Some(t), Some(max_dim)) = (t, max_dim) else {
        return Err(Error::Parse(format!("bad bifiltration header '{}'", header.trim())));
    };
    let mut simplices = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 2));
        let dim: usize = toks[0].parse().map_err(|_| bad("bad dimension"))?;
        if toks.len() != dim + 4 {
            return Err(bad("token count does not match dimension"));
        }
        let vertices = toks[1..=dim + 1]
            .iter()
            .map(|v| v.parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("bad vertex index"))?;
        let scale: f64 = toks[dim + 2].parse().map_err(|_| bad("bad scale"))?;
        let cod: f64 = toks[dim + 3].parse().map_err(|_| bad("bad codensity"))?;
        simplices.push(BiSimplex::new(vertices, Bigrade::new(scale, cod)));
    }
    Bifiltration::new(simplices, t, max_dim)
}
