//! Brute-force oracles and generators shared by the integration tests.
//!
//! Nothing here calls into the reduction or landscape code: homology is
//! computed by Gaussian elimination over F2 on bitset chains.

#![allow(dead_code)]

use std::collections::HashMap;

use mplandscape::bifiltration::{BiSimplex, Bifiltration, Bigrade};
use mplandscape::landscape::LandscapeGrid;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// A simplicial complex given as sorted vertex lists, closed under faces.
pub struct Complex {
    simplices: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl Complex {
    pub fn new(simplices: &[Vec<u32>]) -> Self {
        assert!(simplices.len() <= 64, "bitset oracle holds at most 64 simplices");
        let simplices: Vec<Vec<u32>> = simplices
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.sort_unstable();
                s
            })
            .collect();
        let index = simplices.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Complex { simplices, index }
    }

    fn boundary(&self, i: usize) -> u64 {
        let s = &self.simplices[i];
        if s.len() == 1 {
            return 0;
        }
        (0..s.len()).fold(0u64, |acc, drop| {
            let face: Vec<u32> = s.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &v)| v).collect();
            acc | 1 << self.index[&face]
        })
    }

    fn of_dim(&self, dim: usize, within: u64) -> Vec<usize> {
        (0..self.simplices.len())
            .filter(|&i| within >> i & 1 == 1 && self.simplices[i].len() == dim + 1)
            .collect()
    }

    pub fn all(&self) -> u64 {
        if self.simplices.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.simplices.len()) - 1
        }
    }

    /// Bitset of simplices selected by `keep`.
    pub fn subset(&self, keep: impl Fn(usize) -> bool) -> u64 {
        (0..self.simplices.len()).filter(|&i| keep(i)).fold(0, |acc, i| acc | 1 << i)
    }

    /// Betti number of the subcomplex `within` by rank-nullity.
    pub fn betti(&self, within: u64, dim: usize) -> usize {
        let cells = self.of_dim(dim, within).len();
        let rank_out = if dim == 0 {
            0
        } else {
            rank(self.of_dim(dim, within).iter().map(|&i| self.boundary(i)).collect())
        };
        let rank_in = rank(self.of_dim(dim + 1, within).iter().map(|&i| self.boundary(i)).collect());
        cells - rank_out - rank_in
    }

    /// Rank of `H_dim(a) -> H_dim(b)` for subcomplexes `a` contained in `b`.
    pub fn map_rank(&self, a: u64, b: u64, dim: usize) -> usize {
        assert_eq!(a & !b, 0, "a must be a subcomplex of b");
        let cycles = cycle_basis(self.of_dim(dim, a).iter().map(|&i| (self.boundary(i), 1u64 << i)).collect());
        let bounds: Vec<u64> = self.of_dim(dim + 1, b).iter().map(|&i| self.boundary(i)).collect();
        let base = rank(bounds.clone());
        let mut both = bounds;
        both.extend(cycles);
        rank(both) - base
    }
}

/// Rank over F2 of a set of bit vectors.
pub fn rank(mut vecs: Vec<u64>) -> usize {
    let mut r = 0;
    for bit in 0..64 {
        let Some(p) = (r..vecs.len()).find(|&i| vecs[i] >> bit & 1 == 1) else { continue };
        vecs.swap(r, p);
        let pivot = vecs[r];
        for (i, v) in vecs.iter_mut().enumerate() {
            if i != r && *v >> bit & 1 == 1 {
                *v ^= pivot;
            }
        }
        r += 1;
    }
    r
}

/// Kernel basis of the map sending each `tag` to its `image`.
fn cycle_basis(cols: Vec<(u64, u64)>) -> Vec<u64> {
    let mut reduced: Vec<(u64, u64)> = Vec::new();
    let mut kernel = Vec::new();
    for (mut img, mut tag) in cols {
        for &(r_img, r_tag) in &reduced {
            let lead = 63 - r_img.leading_zeros();
            if img >> lead & 1 == 1 {
                img ^= r_img;
                tag ^= r_tag;
            }
        }
        if img == 0 {
            kernel.push(tag);
        } else {
            reduced.push((img, tag));
            reduced.sort_by_key(|&(i, _)| std::cmp::Reverse(63 - i.leading_zeros()));
        }
    }
    kernel
}

/// Brute-force `lambda(k, x)`: the largest `eps` on the sweep `0, step, 2 step, ...`
/// with `rank(H(x - eps 1) -> H(x + eps 1)) >= k` and `x +- eps 1` in `[0, T]^2`.
pub fn oracle_landscape(bif: &Bifiltration, degree: usize, k: usize, x: [f64; 2], step: f64) -> f64 {
    let t = bif.t();
    let complex = Complex::new(&bif.simplices().iter().map(|s| s.vertices.clone()).collect::<Vec<_>>());
    let below = |p: [f64; 2]| {
        complex.subset(|i| {
            let g = bif.simplices()[i].grade;
            g.scale <= p[0] && g.codensity <= p[1]
        })
    };
    let room = x[0].min(x[1]).min(t - x[0]).min(t - x[1]);
    let mut best = 0.0;
    let mut j = 0u32;
    loop {
        let eps = j as f64 * step;
        if eps > room {
            break;
        }
        let lo = below([x[0] - eps, x[1] - eps]);
        let hi = below([x[0] + eps, x[1] + eps]);
        if complex.map_rank(lo, hi, degree) >= k {
            best = eps;
        } else {
            break;
        }
        j += 1;
    }
    best
}

/// Random bifiltration in `[0, 1]^2` with at most `max_simplices` simplices.
/// Grades are snapped to a coarse lattice half of the time to force ties.
pub fn random_bifiltration<R: Rng>(rng: &mut R, max_simplices: usize) -> Bifiltration {
    let snap = rng.random_bool(0.5);
    // triangles get larger increments so that loops live long enough to show
    let draw = |rng: &mut R, lo: f64, spread: f64| -> f64 {
        let v = lo + rng.random::<f64>() * spread;
        if snap {
            ((v * 8.0).ceil() / 8.0).min(1.0)
        } else {
            v.min(1.0)
        }
    };
    let nv = rng.random_range(1..=4usize).min(max_simplices);
    let mut simplices: Vec<BiSimplex> = (0..nv)
        .map(|v| {
            let g = Bigrade::new(draw(rng, 0.0, 0.35), draw(rng, 0.0, 0.35));
            BiSimplex::new(vec![v as u32], g)
        })
        .collect();
    let grade_of = |s: &[BiSimplex], v: &[u32]| s.iter().find(|x| x.vertices == v).map(|x| x.grade);
    let mut pairs: Vec<(u32, u32)> = (0..nv as u32).flat_map(|a| (a + 1..nv as u32).map(move |b| (a, b))).collect();
    for i in (1..pairs.len()).rev() {
        pairs.swap(i, rng.random_range(0..=i));
    }
    for (a, b) in pairs {
        if simplices.len() >= max_simplices || rng.random_bool(0.2) {
            continue;
        }
        let j = grade_of(&simplices, &[a]).unwrap().join(&grade_of(&simplices, &[b]).unwrap());
        let g = Bigrade::new(draw(rng, j.scale, 0.3), draw(rng, j.codensity, 0.3));
        simplices.push(BiSimplex::new(vec![a, b], g));
    }
    for a in 0..nv as u32 {
        for b in a + 1..nv as u32 {
            for c in b + 1..nv as u32 {
                if simplices.len() >= max_simplices || rng.random_bool(0.5) {
                    continue;
                }
                let faces = [[a, b], [a, c], [b, c]].map(|e| grade_of(&simplices, &e));
                if faces.iter().any(Option::is_none) {
                    continue;
                }
                let j = faces.iter().flatten().fold(Bigrade::new(0.0, 0.0), |acc, g| acc.join(g));
                let g = Bigrade::new(draw(rng, j.scale, 0.8), draw(rng, j.codensity, 0.8));
                simplices.push(BiSimplex::new(vec![a, b, c], g));
            }
        }
    }
    Bifiltration::new(simplices, 1.0, 2).expect("generator builds valid bifiltrations")
}

/// Random filtered simplicial complex with at most `max_simplices` simplices
/// (up to dimension 3), with entry times on a coarse lattice to force ties.
pub fn random_filtered_complex<R: Rng>(rng: &mut R, max_simplices: usize) -> Vec<(Vec<u32>, f64)> {
    let nv = rng.random_range(1..=7u32);
    let mut out: Vec<(Vec<u32>, f64)> = Vec::new();
    let time = |rng: &mut R, lo: f64| lo + rng.random_range(0..4) as f64 * 0.5;
    for v in 0..nv {
        if out.len() < max_simplices {
            let t = time(rng, 0.0);
            out.push((vec![v], t));
        }
    }
    for dim in 1..=3usize {
        let mut candidates: Vec<Vec<u32>> = Vec::new();
        subsets(nv, dim + 1, &mut Vec::new(), 0, &mut candidates);
        for i in (1..candidates.len()).rev() {
            candidates.swap(i, rng.random_range(0..=i));
        }
        for s in candidates {
            if out.len() >= max_simplices {
                break;
            }
            let faces: Option<Vec<f64>> = (0..s.len())
                .map(|drop| {
                    let f: Vec<u32> = s.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &v)| v).collect();
                    out.iter().find(|(v, _)| *v == f).map(|&(_, t)| t)
                })
                .collect();
            if let Some(faces) = faces {
                if rng.random_bool(0.6) {
                    let lo = faces.iter().cloned().fold(0.0, f64::max);
                    let t = time(rng, lo);
                    out.push((s, t));
                }
            }
        }
    }
    for i in (1..out.len()).rev() {
        out.swap(i, rng.random_range(0..=i));
    }
    out
}

fn subsets(n: u32, size: usize, cur: &mut Vec<u32>, from: u32, out: &mut Vec<Vec<u32>>) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for v in from..n {
        cur.push(v);
        subsets(n, size, cur, v + 1, out);
        cur.pop();
    }
}

/// Independent envelope and Lipschitz check for a landscape grid.
pub fn landscape_problems(l: &LandscapeGrid) -> Vec<String> {
    let g = l.grid;
    let h = g.t / (g.m - 1) as f64;
    let mut out = Vec::new();
    for (i, &v) in l.values.iter().enumerate() {
        if !(0.0..=g.t / 2.0).contains(&v) {
            out.push(format!("value {v} at {i} outside [0, {}]", g.t / 2.0));
        }
    }
    let mut check = |a: usize, b: usize| {
        let d = (l.values[a] - l.values[b]).abs();
        if d > h + 1e-9 {
            out.push(format!("nodes {a} and {b} differ by {d} > spacing {h}"));
        }
    };
    match g.d {
        1 => (1..g.m).for_each(|i| check(i - 1, i)),
        2 => {
            for i in 0..g.m {
                for j in 0..g.m {
                    if i + 1 < g.m {
                        check(i * g.m + j, (i + 1) * g.m + j);
                    }
                    if j + 1 < g.m {
                        check(i * g.m + j, i * g.m + j + 1);
                    }
                }
            }
        }
        d => panic!("unexpected grid dimension {d}"),
    }
    out
}

pub fn assert_landscape_ok(l: &LandscapeGrid) {
    let p = landscape_problems(l);
    assert!(p.is_empty(), "landscape invariants violated: {p:?}");
}

/// One-sample Kolmogorov-Smirnov test against N(0, 1); returns (D, p-value).
pub fn ks_normal(sample: &[f64]) -> (f64, f64) {
    let normal = Normal::standard();
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let lam = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p: f64 = (1..=100)
        .map(|j| {
            let j = j as f64;
            2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lam * lam).exp()
        })
        .sum();
    (d, p.clamp(0.0, 1.0))
}

/// Random-height single vertex at `(a, a)` with `a ~ U[0, A]`, in the box
/// `[0, T]^2`, degree 0. Its landscape is
/// `max(0, min(x1 - a, x2 - a, T - x1, T - x2))`.
pub struct SingleVertex {
    pub a_max: f64,
    pub t: f64,
}

impl SingleVertex {
    pub fn bifiltration(&self, a: f64) -> Bifiltration {
        Bifiltration::new(vec![BiSimplex::new(vec![0], Bigrade::new(a, a))], self.t, 2).unwrap()
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.random::<f64>() * self.a_max
    }

    pub fn value(&self, a: f64, x: [f64; 2]) -> f64 {
        (x[0] - a).min(x[1] - a).min(self.t - x[0]).min(self.t - x[1]).max(0.0)
    }

    fn breaks(&self, x: [f64; 2]) -> [f64; 2] {
        let u = x[0].min(x[1]);
        let w = (self.t - x[0]).min(self.t - x[1]);
        [u - w, u]
    }

    /// `E[g(a)]` for `g` piecewise polynomial of degree <= 2 between the
    /// breakpoints of `nodes`, by Simpson's rule on each piece.
    fn expect(&self, nodes: &[[f64; 2]], g: impl Fn(f64) -> f64) -> f64 {
        let mut cuts = vec![0.0, self.a_max];
        for x in nodes {
            cuts.extend(self.breaks(*x).into_iter().filter(|&c| c > 0.0 && c < self.a_max));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .map(|w| (w[1] - w[0]) / 6.0 * (g(w[0]) + 4.0 * g((w[0] + w[1]) / 2.0) + g(w[1])))
            .sum::<f64>()
            / self.a_max
    }

    pub fn mean(&self, x: [f64; 2]) -> f64 {
        self.expect(&[x], |a| self.value(a, x))
    }

    pub fn covariance(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.expect(&[x, y], |a| self.value(a, x) * self.value(a, y)) - self.mean(x) * self.mean(y)
    }
}
