//! Persistence barcodes over Z/2 and the bottleneck distance between them.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::nerve::{FilteredComplex, Simplex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersistenceError {
    #[error("filtration cannot be ordered: {0}")]
    UnsortableFiltration(String),
}

/// Half-open interval `[birth, death)`; `death` is infinite for essential classes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub birth: f64,
    pub death: f64,
}

impl Interval {
    pub fn new(birth: f64, death: f64) -> Self {
        Interval { birth, death }
    }

    pub fn essential(birth: f64) -> Self {
        Interval { birth, death: f64::INFINITY }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn contains(&self, alpha: f64) -> bool {
        self.birth <= alpha && alpha < self.death
    }
}

/// Total order by birth, then death, essential bars after finite ones.
pub fn interval_cmp(a: &Interval, b: &Interval) -> Ordering {
    a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Barcode {
    pub dim0: Vec<Interval>,
    pub dim1: Vec<Interval>,
}

impl Barcode {
    pub fn dim(&self, p: usize) -> &[Interval] {
        match p {
            0 => &self.dim0,
            1 => &self.dim1,
            _ => &[],
        }
    }

    /// Number of bars of dimension `p` alive at `alpha`.
    pub fn betti(&self, p: usize, alpha: f64) -> usize {
        self.dim(p).iter().filter(|i| i.contains(alpha)).count()
    }

    /// Copy without bars of length at most `tol`.
    pub fn without_zero_bars(&self, tol: f64) -> Barcode {
        let keep = |v: &[Interval]| v.iter().copied().filter(|i| i.persistence() > tol).collect();
        Barcode { dim0: keep(&self.dim0), dim1: keep(&self.dim1) }
    }

    pub fn sort(&mut self) {
        self.dim0.sort_by(interval_cmp);
        self.dim1.sort_by(interval_cmp);
    }
}

/// Column reduction strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// Left-to-right reduction of every column.
    Standard,
    /// Reduce triangles first and zero out the edge columns they pair with.
    Clearing,
}

/// Boundary matrix in filtration order; columns hold sorted row indices.
#[derive(Clone, Debug)]
pub struct SparseBoundaryMatrix {
    pub columns: Vec<Vec<u32>>,
    pub dims: Vec<u8>,
    pub values: Vec<f64>,
}

impl SparseBoundaryMatrix {
    pub fn from_complex(fc: &FilteredComplex) -> Result<Self, PersistenceError> {
        let sx = fc.simplices();
        let mut index: HashMap<Simplex, u32> = HashMap::with_capacity(sx.len());
        let mut columns = Vec::with_capacity(sx.len());
        let mut last = f64::NEG_INFINITY;
        for (k, (s, v)) in sx.iter().enumerate() {
            if !v.is_finite() || *v < last {
                return Err(PersistenceError::UnsortableFiltration(format!(
                    "value {v} of {:?} out of order",
                    s.vertices()
                )));
            }
            last = *v;
            let mut col = Vec::with_capacity(3);
            for f in s.facets() {
                match index.get(&f) {
                    Some(&r) => col.push(r),
                    None => {
                        return Err(PersistenceError::UnsortableFiltration(format!(
                            "face {:?} of {:?} does not precede it",
                            f.vertices(),
                            s.vertices()
                        )))
                    }
                }
            }
            col.sort_unstable();
            if index.insert(*s, k as u32).is_some() {
                return Err(PersistenceError::UnsortableFiltration(format!("duplicate simplex {:?}", s.vertices())));
            }
            columns.push(col);
        }
        Ok(SparseBoundaryMatrix {
            columns,
            dims: sx.iter().map(|(s, _)| s.dim() as u8).collect(),
            values: sx.iter().map(|&(_, v)| v).collect(),
        })
    }
}

/// Symmetric difference of two sorted index lists, into `a`.
fn add_column(a: &mut Vec<u32>, b: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                scratch.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                scratch.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&a[i..]);
    scratch.extend_from_slice(&b[j..]);
    std::mem::swap(a, scratch);
}

const NONE: u32 = u32::MAX;

/// Persistence pairs `(birth index, death index)` and the unpaired indices.
pub fn reduce(m: &SparseBoundaryMatrix, strategy: Reduction) -> (Vec<(u32, u32)>, Vec<u32>) {
    let n = m.columns.len();
    let mut cols = m.columns.clone();
    let mut pivot_of_row = vec![NONE; n];
    let mut cleared = vec![false; n];
    let mut scratch = Vec::new();
    let order: Vec<usize> = match strategy {
        Reduction::Standard => (0..n).collect(),
        Reduction::Clearing => {
            let mut o: Vec<usize> = (0..n).filter(|&j| m.dims[j] == 2).collect();
            o.extend((0..n).filter(|&j| m.dims[j] == 1));
            o
        }
    };
    for j in order {
        if cleared[j] {
            continue;
        }
        let mut col = std::mem::take(&mut cols[j]);
        while let Some(&low) = col.last() {
            let k = pivot_of_row[low as usize];
            if k == NONE {
                break;
            }
            add_column(&mut col, &cols[k as usize], &mut scratch);
        }
        if let Some(&low) = col.last() {
            pivot_of_row[low as usize] = j as u32;
            if strategy == Reduction::Clearing {
                cleared[low as usize] = true;
                cols[low as usize].clear();
            }
        }
        cols[j] = col;
    }
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for i in 0..n {
        if pivot_of_row[i] != NONE {
            pairs.push((i as u32, pivot_of_row[i]));
        } else if cols[i].is_empty() && !cleared[i] {
            unpaired.push(i as u32);
        }
    }
    (pairs, unpaired)
}

pub fn compute_barcode(fc: &FilteredComplex) -> Result<Barcode, PersistenceError> {
    compute_barcode_with(fc, Reduction::Clearing)
}

pub fn compute_barcode_with(fc: &FilteredComplex, strategy: Reduction) -> Result<Barcode, PersistenceError> {
    let m = SparseBoundaryMatrix::from_complex(fc)?;
    let (pairs, unpaired) = reduce(&m, strategy);
    let mut bc = Barcode::default();
    for (b, d) in pairs {
        let iv = Interval::new(m.values[b as usize], m.values[d as usize]);
        match m.dims[b as usize] {
            0 => bc.dim0.push(iv),
            1 => bc.dim1.push(iv),
            _ => {}
        }
    }
    for u in unpaired {
        let iv = Interval::essential(m.values[u as usize]);
        match m.dims[u as usize] {
            0 => bc.dim0.push(iv),
            1 => bc.dim1.push(iv),
            _ => {}
        }
    }
    bc.sort();
    Ok(bc)
}

/// Maximum bipartite matching size (Hopcroft-Karp) on `adj[left] -> rights`.
fn max_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    let n_left = adj.len();
    let mut match_l = vec![usize::MAX; n_left];
    let mut match_r = vec![usize::MAX; n_right];
    let mut dist = vec![0usize; n_left];
    let mut size = 0;
    loop {
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..n_left {
            if match_l[u] == usize::MAX {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == usize::MAX {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; n_left];
        for u in 0..n_left {
            if match_l[u] == usize::MAX && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut it) {
                size += 1;
            }
        }
    }
    size
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    while it[u] < adj[u].len() {
        let v = adj[u][it[u]];
        it[u] += 1;
        let w = match_r[v];
        if w == usize::MAX || (dist[w] == dist[u] + 1 && augment(w, adj, match_l, match_r, dist, it)) {
            match_l[u] = v;
            match_r[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

fn linf(a: &Interval, b: &Interval) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

/// Whether the finite diagrams match within `delta`: left nodes are the
/// points of `a` then diagonal copies of `b`; right nodes are the points
/// of `b` then diagonal copies of `a`.
fn feasible(a: &[Interval], b: &[Interval], delta: f64) -> bool {
    let (m, k) = (a.len(), b.len());
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + k];
    for i in 0..m {
        for j in 0..k {
            if linf(&a[i], &b[j]) <= delta {
                adj[i].push(j);
            }
        }
        if 0.5 * a[i].persistence() <= delta {
            adj[i].push(k + i);
        }
    }
    for j in 0..k {
        if 0.5 * b[j].persistence() <= delta {
            adj[m + j].push(j);
        }
        adj[m + j].extend((0..m).map(|i| k + i));
    }
    max_matching(&adj, m + k) == m + k
}

/// Bottleneck distance between the dimension-`p` bars of two barcodes under
/// the sup-norm, essential bars matched among themselves.
pub fn bottleneck_distance(b1: &Barcode, b2: &Barcode, p: usize) -> f64 {
    bottleneck(b1.dim(p), b2.dim(p))
}

pub fn bottleneck(x: &[Interval], y: &[Interval]) -> f64 {
    let mut ex: Vec<f64> = x.iter().filter(|i| i.is_essential()).map(|i| i.birth).collect();
    let mut ey: Vec<f64> = y.iter().filter(|i| i.is_essential()).map(|i| i.birth).collect();
    if ex.len() != ey.len() {
        return f64::INFINITY;
    }
    ex.sort_by(f64::total_cmp);
    ey.sort_by(f64::total_cmp);
    let ess = ex.iter().zip(&ey).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let a: Vec<Interval> = x.iter().copied().filter(|i| !i.is_essential()).collect();
    let b: Vec<Interval> = y.iter().copied().filter(|i| !i.is_essential()).collect();
    let mut cands: Vec<f64> = vec![0.0];
    cands.extend(a.iter().chain(&b).map(|i| 0.5 * i.persistence()));
    for p in &a {
        for q in &b {
            cands.push(linf(p, q));
        }
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(&a, &b, cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    ess.max(cands[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iv(b: f64, d: f64) -> Interval {
        Interval::new(b, d)
    }

    fn hollow_triangle() -> FilteredComplex {
        FilteredComplex::new(vec![
            (Simplex::vertex(0), 0.0),
            (Simplex::vertex(1), 0.0),
            (Simplex::vertex(2), 0.0),
            (Simplex::edge(0, 1), 1.0),
            (Simplex::edge(0, 2), 1.0),
            (Simplex::edge(1, 2), 1.0),
            (Simplex::triangle(0, 1, 2), 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn triangle_example() {
        let bc = compute_barcode(&hollow_triangle()).unwrap();
        assert_eq!(bc.dim0, vec![iv(0.0, 1.0), iv(0.0, 1.0), Interval::essential(0.0)]);
        assert_eq!(bc.dim1, vec![iv(1.0, 2.0)]);
    }

    #[test]
    fn two_squares_example() {
        let fc = FilteredComplex::new(vec![
            (Simplex::vertex(0), 0.0),
            (Simplex::vertex(1), 0.0),
            (Simplex::edge(0, 1), 0.5),
        ])
        .unwrap();
        let bc = compute_barcode(&fc).unwrap();
        assert_eq!(bc.dim0, vec![iv(0.0, 0.5), Interval::essential(0.0)]);
        assert!(bc.dim1.is_empty());
    }

    #[test]
    fn unsorted_input_rejected() {
        let fc = FilteredComplex::from_raw(vec![(Simplex::vertex(0), 1.0), (Simplex::vertex(1), 0.0)]);
        assert!(compute_barcode(&fc).is_err());
        let fc = FilteredComplex::from_raw(vec![(Simplex::edge(0, 1), 0.0), (Simplex::vertex(0), 0.0)]);
        assert!(compute_barcode(&fc).is_err());
    }

    #[test]
    fn bottleneck_examples() {
        let b = Barcode { dim0: vec![iv(0.0, 2.0)], dim1: vec![] };
        assert_eq!(bottleneck_distance(&b, &b, 0), 0.0);
        assert_eq!(bottleneck(&[iv(0.0, 2.0)], &[]), 1.0);
        assert_eq!(bottleneck(&[iv(0.0, 2.0)], &[iv(0.5, 2.5)]), 0.5);
        assert_eq!(bottleneck(&[Interval::essential(0.0)], &[]), f64::INFINITY);
        assert_eq!(bottleneck(&[Interval::essential(0.0)], &[Interval::essential(0.25)]), 0.25);
    }

    fn random_complex(rng: &mut ChaCha8Rng, max_vertices: usize) -> FilteredComplex {
        let nv = rng.gen_range(2..max_vertices);
        let mut out = Vec::new();
        let mut val = HashMap::new();
        for v in 0..nv as u32 {
            let x = (rng.gen_range(0..4) as f64) * 0.5;
            out.push((Simplex::vertex(v), x));
            val.insert(Simplex::vertex(v), x);
        }
        for a in 0..nv as u32 {
            for b in a + 1..nv as u32 {
                if rng.gen_bool(0.5) {
                    let s = Simplex::edge(a, b);
                    let x = val[&Simplex::vertex(a)].max(val[&Simplex::vertex(b)]) + (rng.gen_range(0..4) as f64) * 0.5;
                    out.push((s, x));
                    val.insert(s, x);
                }
            }
        }
        for a in 0..nv as u32 {
            for b in a + 1..nv as u32 {
                for c in b + 1..nv as u32 {
                    let t = Simplex::triangle(a, b, c);
                    let faces = t.facets();
                    if faces.iter().all(|f| val.contains_key(f)) && rng.gen_bool(0.5) {
                        let m = faces.iter().map(|f| val[f]).fold(0.0, f64::max);
                        out.push((t, m + (rng.gen_range(0..3) as f64) * 0.5));
                    }
                }
            }
        }
        FilteredComplex::new(out).unwrap()
    }

    #[test]
    fn clearing_matches_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let fc = random_complex(&mut rng, 9);
            assert_eq!(
                compute_barcode_with(&fc, Reduction::Clearing).unwrap(),
                compute_barcode_with(&fc, Reduction::Standard).unwrap()
            );
        }
    }

    /// Rank of a Z/2 matrix given as bit rows.
    fn rank(mut rows: Vec<u64>) -> usize {
        let mut r = 0;
        for bit in 0..64 {
            if let Some(p) = (r..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) {
                rows.swap(r, p);
                for i in 0..rows.len() {
                    if i != r && rows[i] >> bit & 1 == 1 {
                        rows[i] ^= rows[r];
                    }
                }
                r += 1;
            }
        }
        r
    }

    fn brute_betti(fc: &FilteredComplex, p: usize, alpha: f64) -> usize {
        let live: Vec<Simplex> = fc.simplices().iter().filter(|(_, v)| *v <= alpha).map(|(s, _)| *s).collect();
        let idx = |d: usize| -> Vec<Simplex> { live.iter().copied().filter(|s| s.dim() == d).collect() };
        let boundary_rank = |d: usize| -> usize {
            let lower = idx(d - 1);
            let rows: Vec<u64> = idx(d)
                .iter()
                .map(|s| s.facets().iter().map(|f| 1u64 << lower.iter().position(|x| x == f).unwrap()).fold(0, |a, b| a ^ b))
                .collect();
            rank(rows)
        };
        let cp = idx(p).len();
        let rp = if p == 0 { 0 } else { boundary_rank(p) };
        cp - rp - boundary_rank(p + 1)
    }

    #[test]
    fn rank_function_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 60 {
            let fc = random_complex(&mut rng, 7);
            if fc.len() > 30 {
                continue;
            }
            checked += 1;
            let bc = compute_barcode(&fc).unwrap();
            for alpha in [0.25, 0.75, 1.25, 1.75, 2.25, 2.75, 3.25, 4.25, 6.0] {
                for p in 0..2 {
                    assert_eq!(bc.betti(p, alpha), brute_betti(&fc, p, alpha));
                }
            }
            assert_eq!(bc.dim1.iter().filter(|i| i.is_essential()).count(), brute_betti(&fc, 1, 1e9));
        }
    }

    fn brute_bottleneck(a: &[Interval], b: &[Interval]) -> f64 {
        // pad both sides with diagonal slots and try every assignment
        let m = a.len();
        let k = b.len();
        let n = m + k;
        let cost = |i: usize, j: usize| -> f64 {
            match (i < m, j < k) {
                (true, true) => linf(&a[i], &b[j]),
                (true, false) => 0.5 * a[i].persistence(),
                (false, true) => 0.5 * b[j].persistence(),
                (false, false) => 0.0,
            }
        };
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let c = (0..n).map(|i| cost(i, p[i])).fold(0.0, f64::max);
            best = best.min(c);
        });
        best
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    fn random_bars(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Interval> {
        let n = rng.gen_range(0..max_len);
        (0..n)
            .map(|_| {
                let b: f64 = rng.gen_range(0.0..2.0);
                iv(b, b + rng.gen_range(0.0..2.0))
            })
            .collect()
    }

    #[test]
    fn bottleneck_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_bars(&mut rng, 4);
            let b = random_bars(&mut rng, 4);
            assert_eq!(bottleneck(&a, &b), brute_bottleneck(&a, &b));
        }
    }

    #[test]
    fn bottleneck_pseudometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = random_bars(&mut rng, 8);
            let b = random_bars(&mut rng, 8);
            let c = random_bars(&mut rng, 8);
            assert_eq!(bottleneck(&a, &b), bottleneck(&b, &a));
            assert_eq!(bottleneck(&a, &a), 0.0);
            assert!(bottleneck(&a, &c) <= bottleneck(&a, &b) + bottleneck(&b, &c) + 1e-12);
        }
    }
}
