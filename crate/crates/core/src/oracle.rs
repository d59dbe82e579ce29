//! Rasterized ground truth for tests: Betti numbers of the offsets and
//! nearest-site labels on a grid.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::geom::{dist_point_polygon, BBox, ConvexPolygon, Point, SiteSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("step {step} too coarse for alpha {alpha}")]
    ResolutionTooCoarse { alpha: f64, step: f64 },
}

/// Horizontal chord of the convex polygon at height `y`, if any.
fn chord(pts: &[Point], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..pts.len() {
        let (a, b) = (pts[k], pts[(k + 1) % pts.len()]);
        if (a.y - y) * (b.y - y) > 0.0 {
            continue;
        }
        if a.y == b.y {
            lo = lo.min(a.x.min(b.x));
            hi = hi.max(a.x.max(b.x));
        } else {
            let x = a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Chord of the `alpha`-offset of `poly` at height `y`: the offset is the
/// union of the polygon, the rectangles over its edges and the disks at its
/// vertices, and it is convex, so the chords merge into one interval.
fn offset_chord(poly: &ConvexPolygon, alpha: f64, y: f64) -> Option<(f64, f64)> {
    let mut acc: Option<(f64, f64)> = None;
    let mut add = |iv: Option<(f64, f64)>| {
        if let Some((a, b)) = iv {
            acc = Some(match acc {
                Some((c, d)) => (a.min(c), b.max(d)),
                None => (a, b),
            });
        }
    };
    add(chord(poly.vertices(), y));
    for k in 0..poly.len() {
        let (a, b) = poly.edge(k);
        let n = poly.normal(k) * alpha;
        add(chord(&[a, b, b + n, a + n], y));
        let dy = y - a.y;
        if dy.abs() <= alpha {
            let w = (alpha * alpha - dy * dy).sqrt();
            add(Some((a.x - w, a.x + w)));
        }
    }
    acc
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new() -> Self {
        Dsu(Vec::new())
    }

    fn make(&mut self) -> usize {
        self.0.push(self.0.len());
        self.0.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Joins runs `[start, end]` (inclusive columns) of adjacent rows.
fn link_rows(prev: &[(i64, i64, usize)], cur: &[(i64, i64, usize)], diagonal: bool, dsu: &mut Dsu) {
    let reach = if diagonal { 1 } else { 0 };
    let mut p = 0;
    for &(s, e, id) in cur {
        while p < prev.len() && prev[p].1 + reach < s {
            p += 1;
        }
        let mut q = p;
        while q < prev.len() && prev[q].0 <= e + reach {
            dsu.union(id, prev[q].2);
            q += 1;
        }
    }
}

/// Covered components and the uncovered runs `(row, first, last)` of each
/// bounded complement component.
struct Components {
    b0: usize,
    holes: Vec<Vec<(i64, i64, i64)>>,
    origin: Point,
}

/// Betti numbers `(b0, b1)` of the `alpha`-offset of the sites, from a
/// raster of cell centers: 4-connected components of covered cells and
/// bounded 8-connected components of the rest.
pub fn raster_betti(sites: &SiteSet, alpha: f64, step: f64) -> Result<(usize, usize), OracleError> {
    let c = components(sites, alpha, step)?;
    Ok((c.b0, c.holes.len()))
}

/// As [`raster_betti`], but a bounded complement component only counts as
/// a hole if one of its cell centers is farther than `alpha + depth` from
/// the sites. Components thinner than that are cut off from the outside
/// only by the grid, typically at shallow crossings of two offset
/// boundaries. Also returns how many components were dropped.
pub fn raster_betti_resolved(
    sites: &SiteSet,
    alpha: f64,
    step: f64,
    depth: f64,
) -> Result<((usize, usize), usize), OracleError> {
    let c = components(sites, alpha, step)?;
    let center = |j: i64, i: i64| Point::new(c.origin.x + (i as f64 + 0.5) * step, c.origin.y + (j as f64 + 0.5) * step);
    let deep = c
        .holes
        .iter()
        .filter(|runs| runs.iter().any(|&(j, s, e)| (s..=e).any(|i| sites.dist(center(j, i)) > alpha + depth)))
        .count();
    Ok(((c.b0, deep), c.holes.len() - deep))
}

fn components(sites: &SiteSet, alpha: f64, step: f64) -> Result<Components, OracleError> {
    if !(step > 0.0) || step > alpha / 10.0 {
        return Err(OracleError::ResolutionTooCoarse { alpha, step });
    }
    let Some(bb) = sites.bbox() else { return Ok(Components { b0: 0, holes: Vec::new(), origin: Point::ORIGIN }) };
    let bb = bb.inflate(alpha + 3.0 * step);
    let width = (bb.width() / step).ceil() as i64;
    let height = (bb.height() / step).ceil() as i64;
    let mut polys: Vec<&ConvexPolygon> = sites.polygons().iter().collect();
    polys.sort_by(|a, b| a.bbox().min.y.total_cmp(&b.bbox().min.y));

    let mut dsu_in = Dsu::new();
    let mut dsu_out = Dsu::new();
    let mut border_out: Vec<bool> = Vec::new();
    let mut out_runs: Vec<(i64, i64, i64)> = Vec::new();
    let mut prev_in: Vec<(i64, i64, usize)> = Vec::new();
    let mut prev_out: Vec<(i64, i64, usize)> = Vec::new();
    for j in 0..height {
        let y = bb.min.y + (j as f64 + 0.5) * step;
        let mut spans: Vec<(i64, i64)> = Vec::new();
        for p in &polys {
            let pb = p.bbox();
            if pb.min.y - alpha > y {
                break;
            }
            if pb.max.y + alpha < y {
                continue;
            }
            if let Some((lo, hi)) = offset_chord(p, alpha, y) {
                // columns whose centers lie in [lo, hi]
                let s = ((lo - bb.min.x) / step - 0.5).ceil() as i64;
                let e = ((hi - bb.min.x) / step - 0.5).floor() as i64;
                if s <= e {
                    spans.push((s.max(0), e.min(width - 1)));
                }
            }
        }
        spans.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::new();
        for (s, e) in spans {
            match merged.last_mut() {
                Some(last) if s <= last.1 + 1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        let cur_in: Vec<(i64, i64, usize)> = merged.iter().map(|&(s, e)| (s, e, dsu_in.make())).collect();
        let mut cur_out = Vec::new();
        let mut col = 0;
        for &(s, e) in merged.iter().chain(std::iter::once(&(width, width))) {
            if s > col {
                let id = dsu_out.make();
                border_out.push(j == 0 || j == height - 1 || col == 0 || s == width);
                out_runs.push((j, col, s - 1));
                cur_out.push((col, s - 1, id));
            }
            col = e + 1;
        }
        link_rows(&prev_in, &cur_in, false, &mut dsu_in);
        link_rows(&prev_out, &cur_out, true, &mut dsu_out);
        prev_in = cur_in;
        prev_out = cur_out;
    }
    let n_in = dsu_in.0.len();
    let b0 = (0..n_in).filter(|&k| dsu_in.find(k) == k).count();
    let n_out = dsu_out.0.len();
    let mut touches = vec![false; n_out];
    for k in 0..n_out {
        if border_out[k] {
            let r = dsu_out.find(k);
            touches[r] = true;
        }
    }
    let mut holes: BTreeMap<usize, Vec<(i64, i64, i64)>> = BTreeMap::new();
    for (k, &run) in out_runs.iter().enumerate() {
        let r = dsu_out.find(k);
        if !touches[r] {
            holes.entry(r).or_default().push(run);
        }
    }
    Ok(Components { b0, holes: holes.into_values().collect(), origin: bb.min })
}

/// As [`raster_betti`], also requiring `alpha` to stay at least five steps
/// away from every given filtration value.
pub fn raster_betti_checked(
    sites: &SiteSet,
    alpha: f64,
    step: f64,
    filtration_values: &[f64],
) -> Result<(usize, usize), OracleError> {
    if filtration_values.iter().any(|v| (v - alpha).abs() < 5.0 * step) {
        return Err(OracleError::ResolutionTooCoarse { alpha, step });
    }
    raster_betti(sites, alpha, step)
}

pub const BACKGROUND: u32 = u32::MAX;

/// Cell labels in row-major order from the bottom row up.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterGrid {
    pub origin: Point,
    pub step: f64,
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

impl RasterGrid {
    pub fn center(&self, i: usize, j: usize) -> Point {
        self.origin + Point::new((i as f64 + 0.5) * self.step, (j as f64 + 0.5) * self.step)
    }

    pub fn label(&self, i: usize, j: usize) -> u32 {
        self.labels[j * self.width + i]
    }

    /// Pairs of labels on 4-adjacent cells.
    pub fn adjacent_labels(&self) -> BTreeSet<(u32, u32)> {
        let mut out = BTreeSet::new();
        for j in 0..self.height {
            for i in 0..self.width {
                let a = self.label(i, j);
                for (di, dj) in [(1, 0), (0, 1)] {
                    if i + di < self.width && j + dj < self.height {
                        let b = self.label(i + di, j + dj);
                        if a != b {
                            out.insert((a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
        out
    }

    /// Binary greyscale image, top row first.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                let l = self.label(i, j);
                out.push(if l == BACKGROUND { 0 } else { 40 + (l.wrapping_mul(67) % 216) as u8 });
            }
        }
        out
    }
}

/// Nearest-site labels over `region` at the given step; ties go to the
/// smaller id.
pub fn raster_nearest_site_in(sites: &SiteSet, region: BBox, step: f64) -> RasterGrid {
    let width = (region.width() / step).ceil().max(1.0) as usize;
    let height = (region.height() / step).ceil().max(1.0) as usize;
    let mut grid = RasterGrid { origin: region.min, step, width, height, labels: vec![BACKGROUND; width * height] };
    for j in 0..height {
        for i in 0..width {
            let c = grid.center(i, j);
            let mut best = (f64::INFINITY, BACKGROUND);
            for p in sites.polygons() {
                let d = dist_point_polygon(c, p).0;
                if d < best.0 {
                    best = (d, p.id() as u32);
                }
            }
            grid.labels[j * width + i] = best.1;
        }
    }
    grid
}

/// Nearest-site labels over the sites' bounding box inflated by half its
/// diagonal.
pub fn raster_nearest_site(sites: &SiteSet, step: f64) -> RasterGrid {
    let region = sites
        .bbox()
        .map(|b| b.inflate(0.5 * b.diagonal()))
        .unwrap_or(BBox { min: Point::ORIGIN, max: Point::new(1.0, 1.0) });
    raster_nearest_site_in(sites, region, step)
}
