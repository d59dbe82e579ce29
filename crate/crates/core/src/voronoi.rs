//! Voronoi diagram of pairwise disjoint convex polygon sites.
//!
//! Every point outside a convex site `P` is reached exactly once by a ray
//! `a + t·u` leaving the boundary point `a` in an outward normal direction
//! `u`, with `t = dist(x, P)`. The pairs `(a, u)` form a closed loop (edge
//! strips alternating with vertex wedges) parametrized by arc length `s`.
//! The Voronoi region of `P` is star-shaped along these rays, so its boundary
//! is the graph of `rho(s) = min_j rho_j(s)`, where `rho_j(s)` is the first
//! `t` at which the ray becomes as close to site `j` as to `P`. Each
//! `rho_j` has a closed form per boundary feature of `j`.
//!
//! The builder samples this lower envelope for every site, locates the
//! changes of the minimizing site by bisection, and cross-checks that every
//! Voronoi vertex is seen from all three of its sites.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, TAU as TWO_PI};
use std::fmt::Write as _;

use thiserror::Error;

use crate::geom::{exterior_nearest, ConvexPolygon, Feature, FeatureKind, Point, SiteSet, TAU};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VoronoiError {
    #[error("degenerate position: {0}")]
    DegeneratePosition(String),
    #[error("inconsistent Voronoi vertex: distances spread {spread:e}")]
    InconsistentVertex { spread: f64 },
    #[error("could not assemble a consistent diagram: {0}")]
    Inconsistent(String),
}

/// Sampling density of the per-site envelopes.
#[derive(Clone, Debug)]
pub struct VoronoiConfig {
    /// Samples per full turn of a vertex wedge.
    pub wedge_samples_per_turn: usize,
    /// Minimum number of samples along each edge strip.
    pub min_strip_samples: usize,
    /// Strip sample spacing as a fraction of the instance diameter.
    pub strip_spacing: f64,
    /// Rounds of re-seeding when the three views of a vertex disagree.
    pub repair_rounds: usize,
}

impl Default for VoronoiConfig {
    fn default() -> Self {
        VoronoiConfig {
            wedge_samples_per_turn: 720,
            min_strip_samples: 8,
            strip_spacing: 1.0 / 200.0,
            repair_rounds: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PieceKind {
    Strip { edge: usize },
    Wedge { vertex: usize },
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    start: f64,
    len: f64,
    kind: PieceKind,
    /// strip: first vertex of the edge; wedge: the vertex
    base: Point,
    /// strip: unit edge direction
    dir: Point,
    /// outward normal (wedge: the first one)
    normal: Point,
    /// wedge: angle of the first normal
    angle0: f64,
}

/// Ray leaving the boundary of a site.
#[derive(Clone, Copy, Debug)]
struct Ray {
    a: Point,
    u: Point,
}

/// Normal-ray parametrization of the exterior of one site.
#[derive(Clone, Debug)]
pub(crate) struct Frame {
    pieces: Vec<Piece>,
    total: f64,
}

fn wrap_pm(a: f64) -> f64 {
    let mut r = a.rem_euclid(TWO_PI);
    if r > PI {
        r -= TWO_PI;
    }
    r
}

impl Frame {
    pub(crate) fn new(p: &ConvexPolygon) -> Frame {
        let m = p.len();
        let mut pieces = Vec::with_capacity(2 * m);
        let mut s = 0.0;
        for k in 0..m {
            let (a, b) = p.edge(k);
            let len = p.edge_len(k);
            let n = p.normal(k);
            pieces.push(Piece {
                start: s,
                len,
                kind: PieceKind::Strip { edge: k },
                base: a,
                dir: (b - a) * (1.0 / len),
                normal: n,
                angle0: n.angle(),
            });
            s += len;
            let n1 = p.normal((k + 1) % m);
            let turn = n.cross(n1).atan2(n.dot(n1));
            pieces.push(Piece {
                start: s,
                len: turn,
                kind: PieceKind::Wedge { vertex: (k + 1) % m },
                base: b,
                dir: Point::ORIGIN,
                normal: n,
                angle0: n.angle(),
            });
            s += turn;
        }
        Frame { pieces, total: s }
    }

    fn wrap(&self, s: f64) -> f64 {
        let r = s.rem_euclid(self.total);
        if r >= self.total {
            0.0
        } else {
            r
        }
    }

    fn piece_at(&self, s: f64) -> usize {
        let k = self.pieces.partition_point(|p| p.start <= s);
        k.saturating_sub(1)
    }

    fn ray(&self, s: f64) -> Ray {
        let s = self.wrap(s);
        let k = self.piece_at(s);
        let p = &self.pieces[k];
        let l = (s - p.start).clamp(0.0, p.len);
        match p.kind {
            PieceKind::Strip { .. } => Ray { a: p.base + p.dir * l, u: p.normal },
            PieceKind::Wedge { .. } => {
                let n = p.normal;
                Ray { a: p.base, u: n * l.cos() + n.perp() * l.sin() }
            }
        }
    }

    fn feature(&self, site: usize, piece: usize) -> Feature {
        match self.pieces[piece].kind {
            PieceKind::Strip { edge } => Feature::edge(site, edge),
            PieceKind::Wedge { vertex } => Feature::vertex(site, vertex),
        }
    }

    /// Parameter of the ray through an exterior point `x`.
    fn locate(&self, poly: &ConvexPolygon, x: Point) -> f64 {
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for k in 0..poly.len() {
            let (a, b) = poly.edge(k);
            let d = b - a;
            let t = ((x - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
            let dist = x.dist(a + d * t);
            if dist < best.0 {
                best = (dist, k, t);
            }
        }
        let (_, k, t) = best;
        if t > 0.0 && t < 1.0 {
            let p = &self.pieces[2 * k];
            return p.start + t * p.len;
        }
        // wedge at the vertex: `k + 1` when t == 1, `k` otherwise
        let wedge = if t >= 1.0 { 2 * k + 1 } else { (2 * k + 2 * poly.len() - 1) % (2 * poly.len()) };
        let p = &self.pieces[wedge];
        let mut l = (x - p.base).angle() - p.angle0;
        l = l.rem_euclid(TWO_PI);
        if l > p.len {
            l = if l - p.len < TWO_PI - l { p.len } else { 0.0 };
        }
        p.start + l
    }
}

/// First time the ray becomes at least as close to `q` as to its own site.
#[derive(Clone, Copy, Debug)]
struct Hit {
    t: f64,
    feature: Feature,
}

fn hit(ray: &Ray, q: &ConvexPolygon) -> Hit {
    let site = q.id();
    let mut best = Hit { t: f64::INFINITY, feature: Feature::vertex(site, 0) };
    for (k, &v) in q.vertices().iter().enumerate() {
        let w = v - ray.a;
        let c = ray.u.dot(w);
        if c > 0.0 {
            let t = w.norm_sq() / (2.0 * c);
            if t < best.t {
                best = Hit { t, feature: Feature::vertex(site, k) };
            }
        }
    }
    for k in 0..q.len() {
        let n = q.normal(k);
        let v = q.vertex(k);
        let g = n.dot(ray.a) - n.dot(v);
        let den = 1.0 - n.dot(ray.u);
        if g <= 0.0 || den <= 0.0 {
            continue;
        }
        let t = g / den;
        if t >= best.t {
            continue;
        }
        let x = ray.a + ray.u * t;
        let lam = (x - v).dot(q.vertex(k + 1) - v);
        let len2 = q.edge_len(k) * q.edge_len(k);
        if (0.0..=len2).contains(&lam) {
            best = Hit { t, feature: Feature::edge(site, k) };
        }
    }
    best
}

const NEAR: usize = 3;

#[derive(Clone, Copy, Debug)]
struct Sample {
    s: f64,
    rho: f64,
    label: Option<usize>,
    /// runners-up (site, rho), ascending
    near: [(usize, f64); NEAR],
    n_near: usize,
}

impl Sample {
    fn near(&self) -> &[(usize, f64)] {
        &self.near[..self.n_near]
    }
}

/// A change of the minimizing site along one site's envelope, bracketed by
/// two adjacent parameters.
#[derive(Clone, Copy, Debug)]
struct Breakpoint {
    lo: f64,
    hi: f64,
    from: Option<usize>,
    to: Option<usize>,
    rho: f64,
    x: Point,
}

/// One envelope span: `[start, end]` (unwrapped, `end >= start`) where the
/// minimizing site is `label`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceSpan {
    pub start: f64,
    pub end: f64,
    pub label: Option<usize>,
}

#[derive(Clone, Debug)]
struct SiteEnvelope {
    breakpoints: Vec<Breakpoint>,
    spans: Vec<FaceSpan>,
}

/// Kind of a bisector arc between two boundary features.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArcKind {
    /// Straight piece: vertex/vertex or edge/edge features.
    LineSegment,
    /// Vertex/edge features: parabola with the vertex as focus and the
    /// edge line as directrix.
    Parabolic { focus: Point, directrix: (Point, Point) },
}

/// Endpoint of an arc or edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArcEnd {
    At(Point),
    Infinite { direction: Point },
}

impl ArcEnd {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ArcEnd::Infinite { .. })
    }

    pub fn point(&self) -> Option<Point> {
        match *self {
            ArcEnd::At(p) => Some(p),
            ArcEnd::Infinite { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectorArc {
    pub kind: ArcKind,
    pub features: [Feature; 2],
    pub start: ArcEnd,
    pub end: ArcEnd,
    /// site whose frame parametrizes the arc, and the parameter range
    pub(crate) frame_site: usize,
    pub(crate) s_range: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoronoiVertex {
    pub position: Point,
    /// defining sites, ascending
    pub sites: [usize; 3],
    pub value: f64,
}

/// Endpoint of a Voronoi edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeEnd {
    Vertex(usize),
    Infinite { direction: Point },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoronoiEdge {
    pub sites: (usize, usize),
    pub arcs: Vec<BisectorArc>,
    pub ends: [EdgeEnd; 2],
    pub critical_value: f64,
    pub critical_point: Point,
}

/// Region of one site: its bounding edges in counterclockwise order and the
/// envelope spans they come from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Face {
    pub edges: Vec<usize>,
    pub spans: Vec<FaceSpan>,
}

#[derive(Clone, Debug)]
pub struct VoronoiDiagram {
    pub sites: SiteSet,
    pub vertices: Vec<VoronoiVertex>,
    pub edges: Vec<VoronoiEdge>,
    pub faces: Vec<Face>,
    frames: Vec<Frame>,
}

impl VoronoiDiagram {
    /// Whether `x` lies in the (closed) region of `site`, up to `tol`.
    pub fn face_contains(&self, site: usize, x: Point, tol: f64) -> bool {
        let poly = self.sites.get(site);
        if poly.contains(x) {
            return true;
        }
        let frame = &self.frames[site];
        let s = frame.locate(poly, x);
        let t = exterior_nearest(x, poly).0;
        let face = &self.faces[site];
        let span = face.spans.iter().find(|sp| {
            let d = (s - sp.start).rem_euclid(frame.total);
            d <= sp.end - sp.start
        });
        match span.and_then(|sp| sp.label) {
            None => true,
            Some(j) => t <= hit(&frame.ray(s), self.sites.get(j)).t + tol,
        }
    }

    /// Point on `arc` at relative parameter `t` in `[0, 1]`, if finite.
    pub fn point_on_arc(&self, arc: &BisectorArc, t: f64) -> Option<Point> {
        let frame = &self.frames[arc.frame_site];
        let (s0, s1) = arc.s_range;
        let s = s0 + (s1 - s0) * t;
        let ray = frame.ray(s);
        let other = if arc.features[0].site == arc.frame_site { arc.features[1].site } else { arc.features[0].site };
        let h = hit(&ray, self.sites.get(other));
        h.t.is_finite().then(|| ray.a + ray.u * h.t)
    }

    /// Text dump: `V x y v` per vertex, then `E i j critical x y n_arcs` per edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "V {} {} {}", v.position.x, v.position.y, v.value);
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "E {} {} {} {} {} {}",
                e.sites.0,
                e.sites.1,
                e.critical_value,
                e.critical_point.x,
                e.critical_point.y,
                e.arcs.len()
            );
        }
        out
    }
}

struct Builder<'a> {
    sites: &'a SiteSet,
    config: &'a VoronoiConfig,
    frames: Vec<Frame>,
    /// per site: other sites sorted by a lower bound on their distance
    order: Vec<Vec<(f64, usize)>>,
    scale: f64,
}

impl<'a> Builder<'a> {
    fn new(sites: &'a SiteSet, config: &'a VoronoiConfig) -> Self {
        let polys = sites.polygons();
        let frames = polys.iter().map(Frame::new).collect();
        let order = polys
            .iter()
            .map(|p| {
                let mut v: Vec<(f64, usize)> = polys
                    .iter()
                    .filter(|q| q.id() != p.id())
                    .map(|q| (p.bbox().gap(&q.bbox()), q.id()))
                    .collect();
                v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                v
            })
            .collect();
        let scale = sites.bbox().map(|b| b.diagonal()).unwrap_or(1.0).max(1.0);
        Builder { sites, config, frames, order, scale }
    }

    fn eval(&self, i: usize, s: f64) -> Sample {
        let ray = self.frames[i].ray(s);
        let mut smp = Sample { s, rho: f64::INFINITY, label: None, near: [(0, f64::INFINITY); NEAR], n_near: 0 };
        // all hits found so far that may matter, ascending by rho
        let mut top: [(usize, f64); NEAR + 1] = [(usize::MAX, f64::INFINITY); NEAR + 1];
        let mut n_top = 0usize;
        for &(lb, j) in &self.order[i] {
            if 0.5 * lb > top[0].1 {
                break;
            }
            let h = hit(&ray, self.sites.get(j));
            if !h.t.is_finite() {
                continue;
            }
            let mut k = n_top.min(NEAR);
            if k == NEAR && h.t >= top[NEAR].1 {
                continue;
            }
            top[k] = (j, h.t);
            while k > 0 && (top[k].1 < top[k - 1].1 || (top[k].1 == top[k - 1].1 && top[k].0 < top[k - 1].0)) {
                top.swap(k, k - 1);
                k -= 1;
            }
            n_top = (n_top + 1).min(NEAR + 1);
        }
        if n_top > 0 {
            smp.rho = top[0].1;
            smp.label = Some(top[0].0);
            smp.n_near = n_top - 1;
            smp.near[..n_top - 1].copy_from_slice(&top[1..n_top]);
        }
        smp
    }

    fn rho_of(&self, i: usize, j: Option<usize>, s: f64) -> f64 {
        match j {
            None => f64::INFINITY,
            Some(j) => hit(&self.frames[i].ray(s), self.sites.get(j)).t,
        }
    }

    fn initial_params(&self, i: usize) -> Vec<f64> {
        let f = &self.frames[i];
        let spacing = self.config.strip_spacing * self.scale;
        let mut out = Vec::new();
        for p in &f.pieces {
            let n = match p.kind {
                PieceKind::Strip { .. } => self.config.min_strip_samples.max((p.len / spacing).ceil() as usize),
                PieceKind::Wedge { .. } => {
                    2.max((p.len / TWO_PI * self.config.wedge_samples_per_turn as f64).ceil() as usize)
                }
            };
            out.extend((0..n).map(|k| p.start + p.len * k as f64 / n as f64));
        }
        out
    }

    /// Looks for a competitor dipping below the envelope strictly between
    /// two samples with the same label; returns the parameter of a dip.
    fn find_dip(&self, i: usize, a: &Sample, b: &Sample) -> Option<f64> {
        let mut cands: Vec<usize> = a.near().iter().chain(b.near()).map(|&(j, _)| j).collect();
        cands.sort_unstable();
        cands.dedup();
        let label = a.label;
        for j in cands {
            if Some(j) == label {
                continue;
            }
            let margin = |s: f64| self.rho_of(i, Some(j), s) - self.rho_of(i, label, s);
            let xs: Vec<f64> = (0..=4).map(|k| a.s + (b.s - a.s) * k as f64 / 4.0).collect();
            let ms: Vec<f64> = xs.iter().map(|&s| margin(s)).collect();
            if let Some(k) = (1..4).find(|&k| ms[k] < 0.0) {
                return Some(xs[k]);
            }
            let kmin = (0..5).min_by(|&p, &q| ms[p].total_cmp(&ms[q])).unwrap();
            if !(1..4).contains(&kmin) || !ms[kmin].is_finite() {
                continue;
            }
            // golden-section search for the interior minimum of the margin
            let (mut lo, mut hi) = (xs[kmin - 1], xs[kmin + 1]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = hi - g * (hi - lo);
            let mut d = lo + g * (hi - lo);
            let (mut fc, mut fd) = (margin(c), margin(d));
            for _ in 0..60 {
                if fc < 0.0 {
                    return Some(c);
                }
                if fd < 0.0 {
                    return Some(d);
                }
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - g * (hi - lo);
                    fc = margin(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + g * (hi - lo);
                    fd = margin(d);
                }
            }
        }
        None
    }

    fn refine(&self, i: usize, lo: &Sample, hi: &Sample, out: &mut Vec<Sample>, depth: u32) {
        let mid = 0.5 * (lo.s + hi.s);
        if depth > 90 || mid <= lo.s || mid >= hi.s {
            return;
        }
        let m = self.eval(i, mid);
        if m.label != lo.label {
            self.refine(i, lo, &m, out, depth + 1);
        }
        out.push(m);
        if m.label != hi.label {
            self.refine(i, &m, hi, out, depth + 1);
        }
    }

    fn envelope(&self, i: usize, seeds: &[f64]) -> SiteEnvelope {
        let frame = &self.frames[i];
        let total = frame.total;
        let mut params = self.initial_params(i);
        params.extend(seeds.iter().map(|&s| frame.wrap(s)));
        params.sort_by(f64::total_cmp);
        params.dedup();
        let mut samples: Vec<Sample> = params.iter().map(|&s| self.eval(i, s)).collect();

        for _ in 0..4 {
            let mut extra = Vec::new();
            let m = samples.len();
            for k in 0..m {
                let a = samples[k];
                let mut b = samples[(k + 1) % m];
                if k + 1 == m {
                    b.s += total;
                }
                if a.label == b.label {
                    if let Some(s) = self.find_dip(i, &a, &b) {
                        extra.push(self.eval(i, frame.wrap(s)));
                    }
                }
            }
            if extra.is_empty() {
                break;
            }
            samples.extend(extra);
            samples.sort_by(|a, b| a.s.total_cmp(&b.s));
            samples.dedup_by(|a, b| a.s == b.s);
        }

        let m = samples.len();
        let mut extra = Vec::new();
        for k in 0..m {
            let a = samples[k];
            let mut b = samples[(k + 1) % m];
            if k + 1 == m {
                b.s += total;
            }
            if a.label != b.label {
                self.refine(i, &a, &b, &mut extra, 0);
            }
        }
        for e in &mut extra {
            e.s = frame.wrap(e.s);
        }
        samples.extend(extra);
        samples.sort_by(|a, b| a.s.total_cmp(&b.s));
        samples.dedup_by(|a, b| a.s == b.s);

        let m = samples.len();
        let mut breakpoints = Vec::new();
        for k in 0..m {
            let a = samples[k];
            let mut b = samples[(k + 1) % m];
            if k + 1 == m {
                b.s += total;
            }
            if a.label == b.label {
                continue;
            }
            let (rho, x) = match (a.label, b.label) {
                (Some(_), Some(_)) => {
                    let ra = frame.ray(a.s);
                    let rb = frame.ray(b.s);
                    let pa = ra.a + ra.u * a.rho;
                    let pb = rb.a + rb.u * b.rho;
                    (0.5 * (a.rho + b.rho), pa.lerp(pb, 0.5))
                }
                _ => (f64::INFINITY, Point::ORIGIN),
            };
            breakpoints.push(Breakpoint { lo: a.s, hi: b.s, from: a.label, to: b.label, rho, x });
        }
        let spans = if breakpoints.is_empty() {
            vec![FaceSpan { start: 0.0, end: total, label: samples.first().and_then(|s| s.label) }]
        } else {
            let nb = breakpoints.len();
            (0..nb)
                .map(|k| {
                    let b0 = &breakpoints[k];
                    let b1 = &breakpoints[(k + 1) % nb];
                    let mut end = b1.lo;
                    while end < b0.hi {
                        end += total;
                    }
                    FaceSpan { start: b0.hi, end, label: b0.to }
                })
                .collect()
        };
        SiteEnvelope { breakpoints, spans }
    }

    /// The midpoint of the closest pair of sites `i` and `j`, with half
    /// their distance, if it lies on the given span of `i`'s envelope.
    fn midpoint_on_span(&self, i: usize, j: usize, span: &FaceSpan) -> Option<(f64, Point)> {
        let (pi, pj) = (self.sites.get(i), self.sites.get(j));
        let (d, p, q) = crate::geom::dist_polygon_polygon(pi, pj).ok()?;
        let m = p.lerp(q, 0.5);
        let frame = &self.frames[i];
        let s = frame.locate(pi, m);
        let off = (s - span.start).rem_euclid(frame.total);
        if off > span.end - span.start {
            return None;
        }
        let t = hit(&frame.ray(s), pj).t;
        ((t - 0.5 * d).abs() <= TAU * d.max(1.0) && self.eval(i, s).label == Some(j)).then_some((0.5 * d, m))
    }

    /// A fourth site at the same distance from a vertex breaks genericity.
    fn check_fourth_site(&self, tri: [usize; 3], x: Point, value: f64) -> Result<(), VoronoiError> {
        for &(lb, l) in &self.order[tri[0]] {
            if 0.5 * lb > value + TAU {
                break;
            }
            if tri.contains(&l) {
                continue;
            }
            if crate::geom::dist_point_polygon(x, self.sites.get(l)).0 <= value + TAU {
                return Err(VoronoiError::DegeneratePosition(format!(
                    "sites {:?} and {} are equidistant from ({}, {})",
                    tri, l, x.x, x.y
                )));
            }
        }
        Ok(())
    }

    /// Newton polish of an equidistant point of three sites.
    fn polish(&self, tri: [usize; 3], x0: Point) -> Point {
        let polys = [self.sites.get(tri[0]), self.sites.get(tri[1]), self.sites.get(tri[2])];
        let eval = |x: Point| {
            let mut d = [0.0; 3];
            let mut g = [Point::ORIGIN; 3];
            for k in 0..3 {
                let (dist, w) = exterior_nearest(x, polys[k]);
                d[k] = dist;
                g[k] = (x - w) * (1.0 / dist);
            }
            (d, g)
        };
        let mut x = x0;
        let (mut d, mut g) = eval(x);
        let res = |d: &[f64; 3]| (d[0] - d[1]).abs().max((d[0] - d[2]).abs());
        for _ in 0..8 {
            let r = res(&d);
            if r <= 1e-15 * d[0].max(1.0) {
                break;
            }
            let r1 = g[0] - g[1];
            let r2 = g[0] - g[2];
            let det = r1.cross(r2);
            if det.abs() < 1e-300 {
                break;
            }
            let f1 = d[0] - d[1];
            let f2 = d[0] - d[2];
            // solve [r1; r2] dx = -[f1; f2]
            let dx = Point::new(-(f1 * r2.y - f2 * r1.y) / det, -(r1.x * f2 - r2.x * f1) / det);
            let xn = x + dx;
            let (dn, gn) = eval(xn);
            if res(&dn) < r {
                x = xn;
                d = dn;
                g = gn;
            } else {
                break;
            }
        }
        x
    }
}

/// Builds the Voronoi diagram with the default sampling configuration.
pub fn build_voronoi(sites: &SiteSet) -> Result<VoronoiDiagram, VoronoiError> {
    build_voronoi_with(sites, &VoronoiConfig::default())
}

pub fn build_voronoi_with(sites: &SiteSet, config: &VoronoiConfig) -> Result<VoronoiDiagram, VoronoiError> {
    let n = sites.len();
    let b = Builder::new(sites, config);
    if n <= 1 {
        return Ok(VoronoiDiagram {
            sites: sites.clone(),
            vertices: Vec::new(),
            edges: Vec::new(),
            faces: vec![Face::default(); n],
            frames: b.frames,
        });
    }

    let mut seeds: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut envs: Vec<SiteEnvelope> = (0..n).map(|i| b.envelope(i, &[])).collect();
    let mut clusters;
    let mut round = 0;
    loop {
        clusters = cluster_vertices(&envs, b.scale)?;
        let mut dirty = vec![false; n];
        for c in &clusters {
            if c.views.len() < 3 {
                b.check_fourth_site(c.tri, c.x, c.rho)?;
            }
            for &site in &c.tri {
                if !c.views.iter().any(|&(v, _)| v == site) {
                    let s = b.frames[site].locate(sites.get(site), c.x);
                    let w = 1e-9 * b.frames[site].total;
                    seeds[site].extend([s - w, s, s + w]);
                    dirty[site] = true;
                }
            }
        }
        if !dirty.iter().any(|&d| d) {
            break;
        }
        round += 1;
        if round > config.repair_rounds {
            return Err(VoronoiError::Inconsistent("Voronoi vertex not seen by all of its sites".into()));
        }
        for i in (0..n).filter(|&i| dirty[i]) {
            envs[i] = b.envelope(i, &seeds[i]);
        }
    }

    // vertices
    let mut vertices = Vec::with_capacity(clusters.len());
    for c in &clusters {
        let x = b.polish(c.tri, c.x);
        let d: Vec<f64> = c.tri.iter().map(|&k| exterior_nearest(x, sites.get(k)).0).collect();
        let spread = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - d.iter().cloned().fold(f64::INFINITY, f64::min);
        let (x, value) = if spread <= 10.0 * TAU {
            (x, d.iter().sum::<f64>() / 3.0)
        } else {
            (c.x, c.rho)
        };
        b.check_fourth_site(c.tri, x, value)?;
        vertices.push(VoronoiVertex { position: x, sites: c.tri, value });
    }
    check_vertex_separation(&vertices)?;

    // map (site view, breakpoint index) -> vertex id
    let mut bp_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    for (vid, c) in clusters.iter().enumerate() {
        for &(site, k) in &c.views {
            bp_vertex.insert((site, k), vid);
        }
    }

    // edges from the lower-id view, matched from the higher-id view
    let mut edges: Vec<VoronoiEdge> = Vec::new();
    let mut pending: HashMap<(usize, usize, Option<usize>, Option<usize>), Vec<usize>> = HashMap::new();
    let mut faces: Vec<Face> = vec![Face::default(); n];
    let end_of = |site: usize, k: usize, bp: &Breakpoint, frame: &Frame| -> EdgeEnd {
        match bp_vertex.get(&(site, k)) {
            Some(&v) => EdgeEnd::Vertex(v),
            None => {
                let s = if bp.from.is_none() { bp.hi } else { bp.lo };
                EdgeEnd::Infinite { direction: frame.ray(s).u }
            }
        }
    };
    let key_of = |i: usize, j: usize, e0: &EdgeEnd, e1: &EdgeEnd| {
        let v = |e: &EdgeEnd| match e {
            EdgeEnd::Vertex(v) => Some(*v),
            _ => None,
        };
        let (a, c) = (v(e0), v(e1));
        (i.min(j), i.max(j), a.min(c), a.max(c))
    };
    for i in 0..n {
        let env = &envs[i];
        let nb = env.breakpoints.len();
        for (k, span) in env.spans.iter().enumerate() {
            let Some(j) = span.label else { continue };
            if nb == 0 {
                return Err(VoronoiError::Inconsistent(format!("site {i} is enclosed by site {j}")));
            }
            if i < j {
                let e0 = end_of(i, k, &env.breakpoints[k], &b.frames[i]);
                let k1 = (k + 1) % nb;
                let e1 = end_of(i, k1, &env.breakpoints[k1], &b.frames[i]);
                let arcs = build_arcs(&b, i, j, span, &e0, &e1, &vertices);
                let mut edge = VoronoiEdge {
                    sites: (i, j),
                    arcs,
                    ends: [e0, e1],
                    critical_value: f64::INFINITY,
                    critical_point: Point::ORIGIN,
                };
                let (mut v, mut p) = critical_of(&b.frames, sites, &edge, &vertices);
                if let Some((mv, mp)) = b.midpoint_on_span(i, j, span) {
                    if mv < v - 1e-12 * v.max(1.0) {
                        (v, p) = (mv, mp);
                    }
                }
                edge.critical_value = v;
                edge.critical_point = p;
                let key = key_of(i, j, &e0, &e1);
                pending.entry(key).or_default().push(edges.len());
                edges.push(edge);
            }
        }
    }
    let mut claimed: HashMap<(usize, (usize, usize, Option<usize>, Option<usize>)), usize> = HashMap::new();
    for i in 0..n {
        let env = &envs[i];
        let nb = env.breakpoints.len();
        for (k, span) in env.spans.iter().enumerate() {
            faces[i].spans.push(*span);
            let Some(j) = span.label else { continue };
            let e0 = end_of(i, k, &env.breakpoints[k], &b.frames[i]);
            let k1 = (k + 1) % nb;
            let e1 = end_of(i, k1, &env.breakpoints[k1], &b.frames[i]);
            let key = key_of(i, j, &e0, &e1);
            let list = pending.get(&key).ok_or_else(|| {
                VoronoiError::Inconsistent(format!("edge between sites {i} and {j} seen from one side only"))
            })?;
            let used = claimed.entry((i, key)).or_insert(0);
            let id = *list.get(*used).ok_or_else(|| {
                VoronoiError::Inconsistent(format!("edge between sites {i} and {j} seen from one side only"))
            })?;
            *used += 1;
            faces[i].edges.push(id);
        }
    }

    // Euler relation on the sphere and vertex degrees
    let nv = vertices.len() as i64;
    let ne = edges.len() as i64;
    if nv + 1 - ne + n as i64 != 2 {
        return Err(VoronoiError::Inconsistent(format!(
            "Euler relation fails: V={nv} E={ne} F={n}"
        )));
    }
    let mut degree = vec![0usize; vertices.len()];
    for e in &edges {
        for end in &e.ends {
            if let EdgeEnd::Vertex(v) = end {
                degree[*v] += 1;
            }
        }
    }
    if let Some(v) = degree.iter().position(|&d| d != 3) {
        return Err(VoronoiError::Inconsistent(format!("vertex {v} has degree {}", degree[v])));
    }

    Ok(VoronoiDiagram { sites: sites.clone(), vertices, edges, faces, frames: b.frames })
}

struct Cluster {
    tri: [usize; 3],
    x: Point,
    rho: f64,
    /// (site, breakpoint index in that site's envelope)
    views: Vec<(usize, usize)>,
}

fn cluster_vertices(envs: &[SiteEnvelope], scale: f64) -> Result<Vec<Cluster>, VoronoiError> {
    let mut by_tri: BTreeMap<[usize; 3], Vec<Cluster>> = BTreeMap::new();
    for (i, env) in envs.iter().enumerate() {
        for (k, bp) in env.breakpoints.iter().enumerate() {
            let (Some(a), Some(c)) = (bp.from, bp.to) else { continue };
            let mut tri = [i, a, c];
            tri.sort_unstable();
            let list = by_tri.entry(tri).or_default();
            let tol = 1e-6 * bp.rho.max(1.0).max(1e-3 * scale);
            match list.iter_mut().find(|c| c.x.dist(bp.x) <= tol) {
                Some(c) => {
                    if c.views.iter().any(|&(v, _)| v == i) {
                        return Err(VoronoiError::DegeneratePosition(format!(
                            "two Voronoi vertices of sites {tri:?} nearly coincide near ({}, {})",
                            bp.x.x, bp.x.y
                        )));
                    }
                    c.views.push((i, k));
                }
                None => list.push(Cluster { tri, x: bp.x, rho: bp.rho, views: vec![(i, k)] }),
            }
        }
    }
    let mut out: Vec<Cluster> = by_tri.into_values().flatten().collect();
    out.sort_by(|a, b| a.tri.cmp(&b.tri).then(a.x.lex_cmp(&b.x)));
    Ok(out)
}

fn check_vertex_separation(vertices: &[VoronoiVertex]) -> Result<(), VoronoiError> {
    let mut idx: Vec<usize> = (0..vertices.len()).collect();
    idx.sort_by(|&a, &b| vertices[a].position.x.total_cmp(&vertices[b].position.x));
    for (k, &a) in idx.iter().enumerate() {
        for &b in &idx[k + 1..] {
            let (pa, pb) = (vertices[a].position, vertices[b].position);
            if pb.x - pa.x > TAU {
                break;
            }
            if pa.dist(pb) <= TAU {
                return Err(VoronoiError::DegeneratePosition(format!(
                    "Voronoi vertices of {:?} and {:?} coincide at ({}, {})",
                    vertices[a].sites, vertices[b].sites, pa.x, pa.y
                )));
            }
        }
    }
    Ok(())
}

fn features_kind(i_feat: Feature, j_feat: Feature, sites: &SiteSet) -> ArcKind {
    let point = |f: Feature| sites.get(f.site).vertex(f.index);
    let line = |f: Feature| sites.get(f.site).edge(f.index);
    match (i_feat.kind, j_feat.kind) {
        (FeatureKind::Vertex, FeatureKind::Edge) => ArcKind::Parabolic { focus: point(i_feat), directrix: line(j_feat) },
        (FeatureKind::Edge, FeatureKind::Vertex) => ArcKind::Parabolic { focus: point(j_feat), directrix: line(i_feat) },
        _ => ArcKind::LineSegment,
    }
}

fn build_arcs(
    b: &Builder<'_>,
    i: usize,
    j: usize,
    span: &FaceSpan,
    e0: &EdgeEnd,
    e1: &EdgeEnd,
    vertices: &[VoronoiVertex],
) -> Vec<BisectorArc> {
    let frame = &b.frames[i];
    let qj = b.sites.get(j);
    let total = frame.total;
    let (sa, sb) = (span.start, span.end);
    // cut points at piece boundaries
    let mut cuts = vec![sa];
    let mut wraps = 0.0;
    while wraps <= sb {
        for p in &frame.pieces {
            let s = p.start + wraps;
            if s > sa && s < sb {
                cuts.push(s);
            }
        }
        wraps += total;
    }
    cuts.push(sb);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let feat_at = |s: f64| hit(&frame.ray(s), qj).feature;
    let mut pieces: Vec<(f64, f64, Feature)> = Vec::new();
    for w in cuts.windows(2) {
        let (c0, c1) = (w[0], w[1]);
        const K: usize = 16;
        // interior samples, plus the ends where the hit is finite
        let mut ss: Vec<f64> = (0..K).map(|k| c0 + (c1 - c0) * (k as f64 + 0.5) / K as f64).collect();
        for (end, front) in [(c0, true), (c1, false)] {
            if hit(&frame.ray(end), qj).t.is_finite() {
                if front {
                    ss.insert(0, end);
                } else {
                    ss.push(end);
                }
            }
        }
        let fs: Vec<Feature> = ss.iter().map(|&s| feat_at(s)).collect();
        let mut changes: Vec<(f64, Feature)> = Vec::new();
        for k in 0..ss.len() - 1 {
            if fs[k] != fs[k + 1] {
                split_features(&feat_at, (ss[k], fs[k]), (ss[k + 1], fs[k + 1]), &mut changes, 0);
            }
        }
        let mut start = c0;
        let mut cur = fs[0];
        for (b, f) in changes {
            pieces.push((start, b, cur));
            start = b;
            cur = f;
        }
        pieces.push((start, c1, cur));
    }

    let point_at = |s: f64| {
        let r = frame.ray(s);
        let t = hit(&r, qj).t;
        r.a + r.u * t
    };
    let end_point = |e: &EdgeEnd| match *e {
        EdgeEnd::Vertex(v) => ArcEnd::At(vertices[v].position),
        EdgeEnd::Infinite { direction } => ArcEnd::Infinite { direction },
    };
    let np = pieces.len();
    pieces
        .iter()
        .enumerate()
        .map(|(k, &(s0, s1, fj))| {
            let fi = frame.feature(i, frame.piece_at(frame.wrap(0.5 * (s0 + s1))));
            let start = if k == 0 { end_point(e0) } else { ArcEnd::At(point_at(s0)) };
            let end = if k + 1 == np { end_point(e1) } else { ArcEnd::At(point_at(s1)) };
            BisectorArc {
                kind: features_kind(fi, fj, b.sites),
                features: [fi, fj],
                start,
                end,
                frame_site: i,
                s_range: (s0, s1),
            }
        })
        .collect()
}

/// Locates every change of the hit feature between two parameters,
/// recording `(parameter, feature after it)` in order.
fn split_features(
    feat_at: &impl Fn(f64) -> Feature,
    lo: (f64, Feature),
    hi: (f64, Feature),
    out: &mut Vec<(f64, Feature)>,
    depth: u32,
) {
    let mid = 0.5 * (lo.0 + hi.0);
    if depth > 90 || mid <= lo.0 || mid >= hi.0 {
        out.push((lo.0, hi.1));
        return;
    }
    let fm = feat_at(mid);
    if fm != lo.1 {
        split_features(feat_at, lo, (mid, fm), out, depth + 1);
    }
    if fm != hi.1 {
        split_features(feat_at, (mid, fm), hi, out, depth + 1);
    }
}

/// Parameter in `[s0, s1]` minimizing the distance along an arc, from the
/// closed form of the feature pair.
fn arc_argmin(frame: &Frame, sites: &SiteSet, arc: &BisectorArc) -> f64 {
    let (s0, s1) = arc.s_range;
    let mid = 0.5 * (s0 + s1);
    let k = frame.piece_at(frame.wrap(mid));
    let p = &frame.pieces[k];
    let l_mid = frame.wrap(mid) - p.start;
    let l0 = l_mid - (mid - s0);
    let l1 = l_mid + (s1 - mid);
    let other = arc.features[1];
    let q = sites.get(other.site);
    let to_s = |l: f64| mid + (l - l_mid);
    match p.kind {
        PieceKind::Wedge { .. } => {
            let target = match other.kind {
                FeatureKind::Vertex => (q.vertex(other.index) - p.base).angle(),
                FeatureKind::Edge => (-q.normal(other.index)).angle(),
            };
            let lt = wrap_pm(target - p.angle0);
            if lt >= l0 && lt <= l1 {
                to_s(lt)
            } else {
                let d0 = wrap_pm(p.angle0 + l0 - target).abs();
                let d1 = wrap_pm(p.angle0 + l1 - target).abs();
                if d0 <= d1 {
                    s0
                } else {
                    s1
                }
            }
        }
        PieceKind::Strip { .. } => match other.kind {
            FeatureKind::Vertex => to_s(p.dir.dot(q.vertex(other.index) - p.base).clamp(l0, l1)),
            FeatureKind::Edge => {
                let slope = q.normal(other.index).dot(p.dir);
                if slope > 1e-15 {
                    s0
                } else if slope < -1e-15 {
                    s1
                } else {
                    mid
                }
            }
        },
    }
}

fn critical_of(frames: &[Frame], sites: &SiteSet, edge: &VoronoiEdge, vertices: &[VoronoiVertex]) -> (f64, Point) {
    let mut cands: Vec<(f64, Point)> = Vec::new();
    for end in &edge.ends {
        if let EdgeEnd::Vertex(v) = end {
            cands.push((vertices[*v].value, vertices[*v].position));
        }
    }
    for arc in &edge.arcs {
        let frame = &frames[arc.frame_site];
        let other = sites.get(arc.features[1].site);
        let mut ss = vec![arc_argmin(frame, sites, arc)];
        if !arc.start.is_infinite() {
            ss.push(arc.s_range.0);
        }
        if !arc.end.is_infinite() {
            ss.push(arc.s_range.1);
        }
        for s in ss {
            let r = frame.ray(s);
            let t = hit(&r, other).t;
            if t.is_finite() {
                cands.push((t, r.a + r.u * t));
            }
        }
    }
    let best = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let slack = 1e-12 * best.max(1.0);
    cands
        .into_iter()
        .filter(|c| c.0 <= best + slack)
        .min_by(|a, b| a.1.lex_cmp(&b.1))
        .map(|(_, p)| (best, p))
        .unwrap_or((f64::INFINITY, Point::ORIGIN))
}

/// Minimum of the distance to the defining sites over the closed arc chain
/// of `edge`, with the lexicographically smallest point attaining it.
pub fn edge_critical_value(edge: &VoronoiEdge, diagram: &VoronoiDiagram) -> (f64, Point) {
    critical_of(&diagram.frames, &diagram.sites, edge, &diagram.vertices)
}

/// Mean distance from a vertex to its three defining sites.
pub fn vertex_value(v: &VoronoiVertex, sites: &SiteSet) -> Result<f64, VoronoiError> {
    let d = v.sites.map(|k| crate::geom::dist_point_polygon(v.position, sites.get(k)).0);
    mean_of_three(d)
}

pub(crate) fn mean_of_three(d: [f64; 3]) -> Result<f64, VoronoiError> {
    let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi - lo > 10.0 * TAU {
        return Err(VoronoiError::InconsistentVertex { spread: hi - lo });
    }
    Ok((d[0] + d[1] + d[2]) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{dist_point_polygon, validate_polygon, DEFAULT_VERTEX_CAP};

    fn rect(id: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon {
        validate_polygon(
            &[Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)],
            id,
            DEFAULT_VERTEX_CAP,
        )
        .unwrap()
    }

    fn unit_at(id: usize, cx: f64, cy: f64) -> ConvexPolygon {
        rect(id, cx - 0.5, cy - 0.5, cx + 0.5, cy + 0.5)
    }

    #[test]
    fn frame_roundtrip() {
        let p = rect(0, 0.0, 0.0, 2.0, 1.0);
        let f = Frame::new(&p);
        assert!((f.total - (6.0 + TWO_PI)).abs() < 1e-12);
        for k in 0..400 {
            let s = f.total * (k as f64 + 0.5) / 400.0;
            let r = f.ray(s);
            let x = r.a + r.u * 0.7;
            assert!((dist_point_polygon(x, &p).0 - 0.7).abs() < 1e-12);
            assert!((f.locate(&p, x) - s).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn ray_hit_is_equidistant() {
        let p = rect(0, 0.0, 0.0, 1.0, 1.0);
        let q = validate_polygon(&[Point::new(3.0, 0.0), Point::new(5.0, 1.0), Point::new(3.5, 2.0)], 1, 64).unwrap();
        let f = Frame::new(&p);
        for k in 0..200 {
            let r = f.ray(f.total * k as f64 / 200.0);
            let h = hit(&r, &q);
            if h.t.is_finite() {
                let x = r.a + r.u * h.t;
                assert!((dist_point_polygon(x, &q).0 - h.t).abs() < 1e-9 * h.t.max(1.0));
            }
        }
    }

    #[test]
    fn two_squares() {
        let sites = SiteSet::new(vec![rect(0, 0.0, 0.0, 1.0, 1.0), rect(1, 2.0, 0.0, 3.0, 1.0)]).unwrap();
        let d = build_voronoi(&sites).unwrap();
        assert_eq!(d.vertices.len(), 0);
        assert_eq!(d.edges.len(), 1);
        assert_eq!(d.faces.len(), 2);
        let e = &d.edges[0];
        assert!(e.ends.iter().all(|end| matches!(end, EdgeEnd::Infinite { .. })));
        assert!((e.critical_value - 0.5).abs() < 1e-12);
        assert!((e.critical_point.x - 1.5).abs() < 1e-12 && e.critical_point.y.abs() < 1e-12);
        for arc in &e.arcs {
            for t in [0.1, 0.5, 0.9] {
                if let Some(x) = d.point_on_arc(arc, t) {
                    assert!((x.x - 1.5).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn corner_corner_critical_value() {
        let sites = SiteSet::new(vec![rect(0, 0.0, 0.0, 1.0, 1.0), rect(1, 2.0, 2.0, 3.0, 3.0)]).unwrap();
        let d = build_voronoi(&sites).unwrap();
        let (v, w) = edge_critical_value(&d.edges[0], &d);
        assert!((v - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        assert!(w.dist(Point::new(1.5, 1.5)) < 1e-9);
    }

    #[test]
    fn single_site() {
        let sites = SiteSet::new(vec![rect(0, 0.0, 0.0, 1.0, 1.0)]).unwrap();
        let d = build_voronoi(&sites).unwrap();
        assert_eq!((d.faces.len(), d.edges.len(), d.vertices.len()), (1, 0, 0));
    }

    #[test]
    fn three_squares() {
        let sites = SiteSet::new(vec![unit_at(0, 0.0, 0.0), unit_at(1, 4.0, 0.0), unit_at(2, 2.0, 3.0)]).unwrap();
        let d = build_voronoi(&sites).unwrap();
        assert_eq!(d.vertices.len(), 1);
        assert_eq!(d.edges.len(), 3);
        let v = &d.vertices[0];
        assert_eq!(v.sites, [0, 1, 2]);
        assert!((vertex_value(v, &sites).unwrap() - v.value).abs() < 1e-12);
        // the vertex lies on x = 2 by symmetry
        assert!((v.position.x - 2.0).abs() < 1e-9);
        for f in &d.faces {
            assert_eq!(f.edges.len(), 2);
        }
    }

    #[test]
    fn vertex_value_averages() {
        assert_eq!(mean_of_three([1.3, 1.3, 1.3]).unwrap(), 1.3);
        let r = 2.0;
        assert!((mean_of_three([r, r + TAU / 2.0, r - TAU / 2.0]).unwrap() - r).abs() < 1e-15);
        assert!(matches!(mean_of_three([1.0, 1.0, 1.0 + 1e-6]), Err(VoronoiError::InconsistentVertex { .. })));
    }

    #[test]
    fn dump_format() {
        let sites = SiteSet::new(vec![rect(0, 0.0, 0.0, 1.0, 1.0), rect(1, 2.0, 0.0, 3.0, 1.0)]).unwrap();
        let d = build_voronoi(&sites).unwrap();
        let text = d.dump();
        let line = text.lines().next().unwrap();
        let toks: Vec<&str> = line.split(' ').collect();
        assert_eq!(toks[0], "E");
        assert_eq!(toks[1..3], ["0", "1"]);
        assert_eq!(toks[3], "0.5");
        assert_eq!(toks.len(), 7);
    }
}
