use offsetph_core::geom::{dist_polygon_polygon, orient, Orientation};
use offsetph_core::{validate_polygon, ConvexPolygon, Point, SiteSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    /// Side of the square the polygons are placed in.
    pub extent: f64,
    pub min_side: f64,
    pub max_side: f64,
    pub points_per_polygon: usize,
    pub max_rejections: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n: 10,
            seed: 0,
            extent: 100.0,
            min_side: 2.0,
            max_side: 10.0,
            points_per_polygon: 5,
            max_rejections: 100_000,
        }
    }
}

/// Counterclockwise hull without collinear points.
fn hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup();
    let mut lower: Vec<Point> = Vec::new();
    let mut upper: Vec<Point> = Vec::new();
    for (chain, seq) in [(&mut lower, pts.clone()), (&mut upper, pts.into_iter().rev().collect())] {
        for p in seq {
            while chain.len() >= 2 && orient(chain[chain.len() - 2], chain[chain.len() - 1], p) != Orientation::CounterClockwise
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain.pop();
    }
    lower.extend(upper);
    lower
}

/// Coordinates are rounded to four decimals so files stay short.
fn coord(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 1e4).round() / 1e4
}

/// Random disjoint convex polygons: each candidate is the hull of a few
/// uniform points in a random axis-parallel rectangle inside the square, and
/// is kept only if it misses every polygon placed so far.
pub fn generate(cfg: &GenConfig) -> Result<SiteSet, CliError> {
    if cfg.n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    if !(cfg.min_side > 0.0 && cfg.min_side <= cfg.max_side && cfg.max_side <= cfg.extent) {
        return Err(CliError::Usage(format!("bad side range [{}, {}]", cfg.min_side, cfg.max_side)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut polys: Vec<ConvexPolygon> = Vec::with_capacity(cfg.n);
    let mut rejections = 0;
    while polys.len() < cfg.n {
        if rejections >= cfg.max_rejections {
            return Err(CliError::Generator { placed: polys.len(), n: cfg.n, rejections });
        }
        let w = if cfg.min_side < cfg.max_side { rng.gen_range(cfg.min_side..cfg.max_side) } else { cfg.min_side };
        let h = if cfg.min_side < cfg.max_side { rng.gen_range(cfg.min_side..cfg.max_side) } else { cfg.min_side };
        let x0 = rng.gen_range(0.0..=cfg.extent - w);
        let y0 = rng.gen_range(0.0..=cfg.extent - h);
        let pts: Vec<Point> = (0..cfg.points_per_polygon)
            .map(|_| Point::new(coord(&mut rng, x0, x0 + w), coord(&mut rng, y0, y0 + h)))
            .collect();
        let candidate = validate_polygon(&hull(pts), polys.len(), cfg.points_per_polygon.max(3));
        let Ok(p) = candidate else {
            rejections += 1;
            continue;
        };
        let clear = polys
            .iter()
            .all(|q| p.bbox().strictly_disjoint(&q.bbox()) || dist_polygon_polygon(&p, q).is_ok());
        if clear {
            polys.push(p);
            rejections = 0;
        } else {
            rejections += 1;
        }
    }
    SiteSet::new(polys).map_err(|e| CliError::Internal(e.to_string()))
}
