use std::time::Instant;

use offsetph_core::persistence::compute_barcode;
use offsetph_core::sampling::sample_filtration;
use offsetph_core::{build_voronoi, restricted_nerve, unrestricted_nerve, Barcode, FilteredComplex, SamplingError, SiteSet};

use crate::barcode_file::{BarcodeFile, Meta};
use crate::CliError;

/// Bars at most this long are dropped from written barcodes by default.
pub const ZERO_BAR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pipeline {
    Restricted,
    Cech { cap: usize },
    Sample { epsilon: f64 },
}

impl Pipeline {
    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Restricted => "restricted",
            Pipeline::Cech { .. } => "cech",
            Pipeline::Sample { .. } => "sample",
        }
    }
}

/// A barcode with the filtration size and phase timings that produced it.
#[derive(Clone, Debug)]
pub struct Run {
    pub barcode: Barcode,
    pub filtration_size: usize,
    pub filtration_seconds: f64,
    pub persistence_seconds: f64,
}

impl Run {
    pub fn total_seconds(&self) -> f64 {
        self.filtration_seconds + self.persistence_seconds
    }

    pub fn to_file(&self, sites: &SiteSet, pipeline: Pipeline, show_zero_bars: bool, timing: bool) -> BarcodeFile {
        let barcode = if show_zero_bars { self.barcode.clone() } else { self.barcode.without_zero_bars(ZERO_BAR_TOL) };
        let meta = Meta {
            pipeline: pipeline.name().to_string(),
            epsilon: match pipeline {
                Pipeline::Sample { epsilon } => Some(epsilon),
                _ => None,
            },
            n_sites: sites.len(),
            filtration_size: self.filtration_size,
            elapsed_seconds: timing.then(|| self.total_seconds()),
        };
        BarcodeFile::new(barcode, meta)
    }
}

fn filtration(sites: &SiteSet, pipeline: Pipeline) -> Result<FilteredComplex, CliError> {
    match pipeline {
        Pipeline::Restricted => {
            let diagram = build_voronoi(sites).map_err(|e| CliError::Degenerate(e.to_string()))?;
            Ok(restricted_nerve(&diagram))
        }
        Pipeline::Cech { cap } => {
            if sites.len() > cap {
                return Err(CliError::CechCap { n: sites.len(), cap });
            }
            Ok(unrestricted_nerve(sites))
        }
        Pipeline::Sample { epsilon } => match sample_filtration(sites, epsilon) {
            Ok((_, fc)) => Ok(fc),
            Err(SamplingError::SampleTooLarge { cap }) => Err(CliError::SampleTooLarge { cap }),
            Err(SamplingError::BadEpsilon(e)) => Err(CliError::Usage(format!("epsilon must be positive, got {e}"))),
            Err(e) => Err(CliError::Internal(e.to_string())),
        },
    }
}

pub fn run_pipeline(sites: &SiteSet, pipeline: Pipeline) -> Result<Run, CliError> {
    let t0 = Instant::now();
    let fc = filtration(sites, pipeline)?;
    let t1 = Instant::now();
    let mut barcode = compute_barcode(&fc).map_err(|e| CliError::Internal(e.to_string()))?;
    let t2 = Instant::now();
    barcode.sort();
    Ok(Run {
        barcode,
        filtration_size: fc.len(),
        filtration_seconds: (t1 - t0).as_secs_f64(),
        persistence_seconds: (t2 - t1).as_secs_f64(),
    })
}
