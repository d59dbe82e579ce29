use std::fmt::Write as _;

use offsetph_core::{bottleneck_distance, Barcode, Interval};
use serde::Deserialize;

use crate::{fmt_num, CliError};

/// Run metadata stored next to the bars.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub pipeline: String,
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub n_sites: usize,
    pub filtration_size: usize,
    /// Wall-clock seconds; `null` unless timing was requested.
    pub elapsed_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarcodeFile {
    pub barcode: Barcode,
    pub meta: Meta,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum End {
    Num(f64),
    Word(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    dim0: Vec<(f64, End)>,
    dim1: Vec<(f64, End)>,
    meta: Meta,
}

fn intervals(raw: Vec<(f64, End)>, dim: usize) -> Result<Vec<Interval>, CliError> {
    raw.into_iter()
        .enumerate()
        .map(|(k, (birth, end))| {
            let death = match end {
                End::Num(d) if d >= birth => d,
                End::Num(d) => {
                    return Err(CliError::Malformed(format!("dim{dim} bar {k}: death {d} before birth {birth}")))
                }
                End::Word(w) if w == "inf" => f64::INFINITY,
                End::Word(w) => return Err(CliError::Malformed(format!("dim{dim} bar {k}: unexpected death {w:?}"))),
            };
            Ok(Interval::new(birth, death))
        })
        .collect()
}

fn write_bars(out: &mut String, name: &str, bars: &[Interval]) {
    let _ = write!(out, "  \"{name}\": [");
    for (k, b) in bars.iter().enumerate() {
        let death = if b.is_essential() { "\"inf\"".to_string() } else { fmt_num(b.death) };
        let _ = write!(out, "{}\n    [{}, {}]", if k == 0 { "" } else { "," }, fmt_num(b.birth), death);
    }
    out.push_str(if bars.is_empty() { "],\n" } else { "\n  ],\n" });
}

impl BarcodeFile {
    pub fn new(mut barcode: Barcode, meta: Meta) -> Self {
        barcode.sort();
        BarcodeFile { barcode, meta }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: Raw = serde_json::from_str(text).map_err(|e| CliError::Malformed(e.to_string()))?;
        let barcode = Barcode { dim0: intervals(raw.dim0, 0)?, dim1: intervals(raw.dim1, 1)? };
        Ok(BarcodeFile::new(barcode, raw.meta))
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        write_bars(&mut out, "dim0", &self.barcode.dim0);
        write_bars(&mut out, "dim1", &self.barcode.dim1);
        let m = &self.meta;
        let _ = write!(out, "  \"meta\": {{\"pipeline\": {}", serde_json::to_string(&m.pipeline).unwrap());
        if let Some(e) = m.epsilon {
            let _ = write!(out, ", \"epsilon\": {}", fmt_num(e));
        }
        let elapsed = m.elapsed_seconds.map_or("null".to_string(), fmt_num);
        let _ = writeln!(
            out,
            ", \"n_sites\": {}, \"filtration_size\": {}, \"elapsed_seconds\": {elapsed}}}\n}}",
            m.n_sites, m.filtration_size
        );
        out
    }
}

/// Bottleneck distance per dimension, bar counts, and optionally the number
/// of bars shorter than `below`.
pub fn compare(a: &Barcode, b: &Barcode, below: Option<f64>) -> String {
    let mut out = String::new();
    for p in 0..2 {
        let _ = writeln!(out, "bottleneck dim{p} {}", fmt_dist(bottleneck_distance(a, b, p)));
    }
    for p in 0..2 {
        let (na, nb) = (a.dim(p).len(), b.dim(p).len());
        let _ = writeln!(out, "bars dim{p} {na} {nb} {:+}", nb as i64 - na as i64);
    }
    if let Some(t) = below {
        for p in 0..2 {
            let short = |x: &Barcode| x.dim(p).iter().filter(|i| i.persistence() < t).count();
            let _ = writeln!(out, "short dim{p} {} {} {}", fmt_num(t), short(a), short(b));
        }
    }
    out
}

fn fmt_dist(d: f64) -> String {
    if d.is_infinite() {
        "inf".to_string()
    } else {
        fmt_num(d)
    }
}
