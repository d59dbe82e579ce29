use offsetph_core::{Point, SiteSet};
use serde::Deserialize;

use crate::{fmt_num, CliError};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    polygons: Vec<Vec<[f64; 2]>>,
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<SiteSet, CliError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| CliError::Instance(e.to_string()))?;
    let loops: Vec<Vec<Point>> =
        file.polygons.iter().map(|l| l.iter().map(|&[x, y]| Point::new(x, y)).collect()).collect();
    SiteSet::from_loops(&loops).map_err(|(i, e)| CliError::Instance(format!("polygon {i}: {e}")))
}

/// Canonical form: one polygon per line, shortest round-trip decimals.
pub fn write_instance(sites: &SiteSet) -> String {
    let mut out = String::from("{\n  \"polygons\": [");
    for (k, p) in sites.polygons().iter().enumerate() {
        out.push_str(if k == 0 { "\n    [" } else { ",\n    [" });
        let pts: Vec<String> = p.vertices().iter().map(|v| format!("[{}, {}]", fmt_num(v.x), fmt_num(v.y))).collect();
        out.push_str(&pts.join(", "));
        out.push(']');
    }
    if !sites.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}
