//! Geometry CSV: header `dom_id,string_id,x,y,z`, one module per line,
//! positions in meters.

use std::fmt::Write as _;
use std::path::Path;

use icegraph_core::{DetectorGeometry, Dom};

use super::{parse_f64, parse_u32, read_text, write_text};
use crate::error::{CliError, CliResult};

pub const HEADER: &str = "dom_id,string_id,x,y,z";

pub fn render_geometry(g: &DetectorGeometry) -> String {
    let mut out = String::with_capacity(48 * g.len());
    out.push_str(HEADER);
    out.push('\n');
    for d in g.doms() {
        let [x, y, z] = d.position;
        let _ = writeln!(out, "{},{},{x},{y},{z}", d.dom_id, d.string_id);
    }
    out
}

pub fn parse_geometry(path: &Path, text: &str) -> CliResult<DetectorGeometry> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Err(CliError::parse(path, 1, "empty geometry file")),
        Some((_, h)) if h.trim() != HEADER => {
            return Err(CliError::parse(path, 1, format!("expected header `{HEADER}`")))
        }
        Some(_) => {}
    }
    let mut doms = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::parse(path, n, format!("expected 5 fields, found {}", fields.len())));
        }
        doms.push(Dom {
            dom_id: parse_u32(path, n, "dom_id", fields[0])?,
            string_id: parse_u32(path, n, "string_id", fields[1])?,
            position: [
                parse_f64(path, n, "x", fields[2])?,
                parse_f64(path, n, "y", fields[3])?,
                parse_f64(path, n, "z", fields[4])?,
            ],
        });
    }
    if doms.is_empty() {
        return Err(CliError::parse(path, 2, "geometry has no modules"));
    }
    let name = path.file_stem().map_or_else(|| "geometry".into(), |s| s.to_string_lossy().into_owned());
    Ok(DetectorGeometry::new(name, doms)?)
}

pub fn load_geometry(path: &Path) -> CliResult<DetectorGeometry> {
    parse_geometry(path, &read_text(path)?)
}

pub fn save_geometry(g: &DetectorGeometry, path: &Path) -> CliResult<()> {
    write_text(path, &render_geometry(g))
}
