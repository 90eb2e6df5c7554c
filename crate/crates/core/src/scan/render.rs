//! SVG heatmaps of map and scan CSVs with one overlaid contour.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::contour::marching_squares;
use crate::error::{Error, Result};

pub const DEFAULT_CONTOUR: f64 = 0.98;

/// Column triple plotted from a CSV: first match wins.
const X_COLUMNS: [&str; 2] = ["delta", "detuning"];
const Y_COLUMNS: [&str; 2] = ["zeta", "zeta_L"];
const VALUE_COLUMNS: [&str; 3] = ["abs_prod", "eta", "p_e"];

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub x_name: String,
    pub y_name: String,
    pub value_name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `[iy][ix]`; NaN where the CSV has no row.
    pub values: Vec<Vec<f64>>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a map CSV. `value` overrides the plotted column.
pub fn read_map_csv(path: &Path, value: Option<&str>) -> Result<Heatmap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_map_csv(&text, path, value)
}

pub fn parse_map_csv(text: &str, path: &Path, value: Option<&str>) -> Result<Heatmap> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |names: &[&str]| names.iter().find_map(|n| cols.iter().position(|c| c == n));
    let ix = find(&X_COLUMNS).ok_or_else(|| parse_err(path, 1, format!("no column among {X_COLUMNS:?}")))?;
    let iy = find(&Y_COLUMNS).ok_or_else(|| parse_err(path, 1, format!("no column among {Y_COLUMNS:?}")))?;
    let iv = match value {
        Some(v) => cols.iter().position(|c| *c == v),
        None => find(&VALUE_COLUMNS),
    }
    .ok_or_else(|| parse_err(path, 1, "value column not found"))?;

    let mut cells: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(parse_err(path, n + 1, format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| parse_err(path, n + 1, format!("'{}' is not a number", fields[i])))
        };
        let (x, y, v) = (num(ix)?, num(iy)?, num(iv)?);
        if !x.is_finite() || !y.is_finite() {
            return Err(parse_err(path, n + 1, "non-finite coordinate"));
        }
        xs.push(x);
        ys.push(y);
        cells.insert((x.to_bits(), y.to_bits()), v);
    }
    if cells.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }
    let axis = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (x, y) = (axis(xs), axis(ys));
    let values = y
        .iter()
        .map(|yy| {
            x.iter()
                .map(|xx| cells.get(&(xx.to_bits(), yy.to_bits())).copied().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    Ok(Heatmap {
        x_name: cols[ix].to_string(),
        y_name: cols[iy].to_string(),
        value_name: cols[iv].to_string(),
        x,
        y,
        values,
    })
}

/// Perceptually ordered dark-blue → yellow ramp.
fn color(t: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let k = STOPS.iter().position(|s| s.0 >= t).unwrap_or(4).max(1);
    let (a, b) = (STOPS[k - 1], STOPS[k]);
    let f = if b.0 > a.0 { (t - a.0) / (b.0 - a.0) } else { 0.0 };
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + f * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn edges(v: &[f64]) -> Vec<f64> {
    if v.len() == 1 {
        return vec![v[0] - 0.5, v[0] + 0.5];
    }
    let mut e = Vec::with_capacity(v.len() + 1);
    e.push(v[0] - 0.5 * (v[1] - v[0]));
    for w in v.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    let n = v.len();
    e.push(v[n - 1] + 0.5 * (v[n - 1] - v[n - 2]));
    e
}

/// Standalone SVG: one rectangle per cell, the `level` contour in black.
pub fn render_svg(map: &Heatmap, level: f64) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let xe = edges(&map.x);
    let ye = edges(&map.y);
    let (x0, x1) = (xe[0], *xe.last().unwrap());
    let (y0, y1) = (ye[0], *ye.last().unwrap());
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let finite = map.values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    for (iy, row) in map.values.iter().enumerate() {
        for (ix, v) in row.iter().enumerate() {
            let fill = if v.is_finite() { color((v - lo) / span) } else { "#bbbbbb".into() };
            let (ax, bx) = (px(xe[ix]), px(xe[ix + 1]));
            let (ay, by) = (py(ye[iy + 1]), py(ye[iy]));
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                ax,
                ay,
                bx - ax,
                by - ay
            );
        }
    }
    let segments = marching_squares(&map.x, &map.y, &map.values, level);
    if !segments.is_empty() {
        let mut d = String::new();
        for [(ax, ay), (bx, by)] in &segments {
            let _ = write!(d, "M{:.2} {:.2}L{:.2} {:.2}", px(*ax), py(*ay), px(*bx), py(*by));
        }
        let _ = writeln!(s, r#"<path d="{d}" stroke="black" stroke-width="2" fill="none"/>"#);
    }
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{} [{:.4} .. {:.4}]</text>"#,
        W / 2.0,
        H - 20.0,
        map.x_name,
        x0,
        x1
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">{} [{:.4} .. {:.4}]</text>"#,
        H / 2.0,
        H / 2.0,
        map.y_name,
        y0,
        y1
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-size="14" text-anchor="middle">{} ({:.4} .. {:.4}), contour {}</text>"#,
        W / 2.0,
        map.value_name,
        lo,
        hi,
        level
    );
    s.push_str("</svg>\n");
    s
}

/// Reads `csv`, renders it and writes `out`. Nothing is written on error.
pub fn render_map(csv: &Path, level: f64, value: Option<&str>, out: &Path) -> Result<()> {
    let map = read_map_csv(csv, value)?;
    let svg = render_svg(&map, level);
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))
}
