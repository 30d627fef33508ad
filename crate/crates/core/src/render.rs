//! Partition maps and impact heatmaps as SVG or binary PPM (P6).
//!
//! Zone `i` occupies grid cell `(i / cols, i % cols)`. Cut edges between
//! 4-neighbours are drawn on the shared cell border; any other cut edge is
//! drawn centre to centre.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::Assignment;
use crate::zoning::{Edge, TrafficInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    pub fn gray(level: u8) -> Self {
        Rgb(level, level, level)
    }
}

impl FromStr for Rgb {
    type Err = Error;

    /// Parses `#rrggbb` or `rrggbb`.
    fn from_str(s: &str) -> Result<Self> {
        let h = s.strip_prefix('#').unwrap_or(s);
        let bad = || Error::Invalid(format!("colour `{s}` is not of the form #rrggbb"));
        if h.len() != 6 || !h.is_ascii() {
            return Err(bad());
        }
        let byte = |k: usize| u8::from_str_radix(&h[k..k + 2], 16).map_err(|_| bad());
        Ok(Rgb(byte(0)?, byte(2)?, byte(4)?))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageFormat {
    Svg,
    Ppm,
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(ImageFormat::Svg),
            "ppm" => Ok(ImageFormat::Ppm),
            other => Err(Error::Invalid(format!("unknown image format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    /// Pixels per grid cell.
    pub cell_size: u32,
    /// Fill for region 0 (`xᵢ = 0`) and region 1.
    pub palette: [Rgb; 2],
    /// Outline cut edges.
    pub show_boundary: bool,
    pub boundary_color: Rgb,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            cell_size: 32,
            palette: [Rgb(0xe8, 0xee, 0xf4), Rgb(0x2b, 0x55, 0x8c)],
            show_boundary: true,
            boundary_color: Rgb(0xd9, 0x3a, 0x2b),
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size == 0 {
            return Err(Error::Invalid("cell_size must be at least 1".into()));
        }
        Ok(())
    }

    fn stroke(&self) -> u32 {
        (self.cell_size / 8).max(1)
    }
}

/// A rendered image, either SVG text or PPM bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Image {
    Svg(String),
    Ppm(Vec<u8>),
}

impl Image {
    pub fn into_bytes(self) -> Vec<u8> {
        match self {
            Image::Svg(s) => s.into_bytes(),
            Image::Ppm(b) => b,
        }
    }
}

/// Per-cell fill colours plus the segments to outline.
struct Scene {
    rows: usize,
    cols: usize,
    fills: Vec<Rgb>,
    cuts: Vec<Edge>,
    title: String,
}

fn check_len(instance: &TrafficInstance, len: usize) -> Result<()> {
    if len != instance.num_zones() {
        return Err(Error::DimensionMismatch {
            expected: instance.num_zones(),
            found: len,
        });
    }
    Ok(())
}

fn partition_scene(instance: &TrafficInstance, x: &Assignment, spec: &RenderSpec) -> Result<Scene> {
    spec.validate()?;
    check_len(instance, x.len())?;
    let cuts = instance.cut_edges(x);
    Ok(Scene {
        rows: instance.rows(),
        cols: instance.cols(),
        fills: x.bits().iter().map(|&b| spec.palette[b as usize]).collect(),
        title: format!(
            "partition: {} zones in region 1, {} cut edges",
            x.count_ones(),
            cuts.len()
        ),
        cuts: if spec.show_boundary { cuts } else { Vec::new() },
    })
}

/// Gray level for each impact: white at 0, black at the largest `|ΔHᵢ|`.
pub fn impact_levels(impacts: &[f64]) -> Vec<u8> {
    let max = impacts.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    impacts
        .iter()
        .map(|v| {
            if max > 0.0 {
                (255.0 * (1.0 - v.abs() / max)).round() as u8
            } else {
                255
            }
        })
        .collect()
}

fn impact_scene(instance: &TrafficInstance, impacts: &[f64], spec: &RenderSpec) -> Result<Scene> {
    spec.validate()?;
    check_len(instance, impacts.len())?;
    let max = impacts.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(Scene {
        rows: instance.rows(),
        cols: instance.cols(),
        fills: impact_levels(impacts).into_iter().map(Rgb::gray).collect(),
        cuts: Vec::new(),
        title: format!("flip impact |dH|, max {max}"),
    })
}

/// The two grid cells' shared border, or `None` if they are not 4-neighbours.
fn shared_border(cols: usize, i: usize, j: usize, cell: u32) -> Option<(u32, u32, u32, u32)> {
    let (a, b) = (i.min(j), i.max(j));
    let (ra, ca) = ((a / cols) as u32, (a % cols) as u32);
    let (rb, cb) = ((b / cols) as u32, (b % cols) as u32);
    if ra == rb && cb == ca + 1 {
        let x = cb * cell;
        Some((x, ra * cell, x, (ra + 1) * cell))
    } else if ca == cb && rb == ra + 1 {
        let y = rb * cell;
        Some((ca * cell, y, (ca + 1) * cell, y))
    } else {
        None
    }
}

fn centre(cols: usize, i: usize, cell: u32) -> (u32, u32) {
    let (r, c) = ((i / cols) as u32, (i % cols) as u32);
    (c * cell + cell / 2, r * cell + cell / 2)
}

fn segment(cols: usize, e: &Edge, cell: u32) -> (u32, u32, u32, u32) {
    shared_border(cols, e.i, e.j, cell).unwrap_or_else(|| {
        let (x1, y1) = centre(cols, e.i, cell);
        let (x2, y2) = centre(cols, e.j, cell);
        (x1, y1, x2, y2)
    })
}

fn svg(scene: &Scene, spec: &RenderSpec) -> String {
    let cell = spec.cell_size;
    let (w, h) = (scene.cols as u32 * cell, scene.rows as u32 * cell);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, "  <title>{}</title>", scene.title);
    let _ = writeln!(s, r#"  <g class="cells" shape-rendering="crispEdges">"#);
    for (i, fill) in scene.fills.iter().enumerate() {
        let (r, c) = ((i / scene.cols) as u32, (i % scene.cols) as u32);
        let _ = writeln!(
            s,
            r#"    <rect x="{}" y="{}" width="{cell}" height="{cell}" fill="{fill}"/>"#,
            c * cell,
            r * cell
        );
    }
    let _ = writeln!(s, "  </g>");
    if !scene.cuts.is_empty() {
        let _ = writeln!(
            s,
            r#"  <g class="cut-edges" stroke="{}" stroke-width="{}" stroke-linecap="square">"#,
            spec.boundary_color,
            spec.stroke()
        );
        for e in &scene.cuts {
            let (x1, y1, x2, y2) = segment(scene.cols, e, cell);
            let _ = writeln!(
                s,
                r#"    <line class="cut" data-i="{}" data-j="{}" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>"#,
                e.i, e.j
            );
        }
        let _ = writeln!(s, "  </g>");
    }
    s.push_str("</svg>\n");
    s
}

fn ppm(scene: &Scene, spec: &RenderSpec) -> Vec<u8> {
    let cell = spec.cell_size as usize;
    let (w, h) = (scene.cols * cell, scene.rows * cell);
    let mut px = vec![Rgb(0, 0, 0); w * h];
    for (i, &fill) in scene.fills.iter().enumerate() {
        let (r, c) = (i / scene.cols, i % scene.cols);
        for y in r * cell..(r + 1) * cell {
            px[y * w + c * cell..y * w + (c + 1) * cell].fill(fill);
        }
    }
    let half = spec.stroke() as i64 / 2;
    let thick = spec.stroke() as i64;
    let mut dot = |x: i64, y: i64| {
        for dy in -half..thick - half {
            for dx in -half..thick - half {
                let (px_x, px_y) = (x + dx, y + dy);
                if (0..w as i64).contains(&px_x) && (0..h as i64).contains(&px_y) {
                    px[px_y as usize * w + px_x as usize] = spec.boundary_color;
                }
            }
        }
    };
    for e in &scene.cuts {
        let (x1, y1, x2, y2) = segment(scene.cols, e, spec.cell_size);
        let (x1, y1, x2, y2) = (x1 as i64, y1 as i64, x2 as i64, y2 as i64);
        let steps = (x2 - x1).abs().max((y2 - y1).abs()).max(1);
        for t in 0..=steps {
            dot(x1 + (x2 - x1) * t / steps, y1 + (y2 - y1) * t / steps);
        }
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for p in px {
        out.extend_from_slice(&[p.0, p.1, p.2]);
    }
    out
}

fn draw(scene: &Scene, spec: &RenderSpec, format: ImageFormat) -> Image {
    match format {
        ImageFormat::Svg => Image::Svg(svg(scene, spec)),
        ImageFormat::Ppm => Image::Ppm(ppm(scene, spec)),
    }
}

/// Two-colour region map of `x`, with cut edges outlined if requested.
pub fn render_partition(
    instance: &TrafficInstance,
    x: &Assignment,
    spec: &RenderSpec,
    format: ImageFormat,
) -> Result<Image> {
    Ok(draw(&partition_scene(instance, x, spec)?, spec, format))
}

/// Grayscale heatmap of `|ΔHᵢ|`; darker cells have larger impact.
pub fn render_impacts(
    instance: &TrafficInstance,
    impacts: &[f64],
    spec: &RenderSpec,
    format: ImageFormat,
) -> Result<Image> {
    Ok(draw(&impact_scene(instance, impacts, spec)?, spec, format))
}

pub fn partition_svg(instance: &TrafficInstance, x: &Assignment, spec: &RenderSpec) -> Result<String> {
    Ok(svg(&partition_scene(instance, x, spec)?, spec))
}

pub fn impact_svg(instance: &TrafficInstance, impacts: &[f64], spec: &RenderSpec) -> Result<String> {
    Ok(svg(&impact_scene(instance, impacts, spec)?, spec))
}

/// Compact text map: `#` for region 1, `.` for region 0, one line per row.
pub fn ascii_map(instance: &TrafficInstance, x: &Assignment) -> Result<String> {
    check_len(instance, x.len())?;
    let mut s = String::with_capacity(instance.num_zones() + instance.rows());
    for r in 0..instance.rows() {
        for c in 0..instance.cols() {
            s.push(if x[r * instance.cols() + c] { '#' } else { '.' });
        }
        s.push('\n');
    }
    Ok(s)
}
