//! File formats.
//!
//! * Dataset CSV: header `x1,…,xd,label,structure_id`, label `0` genuine and
//!   `1` anomaly, structure id `-1` for anomalies. The label columns are
//!   optional on input; a file without a header is read as bare coordinates.
//! * Score CSV: `index,score[,label]`, 17 significant digits.
//! * Depth grid: little-endian binary with magic `PIFD`, `u32` width and
//!   height, row-major `f32` triplets, then one `u8` validity flag per pixel;
//!   or CSV rows `row,col,x,y,z,valid`.
//! * Score raster: magic `PIFR`, `u32` width and height, row-major `f32`
//!   scores with NaN for missing values.
//!
//! Lines starting with `#` are comments on input. Writers take a list of
//! `key=value` pairs and echo them as leading comment lines.

use std::io::{BufRead, Read, Write};

use crate::datagen::{Label, LabeledDataset};
use crate::embedding::fmt_sig17;
use crate::error::{PifError, Result};
use crate::geometry::Point;
use crate::sliding::DepthGrid;

pub const GRID_MAGIC: &[u8; 4] = b"PIFD";
pub const RASTER_MAGIC: &[u8; 4] = b"PIFR";

pub fn write_header<W: Write>(out: &mut W, echo: &[(String, String)]) -> Result<()> {
    for (k, v) in echo {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn format_err(line: usize, msg: impl std::fmt::Display) -> PifError {
    PifError::Format(format!("line {line}: {msg}"))
}

fn data_lines<R: BufRead>(input: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#')))
}

pub fn write_dataset<W: Write>(data: &LabeledDataset, mut out: W, echo: &[(String, String)]) -> Result<()> {
    write_header(&mut out, echo)?;
    let d = data.points.first().map_or(0, Point::dim);
    let mut cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    cols.push("label".into());
    cols.push("structure_id".into());
    writeln!(out, "{}", cols.join(","))?;
    for ((p, l), s) in data.points.iter().zip(&data.labels).zip(&data.structure_id) {
        let coords: Vec<String> = p.coords.iter().map(|v| fmt_sig17(*v)).collect();
        let label = match l {
            Label::Genuine => 0,
            Label::Anomaly => 1,
        };
        let sid = s.map_or(-1, |k| k as i64);
        writeln!(out, "{},{label},{sid}", coords.join(","))?;
    }
    Ok(())
}

/// Points and, when the file has a `label` column, labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFile {
    pub points: Vec<Point>,
    pub labels: Option<Vec<Label>>,
}

impl PointFile {
    pub fn anomaly_flags(&self) -> Option<Vec<bool>> {
        self.labels.as_ref().map(|l| l.iter().map(|x| *x == Label::Anomaly).collect())
    }
}

pub fn read_points<R: BufRead>(input: R) -> Result<PointFile> {
    let mut lines = data_lines(input).peekable();
    let mut coord_cols: Option<Vec<usize>> = None;
    let mut label_col = None;
    if let Some((_, Ok(first))) = lines.peek() {
        let fields: Vec<&str> = first.split(',').map(str::trim).collect();
        if fields.iter().any(|f| f.parse::<f64>().is_err()) {
            let mut coords = Vec::new();
            for (i, f) in fields.iter().enumerate() {
                match *f {
                    "label" => label_col = Some(i),
                    "structure_id" => {}
                    c if c.starts_with('x') => coords.push(i),
                    other => return Err(format_err(1, format!("unknown column {other:?}"))),
                }
            }
            if coords.is_empty() {
                return Err(format_err(1, "no coordinate columns"));
            }
            coord_cols = Some(coords);
            lines.next();
        }
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (ln, line) in lines {
        let line = line?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |i: usize| -> Result<f64> {
            let f = fields.get(i).ok_or_else(|| format_err(ln, "missing column"))?;
            f.parse::<f64>().map_err(|_| format_err(ln, format!("not a number: {f:?}")))
        };
        let coords = match &coord_cols {
            Some(cols) => cols.iter().map(|&i| parse(i)).collect::<Result<Vec<_>>>()?,
            None => (0..fields.len()).map(parse).collect::<Result<Vec<_>>>()?,
        };
        if let Some(first) = points.first().map(Point::dim) {
            if coords.len() != first {
                return Err(format_err(ln, format!("expected {first} coordinates, got {}", coords.len())));
            }
        }
        if let Some(c) = label_col {
            labels.push(match fields.get(c).copied() {
                Some("0") => Label::Genuine,
                Some("1") => Label::Anomaly,
                other => return Err(format_err(ln, format!("label must be 0 or 1, got {other:?}"))),
            });
        }
        points.push(Point::new(coords));
    }
    if points.is_empty() {
        return Err(PifError::Format("no points in input".into()));
    }
    Ok(PointFile {
        points,
        labels: label_col.map(|_| labels),
    })
}

pub fn write_scores<W: Write>(
    scores: &[f64],
    labels: Option<&[bool]>,
    mut out: W,
    echo: &[(String, String)],
) -> Result<()> {
    write_header(&mut out, echo)?;
    match labels {
        Some(l) => {
            writeln!(out, "index,score,label")?;
            for (i, (s, a)) in scores.iter().zip(l).enumerate() {
                writeln!(out, "{i},{},{}", fmt_sig17(*s), *a as u8)?;
            }
        }
        None => {
            writeln!(out, "index,score")?;
            for (i, s) in scores.iter().enumerate() {
                writeln!(out, "{i},{}", fmt_sig17(*s))?;
            }
        }
    }
    Ok(())
}

/// Reads the score column of a score CSV.
pub fn read_scores<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (ln, line) in data_lines(input) {
        let line = line?;
        if line.starts_with("index") {
            continue;
        }
        let f = line.split(',').nth(1).ok_or_else(|| format_err(ln, "missing score"))?;
        out.push(f.trim().parse().map_err(|_| format_err(ln, format!("not a number: {f:?}")))?);
    }
    Ok(out)
}

pub fn write_grid_binary<W: Write>(grid: &DepthGrid, mut out: W) -> Result<()> {
    out.write_all(GRID_MAGIC)?;
    out.write_all(&(grid.width() as u32).to_le_bytes())?;
    out.write_all(&(grid.height() as u32).to_le_bytes())?;
    for i in 0..grid.len() {
        for v in grid.xyz(i) {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    let mask: Vec<u8> = grid.validity().iter().map(|v| *v as u8).collect();
    out.write_all(&mask)?;
    Ok(())
}

pub fn write_grid_csv<W: Write>(grid: &DepthGrid, mut out: W) -> Result<()> {
    writeln!(out, "row,col,x,y,z,valid")?;
    for r in 0..grid.height() {
        for c in 0..grid.width() {
            let i = grid.index(r, c);
            let p = grid.xyz(i);
            writeln!(
                out,
                "{r},{c},{},{},{},{}",
                fmt_sig17(p[0]),
                fmt_sig17(p[1]),
                fmt_sig17(p[2]),
                grid.is_valid(i) as u8
            )?;
        }
    }
    Ok(())
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| PifError::Format("truncated grid header".into()))
}

/// Reads either grid format, told apart by the magic bytes.
pub fn read_grid<R: Read>(mut input: R) -> Result<DepthGrid> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.starts_with(GRID_MAGIC) {
        read_grid_binary(&bytes)
    } else {
        read_grid_csv(&bytes[..])
    }
}

fn read_grid_binary(bytes: &[u8]) -> Result<DepthGrid> {
    let w = read_u32(bytes, 4)? as usize;
    let h = read_u32(bytes, 8)? as usize;
    let n = w
        .checked_mul(h)
        .ok_or_else(|| PifError::Format("grid dimensions overflow".into()))?;
    let expected = n.checked_mul(13).and_then(|x| x.checked_add(12));
    if expected != Some(bytes.len()) {
        return Err(PifError::Format(format!(
            "grid {w}x{h} needs {} bytes, file has {}",
            expected.map_or_else(|| "too many".to_string(), |e| e.to_string()),
            bytes.len()
        )));
    }
    let floats = &bytes[12..12 + 12 * n];
    let xyz = floats
        .chunks_exact(12)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().expect("4 bytes")) as f64;
            [f(0), f(1), f(2)]
        })
        .collect();
    let valid = bytes[12 + 12 * n..]
        .iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(PifError::Format(format!("validity flag must be 0 or 1, got {v}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    DepthGrid::new(w, h, xyz, valid)
}

fn read_grid_csv<R: BufRead>(input: R) -> Result<DepthGrid> {
    let mut cells = Vec::new();
    for (ln, line) in data_lines(input) {
        let line = line?;
        if line.starts_with("row") {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(format_err(ln, format!("expected 6 columns, got {}", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| format_err(ln, format!("not an index: {s:?}")));
        let num = |s: &str| s.parse::<f64>().map_err(|_| format_err(ln, format!("not a number: {s:?}")));
        let valid = match f[5] {
            "0" => false,
            "1" => true,
            v => return Err(format_err(ln, format!("valid must be 0 or 1, got {v:?}"))),
        };
        cells.push((int(f[0])?, int(f[1])?, [num(f[2])?, num(f[3])?, num(f[4])?], valid));
    }
    let h = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let w = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if w * h != cells.len() {
        return Err(PifError::Format(format!("grid CSV has {} cells for a {w}x{h} grid", cells.len())));
    }
    let mut xyz = vec![[f64::NAN; 3]; w * h];
    let mut valid = vec![false; w * h];
    let mut seen = vec![false; w * h];
    for (r, c, p, v) in cells {
        let i = r * w + c;
        if std::mem::replace(&mut seen[i], true) {
            return Err(PifError::Format(format!("pixel ({r},{c}) listed twice")));
        }
        xyz[i] = p;
        valid[i] = v;
    }
    DepthGrid::new(w, h, xyz, valid)
}

pub fn write_raster<W: Write>(width: usize, height: usize, scores: &[Option<f64>], mut out: W) -> Result<()> {
    out.write_all(RASTER_MAGIC)?;
    out.write_all(&(width as u32).to_le_bytes())?;
    out.write_all(&(height as u32).to_le_bytes())?;
    for s in scores {
        out.write_all(&(s.unwrap_or(f64::NAN) as f32).to_le_bytes())?;
    }
    Ok(())
}

/// `row,col,score` with an empty score for missing values.
pub fn write_pixel_scores<W: Write>(
    width: usize,
    scores: &[Option<f64>],
    mut out: W,
    echo: &[(String, String)],
) -> Result<()> {
    write_header(&mut out, echo)?;
    writeln!(out, "row,col,score")?;
    for (i, s) in scores.iter().enumerate() {
        writeln!(out, "{},{},{}", i / width, i % width, s.map(fmt_sig17).unwrap_or_default())?;
    }
    Ok(())
}

/// Reads `row,col,score` back into row-major order.
pub fn read_pixel_scores<R: BufRead>(input: R) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::new();
    for (ln, line) in data_lines(input) {
        let line = line?;
        if line.starts_with("row") {
            continue;
        }
        let s = line.rsplit(',').next().unwrap_or("").trim();
        out.push(if s.is_empty() {
            None
        } else {
            Some(s.parse().map_err(|_| format_err(ln, format!("not a number: {s:?}")))?)
        });
    }
    Ok(out)
}

pub fn write_mask<W: Write>(width: usize, mask: &[bool], mut out: W) -> Result<()> {
    writeln!(out, "row,col,defect")?;
    for (i, m) in mask.iter().enumerate() {
        writeln!(out, "{},{},{}", i / width, i % width, *m as u8)?;
    }
    Ok(())
}

pub fn read_mask<R: BufRead>(input: R) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for (ln, line) in data_lines(input) {
        let line = line?;
        if line.starts_with("row") {
            continue;
        }
        out.push(match line.rsplit(',').next().map(str::trim) {
            Some("0") => false,
            Some("1") => true,
            other => return Err(format_err(ln, format!("defect must be 0 or 1, got {other:?}"))),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, generate_surface_fixture, Defect, SurfaceKind, SurfaceSpec, SyntheticName, SyntheticSpec};

    #[test]
    fn dataset_round_trip() {
        let d = generate(&SyntheticSpec::new(SyntheticName::Circle3, 2)).unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf, &[("seed".into(), "2".into())]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=2\nx1,x2,label,structure_id\n"));
        let back = read_points(&buf[..]).unwrap();
        assert_eq!(back.points, d.points);
        assert_eq!(back.labels.unwrap(), d.labels);
    }

    #[test]
    fn bare_coordinates() {
        let f = read_points("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(f.points.len(), 2);
        assert!(f.labels.is_none());
        assert!(read_points("1,2\n3\n".as_bytes()).is_err());
        assert!(read_points("x1,label\n1,7\n".as_bytes()).is_err());
        assert!(read_points("".as_bytes()).is_err());
    }

    #[test]
    fn scores_round_trip() {
        let s = [0.1, 0.123_456_789_012_345_67, 1.0 / 3.0];
        let mut buf = Vec::new();
        write_scores(&s, Some(&[true, false, true]), &mut buf, &[]).unwrap();
        assert_eq!(read_scores(&buf[..]).unwrap(), s);
    }

    #[test]
    fn grid_formats() {
        let f = generate_surface_fixture(&SurfaceSpec::new(SurfaceKind::SphereCap, Defect::Hole, 12, 0.0, 1)).unwrap();
        let mut bin = Vec::new();
        write_grid_binary(&f.grid, &mut bin).unwrap();
        assert_eq!(bin.len(), 12 + 13 * 144);
        let g = read_grid(&bin[..]).unwrap();
        let mut csv = Vec::new();
        write_grid_csv(&g, &mut csv).unwrap();
        assert_eq!(read_grid(&csv[..]).unwrap(), g);
        assert_eq!(g.validity(), f.grid.validity());
        for i in 0..144 {
            for k in 0..3 {
                assert_eq!(g.xyz(i)[k], f.grid.xyz(i)[k] as f32 as f64);
            }
        }
        assert!(read_grid(&bin[..bin.len() - 1]).is_err());
    }

    #[test]
    fn pixel_scores_round_trip() {
        let s = vec![Some(0.5), None, Some(0.25), None];
        let mut buf = Vec::new();
        write_pixel_scores(2, &s, &mut buf, &[]).unwrap();
        assert_eq!(read_pixel_scores(&buf[..]).unwrap(), s);
        let mut r = Vec::new();
        write_raster(2, 2, &s, &mut r).unwrap();
        assert_eq!(r.len(), 12 + 16);
        assert!(f32::from_le_bytes(r[16..20].try_into().unwrap()).is_nan());
    }
}
