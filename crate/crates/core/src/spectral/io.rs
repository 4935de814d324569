//! Field snapshots: a fixed 64-byte text header followed by little-endian
//! `f64` samples in row-major order.

use std::io::{Read, Write};
use std::sync::Arc;

use super::field::Field;
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::real::{lit, to_f64, Real};

pub const HEADER_LEN: usize = 64;

// `digits == None` writes the shortest representation that round-trips.
fn header_text(dim: usize, modes: &[usize], extents: &[f64], t: f64, digits: Option<usize>) -> String {
    let num = |x: f64| match digits {
        Some(d) => format!(" {:.*e}", d - 1, x),
        None => format!(" {x:e}"),
    };
    let mut s = format!("{dim}");
    for n in modes {
        s.push_str(&format!(" {n}"));
    }
    for &l in extents {
        s.push_str(&num(l));
    }
    s.push_str(&num(t));
    s
}

/// Builds the header, dropping significant digits until it fits.
fn header(grid_dim: usize, modes: &[usize], extents: &[f64], t: f64) -> Result<[u8; HEADER_LEN]> {
    let attempts = std::iter::once(None).chain((4..=16).rev().map(Some));
    for digits in attempts {
        let text = header_text(grid_dim, modes, extents, t, digits);
        if text.len() < HEADER_LEN {
            let mut buf = [b' '; HEADER_LEN];
            buf[..text.len()].copy_from_slice(text.as_bytes());
            buf[HEADER_LEN - 1] = b'\n';
            return Ok(buf);
        }
    }
    Err(Error::Format("snapshot header does not fit in 64 bytes".into()))
}

pub fn write_snapshot<T: Real, W: Write>(mut w: W, f: &Field<T>, t: T) -> Result<()> {
    let g = f.grid();
    let extents: Vec<f64> = g.extents().iter().map(|&l| to_f64(l)).collect();
    w.write_all(&header(g.dim(), g.modes(), &extents, to_f64(t))?)?;
    let mut bytes = Vec::with_capacity(8 * f.values().len());
    for &v in f.values() {
        bytes.extend_from_slice(&to_f64(v).to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

/// Reads a snapshot back as `(field, t)`. The grid origin is not stored and
/// comes back as zero.
pub fn read_snapshot<T: Real, R: Read>(mut r: R) -> Result<(Field<T>, T)> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head)?;
    let text = std::str::from_utf8(&head).map_err(|e| Error::Format(e.to_string()))?;
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| Error::Format(format!("header is missing {what}")))
    };
    let dim: usize = next("dimension")?
        .parse()
        .map_err(|_| Error::Format("bad dimension".into()))?;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("dimension {dim}")));
    }
    let mut modes = Vec::with_capacity(dim);
    for _ in 0..dim {
        modes.push(
            next("point count")?
                .parse::<usize>()
                .map_err(|_| Error::Format("bad point count".into()))?,
        );
    }
    let mut extents = Vec::with_capacity(dim);
    for _ in 0..dim {
        let l: f64 = next("length")?
            .parse()
            .map_err(|_| Error::Format("bad length".into()))?;
        extents.push(lit::<T>(l));
    }
    let t: f64 = next("time")?
        .parse()
        .map_err(|_| Error::Format("bad time".into()))?;
    let grid = Arc::new(Grid::new(&extents, &modes)?);
    let mut bytes = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| lit::<T>(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
        .collect();
    Ok((Field::new(grid, values)?, lit(t)))
}

/// Debug export of 1D or 2D fields: `x,value` or `x,y,value` per row.
pub fn write_csv<T: Real, W: Write>(mut w: W, f: &Field<T>) -> Result<()> {
    let g = f.grid();
    match g.dim() {
        1 => writeln!(w, "x,value")?,
        2 => writeln!(w, "x,y,value")?,
        d => return Err(Error::Format(format!("CSV export supports 1D/2D, got {d}D"))),
    }
    for (i, v) in f.values().iter().enumerate() {
        let x = g.coordinates(i);
        let coords: Vec<String> = x.iter().map(|c| format!("{}", to_f64(*c))).collect();
        writeln!(w, "{},{}", coords.join(","), to_f64(*v))?;
    }
    Ok(())
}
