//! Field persistence: a plot-ready CSV table `(t, x_1..x_N, value)` and a
//! binary round-trip format — a length-prefixed JSON header (grid metadata +
//! shape) followed by the raw little-endian f64 payload.

use super::{GridField, SpaceTimeGrid};
use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

pub fn save_csv(field: &GridField, path: &Path) -> Result<()> {
    let grid = field.grid();
    let dim = grid.space.dim();
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "t")?;
    for j in 1..=dim {
        write!(w, ",x_{j}")?;
    }
    writeln!(w, ",value")?;
    let mut x = vec![0.0; dim];
    for k in 0..grid.n_t {
        let t = grid.time(k);
        for node in 0..grid.space.len() {
            grid.space.node_into(node, &mut x);
            write!(w, "{t}")?;
            for v in &x {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", field.values()[(k, node)])?;
        }
    }
    Ok(())
}

/// Reads a CSV written by [`save_csv`] back onto the given grid. Every row
/// must land exactly on a grid node.
pub fn load_csv(grid: Arc<SpaceTimeGrid>, path: &Path) -> Result<GridField> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Contract("empty CSV".into()))??;
    let dim = grid.space.dim();
    let expected_cols = dim + 2;
    if header.split(',').count() != expected_cols {
        return Err(Error::Contract(format!(
            "CSV has {} columns, grid needs {expected_cols}",
            header.split(',').count()
        )));
    }
    let mut field = GridField::zeros(grid.clone());
    let dt = grid.dt();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Contract(format!("bad CSV number: {e}")))?;
        let t = vals[0];
        let k = (t / dt).round() as usize;
        if k >= grid.n_t || (grid.time(k) - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::Contract(format!("time {t} is not a grid time")));
        }
        let mut idx = vec![0usize; dim];
        for j in 0..dim {
            let h = grid.space.spacing(j);
            let pos = (vals[1 + j] + grid.space.bounds[j]) / h;
            let i = pos.round() as isize;
            if i < 0
                || i as usize >= grid.space.n_x[j]
                || (pos - i as f64).abs() > 1e-7
            {
                return Err(Error::Contract(format!(
                    "coordinate {} is not a grid node on axis {j}",
                    vals[1 + j]
                )));
            }
            idx[j] = i as usize;
        }
        field.values_mut()[(k, grid.space.flat_index(&idx))] = vals[1 + dim];
    }
    Ok(field)
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    grid: SpaceTimeGrid,
    shape: (usize, usize),
}

pub fn save_binary(field: &GridField, path: &Path) -> Result<()> {
    let header = BinaryHeader {
        grid: field.grid().as_ref().clone(),
        shape: field.values().dim(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for v in field.values().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_binary(path: &Path) -> Result<GridField> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut len_bytes = [0u8; 8];
    r.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: BinaryHeader = serde_json::from_slice(&header_bytes)?;
    let (n_t, n_space) = header.shape;
    let mut data = vec![0.0f64; n_t * n_space];
    let mut buf = [0u8; 8];
    for v in data.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    let values = Array2::from_shape_vec((n_t, n_space), data)
        .map_err(|e| Error::Contract(format!("bad payload shape: {e}")))?;
    GridField::from_values(Arc::new(header.grid), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SpatialGrid;

    fn sample_field() -> GridField {
        let grid = Arc::new(
            SpaceTimeGrid::new(0.5, 3, SpatialGrid::cube(2, 1.0, 4), 0.1).unwrap(),
        );
        GridField::from_fn(grid, |t, x| t + 2.0 * x[0] - x[1] * x[0])
    }

    #[test]
    fn csv_roundtrip() {
        let f = sample_field();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        save_csv(&f, &path).unwrap();
        let g = load_csv(f.grid().clone(), &path).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn binary_roundtrip() {
        let f = sample_field();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.bin");
        save_binary(&f, &path).unwrap();
        let g = load_binary(&path).unwrap();
        assert_eq!(f.grid().as_ref(), g.grid().as_ref());
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn csv_rejects_off_grid_rows() {
        let f = sample_field();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,x_1,x_2,value\n0.33,0.0,0.0,1.0\n").unwrap();
        assert!(load_csv(f.grid().clone(), &path).is_err());
    }
}
