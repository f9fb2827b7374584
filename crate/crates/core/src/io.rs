//! CSV exchange formats. JSON goes through the serde derives on the types
//! themselves. Floats are written in shortest round-trip form, so reading
//! back is bit-exact.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measures::{Grid, GridDensity, GridMeasure};
use crate::path::MeasurePath;

#[derive(Debug, Serialize, Deserialize)]
struct MeasureRow {
    cell_index: usize,
    cell_center: f64,
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PathRow {
    time: f64,
    cell_index: usize,
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    replica: usize,
    time: f64,
    value: f64,
}

/// `cell_index,cell_center,weight`.
pub fn write_measure_csv<W: Write>(rho: &GridMeasure, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, &weight) in rho.weights().iter().enumerate() {
        w.serialize(MeasureRow {
            cell_index: i,
            cell_center: rho.grid().center(i),
            weight,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measure_csv<R: Read>(input: R, grid: Grid) -> Result<GridMeasure> {
    let mut weights = vec![f64::NAN; grid.n_cells()];
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: MeasureRow = row?;
        if row.cell_index >= grid.n_cells()
            || (row.cell_center - grid.center(row.cell_index)).abs() > 1e-12 * grid.length()
        {
            return Err(invalid(format!(
                "row for cell {} does not fit the grid",
                row.cell_index
            )));
        }
        weights[row.cell_index] = row.weight;
    }
    if weights.iter().any(|w| w.is_nan()) {
        return Err(invalid("measure CSV misses cells"));
    }
    GridMeasure::new(grid, weights)
}

/// Long format `time,cell_index,weight`, weight being the cell mass.
pub fn write_path_csv<S: GridDensity, W: Write>(path: &MeasurePath<S>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dx = path.grid().dx();
    for (&time, slice) in path.times().iter().zip(path.slices()) {
        for (cell_index, f) in slice.density().iter().enumerate() {
            w.serialize(PathRow {
                time,
                cell_index,
                weight: f * dx,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_csv<R: Read>(input: R, grid: Grid) -> Result<MeasurePath<GridMeasure>> {
    let n = grid.n_cells();
    let mut times: Vec<f64> = Vec::new();
    let mut slices: Vec<Vec<f64>> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: PathRow = row?;
        if row.cell_index >= n {
            return Err(invalid(format!(
                "cell index {} outside the grid",
                row.cell_index
            )));
        }
        if times.last() != Some(&row.time) {
            times.push(row.time);
            slices.push(vec![f64::NAN; n]);
        }
        slices.last_mut().expect("slice pushed above")[row.cell_index] = row.weight;
    }
    let measures = slices
        .into_iter()
        .map(|w| {
            if w.iter().any(|v| v.is_nan()) {
                return Err(invalid("path CSV misses cells"));
            }
            GridMeasure::new(grid, w)
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurePath::new(times, measures)
}

/// `replica,time,value`, one row per recorded time of each replica.
pub fn write_trajectory_csv<W: Write>(replicas: &[(Vec<f64>, Vec<f64>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (replica, (times, values)) in replicas.iter().enumerate() {
        if times.len() != values.len() {
            return Err(invalid("trajectory needs one value per time"));
        }
        for (&time, &value) in times.iter().zip(values) {
            w.serialize(TrajectoryRow {
                replica,
                time,
                value,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Header plus rows of numbers, for experiment tables.
pub fn write_table_csv<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(invalid("table row length differs from header"));
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_round_trip_is_bit_exact() {
        let g = Grid::unit_interval(5);
        let m =
            GridMeasure::new(g, vec![0.1, 1.0 / 3.0, 0.2, 1e-17, 0.366_666_666_666_666_7]).unwrap();
        let mut buf = Vec::new();
        write_measure_csv(&m, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("cell_index,cell_center,weight\n"));
        assert_eq!(read_measure_csv(buf.as_slice(), g).unwrap(), m);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"n\":5") && json.contains("\"L\":1.0"));
        assert_eq!(serde_json::from_str::<GridMeasure>(&json).unwrap(), m);
    }

    #[test]
    fn path_round_trip() {
        let g = Grid::unit_torus(3);
        let a = GridMeasure::new(g, vec![0.2, 0.3, 0.5]).unwrap();
        let b = GridMeasure::new(g, vec![0.4, 0.3, 0.3]).unwrap();
        let p = MeasurePath::from_slices(0.0, 0.25, vec![a, b]).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&p, &mut buf).unwrap();
        let back = read_path_csv(buf.as_slice(), g).unwrap();
        for (x, y) in back.slices().iter().zip(p.slices()) {
            for (u, v) in x.weights().iter().zip(y.weights()) {
                assert!((u - v).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn trajectory_rows() {
        let mut buf = Vec::new();
        write_trajectory_csv(&[(vec![0.0, 0.5], vec![1.0, 0.5])], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "replica,time,value\n0,0.0,1.0\n0,0.5,0.5\n"
        );
    }
}
