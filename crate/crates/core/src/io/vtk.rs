//! Legacy ASCII VTK `STRUCTURED_GRID` output.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, Transformation};

/// Node order expected by VTK: first axis fastest.
fn vtk_order(grid: &GridSpec) -> impl Iterator<Item = usize> + '_ {
    let n = grid.n();
    let nz = if grid.dim() == 3 { n } else { 1 };
    (0..nz).flat_map(move |k| {
        (0..n).flat_map(move |j| {
            (0..n).map(move |i| {
                if grid.dim() == 3 {
                    grid.linear_index(&[i, j, k])
                } else {
                    grid.linear_index(&[i, j])
                }
            })
        })
    })
}

/// Writes the mapped mesh with optional named point scalars.
pub fn write_structured_grid<W: Write>(
    mesh: &Transformation,
    point_data: &[(&str, &ScalarField)],
    title: &str,
    mut sink: W,
) -> Result<()> {
    let grid = *mesh.grid();
    for (name, s) in point_data {
        if s.grid() != &grid {
            return Err(Error::GridMismatch(format!("point data {name:?}")));
        }
    }
    let n = grid.n();
    let nz = if grid.dim() == 3 { n } else { 1 };
    writeln!(sink, "# vtk DataFile Version 3.0")?;
    writeln!(sink, "{}", title.lines().next().unwrap_or("curlgrid"))?;
    writeln!(sink, "ASCII")?;
    writeln!(sink, "DATASET STRUCTURED_GRID")?;
    writeln!(sink, "DIMENSIONS {n} {n} {nz}")?;
    writeln!(sink, "POINTS {} double", grid.len())?;
    let p = mesh.positions();
    for node in vtk_order(&grid) {
        let x = p.component(0).values()[node];
        let y = p.component(1).values()[node];
        let z = if grid.dim() == 3 {
            p.component(2).values()[node]
        } else {
            0.0
        };
        writeln!(sink, "{x:.17e} {y:.17e} {z:.17e}")?;
    }
    if !point_data.is_empty() {
        writeln!(sink, "POINT_DATA {}", grid.len())?;
        for (name, s) in point_data {
            writeln!(sink, "SCALARS {name} double 1")?;
            writeln!(sink, "LOOKUP_TABLE default")?;
            for node in vtk_order(&grid) {
                writeln!(sink, "{:.17e}", s.values()[node])?;
            }
        }
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_identity_mesh() {
        let g = GridSpec::new(2, 3).unwrap();
        let mut out = Vec::new();
        write_structured_grid(&Transformation::identity(g), &[], "id", &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[4], "DIMENSIONS 3 3 1");
        assert_eq!(lines[5], "POINTS 9 double");
        let pts: Vec<Vec<f64>> = lines[6..15]
            .iter()
            .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
            .collect();
        assert_eq!(pts[1], vec![0.5, 0.0, 0.0]);
        assert_eq!(pts[3], vec![0.0, 0.5, 0.0]);
        assert!(pts.iter().all(|p| p[2] == 0.0));
    }

    #[test]
    fn point_data_block() {
        let g = GridSpec::new(3, 3).unwrap();
        let s = ScalarField::constant(g, 2.0);
        let mut out = Vec::new();
        write_structured_grid(&Transformation::identity(g), &[("jacobian", &s)], "t", &mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("POINT_DATA 27\nSCALARS jacobian double 1\nLOOKUP_TABLE default\n"));
        assert_eq!(text.lines().count(), 6 + 27 + 3 + 27);
    }
}
