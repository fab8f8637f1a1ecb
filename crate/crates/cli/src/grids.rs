//! CSV emission of evaluated test-function coordinates.
//!
//! One file per coordinate, named `<prefix>_<criterion>_<slug>.csv`. Values
//! are the raw A-minus-B differences; rows are ordered lexicographically over
//! grid indices. These files are the data behind surface/line plots of the
//! coordinate processes.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;

use domtest_core::{CoordinateField, Criterion, Domain, EvaluationGrid};

pub fn emit_grids(
    fields: &[CoordinateField],
    grid: &EvaluationGrid,
    prefix: &str,
    criterion: Criterion,
) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(fields.len());
    for field in fields {
        let path = PathBuf::from(format!(
            "{prefix}_{}_{}.csv",
            criterion.as_str().to_ascii_lowercase(),
            field.slug
        ));
        let file = std::fs::File::create(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        write_field(&mut w, field, grid)?;
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

fn write_field(
    w: &mut impl Write,
    field: &CoordinateField,
    grid: &EvaluationGrid,
) -> anyhow::Result<()> {
    let (rows, cols) = field.shape;
    match field.domain {
        Domain::ZAxis => {
            writeln!(w, "z,value")?;
            for (k, &v) in field.values.iter().enumerate() {
                writeln!(w, "{},{}", grid.z_points[k], v)?;
            }
        }
        Domain::NegXAxis => {
            writeln!(w, "x,value")?;
            for (i, &v) in field.values.iter().enumerate() {
                writeln!(w, "{},{}", -grid.x_pos_points[i], v)?;
            }
        }
        Domain::PosXAxis => {
            writeln!(w, "x,value")?;
            for (i, &v) in field.values.iter().enumerate() {
                writeln!(w, "{},{}", grid.x_pos_points[i], v)?;
            }
        }
        Domain::XzPlaneNegX | Domain::XzPlanePosX => {
            writeln!(w, "x,z,value")?;
            let sign = if field.domain == Domain::XzPlaneNegX {
                -1.0
            } else {
                1.0
            };
            for i in 0..rows {
                let x = sign * grid.x_pos_points[i];
                for k in 0..cols {
                    writeln!(w, "{},{},{}", x, grid.z_points[k], field.values[i * cols + k])?;
                }
            }
        }
        Domain::X1X2Quadrant => {
            writeln!(w, "x1,x2,value")?;
            for i1 in 0..rows {
                for i2 in 0..cols {
                    writeln!(
                        w,
                        "{},{},{}",
                        grid.x_pos_points[i1],
                        grid.x_pos_points[i2],
                        field.values[i1 * cols + i2]
                    )?;
                }
            }
        }
    }
    Ok(())
}
