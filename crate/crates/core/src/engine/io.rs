use std::io::{self, Read, Write};

use super::contour::SurfaceCloud;
use super::field::{DistanceField, FieldSource, Grid};
use super::volume::VolumeSamples;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// `r,V,err` rows.
pub fn write_volume_csv(vs: &VolumeSamples, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "r,V,err")?;
    for k in 0..vs.len() {
        writeln!(
            w,
            "{},{},{}",
            fmt17(vs.radii[k]),
            fmt17(vs.volume[k]),
            fmt17(vs.err[k])
        )?;
    }
    Ok(())
}

/// `x,y,weight,proj_x,proj_y,multiplicity` rows; projection columns are
/// empty for unprojected clouds.
pub fn write_contour_csv(cloud: &SurfaceCloud, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "x,y,weight,proj_x,proj_y,multiplicity")?;
    for p in &cloud.points {
        let (px, py, m) = match &p.projection {
            Some(pr) => (
                fmt17(pr.nearest[0].x),
                fmt17(pr.nearest[0].y),
                pr.multiplicity.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{px},{py},{m}",
            fmt17(p.x.x),
            fmt17(p.x.y),
            fmt17(p.weight)
        )?;
    }
    Ok(())
}

const MAGIC: &[u8; 8] = b"PVGRID01";

/// Little-endian dump: magic, `i0, j0` (i64), `nx, ny` (u64), `h` (f64),
/// then the values row by row.
pub fn write_grid_dump(field: &DistanceField, mut w: impl Write) -> io::Result<()> {
    let g = field.grid;
    w.write_all(MAGIC)?;
    w.write_all(&g.i0.to_le_bytes())?;
    w.write_all(&g.j0.to_le_bytes())?;
    w.write_all(&(g.nx as u64).to_le_bytes())?;
    w.write_all(&(g.ny as u64).to_le_bytes())?;
    w.write_all(&g.h.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a dump back; normals are not stored and come back zero.
pub fn read_grid_dump(mut r: impl Read) -> io::Result<DistanceField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "not a grid dump",
        ));
    }
    let mut b = [0u8; 8];
    let mut next = || -> io::Result<[u8; 8]> {
        r.read_exact(&mut b)?;
        Ok(b)
    };
    let i0 = i64::from_le_bytes(next()?);
    let j0 = i64::from_le_bytes(next()?);
    let nx = u64::from_le_bytes(next()?) as usize;
    let ny = u64::from_le_bytes(next()?) as usize;
    let h = f64::from_le_bytes(next()?);
    let values = (0..nx * ny)
        .map(|_| next().map(f64::from_le_bytes))
        .collect::<io::Result<Vec<_>>>()?;
    Ok(DistanceField {
        grid: Grid { i0, j0, nx, ny, h },
        normals: vec![[0.0; 2]; values.len()],
        values,
        source: FieldSource::DistanceTransform,
        label: String::new(),
        margin: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{volume_from_exact, ExactVolume, RadiiGrid};
    use crate::geometry::{Geometry2D, Point2, Primitive2D};

    #[test]
    fn dump_round_trip() {
        let g: Geometry2D = Primitive2D::disk(Point2::new(0.2, 0.1), 0.5).into();
        let f = DistanceField::from_geometry(&g, 0.3, 0.05, "d").unwrap();
        let mut buf = Vec::new();
        write_grid_dump(&f, &mut buf).unwrap();
        let back = read_grid_dump(&buf[..]).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(back.values, f.values);
        assert!(read_grid_dump(&b"nonsense"[..]).is_err());
    }

    #[test]
    fn csv_round_trips_values() {
        let vs = volume_from_exact(
            &ExactVolume::Disk { radius: 1.0 },
            &RadiiGrid::uniform(0.1, 0.35, 0.1).unwrap(),
        );
        let mut buf = Vec::new();
        write_volume_csv(&vs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<f64> = text
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(row[1], vs.volume[0]);
        assert_eq!(text.lines().count(), 4);
    }
}
