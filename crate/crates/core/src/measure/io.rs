//! On-disk form of a measure: a CSV of `x,y,z,w` rows plus a JSON sidecar.
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` exactly. The sidecar carries the meta record
//! together with the point count and mass.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

use super::{DiscreteMeasure, MeasureMeta};

/// Fixed-format float: 17 significant digits, `.` decimal point.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSidecar {
    pub count: usize,
    pub mass: f64,
    pub meta: MeasureMeta,
}

pub fn write_measure_csv<T: Real, W: Write>(m: &DiscreteMeasure<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "z", "w"])?;
    for (p, &wt) in m.points().iter().zip(m.weights()) {
        w.write_record([
            format_f64(p.x.to_f64_lossy()),
            format_f64(p.y.to_f64_lossy()),
            format_f64(p.z.to_f64_lossy()),
            format_f64(wt.to_f64_lossy()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sidecar<T: Real>(m: &DiscreteMeasure<T>) -> MeasureSidecar {
    MeasureSidecar {
        count: m.len(),
        mass: m.mass().to_f64_lossy(),
        meta: m.meta().clone(),
    }
}

/// Writes `<stem>.csv` and `<stem>.json` and returns both paths.
pub fn save_measure<T: Real>(
    m: &DiscreteMeasure<T>,
    dir: &Path,
    stem: &str,
) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    write_measure_csv(m, BufWriter::new(File::create(&csv_path)?))?;
    let mut f = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut f, &sidecar(m))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok((csv_path, json_path))
}

/// Parses the CSV body; weights are taken as written (no renormalization).
pub fn read_measure_csv<R: Read>(input: R, meta: MeasureMeta) -> Result<DiscreteMeasure<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "z", "w"] {
        return Err(Error::Format(format!(
            "expected header x,y,z,w, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Format(format!("row {}: missing column {k}", line + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))
        };
        points.push(Vec3::new(field(0)?, field(1)?, field(2)?));
        weights.push(field(3)?);
    }
    DiscreteMeasure::new(points, weights, meta)
}

/// Reads a measure saved by [`save_measure`].
pub fn load_measure(csv_path: &Path, json_path: &Path) -> Result<DiscreteMeasure<f64>> {
    let side: MeasureSidecar = serde_json::from_reader(File::open(json_path)?)?;
    let m = read_measure_csv(File::open(csv_path)?, side.meta)?;
    if m.len() != side.count {
        return Err(Error::Format(format!(
            "sidecar lists {} points, CSV has {}",
            side.count,
            m.len()
        )));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_fractal_measure, FractalSpec};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in prop::collection::vec(
                (any::<f64>().prop_filter("finite", |v| v.is_finite()),
                 -1e3f64..1e3, -1e-300f64..1e-300, 0.0f64..1e6),
                1..40)
        ) {
            let pts = rows.iter().map(|r| Vec3::new(r.0, r.1, r.2)).collect();
            let w = rows.iter().map(|r| r.3).collect();
            let m = DiscreteMeasure::new(pts, w, MeasureMeta::new("prop")).unwrap();
            let mut buf = Vec::new();
            write_measure_csv(&m, &mut buf).unwrap();
            let back = read_measure_csv(&buf[..], MeasureMeta::new("prop")).unwrap();
            for (a, b) in m.points().iter().zip(back.points()) {
                prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
                prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
                prop_assert_eq!(a.z.to_bits(), b.z.to_bits());
            }
            for (a, b) in m.weights().iter().zip(back.weights()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn save_and_load_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let f = build_fractal_measure::<f64>(&FractalSpec::new(2.0, 1)).unwrap();
        let (c, j) = save_measure(&f.measure, dir.path(), "frac").unwrap();
        let back = load_measure(&c, &j).unwrap();
        assert_eq!(back.len(), 27);
        assert_eq!(back.meta(), f.measure.meta());
        assert_eq!(back.points(), f.measure.points());
    }

    #[test]
    fn rejects_wrong_header() {
        let r = read_measure_csv("a,b,c,d\n1,2,3,4\n".as_bytes(), MeasureMeta::new("x"));
        assert!(matches!(r, Err(Error::Format(_))));
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
    }
}
