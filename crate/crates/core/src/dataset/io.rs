use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{Dataset, DatasetMeta};
use crate::artifact::{push_f32, Container, PayloadReader};
use crate::error::{Error, Result};
use crate::physics::AngleGrid;

const KIND: &str = "ris-dataset";
const VERSION: u32 = 1;

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let m = &ds.meta;
    let mut c = Container::new(KIND, VERSION);
    c.set("fingerprint", &m.fingerprint)
        .set("count", ds.len())
        .set("harmonics", ds.harmonics())
        .set("grid_min_deg", m.grid.min_deg)
        .set("grid_max_deg", m.grid.max_deg)
        .set("grid_count", m.grid.count)
        .set("sigma1", m.sigma1)
        .set("sigma2", m.sigma2)
        .set("seed", m.seed)
        .set("rejected", m.rejected)
        .set("w_hi", ds.scaling.w_hi)
        .set("p_min", ds.scaling.p_min)
        .set("p_max", ds.scaling.p_max);
    c.payload.reserve(4 * (ds.w.len() + ds.p.len()));
    push_f32(&mut c.payload, ds.w.iter().copied());
    push_f32(&mut c.payload, ds.p.iter().copied());
    c.write(path)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let c = Container::read(path, KIND, VERSION)?;
    let count: usize = c.parse("count")?;
    let harmonics: usize = c.parse("harmonics")?;
    let grid = AngleGrid {
        min_deg: c.parse("grid_min_deg")?,
        max_deg: c.parse("grid_max_deg")?,
        count: c.parse("grid_count")?,
    };
    let meta = DatasetMeta {
        fingerprint: c.parse("fingerprint")?,
        grid,
        sigma1: c.parse("sigma1")?,
        sigma2: c.parse("sigma2")?,
        seed: c.parse("seed")?,
        rejected: c.parse("rejected")?,
    };
    let mut r = PayloadReader::new(&c.payload);
    let bad = |reason: String| Error::format(path, reason);
    let w = r.f32s(count * harmonics).map_err(bad)?;
    let p = r.f32s(count * grid.count).map_err(bad)?;
    r.finish().map_err(bad)?;
    let ds = Dataset::new(
        Array2::from_shape_vec((count, harmonics), w).map_err(|e| bad(e.to_string()))?,
        Array2::from_shape_vec((count, grid.count), p).map_err(|e| bad(e.to_string()))?,
        meta,
    )?;
    let stored = (c.parse::<f64>("w_hi")?, c.parse::<f64>("p_min")?, c.parse::<f64>("p_max")?);
    if stored != (ds.scaling.w_hi, ds.scaling.p_min, ds.scaling.p_max) {
        return Err(bad("stored scaling does not match the data".into()));
    }
    Ok(ds)
}

/// Loads a dataset and insists it was produced by the given physics setup.
pub fn load_dataset_checked(path: &Path, fingerprint: &str) -> Result<Dataset> {
    let ds = load_dataset(path)?;
    if ds.meta.fingerprint != fingerprint {
        return Err(Error::Fingerprint { expected: fingerprint.to_string(), found: ds.meta.fingerprint });
    }
    Ok(ds)
}

/// Plain CSV with columns `W_1..W_N, P_1..P_K`.
pub fn export_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> =
        (1..=ds.harmonics()).map(|n| format!("W_{n}")).chain((1..=ds.n_angles()).map(|k| format!("P_{k}"))).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..ds.len() {
        let (w, p) = ds.sample(i);
        for (j, v) in w.iter().chain(p.iter()).enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", *v as f32).unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, DatasetConfig};
    use crate::physics::{PhysicsConfig, Simulator};

    fn small() -> Dataset {
        let sim = Simulator::new(PhysicsConfig::default()).unwrap();
        generate_dataset(&sim, &DatasetConfig { count: 12, seed: 5, ..Default::default() }).unwrap()
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small();
        let a = dir.path().join("a.ds");
        let b = dir.path().join("b.ds");
        save_dataset(&ds, &a).unwrap();
        let back = load_dataset(&a).unwrap();
        assert_eq!(back, ds);
        save_dataset(&back, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn altered_fingerprint_fails() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = small();
        let expected = ds.meta.fingerprint.clone();
        ds.meta.fingerprint = "0000000000000000".into();
        let path = dir.path().join("x.ds");
        save_dataset(&ds, &path).unwrap();
        assert!(matches!(load_dataset_checked(&path, &expected), Err(Error::Fingerprint { .. })));
    }

    #[test]
    fn tampered_payload_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ds");
        save_dataset(&small(), &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n - 3] ^= 0x40;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let ds = small();
        export_csv(&ds, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 13);
        let header: Vec<&str> = lines[0].split(',').collect();
        assert_eq!(header.len(), 25 + 81);
        assert_eq!(header[0], "W_1");
        assert_eq!(header[24], "W_25");
        assert_eq!(header[25], "P_1");
        assert_eq!(header[105], "P_81");
        let first: f32 = lines[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(first as f64, ds.w[[0, 0]]);
    }
}
