//! Two-view pair records: the point maps and confidences of an ordered frame
//! pair `(I1, I2)`, both expressed in `I1`'s camera.

use super::container::{Container, Entry};
use super::FormatError;
use crate::geometry::{CameraIntrinsics, ConfidenceMap, PointMap};

pub const PAIR_MAGIC: [u8; 4] = *b"PMAP";

/// Reference-view points, second-view points, and their confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub x11: PointMap,
    pub x21: PointMap,
    pub c11: ConfidenceMap,
    pub c21: ConfidenceMap,
    pub k1: Option<CameraIntrinsics>,
    /// Entries other than the required ones, preserved verbatim.
    pub extras: Vec<Entry>,
}

impl PairRecord {
    pub fn new(
        x11: PointMap,
        x21: PointMap,
        c11: ConfidenceMap,
        c21: ConfidenceMap,
        k1: Option<CameraIntrinsics>,
    ) -> Result<Self, FormatError> {
        let dims = x11.dims();
        for (name, d) in [("X21", x21.dims()), ("C11", c11.dims()), ("C21", c21.dims())] {
            if d != dims {
                return Err(FormatError::DimMismatch {
                    entry: name.into(),
                    expected: format!("{dims:?}"),
                    found: vec![d.0, d.1],
                });
            }
        }
        Ok(Self { x11, x21, c11, c21, k1, extras: Vec::new() })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.x11.dims()
    }

    pub fn to_container(&self) -> Container {
        let (h, w) = self.dims();
        let points = |pm: &PointMap| pm.points().iter().flat_map(|p| p.map(|c| c as f32)).collect();
        let conf = |cm: &ConfidenceMap| cm.values().iter().map(|v| *v as f32).collect();
        let mut c = Container::new(PAIR_MAGIC);
        c.push(Entry::new("X11", vec![h, w, 3], points(&self.x11)));
        c.push(Entry::new("X21", vec![h, w, 3], points(&self.x21)));
        c.push(Entry::new("C11", vec![h, w], conf(&self.c11)));
        c.push(Entry::new("C21", vec![h, w], conf(&self.c21)));
        if let Some(k) = self.k1 {
            c.push(Entry::new("K1", vec![4], k.to_array().map(|v| v as f32).to_vec()));
        }
        c.entries.extend(self.extras.iter().cloned());
        c
    }

    pub fn from_container(c: &Container) -> Result<Self, FormatError> {
        let x11 = c.require("X11")?;
        let (h, w) = match x11.dims.as_slice() {
            [h, w, 3] => (*h, *w),
            _ => {
                return Err(FormatError::DimMismatch {
                    entry: "X11".into(),
                    expected: "(H, W, 3)".into(),
                    found: x11.dims.clone(),
                })
            }
        };
        let expect = |name: &str, dims: &[usize]| -> Result<&Entry, FormatError> {
            let e = c.require(name)?;
            if e.dims != dims {
                return Err(FormatError::DimMismatch {
                    entry: name.into(),
                    expected: format!("{dims:?}"),
                    found: e.dims.clone(),
                });
            }
            Ok(e)
        };
        let points = |e: &Entry| {
            let pts = e.data.chunks_exact(3).map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect();
            PointMap::new(h, w, pts).map_err(|err| FormatError::InvalidPayload {
                entry: e.name.clone(),
                reason: err.to_string(),
            })
        };
        let conf = |e: &Entry| {
            ConfidenceMap::new(h, w, e.data.iter().map(|v| *v as f64).collect()).map_err(|err| {
                FormatError::InvalidPayload { entry: e.name.clone(), reason: err.to_string() }
            })
        };
        let x11 = points(x11)?;
        let x21 = points(expect("X21", &[h, w, 3])?)?;
        let c11 = conf(expect("C11", &[h, w])?)?;
        let c21 = conf(expect("C21", &[h, w])?)?;
        let k1 = match c.get("K1") {
            None => None,
            Some(_) => {
                let e = expect("K1", &[4])?;
                let v: Vec<f64> = e.data.iter().map(|v| *v as f64).collect();
                Some(CameraIntrinsics::new(v[0], v[1], v[2], v[3]).map_err(|err| {
                    FormatError::InvalidPayload { entry: "K1".into(), reason: err.to_string() }
                })?)
            }
        };
        let extras = c
            .entries
            .iter()
            .filter(|e| !matches!(e.name.as_str(), "X11" | "X21" | "C11" | "C21" | "K1"))
            .cloned()
            .collect();
        Ok(Self { x11, x21, c11, c21, k1, extras })
    }
}

pub fn write_pointmap_file(record: &PairRecord) -> Result<Vec<u8>, FormatError> {
    record.to_container().encode()
}

pub fn read_pointmap_file(bytes: &[u8]) -> Result<PairRecord, FormatError> {
    PairRecord::from_container(&Container::decode(bytes, PAIR_MAGIC)?)
}
