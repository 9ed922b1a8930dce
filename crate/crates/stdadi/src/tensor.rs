//! Channel-augmented feature tensors and their on-disk formats.
//!
//! Layout is `(channel, frame, joint, body)` with the fixed channel
//! order `x, y, z, i1..i8`. Two serializations:
//!
//! * `raw_f32` — a contiguous C-order little-endian `float32` blob at
//!   the destination path plus a textual `<dest>.meta` sidecar carrying
//!   shape, channel order, dtype and endianness;
//! * `csv` — one row per `(frame, joint, body)` with three index
//!   columns followed by the 11 channel values.

use crate::error::{Error, Result};
use ndarray::Array4;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Three coordinate channels plus eight invariant channels.
pub const CHANNELS: usize = 11;

/// Fixed channel ordering.
pub const CHANNEL_LABELS: [&str; CHANNELS] = [
    "x", "y", "z", "i1", "i2", "i3", "i4", "i5", "i6", "i7", "i8",
];

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    data: Array4<f32>,
}

impl FeatureTensor {
    /// Wraps a `(11, frames, joints, bodies)` array.
    pub fn new(data: Array4<f32>) -> Result<Self> {
        if data.shape()[0] != CHANNELS {
            return Err(Error::ShapeMismatch(format!(
                "expected {CHANNELS} channels, got {}",
                data.shape()[0]
            )));
        }
        Ok(FeatureTensor { data })
    }

    pub fn data(&self) -> &Array4<f32> {
        &self.data
    }

    pub fn shape(&self) -> [usize; 4] {
        let s = self.data.shape();
        [s[0], s[1], s[2], s[3]]
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn joints(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn bodies(&self) -> usize {
        self.data.shape()[3]
    }

    /// C-order element iteration as stored on disk.
    fn iter_c_order(&self) -> impl Iterator<Item = f32> + '_ {
        self.data.iter().copied()
    }

    fn check_no_nan(&self) -> Result<()> {
        if self.data.iter().any(|v| v.is_nan()) {
            return Err(Error::NanInTensor);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    RawF32,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw_f32" => Ok(OutputFormat::RawF32),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::ShapeMismatch(format!(
                "unknown output format {other:?} (expected raw_f32 or csv)"
            ))),
        }
    }
}

/// Sidecar path for the raw format: `<dest>.meta`.
pub fn meta_path(dest: &Path) -> PathBuf {
    let mut s = dest.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Serializes the tensor; NaN anywhere is rejected before any file is
/// touched.
pub fn write_feature_tensor(tensor: &FeatureTensor, dest: &Path, format: OutputFormat) -> Result<()> {
    tensor.check_no_nan()?;
    match format {
        OutputFormat::RawF32 => write_raw(tensor, dest),
        OutputFormat::Csv => write_csv(tensor, dest),
    }
}

fn write_raw(tensor: &FeatureTensor, dest: &Path) -> Result<()> {
    let [c, f, j, b] = tensor.shape();
    let mut header = String::new();
    let _ = writeln!(header, "format=stdadi-raw");
    let _ = writeln!(header, "version=1");
    let _ = writeln!(header, "dtype=float32");
    let _ = writeln!(header, "endianness=little");
    let _ = writeln!(header, "order=C");
    let _ = writeln!(header, "shape={c}x{f}x{j}x{b}");
    let _ = writeln!(header, "channels={}", CHANNEL_LABELS.join(","));
    fs::write(meta_path(dest), header)?;

    let mut blob = Vec::with_capacity(c * f * j * b * 4);
    for v in tensor.iter_c_order() {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(dest)?;
    file.write_all(&blob)?;
    Ok(())
}

fn write_csv(tensor: &FeatureTensor, dest: &Path) -> Result<()> {
    let [_, frames, joints, bodies] = tensor.shape();
    let mut out = String::new();
    out.push_str("frame,joint,body");
    for label in CHANNEL_LABELS {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for f in 0..frames {
        for j in 0..joints {
            for b in 0..bodies {
                let _ = write!(out, "{f},{j},{b}");
                for c in 0..CHANNELS {
                    let _ = write!(out, ",{}", tensor.data[[c, f, j, b]]);
                }
                out.push('\n');
            }
        }
    }
    fs::write(dest, out)?;
    Ok(())
}

/// Reads back a tensor written in the raw format, verifying the sidecar.
pub fn read_feature_tensor_raw(dest: &Path) -> Result<FeatureTensor> {
    let header = fs::read_to_string(meta_path(dest))?;
    let mut shape: Option<[usize; 4]> = None;
    for line in header.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        match key {
            "dtype" if value != "float32" => {
                return Err(Error::ShapeMismatch(format!("unsupported dtype {value}")))
            }
            "endianness" if value != "little" => {
                return Err(Error::ShapeMismatch(format!(
                    "unsupported endianness {value}"
                )))
            }
            "order" if value != "C" => {
                return Err(Error::ShapeMismatch(format!("unsupported order {value}")))
            }
            "shape" => {
                let dims: Vec<usize> = value
                    .split('x')
                    .map(|d| {
                        d.parse().map_err(|_| {
                            Error::ShapeMismatch(format!("bad shape field {value:?}"))
                        })
                    })
                    .collect::<Result<_>>()?;
                if dims.len() != 4 {
                    return Err(Error::ShapeMismatch(format!(
                        "expected 4 dimensions, got {}",
                        dims.len()
                    )));
                }
                shape = Some([dims[0], dims[1], dims[2], dims[3]]);
            }
            _ => {}
        }
    }
    let shape = shape.ok_or_else(|| Error::ShapeMismatch("sidecar missing shape".into()))?;
    let blob = fs::read(dest)?;
    let expected = shape.iter().product::<usize>() * 4;
    if blob.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "blob holds {} bytes, shape needs {expected}",
            blob.len()
        )));
    }
    let values: Vec<f32> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let data = Array4::from_shape_vec((shape[0], shape[1], shape[2], shape[3]), values)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    FeatureTensor::new(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn zero_tensor_blob_size_is_count_times_four() {
        let t = FeatureTensor::new(Array4::zeros((11, 2, 25, 1))).unwrap();
        let dir = tempdir().unwrap();
        let dest = dir.path().join("zero.bin");
        write_feature_tensor(&t, &dest, OutputFormat::RawF32).unwrap();
        let blob = std::fs::read(&dest).unwrap();
        assert_eq!(blob.len(), 11 * 2 * 25 * 1 * 4);
        assert_eq!(blob.len(), 2200);
        assert!(blob.iter().all(|&b| b == 0));
    }

    #[test]
    fn raw_round_trip_is_exact() {
        let mut data = Array4::<f32>::zeros((11, 3, 4, 2));
        for (i, v) in data.iter_mut().enumerate() {
            *v = (i as f32) * 0.37 - 5.0;
        }
        let t = FeatureTensor::new(data).unwrap();
        let dir = tempdir().unwrap();
        let dest = dir.path().join("t.bin");
        write_feature_tensor(&t, &dest, OutputFormat::RawF32).unwrap();
        let back = read_feature_tensor_raw(&dest).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn csv_row_count_matches_grid() {
        let t = FeatureTensor::new(Array4::zeros((11, 3, 5, 2))).unwrap();
        let dir = tempdir().unwrap();
        let dest = dir.path().join("t.csv");
        write_feature_tensor(&t, &dest, OutputFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&dest).unwrap();
        let rows = text.lines().count();
        assert_eq!(rows, 1 + 3 * 5 * 2); // header + one row per cell
    }

    #[test]
    fn nan_is_rejected_before_writing() {
        let mut data = Array4::<f32>::zeros((11, 1, 1, 1));
        data[[4, 0, 0, 0]] = f32::NAN;
        let t = FeatureTensor::new(data).unwrap();
        let dir = tempdir().unwrap();
        let dest = dir.path().join("bad.bin");
        assert!(matches!(
            write_feature_tensor(&t, &dest, OutputFormat::RawF32),
            Err(Error::NanInTensor)
        ));
        assert!(!dest.exists());
    }
}
