use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icp::StopReason;
use crate::minimizer::RigidTransform;
use crate::pointcloud::{load_cloud, CloudFormat, PointCloud};

/// Outcome of one perturbed registration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub pair_id: String,
    /// Filter kind name.
    pub filter: String,
    /// Swept parameter; empty for parameterless kinds.
    pub param: Option<f64>,
    pub scale_mode: String,
    pub perturb_idx: usize,
    pub trans_err_m: f64,
    pub rot_err_rad: f64,
    pub iters: usize,
    pub stop_reason: StopReason,
}

/// Streams records as CSV with the header
/// `pair_id,filter,param,scale_mode,perturb_idx,trans_err_m,rot_err_rad,iters,stop_reason`.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(writer: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(writer),
        }
    }

    pub fn write(&mut self, record: &BenchmarkRecord) -> Result<()> {
        self.inner.serialize(record)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn write_records<W: Write>(records: &[BenchmarkRecord], writer: W) -> Result<()> {
    let mut w = RecordWriter::new(writer);
    for r in records {
        w.write(r)?;
    }
    w.flush()
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<BenchmarkRecord>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let records = rd.deserialize().collect::<std::result::Result<Vec<BenchmarkRecord>, _>>()?;
    if let Some(r) = records
        .iter()
        .find(|r| !(r.trans_err_m >= 0.0 && r.rot_err_rad >= 0.0))
    {
        return Err(Error::InvalidArgument(format!(
            "negative or missing error in record for pair `{}`",
            r.pair_id
        )));
    }
    Ok(records)
}

pub fn load_records(path: &Path) -> Result<Vec<BenchmarkRecord>> {
    read_records(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// One line of a pair manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub reading_path: PathBuf,
    pub reference_path: PathBuf,
    pub gt_path: PathBuf,
    pub pair_id: String,
    /// Informational only.
    pub overlap: Option<f64>,
}

/// A registration problem: `ground_truth` maps the reading into the
/// reference frame.
#[derive(Debug, Clone)]
pub struct BenchmarkPair {
    pub id: String,
    pub reading: PointCloud,
    pub reference: PointCloud,
    pub ground_truth: RigidTransform,
}

/// Parse a manifest with columns
/// `reading_path,reference_path,gt_path,pair_id,overlap`.
pub fn read_manifest<R: Read>(reader: R) -> Result<Vec<ManifestEntry>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let entries = rd.deserialize().collect::<std::result::Result<Vec<ManifestEntry>, _>>()?;
    if entries.is_empty() {
        return Err(Error::InvalidArgument("manifest lists no pairs".into()));
    }
    Ok(entries)
}

/// Load every pair of a manifest. Relative paths are resolved against the
/// manifest's directory.
pub fn load_pairs(manifest: &Path) -> Result<Vec<BenchmarkPair>> {
    let entries = read_manifest(File::open(manifest).map_err(|e| Error::io(manifest, e))?)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    entries
        .iter()
        .map(|e| {
            let reading = resolve(&e.reading_path);
            let reference = resolve(&e.reference_path);
            Ok(BenchmarkPair {
                id: e.pair_id.clone(),
                reading: load_cloud(&reading, CloudFormat::from_path(&reading))?,
                reference: load_cloud(&reference, CloudFormat::from_path(&reference))?,
                ground_truth: RigidTransform::load(&resolve(&e.gt_path))?,
            })
        })
        .collect()
}
