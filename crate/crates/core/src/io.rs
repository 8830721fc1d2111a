//! File formats: sampled volumes with JSON sidecars, basis manifests,
//! coefficient tables, error budgets, and experiment CSVs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approx::{CoefficientSet, ErrorBudget, VolumeSamples};
use crate::basis::{BasisIndex, GridSpec, TruncationSet};
use crate::diagnostics::{GramReport, SweepRow, Table1, XiScanRow};
use crate::error::{Error, Result};
use crate::radial::{BandSpec, RadialSpectrum};

pub const FORMAT_VERSION: u32 = 1;

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "float64")]
    Float64,
    #[serde(rename = "complex128")]
    Complex128,
}

/// JSON sidecar stored next to a volume as `<volume>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub dtype: Dtype,
    pub real_flag: bool,
    pub format_version: u32,
    /// Outside-ball sample energy over a lattice larger than the cube.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outside_energy: Option<f64>,
}

pub fn sidecar_path(volume: &Path) -> PathBuf {
    let mut s = volume.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes raw little-endian samples (`k_x` slowest, `k_z` fastest) and the
/// sidecar. Real volumes are stored as `float64`, others as `complex128`.
pub fn write_volume(path: &Path, volume: &VolumeSamples, c: Option<f64>) -> Result<()> {
    let dtype = if volume.is_real() { Dtype::Float64 } else { Dtype::Complex128 };
    let width = if volume.is_real() { 8 } else { 16 };
    let mut buf = Vec::with_capacity(volume.values().len() * width);
    for v in volume.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        if !volume.is_real() {
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    let header = VolumeHeader {
        l: volume.grid().l(),
        c,
        dtype,
        real_flag: volume.is_real(),
        format_version: FORMAT_VERSION,
        outside_energy: volume.stored_outside_energy(),
    };
    write_atomic(path, &buf)?;
    write_atomic(&sidecar_path(path), &json_bytes(&header)?)
}

/// Reads a volume and its sidecar.
pub fn read_volume(path: &Path) -> Result<(VolumeSamples, VolumeHeader)> {
    let side = sidecar_path(path);
    let text = fs::read(&side)?;
    let header: VolumeHeader = serde_json::from_slice(&text)
        .map_err(|e| Error::Format(format!("{}: bad volume header: {e}", side.display())))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported format version {}",
            side.display(),
            header.format_version
        )));
    }
    if header.dtype == Dtype::Float64 && !header.real_flag {
        return Err(Error::Format(format!("{}: float64 volumes must set real_flag", side.display())));
    }
    let grid = GridSpec::new(header.l).map_err(|e| Error::Format(format!("{}: {e}", side.display())))?;
    let bytes = fs::read(path)?;
    let width = match header.dtype {
        Dtype::Float64 => 8,
        Dtype::Complex128 => 16,
    };
    if bytes.len() != grid.len() * width {
        return Err(Error::Format(format!(
            "{}: holds {} bytes, expected {} for L = {}",
            path.display(),
            bytes.len(),
            grid.len() * width,
            header.l
        )));
    }
    let floats: Vec<f64> = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
    let values: Vec<Complex64> = match header.dtype {
        Dtype::Float64 => floats.into_iter().map(|re| Complex64::new(re, 0.0)).collect(),
        Dtype::Complex128 => floats.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect(),
    };
    let mut volume = VolumeSamples::new(grid, values, header.real_flag)?;
    if let Some(e) = header.outside_energy {
        volume = volume.with_outside_energy(e).map_err(|e| Error::Format(format!("{}: {e}", side.display())))?;
    }
    Ok((volume, header))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub index: BasisIndex,
    pub alpha_tilde: f64,
}

/// Ordered list of the indices in a truncation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub c: f64,
    #[serde(rename = "L")]
    pub l: Option<u32>,
    #[serde(rename = "T")]
    pub t: f64,
    pub count: usize,
    pub indices: Vec<ManifestEntry>,
    pub format_version: u32,
}

impl Manifest {
    pub fn new(set: &TruncationSet, l: Option<u32>) -> Self {
        let indices = set
            .indices()
            .iter()
            .map(|&index| ManifestEntry { index, alpha_tilde: set.alpha_tilde(index).expect("index in set") })
            .collect();
        Self { c: set.band().c(), l, t: set.t(), count: set.len(), indices, format_version: FORMAT_VERSION }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    write_atomic(path, &json_bytes(manifest)?)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(path)?)
        .map_err(|e| Error::Format(format!("{}: bad manifest: {e}", path.display())))?;
    if manifest.count != manifest.indices.len() {
        return Err(Error::Format(format!("{}: count disagrees with the index list", path.display())));
    }
    Ok(manifest)
}

/// One row of a coefficient CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    #[serde(rename = "N")]
    pub degree: u32,
    pub m: i32,
    pub n: u32,
    pub re_b_hat: f64,
    pub im_b_hat: f64,
    pub re_a_hat: f64,
    pub im_a_hat: f64,
    pub alpha_tilde: f64,
}

pub fn write_coefficients(path: &Path, coeffs: &CoefficientSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (((index, b), a), at) in coeffs.indices().iter().zip(coeffs.b_hat()).zip(coeffs.a_hat()).zip(coeffs.alpha_tilde())
    {
        w.serialize(CoefficientRow {
            degree: index.degree,
            m: index.order,
            n: index.radial,
            re_b_hat: b.re,
            im_b_hat: b.im,
            re_a_hat: a.re,
            im_a_hat: a.im,
            alpha_tilde: *at,
        })?;
    }
    write_csv(path, w)
}

pub fn read_coefficient_rows(path: &Path) -> Result<Vec<CoefficientRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let expected = ["N", "m", "n", "re_b_hat", "im_b_hat", "re_a_hat", "im_a_hat", "alpha_tilde"];
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().ne(expected) {
        return Err(Error::Format(format!("{}: unexpected header {:?}", path.display(), headers)));
    }
    reader.deserialize().map(|r| r.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(format!("{}: {e}", path.display()))
    }
}

/// Rebuilds a coefficient set from CSV rows, checking every index and its
/// concentration against `spectrum`.
pub fn coefficients_from_rows(
    rows: &[CoefficientRow],
    spectrum: &RadialSpectrum,
    l: u32,
    t: f64,
    real_input: bool,
) -> Result<CoefficientSet> {
    let band: BandSpec = spectrum.band();
    let mut indices = Vec::with_capacity(rows.len());
    let mut alpha_tilde = Vec::with_capacity(rows.len());
    let mut b_hat = Vec::with_capacity(rows.len());
    let mut a_hat = Vec::with_capacity(rows.len());
    for row in rows {
        let index = BasisIndex::new(row.degree, row.m, row.n).map_err(|e| Error::Input(e.to_string()))?;
        let expected = spectrum
            .system(row.degree)
            .and_then(|s| s.alpha_tildes().get(row.n as usize).copied())
            .ok_or_else(|| Error::Input(format!("index {index} is not resolved for c = {}", band.c())))?;
        if (expected - row.alpha_tilde).abs() > 1e-8 * expected.max(1e-300) + 1e-15 {
            return Err(Error::Input(format!(
                "index {index} has alpha_tilde {} in the file but {expected} for c = {}",
                row.alpha_tilde,
                band.c()
            )));
        }
        indices.push(index);
        alpha_tilde.push(row.alpha_tilde);
        b_hat.push(Complex64::new(row.re_b_hat, row.im_b_hat));
        a_hat.push(Complex64::new(row.re_a_hat, row.im_a_hat));
    }
    CoefficientSet::from_parts(band, l, t, real_input, indices, alpha_tilde, b_hat, a_hat)
}

pub fn write_budget(path: &Path, budget: &ErrorBudget) -> Result<()> {
    write_atomic(path, &json_bytes(budget)?)
}

pub fn write_xi_scan(path: &Path, rows: &[XiScanRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    write_csv(path, w)
}

pub fn write_gram(path: &Path, reports: &[GramReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["T", "max_deviation"])?;
    for r in reports {
        w.write_record([r.t.to_string(), r.max_deviation.to_string()])?;
    }
    write_csv(path, w)
}

/// Layout of the printed table: a header row of `L` values, a row of sample
/// counts, then one row per `log10 T`.
pub fn write_table1(path: &Path, table: &Table1) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["L".to_string()];
    head.extend(table.l_list.iter().map(|l| l.to_string()));
    w.write_record(&head)?;
    let mut samples = vec!["samples".to_string()];
    samples.extend(table.samples.iter().map(|s| s.to_string()));
    w.write_record(&samples)?;
    for (lt, row) in table.log_t.iter().zip(&table.ratios) {
        let mut rec = vec![lt.to_string()];
        rec.extend(row.iter().map(|r| format!("{r:.2}")));
        w.write_record(&rec)?;
    }
    write_csv(path, w)
}

pub fn write_gaussian_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    write_csv(path, w)
}

fn write_csv(path: &Path, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
