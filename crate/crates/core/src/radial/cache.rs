//! On-disk cache of radial eigensystems, one file per `(c, N, q)`.
//!
//! A file holds a single JSON header line followed by little-endian `f64`
//! arrays: nodes, weights, eigenvalues `beta`, and the eigenvector table in
//! column-major order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{solve_band_with, solve_radial, BandSpec, RadialEigensystem, RadialSpectrum, SpectrumOptions};
use crate::error::{Error, Result};
use crate::quadrature::Rule1D;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    c: f64,
    #[serde(rename = "N")]
    degree: u32,
    q: usize,
    n_kept: usize,
    omitted_alpha_tilde: f64,
    format_version: u32,
}

/// Writes `sys` in the cache format.
pub fn write_eigensystem(path: &Path, sys: &RadialEigensystem) -> Result<()> {
    let q = sys.quadrature().len();
    let header = Header {
        c: sys.band().c(),
        degree: sys.degree(),
        q,
        n_kept: sys.len(),
        omitted_alpha_tilde: sys.omitted_alpha_tilde(),
        format_version: FORMAT_VERSION,
    };
    let mut buf = serde_json::to_vec(&header)?;
    buf.push(b'\n');
    let arrays = [
        sys.quadrature().nodes.as_slice(),
        sys.quadrature().weights.as_slice(),
        sys.betas(),
        sys.vectors().as_slice(),
    ];
    for values in arrays {
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    // write-then-rename so concurrent readers never see a partial file
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(&buf)?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads an eigensystem written by [`write_eigensystem`].
pub fn read_eigensystem(path: &Path) -> Result<RadialEigensystem> {
    let bytes = fs::read(path)?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format(format!("{}: missing header line", path.display())))?;
    let header: Header = serde_json::from_slice(&bytes[..split])
        .map_err(|e| Error::Format(format!("{}: bad header: {e}", path.display())))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported format version {}",
            path.display(),
            header.format_version
        )));
    }
    let band = BandSpec::new(header.c).map_err(|e| Error::Format(e.to_string()))?;
    let (q, n) = (header.q, header.n_kept);
    let body = &bytes[split + 1..];
    let expected = 8 * (2 * q + n + q * n);
    if body.len() != expected || q == 0 || n > q {
        return Err(Error::Format(format!(
            "{}: body holds {} bytes, expected {expected}",
            path.display(),
            body.len()
        )));
    }
    let mut values = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")));
    let mut take = |k: usize| -> Vec<f64> { values.by_ref().take(k).collect() };
    let nodes = take(q);
    let weights = take(q);
    let betas = take(n);
    let vectors = DMatrix::from_column_slice(q, n, &take(q * n));
    if betas.iter().any(|b| *b == 0.0 || !b.is_finite()) {
        return Err(Error::Format(format!("{}: invalid eigenvalue", path.display())));
    }
    let rule = Rule1D { nodes, weights, interval: (0.0, 1.0) };
    Ok(RadialEigensystem::from_parts(band, header.degree, rule, betas, vectors, header.omitted_alpha_tilde))
}

/// Directory of cached radial eigensystems.
#[derive(Debug, Clone)]
pub struct RadialCache {
    dir: PathBuf,
}

impl RadialCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, c: f64, degree: u32, q: usize) -> PathBuf {
        self.dir.join(format!("radial-{:016x}-N{degree}-q{q}.bin", c.to_bits()))
    }

    /// Loads the eigensystem for `(c, N, q)` when cached, solving and storing
    /// it otherwise. Only the first `keep(sys)` eigenpairs are stored.
    fn load_or_solve(
        &self,
        band: BandSpec,
        degree: u32,
        q: usize,
        keep: impl Fn(&RadialEigensystem) -> usize,
    ) -> Result<RadialEigensystem> {
        let path = self.path_for(band.c(), degree, q);
        if path.exists() {
            let sys = read_eigensystem(&path)?;
            if sys.band() == band && sys.degree() == degree && sys.quadrature().len() == q {
                return Ok(sys);
            }
            log::warn!("{} does not match its key; recomputing", path.display());
        }
        let mut sys = solve_radial(band, degree, q, q)?;
        sys.truncate(keep(&sys).max(1));
        write_eigensystem(&path, &sys)?;
        Ok(sys)
    }

    /// Same result as [`super::solve_band`], reusing cached degrees.
    pub fn solve_band(&self, band: BandSpec, options: SpectrumOptions) -> Result<RadialSpectrum> {
        let keep = |sys: &RadialEigensystem| sys.alpha_tildes().iter().take_while(|&&a| a > options.cutoff).count();
        solve_band_with(band, options, |degree, q| self.load_or_solve(band, degree, q, keep))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::solve_band;
    use std::f64::consts::PI;

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let band = BandSpec::new(4.0 * PI).unwrap();
        let sys = solve_radial(band, 2, 40, 10).unwrap();
        let path = dir.path().join("sys.bin");
        write_eigensystem(&path, &sys).unwrap();
        let back = read_eigensystem(&path).unwrap();
        assert_eq!(back.betas(), sys.betas());
        assert_eq!(back.alpha_tildes(), sys.alpha_tildes());
        assert_eq!(back.quadrature(), sys.quadrature());
        assert_eq!(back.vectors(), sys.vectors());
        assert_eq!(back.eval_radial(3, 0.3).unwrap(), sys.eval_radial(3, 0.3).unwrap());
    }

    #[test]
    fn cached_band_matches_fresh_solve() {
        let dir = tempfile::tempdir().unwrap();
        let cache = RadialCache::new(dir.path()).unwrap();
        let band = BandSpec::new(3.0 * PI).unwrap();
        let opts = SpectrumOptions::default();
        let fresh = solve_band(band, opts).unwrap();
        let first = cache.solve_band(band, opts).unwrap();
        let second = cache.solve_band(band, opts).unwrap();
        assert_eq!(fresh.systems().len(), second.systems().len());
        for ((a, b), c) in fresh.systems().iter().zip(first.systems()).zip(second.systems()) {
            assert_eq!(a.betas(), b.betas());
            assert_eq!(a.betas(), c.betas());
            assert_eq!(a.vectors(), c.vectors());
        }
        assert_eq!(fresh.omitted_bound(), second.omitted_bound());
    }

    #[test]
    fn truncated_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let band = BandSpec::new(2.0).unwrap();
        let sys = solve_radial(band, 0, 30, 4).unwrap();
        let path = dir.path().join("sys.bin");
        write_eigensystem(&path, &sys).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_eigensystem(&path), Err(Error::Format(_))));
        fs::write(&path, b"not json\n").unwrap();
        assert!(matches!(read_eigensystem(&path), Err(Error::Format(_))));
    }
}
