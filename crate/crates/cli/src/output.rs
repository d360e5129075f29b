//! File output: atomic writes, number formatting and run manifests.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use ghostshield::pnm::{self, GrayEncoding};
use ghostshield::raster::Raster;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PgmEncoding;
use crate::error::{CliError, CliResult};

/// Write through a sibling temp file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Six significant digits, plain notation for moderate magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        trim(format!("{x:.*}", (5 - exp) as usize))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Collects the files a command writes, with their checksums.
pub struct OutputDir {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), checksums: BTreeMap::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a primary output and record its checksum.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.checksums.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    /// Write a derived convenience file; not checksummed.
    pub fn write_derived(&self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_gray(&mut self, name: &str, img: &Raster<u64>, encoding: PgmEncoding, png: bool) -> CliResult<()> {
        let enc = match encoding {
            PgmEncoding::Plain => GrayEncoding::Plain,
            PgmEncoding::Raw => GrayEncoding::Raw,
        };
        let mut bytes = Vec::new();
        pnm::write_pgm(&mut bytes, img, enc)?;
        self.write(&format!("{name}.pgm"), &bytes)?;
        if png {
            self.write_derived(&format!("{name}.png"), &png_bytes(img)?)?;
        }
        Ok(())
    }

    pub fn finish(self, manifest: RunManifest) -> CliResult<()> {
        let manifest = RunManifest { outputs: self.checksums.clone(), ..manifest };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write_atomic(&self.path("manifest.json"), text.as_bytes())
    }
}

fn png_bytes(img: &Raster<u64>) -> CliResult<Vec<u8>> {
    let max = img.as_slice().iter().copied().max().unwrap_or(0).max(1);
    let scaled: Vec<u16> = img.as_slice().iter().map(|&v| (v * u16::MAX as u64 / max) as u16).collect();
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(img.width() as u32, img.height() as u32, scaled)
        .expect("buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    image::DynamicImage::ImageLuma16(buf)
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| CliError::io("png", std::io::Error::other(e)))?;
    Ok(out.into_inner())
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub software: String,
    pub command: String,
    /// SHA-256 of the effective config with the output directory blanked.
    pub config_digest: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    /// SHA-256 of each primary output, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(0.5), "0.5");
        assert_eq!(sig6(0.993790320), "0.99379");
        assert_eq!(sig6(0.00620967), "0.00620967");
        assert_eq!(sig6(5.0), "5");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.8), "1.23457e6");
        assert_eq!(sig6(9.9999996), "10");
        assert_eq!(sig6(-2.5e-7), "-2.5e-7");
        assert_eq!(sig6(1.0), "1");
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"hello").unwrap();
        write_atomic(&p, b"again").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"again");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
