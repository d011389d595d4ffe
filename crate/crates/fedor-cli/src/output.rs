//! CSV and manifest emission. Files are written through a temp-and-rename
//! guard so an aborted run never leaves partial outputs behind, and every
//! float is rendered with 17 significant digits for lossless round trips.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

/// 17-significant-digit decimal rendering of a binary64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a over a byte string; used to stamp outputs with their manifest.
pub fn fnv1a_hex(data: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in data {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// A CSV file under construction. Rows go to `<name>.tmp`; `finish`
/// renames into place. Dropping without finishing removes the temp file.
pub struct CsvFile {
    path: PathBuf,
    tmp_path: PathBuf,
    writer: Option<BufWriter<File>>,
}

impl CsvFile {
    pub fn create(path: PathBuf, manifest_hash: &str, header: &str) -> io::Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp_path = path.with_extension("csv.tmp");
        let mut writer = BufWriter::new(File::create(&tmp_path)?);
        writeln!(writer, "# manifest={manifest_hash}")?;
        writeln!(writer, "{header}")?;
        Ok(Self {
            path,
            tmp_path,
            writer: Some(writer),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        writeln!(
            self.writer.as_mut().expect("csv still open"),
            "{}",
            fields.join(",")
        )
    }

    pub fn finish(mut self) -> io::Result<PathBuf> {
        let mut writer = self.writer.take().expect("csv still open");
        writer.flush()?;
        drop(writer);
        fs::rename(&self.tmp_path, &self.path)?;
        Ok(self.path.clone())
    }
}

impl Drop for CsvFile {
    fn drop(&mut self) {
        if self.writer.take().is_some() {
            let _ = fs::remove_file(&self.tmp_path);
        }
    }
}

/// Serializes the manifest, writes `manifest.json` next to the outputs, and
/// returns the hash that stamps each CSV.
pub fn write_manifest(out_dir: &Path, manifest: &serde_json::Value) -> io::Result<String> {
    fs::create_dir_all(out_dir)?;
    let canonical = manifest.to_string();
    let hash = fnv1a_hex(canonical.as_bytes());
    let pretty = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(out_dir.join("manifest.json"), pretty + "\n")?;
    Ok(hash)
}
