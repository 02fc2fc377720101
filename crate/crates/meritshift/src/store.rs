//! Dataset directories, run manifests and atomic output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use meritshift_core::data::SynthConfig;
use meritshift_core::{Dataset, Provenance};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, Result};
use crate::ingest::{ingest_with, IngestOptions};
use crate::io::{self, format_timestamp};

pub const CURVES_FILE: &str = "curves.csv";
pub const PRICES_FILE: &str = "prices.csv";
pub const RENEWABLES_FILE: &str = "renewables.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub provenance: Provenance,
    pub hours: usize,
    pub first_timestamp: Option<String>,
    pub last_timestamp: Option<String>,
    pub curve_rows: usize,
    pub renewable_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
}

impl DatasetSummary {
    pub fn of(dataset: &Dataset, synth: Option<SynthConfig>) -> Self {
        let r = dataset.records();
        DatasetSummary {
            provenance: dataset.provenance(),
            hours: r.len(),
            first_timestamp: r.first().map(|x| format_timestamp(x.timestamp)),
            last_timestamp: r.last().map(|x| format_timestamp(x.timestamp)),
            curve_rows: r.iter().map(|x| x.supply_curve.len() + x.demand_curve.len()).sum(),
            renewable_rows: r.len() * io::QUARTERS_PER_HOUR as usize,
            synth,
        }
    }
}

/// Written next to every command's outputs. `config` is the fully resolved
/// parameter set, so a run can be repeated from the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSummary>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| AppError::format(path, e))
}

/// Replaces `path` in one rename so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| AppError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| AppError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| AppError::io(path, e))?;
    tmp.persist(path).map_err(|e| AppError::io(path, e.error))?;
    Ok(())
}

/// Collects the files a command writes, then records them in a manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| AppError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.written.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        inputs: Vec<FileDigest>,
        dataset: Option<DatasetSummary>,
    ) -> Result<Manifest> {
        let manifest = Manifest {
            tool: concat!("meritshift ", env!("CARGO_PKG_VERSION")).to_string(),
            command: command.to_string(),
            config,
            inputs,
            outputs: std::mem::take(&mut self.written),
            dataset,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| AppError::format(&self.root, e))?;
        bytes.push(b'\n');
        write_atomic(&self.path(MANIFEST_FILE), &bytes)?;
        Ok(manifest)
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>, name: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| AppError::format(name, e))?;
    Ok(buf)
}

/// Writes the three canonical CSVs of `dataset` into `out`.
pub fn write_dataset_files(out: &mut OutputDir, dataset: &Dataset) -> Result<()> {
    let r = dataset.records();
    let root = out.root().to_path_buf();
    let curves = csv_bytes(|b| io::write_curves(b, r), &root.join(CURVES_FILE))?;
    out.write(CURVES_FILE, &curves)?;
    let prices = csv_bytes(|b| io::write_prices(b, r), &root.join(PRICES_FILE))?;
    out.write(PRICES_FILE, &prices)?;
    let renewables = csv_bytes(|b| io::write_renewables(b, r), &root.join(RENEWABLES_FILE))?;
    out.write(RENEWABLES_FILE, &renewables)?;
    Ok(())
}

/// Loads a dataset directory without re-rounding, taking the provenance
/// from its manifest when there is one.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(AppError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let (dataset, _) = ingest_with(
        &dir.join(CURVES_FILE),
        &dir.join(PRICES_FILE),
        &dir.join(RENEWABLES_FILE),
        IngestOptions { round_prices: false },
    )?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let provenance = if manifest_path.exists() {
        read_manifest(&manifest_path)?
            .dataset
            .map_or(Provenance::Real, |d| d.provenance)
    } else {
        Provenance::Real
    };
    Ok(Dataset::new(dataset.into_records(), provenance)?)
}

/// Digests of the canonical files of a dataset directory.
pub fn dataset_digests(dir: &Path) -> Result<Vec<FileDigest>> {
    [CURVES_FILE, PRICES_FILE, RENEWABLES_FILE]
        .iter()
        .map(|f| file_digest(&dir.join(f)))
        .collect()
}
