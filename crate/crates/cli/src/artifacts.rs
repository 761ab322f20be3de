//! Artifact directory plumbing: stage manifests with config fingerprints,
//! all-or-nothing stage outputs, atomic file writes and the directory lock.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".lock";

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let mut f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Files under `dir`, relative and sorted, skipping the manifest.
fn list_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
        for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
            let path = entry.map_err(|e| io_err(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                out.push(path.strip_prefix(root).expect("walk stays under root").to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.retain(|p| p != Path::new(MANIFEST));
    out.sort();
    Ok(out)
}

/// What a stage was built from and what it wrote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub fingerprint: String,
    /// Configuration values the stage depends on.
    pub params: BTreeMap<String, String>,
    /// Content hashes of inputs from outside the artifacts directory.
    pub inputs: BTreeMap<String, String>,
    /// Fingerprints of the upstream stages that were read.
    pub upstream: BTreeMap<String, String>,
    /// Content hash of every output file, by path relative to the stage directory.
    pub outputs: BTreeMap<String, String>,
    /// Facts about the outputs; not part of the fingerprint.
    #[serde(default)]
    pub summary: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(
        stage: &str,
        params: BTreeMap<String, String>,
        inputs: BTreeMap<String, String>,
        upstream: BTreeMap<String, String>,
    ) -> Self {
        let mut m = Self {
            stage: stage.to_string(),
            fingerprint: String::new(),
            params,
            inputs,
            upstream,
            outputs: BTreeMap::new(),
            summary: BTreeMap::new(),
        };
        m.fingerprint = m.compute_fingerprint();
        m
    }

    fn compute_fingerprint(&self) -> String {
        let key = serde_json::json!({
            "stage": self.stage,
            "params": self.params,
            "inputs": self.inputs,
            "upstream": self.upstream,
        });
        hex(&Sha256::digest(key.to_string().as_bytes())[..8])
    }

    pub fn load(dir: &Path) -> CliResult<Option<Self>> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let m: Self =
            serde_json::from_str(&text).map_err(|e| CliError::data(format!("bad manifest {}: {e}", path.display())))?;
        if m.fingerprint != m.compute_fingerprint() {
            return Err(CliError::data(format!(
                "manifest {} was edited by hand; re-run `{}`",
                path.display(),
                m.stage
            )));
        }
        Ok(Some(m))
    }

    /// Checks that every recorded output still has its recorded content.
    pub fn verify_outputs(&self, dir: &Path) -> CliResult<()> {
        let present: Vec<String> = list_files(dir)?.iter().map(|p| p.display().to_string()).collect();
        let recorded: Vec<&String> = self.outputs.keys().collect();
        if present.iter().collect::<Vec<_>>() != recorded {
            return Err(CliError::data(format!(
                "{} does not hold the files its manifest lists; re-run `{}`",
                dir.display(),
                self.stage
            )));
        }
        for (rel, want) in &self.outputs {
            if &sha256_file(&dir.join(rel))? != want {
                return Err(CliError::data(format!(
                    "{} changed after `{}` wrote it; re-run `{}`",
                    dir.join(rel).display(),
                    self.stage,
                    self.stage
                )));
            }
        }
        Ok(())
    }
}

/// A stage's outputs, written into a scratch directory and moved into place
/// only once complete.
pub struct Staging {
    tmp: tempfile::TempDir,
    target: PathBuf,
}

impl Staging {
    pub fn new(target: &Path) -> CliResult<Self> {
        let parent = target.parent().expect("stage directories have a parent");
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        let tmp = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(parent)
            .map_err(|e| io_err(parent, e))?;
        Ok(Self {
            tmp,
            target: target.to_path_buf(),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.tmp.path().join(rel)
    }

    /// Hashes the outputs into `manifest`, writes it, and swaps the scratch
    /// directory in for the previous stage directory.
    pub fn commit(self, mut manifest: Manifest) -> CliResult<Manifest> {
        let dir = self.tmp.path();
        manifest.outputs = list_files(dir)?
            .into_iter()
            .map(|rel| Ok((rel.display().to_string(), sha256_file(&dir.join(&rel))?)))
            .collect::<CliResult<_>>()?;
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(dir.join(MANIFEST), text).map_err(|e| io_err(dir, e))?;

        let parent = self.target.parent().expect("stage directories have a parent");
        let old = tempfile::Builder::new()
            .prefix(".replaced-")
            .tempdir_in(parent)
            .map_err(|e| io_err(parent, e))?;
        let old_path = old.path().join("stage");
        if self.target.exists() {
            fs::rename(&self.target, &old_path).map_err(|e| io_err(&self.target, e))?;
        }
        let tmp = self.tmp.keep();
        fs::rename(&tmp, &self.target).map_err(|e| io_err(&self.target, e))?;
        drop(old);
        Ok(manifest)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| io_err(parent, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// Exclusive hold on an artifacts directory; released on drop.
#[derive(Debug)]
pub struct Lock {
    path: PathBuf,
}

impl Lock {
    pub fn acquire(artifacts: &Path) -> CliResult<Self> {
        fs::create_dir_all(artifacts).map_err(|e| io_err(artifacts, e))?;
        let path = artifacts.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::data(format!(
                "{} is in use by another run (lock file {}); delete the lock file if no run is active",
                artifacts.display(),
                path.display()
            ))),
            Err(e) => Err(io_err(&path, e)),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
