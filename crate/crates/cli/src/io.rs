//! File helpers: atomic writes and manifest-relative paths.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use transkit::audio::{read_wav, wav_bytes};

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes).with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_wav_atomic(path: &Path, samples: &[i16], rate: u32) -> Result<()> {
    write_atomic(path, &wav_bytes(samples, rate)?)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_audio(path: &Path) -> Result<Vec<i16>> {
    Ok(read_wav(path).with_context(|| format!("reading audio {}", path.display()))?.0)
}

/// Directory holding `file`, `.` for bare names.
pub fn parent_dir(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// `target` relative to `base` when both resolve, else `target` unchanged.
/// Uses forward slashes so manifests are portable.
pub fn relative_to(target: &Path, base: &Path) -> String {
    let abs = |p: &Path| std::path::absolute(p).ok();
    let rel = match (abs(target), abs(base)) {
        (Some(t), Some(b)) => pathdiff::diff_paths(normalize(&t), normalize(&b)),
        _ => None,
    };
    rel.unwrap_or_else(|| target.to_path_buf())
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Removes `.` and resolves `..` lexically.
fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

/// Resolves a manifest path against the manifest's directory.
pub fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("a/b");
        let target = dir.path().join("a/c/x.wav");
        assert_eq!(relative_to(&target, &base), "../c/x.wav");
        assert_eq!(resolve(&base, "../c/x.wav"), base.join("../c/x.wav"));
        assert_eq!(relative_to(&base.join("./y.wav"), &base), "y.wav");
    }
}
