//! Write-to-temp-then-rename file output. A declared output path either
//! holds a complete file or does not exist.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hash::ContentHasher;

/// Outcome of a completed atomic write.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFile {
    pub path: PathBuf,
    pub bytes: u64,
    pub hash: u64,
}

/// Counts and hashes everything passing through to `inner`.
pub struct HashingWriter<W: Write> {
    inner: W,
    hasher: ContentHasher,
    bytes: u64,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        HashingWriter {
            inner,
            hasher: ContentHasher::new(),
            bytes: 0,
        }
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    pub fn into_parts(self) -> (W, u64, u64) {
        (self.inner, self.bytes, self.hasher.finish())
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

/// An output file that only appears at its final path after
/// [`commit`](Self::commit). Dropping it uncommitted removes the temporary.
pub struct AtomicFile {
    path: PathBuf,
    tmp: PathBuf,
    writer: Option<HashingWriter<BufWriter<File>>>,
}

impl AtomicFile {
    pub fn create(path: &Path) -> Result<Self> {
        let tmp = temp_path(path);
        let file = File::create(&tmp).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        Ok(AtomicFile {
            path: path.to_path_buf(),
            tmp,
            writer: Some(HashingWriter::new(BufWriter::new(file))),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Wraps an I/O error with this file's path.
    pub fn io_error(&self, e: io::Error) -> Error {
        Error::io(format!("writing {}", self.path.display()), e)
    }

    /// Flushes, syncs and renames into place.
    pub fn commit(mut self) -> Result<WrittenFile> {
        let ctx = |what: &str, p: &Path| format!("{what} {}", p.display());
        let mut w = self.writer.take().expect("writer present until commit");
        w.flush().map_err(|e| Error::io(ctx("writing", &self.path), e))?;
        let (buf, bytes, hash) = w.into_parts();
        let file = buf
            .into_inner()
            .map_err(|e| Error::io(ctx("writing", &self.path), e.into_error()))?;
        file.sync_all().map_err(|e| Error::io(ctx("syncing", &self.path), e))?;
        fs::rename(&self.tmp, &self.path).map_err(|e| Error::io(ctx("renaming into", &self.path), e))?;
        Ok(WrittenFile {
            path: self.path.clone(),
            bytes,
            hash,
        })
    }
}

impl Write for AtomicFile {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.writer.as_mut().expect("not committed").write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.as_mut().expect("not committed").flush()
    }
}

impl Drop for AtomicFile {
    fn drop(&mut self) {
        if self.writer.take().is_some() {
            let _ = fs::remove_file(&self.tmp);
        }
    }
}

/// Streams `body` into a sibling temporary file and renames it over `path`
/// once the body succeeded and the data is synced. On failure the temporary
/// file is removed and `path` is left untouched.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<WrittenFile>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let mut f = AtomicFile::create(path)?;
    body(&mut f)?;
    f.commit()
}

pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<WrittenFile> {
    write_atomic(path, |w| {
        w.write_all(bytes)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    })
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating directory {}", dir.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::content_hash;

    #[test]
    fn completed_write_is_renamed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.bin");
        let w = write_bytes_atomic(&p, b"hello").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"hello");
        assert_eq!((w.bytes, w.hash), (5, content_hash(b"hello")));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.bin");
        let r = write_atomic(&p, |w| {
            w.write_all(b"partial").unwrap();
            Err(Error::Validation("interrupted".into()))
        });
        assert!(r.is_err());
        assert!(!p.exists());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn dropped_file_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        {
            let mut f = AtomicFile::create(&p).unwrap();
            f.write_all(b"abc").unwrap();
        }
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn failed_rewrite_keeps_old_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.bin");
        write_bytes_atomic(&p, b"old").unwrap();
        let _ = write_atomic(&p, |_| Err(Error::Validation("no".into())));
        assert_eq!(fs::read(&p).unwrap(), b"old");
    }
}
