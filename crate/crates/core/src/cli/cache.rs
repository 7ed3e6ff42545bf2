//! On-disk eigendata cache.
//!
//! One file per (operator key, eigenvector flag). Layout, little-endian:
//! magic `CTEIG001`, the 32-byte key hash, grid N (u64), dimension (u64),
//! the domain lengths (f64 each), eigenvalue count (u64), the eigenvalues,
//! then a density flag (u8) and, when set, the `N^d × count` density matrix
//! column by column. Readers take a shared lock on `<key>.lock`, writers an
//! exclusive one, and writes land through a rename.

use crate::field::{Domain, PeriodicGrid};
use crate::spectral_models::{DenseSpectrum, EigenStore};
use faer::Mat;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

const MAGIC: &[u8; 8] = b"CTEIG001";

pub struct FileEigenCache {
    dir: PathBuf,
}

impl FileEigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    fn data_path(&self, key: &str, vectors: bool) -> PathBuf {
        self.dir.join(format!("{key}-{}.eig", if vectors { "v" } else { "e" }))
    }

    fn lock(&self, key: &str) -> io::Result<File> {
        OpenOptions::new().create(true).truncate(false).write(true).open(self.dir.join(format!("{key}.lock")))
    }
}

impl EigenStore for FileEigenCache {
    fn load(&self, key: &str, vectors: bool) -> Option<DenseSpectrum> {
        let lock = self.lock(key).ok()?;
        lock.lock_shared().ok()?;
        let path = self.data_path(key, vectors);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(_) => return None,
        };
        match decode(&bytes, key, vectors) {
            Ok(s) => Some(s),
            Err(e) => {
                log::warn!("ignoring cache file {}: {e}", path.display());
                None
            }
        }
    }

    fn store(&self, key: &str, spectrum: &DenseSpectrum) {
        let vectors = spectrum.densities.is_some();
        let result = (|| -> io::Result<()> {
            let lock = self.lock(key)?;
            lock.lock()?;
            let path = self.data_path(key, vectors);
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            File::create(&tmp)?.write_all(&encode(key, spectrum)?)?;
            fs::rename(&tmp, &path)
        })();
        if let Err(e) = result {
            log::warn!("could not write eigen cache entry {key}: {e}");
        }
    }
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

fn key_bytes(key: &str) -> io::Result<Vec<u8>> {
    let k = hex::decode(key).map_err(|_| invalid("cache key is not hex"))?;
    if k.len() != 32 {
        return Err(invalid("cache key is not a sha256 digest"));
    }
    Ok(k)
}

fn encode(key: &str, s: &DenseSpectrum) -> io::Result<Vec<u8>> {
    let grid = &s.grid;
    let mut out = Vec::with_capacity(64 + 8 * s.eigenvalues.len() * (1 + grid.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&key_bytes(key)?);
    out.extend_from_slice(&(grid.n as u64).to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u64).to_le_bytes());
    for l in &grid.domain.lengths {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&(s.eigenvalues.len() as u64).to_le_bytes());
    for v in &s.eigenvalues {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match &s.densities {
        None => out.push(0),
        Some(d) => {
            out.push(1);
            for j in 0..d.ncols() {
                for i in 0..d.nrows() {
                    out.extend_from_slice(&d[(i, j)].to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take(&mut self, n: usize) -> io::Result<&[u8]> {
        if self.0.len() < n {
            return Err(invalid("truncated cache file"));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u64(&mut self) -> io::Result<u64> {
        let mut b = [0u8; 8];
        self.take(8)?.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64(&mut self) -> io::Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
}

fn decode(bytes: &[u8], key: &str, vectors: bool) -> io::Result<DenseSpectrum> {
    let mut r = Reader(bytes);
    if r.take(8)? != MAGIC {
        return Err(invalid("bad magic"));
    }
    if r.take(32)? != key_bytes(key)?.as_slice() {
        return Err(invalid("key mismatch"));
    }
    let n = r.u64()? as usize;
    let dim = r.u64()? as usize;
    if !(1..=2).contains(&dim) {
        return Err(invalid("bad dimension"));
    }
    let lengths = (0..dim).map(|_| r.f64()).collect::<io::Result<Vec<_>>>()?;
    let domain = Domain::new(lengths).map_err(|e| invalid(&e.to_string()))?;
    let grid = Arc::new(PeriodicGrid::new(domain, n));
    let count = r.u64()? as usize;
    if count > grid.len() {
        return Err(invalid("more eigenvalues than grid points"));
    }
    let eigenvalues = (0..count).map(|_| r.f64()).collect::<io::Result<Vec<_>>>()?;
    let densities = match r.take(1)?[0] {
        0 => None,
        1 => {
            let rows = grid.len();
            let raw = r.take(8 * rows * count)?;
            Some(Mat::from_fn(rows, count, |i, j| {
                let at = 8 * (j * rows + i);
                f64::from_le_bytes(raw[at..at + 8].try_into().expect("8-byte slice"))
            }))
        }
        _ => return Err(invalid("bad density flag")),
    };
    if densities.is_some() != vectors || !r.0.is_empty() {
        return Err(invalid("layout does not match the request"));
    }
    Ok(DenseSpectrum { eigenvalues, densities, grid })
}
