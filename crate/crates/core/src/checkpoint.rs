//! Little-endian binary blobs shared by all checkpoint formats.
//!
//! Layout: 8-byte magic, `u32` version, payload. Floats are stored as raw
//! IEEE-754 bits, so a write/read cycle is bit-exact.

use std::io::{BufReader, BufWriter, Read, Write};

use crate::error::{HdcError, Result};

pub(crate) struct BlobWriter<W: Write> {
    inner: BufWriter<W>,
}

impl<W: Write> BlobWriter<W> {
    pub fn new(w: W, magic: &[u8; 8], version: u32) -> Result<Self> {
        let mut inner = BufWriter::new(w);
        inner.write_all(magic)?;
        inner.write_all(&version.to_le_bytes())?;
        Ok(Self { inner })
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.inner.write_all(&[v])?)
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.inner.write_all(&v.to_le_bytes())?)
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.u64(v.to_bits())
    }

    pub fn f64s(&mut self, vs: impl IntoIterator<Item = f64>) -> Result<()> {
        for v in vs {
            self.f64(v)?;
        }
        Ok(())
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        Ok(self.inner.write_all(b)?)
    }

    pub fn finish(mut self) -> Result<()> {
        Ok(self.inner.flush()?)
    }
}

pub(crate) struct BlobReader<R: Read> {
    inner: BufReader<R>,
}

fn short(e: std::io::Error) -> HdcError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        HdcError::Checkpoint("truncated blob".into())
    } else {
        HdcError::Io(e)
    }
}

impl<R: Read> BlobReader<R> {
    pub fn new(r: R, magic: &[u8; 8], version: u32) -> Result<Self> {
        let mut inner = BufReader::new(r);
        let mut m = [0u8; 8];
        inner.read_exact(&mut m).map_err(short)?;
        if &m != magic {
            return Err(HdcError::Checkpoint(format!(
                "wrong magic: expected {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let mut v = [0u8; 4];
        inner.read_exact(&mut v).map_err(short)?;
        let found = u32::from_le_bytes(v);
        if found != version {
            return Err(HdcError::Checkpoint(format!(
                "unsupported version {found}, expected {version}"
            )));
        }
        Ok(Self { inner })
    }

    pub fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.inner.read_exact(&mut b).map_err(short)?;
        Ok(b[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b).map_err(short)?;
        Ok(u64::from_le_bytes(b))
    }

    /// A `u64` used as a size; rejects values that cannot be allocated.
    pub fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > (1 << 40) {
            return Err(HdcError::Checkpoint(format!("implausible size {v}")));
        }
        Ok(v as usize)
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut b = vec![0u8; n];
        self.inner.read_exact(&mut b).map_err(short)?;
        Ok(b)
    }

    /// Require end of input.
    pub fn finish(mut self) -> Result<()> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b)? {
            0 => Ok(()),
            _ => Err(HdcError::Checkpoint("trailing bytes after payload".into())),
        }
    }
}
