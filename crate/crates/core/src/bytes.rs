//! Little-endian read helper that tracks the byte offset for format errors.

use std::io::Read;

use byteorder::{LittleEndian, ReadBytesExt};

pub(crate) struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn read_exact(&mut self, buf: &mut [u8]) -> std::io::Result<()> {
        self.inner.read_exact(buf)?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    pub fn read_u32(&mut self) -> std::io::Result<u32> {
        let v = self.inner.read_u32::<LittleEndian>()?;
        self.offset += 4;
        Ok(v)
    }

    pub fn read_u64(&mut self) -> std::io::Result<u64> {
        let v = self.inner.read_u64::<LittleEndian>()?;
        self.offset += 8;
        Ok(v)
    }

    pub fn read_f32(&mut self) -> std::io::Result<f32> {
        let v = self.inner.read_f32::<LittleEndian>()?;
        self.offset += 4;
        Ok(v)
    }

    pub fn read_f64(&mut self) -> std::io::Result<f64> {
        let v = self.inner.read_f64::<LittleEndian>()?;
        self.offset += 8;
        Ok(v)
    }

    /// True when the stream has no further bytes.
    pub fn at_eof(&mut self) -> std::io::Result<bool> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(true),
            _ => {
                self.offset += 1;
                Ok(false)
            }
        }
    }
}
