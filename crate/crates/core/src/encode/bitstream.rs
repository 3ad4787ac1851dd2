use crate::error::{Error, Result};

/// A bit sequence packed MSB-first; the final partial byte is zero-padded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitStream {
    pub bytes: Vec<u8>,
    pub bit_length: u64,
}

impl BitStream {
    pub fn reader(&self) -> BitReader<'_> {
        BitReader::new(&self.bytes, self.bit_length)
    }
}

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitWriter {
            bytes: Vec::with_capacity(bits / 8 + 1),
            ..Self::default()
        }
    }

    pub fn bit_length(&self) -> u64 {
        self.bytes.len() as u64 * 8 + self.filled as u64
    }

    /// Appends the low `len` bits of `value`, most significant first.
    #[inline]
    pub fn put(&mut self, value: u64, len: u32) {
        debug_assert!(len <= 64);
        if len > 32 {
            self.put32(value >> 32, len - 32);
            self.put32(value & 0xffff_ffff, 32);
        } else {
            self.put32(value, len);
        }
    }

    /// Keeps fewer than 32 bits pending and flushes whole 32-bit words.
    #[inline]
    fn put32(&mut self, value: u64, len: u32) {
        if len == 0 {
            return;
        }
        let masked = value & ((1u64 << len) - 1);
        self.acc = (self.acc << len) | masked;
        self.filled += len;
        if self.filled >= 32 {
            self.filled -= 32;
            let word = (self.acc >> self.filled) as u32;
            self.bytes.extend_from_slice(&word.to_be_bytes());
            self.acc &= (1u64 << self.filled) - 1;
        }
    }

    pub fn put_bit(&mut self, bit: bool) {
        self.put32(bit as u64, 1);
    }

    pub fn finish(mut self) -> BitStream {
        let bit_length = self.bit_length();
        let pending = self.filled.div_ceil(8);
        if pending > 0 {
            let word = ((self.acc << (32 - self.filled)) as u32).to_be_bytes();
            self.bytes.extend_from_slice(&word[..pending as usize]);
        }
        BitStream {
            bytes: self.bytes,
            bit_length,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
    len: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_length: u64) -> Self {
        BitReader {
            bytes,
            pos: 0,
            len: bit_length.min(bytes.len() as u64 * 8),
        }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.len - self.pos
    }

    /// The next `n <= 56` bits without consuming them, zero-filled past the end.
    #[inline]
    pub fn peek(&self, n: u32) -> u64 {
        debug_assert!(n <= 56);
        if n == 0 {
            return 0;
        }
        let byte = (self.pos / 8) as usize;
        let shift = (self.pos % 8) as u32;
        let window = if byte + 8 <= self.bytes.len() {
            u64::from_be_bytes(self.bytes[byte..byte + 8].try_into().unwrap())
        } else {
            let mut buf = [0u8; 8];
            if byte < self.bytes.len() {
                let tail = &self.bytes[byte..];
                buf[..tail.len()].copy_from_slice(tail);
            }
            u64::from_be_bytes(buf)
        };
        (window << shift) >> (64 - n)
    }

    #[inline]
    pub fn skip(&mut self, n: u32) -> Result<()> {
        if self.pos + n as u64 > self.len {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: self.pos + n as u64 - self.len,
            });
        }
        self.pos += n as u64;
        Ok(())
    }

    #[inline]
    pub fn get(&mut self, n: u32) -> Result<u64> {
        debug_assert!(n <= 64);
        if n > 56 {
            let hi = self.get(n - 32)?;
            let lo = self.get(32)?;
            return Ok((hi << 32) | lo);
        }
        let v = self.peek(n);
        self.skip(n)?;
        Ok(v)
    }

    pub fn get_bit(&mut self) -> Result<bool> {
        Ok(self.get(1)? == 1)
    }
}
