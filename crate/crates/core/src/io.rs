//! On-disk formats.
//!
//! # Raw snapshot
//!
//! Six headerless files `<prefix>.xx`, `.yy`, `.zz`, `.vx`, `.vy`, `.vz`,
//! each a sequence of little-endian IEEE-754 `f32`. The particle count is
//! the file size divided by 4 and must agree across files.
//!
//! # Archive (`NBZ1`, version 1)
//!
//! All integers little-endian.
//!
//! ```text
//! offset size  field
//!      0    4  magic "NBZ1"
//!      4    2  version (u16) = 1
//!      6    1  mode id: 0 sz-lcf, 1 sz-lv, 2 sz-lv-prx, 3 sz-cpc2000, 4 cpc2000
//!      7    1  R-index variant: 0 coordinate, 1 velocity, 2 coordinate+velocity
//!      8    8  particle count n (u64)
//!     16    4  quantization interval count (u32)
//!     20    4  segment size (u32)
//!     24    1  ignored radix groups (u8)
//!     25    3  reserved, zero
//!     28   78  6 field records, order xx yy zz vx vy vz:
//!              kind (u8: 0 empty, 1 constant, 2 coded), bound (f64), constant (f32)
//!    106    4  segment count s (u32)
//!    110  26s  segment records: minima of xx, yy, zz quanta (3 x i64),
//!              bits per field (u8), dropped low bits (u8)
//!      .    1  stream count k (u8)
//!      .  17k  stream records: tag (u8: 0-5 field, 6 coordinates),
//!              payload length (u64), payload CRC-64 (u64)
//!      .    8  header CRC-64 over every preceding byte
//!      .    .  payloads, concatenated in stream-record order
//! ```
//!
//! CRC-64 uses the ECMA-182 polynomial (`crc::CRC_64_ECMA_182`). Payload
//! layouts are described in the pipeline codecs.

use std::fs;
use std::path::{Path, PathBuf};

use crc::{Crc, CRC_64_ECMA_182};

use crate::encode::bytes::ByteReader;
use crate::error::{Error, Result};
use crate::model::{Field, ParticleSnapshot};
use crate::pipeline::{
    ArchiveHeader, CompressedArchive, CompressionMode, FieldHeader, FieldKind, Stream, StreamTag,
};
use crate::rindex::{Permutation, RIndexVariant, SegmentInfo};

pub const MAGIC: &[u8; 4] = b"NBZ1";
pub const VERSION: u16 = 1;
const FIXED_HEADER: usize = 110;
const SEGMENT_RECORD: usize = 26;
const STREAM_RECORD: usize = 17;

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_ECMA_182);

pub fn crc64(bytes: &[u8]) -> u64 {
    CRC64.checksum(bytes)
}

/// Header bytes for `segments` segments and `streams` streams, CRC included.
pub fn header_size(segments: usize, streams: usize) -> usize {
    FIXED_HEADER + SEGMENT_RECORD * segments + 1 + STREAM_RECORD * streams + 8
}

pub(crate) fn archive_size(a: &CompressedArchive) -> u64 {
    header_size(a.header.segments.len(), a.streams.len()) as u64
        + a.streams
            .iter()
            .map(|s| s.payload.len() as u64)
            .sum::<u64>()
}

pub(crate) fn archive_to_bytes(a: &CompressedArchive) -> Vec<u8> {
    let h = &a.header;
    let mut out = Vec::with_capacity(archive_size(a) as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(h.mode.id());
    out.push(h.variant.id());
    out.extend_from_slice(&h.n.to_le_bytes());
    out.extend_from_slice(&h.interval_count.to_le_bytes());
    out.extend_from_slice(&h.segment_size.to_le_bytes());
    out.push(h.ignored_groups);
    out.extend_from_slice(&[0; 3]);
    for fh in &h.fields {
        out.push(fh.kind as u8);
        out.extend_from_slice(&fh.bound.to_le_bytes());
        out.extend_from_slice(&fh.constant.to_le_bytes());
    }
    out.extend_from_slice(&(h.segments.len() as u32).to_le_bytes());
    for seg in &h.segments {
        for &m in &seg.minima {
            out.extend_from_slice(&m.to_le_bytes());
        }
        out.push(seg.bits as u8);
        out.push(seg.shift as u8);
    }
    out.push(a.streams.len() as u8);
    for s in &a.streams {
        out.push(s.tag.id());
        out.extend_from_slice(&(s.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&crc64(&s.payload).to_le_bytes());
    }
    let crc = crc64(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    for s in &a.streams {
        out.extend_from_slice(&s.payload);
    }
    out
}

pub(crate) fn archive_from_bytes(bytes: &[u8]) -> Result<CompressedArchive> {
    let mut r = ByteReader::new(bytes, "header");
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::BadMagic);
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mode_id = r.u8()?;
    let variant_id = r.u8()?;
    let n = r.u64()?;
    let interval_count = r.u32()?;
    let segment_size = r.u32()?;
    let ignored_groups = r.u8()?;
    r.take(3)?;
    let mut fields = [FieldHeader {
        kind: FieldKind::Empty,
        bound: 0.0,
        constant: 0.0,
    }; 6];
    let mut kinds = [0u8; 6];
    for (fh, kind) in fields.iter_mut().zip(&mut kinds) {
        *kind = r.u8()?;
        fh.bound = r.f64()?;
        fh.constant = r.f32()?;
    }
    let segment_count = r.u32()? as usize;
    if segment_count > bytes.len() / SEGMENT_RECORD {
        return Err(r.error(format!(
            "segment count {segment_count} exceeds archive size"
        )));
    }
    let mut segments = Vec::with_capacity(segment_count);
    for _ in 0..segment_count {
        let minima = vec![r.i64()?, r.i64()?, r.i64()?];
        let bits = r.u8()? as u32;
        let shift = r.u8()? as u32;
        segments.push(SegmentInfo {
            minima,
            bits,
            shift,
        });
    }
    let stream_count = r.u8()? as usize;
    let mut records = Vec::with_capacity(stream_count);
    for _ in 0..stream_count {
        records.push((r.u8()?, r.u64()?, r.u64()?));
    }
    let header_end = r.position();
    let stored = r.u64()?;
    let computed = crc64(&bytes[..header_end]);
    if stored != computed {
        return Err(Error::Checksum {
            section: "header".into(),
            stored,
            computed,
        });
    }

    // The header is intact from here on; remaining checks catch writer bugs.
    let mode = CompressionMode::from_id(mode_id)
        .ok_or_else(|| Error::Corrupt(format!("unknown mode id {mode_id}")))?;
    let variant = RIndexVariant::from_id(variant_id)
        .ok_or_else(|| Error::Corrupt(format!("unknown R-index variant {variant_id}")))?;
    for (fh, &kind) in fields.iter_mut().zip(&kinds) {
        fh.kind = FieldKind::from_id(kind)
            .ok_or_else(|| Error::Corrupt(format!("unknown field kind {kind}")))?;
        if fh.kind == FieldKind::Coded && !(fh.bound > 0.0 && fh.bound.is_finite()) {
            return Err(Error::Corrupt(format!(
                "coded field with bound {}",
                fh.bound
            )));
        }
    }
    let mut streams = Vec::with_capacity(stream_count);
    for (tag, len, crc) in records {
        let tag = StreamTag::from_id(tag)
            .ok_or_else(|| Error::Corrupt(format!("unknown stream tag {tag}")))?;
        let len =
            usize::try_from(len).map_err(|_| Error::Corrupt("stream length overflows".into()))?;
        let payload = r.take(len).map_err(|_| Error::Payload {
            stream: tag.name().into(),
            offset: r.position() as u64,
            reason: format!("truncated: {len} bytes declared"),
        })?;
        let computed = crc64(payload);
        if computed != crc {
            return Err(Error::Checksum {
                section: format!("stream {}", tag.name()),
                stored: crc,
                computed,
            });
        }
        streams.push(Stream {
            tag,
            payload: payload.to_vec(),
        });
    }
    if !r.is_empty() {
        return Err(Error::Corrupt("trailing bytes after last stream".into()));
    }
    Ok(CompressedArchive {
        header: ArchiveHeader {
            mode,
            variant,
            n,
            interval_count,
            segment_size,
            ignored_groups,
            fields,
            segments,
        },
        streams,
    })
}

pub fn write_archive(archive: &CompressedArchive, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, archive.to_bytes())?;
    Ok(())
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<CompressedArchive> {
    archive_from_bytes(&fs::read(path)?)
}

/// `<prefix>.<field>`; the field name is appended, not substituted.
pub fn field_path(prefix: &Path, field: Field) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(field.name());
    PathBuf::from(s)
}

pub fn write_snapshot(snapshot: &ParticleSnapshot, prefix: impl AsRef<Path>) -> Result<()> {
    let prefix = prefix.as_ref();
    for f in Field::ALL {
        let bytes: Vec<u8> = snapshot
            .field(f)
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        fs::write(field_path(prefix, f), bytes)?;
    }
    Ok(())
}

pub fn read_snapshot(prefix: impl AsRef<Path>) -> Result<ParticleSnapshot> {
    let prefix = prefix.as_ref();
    let mut fields: [Vec<f32>; 6] = Default::default();
    for f in Field::ALL {
        let path = field_path(prefix, f);
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingField {
                field: f.name(),
                path: path.clone(),
            },
            _ => Error::Io(e),
        })?;
        if bytes.len() % 4 != 0 {
            return Err(Error::RaggedFile {
                path,
                len: bytes.len() as u64,
            });
        }
        fields[f.index()] = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
    }
    ParticleSnapshot::new(fields)
}

/// Sidecar layout: magic `NBZP`, `u64` count, then `u32` gather indices.
/// Only test harnesses use it; it never counts toward compressed size.
pub fn write_permutation(perm: &Permutation, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(12 + 4 * perm.len());
    out.extend_from_slice(b"NBZP");
    out.extend_from_slice(&(perm.len() as u64).to_le_bytes());
    for &o in perm.as_slice() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_permutation(path: impl AsRef<Path>) -> Result<Permutation> {
    let bytes = fs::read(path)?;
    let mut r = ByteReader::new(&bytes, "permutation");
    if r.take(4)? != b"NBZP" {
        return Err(Error::BadMagic);
    }
    let n = r.count(4)?;
    let order = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    Permutation::new(order)
}
