//! End-to-end codecs and the in-memory archive.

mod cpc;
mod sz;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::encode::bytes::ByteReader;
use crate::error::{Error, Result};
use crate::model::{min_max, resolve_bound, ErrorBoundSpec, Field, ParticleSnapshot};
use crate::predict::PredictorKind;
use crate::quantize::{check_intervals, integerize, DEFAULT_INTERVALS};
use crate::rindex::{
    apply_permutation, build_r_indices, prx_sort, Permutation, RIndexVariant, SegmentInfo,
    DEFAULT_IGNORED_GROUPS, DEFAULT_SEGMENT_SIZE, MAX_BITS_PER_FIELD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompressionMode {
    SzLcf,
    /// `best_speed`.
    SzLv,
    /// `best_tradeoff`.
    SzLvPrx,
    /// `best_compression`.
    SzCpc2000,
    Cpc2000,
}

impl CompressionMode {
    pub const ALL: [CompressionMode; 5] = [
        CompressionMode::SzLcf,
        CompressionMode::SzLv,
        CompressionMode::SzLvPrx,
        CompressionMode::SzCpc2000,
        CompressionMode::Cpc2000,
    ];

    pub fn id(self) -> u8 {
        match self {
            CompressionMode::SzLcf => 0,
            CompressionMode::SzLv => 1,
            CompressionMode::SzLvPrx => 2,
            CompressionMode::SzCpc2000 => 3,
            CompressionMode::Cpc2000 => 4,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CompressionMode::SzLcf => "sz-lcf",
            CompressionMode::SzLv => "sz-lv",
            CompressionMode::SzLvPrx => "sz-lv-prx",
            CompressionMode::SzCpc2000 => "sz-cpc2000",
            CompressionMode::Cpc2000 => "cpc2000",
        }
    }

    /// Whether the decompressed particle order differs from the input order.
    pub fn reorders(self) -> bool {
        matches!(
            self,
            CompressionMode::SzLvPrx | CompressionMode::SzCpc2000 | CompressionMode::Cpc2000
        )
    }

    fn uses_cpc_coordinates(self) -> bool {
        matches!(self, CompressionMode::SzCpc2000 | CompressionMode::Cpc2000)
    }
}

impl fmt::Display for CompressionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CompressionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best-speed" | "best_speed" => return Ok(CompressionMode::SzLv),
            "best-tradeoff" | "best_tradeoff" => return Ok(CompressionMode::SzLvPrx),
            "best-compression" | "best_compression" => return Ok(CompressionMode::SzCpc2000),
            _ => {}
        }
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidSettings(format!("unknown mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub mode: CompressionMode,
    pub bounds: [ErrorBoundSpec; 6],
    pub interval_count: u32,
    pub segment_size: usize,
    pub ignored_groups: u32,
    /// Only `SzLvPrx` honors a non-coordinate variant; the CPC2000 codecs
    /// always index coordinates.
    pub variant: RIndexVariant,
}

impl Settings {
    pub fn new(mode: CompressionMode, bound: ErrorBoundSpec) -> Self {
        Settings {
            mode,
            bounds: [bound; 6],
            interval_count: DEFAULT_INTERVALS,
            segment_size: DEFAULT_SEGMENT_SIZE,
            ignored_groups: DEFAULT_IGNORED_GROUPS,
            variant: RIndexVariant::CoordinateBased,
        }
    }

    pub fn with_bound(mut self, field: Field, bound: ErrorBoundSpec) -> Self {
        self.bounds[field.index()] = bound;
        self
    }

    pub fn with_segment_size(mut self, segment_size: usize) -> Self {
        self.segment_size = segment_size;
        self
    }

    pub fn with_ignored_groups(mut self, ignored_groups: u32) -> Self {
        self.ignored_groups = ignored_groups;
        self
    }

    pub fn with_intervals(mut self, interval_count: u32) -> Self {
        self.interval_count = interval_count;
        self
    }

    pub fn with_variant(mut self, variant: RIndexVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_intervals(self.interval_count)?;
        if self.segment_size == 0 || self.segment_size > u32::MAX as usize {
            return Err(Error::InvalidSettings(format!(
                "segment size {} out of range",
                self.segment_size
            )));
        }
        if self.ignored_groups > 64 {
            return Err(Error::InvalidSettings(format!(
                "{} ignored groups exceeds any key width",
                self.ignored_groups
            )));
        }
        for b in &self.bounds {
            let v = b.value();
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidBound(v));
            }
        }
        Ok(())
    }

    fn effective_variant(&self) -> RIndexVariant {
        if self.mode.uses_cpc_coordinates() {
            RIndexVariant::CoordinateBased
        } else {
            self.variant
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Empty = 0,
    Constant = 1,
    Coded = 2,
}

impl FieldKind {
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(FieldKind::Empty),
            1 => Some(FieldKind::Constant),
            2 => Some(FieldKind::Coded),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldHeader {
    pub kind: FieldKind,
    /// Resolved absolute bound; 0 for empty and constant fields.
    pub bound: f64,
    /// The repeated value of a constant field.
    pub constant: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    Field(Field),
    Coordinates,
}

impl StreamTag {
    pub fn id(self) -> u8 {
        match self {
            StreamTag::Field(f) => f.index() as u8,
            StreamTag::Coordinates => 6,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            6 => Some(StreamTag::Coordinates),
            i => Field::from_index(i as usize).map(StreamTag::Field),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StreamTag::Field(f) => f.name(),
            StreamTag::Coordinates => "coordinates",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveHeader {
    pub mode: CompressionMode,
    pub variant: RIndexVariant,
    pub n: u64,
    pub interval_count: u32,
    pub segment_size: u32,
    pub ignored_groups: u8,
    pub fields: [FieldHeader; 6],
    /// Coordinate key layout per segment; present for the CPC2000 codecs.
    pub segments: Vec<SegmentInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub tag: StreamTag,
    pub payload: Vec<u8>,
}

/// A self-describing compressed snapshot. Byte layout lives in [`crate::io`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedArchive {
    pub header: ArchiveHeader,
    pub streams: Vec<Stream>,
}

impl CompressedArchive {
    pub fn n(&self) -> usize {
        self.header.n as usize
    }

    /// Serialized size, header included.
    pub fn total_bytes(&self) -> u64 {
        crate::io::archive_size(self)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        crate::io::archive_to_bytes(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        crate::io::archive_from_bytes(bytes)
    }

    fn stream(&self, tag: StreamTag) -> Result<&Stream> {
        self.streams
            .iter()
            .find(|s| s.tag == tag)
            .ok_or_else(|| Error::Corrupt(format!("missing stream {}", tag.name())))
    }
}

/// Original bytes over archive bytes; `None` for an empty snapshot.
pub fn ratio(archive: &CompressedArchive, original_bytes: u64) -> Option<f64> {
    if archive.header.n == 0 || original_bytes == 0 {
        return None;
    }
    Some(original_bytes as f64 / archive.total_bytes() as f64)
}

pub fn compress(snapshot: &ParticleSnapshot, settings: &Settings) -> Result<CompressedArchive> {
    compress_with_permutation(snapshot, settings).map(|(a, _)| a)
}

/// Compresses and also returns the reorder applied to the particles, so a
/// caller can match decompressed values to their originals. The
/// permutation is not part of the archive.
pub fn compress_with_permutation(
    snapshot: &ParticleSnapshot,
    settings: &Settings,
) -> Result<(CompressedArchive, Permutation)> {
    settings.validate()?;
    let n = snapshot.len();
    if n > u32::MAX as usize {
        return Err(Error::InvalidSettings(format!(
            "{n} particles exceeds 2^32 - 1"
        )));
    }
    let fields = field_headers(snapshot, &settings.bounds)?;
    let mut header = ArchiveHeader {
        mode: settings.mode,
        variant: settings.effective_variant(),
        n: n as u64,
        interval_count: settings.interval_count,
        segment_size: settings.segment_size as u32,
        ignored_groups: settings.ignored_groups as u8,
        fields,
        segments: Vec::new(),
    };
    if n == 0 {
        return Ok((
            CompressedArchive {
                header,
                streams: Vec::new(),
            },
            Permutation::identity(0),
        ));
    }

    let coded = |f: Field| fields[f.index()].kind == FieldKind::Coded;
    // Fields are quantized in lockstep groups (see `quantize_fields`); with
    // more than one worker the coded fields are split into one group per
    // worker. Grouping never changes the output.
    let sz_fields =
        |snap: &ParticleSnapshot, kind: PredictorKind, which: &[Field]| -> Result<Vec<Stream>> {
            let which: Vec<Field> = which.iter().copied().filter(|&f| coded(f)).collect();
            let per_group = which.len().div_ceil(rayon::current_num_threads()).max(1);
            let groups: Vec<Vec<Stream>> = which
                .par_chunks(per_group)
                .map(|group| {
                    let values: Vec<&[f32]> = group.iter().map(|&f| snap.field(f)).collect();
                    let bounds: Vec<f64> = group.iter().map(|&f| fields[f.index()].bound).collect();
                    let payloads =
                        sz::encode_fields(&values, kind, &bounds, settings.interval_count)?;
                    Ok(group
                        .iter()
                        .zip(payloads)
                        .map(|(&f, payload)| Stream {
                            tag: StreamTag::Field(f),
                            payload,
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            Ok(groups.into_iter().flatten().collect())
        };

    let (streams, perm) = match settings.mode {
        CompressionMode::SzLcf => (
            sz_fields(snapshot, PredictorKind::Lcf, &Field::ALL)?,
            Permutation::identity(n),
        ),
        CompressionMode::SzLv => (
            sz_fields(snapshot, PredictorKind::Lv, &Field::ALL)?,
            Permutation::identity(n),
        ),
        CompressionMode::SzLvPrx => {
            let variant = settings.variant;
            let quanta = integerize_fields(snapshot, &fields, variant.fields())?;
            let slices: Vec<&[i64]> = quanta.iter().map(Vec::as_slice).collect();
            let indices = build_r_indices(&slices, settings.segment_size, variant.max_bits())?;
            drop(quanta);
            let perm = prx_sort(&indices, settings.ignored_groups);
            drop(indices);
            let reordered = apply_permutation(snapshot, &perm)?;
            (sz_fields(&reordered, PredictorKind::Lv, &Field::ALL)?, perm)
        }
        CompressionMode::Cpc2000 | CompressionMode::SzCpc2000 => {
            let quanta = integerize_fields(snapshot, &fields, &Field::COORDINATES)?;
            let slices: Vec<&[i64]> = quanta.iter().map(Vec::as_slice).collect();
            let indices = build_r_indices(&slices, settings.segment_size, MAX_BITS_PER_FIELD)?;
            let perm = prx_sort(&indices, 0);
            let bound_of = |f: Field| coded(f).then_some(fields[f.index()].bound);
            let coords = cpc::encode_coordinates(
                &indices,
                perm.as_slice(),
                [&quanta[0], &quanta[1], &quanta[2]],
                [
                    snapshot.field(Field::Xx),
                    snapshot.field(Field::Yy),
                    snapshot.field(Field::Zz),
                ],
                [
                    bound_of(Field::Xx),
                    bound_of(Field::Yy),
                    bound_of(Field::Zz),
                ],
            )?;
            header.segments = indices.segments;
            drop(quanta);
            let reordered = apply_permutation(snapshot, &perm)?;
            let mut streams = vec![Stream {
                tag: StreamTag::Coordinates,
                payload: coords,
            }];
            if settings.mode == CompressionMode::SzCpc2000 {
                streams.extend(sz_fields(
                    &reordered,
                    PredictorKind::Lv,
                    &Field::VELOCITIES,
                )?);
            } else {
                let vel: Vec<Stream> = Field::VELOCITIES
                    .par_iter()
                    .filter(|&&f| coded(f))
                    .map(|&f| {
                        let bound = fields[f.index()].bound;
                        let values = reordered.field(f);
                        let ints = integerize(values, bound)?.ints;
                        let payload =
                            cpc::encode_velocity(&ints, values, bound, settings.segment_size)?;
                        Ok(Stream {
                            tag: StreamTag::Field(f),
                            payload,
                        })
                    })
                    .collect::<Result<_>>()?;
                streams.extend(vel);
            }
            (streams, perm)
        }
    };
    Ok((CompressedArchive { header, streams }, perm))
}

fn field_headers(
    snapshot: &ParticleSnapshot,
    bounds: &[ErrorBoundSpec; 6],
) -> Result<[FieldHeader; 6]> {
    let mut out = [FieldHeader {
        kind: FieldKind::Empty,
        bound: 0.0,
        constant: 0.0,
    }; 6];
    for f in Field::ALL {
        let values = snapshot.field(f);
        let Some((lo, hi)) = min_max(values) else {
            continue;
        };
        out[f.index()] = if lo == hi {
            FieldHeader {
                kind: FieldKind::Constant,
                bound: 0.0,
                constant: values[0],
            }
        } else {
            FieldHeader {
                kind: FieldKind::Coded,
                bound: resolve_bound(bounds[f.index()], values)?,
                constant: 0.0,
            }
        };
    }
    Ok(out)
}

/// Integerized values of `which`; constant fields integerize to zeros.
fn integerize_fields(
    snapshot: &ParticleSnapshot,
    fields: &[FieldHeader; 6],
    which: &[Field],
) -> Result<Vec<Vec<i64>>> {
    which
        .iter()
        .map(|&f| match fields[f.index()].kind {
            FieldKind::Coded => Ok(integerize(snapshot.field(f), fields[f.index()].bound)?.ints),
            _ => Ok(vec![0; snapshot.len()]),
        })
        .collect()
}

pub fn decompress(archive: &CompressedArchive) -> Result<ParticleSnapshot> {
    let h = &archive.header;
    let n = usize::try_from(h.n).map_err(|_| Error::Corrupt("particle count overflows".into()))?;
    check_intervals(h.interval_count)?;
    let segment_size = h.segment_size as usize;
    let field_header = |f: Field| h.fields[f.index()];
    for f in Field::ALL {
        let expect_empty = n == 0;
        if (field_header(f).kind == FieldKind::Empty) != expect_empty {
            return Err(Error::Corrupt(format!(
                "field {f} kind inconsistent with n = {n}"
            )));
        }
    }
    if n == 0 {
        return Ok(ParticleSnapshot::default());
    }
    let filled = |f: Field, values: Option<Vec<f32>>| -> Result<Vec<f32>> {
        let fh = field_header(f);
        match (fh.kind, values) {
            (FieldKind::Constant, _) => Ok(vec![fh.constant; n]),
            (_, Some(v)) if v.len() == n => Ok(v),
            _ => Err(Error::Corrupt(format!("field {f} has no decodable stream"))),
        }
    };
    let sz_decode = |f: Field| -> Result<Option<Vec<f32>>> {
        let fh = field_header(f);
        if fh.kind != FieldKind::Coded {
            return Ok(None);
        }
        let stream = archive.stream(StreamTag::Field(f))?;
        let mut r = ByteReader::new(&stream.payload, f.name());
        let kind = if h.mode == CompressionMode::SzLcf {
            PredictorKind::Lcf
        } else {
            PredictorKind::Lv
        };
        let v = sz::decode(&mut r, n, kind, fh.bound, h.interval_count)?;
        Ok(Some(v))
    };

    let mut decoded: [Option<Vec<f32>>; 6] = Default::default();
    match h.mode {
        CompressionMode::SzLcf | CompressionMode::SzLv | CompressionMode::SzLvPrx => {
            let results: Vec<Result<Option<Vec<f32>>>> =
                Field::ALL.par_iter().map(|&f| sz_decode(f)).collect();
            for (slot, r) in decoded.iter_mut().zip(results) {
                *slot = r?;
            }
        }
        CompressionMode::Cpc2000 | CompressionMode::SzCpc2000 => {
            if segment_size == 0 || h.segments.len() != n.div_ceil(segment_size) {
                return Err(Error::Corrupt(
                    "segment table does not match particle count".into(),
                ));
            }
            if h.segments
                .iter()
                .any(|s| s.minima.len() != 3 || s.bits > MAX_BITS_PER_FIELD || s.shift > 63)
            {
                return Err(Error::Corrupt("bad segment record".into()));
            }
            let coord_bound = |f: Field| {
                let fh = field_header(f);
                (fh.kind == FieldKind::Coded).then_some(fh.bound)
            };
            let stream = archive.stream(StreamTag::Coordinates)?;
            let mut r = ByteReader::new(&stream.payload, "coordinates");
            let [x, y, z] = cpc::decode_coordinates(
                &mut r,
                n,
                segment_size,
                &h.segments,
                [
                    coord_bound(Field::Xx),
                    coord_bound(Field::Yy),
                    coord_bound(Field::Zz),
                ],
            )?;
            decoded[0] = Some(x);
            decoded[1] = Some(y);
            decoded[2] = Some(z);
            let results: Vec<Result<Option<Vec<f32>>>> = Field::VELOCITIES
                .par_iter()
                .map(|&f| {
                    if h.mode == CompressionMode::SzCpc2000 {
                        return sz_decode(f);
                    }
                    let fh = field_header(f);
                    if fh.kind != FieldKind::Coded {
                        return Ok(None);
                    }
                    let stream = archive.stream(StreamTag::Field(f))?;
                    let mut r = ByteReader::new(&stream.payload, f.name());
                    cpc::decode_velocity(&mut r, n, fh.bound, segment_size).map(Some)
                })
                .collect();
            for (slot, r) in decoded[3..].iter_mut().zip(results) {
                *slot = r?;
            }
        }
    }
    let mut out: [Vec<f32>; 6] = Default::default();
    for f in Field::ALL {
        out[f.index()] = filled(f, decoded[f.index()].take())?;
    }
    ParticleSnapshot::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::within;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_snapshot(n: usize, seed: u64) -> ParticleSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields = std::array::from_fn(|f| {
            (0..n)
                .map(|i| {
                    if f < 3 {
                        rng.gen_range(0.0..100.0)
                    } else {
                        (i as f32 * 0.01).sin() + rng.gen_range(-0.1..0.1)
                    }
                })
                .collect()
        });
        ParticleSnapshot::new(fields).unwrap()
    }

    fn assert_within(
        orig: &ParticleSnapshot,
        perm: &Permutation,
        recon: &ParticleSnapshot,
        a: &CompressedArchive,
    ) {
        let matched = apply_permutation(orig, perm).unwrap();
        for f in Field::ALL {
            let b = a.header.fields[f.index()].bound;
            for (i, (&x, &y)) in matched.field(f).iter().zip(recon.field(f)).enumerate() {
                assert!(
                    within(x, y, b),
                    "{:?} {f} at {i}: {x} vs {y} (bound {b})",
                    a.header.mode
                );
            }
        }
    }

    #[test]
    fn every_mode_roundtrips_within_bound() {
        let s = random_snapshot(5000, 1);
        for mode in CompressionMode::ALL {
            for bound in [
                ErrorBoundSpec::ValueRangeRelative(1e-3),
                ErrorBoundSpec::Absolute(1e-3),
            ] {
                let settings = Settings::new(mode, bound).with_segment_size(1024);
                let (a, perm) = compress_with_permutation(&s, &settings).unwrap();
                let bytes = a.to_bytes();
                let back = CompressedArchive::from_bytes(&bytes).unwrap();
                assert_eq!(back, a);
                let recon = decompress(&back).unwrap();
                assert_within(&s, &perm, &recon, &a);
                if !mode.reorders() {
                    assert!(perm.is_identity());
                }
            }
        }
    }

    #[test]
    fn empty_snapshot() {
        let s = ParticleSnapshot::default();
        for mode in CompressionMode::ALL {
            let a = compress(
                &s,
                &Settings::new(mode, ErrorBoundSpec::ValueRangeRelative(1e-4)),
            )
            .unwrap();
            assert_eq!(ratio(&a, 0), None);
            assert!(decompress(&a).unwrap().is_empty());
        }
    }

    #[test]
    fn constant_snapshot_reproduces_exactly() {
        let s = ParticleSnapshot::new(std::array::from_fn(|f| vec![f as f32 + 0.5; 1000])).unwrap();
        for mode in CompressionMode::ALL {
            for bound in [
                ErrorBoundSpec::ValueRangeRelative(1e-4),
                ErrorBoundSpec::Absolute(1e-3),
            ] {
                let a = compress(&s, &Settings::new(mode, bound)).unwrap();
                assert!(a.streams.len() <= 1, "{mode}");
                assert!(a.total_bytes() < 400, "{mode}: {}", a.total_bytes());
                assert_eq!(decompress(&a).unwrap(), s);
            }
        }
    }

    #[test]
    fn deterministic_archives() {
        let s = random_snapshot(3000, 2);
        for mode in CompressionMode::ALL {
            let settings = Settings::new(mode, ErrorBoundSpec::ValueRangeRelative(1e-4));
            assert_eq!(
                compress(&s, &settings).unwrap().to_bytes(),
                compress(&s, &settings).unwrap().to_bytes()
            );
        }
    }

    #[test]
    fn prx_with_everything_ignored_is_sz_lv() {
        let s = random_snapshot(2000, 3);
        let eb = ErrorBoundSpec::ValueRangeRelative(1e-4);
        let lv = compress(&s, &Settings::new(CompressionMode::SzLv, eb)).unwrap();
        let prx = compress(
            &s,
            &Settings::new(CompressionMode::SzLvPrx, eb)
                .with_segment_size(4096)
                .with_ignored_groups(64),
        )
        .unwrap();
        assert_eq!(lv.streams, prx.streams);
    }

    #[test]
    fn tiny_bounds_stay_within_bound() {
        // Bounds near the f32 ulp exercise escapes and fixups.
        let mut s = random_snapshot(2000, 4).into_fields();
        for v in &mut s[0] {
            *v += 1000.0;
        }
        let s = ParticleSnapshot::new(s).unwrap();
        for mode in CompressionMode::ALL {
            let settings =
                Settings::new(mode, ErrorBoundSpec::Absolute(2e-5)).with_segment_size(500);
            let (a, perm) = compress_with_permutation(&s, &settings).unwrap();
            let recon = decompress(&CompressedArchive::from_bytes(&a.to_bytes()).unwrap()).unwrap();
            assert_within(&s, &perm, &recon, &a);
        }
    }

    #[test]
    fn wide_key_ranges_use_low_bit_side_stream() {
        let s = random_snapshot(3000, 5);
        let settings = Settings::new(
            CompressionMode::Cpc2000,
            ErrorBoundSpec::ValueRangeRelative(1e-7),
        );
        let (a, perm) = compress_with_permutation(&s, &settings).unwrap();
        assert!(a.header.segments.iter().any(|seg| seg.shift > 0));
        let recon = decompress(&a).unwrap();
        assert_within(&s, &perm, &recon, &a);
    }

    #[test]
    fn mode_names_and_aliases() {
        for m in CompressionMode::ALL {
            assert_eq!(m.name().parse::<CompressionMode>().unwrap(), m);
            assert_eq!(CompressionMode::from_id(m.id()), Some(m));
        }
        assert_eq!(
            "best-speed".parse::<CompressionMode>().unwrap(),
            CompressionMode::SzLv
        );
        assert_eq!(
            "best-tradeoff".parse::<CompressionMode>().unwrap(),
            CompressionMode::SzLvPrx
        );
        assert_eq!(
            "best-compression".parse::<CompressionMode>().unwrap(),
            CompressionMode::SzCpc2000
        );
        assert!("zfp".parse::<CompressionMode>().is_err());
    }

    #[test]
    fn invalid_settings_rejected() {
        let s = random_snapshot(10, 6);
        let eb = ErrorBoundSpec::ValueRangeRelative(1e-4);
        assert!(compress(
            &s,
            &Settings::new(CompressionMode::SzLv, eb).with_intervals(3)
        )
        .is_err());
        assert!(compress(
            &s,
            &Settings::new(CompressionMode::SzLvPrx, eb).with_segment_size(0)
        )
        .is_err());
        assert!(compress(
            &s,
            &Settings::new(CompressionMode::SzLv, ErrorBoundSpec::Absolute(0.0))
        )
        .is_err());
    }
}
