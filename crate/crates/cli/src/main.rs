//! `nbz`: error-bounded lossy compression for particle snapshots.
//!
//! A snapshot on disk is six raw little-endian `f32` files sharing a
//! prefix: `<prefix>.xx`, `<prefix>.yy`, ... `<prefix>.vz`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use nbz_core::datagen::{generate, GeneratorProfile, Profile};
use nbz_core::metrics::{bit_rate, rd_sweep};
use nbz_core::model::field_stats;
use nbz_core::pipeline::{compress_with_permutation, decompress, ratio};
use nbz_core::{
    io, CompressedArchive, CompressionMode, ErrorBoundSpec, Field, ParticleSnapshot, RIndexVariant,
    Settings,
};

const DEFAULT_EB_REL: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "nbz",
    version,
    about = "Error-bounded lossy compressor for N-body particle snapshots"
)]
#[command(long_about = "
Error-bounded lossy compressor for N-body particle snapshots.

A snapshot is six raw little-endian f32 files named <prefix>.xx, .yy, .zz,
.vx, .vy, .vz. Every reconstructed value stays within the error bound of
its original; reordering modes (sz-lv-prx, sz-cpc2000, cpc2000) return the
particles in a different order.

Examples:
  nbz gen --profile amdf --n 1000000 snap
  nbz compress --best-tradeoff --eb-rel 1e-4 snap snap.nbz
  nbz decompress snap.nbz out
  nbz analyze snap
  nbz sweep --mode sz-lv --bounds 1e-2,1e-3,1e-4 snap
  nbz batch --threads 4 --eb-abs 0.01 snapshots/ archives/
")]
struct Cli {
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, env = "NBZ_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a snapshot into an archive
    Compress {
        /// Snapshot prefix
        input: PathBuf,
        /// Archive to write
        output: PathBuf,
        #[command(flatten)]
        codec: CodecArgs,
        /// Also write the particle order applied by the codec
        #[arg(long, value_name = "PATH")]
        emit_permutation: Option<PathBuf>,
    },

    /// Decompress an archive into a snapshot
    Decompress {
        /// Archive to read
        input: PathBuf,
        /// Snapshot prefix to write
        output: PathBuf,
    },

    /// Print per-field statistics as CSV
    Analyze {
        /// Snapshot prefix
        input: PathBuf,
    },

    /// Rate-distortion sweep over a list of error bounds, as CSV
    Sweep {
        /// Snapshot prefix
        input: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Comma-separated error bounds
        #[arg(long, required = true, value_delimiter = ',')]
        bounds: Vec<f64>,
        /// Treat bounds as absolute instead of relative to each field's range
        #[arg(long)]
        abs: bool,
    },

    /// Generate a synthetic snapshot
    Gen {
        /// Snapshot prefix to write
        output: PathBuf,
        #[arg(long, default_value = "hacc")]
        profile: Profile,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },

    /// Compress every snapshot in a directory, one file per worker
    Batch {
        /// Directory holding <prefix>.xx ... files
        input: PathBuf,
        /// Directory for <prefix>.nbz archives
        output: PathBuf,
        #[command(flatten)]
        codec: CodecArgs,
    },
}

#[derive(Args)]
struct CodecArgs {
    #[command(flatten)]
    mode: ModeArgs,
    #[command(flatten)]
    bound: BoundArgs,
    #[command(flatten)]
    layout: LayoutArgs,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode_choice").args(["mode", "best_speed", "best_tradeoff", "best_compression"])))]
struct ModeArgs {
    /// Codec
    #[arg(long, value_enum, default_value_t = ModeArg::SzLv)]
    mode: ModeArg,
    /// Same as --mode sz-lv
    #[arg(long)]
    best_speed: bool,
    /// Same as --mode sz-lv-prx
    #[arg(long)]
    best_tradeoff: bool,
    /// Same as --mode sz-cpc2000
    #[arg(long)]
    best_compression: bool,
}

impl ModeArgs {
    fn mode(&self) -> CompressionMode {
        if self.best_speed {
            CompressionMode::SzLv
        } else if self.best_tradeoff {
            CompressionMode::SzLvPrx
        } else if self.best_compression {
            CompressionMode::SzCpc2000
        } else {
            self.mode.into()
        }
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("bound").args(["eb_rel", "eb_abs"])))]
struct BoundArgs {
    /// Error bound as a fraction of each field's value range [default: 1e-4]
    #[arg(long, value_name = "FRACTION")]
    eb_rel: Option<f64>,
    /// Absolute error bound for every field
    #[arg(long, value_name = "BOUND")]
    eb_abs: Option<f64>,
}

impl BoundArgs {
    fn spec(&self) -> ErrorBoundSpec {
        match (self.eb_rel, self.eb_abs) {
            (_, Some(abs)) => ErrorBoundSpec::Absolute(abs),
            (rel, None) => ErrorBoundSpec::ValueRangeRelative(rel.unwrap_or(DEFAULT_EB_REL)),
        }
    }
}

#[derive(Args)]
struct LayoutArgs {
    /// Particles per reordering segment
    #[arg(long, default_value_t = 16384)]
    segment_size: usize,
    /// Low-order radix groups left unsorted within a segment
    #[arg(long, default_value_t = 6)]
    ignored_groups: u32,
    /// Quantization interval count (even, at least 4)
    #[arg(long, default_value_t = 65536)]
    intervals: u32,
    /// Fields interleaved into the reordering key
    #[arg(long, value_enum, default_value_t = RIndexArg::Coord)]
    rindex: RIndexArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SzLcf,
    SzLv,
    SzLvPrx,
    SzCpc2000,
    Cpc2000,
}

impl From<ModeArg> for CompressionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SzLcf => CompressionMode::SzLcf,
            ModeArg::SzLv => CompressionMode::SzLv,
            ModeArg::SzLvPrx => CompressionMode::SzLvPrx,
            ModeArg::SzCpc2000 => CompressionMode::SzCpc2000,
            ModeArg::Cpc2000 => CompressionMode::Cpc2000,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RIndexArg {
    Coord,
    Vel,
    Coordvel,
}

impl From<RIndexArg> for RIndexVariant {
    fn from(r: RIndexArg) -> Self {
        match r {
            RIndexArg::Coord => RIndexVariant::CoordinateBased,
            RIndexArg::Vel => RIndexVariant::VelocityBased,
            RIndexArg::Coordvel => RIndexVariant::CoordVelocityBased,
        }
    }
}

fn settings(mode: &ModeArgs, bound: ErrorBoundSpec, layout: &LayoutArgs) -> Settings {
    Settings::new(mode.mode(), bound)
        .with_segment_size(layout.segment_size)
        .with_ignored_groups(layout.ignored_groups)
        .with_intervals(layout.intervals)
        .with_variant(layout.rindex.into())
}

impl CodecArgs {
    fn settings(&self) -> Settings {
        settings(&self.mode, self.bound.spec(), &self.layout)
    }
}

type CliResult<T = ()> = Result<T, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("nbz: error: cannot start thread pool: {e}");
        return ExitCode::FAILURE;
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("nbz: error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Compress {
            input,
            output,
            codec,
            emit_permutation,
        } => cmd_compress(
            &input,
            &output,
            &codec.settings(),
            emit_permutation.as_deref(),
        ),
        Command::Decompress { input, output } => cmd_decompress(&input, &output),
        Command::Analyze { input } => cmd_analyze(&input),
        Command::Sweep {
            input,
            mode,
            layout,
            bounds,
            abs,
        } => {
            let specs: Vec<ErrorBoundSpec> = bounds
                .into_iter()
                .map(|b| match abs {
                    true => ErrorBoundSpec::Absolute(b),
                    false => ErrorBoundSpec::ValueRangeRelative(b),
                })
                .collect();
            cmd_sweep(&input, &settings(&mode, specs[0], &layout), &specs)
        }
        Command::Gen {
            output,
            profile,
            n,
            seed,
        } => cmd_gen(&output, &GeneratorProfile::new(profile, n, seed)),
        Command::Batch {
            input,
            output,
            codec,
        } => cmd_batch(&input, &output, &codec.settings()),
    }
}

fn with_path(path: &Path) -> impl Fn(nbz_core::Error) -> String + '_ {
    move |e| format!("{}: {e}", path.display())
}

fn mb_per_s(bytes: u64, secs: f64) -> f64 {
    bytes as f64 / secs.max(1e-9) / 1e6
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("NA".into(), |v| format!("{v:.4}"))
}

struct Compressed {
    archive: CompressedArchive,
    original_bytes: u64,
    secs: f64,
}

impl Compressed {
    fn summary(&self) -> String {
        let r = ratio(&self.archive, self.original_bytes);
        format!(
            "mode={} n={} original_bytes={} compressed_bytes={} ratio={} bit_rate={} compress_mb_s={:.1}",
            self.archive.header.mode,
            self.archive.n(),
            self.original_bytes,
            self.archive.total_bytes(),
            fmt_opt(r),
            fmt_opt(r.map(bit_rate)),
            mb_per_s(self.original_bytes, self.secs),
        )
    }
}

fn compress_file(
    input: &Path,
    output: &Path,
    settings: &Settings,
    emit_permutation: Option<&Path>,
) -> CliResult<Compressed> {
    let snapshot = io::read_snapshot(input).map_err(with_path(input))?;
    let start = Instant::now();
    let (archive, perm) =
        compress_with_permutation(&snapshot, settings).map_err(with_path(input))?;
    let secs = start.elapsed().as_secs_f64();
    io::write_archive(&archive, output).map_err(with_path(output))?;
    if let Some(path) = emit_permutation {
        io::write_permutation(&perm, path).map_err(with_path(path))?;
    }
    Ok(Compressed {
        archive,
        original_bytes: snapshot.original_bytes(),
        secs,
    })
}

fn cmd_compress(
    input: &Path,
    output: &Path,
    settings: &Settings,
    emit_permutation: Option<&Path>,
) -> CliResult {
    let c = compress_file(input, output, settings, emit_permutation)?;
    println!("{}", c.summary());
    Ok(())
}

fn cmd_decompress(input: &Path, output: &Path) -> CliResult {
    let archive = io::read_archive(input).map_err(with_path(input))?;
    let start = Instant::now();
    let snapshot = decompress(&archive).map_err(with_path(input))?;
    let secs = start.elapsed().as_secs_f64();
    io::write_snapshot(&snapshot, output).map_err(with_path(output))?;
    let original_bytes = snapshot.original_bytes();
    println!(
        "mode={} n={} compressed_bytes={} original_bytes={} decompress_mb_s={:.1}",
        archive.header.mode,
        snapshot.len(),
        archive.total_bytes(),
        original_bytes,
        mb_per_s(original_bytes, secs),
    );
    Ok(())
}

fn cmd_analyze(input: &Path) -> CliResult {
    let snapshot = io::read_snapshot(input).map_err(with_path(input))?;
    print!("{}", analyze_csv(&snapshot));
    Ok(())
}

fn analyze_csv(snapshot: &ParticleSnapshot) -> String {
    const UNDEFINED: &str = "undefined";
    let mut out = String::from("field,n,min,max,range,lag1_autocorr\n");
    for f in Field::ALL {
        let row = match field_stats(snapshot.field(f)) {
            Some(s) => format!(
                "{f},{},{:e},{:e},{:e},{}",
                snapshot.len(),
                s.min,
                s.max,
                s.range,
                s.lag1_autocorr
                    .map_or(UNDEFINED.into(), |r| format!("{r:.7}"))
            ),
            None => format!("{f},0,{UNDEFINED},{UNDEFINED},{UNDEFINED},{UNDEFINED}"),
        };
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn cmd_sweep(input: &Path, settings: &Settings, bounds: &[ErrorBoundSpec]) -> CliResult {
    let snapshot = io::read_snapshot(input).map_err(with_path(input))?;
    let outcome = rd_sweep(&snapshot, settings, bounds);
    print!("{}", outcome.to_csv());
    for (bound, e) in &outcome.failures {
        eprintln!("nbz: bound {}: {e}", bound.value());
    }
    match outcome.failures.len() {
        0 => Ok(()),
        k => Err(format!("{k} of {} bounds failed", bounds.len())),
    }
}

fn cmd_gen(output: &Path, p: &GeneratorProfile) -> CliResult {
    let snapshot = generate(p);
    io::write_snapshot(&snapshot, output).map_err(with_path(output))?;
    println!(
        "profile={} n={} seed={} original_bytes={}",
        p.profile,
        p.n,
        p.seed,
        snapshot.original_bytes()
    );
    Ok(())
}

/// Snapshot prefixes in `dir`, one per `*.xx` file, sorted by name.
fn snapshot_prefixes(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut prefixes = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| format!("{}: {e}", dir.display()))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == Field::Xx.name()) {
            prefixes.push(path.with_extension(""));
        }
    }
    prefixes.sort();
    Ok(prefixes)
}

fn cmd_batch(input: &Path, output: &Path, settings: &Settings) -> CliResult {
    let prefixes = snapshot_prefixes(input)?;
    if prefixes.is_empty() {
        eprintln!("nbz: warning: no snapshots (*.xx) in {}", input.display());
        return Ok(());
    }
    fs::create_dir_all(output).map_err(|e| format!("{}: {e}", output.display()))?;

    let start = Instant::now();
    // Each file compresses independently; results come back in name order
    // regardless of which worker finished first.
    let results: Vec<(String, CliResult<Compressed>)> = prefixes
        .par_iter()
        .map(|prefix| {
            let name = prefix
                .file_name()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let archive = output.join(format!("{name}.nbz"));
            (name, compress_file(prefix, &archive, settings, None))
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();

    let (mut original, mut compressed, mut failed) = (0u64, 0u64, 0usize);
    for (name, result) in &results {
        match result {
            Ok(c) => {
                println!("file={name} {}", c.summary());
                original += c.original_bytes;
                compressed += c.archive.total_bytes();
            }
            Err(e) => {
                eprintln!("nbz: {name}: {e}");
                failed += 1;
            }
        }
    }
    let ratio = (compressed > 0).then(|| original as f64 / compressed as f64);
    println!(
        "files={} failed={failed} original_bytes={original} compressed_bytes={compressed} ratio={} throughput_mb_s={:.1}",
        results.len(),
        fmt_opt(ratio),
        mb_per_s(original, secs),
    );
    match failed {
        0 => Ok(()),
        k => Err(format!("{k} of {} snapshots failed", results.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn aliases_map_to_fixed_modes() {
        let parse = |args: &[&str]| {
            let cli = Cli::try_parse_from([&["nbz", "compress", "a", "b"], args].concat()).unwrap();
            match cli.command {
                Command::Compress { codec, .. } => codec.settings(),
                _ => unreachable!(),
            }
        };
        assert_eq!(parse(&["--best-speed"]).mode, CompressionMode::SzLv);
        assert_eq!(parse(&["--best-tradeoff"]).mode, CompressionMode::SzLvPrx);
        assert_eq!(
            parse(&["--best-compression"]).mode,
            CompressionMode::SzCpc2000
        );
        assert_eq!(parse(&["--mode", "cpc2000"]).mode, CompressionMode::Cpc2000);

        let s = parse(&[]);
        assert_eq!(s.mode, CompressionMode::SzLv);
        assert_eq!(
            s.bounds[0],
            ErrorBoundSpec::ValueRangeRelative(DEFAULT_EB_REL)
        );
        assert_eq!(s.segment_size, 16384);
        assert_eq!(s.ignored_groups, 6);
        assert_eq!(s.interval_count, 65536);
        assert_eq!(
            parse(&["--eb-abs", "0.5"]).bounds[3],
            ErrorBoundSpec::Absolute(0.5)
        );
    }

    #[test]
    fn conflicting_flags_are_usage_errors() {
        for args in [
            &["--eb-rel", "1e-3", "--eb-abs", "1"][..],
            &["--best-speed", "--best-compression"],
            &["--mode", "sz-lv", "--best-tradeoff"],
            &["--rindex", "spin"],
        ] {
            let err = Cli::try_parse_from([&["nbz", "compress", "a", "b"], args].concat())
                .err()
                .unwrap_or_else(|| panic!("{args:?} accepted"));
            assert_eq!(err.exit_code(), 2, "{args:?}");
        }
    }

    #[test]
    fn analyze_marks_undefined_autocorrelation() {
        let one = ParticleSnapshot::new(std::array::from_fn(|i| vec![i as f32])).unwrap();
        let csv = analyze_csv(&one);
        assert_eq!(csv.lines().count(), 7);
        assert!(
            csv.lines().skip(1).all(|l| l.ends_with(",undefined")),
            "{csv}"
        );

        let empty = ParticleSnapshot::new(std::array::from_fn(|_| Vec::new())).unwrap();
        assert!(analyze_csv(&empty).contains("xx,0,undefined"));
    }
}
