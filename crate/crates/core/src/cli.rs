//! Batch command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 unreadable/unwritable file,
//! 4 unsupported or corrupt image, 5 dimension mismatch, 6 invalid
//! parameter or input values, 7 numerical failure, 8 failed self-test.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::applications::{
    evolve_channels, guide_drifts, seam_drifts, shadow_drifts, PipelineOutput, PipelineParams,
    Rescale,
};
use crate::bench::{run_bench, write_bench_csv};
use crate::drift::{canonical_drift, gate_mask_boundary, DriftField};
use crate::error::Error;
use crate::grid::{shift_to_positive, LabelMap, MultiChannelImage, ScalarField};
use crate::manifest::{append_metrics, manifest_path, RunManifest};
use crate::operators::{column_sum_defect, is_irreducible, off_diagonals_nonnegative};
use crate::raster::{read_image_with_depth, read_mask, read_tile_map, write_image, BitDepth};
use crate::solvers::{stable_timestep, Scheme, SchemeConfig, SplitOrder, Stepper};
use crate::synthetic;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;
pub const EXIT_DIMENSIONS: i32 = 5;
pub const EXIT_PARAMETER: i32 = 6;
pub const EXIT_NUMERICAL: i32 = 7;
pub const EXIT_VERIFY: i32 = 8;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::UnsupportedFormat(_) | Error::CorruptHeader { .. } => EXIT_FORMAT,
        Error::DimensionMismatch { .. } | Error::LengthMismatch { .. } => EXIT_DIMENSIONS,
        Error::GridTooSmall { .. }
        | Error::NonFinite { .. }
        | Error::NonPositive { .. }
        | Error::NonBinaryMask { .. }
        | Error::InvalidParameter(_)
        | Error::StabilityViolation { .. } => EXIT_PARAMETER,
        Error::ZeroPivot { .. } | Error::SolverNotConverged { .. } => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "osmosis",
    version,
    about = "Osmosis drift-diffusion filtering for images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Remove a constant multiplicative shadow given its mask
    Shadow {
        image: PathBuf,
        /// Shadow mask; nonzero pixels are in shadow
        mask: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        opts: SchemeArgs,
    },
    /// Equalise per-tile exposure of a mosaic given its tile map
    Balance {
        image: PathBuf,
        /// Tile map; raw sample values are tile labels
        tiles: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        opts: SchemeArgs,
    },
    /// Evolve an initial image towards the structure of a guide image
    Fuse {
        init: PathBuf,
        guide: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        opts: SchemeArgs,
    },
    /// Dump the (optionally gated) drift field of an image as CSV
    Drift {
        image: PathBuf,
        /// CSV destination (channel,axis,x,y,drift)
        #[arg(short, long)]
        output: PathBuf,
        /// Gate the drift across this binary mask
        #[arg(long, conflicts_with = "tiles")]
        mask: Option<PathBuf>,
        /// Gate the drift across the seams of this tile map
        #[arg(long)]
        tiles: Option<PathBuf>,
        #[command(flatten)]
        opts: SchemeArgs,
    },
    /// Run structural self-tests on built-in 8x8 fixtures (and optionally an image)
    Verify {
        image: Option<PathBuf>,
        #[command(flatten)]
        opts: SchemeArgs,
    },
    /// Time per-iteration cost on synthetic images
    Bench {
        /// Pixel counts, comma separated; `k` and `M` suffixes allowed
        #[arg(long, value_delimiter = ',', default_value = "1M,4M", value_parser = parse_pixels)]
        sizes: Vec<usize>,
        /// Schemes to time
        #[arg(long, value_delimiter = ',', default_value = "mos")]
        schemes: Vec<SchemeArg>,
        /// Timed steps per scheme and size
        #[arg(long, default_value_t = 5)]
        steps: usize,
        /// CSV destination
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        opts: SchemeArgs,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output image (.png, .pgm or .ppm)
    #[arg(short, long)]
    output: PathBuf,
    /// Output bit depth; defaults to the input depth
    #[arg(long, value_parser = ["8", "16"])]
    depth: Option<String>,
    /// Skip mean renormalisation and only clamp to the output range
    #[arg(long)]
    clamp_only: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Explicit,
    Implicit,
    Mos,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Explicit => Scheme::Explicit,
            SchemeArg::Implicit => Scheme::Implicit,
            SchemeArg::Mos => Scheme::Mos,
        }
    }
}

#[derive(Debug, Args)]
struct SchemeArgs {
    #[arg(long, value_enum, default_value = "mos")]
    scheme: SchemeArg,
    /// Time step; for --scheme explicit defaults to the stability limit
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    max_steps: usize,
    #[arg(long, default_value_t = 1e-8)]
    steady_tol: f64,
    /// Inner solver tolerance (implicit scheme)
    #[arg(long, default_value_t = 1e-10)]
    linear_tol: f64,
    /// MOS factor order: xy or yx
    #[arg(long, default_value = "xy")]
    split_order: String,
    /// Positivity offset added before processing and removed afterwards
    #[arg(long, default_value_t = 1.0)]
    offset: f64,
    /// Gate dilation around shadow edges, in faces
    #[arg(long, default_value_t = 0)]
    band: usize,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Append per-iteration metrics to this CSV file
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Seed for synthetic inputs
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const DEFAULT_MOS_TAU: f64 = 1000.0;

impl SchemeArgs {
    /// Resolves the scheme configuration; explicit runs without `--tau` take
    /// the smallest stability limit over `drifts`.
    fn scheme_config(&self, drifts: &[DriftField]) -> Result<SchemeConfig, Error> {
        let scheme: Scheme = self.scheme.into();
        let tau = match (self.tau, scheme) {
            (Some(t), _) => t,
            (None, Scheme::Explicit) => drifts
                .iter()
                .map(stable_timestep)
                .fold(f64::INFINITY, f64::min),
            (None, _) => DEFAULT_MOS_TAU,
        };
        let cfg = SchemeConfig {
            scheme,
            tau,
            max_steps: self.max_steps,
            steady_tol: self.steady_tol,
            linear_tol: self.linear_tol,
            split_order: self.split_order.parse::<SplitOrder>()?,
        };
        cfg.validate()?;
        if scheme == Scheme::Explicit {
            for d in drifts {
                let limit = stable_timestep(d);
                if cfg.tau > limit {
                    return Err(Error::StabilityViolation {
                        tau: cfg.tau,
                        limit,
                    });
                }
            }
        }
        Ok(cfg)
    }

    fn thread_count(&self) -> usize {
        if self.threads == 0 {
            rayon::current_num_threads()
        } else {
            self.threads
        }
    }
}

fn parse_pixels(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let (num, mult) = match s.chars().last() {
        Some('k' | 'K') => (&s[..s.len() - 1], 1e3),
        Some('M' | 'm') => (&s[..s.len() - 1], 1e6),
        _ => (s, 1.0),
    };
    let v: f64 = num.parse().map_err(|_| format!("not a pixel count: {s}"))?;
    if !(v > 0.0) {
        return Err(format!("pixel count must be positive: {s}"));
    }
    Ok((v * mult).round() as usize)
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let threads = match &cli.command {
        Command::Shadow { opts, .. }
        | Command::Balance { opts, .. }
        | Command::Fuse { opts, .. }
        | Command::Drift { opts, .. }
        | Command::Verify { opts, .. }
        | Command::Bench { opts, .. } => opts.threads,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_PARAMETER;
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(cmd: Command) -> Result<i32, Error> {
    match cmd {
        Command::Shadow {
            image,
            mask,
            out,
            opts,
        } => {
            let (img, depth) = read_image_with_depth(&image)?;
            let mask_map = read_mask(&mask)?;
            let drifts = shadow_drifts(&img, &mask_map, opts.offset, opts.band)?;
            run_pipeline(
                "shadow",
                &[&image, &mask],
                &img,
                depth,
                &drifts,
                &out,
                &opts,
            )
        }
        Command::Balance {
            image,
            tiles,
            out,
            opts,
        } => {
            let (img, depth) = read_image_with_depth(&image)?;
            let tile_map = read_tile_map(&tiles)?;
            let drifts = seam_drifts(&img, &tile_map, opts.offset)?;
            run_pipeline(
                "balance",
                &[&image, &tiles],
                &img,
                depth,
                &drifts,
                &out,
                &opts,
            )
        }
        Command::Fuse {
            init,
            guide,
            out,
            opts,
        } => {
            let (img, depth) = read_image_with_depth(&init)?;
            let (guide_img, _) = read_image_with_depth(&guide)?;
            let drifts = guide_drifts(&img, &guide_img, opts.offset)?;
            run_pipeline("fuse", &[&init, &guide], &img, depth, &drifts, &out, &opts)
        }
        Command::Drift {
            image,
            output,
            mask,
            tiles,
            opts,
        } => {
            let (img, _) = read_image_with_depth(&image)?;
            let drifts = match (mask, tiles) {
                (Some(m), _) => shadow_drifts(&img, &read_mask(&m)?, opts.offset, opts.band)?,
                (None, Some(t)) => seam_drifts(&img, &read_tile_map(&t)?, opts.offset)?,
                (None, None) => guide_drifts(&img, &img, opts.offset)?,
            };
            write_drift_dump(&output, &drifts)?;
            for (c, d) in drifts.iter().enumerate() {
                let (z1, z2) = d.zeroed_faces();
                println!(
                    "channel {c}: max |d|h = {:.6}, column-sum defect = {:.3e}, zero faces = {}/{}, stable explicit tau = {:.6}",
                    d.max_scaled_magnitude(),
                    column_sum_defect(d),
                    z1 + z2,
                    d.d1().len() + d.d2().len(),
                    stable_timestep(d)
                );
                if !off_diagonals_nonnegative(d) {
                    warn!("channel {c}: |d|h > 2 on some faces");
                }
            }
            Ok(0)
        }
        Command::Verify { image, opts } => verify(image.as_deref(), &opts),
        Command::Bench {
            sizes,
            schemes,
            steps,
            csv,
            opts,
        } => {
            let cfg = opts.scheme_config(&[])?;
            let schemes: Vec<Scheme> = schemes.into_iter().map(Into::into).collect();
            let rows = run_bench(&sizes, &schemes, &cfg, steps, opts.seed)?;
            for line in crate::bench::reference_header() {
                println!("# {line}");
            }
            println!("scheme,width,height,pixels,tau,s_per_iter,pixels_per_s,peak_rss_mb");
            for r in &rows {
                println!(
                    "{},{},{},{},{},{:.6},{:.4e},{:.1}",
                    r.scheme,
                    r.width,
                    r.height,
                    r.pixels,
                    r.tau,
                    r.seconds_per_iteration,
                    r.pixels_per_second,
                    r.peak_rss_bytes as f64 / 1048576.0
                );
            }
            if let Some(path) = csv {
                write_bench_csv(&path, &rows)?;
            }
            Ok(0)
        }
    }
}

fn run_pipeline(
    name: &str,
    inputs: &[&Path],
    img: &MultiChannelImage,
    input_depth: BitDepth,
    drifts: &[DriftField],
    out: &OutputArgs,
    opts: &SchemeArgs,
) -> Result<i32, Error> {
    let depth = match out.depth.as_deref() {
        Some("8") => BitDepth::Eight,
        Some("16") => BitDepth::Sixteen,
        _ => input_depth,
    };
    let params = PipelineParams {
        scheme: opts.scheme_config(drifts)?,
        offset: opts.offset,
        band: opts.band,
        rescale: if out.clamp_only {
            Rescale::Clamp {
                lo: 0.0,
                hi: depth.max_value(),
            }
        } else {
            Rescale::Renormalize
        },
    };
    info!(
        "{name}: {:?} on {}x{}",
        params.scheme,
        img.dims().0,
        img.dims().1
    );
    let PipelineOutput { image, reports } = evolve_channels(img, drifts, &params)?;
    write_image(&image, &out.output, depth)?;
    if let Some(m) = &opts.metrics {
        append_metrics(m, &reports)?;
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        output: out.output.display().to_string(),
        scheme: params.scheme.scheme.to_string(),
        tau: params.scheme.tau,
        max_steps: params.scheme.max_steps,
        steady_tol: params.scheme.steady_tol,
        linear_tol: params.scheme.linear_tol,
        split_order: params.scheme.split_order.to_string(),
        offset: params.offset,
        band: params.band,
        rescale: match params.rescale {
            Rescale::Renormalize => "renormalize".to_string(),
            Rescale::Clamp { lo, hi } => format!("clamp[{lo},{hi}]"),
        },
        output_depth: match depth {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        },
        threads: opts.thread_count(),
        metrics: opts
            .metrics
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
        seed: opts.seed,
        channels: image.channel_count(),
        iterations: reports.iter().map(|r| r.iterations()).collect(),
        converged: reports.iter().map(|r| r.converged).collect(),
    };
    manifest.write(manifest_path(&out.output))?;
    for (c, r) in reports.iter().enumerate() {
        println!(
            "channel {c}: {} iterations, converged = {}, mass drift = {:.2e}, min = {:.4}",
            r.iterations(),
            r.converged,
            r.max_relative_mass_drift(),
            r.min_value()
        );
        if !r.converged {
            warn!("channel {c} stopped at max_steps before reaching steady_tol");
        }
    }
    Ok(0)
}

fn write_drift_dump(path: &Path, drifts: &[DriftField]) -> Result<(), Error> {
    let io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "channel,axis,x,y,drift").map_err(io)?;
    for (c, d) in drifts.iter().enumerate() {
        let (width, height) = d.dims();
        for y in 0..height {
            for x in 0..width - 1 {
                writeln!(w, "{c},x,{x},{y},{:e}", d.x_face(x, y)).map_err(io)?;
            }
        }
        for y in 0..height - 1 {
            for x in 0..width {
                writeln!(w, "{c},y,{x},{y},{:e}", d.y_face(x, y)).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

const DEFECT_LIMIT: f64 = 1e-13;
const FIXED_POINT_LIMIT: f64 = 1e-9;

/// The built-in 8x8 verification fixtures: (name, guide).
pub fn verify_fixtures() -> Vec<(&'static str, ScalarField)> {
    vec![
        (
            "ramp",
            ScalarField::from_fn(8, 8, |x, y| 1.0 + x as f64 + 0.5 * y as f64).unwrap(),
        ),
        ("random", synthetic::random_field(8, 8, 0.1, 10.0, 8)),
        (
            "checker",
            ScalarField::from_fn(8, 8, |x, y| if (x + y) % 2 == 0 { 1.0 } else { 200.0 }).unwrap(),
        ),
        ("texture", synthetic::textured_ground_truth(8, 8, 8)),
    ]
}

fn verify(image: Option<&Path>, opts: &SchemeArgs) -> Result<i32, Error> {
    let mut guides = verify_fixtures()
        .into_iter()
        .map(|(n, f)| (n.to_string(), f))
        .collect::<Vec<_>>();
    if let Some(p) = image {
        let (img, _) = read_image_with_depth(p)?;
        for (c, ch) in img.channels().iter().enumerate() {
            guides.push((
                format!("{}[{c}]", p.display()),
                shift_to_positive(ch, opts.offset)?.field,
            ));
        }
    }
    let mut failures = 0;
    let mut check = |name: &str, what: &str, value: f64, ok: bool| {
        println!(
            "{} {name}: {what} = {value:.3e}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failures += 1;
        }
    };
    for (name, v) in &guides {
        let d = canonical_drift(v)?;
        let (w, h) = v.dims();
        let half = LabelMap::from_fn(w, h, |x, _| u32::from(x >= w / 2))?;
        let gated = gate_mask_boundary(&d, &half, 0)?;

        let defect = column_sum_defect(&d);
        check(name, "column-sum defect", defect, defect <= DEFECT_LIMIT);
        let gdefect = column_sum_defect(&gated);
        check(
            name,
            "column-sum defect (gated)",
            gdefect,
            gdefect <= DEFECT_LIMIT,
        );
        let scaled = d.max_scaled_magnitude();
        check(
            name,
            "max |d|h (< 2, irreducible)",
            scaled,
            off_diagonals_nonnegative(&d) && is_irreducible(&d),
        );

        for scheme in [Scheme::Explicit, Scheme::Implicit, Scheme::Mos] {
            let mut cfg = SchemeConfig {
                scheme,
                tau: opts.tau.unwrap_or(DEFAULT_MOS_TAU),
                linear_tol: opts.linear_tol,
                ..SchemeConfig::default()
            };
            if scheme == Scheme::Explicit {
                cfg.tau = stable_timestep(&d);
            }
            let next = Stepper::new(&d, &cfg)?.step(v)?;
            let err = next.max_abs_diff(v) / v.max();
            check(
                name,
                &format!("fixed point ({scheme}, tau {:.3})", cfg.tau),
                err,
                err <= FIXED_POINT_LIMIT,
            );
        }
    }
    if failures == 0 {
        println!("verify: all checks passed");
        Ok(0)
    } else {
        println!("verify: {failures} check(s) failed");
        Ok(EXIT_VERIFY)
    }
}
