//! Synthetic throughput measurements.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::drift::canonical_drift;
use crate::error::{Error, Result};
use crate::solvers::{stable_timestep, Scheme, SchemeConfig, Stepper};
use crate::synthetic::{random_field, textured_ground_truth};

/// Published end-to-end runtimes kept as context in bench reports:
/// (description, megapixels, seconds).
pub const REFERENCE_RUNS: &[(&str, f64, f64)] = &[
    ("TQR mosaic, MOS splitting", 28.0, 629.0),
    ("UV fluorescence, 3 color channels", 18.0, 1693.0),
    ("IR falsecolor detail", 18.0, 721.0),
    ("palimpsest data fusion", 2.0, 137.0),
];

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchRow {
    pub scheme: String,
    pub width: usize,
    pub height: usize,
    pub pixels: usize,
    pub tau: f64,
    pub steps: usize,
    pub setup_seconds: f64,
    /// Median over the timed steps.
    pub seconds_per_iteration: f64,
    pub pixels_per_second: f64,
    pub peak_rss_bytes: u64,
}

/// Side lengths of the near-square grid used for a pixel-count target.
pub fn grid_for_pixels(pixels: usize) -> (usize, usize) {
    let side = ((pixels as f64).sqrt().round() as usize).max(2);
    let height = (pixels / side).max(2);
    (side, height)
}

/// Peak resident set size of this process, where the platform reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Runs `steps` steps of each scheme on a synthetic guide/initial pair per
/// size. Explicit runs use the stability-limited step; the others use
/// `cfg.tau`.
pub fn run_bench(
    sizes: &[usize],
    schemes: &[Scheme],
    cfg: &SchemeConfig,
    steps: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "bench needs at least one step".into(),
        ));
    }
    let mut rows = Vec::new();
    for &pixels in sizes {
        let (w, h) = grid_for_pixels(pixels);
        let guide = textured_ground_truth(w, h, seed);
        let start = random_field(w, h, 50.0, 200.0, seed.wrapping_add(1));
        let d = canonical_drift(&guide)?;
        for &scheme in schemes {
            let mut c = *cfg;
            c.scheme = scheme;
            if scheme == Scheme::Explicit {
                c.tau = stable_timestep(&d);
            }
            let t0 = Instant::now();
            let stepper = Stepper::new(&d, &c)?;
            let setup_seconds = t0.elapsed().as_secs_f64();

            let mut u = start.clone();
            let mut times = Vec::with_capacity(steps);
            for _ in 0..steps {
                let t = Instant::now();
                u = stepper.step(&u)?;
                times.push(t.elapsed().as_secs_f64());
            }
            times.sort_by(f64::total_cmp);
            let per_iter = times[times.len() / 2];
            rows.push(BenchRow {
                scheme: scheme.to_string(),
                width: w,
                height: h,
                pixels: w * h,
                tau: c.tau,
                steps,
                setup_seconds,
                seconds_per_iteration: per_iter,
                pixels_per_second: (w * h) as f64 / per_iter,
                peak_rss_bytes: peak_rss_bytes().unwrap_or(0),
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV preceded by `#` comment lines carrying the reference
/// runtimes.
pub fn write_bench_csv(path: impl AsRef<Path>, rows: &[BenchRow]) -> Result<()> {
    let path = path.as_ref();
    let io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut file = std::fs::File::create(path).map_err(io)?;
    for line in reference_header() {
        writeln!(file, "# {line}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| io(std::io::Error::other(e)))?;
    }
    w.flush().map_err(io)
}

pub fn reference_header() -> Vec<String> {
    REFERENCE_RUNS
        .iter()
        .map(|(what, mp, secs)| {
            format!(
                "reference: {what}: {mp} MP in {secs} s = {:.3e} pixels/s end-to-end (context, not asserted)",
                mp * 1e6 / secs
            )
        })
        .collect()
}
