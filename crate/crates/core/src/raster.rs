//! Raster I/O: 8/16-bit grayscale and RGB in PNG and binary PNM (P5/P6).
//!
//! Sample values map to reals one to one (a 255 in an 8-bit file reads as
//! 255.0); there is no gamma handling and no normalisation by maxval.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ChannelKind, LabelMap, MultiChannelImage, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// Decoded samples before conversion to fields.
struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    depth: BitDepth,
    samples: Vec<u16>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_raster(path: &Path) -> Result<Raster> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(path, &bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(path, &bytes)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{}: not a PNG or binary PGM/PPM file",
            path.display()
        )))
    }
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<Raster> {
    let corrupt = |reason: String| Error::CorruptHeader {
        path: path.to_path_buf(),
        reason,
    };
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| corrupt(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| corrupt(e.to_string()))?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: PNG color type {other:?} (only grayscale and RGB are supported)",
                path.display()
            )))
        }
    };
    let width = info.width as usize;
    let height = info.height as usize;
    let n = width * height * channels;
    let (depth, samples) = match info.bit_depth {
        png::BitDepth::Eight => (
            BitDepth::Eight,
            buf[..n].iter().map(|&b| u16::from(b)).collect(),
        ),
        png::BitDepth::Sixteen => (
            BitDepth::Sixteen,
            buf[..2 * n]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect(),
        ),
        other => {
            return Err(corrupt(format!(
                "unexpected bit depth {other:?} after expansion"
            )))
        }
    };
    Ok(Raster {
        width,
        height,
        channels,
        depth,
        samples,
    })
}

fn decode_pnm(path: &Path, bytes: &[u8]) -> Result<Raster> {
    let corrupt = |reason: &str| Error::CorruptHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Whitespace and '#' comments may separate header tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(corrupt("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(corrupt("expected a decimal number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt("header number out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(corrupt("missing whitespace after maxval"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(corrupt("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(corrupt("maxval must be in 1..=65535"));
    }
    let depth = if maxval < 256 {
        BitDepth::Eight
    } else {
        BitDepth::Sixteen
    };
    let n = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(channels))
        .ok_or_else(|| corrupt("image too large"))?;
    let data = &bytes[pos..];
    let samples: Vec<u16> = match depth {
        BitDepth::Eight => {
            if data.len() < n {
                return Err(corrupt("truncated pixel data"));
            }
            data[..n].iter().map(|&b| u16::from(b)).collect()
        }
        BitDepth::Sixteen => {
            if data.len() < 2 * n {
                return Err(corrupt("truncated pixel data"));
            }
            data[..2 * n]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        }
    };
    if samples.iter().any(|&s| usize::from(s) > maxval) {
        return Err(corrupt("sample exceeds maxval"));
    }
    Ok(Raster {
        width,
        height,
        channels,
        depth,
        samples,
    })
}

fn raster_to_image(r: Raster) -> Result<MultiChannelImage> {
    let channels = (0..r.channels)
        .map(|c| {
            ScalarField::new(
                r.width,
                r.height,
                r.samples
                    .iter()
                    .skip(c)
                    .step_by(r.channels)
                    .map(|&s| f64::from(s))
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = if r.channels == 1 {
        ChannelKind::Gray
    } else {
        ChannelKind::Rgb
    };
    MultiChannelImage::new(channels, kind)
}

/// Reads a PNG or binary PGM/PPM image. Returns the image and the bit depth
/// of the file.
pub fn read_image_with_depth(path: impl AsRef<Path>) -> Result<(MultiChannelImage, BitDepth)> {
    let r = read_raster(path.as_ref())?;
    let depth = r.depth;
    Ok((raster_to_image(r)?, depth))
}

pub fn read_image(path: impl AsRef<Path>) -> Result<MultiChannelImage> {
    Ok(read_image_with_depth(path)?.0)
}

fn read_labels(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let r = read_raster(path)?;
    if r.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{}: label maps must be single-channel",
            path.display()
        )));
    }
    Ok((r.width, r.height, r.samples))
}

/// Reads a binary mask: every nonzero sample becomes 1.
pub fn read_mask(path: impl AsRef<Path>) -> Result<LabelMap> {
    let (w, h, s) = read_labels(path.as_ref())?;
    LabelMap::new(w, h, s.into_iter().map(|v| u32::from(v != 0)).collect())
}

/// Reads a tile map: raw sample values are the tile labels.
pub fn read_tile_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let (w, h, s) = read_labels(path.as_ref())?;
    LabelMap::new(w, h, s.into_iter().map(u32::from).collect())
}

fn quantize(img: &MultiChannelImage, depth: BitDepth) -> Vec<u16> {
    let max = depth.max_value();
    let (w, h) = img.dims();
    let nc = img.channel_count();
    let mut out = Vec::with_capacity(w * h * nc);
    for i in 0..w * h {
        for c in img.channels() {
            out.push(c.values()[i].round().clamp(0.0, max) as u16);
        }
    }
    out
}

/// Writes `img` rounding to the nearest integer and clamping to the range of
/// `depth`. The format follows the extension: `.png`, `.pgm` (one channel)
/// or `.ppm` (three channels).
pub fn write_image(img: &MultiChannelImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let nc = img.channel_count();
    if nc != 1 && nc != 3 {
        return Err(Error::UnsupportedFormat(format!(
            "cannot write a {nc}-channel image; only grayscale and RGB are supported"
        )));
    }
    let samples = quantize(img, depth);
    let (w, h) = img.dims();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    match ext.as_str() {
        "pgm" | "ppm" | "pnm" => {
            let expected = if ext == "pgm" {
                1
            } else if ext == "ppm" {
                3
            } else {
                nc
            };
            if expected != nc {
                return Err(Error::UnsupportedFormat(format!(
                    "{}: .{ext} cannot hold {nc} channels",
                    path.display()
                )));
            }
            let magic = if nc == 1 { "P5" } else { "P6" };
            write!(out, "{magic}\n{w} {h}\n{}\n", depth.max_value() as u32)
                .map_err(|e| io_err(path, e))?;
            let bytes = sample_bytes(&samples, depth);
            out.write_all(&bytes).map_err(|e| io_err(path, e))?;
        }
        "png" => {
            let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
            enc.set_color(if nc == 1 {
                png::ColorType::Grayscale
            } else {
                png::ColorType::Rgb
            });
            enc.set_depth(match depth {
                BitDepth::Eight => png::BitDepth::Eight,
                BitDepth::Sixteen => png::BitDepth::Sixteen,
            });
            let mut writer = enc.write_header().map_err(|e| png_err(path, e))?;
            writer
                .write_image_data(&sample_bytes(&samples, depth))
                .map_err(|e| png_err(path, e))?;
        }
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: unknown extension (use .png, .pgm or .ppm)",
                path.display()
            )))
        }
    }
    out.flush().map_err(|e| io_err(path, e))
}

fn png_err(path: &Path, e: png::EncodingError) -> Error {
    match e {
        png::EncodingError::IoError(io) => io_err(path, io),
        other => Error::UnsupportedFormat(format!("{}: {other}", path.display())),
    }
}

fn sample_bytes(samples: &[u16], depth: BitDepth) -> Vec<u8> {
    match depth {
        BitDepth::Eight => samples.iter().map(|&s| s as u8).collect(),
        BitDepth::Sixteen => samples.iter().flat_map(|s| s.to_be_bytes()).collect(),
    }
}

/// Writes a label map as a single-channel 16-bit image.
pub fn write_labels(labels: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    if let Some(&l) = labels.labels().iter().find(|&&l| l > 65535) {
        return Err(Error::InvalidParameter(format!(
            "label {l} does not fit a 16-bit container"
        )));
    }
    let (w, h) = labels.dims();
    let field = ScalarField::new(
        w,
        h,
        labels.labels().iter().map(|&l| f64::from(l)).collect(),
    )?;
    write_image(&MultiChannelImage::gray(field), path, BitDepth::Sixteen)
}
