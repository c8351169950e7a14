//! End-to-end pipelines: shadow removal, mosaic light balancing and
//! guide-based data fusion. Channels are processed independently.

use log::warn;
use rayon::prelude::*;

use crate::drift::{canonical_drift, gate_label_seams, gate_mask_boundary, DriftField};
use crate::error::{Error, Result};
use crate::grid::{shift_to_positive, LabelMap, MultiChannelImage, ScalarField};
use crate::operators::off_diagonals_nonnegative;
use crate::solvers::{evolve, EvolveReport, SchemeConfig};

/// What to do with the evolved channel before it is shifted back.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rescale {
    /// Scale the working channel so its mean equals the input's mean.
    Renormalize,
    /// Leave the evolved values alone and clamp the final output to `[lo, hi]`.
    Clamp { lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineParams {
    pub scheme: SchemeConfig,
    /// Added to every pixel before drifts are computed, removed afterwards.
    pub offset: f64,
    /// Gate dilation (in faces) around shadow boundaries.
    pub band: usize,
    pub rescale: Rescale,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            scheme: SchemeConfig::default(),
            offset: 1.0,
            band: 0,
            rescale: Rescale::Renormalize,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.offset.is_finite() && self.offset > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "positivity offset must be positive, got {}",
                self.offset
            )));
        }
        self.scheme.validate()
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub image: MultiChannelImage,
    /// One report per channel, for the offset-shifted working channel.
    pub reports: Vec<EvolveReport>,
}

/// Per-channel drifts for shadow removal: canonical drift of each
/// offset-shifted channel, zeroed across the shadow mask boundary.
pub fn shadow_drifts(
    image: &MultiChannelImage,
    shadow_mask: &LabelMap,
    offset: f64,
    band: usize,
) -> Result<Vec<DriftField>> {
    check_labels(image, shadow_mask)?;
    shadow_mask.ensure_binary()?;
    per_channel_drift(image, offset, |d| gate_mask_boundary(&d, shadow_mask, band))
}

/// Per-channel drifts for mosaic balancing: canonical drift with every tile
/// seam zeroed.
pub fn seam_drifts(
    image: &MultiChannelImage,
    tiles: &LabelMap,
    offset: f64,
) -> Result<Vec<DriftField>> {
    check_labels(image, tiles)?;
    per_channel_drift(image, offset, |d| gate_label_seams(&d, tiles))
}

/// Canonical drifts of the offset-shifted guide, one per init channel. A
/// single-channel guide is broadcast.
pub fn guide_drifts(
    init: &MultiChannelImage,
    guide: &MultiChannelImage,
    offset: f64,
) -> Result<Vec<DriftField>> {
    if init.dims() != guide.dims() {
        return Err(Error::DimensionMismatch {
            what: "guide",
            expected: init.dims(),
            found: guide.dims(),
        });
    }
    let per_guide = per_channel_drift(guide, offset, Ok)?;
    match (guide.channel_count(), init.channel_count()) {
        (1, n) => Ok(vec![per_guide[0].clone(); n]),
        (g, n) if g == n => Ok(per_guide),
        (g, n) => Err(Error::InvalidParameter(format!(
            "guide has {g} channels; expected 1 or {n}"
        ))),
    }
}

fn per_channel_drift(
    image: &MultiChannelImage,
    offset: f64,
    gate: impl Fn(DriftField) -> Result<DriftField>,
) -> Result<Vec<DriftField>> {
    image
        .channels()
        .iter()
        .map(|c| gate(canonical_drift(&shift_to_positive(c, offset)?.field)?))
        .collect()
}

/// Removes constant multiplicative shadows: the drift of each channel is
/// zeroed on the faces crossing the shadow mask boundary and the channel is
/// evolved from itself.
pub fn remove_shadow(
    image: &MultiChannelImage,
    shadow_mask: &LabelMap,
    p: &PipelineParams,
) -> Result<PipelineOutput> {
    p.validate()?;
    let drifts = shadow_drifts(image, shadow_mask, p.offset, p.band)?;
    evolve_channels(image, &drifts, p)
}

/// Equalises per-tile exposure differences of a mosaic by zeroing the drift
/// on every seam between tiles.
pub fn balance_mosaic(
    image: &MultiChannelImage,
    tiles: &LabelMap,
    p: &PipelineParams,
) -> Result<PipelineOutput> {
    p.validate()?;
    let drifts = seam_drifts(image, tiles, p.offset)?;
    evolve_channels(image, &drifts, p)
}

/// Evolves `init` under the canonical drift of `guide`. At steadiness each
/// output channel is the guide channel rescaled to the mass of the init
/// channel; `p.scheme.max_steps` bounds the run for intermediate blends.
pub fn fuse(
    init: &MultiChannelImage,
    guide: &MultiChannelImage,
    p: &PipelineParams,
) -> Result<PipelineOutput> {
    p.validate()?;
    let drifts = guide_drifts(init, guide, p.offset)?;
    evolve_channels(init, &drifts, p)
}

fn check_labels(image: &MultiChannelImage, labels: &LabelMap) -> Result<()> {
    if image.dims() != labels.dims() {
        return Err(Error::DimensionMismatch {
            what: "label map",
            expected: image.dims(),
            found: labels.dims(),
        });
    }
    Ok(())
}

/// Runs the shift / evolve / rescale / unshift chain on every channel with
/// the given per-channel drifts.
pub fn evolve_channels(
    image: &MultiChannelImage,
    drifts: &[DriftField],
    p: &PipelineParams,
) -> Result<PipelineOutput> {
    p.validate()?;
    if drifts.len() != image.channel_count() {
        return Err(Error::InvalidParameter(format!(
            "{} drifts for {} channels",
            drifts.len(),
            image.channel_count()
        )));
    }
    let results: Vec<(ScalarField, EvolveReport)> = image
        .channels()
        .par_iter()
        .zip(drifts)
        .enumerate()
        .map(|(c, (channel, d))| {
            let shifted = shift_to_positive(channel, p.offset)?;
            if !off_diagonals_nonnegative(d) {
                warn!(
                    "channel {c}: max |d|h = {:.3} > 2, positivity is not guaranteed",
                    d.max_scaled_magnitude()
                );
            }
            let (u, report) = evolve(&shifted.field, d, &p.scheme)?;
            let out = match p.rescale {
                Rescale::Renormalize => {
                    let gain = shifted.field.total_mass() / u.total_mass();
                    shifted.unshift(&u.scaled(gain)?)?
                }
                Rescale::Clamp { lo, hi } => shifted.unshift(&u)?.map(|v| v.clamp(lo, hi))?,
            };
            Ok((out, report))
        })
        .collect::<Result<_>>()?;

    let (channels, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(PipelineOutput {
        image: MultiChannelImage::new(channels, image.kind())?,
        reports,
    })
}
