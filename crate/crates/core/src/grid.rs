//! Field containers shared by every other module.
//!
//! Pixels are stored row-major: the value at column `x`, row `y` lives at
//! `values[y * width + x]`. The x axis runs along a row, the y axis down a
//! column; drift components and line systems follow the same convention.

use crate::error::{Error, Result};

/// One real-valued image channel on a uniform grid with spacing `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    h: f64,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_spacing(width, height, 1.0, values)
    }

    pub fn with_spacing(width: usize, height: usize, h: f64, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive and finite, got {h}"
            )));
        }
        let expected = width * height;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                width,
                height,
                expected,
                actual: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                x: k % width,
                y: k / width,
            });
        }
        Ok(Self {
            width,
            height,
            h,
            values,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    /// Same geometry, new values. The caller guarantees finiteness; used on
    /// hot paths where the values come from arithmetic on valid fields.
    pub(crate) fn from_parts(width: usize, height: usize, h: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            h,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(self)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.total_mass() / self.len() as f64
    }

    /// Returns a copy with a different grid spacing.
    pub fn respaced(&self, h: f64) -> Result<Self> {
        Self::with_spacing(self.width, self.height, h, self.values.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::with_spacing(
            self.width,
            self.height,
            self.h,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    /// Fails unless every pixel is strictly positive.
    pub fn ensure_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            None => Ok(()),
            Some(k) => Err(Error::NonPositive {
                x: k % self.width,
                y: k / self.width,
                value: self.values[k],
            }),
        }
    }

    pub fn ensure_same_dims(&self, other_dims: (usize, usize), what: &'static str) -> Result<()> {
        if self.dims() != other_dims {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.dims(),
                found: other_dims,
            });
        }
        Ok(())
    }

    /// Largest absolute pixel difference; fields must share dimensions.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Sum of all pixel values, accumulated with Neumaier compensation so the
/// result is independent of image size to within a few ulps.
pub fn total_mass(field: &ScalarField) -> f64 {
    compensated_sum(field.values())
}

pub(crate) fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// A field shifted by a positive working offset, remembering the offset so
/// results can be mapped back to the original value range.
#[derive(Clone, Debug)]
pub struct ShiftedField {
    pub field: ScalarField,
    pub offset: f64,
}

impl ShiftedField {
    pub fn unshift(&self, field: &ScalarField) -> Result<ScalarField> {
        let offset = self.offset;
        field.map(|v| v - offset)
    }
}

pub fn shift_to_positive(field: &ScalarField, offset: f64) -> Result<ShiftedField> {
    if !(offset.is_finite() && offset > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "positivity offset must be positive, got {offset}"
        )));
    }
    Ok(ShiftedField {
        field: field.map(|v| v + offset)?,
        offset,
    })
}

/// Interpretation of the channels of a [`MultiChannelImage`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    Gray,
    Rgb,
    /// Any band combination (e.g. IR-R-G); channels carry no color meaning.
    Falsecolor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiChannelImage {
    channels: Vec<ScalarField>,
    kind: ChannelKind,
}

impl MultiChannelImage {
    pub fn new(channels: Vec<ScalarField>, kind: ChannelKind) -> Result<Self> {
        if channels.is_empty() || channels.len() > 4 {
            return Err(Error::InvalidParameter(format!(
                "an image needs 1 to 4 channels, got {}",
                channels.len()
            )));
        }
        let dims = channels[0].dims();
        if let Some(c) = channels.iter().find(|c| c.dims() != dims) {
            return Err(Error::DimensionMismatch {
                what: "channel",
                expected: dims,
                found: c.dims(),
            });
        }
        match (kind, channels.len()) {
            (ChannelKind::Gray, 1) | (ChannelKind::Rgb, 3) | (ChannelKind::Falsecolor, _) => {}
            (k, n) => {
                return Err(Error::InvalidParameter(format!(
                    "{k:?} image cannot have {n} channels"
                )))
            }
        }
        Ok(Self { channels, kind })
    }

    pub fn gray(field: ScalarField) -> Self {
        Self {
            channels: vec![field],
            kind: ChannelKind::Gray,
        }
    }

    pub fn channels(&self) -> &[ScalarField] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<ScalarField> {
        self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }
}

/// Integer label per pixel: tile ids of a mosaic, or a binary shadow mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(width, height)?;
        if labels.len() != width * height {
            return Err(Error::LengthMismatch {
                width,
                height,
                expected: width * height,
                actual: labels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u32,
    ) -> Result<Self> {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Self::new(width, height, labels)
    }

    pub fn uniform(width: usize, height: usize, label: u32) -> Result<Self> {
        Self::new(width, height, vec![label; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn is_binary(&self) -> bool {
        self.labels.iter().all(|&l| l <= 1)
    }

    pub fn ensure_binary(&self) -> Result<()> {
        match self.labels.iter().position(|&l| l > 1) {
            None => Ok(()),
            Some(k) => Err(Error::NonBinaryMask {
                x: k % self.width,
                y: k / self.width,
                label: self.labels[k],
            }),
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < 2 || height < 2 {
        return Err(Error::GridTooSmall { width, height });
    }
    Ok(())
}
