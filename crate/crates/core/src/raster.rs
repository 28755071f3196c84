//! Raster grids shared by every stage: intensity images, binary masks and
//! instance label maps, plus binarization and file I/O.
//!
//! All grids are row-major and addressed as `(row, col)`.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_dims(kind: &str, width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "{kind} must have non-zero dimensions, got {width}x{height}"
        )));
    }
    if len != width * height {
        return Err(Error::invalid(format!(
            "{kind} data length {len} does not match {width}x{height}"
        )));
    }
    Ok(())
}

/// 8-bit single-channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims("gray image", width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }
}

/// 8-bit three-channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        check_dims("rgb image", width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: [u8; 3]) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[[u8; 3]] {
        &self.data
    }
}

/// Either kind of intensity image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Image {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Image {
    pub fn width(&self) -> usize {
        match self {
            Image::Gray(g) => g.width(),
            Image::Rgb(c) => c.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Image::Gray(g) => g.height(),
            Image::Rgb(c) => c.height(),
        }
    }

    /// Expands gray images to `(v, v, v)`.
    pub fn to_rgb(&self) -> RgbImage {
        match self {
            Image::Rgb(c) => c.clone(),
            Image::Gray(g) => RgbImage {
                width: g.width,
                height: g.height,
                data: g.data.iter().map(|&v| [v, v, v]).collect(),
            },
        }
    }
}

impl From<GrayImage> for Image {
    fn from(g: GrayImage) -> Self {
        Image::Gray(g)
    }
}

impl From<RgbImage> for Image {
    fn from(c: RgbImage) -> Self {
        Image::Rgb(c)
    }
}

/// Foreground/background grid; `true` marks a log pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "mask data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    /// Like [`get`](Self::get) but out-of-frame positions read as background.
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            return false;
        }
        self.data[row as usize * self.width + col as usize]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| !v).collect(),
        }
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Foreground as 255, background as 0.
    pub fn render(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| if v { 255 } else { 0 }).collect(),
        }
    }
}

/// Instance labels: 0 is background, instances are `1..=component_count`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    component_count: u32,
}

impl LabelMap {
    /// Validates that the nonzero labels are exactly `1..=max`.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label data length {} does not match {width}x{height}",
                labels.len()
            )));
        }
        let max = labels.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; max as usize + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = seen.iter().skip(1).position(|&s| !s) {
            return Err(Error::invalid(format!(
                "labels are not contiguous: label {} is missing",
                missing + 1
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            component_count: max,
        })
    }

    /// Remaps arbitrary nonzero values onto `1..=k` in raster order of first
    /// encounter, keeping pixels with equal values together.
    pub fn canonicalize(width: usize, height: usize, values: &[u32]) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "label data length {} does not match {width}x{height}",
                values.len()
            )));
        }
        let mut map = std::collections::HashMap::new();
        let mut next = 0u32;
        let labels = values
            .iter()
            .map(|&v| {
                if v == 0 {
                    0
                } else {
                    *map.entry(v).or_insert_with(|| {
                        next += 1;
                        next
                    })
                }
            })
            .collect();
        Ok(Self {
            width,
            height,
            labels,
            component_count: next,
        })
    }

    /// Keeps the values when they already form `1..=max`, otherwise
    /// canonicalizes. Saved label files therefore round-trip unchanged.
    pub fn from_values(width: usize, height: usize, values: Vec<u32>) -> Result<Self> {
        let max = values.iter().copied().max().unwrap_or(0) as usize;
        let mut seen = vec![false; max + 1];
        for &v in &values {
            seen[v as usize] = true;
        }
        if seen.iter().skip(1).all(|&s| s) {
            Self::new(width, height, values)
        } else {
            Self::canonicalize(width, height, &values)
        }
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        labels: Vec<u32>,
        component_count: u32,
    ) -> Self {
        debug_assert_eq!(labels.len(), width * height);
        Self {
            width,
            height,
            labels,
            component_count,
        }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::from_parts_unchecked(width, height, vec![0; width * height], 0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    pub fn component_count(&self) -> u32 {
        self.component_count
    }

    pub fn to_mask(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.labels.iter().map(|&l| l != 0).collect(),
        }
    }

    /// Pixel count per label, indexed by label (index 0 is background).
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.component_count as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }
}

/// How a pixel's color is tested against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinarizeMode {
    Luma,
    RedDominant,
    Channel(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarizePolicy {
    pub mode: BinarizeMode,
    pub threshold: u8,
}

impl Default for BinarizePolicy {
    fn default() -> Self {
        Self {
            mode: BinarizeMode::RedDominant,
            threshold: 127,
        }
    }
}

impl BinarizePolicy {
    pub fn luma(threshold: u8) -> Self {
        Self {
            mode: BinarizeMode::Luma,
            threshold,
        }
    }

    pub fn red_dominant(threshold: u8) -> Self {
        Self {
            mode: BinarizeMode::RedDominant,
            threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            BinarizeMode::Channel(c) if c > 2 => {
                Err(Error::invalid(format!("channel index {c} is not in 0..=2")))
            }
            _ => Ok(()),
        }
    }

    fn test_rgb(&self, [r, g, b]: [u8; 3]) -> bool {
        let t = self.threshold;
        match self.mode {
            BinarizeMode::Luma => luma([r, g, b]) > t,
            BinarizeMode::RedDominant => r > t && r > g && r > b,
            BinarizeMode::Channel(c) => [r, g, b][c as usize] > t,
        }
    }

    /// Gray pixels carry no hue, so every mode reduces to `v > threshold`.
    fn test_gray(&self, v: u8) -> bool {
        v > self.threshold
    }
}

/// BT.601 luma rounded half-up, computed in exact integer arithmetic.
pub fn luma([r, g, b]: [u8; 3]) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000) as u8
}

pub fn binarize(img: &Image, policy: &BinarizePolicy) -> Result<BinaryMask> {
    policy.validate()?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::invalid("cannot binarize a zero-dimension image"));
    }
    let data = match img {
        Image::Gray(g) => g.data.iter().map(|&v| policy.test_gray(v)).collect(),
        Image::Rgb(c) => c.data.iter().map(|&p| policy.test_rgb(p)).collect(),
    };
    Ok(BinaryMask {
        width: img.width(),
        height: img.height(),
        data,
    })
}

pub fn to_gray(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&p| luma(p)).collect(),
    }
}

/// What a decoded file turned out to hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Raster {
    Image(Image),
    /// 16-bit grayscale files are read as instance labels (value == label).
    Labels(LabelMap),
}

impl Raster {
    pub fn width(&self) -> usize {
        match self {
            Raster::Image(i) => i.width(),
            Raster::Labels(l) => l.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Raster::Image(i) => i.height(),
            Raster::Labels(l) => l.height(),
        }
    }
}

fn from_dynamic(img: DynamicImage) -> Result<Raster> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma16(buf) => {
            let values: Vec<u32> = buf.into_raw().into_iter().map(u32::from).collect();
            Ok(Raster::Labels(LabelMap::from_values(w, h, values)?))
        }
        DynamicImage::ImageLuma8(buf) => Ok(Raster::Image(Image::Gray(GrayImage::new(
            w,
            h,
            buf.into_raw(),
        )?))),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLumaA16(_) => {
            let buf = img.to_luma8();
            Ok(Raster::Image(Image::Gray(GrayImage::new(
                w,
                h,
                buf.into_raw(),
            )?)))
        }
        other => {
            let buf = other.to_rgb8();
            let data = buf
                .into_raw()
                .chunks_exact(3)
                .map(|p| [p[0], p[1], p[2]])
                .collect();
            Ok(Raster::Image(Image::Rgb(RgbImage::new(w, h, data)?)))
        }
    }
}

/// Decodes PNG or binary PGM/PPM bytes.
pub fn decode(bytes: &[u8]) -> Result<Raster> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::Decode("image has zero dimensions".into()));
    }
    from_dynamic(img)
}

pub fn decode_file(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Decodes an instance ground-truth file. 16-bit files map value to label;
/// 8-bit gray files are treated the same way.
pub fn decode_labels(bytes: &[u8]) -> Result<LabelMap> {
    match decode(bytes)? {
        Raster::Labels(l) => Ok(l),
        Raster::Image(Image::Gray(g)) => {
            let values: Vec<u32> = g.data.iter().map(|&v| u32::from(v)).collect();
            LabelMap::from_values(g.width, g.height, values)
        }
        Raster::Image(Image::Rgb(_)) => Err(Error::Decode(
            "instance labels must be a grayscale image".into(),
        )),
    }
}

fn dynamic_of(img: &Image) -> DynamicImage {
    match img {
        Image::Gray(g) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(g.width as u32, g.height as u32, g.data.clone())
                .expect("dimensions checked at construction"),
        ),
        Image::Rgb(c) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(
                c.width as u32,
                c.height as u32,
                c.data.iter().flatten().copied().collect(),
            )
            .expect("dimensions checked at construction"),
        ),
    }
}

fn encode_dynamic(img: &DynamicImage, format: ImageFormat) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, format)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    encode_dynamic(&dynamic_of(img), ImageFormat::Png)
}

/// Binary PGM (P5) for gray images, PPM (P6) for color.
pub fn encode_pnm(img: &Image) -> Result<Vec<u8>> {
    use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
    let subtype = match img {
        Image::Gray(_) => PnmSubtype::Graymap(SampleEncoding::Binary),
        Image::Rgb(_) => PnmSubtype::Pixmap(SampleEncoding::Binary),
    };
    let mut out = Vec::new();
    dynamic_of(img)
        .write_with_encoder(PnmEncoder::new(&mut out).with_subtype(subtype))
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out)
}

/// 16-bit grayscale PNG where pixel value == label.
pub fn encode_labels_png(labels: &LabelMap) -> Result<Vec<u8>> {
    if labels.component_count > u16::MAX as u32 {
        return Err(Error::Encode(format!(
            "{} instances exceed the 16-bit label range",
            labels.component_count
        )));
    }
    let raw: Vec<u16> = labels.labels.iter().map(|&l| l as u16).collect();
    let buf = ImageBuffer::<Luma<u16>, _>::from_raw(labels.width as u32, labels.height as u32, raw)
        .ok_or_else(|| Error::Encode("label dimensions overflow".into()))?;
    encode_dynamic(&DynamicImage::ImageLuma16(buf), ImageFormat::Png)
}

/// Writes PNG, or binary PGM/PPM when the extension is `pgm`, `ppm` or `pnm`.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let bytes = match ext.as_deref() {
        Some("pgm" | "ppm" | "pnm") => encode_pnm(img)?,
        _ => encode_png(img)?,
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn save_labels(labels: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_labels_png(labels)?).map_err(|e| Error::io(path, e))
}
