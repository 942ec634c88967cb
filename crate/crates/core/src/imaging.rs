//! Page rasters and binary text masks.
//!
//! Everything downstream of ingestion works on single-channel 8-bit pages.
//! Colour sources are reduced with the BT.601 luma weights, pages are kept
//! under the submission byte budget by proportional downscaling, and text
//! masks come from a global Otsu threshold followed by a dilation that is
//! wider than it is tall, so words on a line merge into one region.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::{GrayImage, ImageEncoder};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot fit {width}x{height} page under {limit} bytes (smallest encoding: {smallest} bytes)")]
    ScalingFailure {
        width: u32,
        height: u32,
        limit: usize,
        smallest: usize,
    },
    #[error("image codec error for {path}: {source}")]
    Codec {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// Where a subpage came from when it was cut out of a larger page.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SliceOrigin {
    pub parent_page: usize,
    pub slice: usize,
    pub x_offset: u32,
}

/// A greyscale page raster (row-major, 0 = black, 255 = white).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageImage {
    pub doc_id: String,
    pub page_index: usize,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    pub dpi: Option<u32>,
    pub origin: Option<SliceOrigin>,
}

impl PageImage {
    pub fn new(
        doc_id: impl Into<String>,
        page_index: usize,
        width: u32,
        height: u32,
        pixels: Vec<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidInput(format!(
                "page dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(ImagingError::InvalidInput(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        Ok(Self {
            doc_id: doc_id.into(),
            page_index,
            width,
            height,
            pixels,
            dpi: None,
            origin: None,
        })
    }

    /// A page filled with a single grey value.
    pub fn filled(doc_id: impl Into<String>, page_index: usize, width: u32, height: u32, value: u8) -> Self {
        Self::new(
            doc_id,
            page_index,
            width,
            height,
            vec![value; width as usize * height as usize],
        )
        .expect("positive dimensions")
    }

    pub fn with_dpi(mut self, dpi: u32) -> Self {
        self.dpi = Some(dpi);
        self
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = v;
    }

    /// Copy of the column range `[x0, x1)`; provenance is left to the caller.
    pub fn crop_columns(&self, x0: u32, x1: u32) -> Self {
        assert!(x0 < x1 && x1 <= self.width, "bad column range {x0}..{x1}");
        let w = (x1 - x0) as usize;
        let mut pixels = Vec::with_capacity(w * self.height as usize);
        for row in self.pixels.chunks_exact(self.width as usize) {
            pixels.extend_from_slice(&row[x0 as usize..x1 as usize]);
        }
        Self {
            doc_id: self.doc_id.clone(),
            page_index: self.page_index,
            width: x1 - x0,
            height: self.height,
            pixels,
            dpi: self.dpi,
            origin: self.origin.clone(),
        }
    }

    /// Stable identifier `doc/page[.slice]` used in reports and property checks.
    pub fn provenance_id(&self) -> String {
        match &self.origin {
            Some(o) => format!("{}/{}.{}", self.doc_id, o.parent_page, o.slice),
            None => format!("{}/{}", self.doc_id, self.page_index),
        }
    }

    fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.pixels.clone()).expect("consistent buffer")
    }
}

/// An interleaved 8-bit raster with one to four channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorRaster {
    pub doc_id: String,
    pub page_index: usize,
    pub width: u32,
    pub height: u32,
    /// 1 = grey, 2 = grey+alpha, 3 = RGB, 4 = RGBA.
    pub channels: u8,
    pub data: Vec<u8>,
    pub dpi: Option<u32>,
}

/// Anything [`to_greyscale`] accepts.
#[derive(Debug, Clone)]
pub enum SourceImage {
    Grey(PageImage),
    Color(ColorRaster),
}

impl From<PageImage> for SourceImage {
    fn from(p: PageImage) -> Self {
        SourceImage::Grey(p)
    }
}

impl From<ColorRaster> for SourceImage {
    fn from(c: ColorRaster) -> Self {
        SourceImage::Color(c)
    }
}

/// BT.601 luma, rounded half up: `(299 R + 587 G + 114 B + 500) / 1000`.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

pub fn to_greyscale(source: &SourceImage) -> Result<PageImage> {
    match source {
        SourceImage::Grey(p) => {
            if p.pixels.is_empty() {
                return Err(ImagingError::InvalidInput("empty image".into()));
            }
            Ok(p.clone())
        }
        SourceImage::Color(c) => {
            let n = c.width as usize * c.height as usize;
            if n == 0 {
                return Err(ImagingError::InvalidInput("empty image".into()));
            }
            let ch = c.channels as usize;
            if !(1..=4).contains(&ch) || c.data.len() != n * ch {
                return Err(ImagingError::InvalidInput(format!(
                    "{} bytes do not form a {}x{} raster with {} channels",
                    c.data.len(),
                    c.width,
                    c.height,
                    c.channels
                )));
            }
            // Alpha is ignored; programmes are opaque scans.
            let pixels = c
                .data
                .chunks_exact(ch)
                .map(|px| match ch {
                    1 | 2 => px[0],
                    _ => luma(px[0], px[1], px[2]),
                })
                .collect();
            let mut page = PageImage::new(c.doc_id.clone(), c.page_index, c.width, c.height, pixels)?;
            page.dpi = c.dpi;
            Ok(page)
        }
    }
}

/// PNG encoding used both for interchange files and for measuring API payloads.
pub fn encode_png(page: &PageImage) -> Vec<u8> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(&page.pixels, page.width, page.height, image::ExtendedColorType::L8)
        .expect("in-memory png encoding of a consistent buffer");
    out
}

const MIN_SIDE: u32 = 8;

/// Downscale `page` (aspect ratio preserved) until its PNG encoding fits in
/// `limit_bytes`. Pages already under the limit are returned unchanged.
pub fn fit_under_byte_limit(page: &PageImage, limit_bytes: usize) -> Result<PageImage> {
    if limit_bytes == 0 {
        return Err(ImagingError::InvalidInput("byte limit must be positive".into()));
    }
    let size = encode_png(page).len();
    if size <= limit_bytes {
        return Ok(page.clone());
    }
    let src = page.to_gray_image();
    let (w, h) = (page.width as f64, page.height as f64);
    let min_scale = (MIN_SIDE as f64 / w.min(h)).min(1.0);
    // Encoded size scales roughly with pixel count.
    let mut scale = ((limit_bytes as f64 / size as f64).sqrt() * 0.97).min(0.97);
    let mut smallest = size;
    loop {
        let at_floor = scale <= min_scale;
        let s = scale.max(min_scale);
        let nw = ((w * s).round() as u32).max(1);
        let nh = ((h * s).round() as u32).max(1);
        let resized = image::imageops::resize(&src, nw, nh, FilterType::Triangle);
        let out = PageImage {
            doc_id: page.doc_id.clone(),
            page_index: page.page_index,
            width: nw,
            height: nh,
            pixels: resized.into_raw(),
            dpi: page.dpi.map(|d| ((d as f64 * s).round() as u32).max(1)),
            origin: page.origin.clone(),
        };
        let encoded = encode_png(&out).len();
        smallest = smallest.min(encoded);
        if encoded <= limit_bytes {
            return Ok(out);
        }
        if at_floor {
            return Err(ImagingError::ScalingFailure {
                width: page.width,
                height: page.height,
                limit: limit_bytes,
                smallest,
            });
        }
        let ratio = (limit_bytes as f64 / encoded as f64).sqrt();
        scale *= (ratio * 0.97).min(0.9);
    }
}

/// Binary text mask, row-major, `true` = text pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl TextMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width as usize * height as usize {
            return Err(ImagingError::InvalidInput(format!(
                "mask buffer of {} bits does not match {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Number of text pixels in each column.
    pub fn column_sums(&self) -> Vec<u32> {
        let mut sums = vec![0u32; self.width as usize];
        for row in self.bits.chunks_exact(self.width as usize) {
            for (s, b) in sums.iter_mut().zip(row) {
                *s += *b as u32;
            }
        }
        sums
    }

    pub fn crop_columns(&self, x0: u32, x1: u32) -> Self {
        assert!(x0 < x1 && x1 <= self.width, "bad column range {x0}..{x1}");
        let mut bits = Vec::with_capacity((x1 - x0) as usize * self.height as usize);
        for row in self.bits.chunks_exact(self.width as usize) {
            bits.extend_from_slice(&row[x0 as usize..x1 as usize]);
        }
        Self {
            width: x1 - x0,
            height: self.height,
            bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MaskParams {
    /// Half-size of the structuring element (vertical, and horizontal minimum).
    pub dilation_radius: u32,
    /// Horizontal half-size of the dilation; bridges word spaces so the mask
    /// approximates text-line regions rather than glyphs.
    pub line_join: u32,
    /// Pages whose grey range is narrower than this are treated as uniform.
    pub min_contrast: u8,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            dilation_radius: 2,
            line_join: 8,
            min_contrast: 48,
        }
    }
}

/// Global Otsu threshold on a 256-bin histogram. Pixels `<=` the returned
/// value form the dark class.
pub fn otsu_threshold(pixels: &[u8]) -> u8 {
    let mut hist = [0u64; 256];
    for &p in pixels {
        hist[p as usize] += 1;
    }
    let total = pixels.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0f64, 0f64);
    let (mut best, mut best_var) = (0u8, -1f64);
    for t in 0..256 {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best = t as u8;
        }
    }
    best
}

/// Square (Chebyshev) dilation.
pub fn dilate(mask: &TextMask, radius: u32) -> TextMask {
    dilate_rect(mask, radius, radius)
}

/// Dilation by a `(2rx+1) x (2ry+1)` rectangle, done as a row pass followed
/// by a column pass.
pub fn dilate_rect(mask: &TextMask, rx: u32, ry: u32) -> TextMask {
    if rx == 0 && ry == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width as usize, mask.height as usize);
    let r = rx as usize;
    let mut rows = vec![false; w * h];
    for y in 0..h {
        let src = &mask.bits[y * w..(y + 1) * w];
        let dst = &mut rows[y * w..(y + 1) * w];
        // distance to the most recent set pixel, swept both ways
        let mut last: Option<usize> = None;
        for x in 0..w {
            if src[x] {
                last = Some(x);
            }
            if matches!(last, Some(l) if x - l <= r) {
                dst[x] = true;
            }
        }
        let mut next: Option<usize> = None;
        for x in (0..w).rev() {
            if src[x] {
                next = Some(x);
            }
            if matches!(next, Some(n) if n - x <= r) {
                dst[x] = true;
            }
        }
    }
    let r = ry as usize;
    let mut out = vec![false; w * h];
    for x in 0..w {
        let mut last: Option<usize> = None;
        for y in 0..h {
            if rows[y * w + x] {
                last = Some(y);
            }
            if matches!(last, Some(l) if y - l <= r) {
                out[y * w + x] = true;
            }
        }
        let mut next: Option<usize> = None;
        for y in (0..h).rev() {
            if rows[y * w + x] {
                next = Some(y);
            }
            if matches!(next, Some(n) if n - y <= r) {
                out[y * w + x] = true;
            }
        }
    }
    TextMask {
        width: mask.width,
        height: mask.height,
        bits: out,
    }
}

/// Built-in mask provider: dark pixels under the Otsu threshold, dilated.
pub fn binarize_text_mask(page: &PageImage, params: &MaskParams) -> TextMask {
    let (lo, hi) = page
        .pixels
        .iter()
        .fold((u8::MAX, u8::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let ink: Vec<bool> = if hi.saturating_sub(lo) < params.min_contrast {
        let mean = page.pixels.iter().map(|&p| p as u64).sum::<u64>() / page.pixels.len() as u64;
        vec![mean < 128; page.pixels.len()]
    } else {
        let t = otsu_threshold(&page.pixels);
        page.pixels.iter().map(|&p| p <= t).collect()
    };
    let raw = TextMask {
        width: page.width,
        height: page.height,
        bits: ink,
    };
    dilate_rect(&raw, params.dilation_radius.max(params.line_join), params.dilation_radius)
}

// --- files -----------------------------------------------------------------

/// Read a page file, converting to greyscale.
pub fn load_page(path: &Path, doc_id: &str, page_index: usize) -> Result<PageImage> {
    let img = image::open(path).map_err(|source| ImagingError::Codec {
        path: path.display().to_string(),
        source,
    })?;
    let source = match img {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            SourceImage::Grey(PageImage::new(doc_id, page_index, w, h, g.into_raw())?)
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = rgb.dimensions();
            SourceImage::Color(ColorRaster {
                doc_id: doc_id.to_string(),
                page_index,
                width: w,
                height: h,
                channels: 3,
                data: rgb.into_raw(),
                dpi: None,
            })
        }
    };
    to_greyscale(&source)
}

pub fn save_page_png(path: &Path, page: &PageImage) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, encode_png(page))?;
    Ok(())
}

/// Encode a mask as a 1-bit greyscale PNG (white = text).
pub fn encode_mask_png(mask: &TextMask) -> Vec<u8> {
    let w = mask.width as usize;
    let stride = w.div_ceil(8);
    let mut packed = vec![0u8; stride * mask.height as usize];
    for (y, row) in mask.bits.chunks_exact(w).enumerate() {
        for (x, &b) in row.iter().enumerate() {
            if b {
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(BufWriter::new(&mut out), mask.width, mask.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::One);
        let mut writer = enc.write_header().expect("png header");
        writer.write_image_data(&packed).expect("png data");
    }
    out
}

pub fn save_mask_png(path: &Path, mask: &TextMask) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, encode_mask_png(mask))?;
    Ok(())
}

/// Load a mask file of any bit depth; grey values `>= 128` are text.
pub fn load_mask_png(path: &Path) -> Result<TextMask> {
    let img = image::open(path).map_err(|source| ImagingError::Codec {
        path: path.display().to_string(),
        source,
    })?;
    let g = img.to_luma8();
    let (w, h) = g.dimensions();
    TextMask::new(w, h, g.into_raw().into_iter().map(|v| v >= 128).collect())
}

const PAGE_EXTENSIONS: &[&str] = &["png", "tif", "tiff"];

/// Enumerate `<root>/<doc_id>/<page_index>.<ext>` files, grouped by document
/// and sorted by page index.
pub fn list_page_files(root: &Path) -> Result<BTreeMap<String, Vec<(usize, PathBuf)>>> {
    let mut docs = BTreeMap::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let doc_id = entry.file_name().to_string_lossy().into_owned();
        if doc_id.starts_with('.') {
            continue;
        }
        let mut pages = Vec::new();
        for f in fs::read_dir(entry.path())? {
            let path = f?.path();
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(|e| e.to_ascii_lowercase());
            if !matches!(ext.as_deref(), Some(e) if PAGE_EXTENSIONS.contains(&e)) {
                continue;
            }
            if let Some(idx) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse::<usize>().ok())
            {
                pages.push((idx, path));
            }
        }
        if !pages.is_empty() {
            pages.sort();
            docs.insert(doc_id, pages);
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(w: u32, h: u32, px: [u8; 3]) -> ColorRaster {
        ColorRaster {
            doc_id: "d".into(),
            page_index: 0,
            width: w,
            height: h,
            channels: 3,
            data: px.iter().copied().cycle().take((w * h * 3) as usize).collect(),
            dpi: Some(300),
        }
    }

    // Independent per-pixel oracle: exact rational arithmetic in f64.
    fn luma_oracle(r: u8, g: u8, b: u8) -> u8 {
        let y = (299.0 * r as f64 + 587.0 * g as f64 + 114.0 * b as f64) / 1000.0;
        (y + 0.5).floor() as u8
    }

    #[test]
    fn white_rgb_becomes_white_grey() {
        let g = to_greyscale(&rgb(4, 3, [255, 255, 255]).into()).unwrap();
        assert!(g.pixels.iter().all(|&p| p == 255));
        assert_eq!(g.dpi, Some(300));
    }

    #[test]
    fn grey_input_is_identity() {
        let mut p = PageImage::filled("d", 1, 5, 5, 17);
        p.set(2, 2, 200);
        let g = to_greyscale(&p.clone().into()).unwrap();
        assert_eq!(g, p);
    }

    #[test]
    fn pure_red_matches_oracle() {
        let g = to_greyscale(&rgb(2, 2, [255, 0, 0]).into()).unwrap();
        assert_eq!(g.pixels[0], luma_oracle(255, 0, 0));
        assert_eq!(g.pixels[0], 76);
    }

    #[test]
    fn luma_matches_oracle_on_grid() {
        for r in (0..=255u16).step_by(5) {
            for g in (0..=255u16).step_by(7) {
                for b in (0..=255u16).step_by(11) {
                    let (r, g, b) = (r as u8, g as u8, b as u8);
                    assert_eq!(luma(r, g, b), luma_oracle(r, g, b), "{r},{g},{b}");
                }
            }
        }
    }

    #[test]
    fn empty_image_is_rejected() {
        let c = ColorRaster {
            doc_id: "d".into(),
            page_index: 0,
            width: 0,
            height: 4,
            channels: 3,
            data: vec![],
            dpi: None,
        };
        assert!(matches!(to_greyscale(&c.into()), Err(ImagingError::InvalidInput(_))));
    }

    #[test]
    fn small_page_is_left_alone() {
        let p = PageImage::filled("d", 0, 20, 20, 255);
        assert!(encode_png(&p).len() < 1000);
        assert_eq!(fit_under_byte_limit(&p, 5_000_000).unwrap(), p);
    }

    #[test]
    fn one_byte_limit_cannot_be_met() {
        let p = PageImage::filled("d", 0, 20, 20, 255);
        assert!(matches!(
            fit_under_byte_limit(&p, 1),
            Err(ImagingError::ScalingFailure { .. })
        ));
    }

    #[test]
    fn blank_and_black_pages() {
        let white = PageImage::filled("d", 0, 30, 20, 255);
        assert_eq!(binarize_text_mask(&white, &MaskParams::default()).count(), 0);
        let black = PageImage::filled("d", 0, 30, 20, 0);
        assert_eq!(binarize_text_mask(&black, &MaskParams::default()).count(), 600);
    }

    #[test]
    fn two_columns_show_up_in_column_sums() {
        let mut p = PageImage::filled("d", 0, 100, 40, 255);
        for y in 5..35 {
            for x in (10..30).chain(60..85) {
                p.set(x, y, 0);
            }
        }
        let params = MaskParams {
            dilation_radius: 0,
            line_join: 0,
            ..Default::default()
        };
        let sums = binarize_text_mask(&p, &params).column_sums();
        for (x, s) in sums.iter().enumerate() {
            let inside = (10..30).contains(&x) || (60..85).contains(&x);
            assert_eq!(*s > 0, inside, "column {x}");
        }
    }

    #[test]
    fn dilation_grows_by_radius() {
        let mut m = TextMask::empty(11, 11);
        m.set(5, 5, true);
        let d = dilate(&m, 2);
        assert_eq!(d.count(), 25);
        assert!(d.get(3, 3) && d.get(7, 7) && !d.get(2, 5));
        let r = dilate_rect(&m, 3, 1);
        assert_eq!(r.count(), 21);
        assert!(r.get(2, 4) && !r.get(5, 3));
    }

    #[test]
    fn word_spaces_are_bridged() {
        let mut p = PageImage::filled("d", 0, 60, 10, 255);
        for y in 3..6 {
            for x in (5..20).chain(32..50) {
                p.set(x, y, 0);
            }
        }
        let sums = binarize_text_mask(&p, &MaskParams::default()).column_sums();
        assert!(sums[5..50].iter().all(|&s| s > 0));
    }

    #[test]
    fn mask_png_round_trip() {
        let mut m = TextMask::empty(13, 7);
        m.set(0, 0, true);
        m.set(12, 6, true);
        m.set(8, 3, true);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        save_mask_png(&path, &m).unwrap();
        assert_eq!(load_mask_png(&path).unwrap(), m);
    }
}
