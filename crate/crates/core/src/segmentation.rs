//! Subpage segmentation by vertical projection of text masks.
//!
//! Phase 1 (pre-segmentation) splits every page at the valleys of its
//! smoothed column-sum profile. A document whose resulting widths stray from
//! the per-year reference width is re-run through phase 2, which drops
//! separators that produce too-narrow slices and halves over-wide slices
//! whose central band carries no text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{binarize_text_mask, MaskParams, PageImage, SliceOrigin, TextMask};

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("separator {x} is outside the open interval (0, {width})")]
    InvalidSeparator { x: u32, width: u32 },
    #[error("separators are not strictly increasing: {0:?}")]
    Unordered(Vec<u32>),
    #[error("no reference width for year {0}")]
    MissingReference(i32),
    #[error("no widths supplied for {0}")]
    MissingData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("reference table line {line}: {message}")]
    TableFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SegmentationError>;

// --- projection ------------------------------------------------------------

/// Per-column text-pixel counts and their Gaussian-smoothed version.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionProfile {
    pub values: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub sigma: f64,
}

impl ProjectionProfile {
    /// Build a profile from raw column values.
    pub fn from_values(values: Vec<f64>, sigma: f64) -> Self {
        let smoothed = gaussian_smooth(&values, sigma);
        Self {
            values,
            smoothed,
            sigma,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 1-D Gaussian filter with mirror boundary (`d c b a | a b c d | d c b a`),
/// kernel truncated at four standard deviations.
pub fn gaussian_smooth(values: &[f64], sigma: f64) -> Vec<f64> {
    let n = values.len();
    if n == 0 || sigma <= 0.0 {
        return values.to_vec();
    }
    let radius = (4.0 * sigma + 0.5) as isize;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let norm: f64 = weights.iter().sum();
    let reflect = |i: isize| -> usize {
        let n = n as isize;
        let period = 2 * n;
        let mut j = i.rem_euclid(period);
        if j >= n {
            j = period - 1 - j;
        }
        j as usize
    };
    (0..n as isize)
        .map(|i| {
            weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * values[reflect(i + k as isize - radius)])
                .sum::<f64>()
                / norm
        })
        .collect()
}

pub fn vertical_projection(mask: &TextMask, sigma: f64) -> ProjectionProfile {
    let values = mask.column_sums().into_iter().map(f64::from).collect();
    ProjectionProfile::from_values(values, sigma)
}

// --- separators ------------------------------------------------------------

/// Peak-detection settings for a single page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakParams {
    /// Minimum horizontal distance between two separators, in pixels.
    pub min_distance: usize,
    /// Required prominence as a fraction of the profile's maximum.
    pub prominence_fraction: f64,
}

/// Ordered cut positions for one page; a cut at `x` puts column `x` in the
/// right-hand slice.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeparatorSet {
    pub xs: Vec<u32>,
    pub source: Option<PageRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRef {
    pub doc_id: String,
    pub page_index: usize,
}

impl SeparatorSet {
    pub fn new(xs: Vec<u32>) -> Self {
        Self { xs, source: None }
    }

    pub fn for_page(mut self, page: &PageImage) -> Self {
        self.source = Some(PageRef {
            doc_id: page.doc_id.clone(),
            page_index: page.page_index,
        });
        self
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn validate(&self, width: u32) -> Result<()> {
        if let Some(&x) = self.xs.iter().find(|&&x| x == 0 || x >= width) {
            return Err(SegmentationError::InvalidSeparator { x, width });
        }
        if self.xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SegmentationError::Unordered(self.xs.clone()));
        }
        Ok(())
    }

    /// Widths of the slices produced by cutting a page of `width` pixels.
    pub fn slice_widths(&self, width: u32) -> Vec<u32> {
        let mut bounds = Vec::with_capacity(self.xs.len() + 2);
        bounds.push(0);
        bounds.extend_from_slice(&self.xs);
        bounds.push(width);
        bounds.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Strict local maxima of `x`; a flat top counts once, at its middle
/// (rounded down). Runs touching either end are never peaks.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    if x.len() < 3 {
        return peaks;
    }
    let last = x.len() - 1;
    let mut i = 1;
    while i < last {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead < last && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                peaks.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

/// Topographic prominence of the peak at `p`.
fn prominence(x: &[f64], p: usize) -> f64 {
    let h = x[p];
    let mut left_min = h;
    for &v in x[..=p].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[p..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Text gaps appear as peaks of the inverted smoothed profile.
pub fn detect_separators(profile: &ProjectionProfile, params: &PeakParams) -> SeparatorSet {
    let s = &profile.smoothed;
    let max = s.iter().cloned().fold(0.0, f64::max);
    if s.is_empty() || max <= 0.0 {
        return SeparatorSet::default();
    }
    let inverted: Vec<f64> = s.iter().map(|v| max - v).collect();
    let min_prominence = params.prominence_fraction * max;
    let candidates: Vec<(usize, f64)> = local_maxima(&inverted)
        .into_iter()
        .map(|p| (p, prominence(&inverted, p)))
        .filter(|&(_, prom)| prom >= min_prominence && prom > 0.0)
        .collect();

    // Highest (deepest gap) first, then most prominent, then leftmost.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, qa) = candidates[a];
        let (pb, qb) = candidates[b];
        inverted[pb]
            .total_cmp(&inverted[pa])
            .then(qb.total_cmp(&qa))
            .then(pa.cmp(&pb))
    });
    let mut kept: Vec<usize> = Vec::new();
    for idx in order {
        let p = candidates[idx].0;
        if kept.iter().all(|&k| k.abs_diff(p) >= params.min_distance) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    SeparatorSet::new(kept.into_iter().map(|p| p as u32).collect())
}

fn slice_bounds(width: u32, seps: &SeparatorSet) -> Vec<(u32, u32)> {
    let mut bounds = vec![0];
    bounds.extend_from_slice(&seps.xs);
    bounds.push(width);
    bounds.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Cut `page` at `seps`, left to right. Each slice remembers its parent page
/// and its horizontal offset within it.
pub fn split_page(page: &PageImage, seps: &SeparatorSet) -> Result<Vec<PageImage>> {
    seps.validate(page.width)?;
    if seps.is_empty() {
        return Ok(vec![page.clone()]);
    }
    let (parent, base) = match &page.origin {
        Some(o) => (o.parent_page, o.x_offset),
        None => (page.page_index, 0),
    };
    Ok(slice_bounds(page.width, seps)
        .into_iter()
        .enumerate()
        .map(|(slice, (x0, x1))| {
            let mut sub = page.crop_columns(x0, x1);
            sub.origin = Some(SliceOrigin {
                parent_page: parent,
                slice,
                x_offset: base + x0,
            });
            sub
        })
        .collect())
}

pub fn split_mask(mask: &TextMask, seps: &SeparatorSet) -> Result<Vec<TextMask>> {
    seps.validate(mask.width)?;
    Ok(slice_bounds(mask.width, seps)
        .into_iter()
        .map(|(x0, x1)| mask.crop_columns(x0, x1))
        .collect())
}

// --- reference widths ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub period: String,
    pub median_width: u32,
}

pub const DEFAULT_TOLERANCE: f64 = 0.93;

/// Per-year median subpage widths plus the tolerance applied to them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceWidthTable {
    entries: BTreeMap<i32, ReferenceEntry>,
    tolerance: f64,
}

impl ReferenceWidthTable {
    pub fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance <= 1.0) {
            return Err(SegmentationError::InvalidInput(format!(
                "tolerance must lie in (0, 1], got {tolerance}"
            )));
        }
        Ok(Self {
            entries: BTreeMap::new(),
            tolerance,
        })
    }

    pub fn insert(&mut self, period: impl Into<String>, year: i32, median_width: u32) -> Result<()> {
        if median_width == 0 {
            return Err(SegmentationError::InvalidInput(format!(
                "reference width for {year} must be positive"
            )));
        }
        self.entries.insert(
            year,
            ReferenceEntry {
                period: period.into(),
                median_width,
            },
        );
        Ok(())
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn get(&self, year: i32) -> Result<&ReferenceEntry> {
        self.entries
            .get(&year)
            .ok_or(SegmentationError::MissingReference(year))
    }

    pub fn median_width(&self, year: i32) -> Result<u32> {
        Ok(self.get(year)?.median_width)
    }

    /// `tolerance * median` for `year`.
    pub fn threshold(&self, year: i32) -> Result<f64> {
        Ok(self.tolerance * self.median_width(year)? as f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &ReferenceEntry)> {
        self.entries.iter().map(|(y, e)| (*y, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse the `period,year,median_width` text format.
    pub fn parse(text: &str, tolerance: f64) -> Result<Self> {
        let mut table = Self::new(tolerance)?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("period")) {
                continue;
            }
            let err = |message: String| SegmentationError::TableFormat { line: i + 1, message };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [period, year, width] = fields[..] else {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            };
            let year: i32 = year.parse().map_err(|_| err(format!("bad year {year:?}")))?;
            let width: u32 = width.parse().map_err(|_| err(format!("bad width {width:?}")))?;
            if table.entries.contains_key(&year) {
                return Err(err(format!("duplicate year {year}")));
            }
            table
                .insert(period, year, width)
                .map_err(|e| err(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("period,year,median_width\n");
        for (year, e) in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.period, year, e.median_width);
        }
        out
    }

    pub fn load(path: &Path, tolerance: f64) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, tolerance)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Lower median of a non-empty list.
pub fn lower_median(values: &[u32]) -> Option<u32> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

/// Median subpage width per `(period, year)`.
pub fn compute_reference_widths(
    widths: &BTreeMap<(String, i32), Vec<u32>>,
    tolerance: f64,
) -> Result<ReferenceWidthTable> {
    let mut table = ReferenceWidthTable::new(tolerance)?;
    for ((period, year), ws) in widths {
        let median = lower_median(ws)
            .ok_or_else(|| SegmentationError::MissingData(format!("{period} {year}")))?;
        table.insert(period.clone(), *year, median)?;
    }
    Ok(table)
}

/// Narrower than `t` or wider than `2t`, with `t = tolerance * median`.
pub fn width_deviates(width: u32, threshold: f64) -> bool {
    let w = width as f64;
    w < threshold || w > 2.0 * threshold
}

/// Does any width in the document call for post-segmentation?
pub fn select_candidates(widths: &[u32], refs: &ReferenceWidthTable, year: i32) -> Result<bool> {
    let t = refs.threshold(year)?;
    Ok(widths.iter().any(|&w| width_deviates(w, t)))
}

/// Drop separators that leave a slice narrower than the tolerance-scaled
/// median (floored to whole pixels). The narrowest offending slice is merged
/// into its narrower neighbour, one separator at a time.
pub fn filter_separators(
    seps: &SeparatorSet,
    page_width: u32,
    refs: &ReferenceWidthTable,
    year: i32,
) -> Result<SeparatorSet> {
    seps.validate(page_width)?;
    let min_width = refs.threshold(year)?.floor() as u32;
    let mut xs = seps.xs.clone();
    while !xs.is_empty() {
        let widths = SeparatorSet::new(xs.clone()).slice_widths(page_width);
        let Some((i, _)) = widths
            .iter()
            .enumerate()
            .filter(|(_, &w)| w < min_width)
            .min_by_key(|(i, &w)| (w, *i))
        else {
            break;
        };
        let drop = if i == 0 {
            0
        } else if i == widths.len() - 1 {
            xs.len() - 1
        } else if widths[i - 1] <= widths[i + 1] {
            i - 1
        } else {
            i
        };
        xs.remove(drop);
    }
    Ok(SeparatorSet {
        xs,
        source: seps.source.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeParams {
    /// Width of the central band, as a fraction of the page width.
    pub band_fraction: f64,
    /// The band counts as empty below this text-pixel density.
    pub max_band_density: f64,
}

impl Default for NormalizeParams {
    fn default() -> Self {
        Self {
            band_fraction: 0.04,
            max_band_density: 0.005,
        }
    }
}

fn central_band_is_empty(mask: &TextMask, params: &NormalizeParams) -> bool {
    let band = ((mask.width as f64 * params.band_fraction).round() as u32).clamp(1, mask.width);
    let x0 = (mask.width - band) / 2;
    let mut ink = 0usize;
    for y in 0..mask.height {
        for x in x0..x0 + band {
            ink += mask.get(x, y) as usize;
        }
    }
    (ink as f64) < params.max_band_density * (band as f64 * mask.height as f64)
}

const MAX_NORMALIZE_DEPTH: usize = 6;

fn normalize_one(
    page: PageImage,
    mask: TextMask,
    threshold: f64,
    params: &NormalizeParams,
    depth: usize,
    out: &mut Vec<(PageImage, TextMask)>,
) -> Result<()> {
    let wide = page.width as f64 > 2.0 * threshold;
    if depth >= MAX_NORMALIZE_DEPTH || !wide || page.width < 2 || !central_band_is_empty(&mask, params) {
        out.push((page, mask));
        return Ok(());
    }
    let mid = SeparatorSet::new(vec![page.width / 2]);
    let pages = split_page(&page, &mid)?;
    let masks = split_mask(&mask, &mid)?;
    for (p, m) in pages.into_iter().zip(masks) {
        normalize_one(p, m, threshold, params, depth + 1, out)?;
    }
    Ok(())
}

/// Halve over-wide slices (wider than `2t`) whose central band is empty,
/// repeatedly. Masks travel with their pages.
pub fn normalize_pages(
    subpages: Vec<PageImage>,
    masks: Vec<TextMask>,
    refs: &ReferenceWidthTable,
    year: i32,
    params: &NormalizeParams,
) -> Result<(Vec<PageImage>, Vec<TextMask>)> {
    if subpages.len() != masks.len() {
        return Err(SegmentationError::InvalidInput(format!(
            "{} subpages but {} masks",
            subpages.len(),
            masks.len()
        )));
    }
    let t = refs.threshold(year)?;
    let mut out = Vec::with_capacity(subpages.len());
    for (p, m) in subpages.into_iter().zip(masks) {
        if (p.width, p.height) != (m.width, m.height) {
            return Err(SegmentationError::InvalidInput(format!(
                "mask {}x{} does not match page {}",
                m.width,
                m.height,
                p.provenance_id()
            )));
        }
        normalize_one(p, m, t, params, 0, &mut out)?;
    }
    Ok(out.into_iter().unzip())
}

/// Reading order for folded born-digital flyers: swap the first two pages,
/// then move the last page (the cover) to the front. Fewer than three pages
/// are returned unchanged together with a warning.
pub fn reorder_born_digital<T>(mut pages: Vec<T>) -> (Vec<T>, Option<String>) {
    if pages.len() < 3 {
        let msg = format!("born-digital reordering needs at least 3 subpages, got {}", pages.len());
        log::warn!("{msg}");
        return (pages, Some(msg));
    }
    pages.swap(0, 1);
    let cover = pages.pop().expect("non-empty");
    pages.insert(0, cover);
    (pages, None)
}

// --- document pipeline -----------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationParams {
    pub mask: MaskParams,
    /// Minimum separator spacing as a fraction of the reference width.
    pub distance_fraction: f64,
    pub prominence_fraction: f64,
    /// Gaussian sigma is `page width / sigma_divisor`.
    pub sigma_divisor: f64,
    pub normalize: NormalizeParams,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            mask: MaskParams::default(),
            distance_fraction: 0.2,
            prominence_fraction: 0.1,
            sigma_divisor: 200.0,
            normalize: NormalizeParams::default(),
        }
    }
}

impl SegmentationParams {
    pub fn peak_params(&self, reference_width: u32) -> PeakParams {
        PeakParams {
            min_distance: ((self.distance_fraction * reference_width as f64).round() as usize).max(1),
            prominence_fraction: self.prominence_fraction,
        }
    }

    pub fn sigma(&self, page_width: u32) -> f64 {
        (page_width as f64 / self.sigma_divisor).max(0.5)
    }
}

/// Per-document description needed to segment it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentInfo {
    pub doc_id: String,
    pub year: i32,
    pub born_digital: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    PreOnly,
    PostApplied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub doc_id: String,
    pub year: i32,
    pub born_digital: bool,
    pub pages_in: usize,
    pub subpages_out: usize,
    pub phase: Phase,
    /// Final cut positions, one list per input page.
    pub separators: Vec<Vec<u32>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

fn segment_phase1(
    page: &PageImage,
    mask: &TextMask,
    peaks: &PeakParams,
    params: &SegmentationParams,
) -> SeparatorSet {
    let profile = vertical_projection(mask, params.sigma(page.width));
    detect_separators(&profile, peaks).for_page(page)
}

/// Run both phases on one document. `masks`, when given, replace the
/// built-in mask provider and must align with `doc`.
pub fn segment_document(
    doc: &[PageImage],
    masks: Option<&[TextMask]>,
    info: &DocumentInfo,
    refs: &ReferenceWidthTable,
    params: &SegmentationParams,
) -> Result<(Vec<PageImage>, DocumentReport)> {
    if doc.is_empty() {
        return Err(SegmentationError::InvalidInput(format!("document {} has no pages", info.doc_id)));
    }
    if let Some(m) = masks {
        if m.len() != doc.len() {
            return Err(SegmentationError::InvalidInput(format!(
                "{} masks for {} pages",
                m.len(),
                doc.len()
            )));
        }
    }
    let reference = refs.median_width(info.year)?;
    let peaks = params.peak_params(reference);
    let masks: Vec<TextMask> = match masks {
        Some(m) => m.to_vec(),
        None => doc.iter().map(|p| binarize_text_mask(p, &params.mask)).collect(),
    };

    let mut phase1 = Vec::with_capacity(doc.len());
    for (page, mask) in doc.iter().zip(&masks) {
        phase1.push(segment_phase1(page, mask, &peaks, params));
    }
    let widths: Vec<u32> = doc
        .iter()
        .zip(&phase1)
        .flat_map(|(p, s)| s.slice_widths(p.width))
        .collect();
    let post = select_candidates(&widths, refs, info.year)?;

    let mut subpages = Vec::new();
    let mut separators = Vec::with_capacity(doc.len());
    for ((page, mask), seps) in doc.iter().zip(&masks).zip(&phase1) {
        let (pages, _) = if post {
            let filtered = filter_separators(seps, page.width, refs, info.year)?;
            let pages = split_page(page, &filtered)?;
            let ms = split_mask(mask, &filtered)?;
            normalize_pages(pages, ms, refs, info.year, &params.normalize)?
        } else {
            (split_page(page, seps)?, Vec::new())
        };
        separators.push(
            pages
                .iter()
                .skip(1)
                .filter_map(|p| p.origin.as_ref().map(|o| o.x_offset))
                .collect(),
        );
        subpages.extend(pages.into_iter().map(|mut p| {
            if p.origin.is_none() {
                p.origin = Some(SliceOrigin {
                    parent_page: p.page_index,
                    slice: 0,
                    x_offset: 0,
                });
            }
            p
        }));
    }
    // slice numbers are per parent page after normalisation
    let mut counters: BTreeMap<usize, usize> = BTreeMap::new();
    for p in subpages.iter_mut() {
        let o = p.origin.as_mut().expect("set above");
        let c = counters.entry(o.parent_page).or_default();
        o.slice = *c;
        *c += 1;
    }

    let mut warnings = Vec::new();
    if info.born_digital {
        let (reordered, warning) = reorder_born_digital(subpages);
        subpages = reordered;
        warnings.extend(warning);
    }
    for (i, p) in subpages.iter_mut().enumerate() {
        p.page_index = i;
    }
    let report = DocumentReport {
        doc_id: info.doc_id.clone(),
        year: info.year,
        born_digital: info.born_digital,
        pages_in: doc.len(),
        subpages_out: subpages.len(),
        phase: if post { Phase::PostApplied } else { Phase::PreOnly },
        separators,
        warnings,
    };
    Ok((subpages, report))
}

/// Corpus-level view over per-document reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub documents: Vec<DocumentReport>,
}

impl SegmentationReport {
    pub fn flagged_for_post(&self) -> usize {
        self.documents
            .iter()
            .filter(|d| d.phase == Phase::PostApplied)
            .count()
    }

    /// One JSON object per document.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.documents {
            out.push_str(&serde_json::to_string(d).expect("report serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> serde_json::Result<Self> {
        let documents = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<serde_json::Result<_>>()?;
        Ok(Self { documents })
    }

    /// Markdown summary. Correct/incorrect columns are left for reviewers.
    pub fn to_markdown(&self) -> String {
        let rows = [
            ("All", None),
            ("Born-digital documents", Some(true)),
            ("Digitised documents", Some(false)),
        ];
        let mut out = String::from("# Segmentation summary\n\n");
        out.push_str("| Corpus | Correct % | Correct #page | Incorrect % | Incorrect #page | Total |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for (label, filter) in rows {
            let total: usize = self
                .documents
                .iter()
                .filter(|d| filter.is_none_or(|b| d.born_digital == b))
                .map(|d| d.subpages_out)
                .sum();
            let _ = writeln!(out, "| {label} |  |  |  |  | {total} |");
        }
        let docs = self.documents.len();
        let post = self.flagged_for_post();
        out.push_str("\n| Phase | Documents |\n|---|---|\n");
        let _ = writeln!(out, "| Pre-segmentation only | {} |", docs - post);
        let _ = writeln!(out, "| Post-segmentation applied | {post} |");
        let _ = writeln!(out, "| Total | {docs} |");
        out.push_str("\n| Document | Year | Pages in | Subpages out | Phase |\n|---|---|---|---|---|\n");
        for d in &self.documents {
            let phase = match d.phase {
                Phase::PreOnly => "pre-only",
                Phase::PostApplied => "post-applied",
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                d.doc_id, d.year, d.pages_in, d.subpages_out, phase
            );
        }
        out
    }
}
