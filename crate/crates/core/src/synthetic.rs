//! Deterministic synthetic programme pages with known subpage geometry.
//!
//! Used by the test suites and the runnable examples; every generator takes
//! an explicit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::PageImage;

/// Layout of one printed subpage inside a physical page.
#[derive(Debug, Clone, PartialEq)]
pub struct SubpageLayout {
    pub width: u32,
    /// Text columns as `[x0, x1)` ranges relative to the subpage.
    pub columns: Vec<(u32, u32)>,
}

impl SubpageLayout {
    /// A single text block with the given side margins.
    pub fn single(width: u32, left: u32, right: u32) -> Self {
        Self {
            width,
            columns: vec![(left, width - right)],
        }
    }

    /// A subpage that carries no text at all.
    pub fn blank(width: u32) -> Self {
        Self {
            width,
            columns: Vec::new(),
        }
    }

    fn text_extent(&self) -> Option<(u32, u32)> {
        let x0 = self.columns.iter().map(|c| c.0).min()?;
        let x1 = self.columns.iter().map(|c| c.1).max()?;
        Some((x0, x1))
    }
}

/// A generated page together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticPage {
    pub page: PageImage,
    /// True subpage boundaries (x positions between subpages).
    pub boundaries: Vec<u32>,
    /// For each boundary, the blank band `[x0, x1)` a separator may fall in.
    pub gap_bands: Vec<(u32, u32)>,
}

/// Paint text-like lines into the given column range.
fn paint_column(page: &mut PageImage, x0: u32, x1: u32, top: u32, bottom: u32, rng: &mut ChaCha8Rng) {
    let line_height = 14;
    let pitch = 30;
    let mut y = top;
    while y + line_height < bottom {
        // ragged right edge like real paragraphs
        let end = if rng.random_bool(0.2) {
            x0 + (x1 - x0) * rng.random_range(40..90) / 100
        } else {
            x1
        };
        let mut x = x0;
        while x < end {
            let word = rng.random_range(18..70).min(end - x);
            let ink: u8 = rng.random_range(10..60);
            for yy in y..y + line_height {
                for xx in x..x + word {
                    page.set(xx, yy, ink.saturating_add(rng.random_range(0..20)));
                }
            }
            x += word + rng.random_range(8..16);
        }
        y += pitch;
    }
}

/// Render a page made of `layouts` placed side by side.
pub fn programme_page(doc_id: &str, page_index: usize, height: u32, layouts: &[SubpageLayout], seed: u64) -> SyntheticPage {
    let width: u32 = layouts.iter().map(|l| l.width).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut page = PageImage::filled(doc_id, page_index, width, height, 255);
    for px in page.pixels.iter_mut() {
        *px = 255 - rng.random_range(0..18);
    }
    let top = height / 12;
    let bottom = height - height / 12;
    let mut offset = 0;
    let mut boundaries = Vec::new();
    let mut gap_bands = Vec::new();
    for (i, layout) in layouts.iter().enumerate() {
        for &(c0, c1) in &layout.columns {
            paint_column(&mut page, offset + c0, offset + c1, top, bottom, &mut rng);
        }
        if i + 1 < layouts.len() {
            let boundary = offset + layout.width;
            let left_end = layout.text_extent().map_or(offset, |(_, e)| offset + e);
            let next = &layouts[i + 1];
            let right_start = next.text_extent().map_or(boundary + next.width, |(s, _)| boundary + s);
            boundaries.push(boundary);
            gap_bands.push((left_end, right_start));
        }
        offset += layout.width;
    }
    SyntheticPage {
        page,
        boundaries,
        gap_bands,
    }
}

/// `n` identical single-block subpages of width `sub_width`, with margins
/// jittered by the seed.
pub fn uniform_spread(doc_id: &str, page_index: usize, n: usize, sub_width: u32, height: u32, seed: u64) -> SyntheticPage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let layouts: Vec<SubpageLayout> = (0..n)
        .map(|_| {
            let left = rng.random_range(sub_width / 12..sub_width / 8);
            let right = rng.random_range(sub_width / 12..sub_width / 8);
            SubpageLayout::single(sub_width, left, right)
        })
        .collect();
    programme_page(doc_id, page_index, height, &layouts, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_is_consistent() {
        let s = uniform_spread("d", 0, 3, 400, 300, 7);
        assert_eq!(s.page.width, 1200);
        assert_eq!(s.boundaries, [400, 800]);
        for (b, (x0, x1)) in s.boundaries.iter().zip(&s.gap_bands) {
            assert!(x0 < b && b < x1);
        }
    }

    #[test]
    fn deterministic() {
        let a = uniform_spread("d", 0, 2, 300, 200, 3);
        let b = uniform_spread("d", 0, 2, 300, 200, 3);
        assert_eq!(a.page, b.page);
    }
}
