//! Perspective rectification: map the trapezoidal field projection to a
//! rectangular bird's-eye view, and scrub the white sideline numbers.

use nalgebra::{Matrix3, OMatrix, OVector, U8};
use thiserror::Error;

use crate::model::FIELD_WIDTH_YARDS;
use crate::raster::RasterImage;
use crate::segment::rgb_to_hsv;

#[derive(Debug, Error, PartialEq)]
pub enum RectifyError {
    #[error("no plausible field quadrilateral detected")]
    FieldNotFound,
    #[error("degenerate quadrilateral: {0}")]
    DegenerateQuad(String),
}

/// A 3x3 projective transform with the bottom-right element fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub h: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            h: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Apply to a point, performing the perspective divide.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let w = self.h[2][0] * p[0] + self.h[2][1] * p[1] + self.h[2][2];
        [
            (self.h[0][0] * p[0] + self.h[0][1] * p[1] + self.h[0][2]) / w,
            (self.h[1][0] * p[0] + self.h[1][1] * p[1] + self.h[1][2]) / w,
        ]
    }

    pub fn try_inverse(&self) -> Option<Homography> {
        let m = Matrix3::from_fn(|r, c| self.h[r][c]);
        let inv = m.try_inverse()?;
        let norm = inv[(2, 2)];
        if norm.abs() < 1e-12 {
            return None;
        }
        let mut h = [[0.0; 3]; 3];
        for (r, row) in h.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = inv[(r, c)] / norm;
            }
        }
        Some(Homography { h })
    }

    pub fn determinant(&self) -> f64 {
        Matrix3::from_fn(|r, c| self.h[r][c]).determinant()
    }
}

/// Pixel-space corners of the field trapezoid, in order top-left,
/// top-right, bottom-right, bottom-left, plus the chart depth
/// (10 yards behind the line of scrimmage + 55 or 75 beyond).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldQuad {
    pub corners: [[f64; 2]; 4],
    pub depth_yards: u32,
}

impl FieldQuad {
    pub fn top_left(&self) -> [f64; 2] {
        self.corners[0]
    }
    pub fn top_right(&self) -> [f64; 2] {
        self.corners[1]
    }
    pub fn bottom_right(&self) -> [f64; 2] {
        self.corners[2]
    }
    pub fn bottom_left(&self) -> [f64; 2] {
        self.corners[3]
    }

    fn edge_len(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    pub fn top_width(&self) -> f64 {
        Self::edge_len(self.top_left(), self.top_right())
    }

    pub fn bottom_width(&self) -> f64 {
        Self::edge_len(self.bottom_left(), self.bottom_right())
    }

    pub fn mean_height(&self) -> f64 {
        (Self::edge_len(self.top_left(), self.bottom_left())
            + Self::edge_len(self.top_right(), self.bottom_right()))
            / 2.0
    }

    /// Rectified target size at the quad's own scale: width from the mean
    /// trapezoid width, height from the field aspect for this depth.
    pub fn rect_size(&self) -> (u32, u32) {
        let w = ((self.top_width() + self.bottom_width()) / 2.0).round().max(8.0);
        let h = (w * self.depth_yards as f64 / FIELD_WIDTH_YARDS).round().max(8.0);
        (w as u32, h as u32)
    }
}

/// Pixel classification thresholds for locating the field region.
#[derive(Debug, Clone, Copy)]
pub struct FieldDetectParams {
    /// HSV value range (percent) for field-family pixels.
    pub value_range: (f64, f64),
    /// Maximum saturation (percent) for field-family pixels.
    pub sat_max: f64,
    /// Minimum fraction of the image the field component must cover.
    pub min_area_fraction: f64,
}

impl Default for FieldDetectParams {
    fn default() -> Self {
        Self {
            value_range: (5.0, 75.0),
            sat_max: 70.0,
            min_area_fraction: 0.05,
        }
    }
}

/// Aspect-ratio midpoint between a 65-yard and an 85-yard chart.
fn depth_from_aspect(aspect: f64) -> u32 {
    let midpoint = (65.0 / FIELD_WIDTH_YARDS + 85.0 / FIELD_WIDTH_YARDS) / 2.0;
    if aspect < midpoint {
        65
    } else {
        85
    }
}

/// Locate the field trapezoid: threshold to field-family colors
/// (dark, low-saturation), take the largest connected component, and
/// pick its four extreme hull points as corners. The chart depth is
/// inferred from the quad's aspect ratio.
pub fn detect_field_quad(
    img: &RasterImage,
    params: &FieldDetectParams,
) -> Result<FieldQuad, RectifyError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(RectifyError::FieldNotFound);
    }
    let mut mask = vec![false; w * h];
    for (x, y, rgb) in img.pixels() {
        let hsv = rgb_to_hsv(rgb);
        if hsv.v >= params.value_range.0 && hsv.v <= params.value_range.1 && hsv.s <= params.sat_max
        {
            mask[y as usize * w + x as usize] = true;
        }
    }

    // Largest 4-connected component, BFS with a visited overlay.
    let mut visited = vec![false; w * h];
    let mut best: Vec<usize> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for start in 0..w * h {
        if !mask[start] || visited[start] {
            continue;
        }
        let mut component = Vec::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            component.push(i);
            let (x, y) = (i % w, i / w);
            let mut push = |j: usize| {
                if mask[j] && !visited[j] {
                    visited[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < w {
                push(i + 1);
            }
            if y > 0 {
                push(i - w);
            }
            if y + 1 < h {
                push(i + w);
            }
        }
        if component.len() > best.len() {
            best = component;
        }
    }

    if (best.len() as f64) < params.min_area_fraction * (w * h) as f64 {
        return Err(RectifyError::FieldNotFound);
    }

    // Extreme points along the two diagonals are hull vertices; for an
    // axis-aligned trapezoid they are exactly its corners.
    let mut tl = (f64::INFINITY, [0.0, 0.0]);
    let mut br = (f64::NEG_INFINITY, [0.0, 0.0]);
    let mut tr = (f64::NEG_INFINITY, [0.0, 0.0]);
    let mut bl = (f64::INFINITY, [0.0, 0.0]);
    for &i in &best {
        let (x, y) = ((i % w) as f64, (i / w) as f64);
        if x + y < tl.0 {
            tl = (x + y, [x, y]);
        }
        if x + y > br.0 {
            br = (x + y, [x, y]);
        }
        if x - y > tr.0 {
            tr = (x - y, [x, y]);
        }
        if x - y < bl.0 {
            bl = (x - y, [x, y]);
        }
    }
    let corners = [tl.1, tr.1, br.1, bl.1];

    // Reject concave or inverted quads.
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    for i in 0..4 {
        let c = cross(corners[i], corners[(i + 1) % 4], corners[(i + 2) % 4]);
        if c <= 0.0 {
            return Err(RectifyError::FieldNotFound);
        }
    }
    let top = FieldQuad::edge_len(corners[0], corners[1]);
    let bottom = FieldQuad::edge_len(corners[3], corners[2]);
    if top > bottom * 1.02 {
        return Err(RectifyError::FieldNotFound);
    }

    let mean_width = (top + bottom) / 2.0;
    let mean_height = (FieldQuad::edge_len(corners[0], corners[3])
        + FieldQuad::edge_len(corners[1], corners[2]))
        / 2.0;
    let depth_yards = depth_from_aspect(mean_height / mean_width);
    Ok(FieldQuad {
        corners,
        depth_yards,
    })
}

/// Solve the projective transform mapping four source points to four
/// destination points, by direct linear transform: the four
/// correspondences give eight equations in the eight unknown matrix
/// entries (the ninth is fixed at 1).
pub fn solve_homography_points(
    src: &[[f64; 2]; 4],
    dst: &[[f64; 2]; 4],
) -> Result<Homography, RectifyError> {
    check_non_collinear(src)?;
    check_non_collinear(dst)?;

    let mut a = OMatrix::<f64, U8, U8>::zeros();
    let mut b = OVector::<f64, U8>::zeros();
    for (k, (s, d)) in src.iter().zip(dst.iter()).enumerate() {
        let (x, y) = (s[0], s[1]);
        let (u, v) = (d[0], d[1]);
        let r = 2 * k;
        a[(r, 0)] = x;
        a[(r, 1)] = y;
        a[(r, 2)] = 1.0;
        a[(r, 6)] = -u * x;
        a[(r, 7)] = -u * y;
        b[r] = u;
        a[(r + 1, 3)] = x;
        a[(r + 1, 4)] = y;
        a[(r + 1, 5)] = 1.0;
        a[(r + 1, 6)] = -v * x;
        a[(r + 1, 7)] = -v * y;
        b[r + 1] = v;
    }
    let lu = a.lu();
    let sol = lu
        .solve(&b)
        .ok_or_else(|| RectifyError::DegenerateQuad("singular correspondence system".into()))?;
    let h = Homography {
        h: [
            [sol[0], sol[1], sol[2]],
            [sol[3], sol[4], sol[5]],
            [sol[6], sol[7], 1.0],
        ],
    };
    if h.determinant().abs() < 1e-12 {
        return Err(RectifyError::DegenerateQuad("non-invertible transform".into()));
    }
    Ok(h)
}

/// Solve the homography from a field quad to an upright rectangle of the
/// given pixel size.
pub fn solve_homography(src: &FieldQuad, dst_size: (u32, u32)) -> Result<Homography, RectifyError> {
    let (w, h) = (dst_size.0 as f64, dst_size.1 as f64);
    let dst = [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]];
    solve_homography_points(&src.corners, &dst)
}

fn check_non_collinear(pts: &[[f64; 2]; 4]) -> Result<(), RectifyError> {
    let mut diag: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            let d = FieldQuad::edge_len(pts[i], pts[j]);
            diag = diag.max(d);
        }
    }
    if diag == 0.0 {
        return Err(RectifyError::DegenerateQuad("coincident corners".into()));
    }
    for i in 0..4 {
        for j in i + 1..4 {
            for k in j + 1..4 {
                let twice_area = ((pts[j][0] - pts[i][0]) * (pts[k][1] - pts[i][1])
                    - (pts[j][1] - pts[i][1]) * (pts[k][0] - pts[i][0]))
                    .abs();
                if twice_area < 1e-8 * diag * diag {
                    return Err(RectifyError::DegenerateQuad(format!(
                        "corners {i}, {j}, {k} are collinear"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Warp an image through a homography. `h` maps input coordinates to
/// output coordinates; each output pixel is sampled from the input at
/// the inverse-mapped position with nearest-neighbor sampling, black
/// where the source falls outside the input.
pub fn warp(img: &RasterImage, h: &Homography, out_size: (u32, u32)) -> RasterImage {
    let inv = match h.try_inverse() {
        Some(inv) => inv,
        None => return RasterImage::new(out_size.0, out_size.1),
    };
    let mut out = RasterImage::new(out_size.0, out_size.1);
    let (w, ht) = (img.width() as i64, img.height() as i64);
    for v in 0..out_size.1 {
        for u in 0..out_size.0 {
            let src = inv.apply([u as f64, v as f64]);
            let sx = src[0].round() as i64;
            let sy = src[1].round() as i64;
            if sx >= 0 && sx < w && sy >= 0 && sy < ht {
                out.set(u, v, img.get(sx as u32, sy as u32));
            }
        }
    }
    out
}

/// Downfield positions (yards past the line of scrimmage) of the
/// sideline number bands: six markings on a 55-yard chart, eight on a
/// 75-yard chart.
pub fn sideline_band_positions(depth_yards: u32) -> Vec<f64> {
    let n = if depth_yards >= 85 { 8 } else { 6 };
    (0..n).map(|i| (i * 10) as f64).collect()
}

/// Pixel extents of the sideline number bands on a rectified image:
/// `(row_lo, row_hi, left_cols, right_cols)` per band.
pub struct SidelineBands {
    pub rows: Vec<(u32, u32)>,
    pub left_cols: (u32, u32),
    pub right_cols: (u32, u32),
}

pub fn sideline_bands(width: u32, height: u32, depth_yards: u32) -> SidelineBands {
    let depth = depth_yards as f64;
    let band_half_yards = 1.5;
    let strip_yards = 3.5;
    let rows = sideline_band_positions(depth_yards)
        .into_iter()
        .map(|x| {
            let center = (1.0 - (x + 10.0) / depth) * height as f64;
            let half = band_half_yards / depth * height as f64;
            let lo = (center - half).floor().max(0.0) as u32;
            let hi = ((center + half).ceil() as u32).min(height.saturating_sub(1));
            (lo, hi)
        })
        .collect();
    let strip = (strip_yards / FIELD_WIDTH_YARDS * width as f64).ceil() as u32;
    SidelineBands {
        rows,
        left_cols: (0, strip.min(width.saturating_sub(1))),
        right_cols: (width.saturating_sub(strip + 1), width.saturating_sub(1)),
    }
}

fn is_whiteish(rgb: [u8; 3]) -> bool {
    let hsv = rgb_to_hsv(rgb);
    hsv.s <= 20.0 && hsv.v >= 80.0
}

/// Replace white pixels inside the sideline number bands with the
/// sideline grey, so the incompletion threshold only sees pass markers.
/// The replacement shade is sampled per band as the most common
/// non-white color; pixels outside the bands are never touched.
pub fn scrub_sideline_numbers(img: &RasterImage, depth_yards: u32) -> RasterImage {
    let mut out = img.clone();
    let bands = sideline_bands(img.width(), img.height(), depth_yards);
    for &(row_lo, row_hi) in &bands.rows {
        for &(col_lo, col_hi) in &[bands.left_cols, bands.right_cols] {
            // Most common non-white color in the band.
            let mut counts: std::collections::HashMap<[u8; 3], u32> =
                std::collections::HashMap::new();
            for y in row_lo..=row_hi {
                for x in col_lo..=col_hi {
                    let px = img.get(x, y);
                    if !is_whiteish(px) {
                        *counts.entry(px).or_insert(0) += 1;
                    }
                }
            }
            let replacement = counts
                .into_iter()
                .max_by_key(|&(rgb, n)| (n, rgb))
                .map(|(rgb, _)| rgb)
                .unwrap_or([120, 120, 120]);
            for y in row_lo..=row_hi {
                for x in col_lo..=col_hi {
                    if is_whiteish(out.get(x, y)) {
                        out.set(x, y, replacement);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT_SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn identity_from_matching_quads() {
        let h = solve_homography_points(&UNIT_SQUARE, &UNIT_SQUARE).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((h.h[r][c] - expect).abs() < 1e-9, "h[{r}][{c}] = {}", h.h[r][c]);
            }
        }
    }

    #[test]
    fn pure_scale() {
        let dst = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let h = solve_homography_points(&UNIT_SQUARE, &dst).unwrap();
        assert!((h.h[0][0] - 2.0).abs() < 1e-9);
        assert!((h.h[1][1] - 2.0).abs() < 1e-9);
        assert!((h.h[2][2] - 1.0).abs() < 1e-12);
        assert!(h.h[0][1].abs() < 1e-9 && h.h[1][0].abs() < 1e-9);
        assert!(h.h[2][0].abs() < 1e-9 && h.h[2][1].abs() < 1e-9);
    }

    #[test]
    fn corners_map_exactly() {
        let src = [[100.0, 0.0], [1100.0, 0.0], [1200.0, 1200.0], [0.0, 1200.0]];
        let dst = [[0.0, 0.0], [1200.0, 0.0], [1200.0, 1200.0], [0.0, 1200.0]];
        let h = solve_homography_points(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(dst.iter()) {
            let m = h.apply(*s);
            assert!((m[0] - d[0]).abs() < 0.1 && (m[1] - d[1]).abs() < 0.1);
        }
    }

    #[test]
    fn collinear_corners_rejected() {
        let src = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            solve_homography_points(&src, &UNIT_SQUARE),
            Err(RectifyError::DegenerateQuad(_))
        ));
    }

    #[test]
    fn inverse_round_trips_interior_points() {
        let src = [[100.0, 0.0], [1100.0, 0.0], [1200.0, 1200.0], [0.0, 1200.0]];
        let dst = [[0.0, 0.0], [1200.0, 0.0], [1200.0, 1200.0], [0.0, 1200.0]];
        let h = solve_homography_points(&src, &dst).unwrap();
        let inv = h.try_inverse().unwrap();
        for &p in &[[300.0, 200.0], [600.0, 600.0], [900.0, 1100.0]] {
            let back = inv.apply(h.apply(p));
            assert!((back[0] - p[0]).abs() < 1e-6 && (back[1] - p[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn warp_with_identity_is_a_crop() {
        let mut img = RasterImage::new(10, 10);
        img.set(3, 4, [10, 200, 30]);
        img.set(7, 2, [99, 98, 97]);
        let out = warp(&img, &Homography::identity(), (10, 10));
        assert_eq!(out, img);
        // Cropping to a smaller window keeps the in-window content.
        let cropped = warp(&img, &Homography::identity(), (5, 5));
        assert_eq!(cropped.get(3, 4), [10, 200, 30]);
    }

    #[test]
    fn warp_outside_source_is_black() {
        let img = RasterImage::filled(4, 4, [50, 50, 50]);
        // Shift output window past the source extent.
        let h = Homography {
            h: [[1.0, 0.0, 100.0], [0.0, 1.0, 100.0], [0.0, 0.0, 1.0]],
        };
        let out = warp(&img, &h, (4, 4));
        assert_eq!(out.get(0, 0), [0, 0, 0]);
        assert_eq!(out.get(3, 3), [0, 0, 0]);
    }

    #[test]
    fn all_black_image_has_no_field() {
        let img = RasterImage::new(64, 64);
        assert_eq!(
            detect_field_quad(&img, &FieldDetectParams::default()),
            Err(RectifyError::FieldNotFound)
        );
    }

    #[test]
    fn band_count_by_depth() {
        assert_eq!(sideline_band_positions(65).len(), 6);
        assert_eq!(sideline_band_positions(85).len(), 8);
    }

    #[test]
    fn scrub_leaves_clean_image_unchanged() {
        let img = RasterImage::filled(100, 130, [40, 45, 40]);
        assert_eq!(scrub_sideline_numbers(&img, 65), img);
    }

    #[test]
    fn scrub_only_touches_band_pixels() {
        let mut img = RasterImage::filled(100, 130, [40, 45, 40]);
        // White marker in midfield, outside the sideline strips.
        for y in 60..66 {
            for x in 47..53 {
                img.set(x, y, [255, 255, 255]);
            }
        }
        // White glyph inside the scrimmage-row left band.
        let bands = sideline_bands(100, 130, 65);
        let (lo, hi) = bands.rows[0];
        let row = (lo + hi) / 2;
        img.set(2, row, [255, 255, 255]);
        let out = scrub_sideline_numbers(&img, 65);
        assert_eq!(out.get(50, 62), [255, 255, 255], "midfield marker preserved");
        assert_ne!(out.get(2, row), [255, 255, 255], "glyph scrubbed");
    }
}
