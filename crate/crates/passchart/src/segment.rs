//! HSV color segmentation: one binary mask per pass outcome.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PassOutcome;
use crate::raster::{PixelMask, RasterImage};

/// Hue in degrees `[0, 360)`, saturation and value in percent `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Convert an RGB pixel to HSV (hexcone model).
pub fn rgb_to_hsv(rgb: [u8; 3]) -> Hsv {
    let r = rgb[0] as f64 / 255.0;
    let g = rgb[1] as f64 / 255.0;
    let b = rgb[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max * 100.0 };
    Hsv {
        h: h.rem_euclid(360.0),
        s,
        v: max * 100.0,
    }
}

/// An inclusive HSV range. Hue wraps at 360 when `lower.h > upper.h`,
/// so a red band can be written as e.g. 340..20.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsvThreshold {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl HsvThreshold {
    pub fn contains(&self, hsv: Hsv) -> bool {
        let hue_ok = if self.lower[0] <= self.upper[0] {
            hsv.h >= self.lower[0] && hsv.h <= self.upper[0]
        } else {
            hsv.h >= self.lower[0] || hsv.h <= self.upper[0]
        };
        hue_ok
            && hsv.s >= self.lower[1]
            && hsv.s <= self.upper[1]
            && hsv.v >= self.lower[2]
            && hsv.v <= self.upper[2]
    }

    fn validate(&self, name: &str) -> Result<(), PaletteError> {
        for i in 1..3 {
            if self.lower[i] > self.upper[i] {
                return Err(PaletteError::Invalid(format!(
                    "{name}: lower S/V exceeds upper"
                )));
            }
        }
        let ok = |v: f64, hi: f64| (0.0..=hi).contains(&v);
        let in_range = self.lower.iter().chain(self.upper.iter()).enumerate().all(
            |(i, &v)| {
                if i % 3 == 0 {
                    ok(v, 360.0)
                } else {
                    ok(v, 100.0)
                }
            },
        );
        if !in_range {
            return Err(PaletteError::Invalid(format!(
                "{name}: H must be in [0,360], S/V in [0,100]"
            )));
        }
        Ok(())
    }
}

/// Keep pixels whose HSV lies inside the threshold.
pub fn threshold(img: &RasterImage, t: &HsvThreshold) -> PixelMask {
    let mut mask = PixelMask::new(img.width(), img.height());
    for (x, y, rgb) in img.pixels() {
        if t.contains(rgb_to_hsv(rgb)) {
            mask.set(x, y, true);
        }
    }
    mask
}

/// Colors of the non-marker chart features. Shared with the synthetic
/// renderer so segmentation tests are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldColors {
    pub background: [u8; 3],
    pub turf: [u8; 3],
    pub sideline: [u8; 3],
    pub yard_line: [u8; 3],
    /// Line of scrimmage and touchdown trajectories; deliberately inside
    /// the touchdown threshold, like the real charts.
    pub scrimmage: [u8; 3],
    pub glyph: [u8; 3],
}

/// The full color configuration: per-outcome thresholds, the marker
/// paint colors, the chart feature colors, and the marker radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub marker_radius_px: f64,
    pub complete: HsvThreshold,
    pub incomplete: HsvThreshold,
    pub touchdown: HsvThreshold,
    pub interception: HsvThreshold,
    pub marker_complete: [u8; 3],
    pub marker_incomplete: [u8; 3],
    pub marker_touchdown: [u8; 3],
    pub marker_interception: [u8; 3],
    pub field: FieldColors,
}

#[derive(Debug, Error)]
pub enum PaletteError {
    #[error("failed to read palette: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse palette: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid palette: {0}")]
    Invalid(String),
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            marker_radius_px: 7.0,
            // Green band with moderate-to-high saturation and value.
            complete: HsvThreshold {
                lower: [80.0, 39.0, 39.0],
                upper: [160.0, 100.0, 100.0],
            },
            // Near-white: any hue, low saturation, high value.
            incomplete: HsvThreshold {
                lower: [0.0, 0.0, 88.0],
                upper: [360.0, 12.0, 100.0],
            },
            touchdown: HsvThreshold {
                lower: [220.0, 40.0, 40.0],
                upper: [260.0, 100.0, 100.0],
            },
            interception: HsvThreshold {
                lower: [0.0, 60.0, 60.0],
                upper: [20.0, 100.0, 100.0],
            },
            marker_complete: [0, 200, 60],
            marker_incomplete: [255, 255, 255],
            marker_touchdown: [30, 80, 230],
            marker_interception: [230, 60, 30],
            field: FieldColors {
                background: [8, 8, 10],
                turf: [40, 45, 40],
                sideline: [120, 120, 120],
                yard_line: [70, 76, 70],
                scrimmage: [70, 110, 220],
                glyph: [255, 255, 255],
            },
        }
    }
}

impl Palette {
    pub fn threshold_for(&self, outcome: PassOutcome) -> &HsvThreshold {
        match outcome {
            PassOutcome::Complete => &self.complete,
            PassOutcome::Incomplete => &self.incomplete,
            PassOutcome::Touchdown => &self.touchdown,
            PassOutcome::Interception => &self.interception,
        }
    }

    pub fn marker_color(&self, outcome: PassOutcome) -> [u8; 3] {
        match outcome {
            PassOutcome::Complete => self.marker_complete,
            PassOutcome::Incomplete => self.marker_incomplete,
            PassOutcome::Touchdown => self.marker_touchdown,
            PassOutcome::Interception => self.marker_interception,
        }
    }

    pub fn load(path: &Path) -> Result<Self, PaletteError> {
        let text = std::fs::read_to_string(path)?;
        let palette: Palette = serde_json::from_str(&text)?;
        palette.validate()?;
        Ok(palette)
    }

    pub fn validate(&self) -> Result<(), PaletteError> {
        if self.marker_radius_px <= 0.0 {
            return Err(PaletteError::Invalid("marker radius must be > 0".into()));
        }
        self.complete.validate("complete")?;
        self.incomplete.validate("incomplete")?;
        self.touchdown.validate("touchdown")?;
        self.interception.validate("interception")?;
        for outcome in PassOutcome::ALL {
            let hsv = rgb_to_hsv(self.marker_color(outcome));
            if !self.threshold_for(outcome).contains(hsv) {
                return Err(PaletteError::Invalid(format!(
                    "{} marker color falls outside its own threshold",
                    outcome.label()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pure_red_is_reference_hue() {
        let hsv = rgb_to_hsv([255, 0, 0]);
        assert_eq!((hsv.h, hsv.s, hsv.v), (0.0, 100.0, 100.0));
    }

    #[test]
    fn black_is_zero() {
        let hsv = rgb_to_hsv([0, 0, 0]);
        assert_eq!((hsv.h, hsv.s, hsv.v), (0.0, 0.0, 0.0));
    }

    #[test]
    fn grey_has_no_saturation() {
        let hsv = rgb_to_hsv([128, 128, 128]);
        assert_eq!(hsv.h, 0.0);
        assert_eq!(hsv.s, 0.0);
        assert!((hsv.v - 50.2).abs() < 0.1);
    }

    #[test]
    fn threshold_on_black_image_with_positive_value_floor_is_empty() {
        let img = RasterImage::new(16, 16);
        let t = HsvThreshold {
            lower: [0.0, 0.0, 10.0],
            upper: [360.0, 100.0, 100.0],
        };
        assert_eq!(threshold(&img, &t).count(), 0);
    }

    #[test]
    fn hue_wraps_across_zero() {
        let t = HsvThreshold {
            lower: [340.0, 50.0, 50.0],
            upper: [20.0, 100.0, 100.0],
        };
        assert!(t.contains(rgb_to_hsv([255, 0, 0]))); // h = 0
        assert!(t.contains(Hsv { h: 350.0, s: 80.0, v: 80.0 }));
        assert!(t.contains(Hsv { h: 10.0, s: 80.0, v: 80.0 }));
        assert!(!t.contains(Hsv { h: 180.0, s: 80.0, v: 80.0 }));
    }

    #[test]
    fn default_palette_is_valid_and_markers_disjoint() {
        let p = Palette::default();
        p.validate().unwrap();
        // Each marker color matches exactly one outcome threshold.
        for outcome in PassOutcome::ALL {
            let hsv = rgb_to_hsv(p.marker_color(outcome));
            let hits: Vec<_> = PassOutcome::ALL
                .iter()
                .filter(|o| p.threshold_for(**o).contains(hsv))
                .collect();
            assert_eq!(hits.len(), 1, "{:?} matched {:?}", outcome, hits);
        }
        // Feature colors must not leak into marker masks, except the
        // scrimmage color which is intentionally touchdown-colored.
        for rgb in [p.field.background, p.field.turf, p.field.sideline, p.field.yard_line] {
            let hsv = rgb_to_hsv(rgb);
            for outcome in PassOutcome::ALL {
                assert!(!p.threshold_for(outcome).contains(hsv));
            }
        }
        let scrim = rgb_to_hsv(p.field.scrimmage);
        assert!(p.touchdown.contains(scrim));
        assert!(!p.complete.contains(scrim));
        assert!(!p.incomplete.contains(scrim));
        assert!(!p.interception.contains(scrim));
    }

    #[test]
    fn palette_json_round_trip() {
        let p = Palette::default();
        let json = serde_json::to_string_pretty(&p).unwrap();
        let back: Palette = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }

    proptest! {
        // Widening a threshold never clears a set bit.
        #[test]
        fn threshold_is_monotone(
            r in 0u8..=255, g in 0u8..=255, b in 0u8..=255,
            h_lo in 0.0f64..180.0, h_hi in 180.0f64..360.0,
            s_lo in 0.0f64..50.0, s_hi in 50.0f64..100.0,
            v_lo in 0.0f64..50.0, v_hi in 50.0f64..100.0,
            widen in 0.0f64..30.0,
        ) {
            let t = HsvThreshold { lower: [h_lo, s_lo, v_lo], upper: [h_hi, s_hi, v_hi] };
            let wider = HsvThreshold {
                lower: [(h_lo - widen).max(0.0), (s_lo - widen).max(0.0), (v_lo - widen).max(0.0)],
                upper: [(h_hi + widen).min(360.0), (s_hi + widen).min(100.0), (v_hi + widen).min(100.0)],
            };
            let hsv = rgb_to_hsv([r, g, b]);
            if t.contains(hsv) {
                prop_assert!(wider.contains(hsv));
            }
        }

        // Conversion stays in range for all inputs.
        #[test]
        fn hsv_ranges(r in 0u8..=255, g in 0u8..=255, b in 0u8..=255) {
            let hsv = rgb_to_hsv([r, g, b]);
            prop_assert!((0.0..360.0).contains(&hsv.h));
            prop_assert!((0.0..=100.0).contains(&hsv.s));
            prop_assert!((0.0..=100.0).contains(&hsv.v));
        }
    }
}
