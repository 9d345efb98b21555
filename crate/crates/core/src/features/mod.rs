//! The five per-frame scores: brightness `B`, contrast `C`, edge density `E`,
//! HSV histogram correlation `H` and Hu-moment shape similarity `S`.
//!
//! `B`, `C` and `E` depend only on the frame. `H` and `S` compare the frame
//! against a [`ReferenceProfile`] precomputed once from the reference frame.

mod canny;
mod histogram;
mod hu;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{EdgeMap, Raster};

pub use canny::{canny, gaussian_blur, gaussian_taps};
pub use histogram::{hist_correlation, hsv_histogram, HsHistogram};
pub use hu::{hu_moments, shape_similarity_from, HuMoments};

/// Largest L2 magnitude bound used to validate Canny thresholds (3x3 Sobel).
pub const MAX_SOBEL_BOUND: f64 = 255.0 * 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub canny_low: f64,
    pub canny_high: f64,
    pub gaussian_sigma: f64,
    pub hist_bins_h: usize,
    pub hist_bins_s: usize,
    pub hu_epsilon: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            canny_low: 50.0,
            canny_high: 150.0,
            gaussian_sigma: 1.4,
            hist_bins_h: 32,
            hist_bins_s: 32,
            hu_epsilon: 1e-10,
        }
    }
}

impl FeatureParams {
    /// Returns every violated constraint; empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = self.canny_low.is_finite() && self.canny_high.is_finite();
        if !finite
            || self.canny_low < 0.0
            || self.canny_low >= self.canny_high
            || self.canny_high > MAX_SOBEL_BOUND
        {
            out.push(format!(
                "canny thresholds must satisfy 0 <= low < high <= {MAX_SOBEL_BOUND} (got {}, {})",
                self.canny_low, self.canny_high
            ));
        }
        if !(self.gaussian_sigma.is_finite() && self.gaussian_sigma > 0.0) {
            out.push(format!(
                "gaussian sigma must be positive (got {})",
                self.gaussian_sigma
            ));
        }
        if self.hist_bins_h < 2 || self.hist_bins_s < 2 {
            out.push(format!(
                "histogram bins must be >= 2 (got {}x{})",
                self.hist_bins_h, self.hist_bins_s
            ));
        }
        if !(self.hu_epsilon.is_finite() && self.hu_epsilon > 0.0) {
            out.push(format!(
                "hu epsilon must be positive (got {})",
                self.hu_epsilon
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    #[serde(rename = "B")]
    pub brightness: f64,
    #[serde(rename = "C")]
    pub contrast: f64,
    #[serde(rename = "E")]
    pub edge_density: f64,
    #[serde(rename = "H")]
    pub histogram: f64,
    #[serde(rename = "S")]
    pub shape: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.brightness,
            self.contrast,
            self.edge_density,
            self.histogram,
            self.shape,
        ]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            brightness: v[0],
            contrast: v[1],
            edge_density: v[2],
            histogram: v[3],
            shape: v[4],
        }
    }
}

/// What the similarity features need from the reference frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceProfile {
    pub histogram: HsHistogram,
    pub hu: HuMoments,
}

impl ReferenceProfile {
    pub fn new(reference: &Raster, params: &FeatureParams) -> Result<Self> {
        Ok(Self {
            histogram: hsv_histogram(reference, params),
            hu: hu_moments(reference)?,
        })
    }
}

/// Mean gray level over 255.
pub fn brightness(gray: &Raster) -> f64 {
    let gray = gray.to_grayscale();
    let sum: u64 = gray.data().iter().map(|&p| p as u64).sum();
    sum as f64 / (gray.pixel_count() as f64 * 255.0)
}

/// Population standard deviation of gray levels over 255.
pub fn contrast(gray: &Raster) -> f64 {
    let gray = gray.to_grayscale();
    let n = gray.pixel_count() as u128;
    let (sum, sum_sq) = gray.data().iter().fold((0u128, 0u128), |(s, q), &p| {
        let p = p as u128;
        (s + p, q + p * p)
    });
    // N² · var in exact integer arithmetic; shift-invariant bit for bit.
    let scaled_var = n * sum_sq - sum * sum;
    (scaled_var as f64).sqrt() / (n as f64 * 255.0)
}

/// Fraction of pixels flagged as edges.
pub fn edge_density(edges: &EdgeMap) -> f64 {
    edges.edge_count() as f64 / edges.data().len() as f64
}

/// Hu-moment shape similarity of `img` against `reference`.
pub fn shape_similarity(img: &Raster, reference: &Raster, params: &FeatureParams) -> Result<f64> {
    let a = hu_moments(img)?;
    let b = hu_moments(reference)?;
    Ok(shape_similarity_from(&a, &b, params.hu_epsilon))
}

/// Computes the full feature vector of `img` against a reference profile.
pub fn extract_features(
    img: &Raster,
    reference: &ReferenceProfile,
    params: &FeatureParams,
) -> Result<FeatureVector> {
    let gray = img.to_grayscale();
    let edges = canny(&gray, params)?;
    let histogram = hist_correlation(&hsv_histogram(img, params), &reference.histogram)?;
    let hu = hu_moments(&gray)?;
    Ok(FeatureVector {
        brightness: brightness(&gray),
        contrast: contrast(&gray),
        edge_density: edge_density(&edges),
        histogram,
        shape: shape_similarity_from(&hu, &reference.hu, params.hu_epsilon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brightness_examples() {
        assert_eq!(brightness(&Raster::gray(4, 4, vec![0; 16]).unwrap()), 0.0);
        assert_eq!(brightness(&Raster::gray(4, 4, vec![255; 16]).unwrap()), 1.0);
        let checker = Raster::gray(2, 2, vec![0, 255, 255, 0]).unwrap();
        assert_eq!(brightness(&checker), 0.5);
    }

    #[test]
    fn contrast_examples() {
        assert_eq!(contrast(&Raster::gray(3, 3, vec![77; 9]).unwrap()), 0.0);
        assert_eq!(contrast(&Raster::gray(2, 1, vec![0, 255]).unwrap()), 0.5);
        assert_eq!(
            contrast(&Raster::gray(4, 1, vec![0, 0, 255, 255]).unwrap()),
            0.5
        );
    }

    #[test]
    fn edge_density_examples() {
        assert_eq!(edge_density(&EdgeMap::new(4, 4, vec![0; 16]).unwrap()), 0.0);
        assert_eq!(
            edge_density(&EdgeMap::new(4, 4, vec![255; 16]).unwrap()),
            1.0
        );
        let mut d = vec![0u8; 256];
        d[..16].fill(255);
        assert_eq!(edge_density(&EdgeMap::new(16, 16, d).unwrap()), 0.0625);
    }

    #[test]
    fn params_validation() {
        assert!(FeatureParams::default().validate().is_ok());
        let bad = FeatureParams {
            canny_low: 200.0,
            canny_high: 100.0,
            hist_bins_h: 1,
            hu_epsilon: 0.0,
            ..Default::default()
        };
        assert_eq!(bad.problems().len(), 3);
        let too_high = FeatureParams {
            canny_high: 2000.0,
            ..Default::default()
        };
        assert!(too_high.validate().is_err());
    }

    #[test]
    fn frame_equal_to_reference() {
        let img = Raster::from_fn_rgb(12, 10, |x, y| [(x * 20) as u8, (y * 25) as u8, 90]).unwrap();
        let p = FeatureParams::default();
        let profile = ReferenceProfile::new(&img, &p).unwrap();
        let fv = extract_features(&img, &profile, &p).unwrap();
        assert_eq!(fv.histogram, 1.0);
        assert_eq!(fv.shape, -(1e-10f64).ln());
    }

    #[test]
    fn constant_mid_gray() {
        let img = Raster::gray(8, 8, vec![128; 64]).unwrap();
        let reference = Raster::from_fn_gray(8, 8, |x, _| (x * 30) as u8 + 1).unwrap();
        let p = FeatureParams::default();
        let fv =
            extract_features(&img, &ReferenceProfile::new(&reference, &p).unwrap(), &p).unwrap();
        assert!((fv.brightness - 0.502).abs() < 1e-3);
        assert_eq!(fv.contrast, 0.0);
        assert_eq!(fv.edge_density, 0.0);
    }

    #[test]
    fn shape_similarity_symmetric() {
        let a = Raster::from_fn_gray(10, 10, |x, y| (x * y) as u8).unwrap();
        let b = Raster::from_fn_gray(10, 10, |x, y| (x + 3 * y) as u8).unwrap();
        let p = FeatureParams::default();
        assert_eq!(
            shape_similarity(&a, &b, &p).unwrap(),
            shape_similarity(&b, &a, &p).unwrap()
        );
    }
}
