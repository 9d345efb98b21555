//! Hu's seven moment invariants on raw grayscale intensities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuMoments(pub [f64; 7]);

impl HuMoments {
    pub fn values(&self) -> &[f64; 7] {
        &self.0
    }

    /// `Σ |a_i − b_i|` over the seven invariants.
    pub fn l1_distance(&self, other: &HuMoments) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Central moments `μ_pq` for `p + q ≤ 3`, indexed `[p][q]`.
fn central_moments(gray: &Raster) -> Result<[[f64; 4]; 4]> {
    let w = gray.width() as usize;
    let data = gray.data();

    let mut m00 = 0.0;
    let mut m10 = 0.0;
    let mut m01 = 0.0;
    for (i, &p) in data.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let v = p as f64;
        m00 += v;
        m10 += (i % w) as f64 * v;
        m01 += (i / w) as f64 * v;
    }
    if m00 == 0.0 {
        return Err(Error::ZeroIntensity);
    }
    let cx = m10 / m00;
    let cy = m01 / m00;

    // Second pass around the centroid avoids cancellation in third-order terms.
    let mut mu = [[0.0f64; 4]; 4];
    for (i, &p) in data.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let v = p as f64;
        let dx = (i % w) as f64 - cx;
        let dy = (i / w) as f64 - cy;
        let (dx2, dy2) = (dx * dx, dy * dy);
        mu[2][0] += dx2 * v;
        mu[0][2] += dy2 * v;
        mu[1][1] += dx * dy * v;
        mu[3][0] += dx2 * dx * v;
        mu[0][3] += dy2 * dy * v;
        mu[2][1] += dx2 * dy * v;
        mu[1][2] += dx * dy2 * v;
    }
    mu[0][0] = m00;
    Ok(mu)
}

/// Hu invariants of a gray raster (color input is converted first).
pub fn hu_moments(img: &Raster) -> Result<HuMoments> {
    let gray = img.to_grayscale();
    let mu = central_moments(&gray)?;
    let m00 = mu[0][0];
    let eta = |p: usize, q: usize| mu[p][q] / m00.powf(1.0 + (p + q) as f64 / 2.0);

    let n20 = eta(2, 0);
    let n02 = eta(0, 2);
    let n11 = eta(1, 1);
    let n30 = eta(3, 0);
    let n03 = eta(0, 3);
    let n21 = eta(2, 1);
    let n12 = eta(1, 2);

    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;

    Ok(HuMoments([
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        c * c + d * d,
        a * a + b * b,
        c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b),
    ]))
}

/// `−ln(Σ |Hu(ref)_i − Hu(img)_i| + epsilon)`.
pub fn shape_similarity_from(img: &HuMoments, reference: &HuMoments, epsilon: f64) -> f64 {
    -(reference.l1_distance(img) + epsilon).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_is_error() {
        let g = Raster::gray(4, 4, vec![0; 16]).unwrap();
        assert!(matches!(hu_moments(&g), Err(Error::ZeroIntensity)));
    }

    #[test]
    fn symmetric_blob_has_vanishing_higher_invariants() {
        let g = Raster::from_fn_gray(9, 9, |x, y| {
            if (2..7).contains(&x) && (2..7).contains(&y) {
                200
            } else {
                0
            }
        })
        .unwrap();
        let hu = hu_moments(&g).unwrap();
        assert!(hu.0[0] > 0.0);
        for v in &hu.0[1..] {
            assert!(v.abs() < 1e-15, "{v}");
        }
    }

    #[test]
    fn identical_images_give_max_similarity() {
        let g = Raster::from_fn_gray(8, 6, |x, y| (x * 17 + y * 5) as u8).unwrap();
        let hu = hu_moments(&g).unwrap();
        let s = shape_similarity_from(&hu, &hu, 1e-10);
        assert!((s - 23.025_850_929_940_457).abs() < 1e-9);
    }
}
