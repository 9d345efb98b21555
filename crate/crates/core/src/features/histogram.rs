use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

use super::FeatureParams;

/// Joint hue × saturation histogram; value is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsHistogram {
    pub bins_h: usize,
    pub bins_s: usize,
    /// Row-major over `(h_bin, s_bin)`.
    pub counts: Vec<u64>,
}

impl HsHistogram {
    pub fn shape(&self) -> (usize, usize) {
        (self.bins_h, self.bins_s)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, h_bin: usize, s_bin: usize) -> u64 {
        self.counts[h_bin * self.bins_s + s_bin]
    }
}

fn bin(value: f64, upper: f64, bins: usize) -> usize {
    ((value / upper * bins as f64).floor() as usize).min(bins - 1)
}

/// Counts every pixel into uniform bins over `H ∈ [0, 360)` × `S ∈ [0, 1]`.
/// `S = 1` falls into the top saturation bin.
pub fn hsv_histogram(img: &Raster, params: &FeatureParams) -> HsHistogram {
    let (bh, bs) = (params.hist_bins_h, params.hist_bins_s);
    let mut counts = vec![0u64; bh * bs];
    for hsv in img.to_hsv() {
        let hb = bin(hsv.h, 360.0, bh);
        let sb = bin(hsv.s, 1.0, bs);
        counts[hb * bs + sb] += 1;
    }
    HsHistogram {
        bins_h: bh,
        bins_s: bs,
        counts,
    }
}

/// Pearson correlation between two histograms of equal shape.
///
/// When both have zero variance the result is 1 if they are equal, else 0.
/// When only one has zero variance the correlation is undefined and 0 is
/// returned.
pub fn hist_correlation(a: &HsHistogram, b: &HsHistogram) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::HistogramShape(a.shape(), b.shape()));
    }
    pearson(&a.counts, &b.counts)
}

pub(crate) fn pearson(a: &[u64], b: &[u64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::HistogramShape((a.len(), 1), (b.len(), 1)));
    }
    // Exact integer moments; identical inputs then give exactly 1 because
    // sqrt(x·x) rounds back to x.
    let n = a.len() as i128;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as i128, y as i128);
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    let cov = n * sab - sa * sb;
    let var_a = n * saa - sa * sa;
    let var_b = n * sbb - sb * sb;
    if var_a == 0 && var_b == 0 {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    if var_a == 0 || var_b == 0 {
        return Ok(0.0);
    }
    let (cov, var_a, var_b) = (cov as f64, var_a as f64, var_b as f64);
    Ok((cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: Vec<u64>) -> HsHistogram {
        HsHistogram {
            bins_h: counts.len(),
            bins_s: 1,
            counts,
        }
    }

    #[test]
    fn solid_color_is_one_hot() {
        let img = Raster::from_fn_rgb(4, 3, |_, _| [10, 200, 30]).unwrap();
        let h = hsv_histogram(&img, &FeatureParams::default());
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.total(), 12);
    }

    #[test]
    fn red_green_halves() {
        let img = Raster::from_fn_rgb(4, 2, |x, _| if x < 2 { [255, 0, 0] } else { [0, 255, 0] })
            .unwrap();
        let p = FeatureParams::default();
        let h = hsv_histogram(&img, &p);
        // red: h=0 → bin 0, green: h=120 → bin floor(120/360*32)=10; s=1 → top bin
        assert_eq!(h.get(0, 31), 4);
        assert_eq!(h.get(10, 31), 4);
        assert_eq!(h.total(), 8);
    }

    #[test]
    fn self_correlation_is_one() {
        let a = hist(vec![1, 5, 2, 0, 9]);
        assert!((hist_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_hot_pair() {
        let n = 1024;
        let mut a = vec![0u64; n];
        let mut b = vec![0u64; n];
        a[3] = 1;
        b[700] = 1;
        let r = hist_correlation(&hist(a), &hist(b)).unwrap();
        assert!((r - (-1.0 / (n as f64 - 1.0))).abs() < 1e-15);
        assert!((r + 9.775e-4).abs() < 1e-6);
    }

    #[test]
    fn affine_invariance() {
        let a = vec![1u64, 5, 2, 0, 9, 4];
        let b: Vec<u64> = a.iter().map(|v| 3 * v + 7).collect();
        assert!((hist_correlation(&hist(a), &hist(b)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_conventions() {
        let a = hist(vec![2, 2, 2]);
        let b = hist(vec![3, 3, 3]);
        assert_eq!(hist_correlation(&a, &a).unwrap(), 1.0);
        assert_eq!(hist_correlation(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = hist(vec![1, 2]);
        let b = hist(vec![1, 2, 3]);
        assert!(hist_correlation(&a, &b).is_err());
    }

    #[test]
    fn self_correlation_is_exactly_one() {
        let mut rng = crate::SplitMix64::new(5);
        for _ in 0..200 {
            let v: Vec<u64> = (0..1024).map(|_| rng.below(5000)).collect();
            assert_eq!(pearson(&v, &v).unwrap(), 1.0);
        }
    }
}
