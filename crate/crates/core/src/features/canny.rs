//! Canny edge detection: Gaussian blur, Sobel gradients, non-maximum
//! suppression along four quantized directions, and hysteresis.

use crate::error::{Error, Result};
use crate::raster::{EdgeMap, Raster};

use super::FeatureParams;

const KERNEL_RADIUS: usize = 2;
// tan(22.5°) and tan(67.5°)
const TAN_22_5: f64 = 0.414_213_562_373_095_03;
const TAN_67_5: f64 = 2.414_213_562_373_095;

/// Normalized 1-D Gaussian taps for the 5-tap kernel.
pub fn gaussian_taps(sigma: f64) -> [f64; 5] {
    let mut taps = [0.0; 5];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - KERNEL_RADIUS as f64;
        *t = (-(d * d) / (2.0 * sigma * sigma)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Separable 5x5 Gaussian blur with replicated borders, rounded back to u8.
pub fn gaussian_blur(gray: &Raster, sigma: f64) -> Vec<u8> {
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let taps = gaussian_taps(sigma);
    let src = gray.data();
    let mut horiz = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let xx = clamp_index(x as isize + k as isize - KERNEL_RADIUS as isize, w);
                acc += t * row[xx] as f64;
            }
            horiz[y * w + x] = acc;
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let yy = clamp_index(y as isize + k as isize - KERNEL_RADIUS as isize, h);
                acc += t * horiz[yy * w + x];
            }
            out[y * w + x] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Integer Sobel gradients with replicated borders.
fn sobel(blurred: &[u8], w: usize, h: usize) -> (Vec<i32>, Vec<i32>) {
    let mut gx = vec![0i32; w * h];
    let mut gy = vec![0i32; w * h];
    let at =
        |x: isize, y: isize| -> i32 { blurred[clamp_index(y, h) * w + clamp_index(x, w)] as i32 };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Unit step along the gradient quantized to 0°, 45°, 90° or 135°, with `y`
/// pointing down: `(1,0)`, `(1,1)`, `(0,1)`, `(-1,1)`.
fn direction(gx: i32, gy: i32) -> (isize, isize) {
    let ax = (gx as f64).abs();
    let ay = (gy as f64).abs();
    if ay <= ax * TAN_22_5 {
        (1, 0)
    } else if ay >= ax * TAN_67_5 {
        (0, 1)
    } else if (gx > 0) == (gy > 0) {
        (1, 1)
    } else {
        (-1, 1)
    }
}

/// Full Canny pipeline. A pixel survives non-maximum suppression when its
/// magnitude is `>=` the neighbour one step behind and `>` the one ahead, so
/// a symmetric ridge keeps exactly one pixel. Thresholds apply to the L2 Sobel magnitude: pixels
/// strictly above `canny_high` seed edges, which grow through 8-connected
/// pixels strictly above `canny_low`.
pub fn canny(gray: &Raster, params: &FeatureParams) -> Result<EdgeMap> {
    let gray = gray.to_grayscale();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    if w < 5 || h < 5 {
        return Err(Error::TooSmall {
            width: gray.width(),
            height: gray.height(),
        });
    }
    let blurred = gaussian_blur(&gray, params.gaussian_sigma);
    let (gx, gy) = sobel(&blurred, w, h);
    // Squared magnitudes are exact integers, so ties compare exactly.
    let mag2: Vec<i64> = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| a as i64 * a as i64 + b as i64 * b as i64)
        .collect();
    let mag2_at = |x: isize, y: isize| -> i64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            mag2[y as usize * w + x as usize]
        }
    };

    let low2 = params.canny_low * params.canny_low;
    let high2 = params.canny_high * params.canny_high;

    // 0 = suppressed, 1 = weak candidate, 2 = strong
    let mut class = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag2[i];
            if m == 0 || (m as f64) <= low2 {
                continue;
            }
            let (dx, dy) = direction(gx[i], gy[i]);
            let (xi, yi) = (x as isize, y as isize);
            let behind = mag2_at(xi - dx, yi - dy);
            let ahead = mag2_at(xi + dx, yi + dy);
            if m >= behind && m > ahead {
                class[i] = if (m as f64) > high2 { 2 } else { 1 };
            }
        }
    }

    let mut edge = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..w * h {
        if class[i] == 2 && !edge[i] {
            edge[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j % w) as isize, (j / w) as isize);
                for ny in jy - 1..=jy + 1 {
                    for nx in jx - 1..=jx + 1 {
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let n = ny as usize * w + nx as usize;
                        if class[n] != 0 && !edge[n] {
                            edge[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    Ok(EdgeMap::from_flags(gray.width(), gray.height(), &edge))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taps_are_normalized_and_symmetric() {
        let t = gaussian_taps(1.4);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(t[0], t[4]);
        assert_eq!(t[1], t[3]);
        assert!(t[2] > t[1] && t[1] > t[0]);
    }

    #[test]
    fn constant_image_has_no_edges() {
        let g = Raster::gray(9, 7, vec![93; 63]).unwrap();
        let e = canny(&g, &FeatureParams::default()).unwrap();
        assert_eq!(e.edge_count(), 0);
    }

    #[test]
    fn too_small_rejected() {
        let g = Raster::gray(4, 9, vec![0; 36]).unwrap();
        assert!(matches!(
            canny(&g, &FeatureParams::default()),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn vertical_step_gives_single_column() {
        let g = Raster::from_fn_gray(16, 16, |x, _| if x < 8 { 0 } else { 255 }).unwrap();
        let e = canny(&g, &FeatureParams::default()).unwrap();
        for y in 0..16 {
            let cols: Vec<u32> = (0..16).filter(|&x| e.is_edge(x, y)).collect();
            assert_eq!(cols, vec![8], "row {y}");
        }
    }

    #[test]
    fn direction_quantization() {
        assert_eq!(direction(10, 0), (1, 0));
        assert_eq!(direction(0, 10), (0, 1));
        assert_eq!(direction(10, 10), (1, 1));
        assert_eq!(direction(-10, -10), (1, 1));
        assert_eq!(direction(10, -10), (-1, 1));
        assert_eq!(direction(-10, 10), (-1, 1));
    }
}
