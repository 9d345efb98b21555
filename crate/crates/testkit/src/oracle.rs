//! Straightforward reference implementations used to freeze expectations.

use afse_core::{Mask, Raster};

/// Gray levels of a raster using the BT.601 weights in floating point.
pub fn gray_levels(img: &Raster) -> Vec<u8> {
    if img.channels() == 1 {
        return img.data().to_vec();
    }
    img.data()
        .chunks(3)
        .map(|p| {
            let v = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            // half-up; the +1e-9 absorbs representation error of the weights
            (v + 0.5 + 1e-9).floor().min(255.0) as u8
        })
        .collect()
}

pub fn brightness(gray: &[u8]) -> f64 {
    let mut sum = 0u64;
    for &p in gray {
        sum += p as u64;
    }
    sum as f64 / (gray.len() as f64 * 255.0)
}

/// Population std via the deviation form `Σ (N p_i − S)²`, evaluated exactly.
pub fn contrast(gray: &[u8]) -> f64 {
    let n = gray.len() as i128;
    let s: i128 = gray.iter().map(|&p| p as i128).sum();
    let dev: i128 = gray.iter().map(|&p| (n * p as i128 - s).pow(2)).sum();
    // dev = N · (N Σp² − S²); divide the extra N back out.
    ((dev / n) as f64).sqrt() / (n as f64 * 255.0)
}

/// Reference Canny: direct 2-D Gaussian convolution, explicit Sobel masks,
/// angle binning through `atan2`, and hysteresis by repeated sweeps.
pub fn canny(gray: &[u8], w: usize, h: usize, sigma: f64, low: f64, high: f64) -> Vec<bool> {
    let px = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        gray[yc * w + xc] as f64
    };

    let mut kernel = [[0.0f64; 5]; 5];
    let mut total = 0.0;
    for (j, row) in kernel.iter_mut().enumerate() {
        for (i, k) in row.iter_mut().enumerate() {
            let dx = i as f64 - 2.0;
            let dy = j as f64 - 2.0;
            *k = (-(dx * dx) / (2.0 * sigma * sigma)).exp()
                * (-(dy * dy) / (2.0 * sigma * sigma)).exp();
            total += *k;
        }
    }

    let mut blurred = vec![0i64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (j, row) in kernel.iter().enumerate() {
                for (i, k) in row.iter().enumerate() {
                    acc += k / total * px(x + i as isize - 2, y + j as isize - 2);
                }
            }
            blurred[y as usize * w + x as usize] = acc.round().clamp(0.0, 255.0) as i64;
        }
    }
    let b = |x: isize, y: isize| -> i64 {
        blurred[y.clamp(0, h as isize - 1) as usize * w + x.clamp(0, w as isize - 1) as usize]
    };

    const SX: [[i64; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
    const SY: [[i64; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];
    let mut mag = vec![0.0f64; w * h];
    let mut angle = vec![0.0f64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut gx = 0;
            let mut gy = 0;
            for j in 0..3 {
                for i in 0..3 {
                    let v = b(x + i as isize - 1, y + j as isize - 1);
                    gx += SX[j][i] * v;
                    gy += SY[j][i] * v;
                }
            }
            let idx = y as usize * w + x as usize;
            mag[idx] = ((gx * gx + gy * gy) as f64).sqrt();
            angle[idx] = (gy as f64).atan2(gx as f64).to_degrees().rem_euclid(180.0);
        }
    }
    let m = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // 0 suppressed, 1 weak, 2 strong
    let mut class = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let idx = y as usize * w + x as usize;
            let v = mag[idx];
            if v <= low {
                continue;
            }
            let a = angle[idx];
            let (dx, dy) = if !(22.5..157.5).contains(&a) {
                (1, 0)
            } else if a < 67.5 {
                (1, 1)
            } else if a <= 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            if v >= m(x - dx, y - dy) && v > m(x + dx, y + dy) {
                class[idx] = if v > high { 2 } else { 1 };
            }
        }
    }

    let mut edge: Vec<bool> = class.iter().map(|&c| c == 2).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let idx = y * w + x;
                if edge[idx] || class[idx] != 1 {
                    continue;
                }
                let touches = (-1isize..=1).any(|oy| {
                    (-1isize..=1).any(|ox| {
                        let nx = x as isize + ox;
                        let ny = y as isize + oy;
                        nx >= 0
                            && ny >= 0
                            && nx < w as isize
                            && ny < h as isize
                            && edge[ny as usize * w + nx as usize]
                    })
                });
                if touches {
                    edge[idx] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return edge;
        }
    }
}

/// Hu invariants by direct double-loop summation of central moments, in the
/// textbook (unfactored) form.
pub fn hu(gray: &[u8], w: usize, h: usize) -> [f64; 7] {
    let mut m00 = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for y in 0..h {
        for x in 0..w {
            let v = gray[y * w + x] as f64;
            m00 += v;
            sx += x as f64 * v;
            sy += y as f64 * v;
        }
    }
    assert!(m00 > 0.0, "oracle needs a nonzero image");
    let (xb, yb) = (sx / m00, sy / m00);
    let mu = |p: i32, q: i32| -> f64 {
        let mut acc = 0.0;
        for y in 0..h {
            for x in 0..w {
                let v = gray[y * w + x] as f64;
                if v != 0.0 {
                    acc += (x as f64 - xb).powi(p) * (y as f64 - yb).powi(q) * v;
                }
            }
        }
        acc
    };
    let eta = |p: i32, q: i32| mu(p, q) / m00.powf(1.0 + (p + q) as f64 / 2.0);
    let (e20, e02, e11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (e30, e03, e21, e12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));
    [
        e20 + e02,
        (e20 - e02).powi(2) + 4.0 * e11.powi(2),
        (e30 - 3.0 * e12).powi(2) + (3.0 * e21 - e03).powi(2),
        (e30 + e12).powi(2) + (e21 + e03).powi(2),
        (e30 - 3.0 * e12) * (e30 + e12) * ((e30 + e12).powi(2) - 3.0 * (e21 + e03).powi(2))
            + (3.0 * e21 - e03) * (e21 + e03) * (3.0 * (e30 + e12).powi(2) - (e21 + e03).powi(2)),
        (e20 - e02) * ((e30 + e12).powi(2) - (e21 + e03).powi(2))
            + 4.0 * e11 * (e30 + e12) * (e21 + e03),
        (3.0 * e21 - e03) * (e30 + e12) * ((e30 + e12).powi(2) - 3.0 * (e21 + e03).powi(2))
            - (e30 - 3.0 * e12) * (e21 + e03) * (3.0 * (e30 + e12).powi(2) - (e21 + e03).powi(2)),
    ]
}

/// Each invariant agrees to `rel` relative to the larger magnitude, with an
/// absolute floor `abs` for invariants that vanish by symmetry.
pub fn hu_close(a: &[f64; 7], b: &[f64; 7], rel: f64, abs: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= rel * x.abs().max(y.abs()) + abs)
}

/// Pearson correlation by the single-pass sums formula in exact integers.
pub fn pearson(a: &[u64], b: &[u64]) -> f64 {
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
    let num = n * sab - sa * sb;
    let da = n * saa - sa * sa;
    let db = n * sbb - sb * sb;
    num as f64 / ((da as f64) * (db as f64)).sqrt()
}

/// H×S histogram with explicit hue sector arithmetic.
pub fn hs_histogram(img: &Raster, bins_h: usize, bins_s: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins_h * bins_s];
    for p in img.rgb_pixels() {
        let hsv = afse_core::raster::rgb_to_hsv(p[0], p[1], p[2]);
        let mut hb = (hsv.h * bins_h as f64 / 360.0) as usize;
        let mut sb = (hsv.s * bins_s as f64) as usize;
        if hb >= bins_h {
            hb = bins_h - 1;
        }
        if sb >= bins_s {
            sb = bins_s - 1;
        }
        counts[hb * bins_s + sb] += 1;
    }
    counts
}

/// Sum of squared deviations, values summed in ascending order.
pub fn sse(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum()
}

/// Best 1-D k-means objective by enumerating every split of the sorted
/// values into `k` contiguous non-empty runs.
pub fn best_contiguous_objective(values: &[f64], k: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mut best = f64::INFINITY;
    let mut cuts = Vec::with_capacity(k - 1);
    fn rec(v: &[f64], k: usize, start: usize, cuts: &mut Vec<usize>, best: &mut f64) {
        let n = v.len();
        if cuts.len() == k - 1 {
            let mut bounds = vec![0];
            bounds.extend(cuts.iter().copied());
            bounds.push(n);
            let mut groups: Vec<(f64, f64)> = bounds
                .windows(2)
                .map(|b| {
                    let g = &v[b[0]..b[1]];
                    (g.iter().sum::<f64>() / g.len() as f64, sse(g))
                })
                .collect();
            groups.sort_by(|a, b| a.0.total_cmp(&b.0));
            let total: f64 = groups.iter().map(|g| g.1).sum();
            if total < *best {
                *best = total;
            }
            return;
        }
        let remaining = k - 1 - cuts.len();
        for c in start..=n - remaining {
            cuts.push(c);
            rec(v, k, c + 1, cuts, best);
            cuts.pop();
        }
    }
    if k == 1 {
        return sse(&v);
    }
    rec(&v, k, 1, &mut cuts, &mut best);
    let _ = n;
    best
}

/// Best objective over every assignment of points to `k` non-empty labels.
pub fn best_any_partition_objective(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    let mut best = f64::INFINITY;
    let total = (k as u64).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut groups = vec![Vec::new(); k];
        for &v in values {
            groups[(c % k as u64) as usize].push(v);
            c /= k as u64;
        }
        if groups.iter().any(|g| g.is_empty()) {
            continue;
        }
        let obj: f64 = groups.iter().map(|g| sse(g)).sum();
        best = best.min(obj);
    }
    best
}

/// Two distances are tied when they differ by at most this fraction of the
/// score range (well above rounding noise, far below real separations).
pub const TIE_FRACTION: f64 = 1e-9;

fn score_range(scores: &[f64]) -> f64 {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// For each cluster, the member with the smallest `|score − centroid|`,
/// lowest index first on ties, by a plain scan.
pub fn nearest_members(scores: &[f64], assignment: &[usize], centroids: &[f64]) -> Vec<usize> {
    let tol = TIE_FRACTION * score_range(scores);
    (0..centroids.len())
        .map(|c| {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..scores.len() {
                if assignment[i] != c {
                    continue;
                }
                let d = (scores[i] - centroids[c]).abs();
                if best.is_none_or(|(_, bd)| d < bd - tol) {
                    best = Some((i, d));
                }
            }
            best.expect("non-empty cluster").0
        })
        .collect()
}

/// Whether `ranking` is ascending in distance, with index order inside ties.
pub fn ranking_is_sorted(ranking: &[usize], distances: &[f64], scores: &[f64]) -> bool {
    let tol = TIE_FRACTION * score_range(scores);
    ranking.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        let (da, db) = (distances[a], distances[b]);
        da < db - tol || ((da - db).abs() <= tol && a < b)
    })
}

/// Smallest box containing every foreground pixel, by brute force; `None`
/// for an empty mask.
pub fn bbox(mask: &Mask) -> Option<[u32; 4]> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    Some([
        *xs.iter().min()?,
        *ys.iter().min()?,
        *xs.iter().max()?,
        *ys.iter().max()?,
    ])
}

/// `(|a ∩ b|, |a|, |b|)` by counting.
pub fn counts(a: &Mask, b: &Mask) -> (usize, usize, usize) {
    let mut inter = 0;
    let mut na = 0;
    let mut nb = 0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            let (p, q) = (a.get(x, y), b.get(x, y));
            if p && q {
                inter += 1;
            }
            if p {
                na += 1;
            }
            if q {
                nb += 1;
            }
        }
    }
    (inter, na, nb)
}

/// 8-connected component sizes by flood fill, largest first.
pub fn component_sizes(mask: &Mask) -> Vec<usize> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut seen = vec![false; (w * h) as usize];
    let mut sizes = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            if !mask.get(sx as u32, sy as u32) || seen[(sy * w + sx) as usize] {
                continue;
            }
            let mut stack = vec![(sx, sy)];
            seen[(sy * w + sx) as usize] = true;
            let mut size = 0;
            while let Some((x, y)) = stack.pop() {
                size += 1;
                for oy in -1..=1 {
                    for ox in -1..=1 {
                        let (nx, ny) = (x + ox, y + oy);
                        if nx >= 0 && ny >= 0 && nx < w && ny < h {
                            let i = (ny * w + nx) as usize;
                            if !seen[i] && mask.get(nx as u32, ny as u32) {
                                seen[i] = true;
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
            sizes.push(size);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}
