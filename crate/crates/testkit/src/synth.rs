use std::path::Path;

use afse_core::{Mask, Raster, SplitMix64};

pub fn constant(w: u32, h: u32, v: u8) -> Raster {
    Raster::gray(w, h, vec![v; (w * h) as usize]).unwrap()
}

pub fn checkerboard(w: u32, h: u32, cell: u32) -> Raster {
    Raster::from_fn_gray(w, h, |x, y| {
        if (x / cell + y / cell).is_multiple_of(2) {
            0
        } else {
            255
        }
    })
    .unwrap()
}

/// Left half `lo`, right half `hi`.
pub fn vertical_step(w: u32, h: u32, lo: u8, hi: u8) -> Raster {
    Raster::from_fn_gray(w, h, |x, _| if x < w / 2 { lo } else { hi }).unwrap()
}

pub fn horizontal_step(w: u32, h: u32, lo: u8, hi: u8) -> Raster {
    Raster::from_fn_gray(w, h, |_, y| if y < h / 2 { lo } else { hi }).unwrap()
}

/// A `side`×`side` square of `fg` centered on a `n`×`n` canvas of `bg`.
pub fn centered_square(n: u32, side: u32, fg: u8, bg: u8) -> Raster {
    let lo = (n - side) / 2;
    Raster::from_fn_gray(n, n, |x, y| {
        if (lo..lo + side).contains(&x) && (lo..lo + side).contains(&y) {
            fg
        } else {
            bg
        }
    })
    .unwrap()
}

/// Disk of radius `r` around `(cx, cy)` (pixel centers inside the circle).
pub fn disk(w: u32, h: u32, cx: f64, cy: f64, r: f64, fg: u8, bg: u8) -> Raster {
    Raster::from_fn_gray(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        if dx * dx + dy * dy <= r * r {
            fg
        } else {
            bg
        }
    })
    .unwrap()
}

/// Shifts content by `(dx, dy)` inside the same canvas, filling with zero.
pub fn translate(img: &Raster, dx: i32, dy: i32) -> Raster {
    let (w, h, c) = (
        img.width() as i32,
        img.height() as i32,
        img.channels() as usize,
    );
    let mut data = vec![0u8; img.data().len()];
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = (x - dx, y - dy);
            if sx < 0 || sy < 0 || sx >= w || sy >= h {
                continue;
            }
            let dst = (y * w + x) as usize * c;
            let src = (sy * w + sx) as usize * c;
            data[dst..dst + c].copy_from_slice(&img.data()[src..src + c]);
        }
    }
    Raster::new(img.width(), img.height(), img.channels(), data).unwrap()
}

/// An irregular, asymmetric blob: a few overlapping ellipses with
/// intensity ramps, confined to the interior of a `w`×`h` canvas so it can
/// be translated without clipping.
pub fn blob(w: u32, h: u32, seed: u64) -> Raster {
    let mut rng = SplitMix64::new(seed);
    let mut ellipses = Vec::new();
    let (fw, fh) = (w as f64, h as f64);
    for _ in 0..3 {
        let cx = fw * (0.35 + 0.3 * rng.next_f64());
        let cy = fh * (0.35 + 0.3 * rng.next_f64());
        let rx = fw * (0.06 + 0.08 * rng.next_f64());
        let ry = fh * (0.06 + 0.08 * rng.next_f64());
        let base = 80.0 + 120.0 * rng.next_f64();
        ellipses.push((cx, cy, rx, ry, base));
    }
    Raster::from_fn_gray(w, h, |x, y| {
        let mut v: f64 = 0.0;
        for &(cx, cy, rx, ry, base) in &ellipses {
            let dx = (x as f64 - cx) / rx;
            let dy = (y as f64 - cy) / ry;
            if dx * dx + dy * dy <= 1.0 {
                v = v.max(base + 10.0 * dx + 5.0 * dy);
            }
        }
        v.clamp(0.0, 255.0) as u8
    })
    .unwrap()
}

pub fn random_gray(w: u32, h: u32, seed: u64) -> Raster {
    let mut rng = SplitMix64::new(seed);
    let data = (0..w * h).map(|_| rng.below(256) as u8).collect();
    Raster::gray(w, h, data).unwrap()
}

pub fn random_rgb(w: u32, h: u32, seed: u64) -> Raster {
    let mut rng = SplitMix64::new(seed);
    let data = (0..w * h * 3).map(|_| rng.below(256) as u8).collect();
    Raster::rgb(w, h, data).unwrap()
}

/// Frame `i` of a drifting, brightening disk sequence (RGB, 48×48).
pub fn drifting_disk_frame(i: usize, n: usize) -> Raster {
    let t = if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.0
    };
    let cx = 14.0 + 20.0 * t;
    let cy = 20.0 + 8.0 * (t * std::f64::consts::PI).sin();
    let r = 7.0 + 3.0 * t;
    let level = 90.0 + 150.0 * t;
    Raster::from_fn_rgb(48, 48, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let bg = [20 + (x / 4) as u8, 30, 40 + (y / 4) as u8];
        if dx * dx + dy * dy <= r * r {
            [
                level as u8,
                (level * 0.6) as u8,
                (255.0 - level * 0.5) as u8,
            ]
        } else {
            bg
        }
    })
    .unwrap()
}

/// The disk of [`drifting_disk_frame`] as a ground-truth mask.
pub fn drifting_disk_mask(i: usize, n: usize) -> Mask {
    let t = if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.0
    };
    let cx = 14.0 + 20.0 * t;
    let cy = 20.0 + 8.0 * (t * std::f64::consts::PI).sin();
    let r = 7.0 + 3.0 * t;
    Mask::from_fn(48, 48, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        dx * dx + dy * dy <= r * r
    })
    .unwrap()
}

/// Writes an `n`-frame drifting-disk dataset (`frame_000.png`, …) and its
/// masks into `images` and `masks`.
pub fn write_drifting_dataset(images: &Path, masks: &Path, n: usize) {
    std::fs::create_dir_all(images).unwrap();
    std::fs::create_dir_all(masks).unwrap();
    for i in 0..n {
        let name = format!("frame_{i:03}.png");
        drifting_disk_frame(i, n)
            .save_png(images.join(&name))
            .unwrap();
        drifting_disk_mask(i, n)
            .save_png(masks.join(&name))
            .unwrap();
    }
}

/// Random mask: a union of rectangles and ellipses plus sparse speckle,
/// guaranteed to have both foreground and background.
pub fn random_mask(seed: u64) -> Mask {
    let mut rng = SplitMix64::new(seed);
    let w = 16 + rng.below(48) as u32;
    let h = 16 + rng.below(48) as u32;
    let mut m = Mask::empty(w, h).unwrap();
    let shapes = 1 + rng.below(3);
    for _ in 0..shapes {
        let cx = rng.below(w as u64) as f64;
        let cy = rng.below(h as u64) as f64;
        let rx = 2.0 + rng.below(w as u64 / 3) as f64;
        let ry = 2.0 + rng.below(h as u64 / 3) as f64;
        let ellipse = rng.below(2) == 0;
        for y in 0..h {
            for x in 0..w {
                let dx = (x as f64 - cx) / rx;
                let dy = (y as f64 - cy) / ry;
                let inside = if ellipse {
                    dx * dx + dy * dy <= 1.0
                } else {
                    dx.abs() <= 1.0 && dy.abs() <= 1.0
                };
                if inside {
                    m.set(x, y, true);
                }
            }
        }
    }
    for _ in 0..rng.below(6) {
        let x = rng.below(w as u64) as u32;
        let y = rng.below(h as u64) as u32;
        m.set(x, y, true);
    }
    if m.count() == (w * h) as usize {
        m.set(0, 0, false);
    }
    m
}

/// Random mask pair of equal size, sometimes empty on either side.
pub fn random_mask_pair(seed: u64) -> (Mask, Mask) {
    let mut rng = SplitMix64::new(seed ^ 0xABCD);
    let w = 4 + rng.below(40) as u32;
    let h = 4 + rng.below(40) as u32;
    let density_a = rng.next_f64();
    let density_b = rng.next_f64();
    let empty_case = rng.below(10);
    let mut a = Mask::empty(w, h).unwrap();
    let mut b = Mask::empty(w, h).unwrap();
    for y in 0..h {
        for x in 0..w {
            a.set(x, y, empty_case != 0 && rng.next_f64() < density_a);
            b.set(x, y, empty_case != 1 && rng.next_f64() < density_b);
        }
    }
    (a, b)
}
