//! Separable filtering with half-sample symmetric boundaries.

use super::transform::{reflect, Plane};

/// Normalized 1-D Gaussian taps of odd length `size`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    assert!(size % 2 == 1, "kernel size must be odd");
    let r = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - r;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Convolve rows then columns with the same symmetric kernel.
pub fn convolve_separable(plane: &Plane, kernel: &[f64]) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    let r = kernel.len() / 2;
    let mut tmp = Plane::zeros(w, h);
    for y in 0..h {
        let row = &plane.data()[y * w..(y + 1) * w];
        for x in 0..w {
            let mut s = 0.0;
            for (k, &t) in kernel.iter().enumerate() {
                let xi = reflect_signed(x as isize + k as isize - r as isize, w);
                s += t * row[xi];
            }
            tmp.set(x, y, s);
        }
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (k, &t) in kernel.iter().enumerate() {
                let yi = reflect_signed(y as isize + k as isize - r as isize, h);
                s += t * tmp.at(x, yi);
            }
            out.set(x, y, s);
        }
    }
    out
}

#[inline]
pub(crate) fn reflect_signed(i: isize, n: usize) -> usize {
    if i < 0 {
        reflect((-i - 1) as usize, n)
    } else {
        reflect(i as usize, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(5, 1.1);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((k[0] - k[4]).abs() < 1e-15 && (k[1] - k[3]).abs() < 1e-15);
    }

    #[test]
    fn blur_preserves_constants() {
        let p = Plane::new(9, 7, vec![0.4; 63]);
        let out = convolve_separable(&p, &gaussian_kernel(7, 2.0));
        assert!(out.data().iter().all(|v| (v - 0.4).abs() < 1e-12));
    }

    #[test]
    fn reflect_is_half_sample_symmetric() {
        assert_eq!(reflect_signed(-1, 5), 0);
        assert_eq!(reflect_signed(-2, 5), 1);
        assert_eq!(reflect_signed(5, 5), 4);
        assert_eq!(reflect_signed(6, 5), 3);
    }
}
