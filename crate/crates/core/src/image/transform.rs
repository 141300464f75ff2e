//! Orthonormal 8×8 block DCT-II and single-level 2-D Haar DWT.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Single-channel float buffer used for intermediate computation. Unlike
/// [`super::Image`] it carries no range or finiteness guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane data length");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Half-sample symmetric extension to `width × height` (both ≥ current).
    pub fn pad_symmetric(&self, width: usize, height: usize) -> Plane {
        let mut out = Plane::zeros(width, height);
        for y in 0..height {
            let sy = reflect(y, self.height);
            for x in 0..width {
                out.set(x, y, self.at(reflect(x, self.width), sy));
            }
        }
        out
    }

    pub fn crop(&self, width: usize, height: usize) -> Plane {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            data.extend_from_slice(&self.data[y * self.width..y * self.width + width]);
        }
        Plane::new(width, height, data)
    }
}

/// Mirror index `i` into `0..n` (`n-1, n-2, ...` past the end).
pub(crate) fn reflect(i: usize, n: usize) -> usize {
    let period = 2 * n;
    let m = i % period;
    if m < n {
        m
    } else {
        period - 1 - m
    }
}

/// How transforms treat dimensions that don't fit the block size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DimPolicy {
    /// Symmetric-pad up to the next multiple, crop back on inverse.
    #[default]
    Pad,
    /// Reject non-conforming dimensions.
    Strict,
}

fn padded_dims(
    width: usize,
    height: usize,
    multiple: usize,
    policy: DimPolicy,
) -> Result<(usize, usize)> {
    if policy == DimPolicy::Strict {
        if width % multiple != 0 {
            return Err(Error::Dimensions {
                dim: "width",
                value: width,
                multiple,
            });
        }
        if height % multiple != 0 {
            return Err(Error::Dimensions {
                dim: "height",
                value: height,
                multiple,
            });
        }
    }
    Ok((width.div_ceil(multiple) * multiple, height.div_ceil(multiple) * multiple))
}

/// Orthonormal 8-point DCT-II matrix, `C[k][n] = a_k cos((2n+1)kπ/16)`.
pub fn dct8_matrix() -> &'static [[f64; 8]; 8] {
    static M: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    M.get_or_init(|| {
        let mut m = [[0.0; 8]; 8];
        for (k, row) in m.iter_mut().enumerate() {
            let a = if k == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
            for (n, v) in row.iter_mut().enumerate() {
                *v = a * (((2 * n + 1) * k) as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        m
    })
}

/// `out = C · block · Cᵀ` on a row-major 8×8 block.
pub(crate) fn dct8_block(block: &[f64; 64]) -> [f64; 64] {
    let c = dct8_matrix();
    let mut tmp = [0.0; 64];
    // rows: tmp[r][k] = Σ_n block[r][n] C[k][n]
    for r in 0..8 {
        for k in 0..8 {
            let mut s = 0.0;
            for n in 0..8 {
                s += block[r * 8 + n] * c[k][n];
            }
            tmp[r * 8 + k] = s;
        }
    }
    let mut out = [0.0; 64];
    for k in 0..8 {
        for col in 0..8 {
            let mut s = 0.0;
            for r in 0..8 {
                s += c[k][r] * tmp[r * 8 + col];
            }
            out[k * 8 + col] = s;
        }
    }
    out
}

/// `out = Cᵀ · coeffs · C`.
pub(crate) fn idct8_block(coeffs: &[f64; 64]) -> [f64; 64] {
    let c = dct8_matrix();
    let mut tmp = [0.0; 64];
    for r in 0..8 {
        for n in 0..8 {
            let mut s = 0.0;
            for k in 0..8 {
                s += coeffs[r * 8 + k] * c[k][n];
            }
            tmp[r * 8 + n] = s;
        }
    }
    let mut out = [0.0; 64];
    for m in 0..8 {
        for col in 0..8 {
            let mut s = 0.0;
            for k in 0..8 {
                s += c[k][m] * tmp[k * 8 + col];
            }
            out[m * 8 + col] = s;
        }
    }
    out
}

/// Block-DCT coefficients. Coefficients are stored block by block: block
/// `(bx, by)` occupies `coeffs[(by * blocks_x + bx) * 64 ..][..64]` in
/// row-major `(v, u)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct DctBlocks {
    blocks_x: usize,
    blocks_y: usize,
    orig_width: usize,
    orig_height: usize,
    coeffs: Vec<f64>,
}

impl DctBlocks {
    pub fn blocks_x(&self) -> usize {
        self.blocks_x
    }

    pub fn blocks_y(&self) -> usize {
        self.blocks_y
    }

    pub fn block_count(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    pub fn orig_dims(&self) -> (usize, usize) {
        (self.orig_width, self.orig_height)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn block(&self, index: usize) -> &[f64] {
        &self.coeffs[index * 64..(index + 1) * 64]
    }

    pub fn block_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.coeffs[index * 64..(index + 1) * 64]
    }
}

pub fn block_dct8(plane: &Plane, policy: DimPolicy) -> Result<DctBlocks> {
    let (pw, ph) = padded_dims(plane.width(), plane.height(), 8, policy)?;
    let padded;
    let src = if (pw, ph) == (plane.width(), plane.height()) {
        plane
    } else {
        padded = plane.pad_symmetric(pw, ph);
        &padded
    };
    let (bx_n, by_n) = (pw / 8, ph / 8);
    let mut coeffs = Vec::with_capacity(pw * ph);
    let mut block = [0.0; 64];
    for by in 0..by_n {
        for bx in 0..bx_n {
            for r in 0..8 {
                let row = (by * 8 + r) * pw + bx * 8;
                block[r * 8..r * 8 + 8].copy_from_slice(&src.data()[row..row + 8]);
            }
            coeffs.extend_from_slice(&dct8_block(&block));
        }
    }
    Ok(DctBlocks {
        blocks_x: bx_n,
        blocks_y: by_n,
        orig_width: plane.width(),
        orig_height: plane.height(),
        coeffs,
    })
}

pub fn block_idct8(blocks: &DctBlocks) -> Plane {
    let (pw, ph) = (blocks.blocks_x * 8, blocks.blocks_y * 8);
    let mut out = Plane::zeros(pw, ph);
    let mut coeffs = [0.0; 64];
    for by in 0..blocks.blocks_y {
        for bx in 0..blocks.blocks_x {
            coeffs.copy_from_slice(blocks.block(by * blocks.blocks_x + bx));
            let px = idct8_block(&coeffs);
            for r in 0..8 {
                let row = (by * 8 + r) * pw + bx * 8;
                out.data_mut()[row..row + 8].copy_from_slice(&px[r * 8..r * 8 + 8]);
            }
        }
    }
    if (pw, ph) == (blocks.orig_width, blocks.orig_height) {
        out
    } else {
        out.crop(blocks.orig_width, blocks.orig_height)
    }
}

/// Single-level orthonormal Haar subbands, each half the (padded) size.
///
/// `ll = (a+b+c+d)/2`, `hl = (a-b+c-d)/2` (horizontal detail),
/// `lh = (a+b-c-d)/2` (vertical detail), `hh = (a-b-c+d)/2` for the 2×2
/// group `[[a, b], [c, d]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarSubbands {
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
    orig_width: usize,
    orig_height: usize,
}

impl HaarSubbands {
    pub fn orig_dims(&self) -> (usize, usize) {
        (self.orig_width, self.orig_height)
    }

    pub fn energy(&self) -> f64 {
        self.ll.energy() + self.lh.energy() + self.hl.energy() + self.hh.energy()
    }
}

pub fn haar_dwt(plane: &Plane, policy: DimPolicy) -> Result<HaarSubbands> {
    let (pw, ph) = padded_dims(plane.width(), plane.height(), 2, policy)?;
    let padded;
    let src = if (pw, ph) == (plane.width(), plane.height()) {
        plane
    } else {
        padded = plane.pad_symmetric(pw, ph);
        &padded
    };
    let (hw, hh_) = (pw / 2, ph / 2);
    let mut ll = Plane::zeros(hw, hh_);
    let mut lh = Plane::zeros(hw, hh_);
    let mut hl = Plane::zeros(hw, hh_);
    let mut hh = Plane::zeros(hw, hh_);
    for y in 0..hh_ {
        for x in 0..hw {
            let a = src.at(2 * x, 2 * y);
            let b = src.at(2 * x + 1, 2 * y);
            let c = src.at(2 * x, 2 * y + 1);
            let d = src.at(2 * x + 1, 2 * y + 1);
            ll.set(x, y, (a + b + c + d) * 0.5);
            hl.set(x, y, (a - b + c - d) * 0.5);
            lh.set(x, y, (a + b - c - d) * 0.5);
            hh.set(x, y, (a - b - c + d) * 0.5);
        }
    }
    Ok(HaarSubbands {
        ll,
        lh,
        hl,
        hh,
        orig_width: plane.width(),
        orig_height: plane.height(),
    })
}

pub fn haar_idwt(bands: &HaarSubbands) -> Plane {
    let (hw, hh_) = (bands.ll.width(), bands.ll.height());
    let mut out = Plane::zeros(hw * 2, hh_ * 2);
    for y in 0..hh_ {
        for x in 0..hw {
            let s = bands.ll.at(x, y);
            let h = bands.hl.at(x, y);
            let v = bands.lh.at(x, y);
            let g = bands.hh.at(x, y);
            out.set(2 * x, 2 * y, (s + h + v + g) * 0.5);
            out.set(2 * x + 1, 2 * y, (s - h + v - g) * 0.5);
            out.set(2 * x, 2 * y + 1, (s + h - v - g) * 0.5);
            out.set(2 * x + 1, 2 * y + 1, (s - h - v + g) * 0.5);
        }
    }
    if (hw * 2, hh_ * 2) == (bands.orig_width, bands.orig_height) {
        out
    } else {
        out.crop(bands.orig_width, bands.orig_height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Plane::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect())
    }

    /// Direct O(n⁴) definition of the orthonormal 2-D DCT-II.
    fn dct2_bruteforce(block: &[f64]) -> Vec<f64> {
        let pi = std::f64::consts::PI;
        let a = |k: usize| if k == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
        let mut out = vec![0.0; 64];
        for v in 0..8 {
            for u in 0..8 {
                let mut s = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        s += block[y * 8 + x]
                            * (((2 * x + 1) * u) as f64 * pi / 16.0).cos()
                            * (((2 * y + 1) * v) as f64 * pi / 16.0).cos();
                    }
                }
                out[v * 8 + u] = a(u) * a(v) * s;
            }
        }
        out
    }

    #[test]
    fn constant_block_is_dc_only() {
        let p = Plane::new(8, 8, vec![0.3; 64]);
        let d = block_dct8(&p, DimPolicy::Strict).unwrap();
        assert!((d.coeffs()[0] - 8.0 * 0.3).abs() < 1e-12);
        assert!(d.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn dct_matches_bruteforce_definition() {
        for seed in 0..5 {
            let p = random_plane(8, 8, seed);
            let d = block_dct8(&p, DimPolicy::Strict).unwrap();
            let oracle = dct2_bruteforce(p.data());
            for (a, b) in d.coeffs().iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn strict_rejects_and_pad_crops() {
        let p = random_plane(13, 10, 1);
        assert!(matches!(
            block_dct8(&p, DimPolicy::Strict),
            Err(Error::Dimensions { dim: "width", .. })
        ));
        let d = block_dct8(&p, DimPolicy::Pad).unwrap();
        assert_eq!((d.blocks_x(), d.blocks_y()), (2, 2));
        let back = block_idct8(&d);
        assert_eq!((back.width(), back.height()), (13, 10));
        for (a, b) in back.data().iter().zip(p.data()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(haar_dwt(&random_plane(5, 4, 2), DimPolicy::Strict).is_err());
    }

    #[test]
    fn haar_constant_image() {
        let p = Plane::new(4, 4, vec![0.25; 16]);
        let b = haar_dwt(&p, DimPolicy::Strict).unwrap();
        assert!(b.ll.data().iter().all(|v| (v - 0.5).abs() < 1e-12));
        for band in [&b.lh, &b.hl, &b.hh] {
            assert!(band.data().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn haar_hand_computed_fixture() {
        // Filter taps (1/√2, 1/√2) applied along rows then columns give a
        // factor 1/2 on each 2×2 group.
        #[rustfmt::skip]
        let p = Plane::new(4, 4, vec![
            1.0, 3.0, 0.0, 0.0,
            5.0, 7.0, 2.0, 2.0,
            0.0, 1.0, 4.0, 0.0,
            1.0, 0.0, 0.0, 4.0,
        ]);
        let b = haar_dwt(&p, DimPolicy::Strict).unwrap();
        // group (0,0) = [[1,3],[5,7]]
        assert_eq!(b.ll.at(0, 0), 8.0);
        assert_eq!(b.hl.at(0, 0), -2.0);
        assert_eq!(b.lh.at(0, 0), -4.0);
        assert_eq!(b.hh.at(0, 0), 0.0);
        // group (1,0) = [[0,0],[2,2]]
        assert_eq!(b.ll.at(1, 0), 2.0);
        assert_eq!(b.hl.at(1, 0), 0.0);
        assert_eq!(b.lh.at(1, 0), -2.0);
        assert_eq!(b.hh.at(1, 0), 0.0);
        // group (0,1) = [[0,1],[1,0]]
        assert_eq!(b.ll.at(0, 1), 1.0);
        assert_eq!(b.hl.at(0, 1), 0.0);
        assert_eq!(b.lh.at(0, 1), 0.0);
        assert_eq!(b.hh.at(0, 1), -1.0);
        // group (1,1) = [[4,0],[0,4]]
        assert_eq!(b.ll.at(1, 1), 4.0);
        assert_eq!(b.hl.at(1, 1), 0.0);
        assert_eq!(b.lh.at(1, 1), 0.0);
        assert_eq!(b.hh.at(1, 1), 4.0);
    }

    proptest! {
        #[test]
        fn transforms_invert_and_preserve_energy(
            w8 in 1usize..5, h8 in 1usize..5, seed in any::<u64>()
        ) {
            let p = random_plane(w8 * 8, h8 * 8, seed);
            let d = block_dct8(&p, DimPolicy::Strict).unwrap();
            let e: f64 = d.coeffs().iter().map(|c| c * c).sum();
            prop_assert!((e - p.energy()).abs() < 1e-6);
            let back = block_idct8(&d);
            for (a, b) in back.data().iter().zip(p.data()) {
                prop_assert!((a - b).abs() < 1e-6);
            }

            let bands = haar_dwt(&p, DimPolicy::Strict).unwrap();
            prop_assert!((bands.energy() - p.energy()).abs() < 1e-6);
            let back = haar_idwt(&bands);
            for (a, b) in back.data().iter().zip(p.data()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
