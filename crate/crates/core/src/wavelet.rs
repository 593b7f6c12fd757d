//! Orthonormal filter banks and the periodized separable 2-D DWT.
//!
//! Subband classes follow the tensor type of the level-`j` atom:
//!
//! | u | along x1 | along x2 |
//! |---|----------|----------|
//! | 1 | h | h |
//! | 2 | h | g |
//! | 3 | g | h |
//! | 4 | g | g (scaling block, level `J` only) |
//!
//! Filters act by circular correlation, `a[k] = sum_l g[l] x[(2k + l) mod N]`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::grid::{check_side, Image};

/// Scaling filter `g` and wavelet filter `h` of an orthonormal bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub name: String,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl FilterPair {
    /// Build from the scaling filter; `h_l = (-1)^l g_{L-1-l}`.
    pub fn from_scaling(name: &str, g: Vec<f64>) -> Self {
        let len = g.len();
        let h = (0..len)
            .map(|l| if l % 2 == 0 { g[len - 1 - l] } else { -g[len - 1 - l] })
            .collect();
        FilterPair {
            name: name.to_string(),
            g,
            h,
        }
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

/// Daubechies least-asymmetric 8-tap scaling filter.
const LA8: [f64; 8] = [
    -0.075_765_714_789_273_33,
    -0.029_635_527_645_998_51,
    0.497_618_667_632_015_45,
    0.803_738_751_805_916_1,
    0.297_857_795_605_277_36,
    -0.099_219_543_576_847_22,
    -0.012_603_967_262_037_833,
    0.032_223_100_604_042_7,
];

/// Daubechies extremal-phase 4-tap scaling filter.
fn d4() -> Vec<f64> {
    let s3 = 3f64.sqrt();
    let d = 4.0 * 2f64.sqrt();
    vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
}

/// Look up a named bank: `la8`, `haar` or `d4`.
pub fn filter_bank(name: &str) -> Result<FilterPair> {
    let g = match name.to_ascii_lowercase().as_str() {
        "la8" | "sym4" => LA8.to_vec(),
        "haar" => vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        "d4" | "db2" => d4(),
        other => {
            return Err(Error::invalid(format!(
                "unknown wavelet '{other}' (expected la8, haar or d4)"
            )))
        }
    };
    Ok(FilterPair::from_scaling(&name.to_ascii_lowercase(), g))
}

/// Full set of DWT coefficients of an `n x n` image to depth `levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    n: usize,
    levels: usize,
    /// `details[j - 1][u - 1]`, each `side(j)^2` values row-major.
    details: Vec<[Vec<f64>; 3]>,
    scaling: Vec<f64>,
}

pub const PYRAMID_MAGIC: &[u8; 4] = b"HYPP";

impl Pyramid {
    pub fn zeros(n: usize, levels: usize) -> Result<Self> {
        check_side(n)?;
        check_levels(n, levels)?;
        let details = (1..=levels)
            .map(|j| {
                let m = (n >> j) * (n >> j);
                [vec![0.0; m], vec![0.0; m], vec![0.0; m]]
            })
            .collect();
        let s = n >> levels;
        Ok(Pyramid {
            n,
            levels,
            details,
            scaling: vec![0.0; s * s],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Side length `N_j = n / 2^j` of level-`j` blocks.
    pub fn side(&self, j: usize) -> usize {
        self.n >> j
    }

    /// Detail block for `j in 1..=J`, `u in 1..=3`.
    pub fn detail(&self, j: usize, u: usize) -> &[f64] {
        &self.details[j - 1][u - 1]
    }

    pub fn detail_mut(&mut self, j: usize, u: usize) -> &mut [f64] {
        &mut self.details[j - 1][u - 1]
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn scaling_mut(&mut self) -> &mut [f64] {
        &mut self.scaling
    }

    /// Block for class `u in 1..=4`; `u = 4` is the scaling block (requires `j = J`).
    pub fn block(&self, j: usize, u: usize) -> &[f64] {
        if u == 4 {
            debug_assert_eq!(j, self.levels);
            &self.scaling
        } else {
            self.detail(j, u)
        }
    }

    pub fn same_shape(&self, other: &Pyramid) -> bool {
        self.n == other.n && self.levels == other.levels
    }

    pub fn coefficient_count(&self) -> usize {
        self.details
            .iter()
            .map(|b| b.iter().map(Vec::len).sum::<usize>())
            .sum::<usize>()
            + self.scaling.len()
    }

    pub fn detail_count(&self) -> usize {
        self.coefficient_count() - self.scaling.len()
    }

    pub fn energy(&self) -> f64 {
        self.detail_energy() + self.scaling.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn detail_energy(&self) -> f64 {
        self.details
            .iter()
            .flat_map(|b| b.iter())
            .flat_map(|v| v.iter())
            .map(|v| v * v)
            .sum()
    }

    /// All detail coefficients, level by level, `u = 1..3`.
    pub fn detail_values(&self) -> impl Iterator<Item = &f64> {
        self.details.iter().flat_map(|b| b.iter()).flat_map(|v| v.iter())
    }

    pub fn detail_values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.details
            .iter_mut()
            .flat_map(|b| b.iter_mut())
            .flat_map(|v| v.iter_mut())
    }

    /// Every coefficient in serialization order.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.detail_values().chain(self.scaling.iter())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Pyramid, b: f64) -> Result<Pyramid> {
        if !self.same_shape(other) {
            return Err(Error::shape("pyramids differ in side or depth"));
        }
        let mut out = self.clone();
        for (x, y) in out
            .details
            .iter_mut()
            .flat_map(|b| b.iter_mut())
            .flat_map(|v| v.iter_mut())
            .zip(other.detail_values())
        {
            *x = a * *x + b * y;
        }
        for (x, y) in out.scaling.iter_mut().zip(&other.scaling) {
            *x = a * *x + b * y;
        }
        Ok(out)
    }

    /// Serialize as `b"HYPP"`, `u32 n`, `u32 J`, then little-endian `f64`s for
    /// `j = 1..J`, `u = 1..3` row-major, then the scaling block.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.n * self.n);
        out.extend_from_slice(PYRAMID_MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.levels as u32).to_le_bytes());
        for v in self.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Pyramid> {
        if bytes.len() < 12 || &bytes[..4] != PYRAMID_MAGIC {
            return Err(Error::Format("missing HYPP header".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let levels = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut pyr = Pyramid::zeros(n, levels)?;
        let body = &bytes[12..];
        if body.len() != 8 * n * n {
            return Err(Error::Format(format!(
                "HYPP body holds {} bytes, expected {}",
                body.len(),
                8 * n * n
            )));
        }
        let mut it = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        for v in pyr.detail_values_mut() {
            *v = it.next().unwrap();
        }
        for v in pyr.scaling.iter_mut() {
            *v = it.next().unwrap();
        }
        Ok(pyr)
    }
}

fn check_levels(n: usize, levels: usize) -> Result<()> {
    let max = n.trailing_zeros() as usize;
    if levels == 0 || levels > max {
        return Err(Error::invalid(format!(
            "decomposition depth must lie in 1..={max} for side {n}, got {levels}"
        )));
    }
    Ok(())
}

fn analyze_1d(fp: &FilterPair, x: &[f64], lo: &mut [f64], hi: &mut [f64]) {
    let n = x.len();
    let mask = n - 1;
    for k in 0..n / 2 {
        let mut a = 0.0;
        let mut d = 0.0;
        for (l, (&g, &h)) in fp.g.iter().zip(&fp.h).enumerate() {
            let v = x[(2 * k + l) & mask];
            a += g * v;
            d += h * v;
        }
        lo[k] = a;
        hi[k] = d;
    }
}

fn synthesize_1d(fp: &FilterPair, lo: &[f64], hi: &[f64], x: &mut [f64]) {
    let n = x.len();
    let mask = n - 1;
    x.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..n / 2 {
        let (a, d) = (lo[k], hi[k]);
        for (l, (&g, &h)) in fp.g.iter().zip(&fp.h).enumerate() {
            x[(2 * k + l) & mask] += g * a + h * d;
        }
    }
}

/// One analysis level on an `m x m` block. Returns `(gg, hg, gh, hh)` blocks.
fn analyze_level(fp: &FilterPair, block: &[f64], m: usize) -> [Vec<f64>; 4] {
    let half = m / 2;
    // along x2, within each row
    let mut row_lo = vec![0.0; m * half];
    let mut row_hi = vec![0.0; m * half];
    for r in 0..m {
        analyze_1d(
            fp,
            &block[r * m..(r + 1) * m],
            &mut row_lo[r * half..(r + 1) * half],
            &mut row_hi[r * half..(r + 1) * half],
        );
    }
    // along x1, down each column
    let mut out = [
        vec![0.0; half * half],
        vec![0.0; half * half],
        vec![0.0; half * half],
        vec![0.0; half * half],
    ];
    let mut col = vec![0.0; m];
    let mut lo = vec![0.0; half];
    let mut hi = vec![0.0; half];
    for (src, (lo_idx, hi_idx)) in [(&row_lo, (0usize, 1usize)), (&row_hi, (2, 3))] {
        for c in 0..half {
            for r in 0..m {
                col[r] = src[r * half + c];
            }
            analyze_1d(fp, &col, &mut lo, &mut hi);
            for k in 0..half {
                out[lo_idx][k * half + c] = lo[k];
                out[hi_idx][k * half + c] = hi[k];
            }
        }
    }
    // out = [g1g2, h1g2, g1h2, h1h2]
    out
}

fn synthesize_level(
    fp: &FilterPair,
    gg: &[f64],
    hg: &[f64],
    gh: &[f64],
    hh: &[f64],
    half: usize,
) -> Vec<f64> {
    let m = 2 * half;
    let mut row_lo = vec![0.0; m * half];
    let mut row_hi = vec![0.0; m * half];
    let mut lo = vec![0.0; half];
    let mut hi = vec![0.0; half];
    let mut col = vec![0.0; m];
    for (dst, a, d) in [(&mut row_lo, gg, hg), (&mut row_hi, gh, hh)] {
        for c in 0..half {
            for k in 0..half {
                lo[k] = a[k * half + c];
                hi[k] = d[k * half + c];
            }
            synthesize_1d(fp, &lo, &hi, &mut col);
            for r in 0..m {
                dst[r * half + c] = col[r];
            }
        }
    }
    let mut out = vec![0.0; m * m];
    for r in 0..m {
        synthesize_1d(
            fp,
            &row_lo[r * half..(r + 1) * half],
            &row_hi[r * half..(r + 1) * half],
            &mut out[r * m..(r + 1) * m],
        );
    }
    out
}

/// Forward periodized DWT to depth `levels`.
pub fn dwt2(img: &Image, fp: &FilterPair, levels: usize) -> Result<Pyramid> {
    let n = img.n();
    check_levels(n, levels)?;
    let mut details = Vec::with_capacity(levels);
    let mut approx = img.data().to_vec();
    let mut m = n;
    for _ in 0..levels {
        let [gg, hg, gh, hh] = analyze_level(fp, &approx, m);
        details.push([hh, hg, gh]);
        approx = gg;
        m /= 2;
    }
    Ok(Pyramid {
        n,
        levels,
        details,
        scaling: approx,
    })
}

/// Inverse of [`dwt2`].
pub fn idwt2(pyr: &Pyramid, fp: &FilterPair) -> Result<Image> {
    check_side(pyr.n)?;
    check_levels(pyr.n, pyr.levels)?;
    if pyr.details.len() != pyr.levels {
        return Err(Error::shape("pyramid level count does not match its depth"));
    }
    for j in 1..=pyr.levels {
        let m = pyr.side(j) * pyr.side(j);
        if pyr.details[j - 1].iter().any(|b| b.len() != m) {
            return Err(Error::shape(format!("level {j} subband has wrong size")));
        }
    }
    let s = pyr.side(pyr.levels);
    if pyr.scaling.len() != s * s {
        return Err(Error::shape("scaling block has wrong size"));
    }
    let mut approx = pyr.scaling.clone();
    for j in (1..=pyr.levels).rev() {
        let [hh, hg, gh] = &pyr.details[j - 1];
        approx = synthesize_level(fp, &approx, hg, gh, hh, pyr.side(j));
    }
    Ok(Image::from_raw(pyr.n, approx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_blobs, white_noise, NoiseSpec};
    use approx::assert_relative_eq;

    // Published LA(8) table (Percival & Walden, 1993 edition of their Table 109).
    const LA8_TABLE: [f64; 8] = [
        -0.075_765_714_789_340_7,
        -0.029_635_527_645_954_1,
        0.497_618_667_632_457_8,
        0.803_738_751_805_216_3,
        0.297_857_795_605_542_2,
        -0.099_219_543_576_935_4,
        -0.012_603_967_262_261_2,
        0.032_223_100_604_071_3,
    ];

    fn check_invariants(fp: &FilterPair) {
        let sum_g: f64 = fp.g.iter().sum();
        let sum_h: f64 = fp.h.iter().sum();
        // the least-asymmetric coefficients are only tabulated to ~1e-12
        let tol = 1e-11;
        assert!((sum_g - 2f64.sqrt()).abs() < tol, "{} sum g {sum_g}", fp.name);
        assert!(sum_h.abs() < tol, "{} sum h {sum_h}", fp.name);
        assert!((fp.g.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < tol);
        assert!((fp.h.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < tol);
        let len = fp.len();
        for l in 0..len {
            let s = if l % 2 == 0 { 1.0 } else { -1.0 };
            assert!((fp.h[l] - s * fp.g[len - 1 - l]).abs() < 1e-12);
        }
        // even-shift orthogonality
        for shift in (2..len).step_by(2) {
            let c: f64 = (0..len - shift).map(|l| fp.g[l] * fp.g[l + shift]).sum();
            assert!(c.abs() < tol, "{} shift {shift}: {c}", fp.name);
        }
    }

    #[test]
    fn banks_satisfy_invariants() {
        for name in ["haar", "d4", "la8"] {
            check_invariants(&filter_bank(name).unwrap());
        }
        assert!(filter_bank("db17").is_err());
    }

    #[test]
    fn haar_coefficients() {
        let fp = filter_bank("haar").unwrap();
        assert_eq!(fp.g, vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert_eq!(fp.h, vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2]);
    }

    #[test]
    fn la8_matches_published_table() {
        let fp = filter_bank("la8").unwrap();
        for (a, b) in fp.g.iter().zip(LA8_TABLE) {
            // the table is printed to about 12 significant digits
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_image() {
        let c = 1.75;
        let img = Image::from_fn(32, |_, _| c).unwrap();
        for name in ["haar", "d4", "la8"] {
            let fp = filter_bank(name).unwrap();
            let pyr = dwt2(&img, &fp, 3).unwrap();
            assert!(pyr.detail_values().all(|v| v.abs() < 1e-10), "{name}");
            for &v in pyr.scaling() {
                assert_relative_eq!(v, 8.0 * c, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn count_parseval_roundtrip() {
        let img = white_noise(64, &NoiseSpec::new(1.0, 5).unwrap()).unwrap();
        let fp = filter_bank("la8").unwrap();
        for levels in 1..=6 {
            let pyr = dwt2(&img, &fp, levels).unwrap();
            assert_eq!(pyr.coefficient_count(), 64 * 64);
            assert!((pyr.energy() / img.energy() - 1.0).abs() < 1e-9);
            let back = idwt2(&pyr, &fp).unwrap();
            let err = back.combine(1.0, &img, -1.0).unwrap().max_abs();
            assert!(err < 1e-10 * img.max_abs());
        }
        assert!(dwt2(&img, &fp, 0).is_err());
        assert!(dwt2(&img, &fp, 7).is_err());
    }

    #[test]
    fn zero_pyramid_and_unit_atom() {
        let fp = filter_bank("la8").unwrap();
        let zero = Pyramid::zeros(32, 3).unwrap();
        assert_eq!(idwt2(&zero, &fp).unwrap().energy(), 0.0);
        let mut p = zero.clone();
        p.detail_mut(1, 1)[0] = 1.0;
        let atom = idwt2(&p, &fp).unwrap();
        assert!((atom.energy() - 1.0).abs() < 1e-10);
        // the atom's analysis recovers the single coefficient
        let back = dwt2(&atom, &fp, 3).unwrap();
        assert!((back.detail(1, 1)[0] - 1.0).abs() < 1e-10);
        assert!(back.combine(1.0, &p, -1.0).unwrap().energy() < 1e-20);
    }

    #[test]
    fn subband_orientation() {
        // variation along x1, constant along x2: energy must land in u = 2 (h along x1)
        let img = Image::from_fn(32, |x1, _| if x1 % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let pyr = dwt2(&img, &filter_bank("haar").unwrap(), 1).unwrap();
        let e = |u| pyr.detail(1, u).iter().map(|v| v * v).sum::<f64>();
        assert!(e(2) > 0.99 * img.energy());
        assert!(e(1) < 1e-20 && e(3) < 1e-20);
    }

    #[test]
    fn malformed_pyramid_rejected() {
        let fp = filter_bank("haar").unwrap();
        let mut p = Pyramid::zeros(16, 2).unwrap();
        p.scaling.push(0.0);
        assert!(idwt2(&p, &fp).is_err());
    }

    #[test]
    fn shift_by_period_permutes_indices() {
        let img = make_blobs(1.0, 64).unwrap();
        let fp = filter_bank("la8").unwrap();
        let levels = 3;
        let p0 = dwt2(&img, &fp, levels).unwrap();
        let p1 = dwt2(&img.circshift(8, 0), &fp, levels).unwrap();
        for j in 1..=levels {
            let side = p0.side(j);
            let step = 8 >> j;
            for u in 1..=3 {
                for k1 in 0..side {
                    for k2 in 0..side {
                        let a = p1.detail(j, u)[((k1 + step) % side) * side + k2];
                        let b = p0.detail(j, u)[k1 * side + k2];
                        assert!((a - b).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn linearity() {
        let fp = filter_bank("d4").unwrap();
        let x = make_blobs(1.0, 32).unwrap();
        let y = white_noise(32, &NoiseSpec::new(1.0, 1).unwrap()).unwrap();
        let lhs = dwt2(&x.combine(2.5, &y, -0.75).unwrap(), &fp, 3).unwrap();
        let rhs = dwt2(&x, &fp, 3)
            .unwrap()
            .combine(2.5, &dwt2(&y, &fp, 3).unwrap(), -0.75)
            .unwrap();
        let diff = lhs.combine(1.0, &rhs, -1.0).unwrap().energy().sqrt();
        assert!(diff < 1e-10 * lhs.energy().sqrt());
    }

    #[test]
    fn white_noise_subband_variances() {
        let img = white_noise(256, &NoiseSpec::new(2.0, 17).unwrap()).unwrap();
        let pyr = dwt2(&img, &filter_bank("la8").unwrap(), 2).unwrap();
        for j in 1..=2 {
            for u in 1..=3 {
                let b = pyr.detail(j, u);
                let v = b.iter().map(|x| x * x).sum::<f64>() / b.len() as f64;
                assert!((v / 4.0 - 1.0).abs() < 0.05, "j{j} u{u} var {v}");
            }
        }
    }

    #[test]
    fn pyramid_bytes_roundtrip() {
        let img = make_blobs(1.0, 16).unwrap();
        let pyr = dwt2(&img, &filter_bank("la8").unwrap(), 2).unwrap();
        let bytes = pyr.to_bytes();
        assert_eq!(&bytes[..4], b"HYPP");
        assert_eq!(bytes.len(), 12 + 8 * 256);
        // first value after header is W_{1,1,(0,0)}
        let first = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
        assert_eq!(first, pyr.detail(1, 1)[0]);
        assert_eq!(Pyramid::from_bytes(&bytes).unwrap(), pyr);
        assert!(Pyramid::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    }
}
