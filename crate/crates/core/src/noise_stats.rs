//! Null distributions of joint magnitudes and their Monte Carlo checks.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{white_noise, NoiseSpec};
use crate::par;
use crate::quad::{integrate, QuadConfig};
use crate::quadrature::{Family, Fft2};
use crate::rng::derive_seed;
use crate::shrinkage::{magnitude, universal_threshold, Method};
use crate::special::{dawson, gamma_ur, norm_pdf};
use crate::wavelet::{dwt2, filter_bank, Pyramid};

/// Variance fraction carried by the first Riesz component in each subband
/// class; the second component carries the complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszVarianceTable {
    pub a: [f64; 4],
}

impl RieszVarianceTable {
    /// Fraction for subband type `u` in `1..=4`.
    pub fn get(&self, u: usize) -> f64 {
        self.a[u - 1]
    }
}

pub fn riesz_variance_constants() -> RieszVarianceTable {
    let a2 = 0.5 + 2.0 * 0.5f64.atan() - 0.5 * 2.0f64.atan();
    RieszVarianceTable {
        a: [0.5, a2, 1.0 - a2, 0.5],
    }
}

/// Squared frequency response at `f` of the level-`level` equivalent filter
/// ending in `last` (cascade of `lowpass` at dyadic dilations).
fn cascade_response(lowpass: &[f64], last: &[f64], level: usize, f: f64) -> f64 {
    let resp = |taps: &[f64], f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &t) in taps.iter().enumerate() {
            let w = 2.0 * std::f64::consts::PI * f * k as f64;
            re += t * w.cos();
            im -= t * w.sin();
        }
        re * re + im * im
    };
    let mut out = 1.0;
    for k in 0..level - 1 {
        out *= resp(lowpass, f * (1u64 << k) as f64);
    }
    out * resp(last, f * (1u64 << (level - 1)) as f64)
}

/// Riesz variance fractions for a real filter bank at one level, including
/// the leakage of the filters outside their nominal octave. Tend to
/// [`riesz_variance_constants`] as the filters approach ideal band-passes.
pub fn riesz_variance_constants_for(wavelet: &str, level: usize) -> Result<RieszVarianceTable> {
    if level == 0 || level > 12 {
        return Err(Error::invalid(format!("level must lie in 1..=12, got {level}")));
    }
    let fp = filter_bank(wavelet)?;
    let m = 512usize.max(64 << level);
    let freqs: Vec<f64> = (0..m).map(|k| k as f64 / m as f64 - 0.5).collect();
    let lo: Vec<f64> = freqs.iter().map(|&f| cascade_response(&fp.g, &fp.g, level, f)).collect();
    let hi: Vec<f64> = freqs.iter().map(|&f| cascade_response(&fp.g, &fp.h, level, f)).collect();
    let frac = |a: &[f64], b: &[f64]| {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &f1) in freqs.iter().enumerate() {
            for (k, &f2) in freqs.iter().enumerate() {
                let w = a[i] * b[k];
                let r = f1 * f1 + f2 * f2;
                // The origin is a null set in the continuum; split it evenly.
                num += if r > 0.0 { w * f1 * f1 / r } else { 0.5 * w };
                den += w;
            }
        }
        num / den
    };
    Ok(RieszVarianceTable {
        a: [frac(&hi, &hi), frac(&hi, &lo), frac(&lo, &hi), frac(&lo, &lo)],
    })
}

fn check_nonnegative(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("argument must be >= 0, got {t}")))
    }
}

/// Density of `Z1^2 + (Z2^2 + Z3^2)/2`, the normalized Riesz magnitude in
/// the symmetric subbands.
pub fn t1_pdf(t: f64) -> Result<f64> {
    check_nonnegative(t)?;
    let w = (0.5 * t).sqrt();
    // e^{-t} int_0^w e^{s^2} ds = e^{-t/2} F(w)
    Ok(2.0 / PI.sqrt() * (-0.5 * t).exp() * dawson(w))
}

/// Distribution function of the density above, by quadrature in `s = sqrt(t)`.
pub fn t1_cdf(t: f64) -> Result<f64> {
    check_nonnegative(t)?;
    let cfg = QuadConfig::with_tol(1e-13, 1e-12);
    let est = integrate(
        |s| 2.0 * s * t1_pdf(s * s).unwrap_or(0.0),
        0.0,
        t.sqrt(),
        &cfg,
    );
    Ok(est.value.min(1.0))
}

/// Upper tail from the decomposition `P(Z1^2 > t) + f(t)`, accurate far out.
pub fn t1_sf(t: f64) -> Result<f64> {
    Ok(gamma_ur(0.5, 0.5 * t) + t1_pdf(t)?)
}

/// `P(chi^2_4 > x)`.
pub fn chi4_tail(x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok((-0.5 * x).exp() * (1.0 + 0.5 * x))
}

/// `P(a Z2^2 + (1-a) Z3^2 > y)` in polar form.
fn two_term_tail(y: f64, a: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let b = 1.0 - a;
    let cfg = QuadConfig::with_tol(1e-12, 1e-11);
    let est = integrate(
        |th| {
            let (c, s) = (th.cos(), th.sin());
            (-y / (2.0 * (a * c * c + b * s * s))).exp()
        },
        0.0,
        FRAC_PI_2,
        &cfg,
    );
    est.value * 2.0 / PI
}

/// `P(Z1^2 + a Z2^2 + (1-a) Z3^2 > x)` for a weight `a` in `(0, 1)`.
pub fn mixture_tail(x: f64, a: f64) -> Result<f64> {
    check_nonnegative(x)?;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid(format!("mixture weight must lie in (0, 1), got {a}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    // condition on Z1 = sqrt(x) sin(t)
    let r = x.sqrt();
    let cfg = QuadConfig::with_tol(1e-12, 1e-10);
    let inner = integrate(
        |t| {
            let c = t.cos();
            norm_pdf(r * t.sin()) * two_term_tail(x * c * c, a) * r * c
        },
        0.0,
        FRAC_PI_2,
        &cfg,
    );
    Ok(gamma_ur(0.5, 0.5 * x) + 2.0 * inner.value)
}

/// Tail of the normalized Riesz magnitude `2 M^2 / sigma^2` in subband type `u`.
pub fn riesz_mixture_tail(x: f64, u: usize) -> Result<f64> {
    if !(1..=4).contains(&u) {
        return Err(Error::invalid(format!("subband type must be 1..4, got {u}")));
    }
    mixture_tail(x, riesz_variance_constants().get(u))
}

/// Pooled moments of `n^(s,u)`, the tuple of coefficients of the noise and its
/// quadrature components at one index, for one subband type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubbandMoments {
    pub u: usize,
    /// Coefficients pooled over replications and positions.
    pub count: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    /// Mean and variance of `(C+1) M^2 / sigma^2`.
    pub magnitude_mean: f64,
    pub magnitude_var: f64,
    /// Standard errors from the spread of per-replication estimates.
    pub mean_se: Vec<f64>,
    pub cov_se: Vec<Vec<f64>>,
    pub magnitude_mean_se: f64,
    pub magnitude_var_se: f64,
}

impl SubbandMoments {
    pub fn corr(&self, l: usize, m: usize) -> f64 {
        self.cov[l][m] / (self.cov[l][l] * self.cov[m][m]).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub family: Family,
    pub n: usize,
    pub level: usize,
    pub reps: usize,
    pub sigma: f64,
    /// Entries for `u = 1..=4`, the last being the level scaling block.
    pub subbands: Vec<SubbandMoments>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    pub level: usize,
    pub sigma: f64,
    pub wavelet: &'static str,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            level: 1,
            sigma: 1.0,
            wavelet: "la8",
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Accum {
    count: usize,
    sum: Vec<f64>,
    cross: Vec<Vec<f64>>,
    mag_sum: f64,
    mag_sq: f64,
}

impl Accum {
    fn new(dim: usize) -> Self {
        Accum {
            count: 0,
            sum: vec![0.0; dim],
            cross: vec![vec![0.0; dim]; dim],
            mag_sum: 0.0,
            mag_sq: 0.0,
        }
    }

    fn add(&mut self, v: &[f64], norm: f64) {
        self.count += 1;
        let mut e = 0.0;
        for l in 0..v.len() {
            self.sum[l] += v[l];
            e += v[l] * v[l];
            for m in 0..v.len() {
                self.cross[l][m] += v[l] * v[m];
            }
        }
        let mag = e * norm;
        self.mag_sum += mag;
        self.mag_sq += mag * mag;
    }

    fn merge(&mut self, o: &Accum) {
        self.count += o.count;
        for l in 0..self.sum.len() {
            self.sum[l] += o.sum[l];
            for m in 0..self.sum.len() {
                self.cross[l][m] += o.cross[l][m];
            }
        }
        self.mag_sum += o.mag_sum;
        self.mag_sq += o.mag_sq;
    }

    fn mean(&self) -> Vec<f64> {
        let c = self.count as f64;
        self.sum.iter().map(|s| s / c).collect()
    }

    fn cov(&self) -> Vec<Vec<f64>> {
        let c = self.count as f64;
        let mu = self.mean();
        let d = mu.len();
        (0..d)
            .map(|l| {
                (0..d)
                    .map(|m| (self.cross[l][m] - c * mu[l] * mu[m]) / (c - 1.0))
                    .collect()
            })
            .collect()
    }

    fn magnitude(&self) -> (f64, f64) {
        let c = self.count as f64;
        let m = self.mag_sum / c;
        (m, (self.mag_sq - c * m * m) / (c - 1.0))
    }
}

fn spread_se(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let k = values.clone().count();
    if k < 2 {
        return f64::NAN;
    }
    let kf = k as f64;
    let mean = values.clone().sum::<f64>() / kf;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (kf - 1.0);
    (var / kf).sqrt()
}

fn noise_components(
    method: Method,
    n: usize,
    sigma: f64,
    seed: u64,
    fft: &Fft2,
    fp: &crate::wavelet::FilterPair,
    levels: usize,
) -> Result<Vec<Pyramid>> {
    let noise = white_noise(n, &NoiseSpec::new(sigma, seed)?)?;
    method
        .components(&noise, fft)?
        .iter()
        .map(|c| dwt2(c, fp, levels))
        .collect()
}

fn family_method(family: Family) -> Method {
    match family {
        Family::Riesz => Method::R,
        Family::Hypercomplex => Method::H,
    }
}

/// Empirical moments of the quadrature noise tuple at level 1.
pub fn empirical_noise_moments(family: Family, n: usize, reps: usize, seed: u64) -> Result<MomentReport> {
    empirical_noise_moments_with(family, n, reps, seed, &MomentOptions::default())
}

/// Empirical moments at `opts.level`; coefficients of a subband are
/// exchangeable under the null, so every position is pooled.
pub fn empirical_noise_moments_with(
    family: Family,
    n: usize,
    reps: usize,
    seed: u64,
    opts: &MomentOptions,
) -> Result<MomentReport> {
    if n < 64 {
        return Err(Error::invalid(format!("moment estimation needs n >= 64, got {n}")));
    }
    if reps < 2 {
        return Err(Error::invalid(format!("moment estimation needs reps >= 2, got {reps}")));
    }
    let method = family_method(family);
    let dim = family.components() + 1;
    let norm = 1.0 / (opts.sigma * opts.sigma);
    let fp = filter_bank(opts.wavelet)?;
    let fft = Fft2::new(n);
    let per_rep = par::map_indexed(reps, |r| -> Result<Vec<Accum>> {
        let pyrs = noise_components(method, n, opts.sigma, derive_seed(seed, r as u64), &fft, &fp, opts.level)?;
        let mut out = Vec::with_capacity(4);
        let mut v = vec![0.0; dim];
        for u in 1..=4 {
            let mut acc = Accum::new(dim);
            let len = pyrs[0].block(opts.level, u).len();
            for k in 0..len {
                for (l, p) in pyrs.iter().enumerate() {
                    v[l] = p.block(opts.level, u)[k];
                }
                acc.add(&v, norm);
            }
            out.push(acc);
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut subbands = Vec::with_capacity(4);
    for ui in 0..4 {
        let mut total = Accum::new(dim);
        for rep in &per_rep {
            total.merge(&rep[ui]);
        }
        let covs: Vec<Vec<Vec<f64>>> = per_rep.iter().map(|r| r[ui].cov()).collect();
        let means: Vec<Vec<f64>> = per_rep.iter().map(|r| r[ui].mean()).collect();
        let mags: Vec<(f64, f64)> = per_rep.iter().map(|r| r[ui].magnitude()).collect();
        let (mm, mv) = total.magnitude();
        subbands.push(SubbandMoments {
            u: ui + 1,
            count: total.count,
            mean: total.mean(),
            cov: total.cov(),
            magnitude_mean: mm,
            magnitude_var: mv,
            mean_se: (0..dim).map(|l| spread_se(means.iter().map(|m| m[l]))).collect(),
            cov_se: (0..dim)
                .map(|l| (0..dim).map(|m| spread_se(covs.iter().map(|c| c[l][m]))).collect())
                .collect(),
            magnitude_mean_se: spread_se(mags.iter().map(|m| m.0)),
            magnitude_var_se: spread_se(mags.iter().map(|m| m.1)),
        });
    }
    Ok(MomentReport {
        family,
        n,
        level: opts.level,
        reps,
        sigma: opts.sigma,
        subbands,
    })
}

/// One CSV record of a moment report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub family: String,
    pub u: usize,
    pub statistic: String,
    pub value: f64,
    pub stderr: f64,
}

impl MomentReport {
    pub fn rows(&self) -> Vec<MomentRow> {
        let fam = self.family.to_string();
        let s2 = self.sigma * self.sigma;
        let mut rows = Vec::new();
        let mut push = |u, statistic: String, value, stderr| {
            rows.push(MomentRow {
                family: fam.clone(),
                u,
                statistic,
                value,
                stderr,
            })
        };
        for sb in &self.subbands {
            let d = sb.mean.len();
            for l in 0..d {
                push(sb.u, format!("mean_{l}"), sb.mean[l], sb.mean_se[l]);
            }
            for l in 0..d {
                push(sb.u, format!("var_{l}"), sb.cov[l][l] / s2, sb.cov_se[l][l] / s2);
            }
            for l in 0..d {
                for m in l + 1..d {
                    let se = sb.cov_se[l][m] / (sb.cov[l][l] * sb.cov[m][m]).sqrt();
                    push(sb.u, format!("corr_{l}{m}"), sb.corr(l, m), se);
                }
            }
            push(sb.u, "magnitude_mean".into(), sb.magnitude_mean, sb.magnitude_mean_se);
            push(sb.u, "magnitude_var".into(), sb.magnitude_var, sb.magnitude_var_se);
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in self.rows() {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Normalized null magnitudes `sum_l W_l^2 / sigma^2` of subband `(level, u)`,
/// subsampled on a `stride` lattice to thin out spatial dependence.
pub fn null_magnitude_samples(
    method: Method,
    n: usize,
    level: usize,
    u: usize,
    stride: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if stride == 0 {
        return Err(Error::invalid("stride must be >= 1"));
    }
    if !(1..=4).contains(&u) {
        return Err(Error::invalid(format!("subband type must be 1..4, got {u}")));
    }
    let fp = filter_bank("la8")?;
    let fft = Fft2::new(n);
    let chunks = par::map_indexed(reps, |r| -> Result<Vec<f64>> {
        let pyrs = noise_components(method, n, 1.0, derive_seed(seed, r as u64), &fft, &fp, level)?;
        let side = pyrs[0].side(level);
        let mut out = Vec::new();
        for k1 in (0..side).step_by(stride) {
            for k2 in (0..side).step_by(stride) {
                let idx = k1 * side + k2;
                out.push(pyrs.iter().map(|p| p.block(level, u)[idx].powi(2)).sum());
            }
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic two-sided KS critical value `c(alpha) / sqrt(m)`.
pub fn ks_critical(m: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (m as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exceedance {
    pub probability: f64,
    pub reps: usize,
    pub lambda_sq: f64,
}

/// Fraction of pure-noise images of side `n` (so `K = n^2`) in which any
/// detail coefficient survives the threshold; the universal one by default.
pub fn max_exceedance(
    method: Method,
    n: usize,
    levels: usize,
    reps: usize,
    seed: u64,
    lambda_sq: Option<f64>,
) -> Result<Exceedance> {
    if reps == 0 {
        return Err(Error::invalid("reps must be >= 1"));
    }
    let lambda_sq = match lambda_sq {
        Some(l) => l,
        None => universal_threshold(method, n * n)?,
    };
    let fp = filter_bank("la8")?;
    let fft = Fft2::new(n);
    let c = method.energy_constant();
    let hits = par::map_indexed(reps, |r| -> Result<bool> {
        let pyrs = noise_components(method, n, 1.0, derive_seed(seed, r as u64), &fft, &fp, levels)?;
        let mag = magnitude(&pyrs, c)?;
        let hit = mag.squared().detail_values().any(|m| m * (c + 1.0) >= lambda_sq);
        Ok(hit)
    });
    let mut count = 0usize;
    for h in hits {
        count += h? as usize;
    }
    Ok(Exceedance {
        probability: count as f64 / reps as f64,
        reps,
        lambda_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_from_seed, standard_normal};
    use proptest::prelude::*;

    #[test]
    fn variance_constants() {
        let t = riesz_variance_constants();
        assert_eq!(t.get(1), 0.5);
        assert_eq!(t.get(4), 0.5);
        assert!((t.get(2) - 0.8737).abs() < 5e-5);
        assert!((t.get(3) - 0.1263).abs() < 5e-5);
        assert_eq!(t.get(2) + t.get(3), 1.0);
    }

    #[test]
    fn filter_variance_constants() {
        // Independent oracle: direct frequency-grid sums of the sym4 and db2
        // cascades.
        let la8 = riesz_variance_constants_for("la8", 1).unwrap();
        assert!((la8.get(2) - 0.8558).abs() < 1e-3, "{}", la8.get(2));
        assert!((la8.get(1) - 0.5).abs() < 1e-12);
        assert!((la8.get(4) - 0.5).abs() < 1e-12);
        assert!((la8.get(2) + la8.get(3) - 1.0).abs() < 1e-12);
        let la8_2 = riesz_variance_constants_for("la8", 2).unwrap();
        assert!((la8_2.get(2) - 0.8612).abs() < 1e-3, "{}", la8_2.get(2));
        let d4 = riesz_variance_constants_for("d4", 1).unwrap();
        assert!((d4.get(2) - 0.8381).abs() < 1e-3, "{}", d4.get(2));
        let ideal = riesz_variance_constants().get(2);
        assert!(la8_2.get(2) < ideal && d4.get(2) < la8.get(2));
    }

    #[test]
    fn empirical_split_matches_filter_constant() {
        let opts = MomentOptions {
            level: 2,
            ..MomentOptions::default()
        };
        let rep = empirical_noise_moments_with(Family::Riesz, 128, 16, 5, &opts).unwrap();
        let want = riesz_variance_constants_for("la8", 2).unwrap();
        for sb in &rep.subbands {
            let got = sb.cov[1][1] / sb.cov[0][0];
            assert!((got - want.get(sb.u)).abs() < 0.02, "u={} {got} vs {}", sb.u, want.get(sb.u));
        }
    }

    #[test]
    fn t1_density() {
        assert_eq!(t1_pdf(0.0).unwrap(), 0.0);
        assert!(t1_pdf(-1.0).is_err());
        let cfg = QuadConfig::with_tol(1e-12, 1e-12);
        let mass = integrate(|s| 2.0 * s * t1_pdf(s * s).unwrap(), 0.0, 14.0, &cfg).value;
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
        // mean of Z1^2 + (Z2^2 + Z3^2)/2 is 2
        let mean = integrate(|s| 2.0 * s.powi(3) * t1_pdf(s * s).unwrap(), 0.0, 14.0, &cfg).value;
        assert!((mean - 2.0).abs() < 1e-6, "{mean}");
    }

    #[test]
    fn t1_cdf_matches_tail() {
        for t in [0.01, 0.5, 2.0, 6.0, 15.0] {
            let (c, s) = (t1_cdf(t).unwrap(), t1_sf(t).unwrap());
            assert!((c + s - 1.0).abs() < 1e-10, "t={t}: {c} + {s}");
        }
        assert_eq!(t1_cdf(0.0).unwrap(), 0.0);
        // leading asymptote of the tail at lambda = 5
        let l: f64 = 5.0;
        let lead = (8.0 / PI).sqrt() / l * (-0.5 * l * l).exp();
        let tail = t1_sf(l * l).unwrap();
        assert!((tail / lead - 1.0).abs() < 0.1, "{tail} vs {lead}");
    }

    #[test]
    fn chi4_examples() {
        assert_eq!(chi4_tail(0.0).unwrap(), 1.0);
        assert!((chi4_tail(2.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((chi4_tail(2.0).unwrap() - 0.7358).abs() < 1e-4);
        assert!(chi4_tail(-0.1).is_err());
    }

    #[test]
    fn mixture_reduces_to_t1() {
        for x in [0.0, 0.3, 1.0, 4.0, 10.0, 25.0] {
            let m = mixture_tail(x, 0.5).unwrap();
            let t = t1_sf(x).unwrap();
            assert!((m - t).abs() < 1e-9, "x={x}: {m} vs {t}");
        }
        assert_eq!(riesz_mixture_tail(0.0, 2).unwrap(), 1.0);
        assert!(riesz_mixture_tail(1.0, 5).is_err());
        assert!(mixture_tail(1.0, 1.0).is_err());
    }

    #[test]
    fn mixture_tail_monte_carlo() {
        let a = riesz_variance_constants().get(2);
        let mut rng = rng_from_seed(99);
        let m = 400_000;
        let mut hits = 0usize;
        for _ in 0..m {
            let (z1, z2, z3) = (standard_normal(&mut rng), standard_normal(&mut rng), standard_normal(&mut rng));
            if z1 * z1 + a * z2 * z2 + (1.0 - a) * z3 * z3 > 6.0 {
                hits += 1;
            }
        }
        let p = hits as f64 / m as f64;
        let se = (p * (1.0 - p) / m as f64).sqrt();
        let exact = riesz_mixture_tail(6.0, 2).unwrap();
        assert!((p - exact).abs() < 3.5 * se, "{p} vs {exact} (se {se})");
    }

    #[test]
    fn ks_against_own_cdf() {
        let mut rng = rng_from_seed(5);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| (0..4).map(|_| standard_normal(&mut rng).powi(2)).sum())
            .collect();
        let d = ks_statistic(&xs, |x| 1.0 - chi4_tail(x).unwrap());
        assert!(d < ks_critical(xs.len(), 0.01));
        let wrong = ks_statistic(&xs, |x| 1.0 - (-0.5 * x).exp());
        assert!(wrong > ks_critical(xs.len(), 0.01));
        assert!((ks_critical(100, 0.05) - 0.1358).abs() < 1e-3);
    }

    #[test]
    fn hct_moments_small() {
        let rep = empirical_noise_moments(Family::Hypercomplex, 64, 8, 1).unwrap();
        assert_eq!(rep.subbands.len(), 4);
        for sb in &rep.subbands[..3] {
            for l in 0..4 {
                assert!((sb.cov[l][l] - 1.0).abs() < 0.1, "u={} l={l}: {}", sb.u, sb.cov[l][l]);
                for m in 0..4 {
                    assert_eq!(sb.cov[l][m], sb.cov[m][l]);
                }
            }
        }
        let rows = rep.rows();
        assert!(rows.iter().any(|r| r.statistic == "corr_03"));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("family,u,statistic,value,stderr\n"));
        assert!(empirical_noise_moments(Family::Riesz, 32, 8, 1).is_err());
    }

    #[test]
    fn exceedance_extremes() {
        let lo = max_exceedance(Method::H, 32, 2, 4, 3, Some(0.0)).unwrap();
        assert_eq!(lo.probability, 1.0);
        let hi = max_exceedance(Method::H, 32, 2, 4, 3, Some(1e9)).unwrap();
        assert_eq!(hi.probability, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn mixture_tail_is_monotone_probability(x in 0.0f64..40.0, dx in 0.01f64..5.0, a in 0.05f64..0.95) {
            let p = mixture_tail(x, a).unwrap();
            let q = mixture_tail(x + dx, a).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
            prop_assert!(q <= p + 1e-12);
        }
    }
}
