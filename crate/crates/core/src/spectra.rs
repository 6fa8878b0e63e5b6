//! Spectral statistics of `H = [[0, X], [X*, 0]]`.
//!
//! The spectrum of `H` is `{+-sigma_i}` plus `|M-N|` zeros, so everything is
//! derived from the singular values of `X`, which come from the smaller Gram
//! matrix.

use std::f64::consts::PI;

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixmodel::PhaseMatrix;
use crate::quad;
use crate::sum::{neumaier_sum, Neumaier};

/// `X X*` when `M <= N`, else `X* X`.
pub fn gram(x: MatRef<'_, Complex64>) -> Mat<Complex64> {
    if x.nrows() <= x.ncols() {
        x * x.adjoint()
    } else {
        x.adjoint() * x
    }
}

/// Descending singular values of `x` from the Hermitian eigenvalues of its
/// Gram matrix. Negative round-off eigenvalues are clamped to zero.
pub fn singular_values_of(x: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let z = x[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Numeric(format!("entry ({i}, {j}) = {z}")));
            }
        }
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Ok(Vec::new());
    }
    let g = gram(x);
    let ev = g
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))?;
    let mut sigma: Vec<f64> = ev.into_iter().map(|l| l.max(0.0).sqrt()).collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    Ok(sigma)
}

pub fn singular_values(x: &PhaseMatrix) -> Result<Vec<f64>> {
    singular_values_of(x.to_mat().as_ref())
}

/// Eigenvalues of `H` in ascending order.
pub fn eigenvalues_h(sigma: &[f64], m: usize, n: usize) -> Vec<f64> {
    let zeros = (m + n).saturating_sub(2 * sigma.len());
    let mut eigs = Vec::with_capacity(m + n);
    eigs.extend(sigma.iter().map(|s| -s));
    eigs.extend(std::iter::repeat_n(0.0, zeros));
    eigs.extend(sigma.iter().copied());
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// `mu^(2k) = (1/N) sum_i sigma_i^(2k)` for `k = 1..=k_max`.
pub fn moments(sigma: &[f64], n: usize, k_max: usize) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    let mut sorted: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    (1..=k_max)
        .map(|k| {
            let v = neumaier_sum(sorted.iter().map(|s2| s2.powi(k as i32))) / n as f64;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Range(format!("mu^({}) overflows", 2 * k)))
            }
        })
        .collect()
}

/// `(1/N) Tr[(X X*)^k]` from explicit matrix powers; independent of the
/// eigensolver.
pub fn trace_moment_direct(x: MatRef<'_, Complex64>, k: usize) -> f64 {
    let n = x.ncols() as f64;
    if k == 0 {
        return x.nrows() as f64 / n;
    }
    let g = gram(x);
    let dim = g.nrows();
    let mut p = Mat::<Complex64>::identity(dim, dim);
    for _ in 0..k / 2 {
        p = &p * &g;
    }
    let q = if k % 2 == 1 { &p * &g } else { p.clone() };
    let mut acc = Neumaier::new();
    for a in 0..dim {
        for b in 0..dim {
            acc.add((q[(a, b)] * p[(b, a)]).re);
        }
    }
    acc.value() / n
}

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// Standard Marchenko-Pastur density with ratio `lambda`, continuous part.
pub fn mp_standard_density(x: f64, lambda: f64) -> f64 {
    let (a, b) = ((1.0 - lambda.sqrt()).powi(2), (1.0 + lambda.sqrt()).powi(2));
    if x <= a || x >= b || x <= 0.0 {
        return 0.0;
    }
    ((b - x) * (x - a)).sqrt() / (2.0 * PI * lambda * x)
}

/// Scaling conventions for the limit density of `X* X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpConvention {
    /// `rho^-1 f_{1/rho}(t / rho)`, the law of `X* X` with `M = rho N`.
    Corrected,
    /// `rho^-2 f_{1/rho}(t / rho)`
    Literal,
    /// `rho^-2 f_rho(t / rho)`
    RatioRho,
}

impl MpConvention {
    pub const ALL: [MpConvention; 3] = [
        MpConvention::Corrected,
        MpConvention::Literal,
        MpConvention::RatioRho,
    ];

    fn parts(self, rho: f64) -> (f64, f64) {
        match self {
            MpConvention::Corrected => (1.0 / rho, 1.0 / rho),
            MpConvention::Literal => (1.0 / (rho * rho), 1.0 / rho),
            MpConvention::RatioRho => (1.0 / (rho * rho), rho),
        }
    }

    pub fn density(self, t: f64, rho: f64) -> f64 {
        let (pre, lambda) = self.parts(rho);
        pre * mp_standard_density(t / rho, lambda)
    }

    pub fn edges(self, rho: f64) -> (f64, f64) {
        let (_, lambda) = self.parts(rho);
        (rho * (1.0 - lambda.sqrt()).powi(2), rho * (1.0 + lambda.sqrt()).powi(2))
    }

    /// `int t^k f(t) dt` over the continuous part.
    pub fn moment(self, k: u32, rho: f64, tol: f64) -> Result<f64> {
        check_rho(rho)?;
        let (a, b) = self.edges(rho);
        let q = quad::integrate_arcsine(|t| t.powi(k as i32) * self.density(t, rho), a, b, tol)?;
        Ok(q.value)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("rho must be positive, got {rho}")))
    }
}

/// Support `[rho (1 - rho^-1/2)^2, rho (1 + rho^-1/2)^2]` of the rescaled law.
pub fn mp_edges(rho: f64) -> Result<(f64, f64)> {
    check_rho(rho)?;
    Ok(MpConvention::Corrected.edges(rho))
}

/// Continuous part of the limiting density of the eigenvalues of `X* X`.
pub fn mp_density(t: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(MpConvention::Corrected.density(t, rho))
}

/// Mass of the atom at zero (the `N - M` zero eigenvalues when `rho < 1`).
pub fn mp_atom(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok((1.0 - rho).max(0.0))
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `sample` and
/// a continuous reference CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    Ok(d.min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Count,
    Density,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub normalization: Normalization,
    /// Denominator of the density: the size of the full measure.
    pub total: f64,
}

impl Histogram {
    /// `bins` uniform bins over `range`, or over `[min - eps, max + eps]`.
    pub fn new(values: &[f64], bins: usize, range: Option<(f64, f64)>, total: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Domain("histogram needs at least one bin".into()));
        }
        let (lo, hi) = match range {
            Some(r) => r,
            None => {
                if values.is_empty() {
                    return Err(Error::Domain("empty sample".into()));
                }
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let eps = 1e-9 * (hi - lo).abs().max(1.0);
                (lo - eps, hi + eps)
            }
        };
        if !(hi > lo) {
            return Err(Error::Domain(format!("bad histogram range [{lo}, {hi}]")));
        }
        let width = (hi - lo) / bins as f64;
        let bin_edges: Vec<f64> = (0..=bins).map(|b| lo + width * b as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            if v < lo || v > hi {
                continue;
            }
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Ok(Histogram {
            bin_edges,
            counts,
            normalization: Normalization::Density,
            total,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        match self.normalization {
            Normalization::Count => self.counts.iter().map(|&c| c as f64).collect(),
            Normalization::Density => self
                .counts
                .iter()
                .zip(self.bin_edges.windows(2))
                .map(|(&c, w)| c as f64 / (self.total * (w[1] - w[0])))
                .collect(),
        }
    }
}

pub fn wigner_surmise(s: f64) -> f64 {
    32.0 / (PI * PI) * s * s * (-4.0 * s * s / PI).exp()
}

pub fn wigner_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let u = 2.0 * s / PI.sqrt();
    libm::erf(u) - 4.0 / PI * s * (-4.0 * s * s / PI).exp()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpacingSample {
    pub energy: f64,
    pub t: f64,
    pub n: usize,
    pub s_values: Vec<f64>,
    pub grid: Vec<f64>,
    pub lambda_cdf: Vec<f64>,
}

impl SpacingSample {
    /// KS distance between the normalized gaps and the surmise.
    pub fn ks_to_surmise(&self) -> Result<f64> {
        ks_distance(&self.s_values, wigner_cdf)
    }
}

/// Normalized nearest-neighbour gaps of the sorted eigenvalues within `t` of
/// `energy`, with the empirical spacing CDF evaluated on `grid`.
pub fn level_spacing(eigs: &[f64], energy: f64, t: f64, n: usize, grid: &[f64]) -> Result<SpacingSample> {
    if !(energy > -2.0 && energy < 2.0) {
        return Err(Error::Domain(format!("energy {energy} outside (-2, 2)")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("cutoff {t} outside (0, 1)")));
    }
    let mut sorted = eigs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rho = semicircle_density(energy);
    let scale = 2.0 * n as f64 * rho;
    let mut s_values: Vec<f64> = sorted
        .windows(2)
        .filter(|w| (w[0] - energy).abs() <= t)
        .map(|w| scale * (w[1] - w[0]))
        .collect();
    if s_values.is_empty() {
        return Err(Error::EmptyWindow { energy, t });
    }
    s_values.iter_mut().for_each(|s| *s = s.max(0.0));
    let mut by_size = s_values.clone();
    by_size.sort_by(f64::total_cmp);
    let norm = 4.0 * n as f64 * t * rho;
    let lambda_cdf = grid
        .iter()
        .map(|&s| by_size.partition_point(|&v| v <= s) as f64 / norm)
        .collect();
    Ok(SpacingSample {
        energy,
        t,
        n,
        s_values,
        grid: grid.to_vec(),
        lambda_cdf,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub m: usize,
    pub n: usize,
    pub sigma: Vec<f64>,
    pub eigs: Vec<f64>,
    /// `mu^(2k)` for `k = 1..`
    pub moments: Vec<f64>,
    pub meta: serde_json::Value,
}

impl SpectralSummary {
    pub fn from_matrix(x: &PhaseMatrix, k_max: usize) -> Result<Self> {
        let sigma = singular_values(x)?;
        let (m, n) = (x.rows(), x.cols());
        let eigs = eigenvalues_h(&sigma, m, n);
        let moments = moments(&sigma, n, k_max)?;
        let meta = serde_json::json!({ "config": x.config, "y_count": x.y.len() });
        Ok(SpectralSummary {
            m,
            n,
            sigma,
            eigs,
            moments,
            meta,
        })
    }

    /// ESD over all `M + N` eigenvalues.
    pub fn esd_full(&self, bins: usize) -> Result<Histogram> {
        Histogram::new(&self.eigs, bins, None, (self.m + self.n) as f64)
    }

    /// Same bins weighted by `1 / (2N)`.
    pub fn esd_2n(&self, bins: usize) -> Result<Histogram> {
        Histogram::new(&self.eigs, bins, None, (2 * self.n) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixmodel::{build_matrix, FrequencyKind, ModelConfig};
    use num_complex::Complex64 as C;

    fn flat(n: usize) -> Mat<C> {
        Mat::from_fn(n, n, |_, _| C::new(1.0 / (n as f64).sqrt(), 0.0))
    }

    #[test]
    fn rank_one() {
        let n = 9;
        let s = singular_values_of(flat(n).as_ref()).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12);
        assert!(s[1..].iter().all(|&v| v < 1e-7));
        let mu = moments(&s, n, 4).unwrap();
        for (k, m) in mu.iter().enumerate() {
            assert!((m - (n as f64).powi(k as i32)).abs() < 1e-9 * m);
        }
    }

    #[test]
    fn scaled_identity() {
        let n = 5;
        let x = Mat::from_fn(n, n, |i, j| if i == j { C::new(0.2f64.sqrt(), 0.0) } else { C::new(0.0, 0.0) });
        for s in singular_values_of(x.as_ref()).unwrap() {
            assert!((s - 0.2f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn parseval_and_second_moment() {
        let cfg = ModelConfig::skew_shift(&FrequencyKind::Random { seed: 3 }, 10, 0.7, 11).unwrap();
        let x = build_matrix(&cfg).unwrap();
        let s = singular_values(&x).unwrap();
        assert_eq!(s.len(), 7);
        assert!((s.iter().map(|v| v * v).sum::<f64>() - 7.0).abs() < 1e-9);
        assert!((moments(&s, 10, 1).unwrap()[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let mut x = flat(3);
        x[(1, 2)] = C::new(f64::NAN, 0.0);
        assert!(matches!(singular_values_of(x.as_ref()), Err(Error::Numeric(_))));
    }

    #[test]
    fn chiral_spectrum() {
        assert_eq!(eigenvalues_h(&[2.0, 1.0], 2, 2), vec![-2.0, -1.0, 1.0, 2.0]);
        assert_eq!(eigenvalues_h(&[3.0], 1, 3), vec![-3.0, 0.0, 0.0, 3.0]);
        let e = eigenvalues_h(&[1.5, 0.7, 0.1], 3, 6);
        let mut neg: Vec<f64> = e.iter().map(|v| -v).collect();
        neg.sort_by(f64::total_cmp);
        assert_eq!(neg, e);
    }

    #[test]
    fn moments_match_eigenvalue_sums() {
        let cfg = ModelConfig::skew_shift(&FrequencyKind::sqrt2_rotation(), 12, 1.0, 5).unwrap();
        let x = build_matrix(&cfg).unwrap();
        let s = singular_values(&x).unwrap();
        let e = eigenvalues_h(&s, 12, 12);
        let mu = moments(&s, 12, 4).unwrap();
        for k in 1..=4 {
            let direct = e.iter().map(|l| l.powi(2 * k as i32)).sum::<f64>() / 24.0;
            assert!((direct - mu[k - 1]).abs() < 1e-8 * direct);
            let tr = trace_moment_direct(x.to_mat().as_ref(), k);
            assert!((tr - mu[k - 1]).abs() < 1e-9 * tr);
        }
    }

    #[test]
    fn moment_overflow_is_range_error() {
        assert!(matches!(moments(&[1e200], 1, 2), Err(Error::Range(_))));
    }

    #[test]
    fn semicircle_values() {
        assert!((semicircle_density(0.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(semicircle_density(2.0), 0.0);
        assert_eq!(semicircle_cdf(-2.0), 0.0);
        assert!((semicircle_cdf(2.0) - 1.0).abs() < 1e-15);
        assert!((semicircle_cdf(0.0) - 0.5).abs() < 1e-15);
        let q = quad::integrate_arcsine(semicircle_density, -2.0, 0.7, 1e-13).unwrap();
        assert!((q.value - semicircle_cdf(0.7)).abs() < 1e-12);
    }

    #[test]
    fn mp_mass_and_edges() {
        assert_eq!(mp_edges(1.0).unwrap(), (0.0, 4.0));
        for rho in [0.25, 0.5, 1.0, 2.0, 3.0] {
            let mass = MpConvention::Corrected.moment(0, rho, 1e-12).unwrap() + mp_atom(rho).unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "rho={rho} mass={mass}");
            let m1 = MpConvention::Corrected.moment(1, rho, 1e-12).unwrap();
            assert!((m1 - rho).abs() < 1e-8, "rho={rho} m1={m1}");
        }
        assert!(mp_density(1.0, 0.0).is_err());
        assert!(mp_density(1.0, -1.0).is_err());
    }

    #[test]
    fn ks_simple_cases() {
        assert!((ks_distance(&[0.0], semicircle_cdf).unwrap() - 0.5).abs() < 1e-15);
        let n = 200;
        let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!(ks_distance(&grid, |x| x.clamp(0.0, 1.0)).unwrap() <= 1.0 / n as f64 + 1e-15);
        assert!(ks_distance(&[], |x| x).is_err());
    }

    #[test]
    fn histogram_density_integrates_to_in_range_fraction() {
        let vals = [0.1, 0.2, 0.2, 0.5, 0.9, 3.0];
        let h = Histogram::new(&vals, 4, Some((0.0, 1.0)), vals.len() as f64).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 5);
        let mass: f64 = h.values().iter().zip(h.bin_edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum();
        assert!((mass - 5.0 / 6.0).abs() < 1e-14);
        let h = Histogram::new(&vals, 100, None, 6.0).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 6);
        assert_eq!(h.bin_edges.len(), 101);
    }

    #[test]
    fn arithmetic_spectrum_has_unit_spacing() {
        let n = 50;
        let gap = 1.0 / (2.0 * n as f64 * semicircle_density(0.3));
        let eigs: Vec<f64> = (-40..40).map(|i| 0.3 + gap * i as f64).collect();
        let s = level_spacing(&eigs, 0.3, 0.2, n, &[0.5, 1.0, 2.0]).unwrap();
        assert!(s.s_values.iter().all(|v| (v - 1.0).abs() < 1e-9));
        let doubled: Vec<f64> = eigs.iter().map(|e| 0.3 + 2.0 * (e - 0.3)).collect();
        let d = level_spacing(&doubled, 0.3, 0.2, n, &[]).unwrap();
        let kept: Vec<f64> = s.s_values.iter().take(d.s_values.len()).copied().collect();
        assert!(d.s_values.iter().zip(&kept).all(|(a, b)| (a - 2.0 * b).abs() < 1e-9));
        assert!(s.lambda_cdf.windows(2).all(|w| w[0] <= w[1]));
        assert!(matches!(level_spacing(&eigs, 1.9, 1e-6, n, &[]), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn surmise_values() {
        assert_eq!(wigner_surmise(0.0), 0.0);
        let w1 = 32.0 / (PI * PI) * (-4.0 / PI).exp();
        assert!((wigner_surmise(1.0) - w1).abs() < 1e-15);
        assert!((w1 - 0.907589).abs() < 1e-6);
        let q = quad::integrate(wigner_surmise, 0.0, 12.0, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-8);
        let q = quad::integrate(wigner_surmise, 0.0, 1.3, 1e-13).unwrap();
        assert!((q.value - wigner_cdf(1.3)).abs() < 1e-12);
    }
}
