//! The normalized quadruple exponential sum
//!
//! `ES_N(w) = N^-5 sum_{i1,i2 <= M} sum_{j1+j3=j2+j4} e[(w_i1 - w_i2)(j1^2 - j2^2 + j3^2 - j4^2)/2]`
//!
//! evaluated directly, through the completed square
//! `sum_t |sum_a e[(w_i1 - w_i2) a t]|^2`, and through the geometric-series
//! upper bound.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::{phase_frac_signed_unchecked, torus_norm, ExtReal, PhaseWalk};
use crate::matrixmodel::{make_frequencies, rows_for, stream_rng, FrequencyKind, FrequencySequence};
use crate::sum::Neumaier;

/// Largest `N` accepted by [`es_bruteforce`].
pub const BRUTE_MAX_N: usize = 128;

/// Below this distance to an integer the geometric sum takes its `L^2` value.
pub const NEAR_INTEGER: f64 = 1e-13;

/// RNG stream for Monte Carlo frequency draws.
const MEAN_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsMethod {
    BruteForce,
    CompletedSquare,
    GeometricBound,
}

impl EsMethod {
    pub fn name(self) -> &'static str {
        match self {
            EsMethod::BruteForce => "brute",
            EsMethod::CompletedSquare => "square",
            EsMethod::GeometricBound => "bound",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsResult {
    pub n: usize,
    pub m: usize,
    pub method: EsMethod,
    /// Exact value (brute force and completed square).
    pub value: Option<f64>,
    /// Upper bound (geometric route).
    pub bound: Option<f64>,
    pub seconds: f64,
}

impl EsResult {
    /// The number this route produced.
    pub fn number(&self) -> f64 {
        self.value.or(self.bound).unwrap_or(f64::NAN)
    }
}

/// First `floor(rho N)` frequencies, reduced mod 1.
fn rows(freq: &FrequencySequence, n: usize, rho: f64) -> Result<Vec<ExtReal>> {
    if n == 0 {
        return Err(Error::ParameterDomain("N must be positive".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::ParameterDomain(format!("rho must be positive, got {rho}")));
    }
    let m = rows_for(rho, n);
    if freq.len() < m {
        return Err(Error::ParameterDomain(format!(
            "need {m} frequencies, sequence has {}",
            freq.len()
        )));
    }
    Ok(freq.values[..m].iter().map(|w| w.frac()).collect())
}

/// `frac(a - b)` for reduced frequencies.
#[inline]
fn diff(a: ExtReal, b: ExtReal) -> ExtReal {
    (a - b).frac()
}

/// Number of `(j1..j4) in [1,N]^4` with `j1+j3=j2+j4`, grouped by
/// `q = (j1^2 - j2^2 + j3^2 - j4^2)/2`.
pub fn quadruple_histogram(n: usize) -> BTreeMap<i64, u64> {
    let n = n as i64;
    let mut h = BTreeMap::new();
    for j1 in 1..=n {
        for j2 in 1..=n {
            for j3 in 1..=n {
                let j4 = j1 + j3 - j2;
                if !(1..=n).contains(&j4) {
                    continue;
                }
                let q = j1 * j1 - j2 * j2 + j3 * j3 - j4 * j4;
                debug_assert!(q % 2 == 0);
                *h.entry(q / 2).or_insert(0u64) += 1;
            }
        }
    }
    h
}

/// Direct evaluation of the defining sum, terms with equal phase merged.
pub fn es_bruteforce(freq: &FrequencySequence, n: usize, rho: f64) -> Result<EsResult> {
    if n > BRUTE_MAX_N {
        return Err(Error::Size(format!("brute force needs N <= {BRUTE_MAX_N}, got {n}")));
    }
    let start = Instant::now();
    let w = rows(freq, n, rho)?;
    let hist: Vec<(i64, f64)> = quadruple_histogram(n)
        .into_iter()
        .map(|(q, c)| (q, c as f64))
        .collect();
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    for &a in &w {
        for &b in &w {
            let d = diff(a, b);
            for &(q, c) in &hist {
                let (s, co) = (2.0 * PI * phase_frac_signed_unchecked(q, d)).sin_cos();
                re.add(c * co);
                im.add(c * s);
            }
        }
    }
    let norm = (n as f64).powi(5);
    let (value, imag) = (re.value() / norm, im.value() / norm);
    if imag.abs() >= 1e-9 {
        return Err(Error::Numeric(format!("imaginary part {imag:e} does not vanish")));
    }
    Ok(EsResult {
        n,
        m: w.len(),
        method: EsMethod::BruteForce,
        value: Some(value),
        bound: None,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `|sum_{a=1}^{L} e[a theta]|^2` for `theta` reduced to `[0, 1)`.
#[inline]
pub fn geometric_sq(len: u64, theta: f64) -> f64 {
    if torus_norm(theta) < NEAR_INTEGER {
        return (len * len) as f64;
    }
    let num = (PI * len as f64 * theta).sin();
    let den = (PI * theta).sin();
    (num * num) / (den * den)
}

/// `min{N^2, 1 / (4 ||theta||^2)}`; dominates `geometric_sq` since
/// `|sin(pi x)| >= 2 ||x||`.
#[inline]
fn geometric_cap(n: u64, theta: f64) -> f64 {
    let d = torus_norm(theta);
    let cap = (n * n) as f64;
    if d == 0.0 {
        cap
    } else {
        cap.min(0.25 / (d * d))
    }
}

/// `sum_{t=1-N}^{N-1} g(N - |t|, frac(d t))` using the `t -> -t` symmetry.
fn t_sum(n: u64, d: ExtReal, g: &impl Fn(u64, f64) -> f64) -> f64 {
    let mut walk = PhaseWalk::new(d);
    let mut acc = 0.0;
    for t in 1..n {
        walk.advance();
        acc += g(n - t, walk.phase());
    }
    g(n, 0.0) + 2.0 * acc
}

/// `sum_{i1,i2} t_sum(d_{i1 i2})`, generic O(M^2 N) path.
fn pair_sum_generic(w: &[ExtReal], n: u64, g: &impl Fn(u64, f64) -> f64) -> f64 {
    let mut acc = Neumaier::new();
    acc.add(w.len() as f64 * t_sum(n, ExtReal::ZERO, g));
    for (i, &a) in w.iter().enumerate() {
        for &b in &w[..i] {
            acc.add(2.0 * t_sum(n, diff(a, b), g));
        }
    }
    acc.value()
}

/// Same sum for `w_i = i alpha`: the difference `r alpha` occurs `M - r`
/// times for each sign of `r`.
fn pair_sum_ialpha(alpha: ExtReal, m: usize, n: u64, g: &impl Fn(u64, f64) -> f64) -> f64 {
    let alpha = alpha.frac();
    let mut acc = Neumaier::new();
    acc.add(m as f64 * t_sum(n, ExtReal::ZERO, g));
    for r in 1..m {
        let d = alpha.mul_int(r as i64).frac();
        acc.add(2.0 * (m - r) as f64 * t_sum(n, d, g));
    }
    acc.value()
}

fn pair_sum(freq: &FrequencySequence, w: &[ExtReal], n: u64, g: &impl Fn(u64, f64) -> f64) -> f64 {
    match &freq.kind {
        FrequencyKind::IAlpha { alpha } => pair_sum_ialpha(*alpha, w.len(), n, g),
        _ => pair_sum_generic(w, n, g),
    }
}

/// Exact value via the completed square. For `IAlpha` sequences the
/// `O(N^2)` difference path is used.
pub fn es_completed_square(freq: &FrequencySequence, n: usize, rho: f64) -> Result<EsResult> {
    let start = Instant::now();
    let w = rows(freq, n, rho)?;
    let s = pair_sum(freq, &w, n as u64, &geometric_sq);
    Ok(EsResult {
        n,
        m: w.len(),
        method: EsMethod::CompletedSquare,
        value: Some(s / (n as f64).powi(5)),
        bound: None,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Completed square without the `IAlpha` shortcut.
pub fn es_completed_square_generic(freq: &FrequencySequence, n: usize, rho: f64) -> Result<EsResult> {
    let start = Instant::now();
    let w = rows(freq, n, rho)?;
    let s = pair_sum_generic(&w, n as u64, &geometric_sq);
    Ok(EsResult {
        n,
        m: w.len(),
        method: EsMethod::CompletedSquare,
        value: Some(s / (n as f64).powi(5)),
        bound: None,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `N^-5 sum_{i1,i2,t} min{N^2, 1/(4 ||(w_i1 - w_i2) t||^2)}`.
pub fn es_geometric_bound(freq: &FrequencySequence, n: usize, rho: f64) -> Result<EsResult> {
    let start = Instant::now();
    let w = rows(freq, n, rho)?;
    let nn = n as u64;
    let s = pair_sum(freq, &w, nn, &|_len, theta| geometric_cap(nn, theta));
    Ok(EsResult {
        n,
        m: w.len(),
        method: EsMethod::GeometricBound,
        value: None,
        bound: Some(s / (n as f64).powi(5)),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs one route on freshly generated frequencies of `kind`.
pub fn es_for_kind(kind: &FrequencyKind, n: usize, rho: f64, method: EsMethod) -> Result<EsResult> {
    let freq = make_frequencies(kind, rows_for(rho, n).max(1), n)?;
    match method {
        EsMethod::BruteForce => es_bruteforce(&freq, n, rho),
        EsMethod::CompletedSquare => es_completed_square(&freq, n, rho),
        EsMethod::GeometricBound => es_geometric_bound(&freq, n, rho),
    }
}

/// `M^2 (2N^3 + N) / (3 N^5)`, the value for constant frequencies.
pub fn es_constant(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    m * m * (2.0 * n * n * n + n) / (3.0 * n.powi(5))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    pub n_list: Vec<usize>,
    pub es_values: Vec<f64>,
    /// Exponent of `N` in the least-squares fit of `log ES` against `log N`.
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares fit of `log ES` against `log N`.
pub fn fit_decay(n_list: &[usize], es_values: &[f64]) -> Result<DecayFit> {
    if n_list.len() != es_values.len() {
        return Err(Error::Fit("length mismatch".into()));
    }
    if n_list.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    if let Some(v) = es_values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("non-positive value {v}")));
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = es_values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all N equal".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit {
        n_list: n_list.to_vec(),
        es_values: es_values.to_vec(),
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Evaluates one route at every `N` and fits the decay exponent.
pub fn fit_decay_kind(kind: &FrequencyKind, n_list: &[usize], rho: f64, method: EsMethod) -> Result<DecayFit> {
    if n_list.len() < 3 {
        return Err(Error::Fit("need at least three values of N".into()));
    }
    let values = n_list
        .iter()
        .map(|&n| es_for_kind(kind, n, rho, method).map(|r| r.number()))
        .collect::<Result<Vec<_>>>()?;
    fit_decay(n_list, &values)
}

/// Solutions of `j1+j3 = j2+j4`, `j1^2+j3^2 = j2^2+j4^2` in `[1,N]^4`.
pub fn diophantine_count(n: u64) -> u64 {
    2 * n * n - n
}

pub fn diophantine_count_exhaustive(n: u64) -> u64 {
    let n = n as i64;
    let mut c = 0;
    for j1 in 1..=n {
        for j2 in 1..=n {
            for j3 in 1..=n {
                let j4 = j1 + j3 - j2;
                if (1..=n).contains(&j4) && j1 * j1 + j3 * j3 == j2 * j2 + j4 * j4 {
                    c += 1;
                }
            }
        }
    }
    c
}

/// Exact mean of `ES_N` over `w` uniform on `[0,2)^M`: only `i1 = i2` and
/// the trivial Diophantine solutions survive.
pub fn random_freq_mean_exact(m: usize, n: usize) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    es_constant(m, n) / mf + mf * (mf - 1.0) * diophantine_count(n as u64) as f64 / nf.powi(5)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte Carlo mean of `ES_N` with `w` drawn uniformly from `[0,2)^M`.
pub fn random_freq_mean(n: usize, rho: f64, samples: usize, seed: u64) -> Result<MeanEstimate> {
    if samples == 0 {
        return Err(Error::ParameterDomain("need at least one sample".into()));
    }
    let m = rows_for(rho, n);
    let mut rng = stream_rng(seed, MEAN_STREAM);
    let mut vals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let values = (0..m).map(|_| ExtReal::from(2.0 * rng.random::<f64>())).collect();
        let freq = FrequencySequence {
            kind: FrequencyKind::Random { seed },
            n,
            values,
        };
        vals.push(es_completed_square(&freq, n, rho)?.number());
    }
    let k = samples as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let stderr = if samples > 1 {
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        f64::NAN
    };
    Ok(MeanEstimate {
        mean,
        stderr,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(values: &[f64]) -> FrequencySequence {
        FrequencySequence {
            kind: FrequencyKind::Random { seed: 0 },
            n: values.len(),
            values: values.iter().map(|&v| ExtReal::from(v)).collect(),
        }
    }

    #[test]
    fn n_one_is_one() {
        let f = seq(&[0.37]);
        assert!((es_bruteforce(&f, 1, 1.0).unwrap().number() - 1.0).abs() < 1e-15);
        assert!((es_completed_square(&f, 1, 1.0).unwrap().number() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_closed_form() {
        for n in [1usize, 2, 4, 7, 16] {
            let f = seq(&vec![0.3; n]);
            let want = es_constant(n, n);
            assert!((es_bruteforce(&f, n, 1.0).unwrap().number() - want).abs() < 1e-12);
            assert!((es_completed_square(&f, n, 1.0).unwrap().number() - want).abs() < 1e-12);
            let nn = n as f64;
            let bound = nn * nn * (2.0 * nn - 1.0) * nn * nn / nn.powi(5);
            let b = es_geometric_bound(&f, n, 1.0).unwrap().number();
            assert!((b - bound).abs() < 1e-12 && b >= want - 1e-12);
        }
        // the count behind the closed form, by hand at N = 4
        assert_eq!(quadruple_histogram(4).values().sum::<u64>(), (2 * 64 + 4) / 3);
    }

    #[test]
    fn brute_size_cap() {
        let f = seq(&vec![0.1; 129]);
        assert!(matches!(es_bruteforce(&f, 129, 1.0), Err(Error::Size(_))));
    }

    #[test]
    fn ialpha_fast_path_matches_generic() {
        let kind = FrequencyKind::sqrt2_rotation();
        for n in [8usize, 33, 64] {
            let f = make_frequencies(&kind, n, n).unwrap();
            let fast = es_completed_square(&f, n, 1.0).unwrap().number();
            let slow = es_completed_square_generic(&f, n, 1.0).unwrap().number();
            assert!((fast - slow).abs() < 1e-12, "n={n} {fast} {slow}");
        }
    }

    #[test]
    fn diophantine_small() {
        assert_eq!(diophantine_count(1), 1);
        assert_eq!(diophantine_count_exhaustive(2), 6);
        assert_eq!(diophantine_count_exhaustive(5), 45);
        for n in 1..=12 {
            assert_eq!(diophantine_count(n), diophantine_count_exhaustive(n));
        }
    }

    #[test]
    fn fit_rejects_bad_values() {
        assert!(matches!(fit_decay(&[1, 2, 4], &[1.0, 0.0, 1.0]), Err(Error::Fit(_))));
        let f = fit_decay(&[2, 4, 8], &[0.5, 0.25, 0.125]).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_is_reproducible() {
        let a = random_freq_mean(8, 1.0, 1, 42).unwrap();
        let b = random_freq_mean(8, 1.0, 1, 42).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn exact_mean_closed_form() {
        // N = 32, rho = 1 gives about 0.08
        let v = random_freq_mean_exact(32, 32);
        assert!((v - 0.080444).abs() < 1e-5, "{v}");
    }
}
