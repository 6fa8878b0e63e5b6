//! Graph weights, the graphical moment formulas, the limiting-moment
//! recursion and the deterministic fourth-moment analysis.

use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::{fit_decay, geometric_sq, DecayFit, MeanEstimate};
use crate::extreal::{expi, phase_frac, phase_frac_signed, phase_frac_unchecked, torus_norm, ExtReal};
use crate::graphcore::{
    enumerate_explorations, for_each_admissible_current, is_fully_reducible, CurrentMode, Exploration,
    ExplorationGraph,
};
use crate::matrixmodel::{
    build_matrix, make_frequencies, rows_for, stream_rng, DeterministicModel, FrequencyKind,
    FrequencySequence, ModelConfig, PhaseMatrix, QuadForm,
};
use crate::spectra::{moments, singular_values, MpConvention};
use crate::sum::Neumaier;

const MC_STREAM: u64 = 4;
/// Cap on `M^l` for the injective index sum of the non-averaged propagators.
pub const INJECTIVE_CAP: f64 = 1e8;
pub const MAX_RECURSION_K: usize = 30;
pub const MAX_REDUCIBLE_K: usize = 7;

/// Which propagator `K_{(i,i')}(j)` the graph weight uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PropagatorMode {
    /// `e[(w_i - w_i') j^2 / 2]` summed over Kirchhoff-admissible currents:
    /// the `y`-average of the skew-shift moments.
    Effective,
    /// `e[C(j,2)(w_i - w_i') + j(y_i - y_i') + x_i - x_i']` for one fixed
    /// draw, summed over unrestricted `j`.
    TrueSkewShift { y: Vec<f64>, x: Vec<f64> },
    /// `N X_{i,j} conj(X_{i',j})` for a deterministic model, unrestricted `j`.
    Deterministic { model: DeterministicModel },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorSpec {
    pub mode: PropagatorMode,
    pub freq: FrequencySequence,
    pub n: usize,
}

impl PropagatorSpec {
    /// Effective propagator with `M = floor(rho N)` frequencies.
    pub fn effective(kind: &FrequencyKind, n: usize, rho: f64) -> Result<Self> {
        if n == 0 || !(rho > 0.0) {
            return Err(Error::ParameterDomain("need N > 0 and rho > 0".into()));
        }
        let m = rows_for(rho, n);
        if m == 0 {
            return Err(Error::ParameterDomain("floor(rho N) = 0".into()));
        }
        Ok(PropagatorSpec {
            mode: PropagatorMode::Effective,
            freq: make_frequencies(kind, m, n)?,
            n,
        })
    }

    /// The non-averaged propagator of a built matrix.
    pub fn from_matrix(x: &PhaseMatrix) -> Self {
        let c = &x.config;
        let mode = match c.quad_form {
            QuadForm::Binomial => PropagatorMode::TrueSkewShift {
                y: x.y.clone(),
                x: c.offsets.clone(),
            },
            QuadForm::Square if c.freq.kind == FrequencyKind::SqrtI => PropagatorMode::Deterministic {
                model: DeterministicModel::A,
            },
            QuadForm::Square => PropagatorMode::Deterministic {
                model: DeterministicModel::B,
            },
            QuadForm::Linear => PropagatorMode::Deterministic {
                model: DeterministicModel::C,
            },
        };
        PropagatorSpec {
            mode,
            freq: c.freq.clone(),
            n: c.n,
        }
    }

    pub fn deterministic(model: DeterministicModel, n: usize) -> Result<Self> {
        let cfg = ModelConfig::deterministic(model, n)?;
        Ok(PropagatorSpec {
            mode: PropagatorMode::Deterministic { model },
            freq: cfg.freq,
            n,
        })
    }

    pub fn m(&self) -> usize {
        self.freq.len()
    }

    pub fn label(&self) -> &'static str {
        match self.mode {
            PropagatorMode::Effective => "effective",
            PropagatorMode::TrueSkewShift { .. } => "true",
            PropagatorMode::Deterministic { .. } => "deterministic",
        }
    }

    /// `P(a, b) = sum_{j=1}^N K_{(a,b)}(j)` for the non-averaged modes,
    /// row-major `M x M`.
    fn pair_sums(&self) -> Vec<Complex64> {
        let (m, n) = (self.m(), self.n);
        let (quad, y, x): (QuadForm, &[f64], &[f64]) = match &self.mode {
            PropagatorMode::TrueSkewShift { y, x } => (QuadForm::Binomial, y, x),
            PropagatorMode::Deterministic { model } => (model.quad_form(), &[], &[]),
            PropagatorMode::Effective => unreachable!("effective mode has no pair sums"),
        };
        let rows: Vec<Vec<Complex64>> = (0..m)
            .map(|i| {
                let w = self.freq.values[i].frac();
                let yi = ExtReal::from(y.get(i).copied().unwrap_or(0.0));
                let xi = x.get(i).copied().unwrap_or(0.0);
                (1..=n as u64)
                    .map(|j| {
                        let t = phase_frac_unchecked(quad.multiplier(j), w) + phase_frac_unchecked(j, yi) + xi;
                        expi(t - t.floor())
                    })
                    .collect()
            })
            .collect();
        let mut p = vec![Complex64::zero(); m * m];
        for a in 0..m {
            for b in 0..m {
                p[a * m + b] = if a == b {
                    Complex64::new(n as f64, 0.0)
                } else {
                    rows[a].iter().zip(&rows[b]).map(|(u, v)| u * v.conj()).sum()
                };
            }
        }
        p
    }
}

/// Set partitions of `0..l` as block lists, with Möbius weights
/// `prod_B (-1)^{|B|-1} (|B|-1)!`.
fn partitions_with_mobius(l: usize) -> Vec<(Vec<Vec<usize>>, f64)> {
    let mut out = Vec::new();
    let mut label = vec![0usize; l];
    fn rec(pos: usize, max: usize, label: &mut Vec<usize>, out: &mut Vec<(Vec<Vec<usize>>, f64)>) {
        if pos == label.len() {
            let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); max];
            for (v, &b) in label.iter().enumerate() {
                blocks[b].push(v);
            }
            let mu = blocks
                .iter()
                .map(|b| {
                    let s = b.len() - 1;
                    let f: f64 = (1..=s).map(|x| x as f64).product();
                    if s % 2 == 0 {
                        f
                    } else {
                        -f
                    }
                })
                .product();
            out.push((blocks, mu));
            return;
        }
        for b in 0..=max {
            label[pos] = b;
            rec(pos + 1, max.max(b + 1), label, out);
        }
    }
    if l == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    rec(0, 0, &mut label, &mut out);
    out
}

/// `S(c) = sum_i e[w_i c]` for `0 <= c <= cmax`; negative `c` by conjugation.
struct CharTable {
    pos: Vec<Complex64>,
}

impl CharTable {
    fn new(freq: &FrequencySequence, cmax: u64) -> Result<Self> {
        let ws: Vec<ExtReal> = freq.values.iter().map(|w| w.frac()).collect();
        let pos = (0..=cmax)
            .map(|c| {
                let mut re = Neumaier::new();
                let mut im = Neumaier::new();
                for &w in &ws {
                    let z = expi(phase_frac(c, w)?);
                    re.add(z.re);
                    im.add(z.im);
                }
                Ok(Complex64::new(re.value(), im.value()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CharTable { pos })
    }

    #[inline]
    fn get(&self, c: i64) -> Complex64 {
        let z = self.pos[c.unsigned_abs() as usize];
        if c < 0 {
            z.conj()
        } else {
            z
        }
    }
}

fn phi_effective(g: &ExplorationGraph, spec: &PropagatorSpec) -> Result<Complex64> {
    let n = spec.n as u64;
    let k = g.k();
    // loops carry a free current and a unit propagator
    let loops = g.edges.iter().filter(|e| e.0 == e.1).count();
    let core = ExplorationGraph {
        l: g.l,
        edges: g.edges.iter().copied().filter(|e| e.0 != e.1).collect(),
        nu: g.nu.clone(),
    };
    let cmax = (core.k() as u64) * n * n;
    let table = CharTable::new(&spec.freq, cmax)?;
    let parts = partitions_with_mobius(core.l);
    let mut c = vec![0i64; core.l];
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    for_each_admissible_current(&core, n, CurrentMode::Basis, |j| {
        c.iter_mut().for_each(|x| *x = 0);
        for (r, &(t, h)) in core.edges.iter().enumerate() {
            let sq = (j[r] * j[r]) as i64;
            c[t] += sq;
            c[h] -= sq;
        }
        c.iter_mut().for_each(|x| *x /= 2);
        for (blocks, mu) in &parts {
            let mut z = Complex64::new(*mu, 0.0);
            for b in blocks {
                z *= table.get(b.iter().map(|&v| c[v]).sum());
            }
            re.add(z.re);
            im.add(z.im);
        }
    })?;
    let scale = (n as f64).powi(loops as i32) / (n as f64).powi(1 + k as i32);
    Ok(Complex64::new(re.value(), im.value()) * scale)
}

fn phi_pairwise(g: &ExplorationGraph, spec: &PropagatorSpec, p: &[Complex64]) -> Result<Complex64> {
    let (m, l, k) = (spec.m(), g.l, g.k());
    if (m as f64).powi(l as i32) > INJECTIVE_CAP {
        return Err(Error::Size(format!("M^l = {m}^{l} exceeds {INJECTIVE_CAP:e}")));
    }
    if l > m {
        return Ok(Complex64::zero());
    }
    let mut idx: Vec<usize> = (0..l).collect();
    let mut used = vec![false; m];
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    fn rec(
        pos: usize,
        idx: &mut Vec<usize>,
        used: &mut Vec<bool>,
        g: &ExplorationGraph,
        p: &[Complex64],
        m: usize,
        re: &mut Neumaier,
        im: &mut Neumaier,
    ) {
        if pos == idx.len() {
            let z: Complex64 = g.edges.iter().map(|&(t, h)| p[idx[t] * m + idx[h]]).product();
            re.add(z.re);
            im.add(z.im);
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                idx[pos] = i;
                rec(pos + 1, idx, used, g, p, m, re, im);
                used[i] = false;
            }
        }
    }
    rec(0, &mut idx, &mut used, g, p, m, &mut re, &mut im);
    Ok(Complex64::new(re.value(), im.value()) / (spec.n as f64).powi(1 + k as i32))
}

/// `Phi(G_L) = N^{-1-k} sum_{i ~ L} sum_j prod_r K_{(i_r, i_{r+1})}(j_r)`
/// with the index sum over distinct labels realizing the exploration.
/// Effective mode restricts `j` to admissible currents; the other modes sum
/// `j` over the whole box.
pub fn phi(g: &ExplorationGraph, spec: &PropagatorSpec) -> Result<Complex64> {
    match spec.mode {
        PropagatorMode::Effective => phi_effective(g, spec),
        _ => phi_pairwise(g, spec, &spec.pair_sums()),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiRecord {
    pub id: String,
    pub k: usize,
    pub l: usize,
    pub n: usize,
    pub m: usize,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub reducible: bool,
}

/// `Phi` of every exploration on `k` edges.
pub fn phi_table(k: usize, spec: &PropagatorSpec) -> Result<Vec<PhiRecord>> {
    let pairs = match spec.mode {
        PropagatorMode::Effective => None,
        _ => Some(spec.pair_sums()),
    };
    enumerate_explorations(k)?
        .into_iter()
        .map(|e| {
            let g = e.graph();
            let z = match &pairs {
                None => phi_effective(&g, spec)?,
                Some(p) => phi_pairwise(&g, spec, p)?,
            };
            Ok(PhiRecord {
                id: e.id(),
                k,
                l: e.l(),
                n: spec.n,
                m: spec.m(),
                re: z.re,
                im: z.im,
                abs: z.norm(),
                reducible: is_fully_reducible(&g.multigraph())?,
            })
        })
        .collect()
}

/// Sum of `Phi` over all explorations on `k` edges. In effective mode this
/// is `E_y[mu^(2k)]`; otherwise it is `mu^(2k)` of the fixed matrix.
pub fn moment_graph_sum(k: usize, spec: &PropagatorSpec) -> Result<Complex64> {
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    for r in phi_table(k, spec)? {
        re.add(r.re);
        im.add(r.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Sample mean and standard error of `mu^(2k)` over independent `y` draws.
pub fn moment_montecarlo(k: usize, config: &ModelConfig, samples: usize, seed: u64) -> Result<MeanEstimate> {
    if samples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, MC_STREAM);
    let mut vals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = build_matrix(&config.with_y_seed(rng.random()))?;
        let sigma = singular_values(&x)?;
        vals.push(moments(&sigma, config.n, k)?[k - 1]);
    }
    let s = samples as f64;
    let mean = vals.iter().sum::<f64>() / s;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0);
    Ok(MeanEstimate {
        mean,
        stderr: (var / s).sqrt(),
        samples,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IdentityReport {
    pub k: usize,
    pub n: usize,
    /// `(1/2N) Tr[H^{2k}]` from the singular values.
    pub lhs: f64,
    /// Graph sum with the non-averaged propagator.
    pub rhs: f64,
    pub rhs_imag: f64,
    pub diff: f64,
}

impl IdentityReport {
    pub fn holds(&self, rel: f64) -> bool {
        self.diff <= rel * self.lhs.abs().max(1.0) && self.rhs_imag.abs() <= rel * self.lhs.abs().max(1.0)
    }
}

/// Compares the spectral moment of `x` with the graph sum over all
/// explorations using the propagator of `x` itself.
pub fn moment_deterministic_identity(k: usize, x: &PhaseMatrix) -> Result<IdentityReport> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let sigma = singular_values(x)?;
    let lhs = moments(&sigma, x.cols(), k)?[k - 1];
    let rhs = moment_graph_sum(k, &PropagatorSpec::from_matrix(x))?;
    Ok(IdentityReport {
        k,
        n: x.cols(),
        lhs,
        rhs: rhs.re,
        rhs_imag: rhs.im,
        diff: (lhs - rhs.re).abs(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducibleRow {
    pub id: String,
    pub l: usize,
    pub n: usize,
    pub phi: f64,
    pub phi_imag: f64,
    pub target: f64,
    /// `N |Phi - rho^l|`
    pub scaled_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducibleReport {
    pub rho: f64,
    pub frequency: String,
    pub rows: Vec<ReducibleRow>,
    pub max_scaled_error: f64,
}

/// `|Phi(G) - rho^l|` for every fully reducible exploration on `k` edges.
pub fn phi_reducible_limit_check(k: usize, kind: &FrequencyKind, rho: f64, n_list: &[usize]) -> Result<ReducibleReport> {
    let reducible: Vec<Exploration> = enumerate_explorations(k)?
        .into_iter()
        .filter(|e| is_fully_reducible(&e.graph().multigraph()).unwrap_or(false))
        .collect();
    let mut rows = Vec::new();
    for &n in n_list {
        let spec = PropagatorSpec::effective(kind, n, rho)?;
        for e in &reducible {
            let z = phi(&e.graph(), &spec)?;
            let target = rho.powi(e.l() as i32);
            rows.push(ReducibleRow {
                id: e.id(),
                l: e.l(),
                n,
                phi: z.re,
                phi_imag: z.im,
                target,
                scaled_error: n as f64 * (z - target).norm(),
            });
        }
    }
    let max_scaled_error = rows.iter().map(|r| r.scaled_error).fold(0.0, f64::max);
    Ok(ReducibleReport {
        rho,
        frequency: kind.label(),
        rows,
        max_scaled_error,
    })
}

/// Fits the decay of `|Phi(G)|` in `N` under the effective propagator.
pub fn subleading_decay_check(g: &ExplorationGraph, kind: &FrequencyKind, rho: f64, n_list: &[usize]) -> Result<DecayFit> {
    let values = n_list
        .iter()
        .map(|&n| Ok(phi(g, &PropagatorSpec::effective(kind, n, rho)?)?.norm()))
        .collect::<Result<Vec<_>>>()?;
    fit_decay(n_list, &values)
}

/// Polynomial in `rho` with integer coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly(pub Vec<BigInt>);

impl Poly {
    pub fn constant(c: i64) -> Self {
        Poly(vec![BigInt::from(c)]).trimmed()
    }

    /// `rho^d`
    pub fn monomial(d: usize) -> Self {
        let mut v = vec![BigInt::zero(); d + 1];
        v[d] = BigInt::one();
        Poly(v)
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let len = self.0.len().max(o.0.len());
        let z = BigInt::zero();
        Poly((0..len).map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z)).collect()).trimmed()
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.0.is_empty() || o.0.is_empty() {
            return Poly(Vec::new());
        }
        let mut v = vec![BigInt::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly(v).trimmed()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + BigRational::from_integer(c.clone()))
    }

    pub fn coeff(&self, d: usize) -> BigInt {
        self.0.get(d).cloned().unwrap_or_default()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(d, c)| {
                let coef = if c.is_one() && d > 0 { String::new() } else { c.to_string() };
                match d {
                    0 => c.to_string(),
                    1 => format!("{coef}rho"),
                    _ => format!("{coef}rho^{d}"),
                }
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// The two readings of the limiting-moment recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecursionForm {
    /// `m_k = rho m_{k-1} + sum_{n=2}^k m_{n-1} m_{k-n}`
    Proof,
    /// `m_k = m_{k-1} + rho sum_{n=2}^k m_{n-1} m_{k-n}`; disagrees with the
    /// graph enumeration from `k = 3` on.
    Statement,
}

/// Recursion polynomials `m_0..m_{k_max}` in `rho`.
pub fn recursion_polys(k_max: usize, form: RecursionForm) -> Result<Vec<Poly>> {
    if k_max > MAX_RECURSION_K {
        return Err(Error::Size(format!("k_max must be at most {MAX_RECURSION_K}")));
    }
    let rho = Poly::monomial(1);
    let mut m = vec![Poly::constant(1)];
    if k_max >= 1 {
        m.push(rho.clone());
    }
    for k in 2..=k_max {
        let mut conv = Poly(Vec::new());
        for n in 2..=k {
            conv = conv.add(&m[n - 1].mul(&m[k - n]));
        }
        let next = match form {
            RecursionForm::Proof => rho.mul(&m[k - 1]).add(&conv),
            RecursionForm::Statement => m[k - 1].add(&rho.mul(&conv)),
        };
        m.push(next);
    }
    Ok(m)
}

pub fn catalan(k_max: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::one()];
    for k in 0..k_max {
        // c_{k+1} = c_k * 2(2k+1) / (k+2)
        let next = &c[k] * BigInt::from(2 * (2 * k + 1)) / BigInt::from(k + 2);
        c.push(next);
    }
    c
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentTable {
    pub rho: String,
    pub form: RecursionForm,
    pub mu_tilde: Vec<String>,
    pub catalan: Vec<String>,
    pub reducible_polys: Vec<String>,
    #[serde(skip)]
    pub exact: Vec<BigRational>,
    #[serde(skip)]
    pub polys: Vec<Poly>,
}

impl MomentTable {
    pub fn matches_catalan(&self) -> bool {
        let c = catalan(self.exact.len().saturating_sub(1));
        self.exact.iter().zip(&c).all(|(m, c)| m == &BigRational::from_integer(c.clone()))
    }
}

pub fn recursion_moments(k_max: usize, rho: &BigRational, form: RecursionForm) -> Result<MomentTable> {
    if !rho.is_positive() {
        return Err(Error::Domain("rho must be positive".into()));
    }
    let polys = recursion_polys(k_max, form)?;
    let exact: Vec<BigRational> = polys.iter().map(|p| p.eval(rho)).collect();
    Ok(MomentTable {
        rho: rho.to_string(),
        form,
        mu_tilde: exact.iter().map(|x| x.to_string()).collect(),
        catalan: catalan(k_max).iter().map(|c| c.to_string()).collect(),
        reducible_polys: polys.iter().map(|p| p.to_string()).collect(),
        exact,
        polys,
    })
}

/// `sum rho^{|V|}` over the fully reducible explorations on `k` edges.
pub fn reducible_weight_sum(k: usize) -> Result<Poly> {
    if k == 0 || k > MAX_REDUCIBLE_K {
        return Err(Error::Size(format!("k must be in 1..={MAX_REDUCIBLE_K}")));
    }
    let mut p = Poly(Vec::new());
    for e in enumerate_explorations(k)? {
        if is_fully_reducible(&e.graph().multigraph())? {
            p = p.add(&Poly::monomial(e.l()));
        }
    }
    Ok(p)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpRow {
    pub k: u32,
    pub recursion: f64,
    /// Quadrature moment per convention, in [`MpConvention::ALL`] order.
    pub quadrature: Vec<f64>,
    pub matches: Vec<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpCrosscheck {
    pub rho: f64,
    pub rows: Vec<MpRow>,
    /// Conventions that match at every `k`.
    pub matching: Vec<MpConvention>,
}

/// Recursion moments against quadrature moments of each reading of the
/// rescaled Marchenko-Pastur law.
pub fn mp_moment_crosscheck(k_max: u32, rho: f64, rel_tol: f64) -> Result<MpCrosscheck> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    let polys = recursion_polys(k_max as usize, RecursionForm::Proof)?;
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let p = &polys[k as usize];
        let recursion: f64 = p
            .0
            .iter()
            .enumerate()
            .map(|(d, c)| c.to_f64().unwrap_or(f64::NAN) * rho.powi(d as i32))
            .sum();
        let quadrature = MpConvention::ALL
            .iter()
            .map(|c| c.moment(k, rho, 1e-12))
            .collect::<Result<Vec<_>>>()?;
        let matches = quadrature
            .iter()
            .map(|q| (q - recursion).abs() <= rel_tol * recursion.abs())
            .collect();
        rows.push(MpRow {
            k,
            recursion,
            quadrature,
            matches,
        });
    }
    let matching = MpConvention::ALL
        .iter()
        .enumerate()
        .filter(|(i, _)| rows.iter().all(|r| r.matches[*i]))
        .map(|(_, c)| *c)
        .collect();
    Ok(MpCrosscheck { rho, rows, matching })
}

/// The lower-bound sum for one `N'`:
/// `(4 / (pi^2 N'^3)) sum_{s,r=1}^{floor(N'/2)} (||4 N' sqrt2 rs|| / ||4 sqrt2 rs||)^2`.
pub fn model_b_excess(np: usize) -> Result<f64> {
    let w = ExtReal::sqrt_u64(2);
    let h = (np / 2) as u64;
    let mut acc = Neumaier::new();
    for s in 1..=h {
        for r in 1..=h {
            let base = 4 * r * s;
            let den = torus_norm(phase_frac(base, w)?);
            let num = torus_norm(phase_frac(base * np as u64, w)?);
            acc.add((num / den).powi(2));
        }
    }
    Ok(4.0 / (PI * PI * (np as f64).powi(3)) * acc.value())
}

/// `mu^(4)` of model B computed from the row-sum form
/// `1 + N^-3 sum_{j1 != j2} |sum_i e[sqrt2 i (j1^2 - j2^2)]|^2`.
pub fn model_b_fourth_moment(n: usize) -> Result<f64> {
    let w = ExtReal::sqrt_u64(2);
    let nn = n as i64;
    let mut acc = Neumaier::new();
    for j1 in 1..=nn {
        for j2 in 1..=nn {
            if j1 != j2 {
                acc.add(geometric_sq(n as u64, phase_frac_signed(j1 * j1 - j2 * j2, w)?));
            }
        }
    }
    Ok(1.0 + acc.value() / (n as f64).powi(3))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelBBound {
    pub n: usize,
    pub n_primes: [usize; 2],
    pub values: [f64; 2],
    pub max: f64,
    /// `2 + max`, the bound as the argument is written (it counts the
    /// `i1 = i2` terms twice).
    pub chain_bound: f64,
    /// `1 + max`, the bound once the diagonal is counted once.
    pub corrected_bound: f64,
    /// Exact `mu^(4)` at `N`.
    pub mu4: f64,
}

pub fn model_b_fourth_bound(n: usize) -> Result<ModelBBound> {
    if !(2..=4000).contains(&n) {
        return Err(Error::Size(format!("N must be in 2..=4000, got {n}")));
    }
    let n_primes = [n, 8 * n / 7];
    let values = [model_b_excess(n_primes[0])?, model_b_excess(n_primes[1])?];
    let max = values[0].max(values[1]);
    Ok(ModelBBound {
        n,
        n_primes,
        values,
        max,
        chain_bound: 2.0 + max,
        corrected_bound: 1.0 + max,
        mu4: model_b_fourth_moment(n)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nu: &[usize]) -> ExplorationGraph {
        Exploration::new(nu.to_vec()).unwrap().graph()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn mobius_weights() {
        // sum over partitions of mu(pi) * M^{#blocks} = M (M-1) ... (M-l+1)
        for l in 0..=5 {
            let m = 7.0f64;
            let s: f64 = partitions_with_mobius(l).iter().map(|(b, mu)| mu * m.powi(b.len() as i32)).sum();
            let ff: f64 = (0..l).map(|i| m - i as f64).product();
            assert_eq!(s, ff);
        }
    }

    #[test]
    fn simple_phis() {
        let spec = PropagatorSpec::effective(&FrequencyKind::sqrt2_rotation(), 50, 1.0).unwrap();
        let one = phi(&graph(&[1]), &spec).unwrap();
        assert!((one - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let spec = PropagatorSpec::effective(&FrequencyKind::Random { seed: 3 }, 50, 0.7).unwrap();
        let m = spec.m() as f64;
        let two = phi(&graph(&[1, 2]), &spec).unwrap();
        assert!((two.re - m * (m - 1.0) / 2500.0).abs() < 1e-12);
        assert!(two.im.abs() < 1e-12);
    }

    #[test]
    fn melon_constant_frequency() {
        let n = 12;
        let spec = PropagatorSpec::effective(&FrequencyKind::Constant { c: ExtReal::from(0.37) }, n, 1.0).unwrap();
        let z = phi(&graph(&[1, 2, 1, 2]), &spec).unwrap();
        let nf = n as f64;
        let want = nf * (nf - 1.0) * (2.0 * nf.powi(3) + nf) / (3.0 * nf.powi(5));
        assert!((z.re - want).abs() < 1e-12, "{} vs {want}", z.re);
    }

    #[test]
    fn k2_graph_sum_closed_form() {
        let n = 30;
        let spec = PropagatorSpec::effective(&FrequencyKind::Constant { c: ExtReal::from(0.0) }, n, 1.0).unwrap();
        let s = moment_graph_sum(2, &spec).unwrap();
        assert!((s.re - (2.0 - 1.0 / n as f64)).abs() < 1e-12);
    }

    #[test]
    fn recursion_forms() {
        let p = recursion_polys(3, RecursionForm::Proof).unwrap();
        assert_eq!(p[2].to_string(), "rho + rho^2");
        assert_eq!(p[3].to_string(), "rho + 3rho^2 + rho^3");
        let s = recursion_polys(3, RecursionForm::Statement).unwrap();
        assert_eq!(s[3].to_string(), "rho + 2rho^2 + 2rho^3");
        let t = recursion_moments(6, &rat(1, 1), RecursionForm::Proof).unwrap();
        assert_eq!(t.mu_tilde, ["1", "1", "2", "5", "14", "42", "132"]);
        assert!(t.matches_catalan());
        let h = recursion_moments(2, &rat(1, 2), RecursionForm::Proof).unwrap();
        assert_eq!(h.exact[2], rat(3, 4));
        let two = recursion_moments(2, &rat(2, 1), RecursionForm::Proof).unwrap();
        assert_eq!(two.exact[2], rat(6, 1));
        assert!(recursion_moments(31, &rat(1, 1), RecursionForm::Proof).is_err());
    }

    #[test]
    fn reducible_sums_small() {
        assert_eq!(reducible_weight_sum(1).unwrap().to_string(), "rho");
        assert_eq!(reducible_weight_sum(2).unwrap().to_string(), "rho + rho^2");
        assert_eq!(reducible_weight_sum(3).unwrap().to_string(), "rho + 3rho^2 + rho^3");
    }

    #[test]
    fn catalan_numbers() {
        let c: Vec<String> = catalan(10).iter().map(|c| c.to_string()).collect();
        assert_eq!(c, ["1", "1", "2", "5", "14", "42", "132", "429", "1430", "4862", "16796"]);
    }

    #[test]
    fn mp_corrected_convention_matches() {
        for rho in [0.5, 1.0, 2.0] {
            let r = mp_moment_crosscheck(4, rho, 1e-6).unwrap();
            assert!(r.matching.contains(&MpConvention::Corrected), "{r:?}");
        }
    }

    #[test]
    fn model_b_forms_agree() {
        let x = build_matrix(&ModelConfig::deterministic(DeterministicModel::B, 40).unwrap()).unwrap();
        let sigma = singular_values(&x).unwrap();
        let mu4 = moments(&sigma, 40, 2).unwrap()[1];
        assert!((mu4 - model_b_fourth_moment(40).unwrap()).abs() < 1e-9);
        let b = model_b_fourth_bound(100).unwrap();
        assert!(b.values.iter().all(|v| *v > 0.0));
        assert!(1.0 + b.values[0] <= b.mu4 + 1e-12);
    }
}
