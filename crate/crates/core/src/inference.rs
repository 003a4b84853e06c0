//! Per-pair hypothesis tests and false-discovery-rate control.
//!
//! Each similarity measure has its own null distribution:
//!
//! * single-attribute Pearson correlation: Fisher's z against N(0, 1);
//! * max/min of the per-attribute correlations: a two-statistic tail
//!   approximation (or a Monte Carlo estimate of the same tail);
//! * canonical correlation: Bartlett's χ² on all canonical roots.
//!
//! [`bh_fdr`] applies the Benjamini–Hochberg step-up rule across the pairs.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::numkernel::{cholesky, inverse, log_det_spd, Matrix};
use crate::similarity::{stack_columns, Extreme};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Similarity measure used to declare an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pearson,
    Max,
    Min,
    Cca,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Pearson => "pearson",
            Method::Max => "max",
            Method::Min => "min",
            Method::Cca => "cca",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(Method::Pearson),
            "max" => Ok(Method::Max),
            "min" => Ok(Method::Min),
            "cca" => Ok(Method::Cca),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// `H1: similarity > 0`.
    OneSided,
    /// `H1: similarity ≠ 0`.
    TwoSided,
}

/// How tail probabilities of a max/min of two z-statistics are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMode {
    /// Closed-form tail approximation ([`extreme_corr_pvalue`]).
    Formula,
    /// Empirical tail from simulated correlated normals.
    MonteCarlo,
}

impl std::str::FromStr for PValueMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formula" => Ok(PValueMode::Formula),
            "montecarlo" => Ok(PValueMode::MonteCarlo),
            other => Err(Error::InvalidInput(format!("unknown p-value mode '{other}'"))),
        }
    }
}

/// Result of one pairwise test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTest {
    pub pair: (usize, usize),
    pub method: Method,
    /// z for pearson/max/min, χ² for cca.
    pub statistic: f64,
    /// Present only for χ²-based methods.
    pub df: Option<usize>,
    pub p: f64,
    pub q: f64,
    pub n: usize,
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper tail `P(Z > c)` of the standard normal.
pub fn normal_sf(c: f64) -> f64 {
    0.5 * erfc(c / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(c: f64) -> f64 {
    normal_sf(-c)
}

/// Upper tail `P(χ²_df > x)`.
pub fn chi2_sf(x: f64, df: f64) -> Result<f64> {
    if !(df >= 1.0) || !df.is_finite() {
        return Err(Error::InvalidDf(df));
    }
    if x.is_nan() {
        return Err(Error::NonFiniteInput);
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(gamma_ur(0.5 * df, 0.5 * x).clamp(0.0, 1.0))
}

/// Two-sided p-value from a one-sided upper tail of a continuous statistic.
pub fn two_sided_from_upper(upper: f64) -> f64 {
    (2.0 * upper.min(1.0 - upper)).clamp(0.0, 1.0)
}

/// Fisher's variance-stabilized z-statistic `√(n−3)/2 · ln((1+ρ)/(1−ρ))`.
pub fn fisher_z(rho_hat: f64, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(Error::InsufficientSamples { needed: 4, got: n });
    }
    if !rho_hat.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if rho_hat.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation);
    }
    // ln((1+ρ)/(1−ρ)) = 2·atanh(ρ), evaluated on |ρ| so the result is exactly odd
    Ok(((n - 3) as f64).sqrt() * rho_hat.abs().atanh().copysign(rho_hat))
}

/// p-value of a Fisher z-statistic.
pub fn fisher_pvalue(z: f64, sided: Sidedness) -> f64 {
    match sided {
        Sidedness::OneSided => normal_sf(z),
        Sidedness::TwoSided => (2.0 * normal_sf(z.abs())).min(1.0),
    }
}

/// Bartlett's χ² test of all canonical roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BartlettTest {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

/// Smallest sample count accepted by [`bartlett_chi2`] for `k` attributes.
pub fn bartlett_min_samples(k: usize) -> usize {
    let d = 2 * k;
    (2 * k + 3).max(d * (d - 1) / 2 + 1)
}

/// `−[(n−1) − (k + ½)] · ln ∏(1 − ρ̂²)` with `k²` degrees of freedom.
pub fn bartlett_chi2(roots: &[f64], n: usize, k: usize) -> Result<BartlettTest> {
    if k == 0 || roots.len() != k {
        return Err(Error::LengthMismatch {
            left: roots.len(),
            right: k,
        });
    }
    let needed = bartlett_min_samples(k);
    if n < needed {
        return Err(Error::InsufficientSamples { needed, got: n });
    }
    for &r in roots {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::RootOutOfRange(r));
        }
    }
    let factor = (n - 1) as f64 - (k as f64 + 0.5);
    let log_prod: f64 = roots.iter().map(|r| (1.0 - r * r).ln()).sum();
    let statistic = if log_prod == 0.0 { 0.0 } else { -factor * log_prod };
    let df = k * k;
    let p = chi2_sf(statistic, df as f64)?;
    Ok(BartlettTest { statistic, df, p })
}

/// Closed-form tail approximation for the max (or min) of two correlated
/// z-statistics.
///
/// With `L = arccos(rho_z)` and `c` the observed max (min):
/// max: `Φ̄(c) + φ(c)·(φ(cL/2) − ½)/(c/2)`;
/// min: `Φ̄(c) − φ(c)·(φ(cL/2) − ½)/(c/2)`; both clamped to `[0, 1]`.
/// `φ` is the standard normal density throughout. The approximation is
/// crude at low `rho_z`; see the calibration table in the docs.
pub fn extreme_corr_pvalue(z1: f64, z2: f64, rho_z: f64, mode: Extreme) -> Result<f64> {
    if !(z1.is_finite() && z2.is_finite() && rho_z.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if rho_z.abs() > 1.0 {
        return Err(Error::InvalidInput(format!("rho_z = {rho_z} outside [-1, 1]")));
    }
    let l = rho_z.acos();
    let c = match mode {
        Extreme::Max => z1.max(z2),
        Extreme::Min => z1.min(z2),
    };
    let correction = normal_pdf(c) * (normal_pdf(c * l / 2.0) - 0.5) / (c / 2.0);
    let p = match mode {
        Extreme::Max => normal_sf(c) + correction,
        Extreme::Min => normal_sf(c) - correction,
    };
    if p.is_nan() {
        return Err(Error::InternalNumerical("tail approximation undefined".into()));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Shared bank of iid standard normal draws, `draws x dim`, reused across
/// Monte Carlo tail estimates so that results are seed-deterministic.
#[derive(Debug, Clone)]
pub struct NormalBank {
    dim: usize,
    draws: usize,
    data: Vec<f64>,
}

impl NormalBank {
    pub fn new(dim: usize, draws: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..dim * draws)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        NormalBank { dim, draws, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    /// Applies `L` (lower Cholesky factor of `corr`) to each draw and reduces
    /// it to its max or min component.
    fn extremes(&self, corr: &Matrix, mode: Extreme) -> Result<Vec<f64>> {
        if corr.rows() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "correlation is {}x{}, bank dimension {}",
                corr.rows(),
                corr.cols(),
                self.dim
            )));
        }
        let l = correlated_factor(corr)?;
        let d = self.dim;
        let mut buf = vec![0.0; d];
        Ok((0..self.draws)
            .map(|t| {
                let u = self.row(t);
                for (a, slot) in buf.iter_mut().enumerate() {
                    *slot = (0..=a).map(|b| l[(a, b)] * u[b]).sum();
                }
                let init = buf[0];
                buf[1..].iter().fold(init, |acc, &x| match mode {
                    Extreme::Max => acc.max(x),
                    Extreme::Min => acc.min(x),
                })
            })
            .collect())
    }
}

/// Cholesky factor of a correlation matrix, tolerating exact collinearity
/// (e.g. `rho_z = ±1`).
fn correlated_factor(corr: &Matrix) -> Result<Matrix> {
    match cholesky(corr) {
        Ok(l) => Ok(l),
        Err(Error::NotPositiveDefinite { .. }) => {
            let d = corr.rows();
            let jitter = Matrix::from_fn(d, d, |i, j| {
                if i == j {
                    corr[(i, j)] + 1e-9
                } else {
                    corr[(i, j)]
                }
            });
            cholesky(&jitter)
        }
        Err(e) => Err(e),
    }
}

/// Empirical null distribution of the max and min of correlated standard
/// normals, sorted for repeated tail queries.
#[derive(Debug, Clone)]
pub struct ExtremeNullTable {
    maxima: Vec<f64>,
    minima: Vec<f64>,
}

impl ExtremeNullTable {
    pub fn new(bank: &NormalBank, corr: &Matrix) -> Result<Self> {
        let mut maxima = bank.extremes(corr, Extreme::Max)?;
        let mut minima = bank.extremes(corr, Extreme::Min)?;
        maxima.sort_by(f64::total_cmp);
        minima.sort_by(f64::total_cmp);
        Ok(ExtremeNullTable { maxima, minima })
    }

    /// Two-statistic table with correlation `rho_z`.
    pub fn bivariate(bank: &NormalBank, rho_z: f64) -> Result<Self> {
        Self::new(bank, &Matrix::from_rows(&[[1.0, rho_z], [rho_z, 1.0]]))
    }

    pub fn draws(&self) -> usize {
        self.maxima.len()
    }

    /// `P(extreme > c)` estimated from the table.
    pub fn upper_tail(&self, c: f64, mode: Extreme) -> f64 {
        let sorted = match mode {
            Extreme::Max => &self.maxima,
            Extreme::Min => &self.minima,
        };
        let at_or_below = sorted.partition_point(|&x| x <= c);
        (sorted.len() - at_or_below) as f64 / sorted.len() as f64
    }
}

/// Monte Carlo `P(extreme > c)` for a single query without sorting.
pub fn extreme_tail_mc(bank: &NormalBank, corr: &Matrix, c: f64, mode: Extreme) -> Result<f64> {
    let ext = bank.extremes(corr, mode)?;
    Ok(ext.iter().filter(|&&x| x > c).count() as f64 / ext.len() as f64)
}

/// Monte Carlo standard error of a tail-frequency estimate.
pub fn mc_standard_error(p: f64, draws: usize) -> f64 {
    (p * (1.0 - p) / draws as f64).sqrt()
}

/// Benjamini–Hochberg decision at level `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrDecision {
    pub gamma: f64,
    /// Number of rejections: the largest rank `i` with `p_(i) ≤ iγ/m`, or 0.
    pub cutoff_index: usize,
    /// Original indices of rejected hypotheses, ascending.
    pub rejected: Vec<usize>,
    /// Step-up adjusted p-values aligned with the input.
    pub qvalues: Vec<f64>,
}

impl FdrDecision {
    pub fn is_rejected(&self, idx: usize) -> bool {
        self.rejected.binary_search(&idx).is_ok()
    }
}

/// Benjamini–Hochberg step-up procedure; ties in p are ordered by index.
pub fn bh_fdr(pvalues: &[f64], gamma: f64) -> Result<FdrDecision> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    if let Some(&bad) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidP(bad));
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        pvalues[a]
            .partial_cmp(&pvalues[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mf = m as f64;
    let cutoff_index = (1..=m)
        .rev()
        .find(|&i| pvalues[order[i - 1]] <= i as f64 * gamma / mf)
        .unwrap_or(0);

    let mut qvalues = vec![0.0; m];
    let mut running = 1.0f64;
    for i in (1..=m).rev() {
        let idx = order[i - 1];
        running = running.min(pvalues[idx] / (i as f64 / mf)).min(1.0);
        qvalues[idx] = running;
    }

    let mut rejected: Vec<usize> = order[..cutoff_index].to_vec();
    rejected.sort_unstable();
    Ok(FdrDecision {
        gamma,
        cutoff_index,
        rejected,
        qvalues,
    })
}

/// Likelihood-ratio test of the homogeneity assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityTest {
    /// `−2 log Λ`.
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
    /// Outer iterations of the constrained fit.
    pub iterations: usize,
}

/// Degrees of freedom of [`homogeneity_lrt`]: `k(k−1)` constraints on the
/// correlation structure, `k(k−1)/2` each for `Σ_ii = Σ_jj` and `Σ_ij = Σ_ijᵀ`.
pub fn homogeneity_df(k: usize) -> usize {
    k * k.saturating_sub(1)
}

const LRT_MAX_ITER: usize = 500;
const LRT_TOL: f64 = 1e-10;

/// Gaussian likelihood-ratio test of `corr(X_i) = corr(X_j)` and
/// `corr(X_i, X_j) = corr(X_i, X_j)ᵀ`, with free per-variable scales.
///
/// The constrained model is `Σ = D Σ₀ D` with `D` diagonal and `Σ₀` invariant
/// under swapping the two nodes. It is fitted by alternating the exact
/// `Σ₀` update (average of `D⁻¹SD⁻¹` and its node-swapped copy) with a
/// coordinate-ascent update of `D`, until the log-likelihood changes by less
/// than `1e-10`.
pub fn homogeneity_lrt(samples_i: &Matrix, samples_j: &Matrix) -> Result<HomogeneityTest> {
    if samples_i.cols() != samples_j.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} attributes",
            samples_i.cols(),
            samples_j.cols()
        )));
    }
    let k = samples_i.cols();
    let d = 2 * k;
    let x = stack_columns(samples_i, samples_j)?;
    let n = x.rows();
    if n <= d + 1 {
        return Err(Error::InsufficientSamples {
            needed: d + 2,
            got: n,
        });
    }
    let df = homogeneity_df(k);

    let s = mle_covariance(&x);
    let log_det_s = log_det_spd(&s).map_err(|_| Error::SingularCovariance)?;
    let nf = n as f64;
    // log-likelihoods up to the shared constant
    let loglik_full = -0.5 * nf * (log_det_s + d as f64);

    let swap = |a: usize| if a < k { a + k } else { a - k };
    let mut u: Vec<f64> = (0..d).map(|a| 1.0 / s[(a, a)].sqrt()).collect();
    let mut prev = f64::NEG_INFINITY;
    let mut loglik = prev;
    let mut iterations = 0;
    for it in 1..=LRT_MAX_ITER {
        iterations = it;
        let t = Matrix::from_fn(d, d, |a, b| u[a] * s[(a, b)] * u[b]);
        let sigma0 = Matrix::from_fn(d, d, |a, b| 0.5 * (t[(a, b)] + t[(swap(a), swap(b))]));
        let inv0 = inverse(&sigma0).map_err(|_| Error::SingularCovariance)?;
        let m = Matrix::from_fn(d, d, |a, b| inv0[(a, b)] * s[(a, b)]);
        for _ in 0..200 {
            let mut delta: f64 = 0.0;
            for a in 0..d {
                let c: f64 = (0..d).filter(|&b| b != a).map(|b| m[(a, b)] * u[b]).sum();
                let maa = m[(a, a)];
                let next = (-c + (c * c + 4.0 * maa).sqrt()) / (2.0 * maa);
                delta = delta.max((next - u[a]).abs() / u[a]);
                u[a] = next;
            }
            if delta < 1e-14 {
                break;
            }
        }
        let quad = m.bilinear(&u, &u);
        let log_det0 = log_det_spd(&sigma0).map_err(|_| Error::SingularCovariance)?;
        let log_det_sigma = log_det0 - 2.0 * u.iter().map(|v| v.ln()).sum::<f64>();
        loglik = -0.5 * nf * (log_det_sigma + quad);
        if (loglik - prev).abs() < LRT_TOL {
            break;
        }
        prev = loglik;
    }
    let statistic = (2.0 * (loglik_full - loglik)).max(0.0);
    let p = if df == 0 {
        1.0
    } else {
        chi2_sf(statistic, df as f64)?
    };
    Ok(HomogeneityTest {
        statistic,
        df,
        p,
        iterations,
    })
}

/// Maximum-likelihood covariance (divisor `n`) of the columns of `x`.
fn mle_covariance(x: &Matrix) -> Matrix {
    let (n, d) = (x.rows(), x.cols());
    let means: Vec<f64> = (0..d)
        .map(|c| (0..n).map(|r| x[(r, c)]).sum::<f64>() / n as f64)
        .collect();
    let mut s = Matrix::zeros(d, d);
    for r in 0..n {
        for a in 0..d {
            let da = x[(r, a)] - means[a];
            for b in a..d {
                s[(a, b)] += da * (x[(r, b)] - means[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = s[(a, b)] / n as f64;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    s
}
