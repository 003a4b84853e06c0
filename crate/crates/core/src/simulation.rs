//! Structured-covariance sampling and the two-attribute power study.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{
    bartlett_chi2, extreme_corr_pvalue, fisher_pvalue, fisher_z, two_sided_from_upper,
    ExtremeNullTable, NormalBank, PValueMode, Sidedness,
};
use crate::numkernel::{cholesky, corr_matrix, pearson_corr, Matrix};
use crate::similarity::{canonical_corr, k2_domain, Extreme, K2Params, PairCorrelationStructure};

/// `[[Σ_m, Σ_c], [Σ_c, Σ_m]]` for a valid parameter point.
pub fn build_sigma(p: &K2Params) -> Result<Matrix> {
    if !k2_domain(p) {
        return Err(Error::OutOfDomain(format!(
            "(r={}, b={}, rho1={}, rho2={})",
            p.r, p.b, p.rho1, p.rho2
        )));
    }
    let m = p.sigma_m();
    let c = p.sigma_c();
    Matrix::block(&m, &c, &c, &m)
}

/// Draws `n` rows of `L z` with `z` iid standard normal and `L Lᵀ = Σ`.
pub fn sample_mvn(sigma: &Matrix, n: usize, seed: u64) -> Result<Matrix> {
    let l = cholesky(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with_factor(&l, n, &mut rng))
}

fn sample_with_factor(l: &Matrix, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let d = l.rows();
    let mut out = Matrix::zeros(n, d);
    let mut z = vec![0.0; d];
    for r in 0..n {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        for a in 0..d {
            out[(r, a)] = (0..=a).map(|b| l[(a, b)] * z[b]).sum();
        }
    }
    out
}

/// Generator for replicate `rep`: the same stream is used at every grid
/// point and for every scenario.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// The five tests of the power study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// Fisher test of the first attribute correlation.
    First = 1,
    /// Fisher test of the second attribute correlation.
    Second = 2,
    /// Max of the two Fisher statistics.
    Max = 3,
    /// Min of the two Fisher statistics.
    Min = 4,
    /// Bartlett test of the canonical roots.
    Canonical = 5,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::First,
        Scenario::Second,
        Scenario::Max,
        Scenario::Min,
        Scenario::Canonical,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|s| s.number() == n)
            .ok_or_else(|| Error::InvalidInput(format!("scenario {n} not in 1..=5")))
    }
}

/// Ray through the `(r, b)` plane starting at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Slice {
    /// `b = c · r`, indexed by `r`.
    BPerR(f64),
    /// `r = c · b`, indexed by `b`.
    RPerB(f64),
}

impl Slice {
    /// Parses `b=0.2r` or `r=0.2b`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("slice '{s}' is not of the form b=<c>r or r=<c>b"));
        let s_trim = s.replace(' ', "");
        let (lhs, rhs) = s_trim.split_once('=').ok_or_else(bad)?;
        let (coef, var) = rhs.split_at(rhs.len().checked_sub(1).ok_or_else(bad)?);
        let coef: f64 = if coef.is_empty() { 1.0 } else { coef.parse().map_err(|_| bad())? };
        match (lhs, var) {
            ("b", "r") => Ok(Slice::BPerR(coef)),
            ("r", "b") => Ok(Slice::RPerB(coef)),
            _ => Err(bad()),
        }
    }

    /// `(r, b)` at slice parameter `t`.
    pub fn point(&self, t: f64) -> (f64, f64) {
        match *self {
            Slice::BPerR(c) => (t, c * t),
            Slice::RPerB(c) => (c * t, t),
        }
    }

    /// Supremum of `t ≥ 0` keeping the point inside the domain.
    pub fn limit(&self, rho1: f64, rho2: f64) -> f64 {
        let inside = |t: f64| {
            let (r, b) = self.point(t);
            k2_domain(&K2Params::new(r, b, rho1, rho2))
        };
        if !inside(0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while inside(hi) && hi < 1e6 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `steps` points from the origin up to `fraction` of the domain limit.
    pub fn grid(&self, rho1: f64, rho2: f64, steps: usize, fraction: f64) -> Vec<(f64, f64)> {
        let top = self.limit(rho1, rho2) * fraction;
        let denom = steps.saturating_sub(1).max(1) as f64;
        (0..steps).map(|i| self.point(top * i as f64 / denom)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudySpec {
    pub rho1: f64,
    pub rho2: f64,
    /// `(r, b)` points.
    pub grid: Vec<(f64, f64)>,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
    pub sided: Sidedness,
    /// Population correlation of the two Fisher statistics; estimated from
    /// the replicates at each grid point when absent.
    pub rho_z: Option<f64>,
    pub pvalue_mode: PValueMode,
    /// Draws for the Monte Carlo max/min tail.
    pub mc_draws: usize,
}

impl PowerStudySpec {
    pub fn new(rho1: f64, rho2: f64, grid: Vec<(f64, f64)>) -> Self {
        PowerStudySpec {
            rho1,
            rho2,
            grid,
            n: 50,
            reps: 1000,
            alpha: 0.05,
            seed: 0,
            scenarios: Scenario::ALL.to_vec(),
            sided: Sidedness::OneSided,
            rho_z: None,
            pvalue_mode: PValueMode::Formula,
            mc_draws: 1_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.n < crate::inference::bartlett_min_samples(2) {
            return Err(Error::InsufficientSamples {
                needed: crate::inference::bartlett_min_samples(2),
                got: self.n,
            });
        }
        if self.scenarios.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &(r, b) in &self.grid {
            if !k2_domain(&K2Params::new(r, b, self.rho1, self.rho2)) {
                return Err(Error::OutOfDomain(format!("grid point (r={r}, b={b})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub r: f64,
    pub b: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub scenario: u8,
    pub rejections: usize,
    pub power: f64,
    pub mc_se: f64,
    /// Correlation of the Fisher statistics used by scenarios 3 and 4.
    pub rho_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    /// Grid-major, scenarios in the order requested.
    pub rows: Vec<PowerRow>,
}

impl PowerResult {
    pub fn get(&self, point: usize, scenario: Scenario, n_scenarios: usize) -> &PowerRow {
        let rows = &self.rows[point * n_scenarios..(point + 1) * n_scenarios];
        rows.iter()
            .find(|r| r.scenario == scenario.number())
            .expect("scenario was requested")
    }

    /// Rows of one scenario in grid order.
    pub fn scenario(&self, scenario: Scenario) -> Vec<&PowerRow> {
        self.rows.iter().filter(|r| r.scenario == scenario.number()).collect()
    }
}

struct ReplicateStats {
    z1: f64,
    z2: f64,
    p_canonical: f64,
}

fn replicate(l: &Matrix, n: usize, seed: u64, rep: usize) -> Result<ReplicateStats> {
    let mut rng = replicate_rng(seed, rep as u64);
    let x = sample_with_factor(l, n, &mut rng);
    let corr = corr_matrix(&x)?;
    let z1 = fisher_z(corr[(0, 2)], n)?;
    let z2 = fisher_z(corr[(1, 3)], n)?;
    let structure = PairCorrelationStructure::from_joint(&corr)?;
    let sol = canonical_corr(&structure)?;
    let p_canonical = bartlett_chi2(&sol.roots, n, 2)?.p;
    Ok(ReplicateStats { z1, z2, p_canonical })
}

/// Estimates rejection rates of the five scenario tests at each grid point.
pub fn power_study(spec: &PowerStudySpec) -> Result<PowerResult> {
    spec.validate()?;
    let bank = match spec.pvalue_mode {
        PValueMode::MonteCarlo => Some(NormalBank::new(2, spec.mc_draws, spec.seed)),
        PValueMode::Formula => None,
    };
    let mut rows = Vec::with_capacity(spec.grid.len() * spec.scenarios.len());
    for &(r, b) in &spec.grid {
        let params = K2Params::new(r, b, spec.rho1, spec.rho2);
        let l = cholesky(&build_sigma(&params)?)?;
        let stats = (0..spec.reps)
            .into_par_iter()
            .map(|rep| replicate(&l, spec.n, spec.seed, rep))
            .collect::<Result<Vec<_>>>()?;

        let rho_z = match spec.rho_z {
            Some(v) => v,
            None if spec.reps >= 3 => {
                let z1: Vec<f64> = stats.iter().map(|s| s.z1).collect();
                let z2: Vec<f64> = stats.iter().map(|s| s.z2).collect();
                pearson_corr(&z1, &z2).unwrap_or(0.0)
            }
            None => 0.0,
        };
        let table = match &bank {
            Some(bank) => Some(ExtremeNullTable::bivariate(bank, rho_z)?),
            None => None,
        };
        let extreme_p = |z1: f64, z2: f64, mode: Extreme| -> Result<f64> {
            let upper = match &table {
                Some(t) => t.upper_tail(
                    match mode {
                        Extreme::Max => z1.max(z2),
                        Extreme::Min => z1.min(z2),
                    },
                    mode,
                ),
                None => extreme_corr_pvalue(z1, z2, rho_z, mode)?,
            };
            Ok(match spec.sided {
                Sidedness::OneSided => upper,
                Sidedness::TwoSided => two_sided_from_upper(upper),
            })
        };

        for &scenario in &spec.scenarios {
            let mut rejections = 0;
            for s in &stats {
                let p = match scenario {
                    Scenario::First => fisher_pvalue(s.z1, spec.sided),
                    Scenario::Second => fisher_pvalue(s.z2, spec.sided),
                    Scenario::Max => extreme_p(s.z1, s.z2, Extreme::Max)?,
                    Scenario::Min => extreme_p(s.z1, s.z2, Extreme::Min)?,
                    Scenario::Canonical => s.p_canonical,
                };
                if p < spec.alpha {
                    rejections += 1;
                }
            }
            let power = rejections as f64 / spec.reps as f64;
            rows.push(PowerRow {
                r,
                b,
                rho1: spec.rho1,
                rho2: spec.rho2,
                n: spec.n,
                reps: spec.reps,
                alpha: spec.alpha,
                scenario: scenario.number(),
                rejections,
                power,
                mc_se: (power * (1.0 - power) / spec.reps as f64).sqrt(),
                rho_z,
            });
        }
    }
    Ok(PowerResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::sym_eigen;

    #[test]
    fn sigma_examples() {
        let s = build_sigma(&K2Params::new(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(s, Matrix::identity(4));

        let p = K2Params::new(0.1, 0.2, 0.3, 0.1);
        let mut got = sym_eigen(&build_sigma(&p).unwrap()).unwrap().values;
        // eigenvalues of Σ_m + Σ_c and Σ_m − Σ_c
        let pair = |a: f64, d: f64, off: f64| {
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d).powi(2) + off * off).sqrt();
            [mid + rad, mid - rad]
        };
        let mut want: Vec<f64> = pair(1.3, 1.1, 0.3).into_iter().chain(pair(0.7, 0.9, -0.1)).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }

        let p = K2Params::new(0.0, 0.0, 0.3, 0.1);
        let edge = K2Params::new(0.0, p.a1(), 0.3, 0.1);
        assert!(matches!(build_sigma(&edge), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn sampling_is_seeded() {
        let s = build_sigma(&K2Params::new(0.2, 0.1, 0.3, 0.1)).unwrap();
        assert_eq!(sample_mvn(&s, 20, 5).unwrap(), sample_mvn(&s, 20, 5).unwrap());
        assert_ne!(sample_mvn(&s, 20, 5).unwrap(), sample_mvn(&s, 20, 6).unwrap());
    }

    #[test]
    fn slices() {
        assert_eq!(Slice::parse("b=0.2r").unwrap(), Slice::BPerR(0.2));
        assert_eq!(Slice::parse("r=0.2b").unwrap(), Slice::RPerB(0.2));
        assert!(Slice::parse("q=2x").is_err());
        let lim = Slice::RPerB(0.2).limit(0.3, 0.1);
        assert!(lim > 0.9 && lim < 1.0, "{lim}");
        let g = Slice::RPerB(0.2).grid(0.3, 0.1, 5, 0.99);
        assert_eq!(g[0], (0.0, 0.0));
        assert_eq!(g.len(), 5);
    }
}
