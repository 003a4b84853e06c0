//! Similarity measures between the attribute vectors of two nodes.
//!
//! The canonical correlation of a pair is the largest correlation attainable
//! between linear combinations `w_iᵀX_i` and `w_jᵀX_j`. It is obtained from the
//! eigenproblem `Σ_jj⁻¹ Σ_ijᵀ Σ_ii⁻¹ Σ_ij w_j = λ² w_j`, or, when both nodes
//! share their marginal correlation matrix and the cross block is symmetric,
//! from the smaller problem `Σ_m⁻¹ Σ_c w = λ w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{self, cholesky, corr_matrix, general_eigen, inverse, Matrix};

/// Tolerance on the unit diagonal of marginal correlation blocks.
const UNIT_DIAG_TOL: f64 = 1e-9;
/// Squared roots this far outside [0, 1] are clamped; further is an error.
const ROOT_CLAMP_TOL: f64 = 1e-12;
/// Top eigenvalues closer than this are reported as a repeated root.
const REPEATED_ROOT_TOL: f64 = 1e-10;

/// Which extreme of the per-attribute correlations to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extreme {
    Max,
    Min,
}

/// Marginal and cross correlation blocks for one node pair.
///
/// `sigma_ij[(l, m)] = corr(X_i^(l), X_j^(m))`, so the joint correlation
/// matrix of the stacked vector `(X_i, X_j)` is `[[Σ_ii, Σ_ij], [Σ_ijᵀ, Σ_jj]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCorrelationStructure {
    k: usize,
    sigma_ii: Matrix,
    sigma_jj: Matrix,
    sigma_ij: Matrix,
    supermatrix: Matrix,
}

impl PairCorrelationStructure {
    pub fn new(sigma_ii: Matrix, sigma_jj: Matrix, sigma_ij: Matrix) -> Result<Self> {
        let k = sigma_ii.rows();
        for (name, m) in [("sigma_ii", &sigma_ii), ("sigma_jj", &sigma_jj), ("sigma_ij", &sigma_ij)] {
            if m.rows() != k || m.cols() != k {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {k}x{k}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        for m in [&sigma_ii, &sigma_jj] {
            m.check_symmetric()?;
            if (0..k).any(|l| (m[(l, l)] - 1.0).abs() > UNIT_DIAG_TOL) {
                return Err(Error::InvalidInput(
                    "marginal correlation block must have unit diagonal".into(),
                ));
            }
        }
        let supermatrix = Matrix::block(&sigma_ii, &sigma_ij, &sigma_ij.transpose(), &sigma_jj)?;
        if supermatrix.as_slice().iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
            return Err(Error::InvalidInput(
                "correlations must be finite and within [-1, 1]".into(),
            ));
        }
        Ok(PairCorrelationStructure {
            k,
            sigma_ii,
            sigma_jj,
            sigma_ij,
            supermatrix,
        })
    }

    /// Structure with `Σ_ii = Σ_jj = Σ_m` and `Σ_ij = Σ_c` (symmetric).
    pub fn homogeneous(sigma_m: &Matrix, sigma_c: &Matrix) -> Result<Self> {
        sigma_c.check_symmetric()?;
        Self::new(sigma_m.clone(), sigma_m.clone(), sigma_c.clone())
    }

    /// Splits a `2k x 2k` joint correlation matrix of `(X_i, X_j)`.
    pub fn from_joint(joint: &Matrix) -> Result<Self> {
        joint.check_symmetric()?;
        if joint.rows() % 2 != 0 {
            return Err(Error::DimensionMismatch(
                "joint correlation matrix must have even dimension".into(),
            ));
        }
        let k = joint.rows() / 2;
        Self::new(
            joint.sub_block(0, 0, k, k),
            joint.sub_block(k, k, k, k),
            joint.sub_block(0, k, k, k),
        )
    }

    /// Estimates the structure from two `n x k` sample blocks.
    pub fn from_samples(x_i: &Matrix, x_j: &Matrix) -> Result<Self> {
        Self::from_joint(&corr_matrix(&stack_columns(x_i, x_j)?)?)
    }

    /// The same pair with the roles of `i` and `j` exchanged.
    pub fn transposed(&self) -> Self {
        PairCorrelationStructure {
            k: self.k,
            sigma_ii: self.sigma_jj.clone(),
            sigma_jj: self.sigma_ii.clone(),
            sigma_ij: self.sigma_ij.transpose(),
            supermatrix: Matrix::block(
                &self.sigma_jj,
                &self.sigma_ij.transpose(),
                &self.sigma_ij,
                &self.sigma_ii,
            )
            .expect("blocks share dimension k"),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma_ii(&self) -> &Matrix {
        &self.sigma_ii
    }

    pub fn sigma_jj(&self) -> &Matrix {
        &self.sigma_jj
    }

    pub fn sigma_ij(&self) -> &Matrix {
        &self.sigma_ij
    }

    pub fn supermatrix(&self) -> &Matrix {
        &self.supermatrix
    }

    /// Within-attribute correlations `corr(X_i^(l), X_j^(l))`.
    pub fn per_attribute(&self) -> Vec<f64> {
        (0..self.k).map(|l| self.sigma_ij[(l, l)]).collect()
    }

    /// `corr(w_iᵀX_i, w_jᵀX_j)` for arbitrary weights.
    pub fn combination_corr(&self, w_i: &[f64], w_j: &[f64]) -> f64 {
        let num = self.sigma_ij.bilinear(w_i, w_j);
        let vi = self.sigma_ii.bilinear(w_i, w_i);
        let vj = self.sigma_jj.bilinear(w_j, w_j);
        num / (vi.sqrt() * vj.sqrt())
    }
}

/// Horizontally concatenates two sample blocks with equal row counts.
pub fn stack_columns(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::LengthMismatch {
            left: a.rows(),
            right: b.rows(),
        });
    }
    Ok(Matrix::from_fn(a.rows(), a.cols() + b.cols(), |r, c| {
        if c < a.cols() {
            a[(r, c)]
        } else {
            b[(r, c - a.cols())]
        }
    }))
}

/// Canonical roots and first-root weights for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSolution {
    /// All canonical roots, descending.
    pub roots: Vec<f64>,
    /// First canonical root.
    pub rho_c: f64,
    /// Weights scaled so `w_iᵀ Σ_ii w_i = 1`.
    pub w_i: Vec<f64>,
    /// Weights scaled so `w_jᵀ Σ_jj w_j = 1`.
    pub w_j: Vec<f64>,
    pub contrib_i: Vec<f64>,
    pub contrib_j: Vec<f64>,
    /// Edge-level contribution: mean of the two endpoint contributions.
    pub contrib: Vec<f64>,
    /// Set when the first root is repeated and the weights are a convention.
    pub degenerate: bool,
}

fn clamp_unit(x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else if (-ROOT_CLAMP_TOL..0.0).contains(&x) {
        Ok(0.0)
    } else if x > 1.0 && x <= 1.0 + ROOT_CLAMP_TOL {
        Ok(1.0)
    } else {
        Err(Error::InternalNumerical(format!(
            "squared canonical root {x} outside [0, 1]"
        )))
    }
}

/// Rescales `w` so that `wᵀ Σ w = 1`.
fn normalize_metric(w: &[f64], sigma: &Matrix) -> Vec<f64> {
    let q = sigma.bilinear(w, w);
    let s = if q > 0.0 { 1.0 / q.sqrt() } else { 1.0 };
    w.iter().map(|x| x * s).collect()
}

/// Squared entries of `w` after rescaling it to unit Euclidean length.
pub fn squared_standardized(w: &[f64]) -> Vec<f64> {
    let ss: f64 = w.iter().map(|x| x * x).sum();
    if ss == 0.0 {
        return vec![1.0 / w.len() as f64; w.len()];
    }
    w.iter().map(|x| x * x / ss).collect()
}

fn mean_contrib(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

fn check_pd(s: &PairCorrelationStructure) -> Result<()> {
    cholesky(s.supermatrix()).map(|_| ())
}

/// General canonical correlation analysis of a pair.
pub fn canonical_corr(s: &PairCorrelationStructure) -> Result<CanonicalSolution> {
    check_pd(s)?;
    let inv_ii = inverse(s.sigma_ii())?;
    let inv_jj = inverse(s.sigma_jj())?;
    let sij = s.sigma_ij();
    let sji = sij.transpose();

    // Σ_jj⁻¹ Σ_ijᵀ Σ_ii⁻¹ Σ_ij
    let m_j = inv_jj.matmul(&sji)?.matmul(&inv_ii)?.matmul(sij)?;
    let eig = general_eigen(&m_j)?;
    let lambdas = eig
        .values
        .iter()
        .map(|&v| clamp_unit(v))
        .collect::<Result<Vec<_>>>()?;
    let roots: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let rho_c = roots[0];
    let degenerate = lambdas.len() > 1 && (lambdas[0] - lambdas[1]).abs() <= REPEATED_ROOT_TOL;

    let w_j = normalize_metric(&eig.vector(0), s.sigma_jj());
    let w_i = if rho_c > 1e-12 {
        // Σ_ij w_j = ρ Σ_ii w_i
        let v = inv_ii.mul_vec(&sij.mul_vec(&w_j));
        normalize_metric(&v, s.sigma_ii())
    } else {
        // no cross-correlation: take the companion problem's leading vector
        let m_i = inv_ii.matmul(sij)?.matmul(&inv_jj)?.matmul(&sji)?;
        normalize_metric(&general_eigen(&m_i)?.vector(0), s.sigma_ii())
    };
    let contrib_i = squared_standardized(&w_i);
    let contrib_j = squared_standardized(&w_j);
    let contrib = mean_contrib(&contrib_i, &contrib_j);
    Ok(CanonicalSolution {
        roots,
        rho_c,
        w_i,
        w_j,
        contrib_i,
        contrib_j,
        contrib,
        degenerate,
    })
}

/// Canonical correlation under homogeneity (`Σ_ii = Σ_jj`, symmetric `Σ_ij`).
pub fn canonical_corr_homogeneous(sigma_m: &Matrix, sigma_c: &Matrix) -> Result<CanonicalSolution> {
    let s = PairCorrelationStructure::homogeneous(sigma_m, sigma_c)?;
    check_pd(&s)?;
    let m = inverse(sigma_m)?.matmul(sigma_c)?;
    let eig = general_eigen(&m)?;
    let roots = eig
        .values
        .iter()
        .map(|&v| clamp_unit(v * v).map(|_| v.abs().min(1.0)))
        .collect::<Result<Vec<_>>>()?;
    let rho_c = roots[0];
    let degenerate = roots.len() > 1 && (roots[0] - roots[1]).abs() <= REPEATED_ROOT_TOL;
    let w = normalize_metric(&eig.vector(0), sigma_m);
    let contrib = squared_standardized(&w);
    Ok(CanonicalSolution {
        roots,
        rho_c,
        w_i: w.clone(),
        w_j: w,
        contrib_i: contrib.clone(),
        contrib_j: contrib.clone(),
        contrib,
        degenerate,
    })
}

/// Parameters of the two-attribute homogeneous model.
///
/// `Σ_m = [[1, r], [r, 1]]` and `Σ_c = [[ρ1, b], [b, ρ2]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct K2Params {
    pub r: f64,
    pub b: f64,
    pub rho1: f64,
    pub rho2: f64,
}

impl K2Params {
    pub fn new(r: f64, b: f64, rho1: f64, rho2: f64) -> Self {
        K2Params { r, b, rho1, rho2 }
    }

    pub fn a1(&self) -> f64 {
        ((1.0 - self.rho1) * (1.0 - self.rho2)).max(0.0).sqrt()
    }

    pub fn a2(&self) -> f64 {
        ((1.0 + self.rho1) * (1.0 + self.rho2)).max(0.0).sqrt()
    }

    pub fn discriminant(&self) -> f64 {
        let K2Params { r, b, rho1, rho2 } = *self;
        (rho1 - rho2).powi(2) + 4.0 * (b - rho1 * r) * (b - rho2 * r)
    }

    fn in_range(&self) -> bool {
        [self.r, self.b, self.rho1, self.rho2]
            .iter()
            .all(|v| v.is_finite() && (-1.0..=1.0).contains(v))
    }

    /// Positive-definiteness of the assembled 4x4 correlation matrix.
    pub fn valid(&self) -> bool {
        self.in_range() && (self.b - self.r).abs() < self.a1() && (self.b + self.r).abs() < self.a2()
    }

    pub fn sigma_m(&self) -> Matrix {
        Matrix::from_rows(&[[1.0, self.r], [self.r, 1.0]])
    }

    pub fn sigma_c(&self) -> Matrix {
        Matrix::from_rows(&[[self.rho1, self.b], [self.b, self.rho2]])
    }
}

/// Domain check: `|b − r| < A1` and `|b + r| < A2`.
pub fn k2_domain(p: &K2Params) -> bool {
    p.valid()
}

/// Explicit canonical correlation of the two-attribute homogeneous model.
pub fn k2_closed_form(p: &K2Params) -> Result<f64> {
    if p.r.abs() >= 1.0 {
        return Err(Error::DegenerateR);
    }
    if !p.valid() {
        return Err(Error::OutOfDomain(format!(
            "|b-r| = {:.6} must be < {:.6} and |b+r| = {:.6} must be < {:.6}",
            (p.b - p.r).abs(),
            p.a1(),
            (p.b + p.r).abs(),
            p.a2()
        )));
    }
    let sqrt_d = p.discriminant().max(0.0).sqrt();
    let center = p.rho1 + p.rho2 - 2.0 * p.b * p.r;
    let denom = 2.0 * (1.0 - p.r * p.r);
    Ok(((center - sqrt_d).abs()).max((center + sqrt_d).abs()) / denom)
}

/// Canonical correlation when all within-node cross-attribute correlations
/// equal `r`, all between-node same-attribute ones equal `rho`, and all
/// between-node cross-attribute ones equal `b`.
pub fn equal_corr_closed_form(k: usize, r: f64, rho: f64, b: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput("equal-correlation model needs k >= 2".into()));
    }
    let km1 = (k - 1) as f64;
    let ok = r > -1.0 / km1
        && r < 1.0
        && (rho - b).abs() < (1.0 - r).abs()
        && (rho + km1 * b).abs() < (1.0 + km1 * r).abs();
    if !ok {
        return Err(Error::OutOfDomain(format!(
            "k = {k}, r = {r}, rho = {rho}, b = {b}"
        )));
    }
    Ok(((rho - b) / (1.0 - r)).abs().max(((rho + km1 * b) / (1.0 + km1 * r)).abs()))
}

/// Signed maximum or minimum of the per-attribute correlations.
pub fn aggregate_extreme(rhos: &[f64], mode: Extreme) -> Result<f64> {
    let first = *rhos.first().ok_or(Error::EmptyInput)?;
    Ok(rhos.iter().skip(1).fold(first, |acc, &x| match mode {
        Extreme::Max => acc.max(x),
        Extreme::Min => acc.min(x),
    }))
}

/// Builds the `k x k` equal-correlation blocks `(Σ_m, Σ_c)`.
pub fn equal_corr_blocks(k: usize, r: f64, rho: f64, b: f64) -> (Matrix, Matrix) {
    let m = Matrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { r });
    let c = Matrix::from_fn(k, k, |i, j| if i == j { rho } else { b });
    (m, c)
}

/// Positive-definiteness of the 4x4 matrix of `p`, decided numerically.
pub fn k2_sigma_is_pd(p: &K2Params) -> Result<bool> {
    let s = Matrix::block(&p.sigma_m(), &p.sigma_c(), &p.sigma_c(), &p.sigma_m())?;
    numkernel::is_positive_definite(&s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2_structure(p: &K2Params) -> PairCorrelationStructure {
        PairCorrelationStructure::homogeneous(&p.sigma_m(), &p.sigma_c()).unwrap()
    }

    #[test]
    fn zero_cross_correlation_gives_zero_roots() {
        for k in 1..=3 {
            let s = PairCorrelationStructure::new(
                Matrix::identity(k),
                Matrix::identity(k),
                Matrix::zeros(k, k),
            )
            .unwrap();
            let sol = canonical_corr(&s).unwrap();
            assert_eq!(sol.rho_c, 0.0);
            assert!(sol.roots.iter().all(|&r| r == 0.0));
            assert!((sol.contrib.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_attribute_degenerates_to_pearson() {
        let s = PairCorrelationStructure::new(
            Matrix::identity(1),
            Matrix::identity(1),
            Matrix::from_rows(&[[0.5]]),
        )
        .unwrap();
        let sol = canonical_corr(&s).unwrap();
        assert!((sol.rho_c - 0.5).abs() < 1e-15);
        assert_eq!(sol.contrib, vec![1.0]);
        let neg = PairCorrelationStructure::new(
            Matrix::identity(1),
            Matrix::identity(1),
            Matrix::from_rows(&[[-0.37]]),
        )
        .unwrap();
        assert_eq!(canonical_corr(&neg).unwrap().rho_c, 0.37);
    }

    #[test]
    fn homogeneous_scalar_cross_block_is_degenerate() {
        let sol = canonical_corr_homogeneous(&Matrix::identity(2), &Matrix::diag(&[0.4, 0.4])).unwrap();
        assert!((sol.rho_c - 0.4).abs() < 1e-15);
        assert!(sol.degenerate);
        assert_eq!(sol.contrib, vec![1.0, 0.0]);
    }

    #[test]
    fn homogeneous_antidiagonal() {
        let c = Matrix::from_rows(&[[0.0, 0.5], [0.5, 0.0]]);
        let sol = canonical_corr_homogeneous(&Matrix::identity(2), &c).unwrap();
        assert!((sol.rho_c - 0.5).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_matches_general_path() {
        let p = K2Params::new(0.3, 0.25, 0.3, 0.1);
        let h = canonical_corr_homogeneous(&p.sigma_m(), &p.sigma_c()).unwrap();
        let g = canonical_corr(&k2_structure(&p)).unwrap();
        assert!((h.rho_c - g.rho_c).abs() < 1e-12);
        let same = h.w_i.iter().zip(&g.w_i).all(|(a, b)| (a - b).abs() < 1e-9);
        let flipped = h.w_i.iter().zip(&g.w_i).all(|(a, b)| (a + b).abs() < 1e-9);
        assert!(same || flipped);
    }

    #[test]
    fn contributions_at_origin_favor_first_attribute() {
        let p = K2Params::new(0.0, 0.0, 0.3, 0.1);
        let sol = canonical_corr_homogeneous(&p.sigma_m(), &p.sigma_c()).unwrap();
        assert!((sol.contrib[0] - 1.0).abs() < 1e-9);
        assert!(sol.contrib[1].abs() < 1e-9);
    }

    #[test]
    fn closed_form_examples() {
        let v = k2_closed_form(&K2Params::new(0.0, 0.0, 0.3, 0.1)).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        let v = k2_closed_form(&K2Params::new(0.0, 0.5, 0.0, 0.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(matches!(
            k2_closed_form(&K2Params::new(0.9, 0.0, 0.3, 0.1)),
            Err(Error::OutOfDomain(_))
        ));
        assert_eq!(
            k2_closed_form(&K2Params::new(1.0, 0.0, 0.3, 0.1)),
            Err(Error::DegenerateR)
        );
    }

    #[test]
    fn domain_examples() {
        assert!(k2_domain(&K2Params::new(0.0, 0.0, 0.3, 0.1)));
        assert!(!k2_domain(&K2Params::new(0.9, 0.0, 0.3, 0.1)));
        assert!(!k2_sigma_is_pd(&K2Params::new(0.9, 0.0, 0.3, 0.1)).unwrap());
    }

    #[test]
    fn equal_corr_examples() {
        assert!((equal_corr_closed_form(3, 0.0, 0.4, 0.0).unwrap() - 0.4).abs() < 1e-15);
        let (r, rho, b) = (0.2, 0.3, 0.1);
        let k2 = k2_closed_form(&K2Params::new(r, b, rho, rho)).unwrap();
        assert!((equal_corr_closed_form(2, r, rho, b).unwrap() - k2).abs() < 1e-12);
        let (m, c) = equal_corr_blocks(4, r, rho, b);
        let numeric = canonical_corr_homogeneous(&m, &c).unwrap().rho_c;
        assert!((equal_corr_closed_form(4, r, rho, b).unwrap() - numeric).abs() < 1e-10);
        assert!(matches!(
            equal_corr_closed_form(3, -0.6, 0.1, 0.0),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_extreme(&[0.3, 0.1], Extreme::Max).unwrap(), 0.3);
        assert_eq!(aggregate_extreme(&[0.3, 0.1], Extreme::Min).unwrap(), 0.1);
        assert_eq!(aggregate_extreme(&[-0.2], Extreme::Max).unwrap(), -0.2);
        assert_eq!(aggregate_extreme(&[-0.2], Extreme::Min).unwrap(), -0.2);
        assert_eq!(aggregate_extreme(&[], Extreme::Max), Err(Error::EmptyInput));
    }

    #[test]
    fn non_pd_structure_is_rejected() {
        let p = K2Params::new(0.9, 0.0, 0.3, 0.1);
        assert!(matches!(
            canonical_corr(&k2_structure(&p)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn transposed_pair_has_same_roots() {
        let s = PairCorrelationStructure::new(
            Matrix::from_rows(&[[1.0, 0.3], [0.3, 1.0]]),
            Matrix::from_rows(&[[1.0, -0.2], [-0.2, 1.0]]),
            Matrix::from_rows(&[[0.4, 0.1], [-0.15, 0.2]]),
        )
        .unwrap();
        let a = canonical_corr(&s).unwrap();
        let b = canonical_corr(&s.transposed()).unwrap();
        for (x, y) in a.roots.iter().zip(&b.roots) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
