//! Quadrature covariance matrices of multimode Gaussian states.
//!
//! The covariance matrix of an `n`-mode state is real symmetric `2n x 2n`
//! with quadratures ordered `(Q1, P1, ..., Qn, Pn)`. Variances are
//! dimensionless with the vacuum variance equal to 1, so the vacuum state is
//! the identity matrix. The source material never states this normalization
//! outright; it is fixed here by the EPR covariance reducing to the identity
//! at zero squeezing. All entropies are in bits.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Construction tolerance on `|V - V^T|`.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// A state is physical when every symplectic eigenvalue is `>= 1 - PHYSICALITY_TOL`.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// Matching tolerance when deduplicating the `±i nu` eigenvalue pairs of `Omega V`.
const PAIR_MATCH_TOL: f64 = 1e-8;
/// Condition-number bound above which a conditioning block is treated as singular.
const CONDITION_LIMIT: f64 = 1e12;

fn log2_clamped(x: f64) -> f64 {
    x.max(1e-300).log2()
}

/// Gaussian entropy of a single symplectic eigenvalue, in bits.
///
/// `g(nu) = ((nu+1)/2) log2((nu+1)/2) - ((nu-1)/2) log2((nu-1)/2)`, extended
/// continuously with `g(1) = 0`. Values of `nu` within `1e-12` above 1 (or
/// slightly below, from rounding) return exactly 0 since pure states sit on
/// the singular point of the formula.
pub fn entropy_g(nu: f64) -> f64 {
    if nu <= 1.0 + 1e-12 {
        return 0.0;
    }
    let a = (nu + 1.0) / 2.0;
    let b = (nu - 1.0) / 2.0;
    a * log2_clamped(a) - b * log2_clamped(b)
}

/// The symplectic form `Omega = ⊕_i [[0, 1], [-1, 0]]` for `n` modes.
pub(crate) fn omega(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(2 * i, 2 * i + 1)] = 1.0;
        m[(2 * i + 1, 2 * i)] = -1.0;
    }
    m
}

/// Symplectic eigenvalues of a covariance matrix, sorted descending.
///
/// Physical states have every value `>= 1 - 1e-9`; pure states have all
/// values equal to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Smallest symplectic eigenvalue.
    pub fn min(&self) -> f64 {
        *self.values.last().expect("spectrum is nonempty")
    }

    /// True when every eigenvalue is at least `1 - PHYSICALITY_TOL`.
    pub fn is_physical(&self) -> bool {
        self.min() >= 1.0 - PHYSICALITY_TOL
    }

    /// Gaussian von Neumann entropy `sum_k g(nu_k)` in bits.
    pub fn entropy(&self) -> f64 {
        self.values.iter().copied().map(entropy_g).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct CovarianceJson {
    n: usize,
    matrix: Vec<Vec<f64>>,
}

/// Real symmetric `2n x 2n` quadrature covariance matrix in
/// `(Q1, P1, ..., Qn, Pn)` ordering, vacuum variance 1.
///
/// Symmetrized on construction; construction does not check physicality,
/// since noise constructions may pass through intermediate matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceJson", into = "CovarianceJson")]
pub struct CovarianceMatrix {
    n: usize,
    entries: DMatrix<f64>,
}

impl TryFrom<CovarianceJson> for CovarianceMatrix {
    type Error = Error;

    fn try_from(j: CovarianceJson) -> Result<Self> {
        let dim = j.matrix.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, row) in j.matrix.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
            for (k, &x) in row.iter().enumerate() {
                m[(i, k)] = x;
            }
        }
        CovarianceMatrix::new(j.n, m)
    }
}

impl From<CovarianceMatrix> for CovarianceJson {
    fn from(v: CovarianceMatrix) -> Self {
        let matrix = (0..v.dim())
            .map(|i| (0..v.dim()).map(|j| v.entries[(i, j)]).collect())
            .collect();
        CovarianceJson { n: v.n, matrix }
    }
}

impl CovarianceMatrix {
    /// Builds a covariance matrix from a `2n x 2n` array of entries.
    ///
    /// Checks squareness, dimension, finiteness and symmetry (within 1e-9),
    /// then symmetrizes. Physicality is not checked here.
    pub fn new(n: usize, entries: DMatrix<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("mode count must be positive".into()));
        }
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() != 2 * n {
            return Err(Error::DimensionMismatch {
                modes: n,
                expected: 2 * n,
                got: entries.nrows(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        let mut skew = 0.0f64;
        for i in 0..entries.nrows() {
            for j in (i + 1)..entries.ncols() {
                skew = skew.max((entries[(i, j)] - entries[(j, i)]).abs());
            }
        }
        if skew > SYMMETRY_TOL {
            return Err(Error::NotSymmetric {
                skew,
                tol: SYMMETRY_TOL,
            });
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        Ok(CovarianceMatrix { n, entries: sym })
    }

    /// Parses the JSON form `{"n": int, "matrix": [[row], ...]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("covariance serialization cannot fail")
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Symplectic eigenvalues as the moduli of the eigenvalue pairs of
    /// `Omega V`, each pair reported once, sorted descending.
    pub fn symplectic_eigenvalues(&self) -> Result<SymplecticSpectrum> {
        if self.entries.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        let om_v = omega(self.n) * &self.entries;
        let eig = om_v.complex_eigenvalues();
        let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| b.partial_cmp(a).expect("moduli are finite"));
        let mut values = Vec::with_capacity(self.n);
        for k in 0..self.n {
            let (a, b) = (moduli[2 * k], moduli[2 * k + 1]);
            if (a - b).abs() > PAIR_MATCH_TOL * a.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "symplectic eigenvalue pairing failed: {a} vs {b}"
                )));
            }
            values.push(0.5 * (a + b));
        }
        Ok(SymplecticSpectrum { values })
    }

    /// True when the state is physical (all symplectic eigenvalues `>= 1 - 1e-9`).
    pub fn is_physical(&self) -> Result<bool> {
        Ok(self.symplectic_eigenvalues()?.is_physical())
    }

    /// Gaussian von Neumann entropy `sum_k g(nu_k)` in bits.
    ///
    /// Errors on unphysical states (some `nu_k < 1 - 1e-9`).
    pub fn gaussian_entropy(&self) -> Result<f64> {
        let spectrum = self.symplectic_eigenvalues()?;
        if !spectrum.is_physical() {
            return Err(Error::Unphysical {
                min_nu: spectrum.min(),
            });
        }
        Ok(spectrum.entropy())
    }

    /// Sub-covariance on the selected modes, preserving the `(Q, P)` pair
    /// structure. Mode indices are zero-based, must be distinct and in range;
    /// the output keeps the order given.
    pub fn marginal(&self, modes: &[usize]) -> Result<CovarianceMatrix> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("mode selection is empty".into()));
        }
        for (k, &m) in modes.iter().enumerate() {
            if m >= self.n {
                return Err(Error::InvalidModeIndex {
                    index: m,
                    modes: self.n,
                });
            }
            if modes[..k].contains(&m) {
                return Err(Error::InvalidParameter(format!("duplicate mode index {m}")));
            }
        }
        let rows = mode_rows(modes);
        let mut sub = DMatrix::zeros(rows.len(), rows.len());
        for (i, &ri) in rows.iter().enumerate() {
            for (j, &rj) in rows.iter().enumerate() {
                sub[(i, j)] = self.entries[(ri, rj)];
            }
        }
        CovarianceMatrix::new(modes.len(), sub)
    }

    /// Decomposes a two-mode matrix of the shape
    /// `[[a,0,cx,0],[0,a,0,cp],[cx,0,b,0],[0,cp,0,b]]`, requiring
    /// `c_x >= |c_p| >= 0`. Tolerance 1e-9 on the zero pattern.
    pub fn two_mode_standard_form(&self) -> Result<StandardForm> {
        if self.n != 2 {
            return Err(Error::InvalidParameter(format!(
                "standard form needs 2 modes, got {}",
                self.n
            )));
        }
        let m = &self.entries;
        let (a, a2) = (m[(0, 0)], m[(1, 1)]);
        let (b, b2) = (m[(2, 2)], m[(3, 3)]);
        let (c_x, c_p) = (m[(0, 2)], m[(1, 3)]);
        let mut deviation = (a - a2).abs().max((b - b2).abs());
        for &(i, j) in &[(0, 1), (0, 3), (1, 2), (2, 3)] {
            deviation = deviation.max(m[(i, j)].abs());
        }
        if deviation > 1e-9 {
            return Err(Error::NotStandardForm { deviation });
        }
        if c_x < 0.0 || c_x < c_p.abs() - 1e-12 {
            return Err(Error::UnsupportedCorrelationSigns { c_x, c_p });
        }
        Ok(StandardForm { a, b, c_x, c_p })
    }
}

/// Parameters of a two-mode standard-form covariance: diagonal blocks
/// `diag(a, a)` and `diag(b, b)`, cross block `diag(c_x, c_p)`.
#[derive(Debug, Clone, Copy)]
pub struct StandardForm {
    pub a: f64,
    pub b: f64,
    pub c_x: f64,
    pub c_p: f64,
}

/// Row indices of the `(Q, P)` pairs of the given modes.
pub(crate) fn mode_rows(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

/// Conditional covariance of the `keep` variables given the `given`
/// variables: the Schur complement `S_kk - S_kg S_gg^-1 S_gk`.
///
/// Indices address individual rows of `sigma` (variable indices, not modes).
/// The conditional covariance of jointly Gaussian variables does not depend
/// on the observed values, so no outcome argument is needed. Conditioning on
/// an empty set returns the `keep` marginal unchanged.
pub fn condition(sigma: &DMatrix<f64>, keep: &[usize], given: &[usize]) -> Result<DMatrix<f64>> {
    let dim = sigma.nrows();
    if sigma.ncols() != dim {
        return Err(Error::NotSquare {
            rows: dim,
            cols: sigma.ncols(),
        });
    }
    for &i in keep.iter().chain(given) {
        if i >= dim {
            return Err(Error::InvalidIndex { index: i, dim });
        }
    }
    if keep.iter().any(|i| given.contains(i)) {
        return Err(Error::InvalidParameter(
            "keep and given index sets must be disjoint".into(),
        ));
    }
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| sigma[(rows[i], cols[j])])
    };
    let s_kk = pick(keep, keep);
    if given.is_empty() {
        return Ok(s_kk);
    }
    let s_gg = pick(given, given);
    let eig = SymmetricEigen::new(s_gg.clone());
    let lam_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let lam_min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if lam_min <= 0.0 || lam_max / lam_min > CONDITION_LIMIT {
        return Err(Error::SingularConditioning {
            cond: if lam_min <= 0.0 {
                f64::INFINITY
            } else {
                lam_max / lam_min
            },
        });
    }
    let chol = s_gg
        .cholesky()
        .ok_or(Error::SingularConditioning { cond: f64::INFINITY })?;
    let s_kg = pick(keep, given);
    let solved = chol.solve(&s_kg.transpose());
    let out = &s_kk - &s_kg * solved;
    Ok((&out + out.transpose()) * 0.5)
}
