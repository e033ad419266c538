//! Local Gaussian measurements and the classical mutual information of
//! their outcomes.
//!
//! A Gaussian measurement of one mode is a phase shift `theta` followed by a
//! beam splitter of transmissivity `t` mixing the mode with vacuum, with the
//! `Q` quadrature measured on one output and `P` on the other. `t = 1` or
//! `t = 0` is homodyne, `t = 1/2` heterodyne. Outcomes are jointly Gaussian,
//! so the joint distribution is a covariance matrix and the mutual
//! information reduces to determinants of its blocks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariance::{condition, CovarianceMatrix};
use crate::error::{Error, Result};

/// Per-mode Gaussian measurement parameters `(theta_i, t_i)`.
///
/// Phases are stored normalized to `[0, pi)`; the outcome covariance is
/// `pi`-periodic in each phase. Transmissivities lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanJson", into = "PlanJson")]
pub struct MeasurementPlan {
    params: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct PlanJson {
    params: Vec<PlanEntry>,
}

#[derive(Serialize, Deserialize)]
struct PlanEntry {
    theta: f64,
    t: f64,
}

impl TryFrom<PlanJson> for MeasurementPlan {
    type Error = Error;

    fn try_from(j: PlanJson) -> Result<Self> {
        MeasurementPlan::new(j.params.into_iter().map(|e| (e.theta, e.t)).collect())
    }
}

impl From<MeasurementPlan> for PlanJson {
    fn from(p: MeasurementPlan) -> Self {
        PlanJson {
            params: p
                .params
                .into_iter()
                .map(|(theta, t)| PlanEntry { theta, t })
                .collect(),
        }
    }
}

/// Normalizes a phase to `[0, pi)`.
pub fn normalize_phase(theta: f64) -> f64 {
    let mut x = theta % PI;
    if x < 0.0 {
        x += PI;
    }
    if x >= PI {
        x = 0.0;
    }
    x
}

impl MeasurementPlan {
    pub fn new(params: Vec<(f64, f64)>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidParameter("measurement plan is empty".into()));
        }
        for &(theta, t) in &params {
            if !theta.is_finite() || !t.is_finite() {
                return Err(Error::InvalidParameter(
                    "measurement parameters must be finite".into(),
                ));
            }
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(format!(
                    "transmissivity must be in [0, 1], got {t}"
                )));
            }
        }
        Ok(MeasurementPlan {
            params: params
                .into_iter()
                .map(|(theta, t)| (normalize_phase(theta), t))
                .collect(),
        })
    }

    /// Homodyne of the `Q` quadrature on every mode (`theta = 0`, `t = 1`).
    pub fn homodyne_q(n: usize) -> Self {
        MeasurementPlan {
            params: vec![(0.0, 1.0); n],
        }
    }

    /// Homodyne of the `P` quadrature on every mode (`theta = 0`, `t = 0`).
    pub fn homodyne_p(n: usize) -> Self {
        MeasurementPlan {
            params: vec![(0.0, 0.0); n],
        }
    }

    /// Heterodyne on every mode (`theta = 0`, `t = 1/2`).
    pub fn heterodyne(n: usize) -> Self {
        MeasurementPlan {
            params: vec![(0.0, 0.5); n],
        }
    }

    pub fn modes(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[(f64, f64)] {
        &self.params
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.0).collect()
    }

    pub fn transmissivities(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.1).collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Covariance of the classical Gaussian outcome variables, ordered
/// `(Q-out_1, P-out_1, ..., Q-out_n, P-out_n)`. Positive definite for all
/// `t`: the injected beam-splitter vacuum keeps even the uninformative
/// homodyne rows at variance 1.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeCovariance {
    n: usize,
    entries: DMatrix<f64>,
}

impl OutcomeCovariance {
    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Outcome covariance for raw `(theta, t)` pairs, without plan validation.
///
/// `Sigma = M V M^T + N` with per-mode blocks
/// `M_i = [[sqrt(t) cos, sqrt(t) sin], [-sqrt(1-t) sin, sqrt(1-t) cos]]` and
/// `N_i = diag(1 - t, t)`. The rotation convention is
/// `R(theta): Q -> Q cos(theta) + P sin(theta)`; mutual information is
/// invariant under `theta -> -theta` for the states treated here, so either
/// sign convention reproduces the same optima. Swapping which beam-splitter
/// port carries `Q` is equivalent to `t -> 1 - t`, which the search space
/// already contains.
pub(crate) fn outcome_covariance_raw(v: &CovarianceMatrix, params: &[(f64, f64)]) -> DMatrix<f64> {
    let n = v.modes();
    debug_assert_eq!(params.len(), n);
    let mut map = DMatrix::zeros(2 * n, 2 * n);
    let mut injected = DMatrix::zeros(2 * n, 2 * n);
    for (i, &(theta, t)) in params.iter().enumerate() {
        let (sin, cos) = theta.sin_cos();
        let (wq, wp) = (t.max(0.0).sqrt(), (1.0 - t).max(0.0).sqrt());
        map[(2 * i, 2 * i)] = wq * cos;
        map[(2 * i, 2 * i + 1)] = wq * sin;
        map[(2 * i + 1, 2 * i)] = -wp * sin;
        map[(2 * i + 1, 2 * i + 1)] = wp * cos;
        injected[(2 * i, 2 * i)] = 1.0 - t;
        injected[(2 * i + 1, 2 * i + 1)] = t;
    }
    let out = &map * v.entries() * map.transpose() + injected;
    (&out + out.transpose()) * 0.5
}

/// Covariance of the measurement outcomes of `plan` applied to state `v`.
pub fn outcome_covariance(v: &CovarianceMatrix, plan: &MeasurementPlan) -> Result<OutcomeCovariance> {
    if plan.modes() != v.modes() {
        return Err(Error::PlanLengthMismatch {
            plan: plan.modes(),
            state: v.modes(),
        });
    }
    Ok(OutcomeCovariance {
        n: v.modes(),
        entries: outcome_covariance_raw(v, plan.params()),
    })
}

/// Differential entropy of a normal variable, `0.5 log2(2 pi e V)` bits.
///
/// Independent of the mean; may be negative for small variances.
pub fn differential_entropy(variance: f64) -> Result<f64> {
    if !variance.is_finite() || variance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "differential entropy needs a positive variance, got {variance}"
        )));
    }
    Ok(0.5 * (2.0 * PI * std::f64::consts::E * variance).max(1e-300).log2())
}

/// Log2 determinant via Cholesky; errors on non-positive-definite input.
fn log2_det(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].max(1e-300).log2();
    }
    Ok(2.0 * acc)
}

/// Multipartite classical mutual information of the outcome distribution,
/// in bits: `0.5 log2( prod_i det Sigma_ii / det Sigma )` with `Sigma_ii`
/// the per-mode 2x2 outcome blocks.
///
/// This determinant form is the production path; [`classical_mi_chain`] is
/// the telescoping conditional-entropy form used for cross-validation.
pub fn classical_mi(sigma: &OutcomeCovariance) -> Result<f64> {
    classical_mi_matrix(sigma.entries())
}

pub(crate) fn classical_mi_matrix(sigma: &DMatrix<f64>) -> Result<f64> {
    let n = sigma.nrows() / 2;
    let mut num = 0.0;
    for i in 0..n {
        let block = sigma.view((2 * i, 2 * i), (2, 2)).into_owned();
        num += log2_det(&block)?;
    }
    Ok(0.5 * (num - log2_det(sigma)?))
}

/// Classical MI as the telescoping sum of conditional differential
/// entropies, each conditional variance obtained by Gaussian conditioning:
///
/// `sum_{i>=2} [ G(V_{Qi}) + G(V_{Pi|Qi}) - G(V_{Qi|prev}) - G(V_{Pi|Qi,prev}) ]`
///
/// where `prev` collects the outcomes of modes `1..i-1`. Agrees with
/// [`classical_mi`] to 1e-9.
pub fn classical_mi_chain(sigma: &OutcomeCovariance) -> Result<f64> {
    let s = sigma.entries();
    let n = sigma.modes();
    let mut total = 0.0;
    let mut prev: Vec<usize> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let q = 2 * i;
        let p = 2 * i + 1;
        if i > 0 {
            let vq = s[(q, q)];
            let vp_given_q = condition(s, &[p], &[q])?[(0, 0)];
            let vq_given_prev = condition(s, &[q], &prev)?[(0, 0)];
            let mut ctx = prev.clone();
            ctx.push(q);
            let vp_given_all = condition(s, &[p], &ctx)?[(0, 0)];
            total += differential_entropy(vq)? + differential_entropy(vp_given_q)?
                - differential_entropy(vq_given_prev)?
                - differential_entropy(vp_given_all)?;
        }
        prev.push(q);
        prev.push(p);
    }
    Ok(total)
}
