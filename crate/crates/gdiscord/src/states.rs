//! Constructors for the EPR and Gaussian GHZ states and the three noise
//! channels applied to them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix;
use crate::error::{Error, Result};

/// Vacuum state on `n` modes (identity covariance).
pub fn vacuum(n: usize) -> CovarianceMatrix {
    CovarianceMatrix::new(n, DMatrix::identity(2 * n, 2 * n)).expect("identity is valid")
}

/// Two-mode squeezed (EPR) state with squeezing parameter `r >= 0`.
///
/// Diagonal blocks `cosh(2r) I`, cross block `diag(sinh 2r, -sinh 2r)`:
/// `Q` quadratures correlated, `P` quadratures anticorrelated. Pure for
/// every `r`.
pub fn epr(r: f64) -> Result<CovarianceMatrix> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "squeezing parameter must be finite and nonnegative, got {r}"
        )));
    }
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    );
    CovarianceMatrix::new(2, m)
}

/// Cross-correlation coefficients of the three-mode GHZ family:
/// `c± = (a^2 - 1 ± sqrt((a^2 - 1)(9 a^2 - 1))) / (4a)`.
pub fn ghz_correlations(a: f64) -> (f64, f64) {
    let d = (a * a - 1.0).max(0.0);
    let s = (d * (9.0 * a * a - 1.0)).sqrt();
    ((d + s) / (4.0 * a), (d - s) / (4.0 * a))
}

/// Symmetric pure three-mode Gaussian GHZ state with diagonal `a >= 1`.
///
/// `Q` cross-correlations `c+`, `P` cross-correlations `c-` as given by
/// [`ghz_correlations`]. `a = 1` is the product vacuum.
pub fn ghz(a: f64) -> Result<CovarianceMatrix> {
    if !a.is_finite() || a < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "GHZ diagonal must be finite and >= 1, got {a}"
        )));
    }
    let (cp, cm) = ghz_correlations(a);
    let mut m = DMatrix::identity(6, 6) * a;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                m[(2 * i, 2 * j)] = cp;
                m[(2 * i + 1, 2 * j + 1)] = cm;
            }
        }
    }
    CovarianceMatrix::new(3, m)
}

/// Noise families applied at the covariance level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// `V + v I`, independent quadrature noise on every mode (`v >= 0`).
    Uncorrelated,
    /// `v V`, uniform scaling of the covariance (`v >= 1`).
    Multiplicative,
    /// Classically correlated noise on the `Q` quadratures and anticorrelated
    /// noise on the `P` quadratures; defined for 2 and 3 modes only.
    Correlated,
}

impl NoiseKind {
    /// The `v` at which the channel is the identity.
    pub fn identity_strength(self) -> f64 {
        match self {
            NoiseKind::Multiplicative => 1.0,
            _ => 0.0,
        }
    }
}

/// A noise channel: a [`NoiseKind`] plus a strength `v` in the kind's
/// admissible range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub v: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, v: f64) -> Result<Self> {
        let model = NoiseModel { kind, v };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.v.is_finite() {
            return Err(Error::InvalidParameter("noise strength must be finite".into()));
        }
        let ok = match self.kind {
            NoiseKind::Multiplicative => self.v >= 1.0,
            _ => self.v >= 0.0,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "noise strength {} out of range for {:?}",
                self.v, self.kind
            )));
        }
        Ok(())
    }
}

/// The additive correlated-noise matrix at unit strength for 2 or 3 modes.
///
/// Two modes: `Q` entries +1, `P` cross entries -1. Three modes: `Q` block
/// all ones, `P` cross entries -0.5 — the strongest anticorrelation three
/// unit-variance classical variables admit, which places the matrix exactly
/// on the PSD boundary.
pub fn correlated_noise_matrix(n: usize) -> Result<DMatrix<f64>> {
    match n {
        2 => Ok(DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, -1.0, //
                1.0, 0.0, 1.0, 0.0, //
                0.0, -1.0, 0.0, 1.0,
            ],
        )),
        3 => {
            let mut m = DMatrix::zeros(6, 6);
            for i in 0..3 {
                for j in 0..3 {
                    m[(2 * i, 2 * j)] = 1.0;
                    m[(2 * i + 1, 2 * j + 1)] = if i == j { 1.0 } else { -0.5 };
                }
            }
            Ok(m)
        }
        _ => Err(Error::CorrelatedNoiseModes { modes: n }),
    }
}

/// Applies a noise channel to a state covariance, returning a new matrix.
///
/// Channels never compose implicitly; composition is explicit at the call
/// site. The output is physical whenever the input is.
pub fn apply_noise(v: &CovarianceMatrix, noise: &NoiseModel) -> Result<CovarianceMatrix> {
    noise.validate()?;
    let n = v.modes();
    let out = match noise.kind {
        NoiseKind::Uncorrelated => v.entries() + DMatrix::identity(2 * n, 2 * n) * noise.v,
        NoiseKind::Multiplicative => v.entries() * noise.v,
        NoiseKind::Correlated => v.entries() + correlated_noise_matrix(n)? * noise.v,
    };
    CovarianceMatrix::new(n, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    #[test]
    fn epr_matches_printed_structure() {
        let v = epr(1.0).unwrap();
        let (c, s) = (2.0f64.cosh(), 2.0f64.sinh());
        let m = v.entries();
        for i in 0..4 {
            assert!((m[(i, i)] - c).abs() < 1e-15);
        }
        assert!((m[(0, 2)] - s).abs() < 1e-15, "Q-Q cross is +sinh 2r");
        assert!((m[(1, 3)] + s).abs() < 1e-15, "P-P cross is -sinh 2r");
        assert_eq!(m[(0, 3)], 0.0, "no Q-P cross terms");
        assert_eq!(m[(0, 1)], 0.0);
        assert!(epr(-0.1).is_err());
    }

    #[test]
    fn ghz_correlation_formula() {
        // Direct evaluation of the c± formula at a = 2: (3 ± sqrt(105)) / 8.
        let (cp, cm) = ghz_correlations(2.0);
        let s = 105.0f64.sqrt();
        assert!((cp - (3.0 + s) / 8.0).abs() < 1e-15);
        assert!((cm - (3.0 - s) / 8.0).abs() < 1e-15);
        assert!((cp - 1.6559).abs() < 1e-4);
        assert!((cm + 0.9059).abs() < 1e-4);
    }

    #[test]
    fn ghz_degenerate_and_invalid() {
        let v = ghz(1.0).unwrap();
        assert!((v.entries() - nalgebra::DMatrix::identity(6, 6)).abs().max() < 1e-12);
        assert!(ghz(0.9).is_err());
    }

    #[test]
    fn ghz_diagonal_and_purity() {
        let v = ghz(2.0).unwrap();
        for i in 0..6 {
            assert!((v.entries()[(i, i)] - 2.0).abs() < 1e-15);
        }
        let spec = v.symplectic_eigenvalues().unwrap();
        for nu in spec.values() {
            assert!((nu - 1.0).abs() < 1e-9, "GHZ is pure, nu = {nu}");
        }
    }

    #[test]
    fn pure_families_over_parameter_grid() {
        for k in 0..=20 {
            let r = 0.1 * k as f64;
            assert!(epr(r).unwrap().gaussian_entropy().unwrap().abs() < 1e-9);
        }
        for k in 0..=15 {
            let a = 1.0 + 0.2 * k as f64;
            assert!(ghz(a).unwrap().gaussian_entropy().unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn noise_identity_strengths() {
        let v = epr(1.0).unwrap();
        for kind in [NoiseKind::Uncorrelated, NoiseKind::Multiplicative, NoiseKind::Correlated] {
            let id = NoiseModel::new(kind, kind.identity_strength()).unwrap();
            let out = apply_noise(&v, &id).unwrap();
            assert!((out.entries() - v.entries()).abs().max() < 1e-15, "{kind:?}");
        }
    }

    #[test]
    fn correlated_vacuum_anchor() {
        let out = apply_noise(&vacuum(2), &NoiseModel::new(NoiseKind::Correlated, 0.5).unwrap())
            .unwrap();
        let m = out.entries();
        for i in 0..4 {
            assert!((m[(i, i)] - 1.5).abs() < 1e-15);
        }
        assert!((m[(0, 2)] - 0.5).abs() < 1e-15);
        assert!((m[(1, 3)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn uncorrelated_ghz_anchor() {
        let v = ghz(2.0).unwrap();
        let out =
            apply_noise(&v, &NoiseModel::new(NoiseKind::Uncorrelated, 2.0).unwrap()).unwrap();
        for i in 0..6 {
            assert!((out.entries()[(i, i)] - 4.0).abs() < 1e-15);
        }
        assert!((out.entries()[(0, 2)] - v.entries()[(0, 2)]).abs() < 1e-15);
    }

    #[test]
    fn noise_parameter_validation() {
        assert!(NoiseModel::new(NoiseKind::Multiplicative, 0.9).is_err());
        assert!(NoiseModel::new(NoiseKind::Uncorrelated, -0.1).is_err());
        let v1 = vacuum(1);
        assert!(matches!(
            apply_noise(&v1, &NoiseModel::new(NoiseKind::Correlated, 1.0).unwrap()).unwrap_err(),
            crate::error::Error::CorrelatedNoiseModes { modes: 1 }
        ));
    }

    #[test]
    fn correlated_three_mode_matrix_is_psd_boundary() {
        let m = correlated_noise_matrix(3).unwrap();
        let eig = SymmetricEigen::new(m);
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min >= -1e-12, "min eigenvalue {min}");
        assert!(min < 1e-12, "the -0.5 anticorrelation sits on the PSD boundary");
    }

    #[test]
    fn noisy_states_remain_physical() {
        let states = [epr(1.0).unwrap(), ghz(2.0).unwrap()];
        for v in &states {
            for k in 0..=8 {
                let s = 0.75 * k as f64;
                for noise in [
                    NoiseModel { kind: NoiseKind::Uncorrelated, v: s },
                    NoiseModel { kind: NoiseKind::Multiplicative, v: 1.0 + s },
                    NoiseModel { kind: NoiseKind::Correlated, v: s },
                ] {
                    let out = apply_noise(v, &noise).unwrap();
                    assert!(
                        out.is_physical().unwrap(),
                        "unphysical output for {noise:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn noise_model_json() {
        let m: NoiseModel = serde_json::from_str("{\"kind\": \"correlated\", \"v\": 0.5}").unwrap();
        assert_eq!(m.kind, NoiseKind::Correlated);
        let s = serde_json::to_string(&NoiseModel { kind: NoiseKind::Uncorrelated, v: 2.0 }).unwrap();
        assert!(s.contains("\"uncorrelated\""));
    }
}
