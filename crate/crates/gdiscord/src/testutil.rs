//! Deterministic random fixtures for the test suites: random symplectic
//! transformations and random physical states built from them.

use nalgebra::DMatrix;
use rand::Rng;

use crate::covariance::CovarianceMatrix;

/// Single-mode rotation block embedded at `mode` of an `n`-mode identity.
pub fn rotation(n: usize, mode: usize, phi: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (s, c) = phi.sin_cos();
    m[(2 * mode, 2 * mode)] = c;
    m[(2 * mode, 2 * mode + 1)] = s;
    m[(2 * mode + 1, 2 * mode)] = -s;
    m[(2 * mode + 1, 2 * mode + 1)] = c;
    m
}

/// Single-mode squeezer `diag(e^z, e^-z)` embedded at `mode`.
pub fn squeezer(n: usize, mode: usize, z: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(2 * mode, 2 * mode)] = z.exp();
    m[(2 * mode + 1, 2 * mode + 1)] = (-z).exp();
    m
}

/// Beam-splitter symplectic mixing modes `a` and `b` with angle `phi`.
pub fn beam_splitter(n: usize, a: usize, b: usize, phi: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (s, c) = phi.sin_cos();
    for k in 0..2 {
        m[(2 * a + k, 2 * a + k)] = c;
        m[(2 * a + k, 2 * b + k)] = s;
        m[(2 * b + k, 2 * a + k)] = -s;
        m[(2 * b + k, 2 * b + k)] = c;
    }
    m
}

/// Random single-mode symplectic via the Euler form: rotation, squeezer,
/// rotation.
pub fn random_local_symplectic<R: Rng>(n: usize, mode: usize, rng: &mut R) -> DMatrix<f64> {
    let phi1 = rng.random::<f64>() * std::f64::consts::PI;
    let z = (rng.random::<f64>() - 0.5) * 1.2;
    let phi2 = rng.random::<f64>() * std::f64::consts::PI;
    rotation(n, mode, phi1) * squeezer(n, mode, z) * rotation(n, mode, phi2)
}

/// Random `n`-mode symplectic: local symplectics interleaved with beam
/// splitters between neighbouring modes.
pub fn random_symplectic<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    for mode in 0..n {
        m = random_local_symplectic(n, mode, rng) * m;
    }
    for a in 0..n.saturating_sub(1) {
        m = beam_splitter(n, a, a + 1, rng.random::<f64>() * std::f64::consts::PI) * m;
        m = random_local_symplectic(n, a, rng) * m;
    }
    m
}

/// Random physical state `S diag(nu_1, nu_1, ..., nu_n, nu_n) S^T` with
/// symplectic eigenvalues drawn from `[1, 2]`.
pub fn random_physical_state<R: Rng>(n: usize, rng: &mut R) -> CovarianceMatrix {
    let s = random_symplectic(n, rng);
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let nu = 1.0 + rng.random::<f64>();
        d[(2 * i, 2 * i)] = nu;
        d[(2 * i + 1, 2 * i + 1)] = nu;
    }
    let v = &s * d * s.transpose();
    CovarianceMatrix::new(n, v).expect("construction from symplectic is symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::omega;
    use rand::SeedableRng;

    #[test]
    fn generated_matrices_are_symplectic() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for n in 1..=3 {
            let s = random_symplectic(n, &mut rng);
            let om = omega(n);
            let err = (&s * &om * s.transpose() - &om).abs().max();
            assert!(err < 1e-12, "S Omega S^T = Omega violated by {err}");
        }
    }

    #[test]
    fn random_states_are_physical() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(12);
        for _ in 0..20 {
            let v = random_physical_state(3, &mut rng);
            assert!(v.is_physical().unwrap());
        }
    }
}
