//! Maximization of the classical outcome MI over the `2n` measurement
//! parameters: a deterministic multi-start coarse grid followed by
//! Nelder-Mead refinement on an unconstrained reparametrization
//! (`theta` free, `t = sin^2 u`).

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::measurement::{
    classical_mi_matrix, outcome_covariance, outcome_covariance_raw, MeasurementPlan,
};

/// Tolerance on `t` for classifying a plan as homodyne or heterodyne.
pub const REGIME_TOL: f64 = 1e-6;
/// Two candidate optima within this MI band are treated as degenerate and
/// tie-broken deterministically.
const TIE_TOL: f64 = 1e-9;

/// Search options: grid densities, refinement starts, budget, tolerances.
/// All plain scalars so they serialize directly in CLI config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    /// Phase grid `theta in {0, pi/k, ..., (k-1) pi/k}` per mode.
    pub theta_points: usize,
    /// Transmissivity grid: `t_points` equispaced values on `[0, 1]`.
    pub t_points: usize,
    /// Number of best grid candidates refined with Nelder-Mead.
    pub refine_starts: usize,
    /// Hard cap on coarse-grid objective evaluations.
    pub max_evaluations: u64,
    /// Absolute function tolerance of the refiner.
    pub f_tol: f64,
    /// Parameter tolerance of the refiner.
    pub x_tol: f64,
    /// Iteration cap per Nelder-Mead run.
    pub max_iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            theta_points: 8,
            t_points: 5,
            refine_starts: 6,
            max_evaluations: 5_000_000,
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_iterations: 4000,
        }
    }
}

impl SearchOptions {
    /// Denser settings used for sweep rows and threshold bisection, where
    /// the interior optimum near a regime switch must be resolved reliably.
    pub fn sweep_grade() -> Self {
        SearchOptions {
            theta_points: 16,
            t_points: 41,
            refine_starts: 8,
            ..SearchOptions::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.theta_points == 0 || self.t_points < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least one phase and two transmissivity points".into(),
            ));
        }
        if self.refine_starts == 0 {
            return Err(Error::InvalidParameter("refine_starts must be positive".into()));
        }
        Ok(())
    }
}

/// Measurement-regime label of an optimal plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Homodyne,
    Heterodyne,
    Interior,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Homodyne => "homodyne",
            Regime::Heterodyne => "heterodyne",
            Regime::Interior => "interior",
        };
        f.write_str(s)
    }
}

/// Classifies transmissivities: homodyne when every `t` is within 1e-6 of
/// `{0, 1}`, heterodyne when every `t` is within 1e-6 of `1/2`, otherwise
/// interior.
pub fn classify_regime(ts: &[f64]) -> Regime {
    if ts.iter().all(|&t| t.abs() <= REGIME_TOL || (1.0 - t).abs() <= REGIME_TOL) {
        Regime::Homodyne
    } else if ts.iter().all(|&t| (t - 0.5).abs() <= REGIME_TOL) {
        Regime::Heterodyne
    } else {
        Regime::Interior
    }
}

/// Result of an MI maximization.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Best classical MI found, in bits; equals
    /// `classical_mi(outcome_covariance(v, plan))` exactly by construction.
    pub j_g: f64,
    pub plan: MeasurementPlan,
    pub regime: Regime,
    /// Objective evaluations spent (grid plus refinement).
    pub evaluations: u64,
    /// True when every refinement run met its tolerances.
    pub converged: bool,
}

struct Candidate {
    mi: f64,
    params: Vec<(f64, f64)>,
}

fn sum_t(params: &[(f64, f64)]) -> f64 {
    params.iter().map(|p| p.1).sum()
}

/// Deterministic preference order between near-degenerate optima: larger MI,
/// then larger total transmissivity (so the paired homodyne optima report
/// `t = 1`), then lexicographically smaller phases.
fn better(a_mi: f64, a_params: &[(f64, f64)], b_mi: f64, b_params: &[(f64, f64)]) -> bool {
    if a_mi > b_mi + TIE_TOL {
        return true;
    }
    if a_mi < b_mi - TIE_TOL {
        return false;
    }
    let (sa, sb) = (sum_t(a_params), sum_t(b_params));
    if (sa - sb).abs() > TIE_TOL {
        return sa > sb;
    }
    for (pa, pb) in a_params.iter().zip(b_params) {
        if (pa.0 - pb.0).abs() > TIE_TOL {
            return pa.0 < pb.0;
        }
    }
    false
}

fn theta_grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64 * std::f64::consts::PI / k as f64).collect()
}

fn t_grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
}

/// Unconstrained coordinates `(theta, u)` per searched mode, `t = sin^2 u`.
fn to_unconstrained(params: &[(f64, f64)]) -> Vec<f64> {
    params
        .iter()
        .flat_map(|&(theta, t)| [theta, t.clamp(0.0, 1.0).sqrt().asin()])
        .collect()
}

fn from_unconstrained(x: &[f64]) -> Vec<(f64, f64)> {
    x.chunks_exact(2).map(|c| (c[0], c[1].sin().powi(2))).collect()
}

/// Rounds parameters within 1e-3 of the canonical grid (`theta` multiples of
/// pi/8, `t` multiples of 1/4) onto it. Refined optima drift off symmetric
/// points by floating-point noise; the snapped variant is kept only when it
/// costs less than the tie tolerance.
fn snap_params(params: &[(f64, f64)]) -> Option<Vec<(f64, f64)>> {
    const SNAP: f64 = 1e-3;
    let mut snapped = params.to_vec();
    let mut moved = false;
    for p in snapped.iter_mut() {
        let theta_unit = std::f64::consts::PI / 8.0;
        let theta_near = (p.0 / theta_unit).round() * theta_unit;
        if p.0 != theta_near && (p.0 - theta_near).abs() < SNAP {
            p.0 = theta_near;
            moved = true;
        }
        let t_near = ((p.1 * 4.0).round() / 4.0).clamp(0.0, 1.0);
        if p.1 != t_near && (p.1 - t_near).abs() < SNAP {
            p.1 = t_near;
            moved = true;
        }
    }
    moved.then_some(snapped)
}

struct NelderMead {
    f_tol: f64,
    x_tol: f64,
    max_iterations: usize,
}

impl NelderMead {
    /// Minimizes `f`; returns (best point, best value, converged).
    fn run<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        x0: &[f64],
        step: f64,
    ) -> (Vec<f64>, f64, bool) {
        let dim = x0.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let fx0 = f(x0);
        simplex.push((x0.to_vec(), fx0));
        for i in 0..dim {
            let mut x = x0.to_vec();
            x[i] += step;
            let fx = f(&x);
            simplex.push((x, fx));
        }
        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut converged = false;
        for _ in 0..self.max_iterations {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective values are ordered"));
            let best = simplex[0].1;
            let worst = simplex[dim].1;
            let spread = (0..dim)
                .map(|j| {
                    let (mut lo, mut hi) = (f64::MAX, f64::MIN);
                    for (x, _) in &simplex {
                        lo = lo.min(x[j]);
                        hi = hi.max(x[j]);
                    }
                    hi - lo
                })
                .fold(0.0f64, f64::max);
            if (worst - best).abs() < self.f_tol && spread < self.x_tol {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; dim];
            for (x, _) in &simplex[..dim] {
                for j in 0..dim {
                    centroid[j] += x[j] / dim as f64;
                }
            }
            let worst_x = simplex[dim].0.clone();
            let reflect: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + alpha * (centroid[j] - worst_x[j]))
                .collect();
            let f_reflect = f(&reflect);
            if f_reflect < simplex[0].1 {
                let expand: Vec<f64> = (0..dim)
                    .map(|j| centroid[j] + gamma * (centroid[j] - worst_x[j]))
                    .collect();
                let f_expand = f(&expand);
                simplex[dim] = if f_expand < f_reflect {
                    (expand, f_expand)
                } else {
                    (reflect, f_reflect)
                };
            } else if f_reflect < simplex[dim - 1].1 {
                simplex[dim] = (reflect, f_reflect);
            } else {
                let (contract, f_contract) = if f_reflect < simplex[dim].1 {
                    let x: Vec<f64> = (0..dim)
                        .map(|j| centroid[j] + rho * (reflect[j] - centroid[j]))
                        .collect();
                    let fx = f(&x);
                    (x, fx)
                } else {
                    let x: Vec<f64> = (0..dim)
                        .map(|j| centroid[j] + rho * (worst_x[j] - centroid[j]))
                        .collect();
                    let fx = f(&x);
                    (x, fx)
                };
                if f_contract < simplex[dim].1.min(f_reflect) {
                    simplex[dim] = (contract, f_contract);
                } else {
                    let best_x = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        for j in 0..dim {
                            entry.0[j] = best_x[j] + sigma * (entry.0[j] - best_x[j]);
                        }
                        entry.1 = f(&entry.0);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective values are ordered"));
        (simplex[0].0.clone(), simplex[0].1, converged)
    }
}

/// Shared search driver. `expand` maps searched coordinates (one `(theta, t)`
/// pair per searched slot) to the full per-mode parameter list.
fn search(
    v: &CovarianceMatrix,
    options: &SearchOptions,
    slots: usize,
    expand: impl Fn(&[(f64, f64)]) -> Vec<(f64, f64)>,
) -> Result<OptimizationResult> {
    options.validate()?;
    let mut evaluations: u64 = 0;
    let mut mi_of = |params: &[(f64, f64)]| -> f64 {
        evaluations += 1;
        classical_mi_matrix(&outcome_covariance_raw(v, &expand(params)))
            .unwrap_or(f64::NEG_INFINITY)
    };

    let thetas = theta_grid(options.theta_points);
    let ts = t_grid(options.t_points);
    let per_slot = (thetas.len() * ts.len()) as u64;
    let required = per_slot
        .checked_pow(slots as u32)
        .ok_or(Error::InvalidParameter("grid size overflow".into()))?;
    if required > options.max_evaluations {
        return Err(Error::BudgetExhausted {
            budget: options.max_evaluations,
            required,
        });
    }

    // Exhaustive coarse grid, keeping the top candidates for refinement.
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut indices = vec![0usize; slots];
    loop {
        let params: Vec<(f64, f64)> = indices
            .iter()
            .map(|&k| (thetas[k / ts.len()], ts[k % ts.len()]))
            .collect();
        let mi = mi_of(&params);
        insert_candidate(&mut candidates, Candidate { mi, params }, options.refine_starts);
        // Mixed-radix increment over the per-slot grid.
        let mut carry = true;
        for slot in indices.iter_mut() {
            if carry {
                *slot += 1;
                if *slot == per_slot as usize {
                    *slot = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }

    // Canonical plans are always refined: near a regime switch the grid
    // argmax alone can sit in the wrong basin.
    for t in [1.0, 0.0, 0.5] {
        let params = vec![(0.0, t); slots];
        let mi = mi_of(&params);
        insert_candidate(&mut candidates, Candidate { mi, params }, options.refine_starts + 3);
    }

    let nm = NelderMead {
        f_tol: options.f_tol,
        x_tol: options.x_tol,
        max_iterations: options.max_iterations,
    };
    let mut best: Option<(f64, Vec<(f64, f64)>)> = None;
    let mut all_converged = true;
    for cand in &candidates {
        let x0 = to_unconstrained(&cand.params);
        let (x, neg_mi, converged) = nm.run(|x| -mi_of(&from_unconstrained(x)), &x0, 0.15);
        all_converged &= converged;
        let refined = from_unconstrained(&x);
        let (mi, params) = if -neg_mi >= cand.mi {
            (-neg_mi, refined)
        } else {
            (cand.mi, cand.params.clone())
        };
        let replace = match &best {
            None => true,
            Some((bmi, bparams)) => better(mi, &params, *bmi, bparams),
        };
        if replace {
            best = Some((mi, params));
        }
    }

    let (_, params) = best.expect("grid produced at least one candidate");
    let full = expand(&params);
    let plan = MeasurementPlan::new(full)?;
    let sigma = outcome_covariance(v, &plan)?;
    let j_g = crate::measurement::classical_mi(&sigma)?;
    let regime = classify_regime(&plan.transmissivities());
    Ok(OptimizationResult {
        j_g,
        plan,
        regime,
        evaluations,
        converged: all_converged,
    })
}

fn insert_candidate(list: &mut Vec<Candidate>, cand: Candidate, cap: usize) {
    if !cand.mi.is_finite() {
        return;
    }
    let pos = list
        .iter()
        .position(|c| cand.mi > c.mi)
        .unwrap_or(list.len());
    if pos < cap {
        list.insert(pos, cand);
        list.truncate(cap);
    }
}

/// Maximizes the classical outcome MI over all `2n` measurement parameters.
///
/// Deterministic given the options: fixed grid, no randomness. The reported
/// `j_g` is re-evaluated through the public measurement path on the
/// normalized plan.
pub fn maximize_mi(v: &CovarianceMatrix, options: &SearchOptions) -> Result<OptimizationResult> {
    let spectrum = v.symplectic_eigenvalues()?;
    if !spectrum.is_physical() {
        return Err(Error::Unphysical {
            min_nu: spectrum.min(),
        });
    }
    let n = v.modes();
    if n > 8 {
        return Err(Error::InvalidParameter(format!(
            "optimization supports at most 8 modes, got {n}"
        )));
    }
    search(v, options, n, |params| params.to_vec())
}

/// Constrained search with a common `(theta, t)` across all modes, for
/// permutation-symmetric states. Two variables regardless of `n`, which is
/// how the transmissivity-versus-noise curves are generated.
pub fn maximize_mi_symmetric(
    v: &CovarianceMatrix,
    options: &SearchOptions,
) -> Result<OptimizationResult> {
    let deviation = permutation_deviation(v);
    if deviation > 1e-9 {
        return Err(Error::AsymmetricState { deviation });
    }
    let spectrum = v.symplectic_eigenvalues()?;
    if !spectrum.is_physical() {
        return Err(Error::Unphysical {
            min_nu: spectrum.min(),
        });
    }
    let n = v.modes();
    search(v, options, 1, move |params| vec![params[0]; n])
}

/// Largest entrywise deviation of `V` from itself under mode transpositions.
pub fn permutation_deviation(v: &CovarianceMatrix) -> f64 {
    let n = v.modes();
    let m = v.entries();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in (a + 1)..n {
            let map = |i: usize| -> usize {
                let (mode, off) = (i / 2, i % 2);
                let swapped = if mode == a {
                    b
                } else if mode == b {
                    a
                } else {
                    mode
                };
                2 * swapped + off
            };
            for i in 0..2 * n {
                for j in 0..2 * n {
                    worst = worst.max((m[(i, j)] - m[(map(i), map(j))]).abs());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::classical_mi;
    use crate::states::{apply_noise, epr, ghz, vacuum, NoiseKind, NoiseModel};

    const LOG2_COSH2: f64 = 1.911574892777443;

    fn noisy(v: &CovarianceMatrix, kind: NoiseKind, s: f64) -> CovarianceMatrix {
        apply_noise(v, &NoiseModel { kind, v: s }).unwrap()
    }

    #[test]
    fn epr_anchor_homodyne_optimum() {
        let res = maximize_mi(&epr(1.0).unwrap(), &SearchOptions::default()).unwrap();
        assert!((res.j_g - LOG2_COSH2).abs() < 1e-9, "j_g = {}", res.j_g);
        assert_eq!(res.regime, Regime::Homodyne);
        for &t in &res.plan.transmissivities() {
            assert!((t - 1.0).abs() < 1e-6, "tie-break picks t = (1, 1), got {t}");
        }
        assert!(res.converged);

        // The invariant j_g == classical_mi(outcome_covariance(V, plan)).
        let sigma = outcome_covariance(&epr(1.0).unwrap(), &res.plan).unwrap();
        assert!((res.j_g - classical_mi(&sigma).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn noisy_epr_switches_to_heterodyne() {
        let v = noisy(&epr(1.0).unwrap(), NoiseKind::Uncorrelated, 3.0);
        let res = maximize_mi(&v, &SearchOptions::default()).unwrap();
        assert_eq!(res.regime, Regime::Heterodyne);
        for &t in &res.plan.transmissivities() {
            assert!((t - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn vacuum_has_no_correlations() {
        for n in [2usize, 3] {
            let res = maximize_mi(&vacuum(n), &SearchOptions::default()).unwrap();
            assert!(res.j_g.abs() < 1e-12);
        }
    }

    #[test]
    fn unphysical_input_rejected() {
        let m = nalgebra::DMatrix::identity(4, 4) * 0.4;
        let v = CovarianceMatrix::new(2, m).unwrap();
        assert!(matches!(
            maximize_mi(&v, &SearchOptions::default()).unwrap_err(),
            Error::Unphysical { .. }
        ));
    }

    #[test]
    fn budget_exhaustion_reported() {
        let opts = SearchOptions {
            max_evaluations: 10,
            ..SearchOptions::default()
        };
        assert!(matches!(
            maximize_mi(&epr(1.0).unwrap(), &opts).unwrap_err(),
            Error::BudgetExhausted { .. }
        ));
    }

    #[test]
    fn symmetric_ghz_homodyne_optimum() {
        let res = maximize_mi_symmetric(&ghz(2.0).unwrap(), &SearchOptions::default()).unwrap();
        assert_eq!(res.regime, Regime::Homodyne);
        let t = res.plan.transmissivities();
        assert!((t[0] - 1.0).abs() < 1e-6, "Q-quadrature homodyne, t = 1");
        assert!(res.plan.thetas()[0].abs() < 1e-6);

        // Homodyne-Q closed form: MI = 0.5 log2( a^n / det(Q-block) ).
        let q_block = nalgebra::DMatrix::from_fn(3, 3, |i, j| {
            let v = ghz(2.0).unwrap();
            v.entries()[(2 * i, 2 * j)]
        });
        let oracle = 0.5 * (8.0f64.log2() - q_block.determinant().log2());
        assert!((res.j_g - oracle).abs() < 1e-9, "{} vs {oracle}", res.j_g);
    }

    #[test]
    fn ghz_multiplicative_regime_examples() {
        let g = ghz(2.0).unwrap();
        let opts = SearchOptions::sweep_grade();
        let below = maximize_mi_symmetric(&noisy(&g, NoiseKind::Multiplicative, 3.0), &opts)
            .unwrap();
        assert_eq!(below.regime, Regime::Homodyne, "v = 3 is below the switch");
        let above = maximize_mi_symmetric(&noisy(&g, NoiseKind::Multiplicative, 4.0), &opts)
            .unwrap();
        assert!(above.plan.transmissivities()[0] < 1.0 - 1e-3, "v = 4 leaves homodyne");
    }

    #[test]
    fn symmetric_requires_symmetry() {
        let mut m = epr(1.0).unwrap().entries().clone();
        m[(0, 0)] += 0.5;
        let v = CovarianceMatrix::new(2, m).unwrap();
        assert!(matches!(
            maximize_mi_symmetric(&v, &SearchOptions::default()).unwrap_err(),
            Error::AsymmetricState { .. }
        ));
    }

    #[test]
    fn constrained_never_beats_unconstrained() {
        let states = [
            ghz(2.0).unwrap(),
            noisy(&ghz(2.0).unwrap(), NoiseKind::Uncorrelated, 1.0),
            noisy(&epr(1.0).unwrap(), NoiseKind::Correlated, 2.0),
        ];
        for v in &states {
            let full = maximize_mi(v, &SearchOptions::default()).unwrap();
            let sym = maximize_mi_symmetric(v, &SearchOptions::default()).unwrap();
            assert!(sym.j_g <= full.j_g + 1e-9);
            assert!(
                (sym.j_g - full.j_g).abs() < 1e-6,
                "symmetric optimum expected on this family: {} vs {}",
                sym.j_g,
                full.j_g
            );
        }
    }

    #[test]
    fn optimizer_beats_canonical_plans() {
        let states = [
            epr(0.6).unwrap(),
            noisy(&epr(1.0).unwrap(), NoiseKind::Uncorrelated, 0.7),
            noisy(&ghz(2.0).unwrap(), NoiseKind::Multiplicative, 5.0),
        ];
        for v in &states {
            let n = v.modes();
            let res = maximize_mi(v, &SearchOptions::default()).unwrap();
            for plan in [
                MeasurementPlan::homodyne_q(n),
                MeasurementPlan::homodyne_p(n),
                MeasurementPlan::heterodyne(n),
            ] {
                let mi = classical_mi(&outcome_covariance(v, &plan).unwrap()).unwrap();
                assert!(res.j_g >= mi - 1e-9);
            }
        }
    }

    #[test]
    fn ghz_prefers_q_over_p_homodyne() {
        // The P anticorrelations of the GHZ family are weaker than the Q
        // correlations, so measuring Q wins.
        for a in [1.3, 2.0, 3.0] {
            let v = ghz(a).unwrap();
            let q = classical_mi(&outcome_covariance(&v, &MeasurementPlan::homodyne_q(3)).unwrap())
                .unwrap();
            let p = classical_mi(&outcome_covariance(&v, &MeasurementPlan::homodyne_p(3)).unwrap())
                .unwrap();
            assert!(q > p + 1e-6, "a = {a}: {q} vs {p}");
        }
    }

    #[test]
    fn restart_stability_under_denser_grids() {
        let dense = SearchOptions {
            theta_points: 16,
            t_points: 9,
            ..SearchOptions::default()
        };
        for v in [
            epr(1.0).unwrap(),
            noisy(&epr(1.0).unwrap(), NoiseKind::Uncorrelated, 1.5),
            ghz(2.0).unwrap(),
        ] {
            let coarse = maximize_mi(&v, &SearchOptions::default()).unwrap();
            let fine = maximize_mi(&v, &dense).unwrap();
            assert!(
                (coarse.j_g - fine.j_g).abs() < 1e-6,
                "{} vs {}",
                coarse.j_g,
                fine.j_g
            );
        }
    }

    #[test]
    fn regime_classification() {
        assert_eq!(classify_regime(&[1.0, 0.0]), Regime::Homodyne);
        assert_eq!(classify_regime(&[1.0 - 1e-7, 1.0]), Regime::Homodyne);
        assert_eq!(classify_regime(&[0.5, 0.5]), Regime::Heterodyne);
        assert_eq!(classify_regime(&[0.5, 1.0]), Regime::Interior);
        assert_eq!(classify_regime(&[0.7, 0.7]), Regime::Interior);
    }
}
