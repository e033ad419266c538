//! Noise sweeps: correlation reports over a grid of noise strengths, plus
//! bisected regime-switch and separability thresholds, and the fixed-format
//! CSV the plots are generated from.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::metrics::{assemble_report, CorrelationReport};
use crate::optimizer::{maximize_mi, maximize_mi_symmetric, permutation_deviation, Regime, SearchOptions};
use crate::separability::{duan_criterion, state_verdict, SeparabilityVerdict};
use crate::states::{apply_noise, epr, ghz, vacuum, NoiseKind, NoiseModel};

/// Exact CSV header of sweep output.
pub const CSV_HEADER: &str = "v,i_q,j_g,delta_g,j_asym,delta_asym,t,theta,regime,entangled";

/// Width to which thresholds are bisected.
const BISECT_TOL: f64 = 1e-4;

/// The base state of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum StateSpec {
    Epr { r: f64 },
    Ghz { a: f64 },
    Vacuum2,
    Vacuum3,
}

impl StateSpec {
    pub fn build(&self) -> Result<CovarianceMatrix> {
        match *self {
            StateSpec::Epr { r } => epr(r),
            StateSpec::Ghz { a } => ghz(a),
            StateSpec::Vacuum2 => Ok(vacuum(2)),
            StateSpec::Vacuum3 => Ok(vacuum(3)),
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            StateSpec::Epr { .. } | StateSpec::Vacuum2 => 2,
            StateSpec::Ghz { .. } | StateSpec::Vacuum3 => 3,
        }
    }
}

/// A noise sweep: base state, noise kind, `v` grid and optimizer options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(flatten)]
    pub state: StateSpec,
    pub noise: NoiseKind,
    pub v_start: f64,
    pub v_stop: f64,
    pub v_step: f64,
    #[serde(default = "SearchOptions::sweep_grade")]
    pub options: SearchOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_start.is_finite() && self.v_stop.is_finite() && self.v_step.is_finite()) {
            return Err(Error::InvalidParameter("v grid must be finite".into()));
        }
        if self.v_step <= 0.0 || self.v_stop < self.v_start {
            return Err(Error::InvalidParameter(
                "v grid must be nonempty and monotone (v_step > 0, v_stop >= v_start)".into(),
            ));
        }
        NoiseModel::new(self.noise, self.v_start)?;
        if self.noise == NoiseKind::Correlated && !matches!(self.state.modes(), 2 | 3) {
            return Err(Error::CorrelatedNoiseModes {
                modes: self.state.modes(),
            });
        }
        Ok(())
    }

    pub fn v_grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut k = 0usize;
        loop {
            let v = self.v_start + k as f64 * self.v_step;
            if v > self.v_stop + 1e-12 {
                break;
            }
            grid.push(v);
            k += 1;
        }
        grid
    }
}

/// One sweep grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub v: f64,
    pub report: CorrelationReport,
}

/// Bisected thresholds along a sweep: the noise strength where the optimal
/// regime leaves homodyne (the dashed vertical line) and where the
/// separability witness crosses zero (the solid vertical line). `None` when
/// the sweep range contains no such crossing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Thresholds {
    pub regime_switch_v: Option<f64>,
    pub separability_boundary_v: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub thresholds: Thresholds,
}

fn noisy_state(base: &CovarianceMatrix, kind: NoiseKind, v: f64) -> Result<CovarianceMatrix> {
    apply_noise(base, &NoiseModel::new(kind, v)?)
}

/// Runs the sweep, evaluating grid points in parallel on up to `jobs`
/// threads (0 means the rayon default). Rows come back ordered by `v`
/// regardless of completion order, and the optimizer is deterministic, so
/// repeated runs are byte-identical.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepResult> {
    spec.validate()?;
    let base = spec.state.build()?;
    // The built-in families are permutation symmetric, which licenses the
    // common-(theta, t) search; fall back to the full optimizer otherwise.
    let symmetric = permutation_deviation(&base) <= 1e-9;

    let grid = spec.v_grid();
    let compute = || -> Result<Vec<SweepRow>> {
        grid.par_iter()
            .map(|&v| {
                let state = noisy_state(&base, spec.noise, v)?;
                let report = assemble_report(&state, &spec.options, symmetric)?;
                Ok(SweepRow { v, report })
            })
            .collect()
    };
    let rows = if jobs == 0 {
        compute()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(compute)?
    };

    let thresholds = Thresholds {
        regime_switch_v: bisect_regime_switch(&base, spec, symmetric, &rows)?,
        separability_boundary_v: bisect_separability(&base, spec, &rows)?,
    };
    Ok(SweepResult { rows, thresholds })
}

fn regime_at(
    base: &CovarianceMatrix,
    spec: &SweepSpec,
    symmetric: bool,
    v: f64,
) -> Result<Regime> {
    let state = noisy_state(base, spec.noise, v)?;
    let res = if symmetric {
        maximize_mi_symmetric(&state, &spec.options)?
    } else {
        maximize_mi(&state, &spec.options)?
    };
    Ok(res.regime)
}

fn bisect_regime_switch(
    base: &CovarianceMatrix,
    spec: &SweepSpec,
    symmetric: bool,
    rows: &[SweepRow],
) -> Result<Option<f64>> {
    let flip = rows
        .windows(2)
        .find(|w| w[0].report.regime == Regime::Homodyne && w[1].report.regime != Regime::Homodyne);
    let Some(w) = flip else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (w[0].v, w[1].v);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if regime_at(base, spec, symmetric, mid)? == Regime::Homodyne {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Signed separability witness used for bisection: Duan for two-mode
/// standard-form states, otherwise the worst PPT witness over `1 | rest`
/// bipartitions.
fn witness_at(base: &CovarianceMatrix, spec: &SweepSpec, v: f64) -> Result<f64> {
    let state = noisy_state(base, spec.noise, v)?;
    let verdict: SeparabilityVerdict = if state.modes() == 2 {
        duan_criterion(&state).or_else(|_| state_verdict(&state))?
    } else {
        state_verdict(&state)?
    };
    Ok(verdict.witness)
}

fn bisect_separability(
    base: &CovarianceMatrix,
    spec: &SweepSpec,
    rows: &[SweepRow],
) -> Result<Option<f64>> {
    let flip = rows.windows(2).find(|w| {
        w[0].report.entangled.is_entangled() && !w[1].report.entangled.is_entangled()
    });
    let Some(w) = flip else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (w[0].v, w[1].v);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if witness_at(base, spec, mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Fixed 12-significant-digit, locale-independent float formatting shared by
/// every CSV column, so identical configs produce byte-identical files.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.11e}")
}

/// Mean transmissivity and phase of a plan; for the symmetric plans the
/// sweeps produce these are the common values.
fn plan_columns(report: &CorrelationReport) -> (f64, f64) {
    let n = report.t.len() as f64;
    (
        report.t.iter().sum::<f64>() / n,
        report.theta.iter().sum::<f64>() / n,
    )
}

fn verdict_cell(report: &CorrelationReport) -> &'static str {
    match report.entangled {
        crate::separability::Verdict::Entangled => "true",
        crate::separability::Verdict::Separable => "false",
        crate::separability::Verdict::Boundary => "boundary",
    }
}

/// Writes sweep rows as CSV with the exact header
/// `v,i_q,j_g,delta_g,j_asym,delta_asym,t,theta,regime,entangled`.
/// The one-sided columns are empty for three-mode states.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let r = &row.report;
        let (t, theta) = plan_columns(r);
        let j_asym = r.j_asym.map(fmt_sig).unwrap_or_default();
        let delta_asym = r.delta_asym.map(fmt_sig).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_sig(row.v),
            fmt_sig(r.i_q),
            fmt_sig(r.j_g),
            fmt_sig(r.delta_g),
            j_asym,
            delta_asym,
            fmt_sig(t),
            fmt_sig(theta),
            r.regime,
            verdict_cell(r)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_options() -> SearchOptions {
        SearchOptions {
            theta_points: 8,
            t_points: 21,
            refine_starts: 6,
            ..SearchOptions::default()
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = SweepSpec {
            state: StateSpec::Epr { r: 1.0 },
            noise: NoiseKind::Uncorrelated,
            v_start: 0.0,
            v_stop: 1.0,
            v_step: 0.5,
            options: quick_options(),
        };
        assert!(spec.validate().is_ok());
        assert_eq!(spec.v_grid(), vec![0.0, 0.5, 1.0]);

        spec.v_step = -1.0;
        assert!(spec.validate().is_err());
        spec.v_step = 0.5;
        spec.noise = NoiseKind::Multiplicative;
        assert!(spec.validate().is_err(), "multiplicative noise needs v >= 1");
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SweepSpec {
            state: StateSpec::Ghz { a: 2.0 },
            noise: NoiseKind::Multiplicative,
            v_start: 1.0,
            v_stop: 6.0,
            v_step: 0.1,
            options: SearchOptions::sweep_grade(),
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"state\":\"ghz\""));
        let back: SweepSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.state, spec.state);
        assert_eq!(back.v_grid().len(), spec.v_grid().len());

        // Options default to sweep grade when omitted.
        let partial: SweepSpec = serde_json::from_str(
            "{\"state\":\"epr\",\"r\":1.0,\"noise\":\"uncorrelated\",\"v_start\":0,\"v_stop\":1,\"v_step\":0.5}",
        )
        .unwrap();
        assert_eq!(partial.options, SearchOptions::sweep_grade());
    }

    #[test]
    fn epr_uncorrelated_sweep_thresholds() {
        let spec = SweepSpec {
            state: StateSpec::Epr { r: 1.0 },
            noise: NoiseKind::Uncorrelated,
            v_start: 0.0,
            v_stop: 1.2,
            v_step: 0.2,
            options: quick_options(),
        };
        let result = run_sweep(&spec, 0).unwrap();
        assert_eq!(result.rows.len(), 7);

        // Separability boundary: closed form 1 - e^-2.
        let sep = result.thresholds.separability_boundary_v.unwrap();
        assert!((sep - 0.864664716763387).abs() < 1e-4, "sep = {sep}");

        // Regime switch agrees with the homodyne-optimality margin root.
        let switch = result.thresholds.regime_switch_v.unwrap();
        assert!((switch - 0.497871).abs() < 1e-3, "switch = {switch}");

        // The regime column flips within one grid step of the threshold.
        for w in result.rows.windows(2) {
            if w[0].report.regime == Regime::Homodyne && w[1].report.regime != Regime::Homodyne {
                assert!(w[0].v <= switch && switch <= w[1].v);
            }
        }
    }

    #[test]
    fn vacuum_correlated_sweep_has_no_thresholds() {
        let spec = SweepSpec {
            state: StateSpec::Vacuum2,
            noise: NoiseKind::Correlated,
            v_start: 0.0,
            v_stop: 2.0,
            v_step: 0.5,
            options: quick_options(),
        };
        let result = run_sweep(&spec, 2).unwrap();
        for row in &result.rows {
            assert!(!row.report.entangled.is_entangled(), "separable for all v");
        }
        assert!(result.thresholds.separability_boundary_v.is_none());
        for row in &result.rows[1..] {
            assert!(row.report.delta_g > 0.0, "discord without entanglement");
        }
    }

    #[test]
    fn csv_format_and_determinism() {
        let spec = SweepSpec {
            state: StateSpec::Epr { r: 1.0 },
            noise: NoiseKind::Correlated,
            v_start: 0.0,
            v_stop: 0.4,
            v_step: 0.2,
            options: quick_options(),
        };
        let a = run_sweep(&spec, 1).unwrap();
        let b = run_sweep(&spec, 3).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_csv(&a.rows, &mut csv_a).unwrap();
        write_csv(&b.rows, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b, "byte-identical across runs and job counts");

        let text = String::from_utf8(csv_a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 10);
        assert!(first.ends_with("homodyne,true"));
    }

    #[test]
    fn three_mode_rows_have_empty_asymmetric_columns() {
        let spec = SweepSpec {
            state: StateSpec::Vacuum3,
            noise: NoiseKind::Correlated,
            v_start: 0.5,
            v_stop: 0.5,
            v_step: 1.0,
            options: quick_options(),
        };
        let result = run_sweep(&spec, 0).unwrap();
        let mut csv = Vec::new();
        write_csv(&result.rows, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let row = text.lines().nth(1).unwrap();
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[4], "");
        assert_eq!(cells[5], "");
    }

    #[test]
    fn fmt_sig_is_stable() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.911574892777443), "1.91157489278e0");
        assert_eq!(fmt_sig(-0.25), "-2.50000000000e-1");
    }
}
