//! Minimization of the sum-of-squared-differences functional
//! `½∫(J(φ) − f0)² + |curl φ − g0|²` by repeated div-curl corrections
//! `φ ← φ + u`.
//!
//! Control functions are residual driven: `f = σ(f0 − J(φ))` and
//! `g = σ(g0 − curl φ)`, with `u` the boundary-fixed solution of
//! `div u = f`, `curl u = g`. A backtracking search on `σ` keeps the
//! functional strictly decreasing.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diffops;
use crate::error::{Error, Result};
use crate::field::{ScalarField, Transformation, VectorField};
use crate::monitor::{self, MonitorPair};
use crate::poisson::{self, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Initial control scale.
    pub step_sigma: f64,
    pub max_outer: usize,
    /// Stop once an accepted step lowers the functional by less than this
    /// fraction.
    pub ssd_rel_tol: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub solver: SolverConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_sigma: 0.1,
            max_outer: 500,
            ssd_rel_tol: 1e-8,
            backtrack_factor: 0.5,
            max_backtracks: 20,
            solver: SolverConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_sigma > 0.0) || !self.step_sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("step_sigma must be positive, got {}", self.step_sigma)));
        }
        if self.max_outer == 0 || self.max_backtracks == 0 {
            return Err(Error::InvalidConfig("iteration limits must be positive".into()));
        }
        if !(self.ssd_rel_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("ssd_rel_tol must be positive, got {}", self.ssd_rel_tol)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub ssd: f64,
    /// Interior `‖J(φ) − f0‖₂`.
    pub jac_residual: f64,
    /// Interior `‖curl φ − g0‖₂`, reported even when the curl term is off.
    pub curl_residual: f64,
    pub min_jacobian: f64,
    /// Control scale of the accepted step; 0 for the starting state.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    /// The functional vanished or its relative decrease fell below tolerance.
    Converged,
    /// No backtracking step lowered the functional.
    SigmaExhausted,
    MaxOuter,
    /// A Poisson solve failed; the last accepted iterate is returned.
    SolverFailure(String),
}

#[derive(Debug, Clone)]
pub struct OptimizerTrace {
    /// Starting state followed by every accepted iteration.
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    /// Final map has a nonpositive Jacobian somewhere.
    pub folded: bool,
    /// `∫J(T₀) − 1` before renormalization, for reconstructions.
    pub normalization_bias: Option<f64>,
    /// `‖φ − T₀‖₂` per record, for reconstructions.
    pub target_errors: Vec<f64>,
}

impl OptimizerTrace {
    pub fn accepted_iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("trace holds the starting state")
    }

    /// CSV with columns `iter, ssd, jac_residual, curl_residual, min_jacobian, sigma`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["iter", "ssd", "jac_residual", "curl_residual", "min_jacobian", "sigma"])?;
        for r in &self.records {
            w.write_record(&[
                r.iteration.to_string(),
                format!("{:e}", r.ssd),
                format!("{:e}", r.jac_residual),
                format!("{:e}", r.curl_residual),
                format!("{:e}", r.min_jacobian),
                format!("{:e}", r.sigma),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cached quantities of one iterate.
struct Evaluated {
    phi: Transformation,
    jac: ScalarField,
    curl: VectorField,
    ssd: f64,
}

fn interior_sq_sum(s: &ScalarField) -> f64 {
    s.grid()
        .interior_nodes()
        .map(|i| s.values()[i] * s.values()[i])
        .sum()
}

fn evaluate(phi: Transformation, m: &MonitorPair) -> Result<Evaluated> {
    phi.grid().check_same(m.grid())?;
    let jac = diffops::jacobian_det(&phi);
    let curl = diffops::curl(phi.positions())?;
    let ssd = functional(&jac, &curl, m)?;
    Ok(Evaluated { phi, jac, curl, ssd })
}

fn functional(jac: &ScalarField, curl: &VectorField, m: &MonitorPair) -> Result<f64> {
    let grid = *jac.grid();
    let mut sum = interior_sq_sum(&jac.sub(m.f0())?);
    if m.curl_enabled() {
        for c in curl.sub(m.g0())?.components() {
            sum += interior_sq_sum(c);
        }
    }
    let value = 0.5 * grid.cell_volume() * sum;
    if !value.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(value)
}

/// `½ h^dim Σ_interior [(J(φ) − f0)² + |curl φ − g0|²]`; the curl term is
/// dropped when the monitor disables it.
pub fn ssd(phi: &Transformation, m: &MonitorPair) -> Result<f64> {
    phi.grid().check_same(m.grid())?;
    functional(&diffops::jacobian_det(phi), &diffops::curl(phi.positions())?, m)
}

/// Minimum nodal Jacobian determinant; nonpositive means the mesh folds.
pub fn fold_check(phi: &Transformation) -> f64 {
    diffops::jacobian_det(phi).min_value()
}

fn controls(
    state: &Evaluated,
    m: &MonitorPair,
    sigma: f64,
    solver: &SolverConfig,
) -> Result<(ScalarField, VectorField)> {
    let f = m.f0().sub(&state.jac)?.scale(sigma);
    let grid = *m.grid();
    let g = if m.curl_enabled() {
        let g = m.g0().sub(&state.curl)?.scale(sigma);
        if grid.dim() == 3 {
            monitor::project_divergence_free(&g, solver)?
        } else {
            g
        }
    } else {
        VectorField::zeros(grid, diffops::curl_component_count(&grid))
    };
    Ok((f, g))
}

fn step_from(state: &Evaluated, m: &MonitorPair, sigma: f64, cfg: &OptimizerConfig) -> Result<Evaluated> {
    if sigma == 0.0 {
        return evaluate(state.phi.clone(), m);
    }
    let (f, g) = controls(state, m, sigma, &cfg.solver)?;
    let sol = poisson::solve_div_curl(&f, &g, &cfg.solver)?;
    evaluate(state.phi.displaced(&sol.u)?, m)
}

/// One correction `φ_old + u` with controls scaled by `sigma`; returns the
/// candidate and its functional value.
pub fn optimizer_step(
    phi_old: &Transformation,
    m: &MonitorPair,
    sigma: f64,
    cfg: &OptimizerConfig,
) -> Result<(Transformation, f64)> {
    let state = evaluate(phi_old.clone(), m)?;
    let next = step_from(&state, m, sigma, cfg)?;
    Ok((next.phi, next.ssd))
}

fn record(iteration: usize, state: &Evaluated, m: &MonitorPair, sigma: f64) -> Result<IterationRecord> {
    Ok(IterationRecord {
        iteration,
        ssd: state.ssd,
        jac_residual: state.jac.sub(m.f0())?.interior_l2_norm()?,
        curl_residual: state.curl.sub(m.g0())?.interior_l2_norm()?,
        min_jacobian: state.jac.min_value(),
        sigma,
    })
}

/// Backtracking descent from `start`.
pub fn minimize(
    start: &Transformation,
    m: &MonitorPair,
    cfg: &OptimizerConfig,
) -> Result<(Transformation, OptimizerTrace)> {
    minimize_observed(start, m, cfg, |_| {})
}

/// [`minimize`] calling `observe` on the starting map and every accepted iterate.
pub fn minimize_observed(
    start: &Transformation,
    m: &MonitorPair,
    cfg: &OptimizerConfig,
    mut observe: impl FnMut(&Transformation),
) -> Result<(Transformation, OptimizerTrace)> {
    cfg.validate()?;
    let mut state = evaluate(start.clone(), m)?;
    let mut records = vec![record(0, &state, m, 0.0)?];
    observe(&state.phi);

    let mut sigma = cfg.step_sigma;
    let mut stop = StopReason::MaxOuter;
    if state.ssd == 0.0 {
        stop = StopReason::Converged;
    } else {
        'outer: for iteration in 1..=cfg.max_outer {
            let mut accepted = None;
            for attempt in 0..=cfg.max_backtracks {
                if attempt > 0 {
                    sigma *= cfg.backtrack_factor;
                }
                match step_from(&state, m, sigma, cfg) {
                    Ok(candidate) if candidate.ssd < state.ssd => {
                        accepted = Some(candidate);
                        break;
                    }
                    Ok(_) | Err(Error::NonFinite) | Err(Error::BoundaryNotFixed { .. }) => {}
                    Err(e) => {
                        stop = StopReason::SolverFailure(e.to_string());
                        break 'outer;
                    }
                }
            }
            let Some(next) = accepted else {
                stop = StopReason::SigmaExhausted;
                break;
            };
            let decrease = (state.ssd - next.ssd) / state.ssd;
            state = next;
            records.push(record(iteration, &state, m, sigma)?);
            observe(&state.phi);
            if state.ssd == 0.0 || decrease < cfg.ssd_rel_tol {
                stop = StopReason::Converged;
                break;
            }
        }
    }

    let folded = !(state.jac.min_value() > 0.0);
    let trace = OptimizerTrace {
        records,
        stop,
        folded,
        normalization_bias: None,
        target_errors: Vec::new(),
    };
    Ok((state.phi, trace))
}

/// Recovers a map from its own Jacobian determinant (and curl when
/// `use_curl`), starting from the identity.
pub fn reconstruct(
    t0: &Transformation,
    use_curl: bool,
    cfg: &OptimizerConfig,
) -> Result<(Transformation, OptimizerTrace)> {
    let m = monitor::monitor_from_transformation(t0, use_curl)?;
    let bias = diffops::jacobian_det(t0).integral() - 1.0;
    let mut errors = Vec::new();
    let start = Transformation::identity(*t0.grid());
    let (phi, mut trace) = minimize_observed(&start, &m, cfg, |phi| {
        errors.push(phi.distance(t0).unwrap_or(f64::NAN));
    })?;
    trace.normalization_bias = Some(bias);
    trace.target_errors = errors;
    Ok((phi, trace))
}
