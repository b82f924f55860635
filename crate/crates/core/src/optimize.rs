//! Multi-start quasi-Newton ascent over pure states.
//!
//! A state of dimension `d` is parametrized by `2d` unconstrained reals that
//! are normalized before every evaluation, so objectives see only unit
//! vectors. Each start runs BFGS on central finite-difference gradients with
//! a backtracking line search that only accepts improving steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::QuantumState;

/// Step used for central-difference gradients.
const GRADIENT_STEP: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimizerConfig {
    pub starts: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub epsilon_sweep: Vec<f64>,
    pub seed: u64,
    pub step_init: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 200,
            max_iterations: 2000,
            convergence_tol: 1e-9,
            epsilon_sweep: vec![1e-2, 1e-3, 1e-4],
            seed: 0,
            step_init: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidConfig("starts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0 && self.convergence_tol.is_finite()) {
            return Err(Error::InvalidConfig("convergence_tol must be positive".into()));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return Err(Error::InvalidConfig("step_init must be positive".into()));
        }
        if self.epsilon_sweep.is_empty() {
            return Err(Error::InvalidConfig("epsilon sweep is empty".into()));
        }
        if let Some(bad) = self
            .epsilon_sweep
            .iter()
            .find(|e| !(**e >= 0.0 && e.is_finite()))
        {
            return Err(Error::InvalidConfig(format!("invalid epsilon {bad}")));
        }
        Ok(())
    }
}

/// Something to maximize over unit vectors at a given regularization.
pub trait Objective: Sync {
    fn label(&self) -> String;
    fn value(&self, psi: &QuantumState, epsilon: f64) -> Result<f64>;
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    label: String,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&QuantumState, f64) -> f64 + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&QuantumState, f64) -> f64 + Sync,
{
    fn label(&self) -> String {
        self.label.clone()
    }

    fn value(&self, psi: &QuantumState, epsilon: f64) -> Result<f64> {
        Ok((self.f)(psi, epsilon))
    }
}

/// Best result of the multi-start search at one regularization.
#[derive(Debug, Clone)]
pub struct EpsilonRun {
    pub epsilon: f64,
    pub value: f64,
    pub state: QuantumState,
    pub best_start: usize,
    pub starts_converged: usize,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub objective_label: String,
    pub best_value: f64,
    pub best_state: QuantumState,
    pub best_epsilon: f64,
    pub per_epsilon: Vec<EpsilonRun>,
    /// Starts stopped by the tolerance test, summed over the sweep.
    pub starts_converged: usize,
}

impl OptimizationResult {
    /// `max − min` of the per-regularization optima.
    pub fn epsilon_spread(&self) -> f64 {
        let (lo, hi) = self
            .per_epsilon
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.value), hi.max(r.value))
            });
        hi - lo
    }

    fn from_runs(objective_label: String, per_epsilon: Vec<EpsilonRun>) -> Self {
        let best = per_epsilon
            .iter()
            .fold(None::<&EpsilonRun>, |acc, r| match acc {
                Some(b) if b.value >= r.value => Some(b),
                _ => Some(r),
            })
            .expect("sweep is non-empty");
        Self {
            objective_label,
            best_value: best.value,
            best_state: best.state.clone(),
            best_epsilon: best.epsilon,
            starts_converged: per_epsilon.iter().map(|r| r.starts_converged).sum(),
            per_epsilon,
        }
    }
}

/// Outcome of a single local ascent.
#[derive(Debug, Clone)]
pub struct Ascent {
    pub state: QuantumState,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

/// Evaluates the objective on the normalized point, mapping non-finite values
/// and evaluation errors to a numerical failure.
fn evaluate<O: Objective + ?Sized>(objective: &O, x: &[f64], epsilon: f64) -> Result<f64> {
    let psi = QuantumState::from_reals(x)?;
    let failure = |psi: &QuantumState| Error::NumericalFailure {
        objective: objective.label(),
        state: format!("{:?}", psi.to_pairs()),
    };
    match objective.value(&psi, epsilon) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(failure(&psi)),
        Err(Error::UndefinedCorrelator) => Err(failure(&psi)),
        Err(e) => Err(e),
    }
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter().map(|v| v / n).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gradient<O: Objective + ?Sized>(objective: &O, x: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for k in 0..x.len() {
        let orig = probe[k];
        probe[k] = orig + GRADIENT_STEP;
        let up = evaluate(objective, &probe, epsilon)?;
        probe[k] = orig - GRADIENT_STEP;
        let down = evaluate(objective, &probe, epsilon)?;
        probe[k] = orig;
        g[k] = (up - down) / (2.0 * GRADIENT_STEP);
    }
    Ok(g)
}

/// Backtracking search along `dir` starting at step `alpha`; returns the
/// accepted normalized point and its value, or `None` if nothing improves.
fn line_search<O: Objective + ?Sized>(
    objective: &O,
    x: &[f64],
    fx: f64,
    grad: &[f64],
    dir: &[f64],
    mut alpha: f64,
    epsilon: f64,
) -> Result<Option<(Vec<f64>, f64)>> {
    let slope = dot(grad, dir);
    if slope <= 0.0 {
        return Ok(None);
    }
    for _ in 0..MAX_BACKTRACKS {
        let trial: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + alpha * d).collect();
        let trial = normalized(&trial);
        let ft = evaluate(objective, &trial, epsilon)?;
        if ft > fx && ft >= fx + ARMIJO * alpha * slope {
            return Ok(Some((trial, ft)));
        }
        alpha *= 0.5;
    }
    Ok(None)
}

/// Local ascent from `start` at a fixed regularization.
///
/// Alternates BFGS with a Nelder-Mead polish, which can make progress along
/// kinks and steep ridges where difference gradients stall, until a round
/// gains no more than the tolerance or the iteration budget is spent.
pub fn local_ascent<O: Objective + ?Sized>(
    objective: &O,
    start: &QuantumState,
    epsilon: f64,
    config: &OptimizerConfig,
) -> Result<Ascent> {
    let mut x = start.to_reals();
    let mut fx = evaluate(objective, &x, epsilon)?;
    let mut trace = vec![fx];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let before = fx;
        let budget = config.max_iterations - iterations;
        iterations += bfgs(objective, &mut x, &mut fx, epsilon, config, budget, &mut trace)?;
        let budget = config.max_iterations.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        iterations += nelder_mead(objective, &mut x, &mut fx, epsilon, config, budget, &mut trace)?;
        if fx - before <= config.convergence_tol * fx.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(Ascent {
        state: QuantumState::from_reals(&x)?,
        value: fx,
        iterations,
        converged,
        trace,
    })
}

/// BFGS on difference gradients; returns the iterations used.
fn bfgs<O: Objective + ?Sized>(
    objective: &O,
    x: &mut Vec<f64>,
    fx: &mut f64,
    epsilon: f64,
    config: &OptimizerConfig,
    budget: usize,
    trace: &mut Vec<f64>,
) -> Result<usize> {
    let n = x.len();
    let mut grad = gradient(objective, x, epsilon)?;
    let mut h = identity(n);
    let mut fresh = true;
    let mut iterations = 0;
    while iterations < budget {
        iterations += 1;
        let gnorm = dot(&grad, &grad).sqrt();
        if gnorm <= config.convergence_tol {
            break;
        }
        let (dir, alpha) = if fresh {
            (grad.clone(), config.step_init / gnorm)
        } else {
            (mat_vec(&h, &grad), 1.0)
        };
        let mut step = line_search(objective, x, *fx, &grad, &dir, alpha, epsilon)?;
        if step.is_none() && !fresh {
            // Curvature model went stale; retry along the gradient.
            h = identity(n);
            fresh = true;
            step = line_search(objective, x, *fx, &grad, &grad, config.step_init / gnorm, epsilon)?;
        }
        let Some((x_new, f_new)) = step else {
            break;
        };
        let grad_new = gradient(objective, &x_new, epsilon)?;
        let gain = f_new - *fx;
        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        // Ascent on f is descent on -f.
        let y: Vec<f64> = grad.iter().zip(&grad_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut().flatten().for_each(|v| *v *= scale);
                fresh = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        *x = x_new;
        *fx = f_new;
        grad = grad_new;
        trace.push(*fx);
        if gain <= config.convergence_tol * fx.abs().max(1.0) {
            break;
        }
    }
    Ok(iterations)
}

/// Adaptive Nelder-Mead around `x` with an initial simplex of edge
/// `step_init / 10`; returns the iterations used.
fn nelder_mead<O: Objective + ?Sized>(
    objective: &O,
    x: &mut Vec<f64>,
    fx: &mut f64,
    epsilon: f64,
    config: &OptimizerConfig,
    budget: usize,
    trace: &mut Vec<f64>,
) -> Result<usize> {
    let n = x.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let edge = config.step_init / 10.0;
    // Minimizes -f; vertices are kept normalized.
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x.clone(), -*fx)];
    for k in 0..n {
        let mut v = x.clone();
        v[k] += edge;
        let v = normalized(&v);
        let f = -evaluate(objective, &v, epsilon)?;
        simplex.push((v, f));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        normalized(&c.iter().zip(w).map(|(a, b)| a + t * (b - a)).collect::<Vec<_>>())
    };
    let mut iterations = 0;
    while iterations < budget {
        iterations += 1;
        let spread = simplex[n].1 - simplex[0].1;
        if spread <= config.convergence_tol * simplex[0].1.abs().max(1.0) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            centroid.iter_mut().zip(v).for_each(|(c, a)| *c += a / nf);
        }
        let worst = simplex[n].0.clone();
        let fw = simplex[n].1;
        let xr = point(&centroid, &worst, -alpha);
        let fr = -evaluate(objective, &xr, epsilon)?;
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst, -alpha * beta);
            let fe = -evaluate(objective, &xe, epsilon)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < fw {
                let xc = point(&centroid, &worst, -alpha * gamma);
                let fc = -evaluate(objective, &xc, epsilon)?;
                (xc, fc)
            } else {
                let xc = point(&centroid, &worst, gamma);
                let fc = -evaluate(objective, &xc, epsilon)?;
                (xc, fc)
            };
            if fc < fr.min(fw) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v = point(&best, &vertex.0, delta);
                    let f = -evaluate(objective, &v, epsilon)?;
                    *vertex = (v, f);
                }
            }
        }
        order(&mut simplex);
        if -simplex[0].1 > *fx {
            *fx = -simplex[0].1;
            *x = simplex[0].0.clone();
            trace.push(*fx);
        }
    }
    Ok(iterations)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_vec(h: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    h.iter().map(|row| dot(row, v)).collect()
}

/// Inverse-Hessian update `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// The starting point of start `index`: standard-normal reals on its own
/// stream, so each start is independent of scheduling.
pub fn start_state(seed: u64, index: usize, dim: usize) -> QuantumState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let reals: Vec<f64> = (0..2 * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    QuantumState::from_reals(&reals).expect("a Gaussian vector is nonzero almost surely")
}

/// Runs local ascents from `starts` at one regularization and keeps the best,
/// preferring the lowest start index among ties.
pub fn best_of<O: Objective + ?Sized>(
    objective: &O,
    starts: &[QuantumState],
    epsilon: f64,
    config: &OptimizerConfig,
) -> Result<EpsilonRun> {
    let ascents: Vec<Ascent> = starts
        .par_iter()
        .map(|s| local_ascent(objective, s, epsilon, config))
        .collect::<Result<_>>()?;
    let converged = ascents.iter().filter(|a| a.converged).count();
    let (index, best) = ascents
        .into_iter()
        .enumerate()
        .reduce(|b, c| if c.1.value > b.1.value { c } else { b })
        .ok_or_else(|| Error::InvalidConfig("no starting states".into()))?;
    Ok(EpsilonRun {
        epsilon,
        value: best.value,
        state: best.state,
        best_start: index,
        starts_converged: converged,
    })
}

/// Multi-start maximization over unit vectors of dimension `dim`, repeated for
/// every regularization in the sweep.
pub fn maximize<O: Objective + ?Sized>(
    objective: &O,
    dim: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be positive".into()));
    }
    let starts: Vec<QuantumState> = (0..config.starts)
        .map(|k| start_state(config.seed, k, dim))
        .collect();
    maximize_from(objective, &starts, config)
}

/// As [`maximize`] but from caller-supplied starting states.
pub fn maximize_from<O: Objective + ?Sized>(
    objective: &O,
    starts: &[QuantumState],
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let runs = config
        .epsilon_sweep
        .iter()
        .map(|&eps| best_of(objective, starts, eps, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizationResult::from_runs(objective.label(), runs))
}
