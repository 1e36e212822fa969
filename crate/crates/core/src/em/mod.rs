//! Expectation-maximization on the Jensen lower bound of the regularized
//! log-likelihood, with random restarts.

mod beta;
mod estep;
mod mstep;

use log::{debug, warn};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use beta::{solve_beta, BetaConstants, BetaSolution, BETA_FLOOR};
pub use estep::VariationalState;
pub use mstep::MStepReport;

use crate::error::{Error, Result};
use crate::graph::TemporalNetwork;
use crate::model::log_prior;
use crate::params::{Hyperparams, ModelParams, RecLag, Variant};
use crate::terms::{pair_rate_sum, Dyads, TermMask};

/// Counters of numerical corner cases met during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWarnings {
    pub zero_denominators: usize,
    pub beta_floored: bool,
    pub degenerate_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    /// `None` when the run was aborted on a non-finite objective.
    pub final_objective: Option<f64>,
    pub n_iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    /// Regularized objective before the first iteration and after each one.
    pub objective_trace: Vec<f64>,
    pub n_iterations: usize,
    pub converged: bool,
    /// Index of the winning restart; its RNG is `(seed, restart)`.
    pub restart: usize,
    pub seed: u64,
    pub warnings: FitWarnings,
    pub restarts: Vec<RestartSummary>,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

/// Computes the responsibilities that make the bound tight at `params`.
pub fn e_step(net: &TemporalNetwork, params: &ModelParams) -> Result<VariationalState> {
    check_inputs(net, params)?;
    let dyads = Dyads::new(net, params.rec_lag, None);
    Ok(estep::e_step_on(&dyads, params).0)
}

/// Jensen lower bound of the regularized objective.
pub fn lower_bound(
    net: &TemporalNetwork,
    params: &ModelParams,
    state: &VariationalState,
    hyper: &Hyperparams,
) -> Result<f64> {
    check_inputs(net, params)?;
    let dyads = Dyads::new(net, params.rec_lag, None);
    check_state(&dyads, state, params)?;
    Ok(estep::lower_bound_on(&dyads, params, state, hyper))
}

/// One M-step for whichever variant `params` carries.
pub fn m_step(
    net: &TemporalNetwork,
    state: &VariationalState,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<(ModelParams, MStepReport)> {
    check_inputs(net, params)?;
    let dyads = Dyads::new(net, params.rec_lag, None);
    check_state(&dyads, state, params)?;
    Ok(mstep::m_step_on(&dyads, state, params, hyper))
}

fn m_step_for(
    variant: Variant,
    net: &TemporalNetwork,
    state: &VariationalState,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<(ModelParams, MStepReport)> {
    if params.variant != variant {
        return Err(Error::InvalidConfig(format!(
            "{variant} update called with {} parameters",
            params.variant
        )));
    }
    m_step(net, state, params, hyper)
}

/// M-step with every parameter static.
pub fn m_step_w_static(
    net: &TemporalNetwork,
    state: &VariationalState,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<(ModelParams, MStepReport)> {
    m_step_for(Variant::WStatic, net, state, params, hyper)
}

/// M-step with one affinity matrix per snapshot.
pub fn m_step_w_dyn(
    net: &TemporalNetwork,
    state: &VariationalState,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<(ModelParams, MStepReport)> {
    m_step_for(Variant::WDyn, net, state, params, hyper)
}

/// M-step with memberships, affinity and `beta` per snapshot. No membership
/// priors enter this variant.
pub fn m_step_full_dyn(
    net: &TemporalNetwork,
    state: &VariationalState,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<(ModelParams, MStepReport)> {
    m_step_for(Variant::FullDyn, net, state, params, hyper)
}

/// Root-finding constants for each `beta` entry of `params`: one aggregate for
/// a shared `beta`, one per transition step otherwise.
pub fn beta_constants(net: &TemporalNetwork, params: &ModelParams) -> Result<Vec<BetaConstants>> {
    check_inputs(net, params)?;
    if net.n_steps() < 2 {
        return Err(Error::Unsupported("beta needs at least one transition (T >= 1)".into()));
    }
    let dyads = Dyads::new(net, params.rec_lag, None);
    let per_step: Vec<BetaConstants> = (1..dyads.n_steps())
        .map(|t| {
            let st = &dyads.steps[t];
            BetaConstants {
                c1: st.new_edges + st.removed,
                c2: pair_rate_sum(&params.u_at(t), &params.v_at(t), &params.w_at(t), &st.masked)
                    + params.eta * st.rec_total,
                c3: st.persisted,
            }
        })
        .collect();
    if params.beta.len() == 1 {
        let total = per_step.iter().fold(BetaConstants::default(), |acc, c| BetaConstants {
            c1: acc.c1 + c.c1,
            c2: acc.c2 + c.c2,
            c3: acc.c3 + c.c3,
        });
        Ok(vec![total])
    } else {
        Ok(per_step)
    }
}

/// Maximizes the objective in `beta` with everything else fixed.
pub fn update_beta(net: &TemporalNetwork, params: &ModelParams) -> Result<Vec<BetaSolution>> {
    Ok(beta_constants(net, params)?.into_iter().map(solve_beta).collect())
}

fn check_inputs(net: &TemporalNetwork, params: &ModelParams) -> Result<()> {
    params.validate()?;
    params.check_compatible(net.n_nodes(), net.n_steps())
}

fn check_state(dyads: &Dyads, state: &VariationalState, params: &ModelParams) -> Result<()> {
    if state.len() != dyads.events.len() || state.n_communities() != params.n_communities() {
        return Err(Error::DimensionMismatch(
            "variational state does not belong to this network and K".into(),
        ));
    }
    Ok(())
}

/// Random starting point for restart `restart`: memberships uniform on
/// `(0, 1)`, affinity biased towards the diagonal, `eta` uniform on `(0, 1)`
/// and `beta` uniform on `(0.05, 0.95)`.
pub fn initialize(
    n_nodes: usize,
    n_steps: usize,
    variant: Variant,
    rec_lag: RecLag,
    hyper: &Hyperparams,
    restart: usize,
) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    rng.set_stream(restart as u64);
    let k = hyper.k;
    let mut p = ModelParams::zeros(variant, rec_lag, n_nodes, k, n_steps);
    p.u.iter_mut().for_each(|x| *x = rng.random::<f64>());
    p.v.iter_mut().for_each(|x| *x = rng.random::<f64>());
    let scale = 0.1 * 2.0 * k as f64 / n_nodes.max(1) as f64;
    let al = p.affinity_layers();
    for l in 0..al {
        for a in 0..k {
            for b in 0..k {
                let draw = rng.random::<f64>();
                p.w[[l, a, b]] = if a == b { scale * draw } else { 0.1 * scale * draw };
            }
        }
    }
    let eta_draw = rng.random::<f64>();
    p.eta = if hyper.eta_zero { 0.0 } else { eta_draw };
    p.beta.iter_mut().for_each(|b| *b = rng.random_range(0.05..0.95));
    p
}

struct RunOutcome {
    params: ModelParams,
    trace: Vec<f64>,
    n_iterations: usize,
    converged: bool,
    warnings: FitWarnings,
}

fn run(dyads: &Dyads, hyper: &Hyperparams, init: ModelParams) -> Option<RunOutcome> {
    let mut params = init;
    let mut warnings = FitWarnings::default();
    let (mut state, ll) = estep::e_step_on(dyads, &params);
    let mut objective = ll + log_prior(&params, hyper);
    if !objective.is_finite() {
        return None;
    }
    let mut trace = vec![objective];
    let mut last_check = objective;
    let mut streak = 0;
    let mut converged = false;
    let mut n_iterations = 0;

    for it in 1..=hyper.max_iter {
        let (next, report) = mstep::m_step_on(dyads, &state, &params, hyper);
        warnings.zero_denominators += report.zero_denominators;
        warnings.beta_floored |= report.beta_floored;
        params = next;
        let (next_state, ll) = estep::e_step_on(dyads, &params);
        state = next_state;
        warnings.degenerate_events += state.degenerate_events();
        objective = ll + log_prior(&params, hyper);
        n_iterations = it;
        if !objective.is_finite() {
            warn!("non-finite objective at iteration {it}; restart aborted");
            return None;
        }
        trace.push(objective);

        if it % hyper.check_every == 0 {
            let rel = (objective - last_check).abs() / last_check.abs().max(f64::MIN_POSITIVE);
            if rel < hyper.tolerance {
                streak += 1;
            } else {
                streak = 0;
            }
            last_check = objective;
            if streak >= hyper.decision_window {
                converged = true;
                break;
            }
        }
    }
    Some(RunOutcome {
        params,
        trace,
        n_iterations,
        converged,
        warnings,
    })
}

fn validate_fit_inputs(net: &TemporalNetwork, hyper: &Hyperparams) -> Result<()> {
    hyper.validate()?;
    if net.n_nodes() < 2 {
        return Err(Error::Validation(format!(
            "fitting needs at least 2 nodes, network has {}",
            net.n_nodes()
        )));
    }
    Ok(())
}

/// Fits `variant` to `net`, keeping the restart with the highest final
/// objective (ties go to the lowest restart index).
pub fn fit(net: &TemporalNetwork, hyper: &Hyperparams, variant: Variant, rec_lag: RecLag) -> Result<FitResult> {
    fit_masked(net, hyper, variant, rec_lag, None)
}

/// Like [`fit`], with the terms in `mask` treated as unobserved.
pub fn fit_masked(
    net: &TemporalNetwork,
    hyper: &Hyperparams,
    variant: Variant,
    rec_lag: RecLag,
    mask: Option<&TermMask>,
) -> Result<FitResult> {
    validate_fit_inputs(net, hyper)?;
    let dyads = Dyads::new(net, rec_lag, mask);
    let outcomes: Vec<Option<RunOutcome>> = (0..hyper.n_restarts)
        .into_par_iter()
        .map(|r| {
            let init = initialize(net.n_nodes(), net.n_steps(), variant, rec_lag, hyper, r);
            run(&dyads, hyper, init)
        })
        .collect();
    select(outcomes, hyper.seed)
}

/// Runs EM once from the given starting point.
pub fn fit_from(net: &TemporalNetwork, hyper: &Hyperparams, init: ModelParams) -> Result<FitResult> {
    validate_fit_inputs(net, hyper)?;
    check_inputs(net, &init)?;
    if init.n_communities() != hyper.k {
        return Err(Error::DimensionMismatch(format!(
            "initial parameters have K = {}, hyperparameters say {}",
            init.n_communities(),
            hyper.k
        )));
    }
    let dyads = Dyads::new(net, init.rec_lag, None);
    select(vec![run(&dyads, hyper, init)], hyper.seed)
}

fn select(outcomes: Vec<Option<RunOutcome>>, seed: u64) -> Result<FitResult> {
    let restarts: Vec<RestartSummary> = outcomes
        .iter()
        .enumerate()
        .map(|(r, o)| RestartSummary {
            restart: r,
            final_objective: o.as_ref().map(|o| *o.trace.last().unwrap()),
            n_iterations: o.as_ref().map_or(0, |o| o.n_iterations),
            converged: o.as_ref().is_some_and(|o| o.converged),
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for s in &restarts {
        if let Some(obj) = s.final_objective {
            if best.is_none_or(|(_, b)| obj > b) {
                best = Some((s.restart, obj));
            }
        }
    }
    let (winner, _) = best.ok_or(Error::NoFiniteRestart)?;
    let outcome = outcomes
        .into_iter()
        .nth(winner)
        .flatten()
        .expect("winner has an outcome");
    if outcome.warnings.beta_floored {
        warn!("no edge appeared or disappeared; beta set to its floor");
    }
    if outcome.warnings.zero_denominators > 0 {
        warn!(
            "{} updates had a zero denominator and were set to 0",
            outcome.warnings.zero_denominators
        );
    }
    debug!(
        "restart {winner} wins after {} iterations (converged: {})",
        outcome.n_iterations, outcome.converged
    );
    Ok(FitResult {
        params: outcome.params,
        objective_trace: outcome.trace,
        n_iterations: outcome.n_iterations,
        converged: outcome.converged,
        restart: winner,
        seed,
        warnings: outcome.warnings,
        restarts,
    })
}

/// Reorders node rows of `u` and `v` so that node `i` becomes `perm[i]`.
pub fn permute_memberships(params: &ModelParams, perm: &[usize]) -> ModelParams {
    let mut out = params.clone();
    let relabel = |src: &Array3<f64>, dst: &mut Array3<f64>| {
        let (layers, n, k) = src.dim();
        for l in 0..layers {
            for i in 0..n {
                for a in 0..k {
                    dst[[l, perm[i], a]] = src[[l, i, a]];
                }
            }
        }
    };
    relabel(&params.u, &mut out.u);
    relabel(&params.v, &mut out.v);
    out
}
