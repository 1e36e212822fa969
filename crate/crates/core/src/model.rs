//! Pure functions of the model: edge rates, the one-step transition kernel,
//! forecast scores, the exact log-likelihood and the regularized objective.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::TemporalNetwork;
use crate::params::{Hyperparams, ModelParams};
use crate::terms::{pair_rate_sum, rate, Dyads, TermMask};

/// Smallest argument passed to a logarithm anywhere in the objective.
pub const LOG_FLOOR: f64 = 1e-12;

#[inline]
pub(crate) fn ln_floor(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

/// Probabilities of the four one-step transitions of a dyad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionProbs {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

/// Transition kernel for a dyad with community rate `lambda0`, reciprocity
/// coefficient `eta`, reciprocal indicator `a_rec` and removal probability `beta`.
pub fn transition_probs(lambda0: f64, eta: f64, a_rec: f64, beta: f64) -> TransitionProbs {
    let m = lambda0 + eta * a_rec;
    let stay_empty = (-beta * m).exp();
    TransitionProbs {
        p00: stay_empty,
        p01: beta * m * stay_empty,
        p10: beta * stay_empty,
        p11: (1.0 - beta) * stay_empty,
    }
}

fn check_node(params: &ModelParams, i: usize) -> Result<()> {
    if i >= params.n_nodes() {
        return Err(Error::Validation(format!(
            "node {i} out of range (parameters have {} nodes)",
            params.n_nodes()
        )));
    }
    Ok(())
}

/// Community part of the edge rate, `lambda_ij(t) = sum_{k,q} u_ik v_jq w_kq(t)`.
///
/// Time-varying blocks are read at layer `t`, or at their last layer when `t`
/// lies beyond the fitted window.
pub fn lambda0(params: &ModelParams, i: usize, j: usize, t: usize) -> Result<f64> {
    check_node(params, i)?;
    check_node(params, j)?;
    Ok(rate(&params.u_at(t), &params.v_at(t), &params.w_at(t), i, j))
}

/// `lambda_ij(t)` for every pair, with a zero diagonal.
pub fn rate_matrix(params: &ModelParams, t: usize) -> Array2<f64> {
    let (u, v, w) = (params.u_at(t), params.v_at(t), params.w_at(t));
    let mut lambda = u.dot(&w).dot(&v.t());
    lambda.diag_mut().fill(0.0);
    lambda
}

/// Forecast score of `A_ij(t)` given the previous snapshot: `1 - beta` for an
/// existing edge, `beta * (lambda + eta * A_ji(t-1))` clamped to `[0, 1]`
/// otherwise.
pub fn expected_edge(
    params: &ModelParams,
    prev_a_ij: bool,
    prev_a_ji: f64,
    i: usize,
    j: usize,
    t: usize,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::Unsupported(
            "expected edge needs a previous snapshot (t >= 1)".into(),
        ));
    }
    let beta = params.beta_at(t);
    if prev_a_ij {
        return Ok(1.0 - beta);
    }
    let m = lambda0(params, i, j, t)? + params.eta * prev_a_ji;
    Ok((beta * m).clamp(0.0, 1.0))
}

/// Exact log-probability of the observed snapshots: Poisson terms for `A(0)`
/// followed by one transition term per pair and step.
pub fn log_likelihood(net: &TemporalNetwork, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    params.check_compatible(net.n_nodes(), net.n_steps())?;
    let dyads = Dyads::new(net, params.rec_lag, None);
    Ok(log_likelihood_of(&dyads, params))
}

/// Log-likelihood with the terms in `mask` left out.
pub fn masked_log_likelihood(net: &TemporalNetwork, params: &ModelParams, mask: &TermMask) -> Result<f64> {
    params.validate()?;
    params.check_compatible(net.n_nodes(), net.n_steps())?;
    let dyads = Dyads::new(net, params.rec_lag, Some(mask));
    Ok(log_likelihood_of(&dyads, params))
}

pub(crate) fn log_likelihood_of(dyads: &Dyads, params: &ModelParams) -> f64 {
    let mut ll = dense_log_terms(dyads, params);
    for t in 0..dyads.n_steps() {
        let (u, v, w) = (params.u_at(t), params.v_at(t), params.w_at(t));
        for e in dyads.step_events(t) {
            let m = rate(&u, &v, &w, e.i, e.j) + params.eta * e.rec;
            ll += e.weight * ln_floor(m);
        }
    }
    ll
}

/// Every log-likelihood term except `A_hat * ln(lambda + eta * A_rec)` of the
/// events: rate sums over all pairs, `beta` terms and the factorials.
pub(crate) fn dense_log_terms(dyads: &Dyads, params: &ModelParams) -> f64 {
    let mut ll = -dyads.log_factorial0;
    for t in 0..dyads.n_steps() {
        let st = &dyads.steps[t];
        let beta_hat = params.beta_hat(t);
        let rates = pair_rate_sum(&params.u_at(t), &params.v_at(t), &params.w_at(t), &st.masked);
        ll -= beta_hat * (rates + params.eta * st.rec_total);
        if t > 0 {
            let (new, removed, persisted) = dyads.transition_counts(t);
            ll += (new + removed) * ln_floor(beta_hat) + persisted * ln_floor(1.0 - beta_hat);
        }
    }
    ll
}

/// Gamma-prior log terms `(a-1) sum ln u - b sum u` (and likewise for `v`),
/// or 0 for variants without membership priors.
pub fn log_prior(params: &ModelParams, hyper: &Hyperparams) -> f64 {
    if !params.variant.has_membership_prior() {
        return 0.0;
    }
    let term = |x: f64| (hyper.a - 1.0) * ln_floor(x) - hyper.b * x;
    let shape_term = |x: f64| if hyper.a == 1.0 { -hyper.b * x } else { term(x) };
    params.u.iter().chain(params.v.iter()).map(|&x| shape_term(x)).sum()
}

/// Log-likelihood plus membership priors: the quantity EM maximizes.
pub fn regularized_objective(net: &TemporalNetwork, params: &ModelParams, hyper: &Hyperparams) -> Result<f64> {
    Ok(log_likelihood(net, params)? + log_prior(params, hyper))
}
