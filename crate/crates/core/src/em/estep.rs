//! Variational responsibilities and the Jensen lower bound.

use crate::model::{dense_log_terms, ln_floor, log_prior};
use crate::params::{Hyperparams, ModelParams};
use crate::terms::Dyads;

/// Responsibilities for every event `(t, i, j)` with `A_hat_ij(t) > 0`.
///
/// `rho1` is the share of the event attributed to community structure and
/// `1 - rho1` the share attributed to reciprocity; `phi` splits the community
/// share over the `K x K` community pairs (row-major, `k` then `q`).
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    k: usize,
    keys: Vec<(usize, usize, usize)>,
    rho1: Vec<f64>,
    phi: Vec<f64>,
    degenerate: usize,
}

impl VariationalState {
    pub fn len(&self) -> usize {
        self.rho1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho1.is_empty()
    }

    pub fn n_communities(&self) -> usize {
        self.k
    }

    /// `(t, i, j)` of event `e`.
    pub fn event(&self, e: usize) -> (usize, usize, usize) {
        self.keys[e]
    }

    pub fn rho1(&self, e: usize) -> f64 {
        self.rho1[e]
    }

    pub fn rho2(&self, e: usize) -> f64 {
        1.0 - self.rho1[e]
    }

    pub fn phi(&self, e: usize) -> &[f64] {
        &self.phi[e * self.k * self.k..(e + 1) * self.k * self.k]
    }

    pub fn phi_mut(&mut self, e: usize) -> &mut [f64] {
        let kk = self.k * self.k;
        &mut self.phi[e * kk..(e + 1) * kk]
    }

    pub fn set_rho1(&mut self, e: usize, rho1: f64) {
        self.rho1[e] = rho1;
    }

    /// Events whose total rate was zero; they received `rho1 = 1` and a
    /// uniform `phi`.
    pub fn degenerate_events(&self) -> usize {
        self.degenerate
    }

    /// Looks up the event index of `(t, i, j)`.
    pub fn find(&self, t: usize, i: usize, j: usize) -> Option<usize> {
        self.keys.binary_search(&(t, i, j)).ok()
    }
}

/// Computes the responsibilities that make the bound tight at `params`, and
/// returns them together with the exact log-likelihood at `params`.
pub(crate) fn e_step_on(dyads: &Dyads, params: &ModelParams) -> (VariationalState, f64) {
    let k = params.n_communities();
    let kk = k * k;
    let n_events = dyads.events.len();
    let mut keys = Vec::with_capacity(n_events);
    let mut rho1 = Vec::with_capacity(n_events);
    let mut phi = vec![0.0; n_events * kk];
    let mut degenerate = 0;
    let mut event_ll = 0.0;

    for t in 0..dyads.n_steps() {
        let (u, v, w) = (params.u_at(t), params.v_at(t), params.w_at(t));
        let base = dyads.event_start[t];
        for (offset, e) in dyads.step_events(t).iter().enumerate() {
            let row = &mut phi[(base + offset) * kk..(base + offset + 1) * kk];
            let mut lambda = 0.0;
            for a in 0..k {
                let ua = u[[e.i, a]];
                for b in 0..k {
                    let x = ua * v[[e.j, b]] * w[[a, b]];
                    row[a * k + b] = x;
                    lambda += x;
                }
            }
            let rec = params.eta * e.rec;
            let total = lambda + rec;
            event_ll += e.weight * ln_floor(total);
            if total > 0.0 {
                rho1.push(lambda / total);
            } else {
                rho1.push(1.0);
                degenerate += 1;
            }
            if lambda > 0.0 {
                row.iter_mut().for_each(|x| *x /= lambda);
            } else {
                row.fill(1.0 / kk as f64);
            }
            keys.push((t, e.i, e.j));
        }
    }

    let ll = dense_log_terms(dyads, params) + event_ll;
    (
        VariationalState {
            k,
            keys,
            rho1,
            phi,
            degenerate,
        },
        ll,
    )
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Jensen lower bound of the regularized objective for responsibilities
/// `state` and parameters `params`.
pub(crate) fn lower_bound_on(dyads: &Dyads, params: &ModelParams, state: &VariationalState, hyper: &Hyperparams) -> f64 {
    let k = params.n_communities();
    let mut bound = dense_log_terms(dyads, params) + log_prior(params, hyper);
    for t in 0..dyads.n_steps() {
        let (u, v, w) = (params.u_at(t), params.v_at(t), params.w_at(t));
        let base = dyads.event_start[t];
        for (offset, e) in dyads.step_events(t).iter().enumerate() {
            let idx = base + offset;
            let r1 = state.rho1[idx];
            let r2 = 1.0 - r1;
            let mut term = -xlogx(r1) - xlogx(r2);
            if r1 > 0.0 {
                let row = state.phi(idx);
                let mut community = 0.0;
                for a in 0..k {
                    for b in 0..k {
                        let f = row[a * k + b];
                        if f > 0.0 {
                            let log_rate = ln_floor(u[[e.i, a]]) + ln_floor(v[[e.j, b]]) + ln_floor(w[[a, b]]);
                            community += f * log_rate - xlogx(f);
                        }
                    }
                }
                term += r1 * community;
            }
            if r2 > 0.0 {
                term += r2 * ln_floor(params.eta * e.rec);
            }
            bound += e.weight * term;
        }
    }
    bound
}
