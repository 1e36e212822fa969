//! Closed-form maximization of the bound, one parameter block at a time.
//!
//! Blocks are updated in the order `u`, `v`, `w`, `eta`, `beta`; each update
//! uses the latest value of the blocks before it. Every update is the exact
//! maximizer of the bound in its block, so the bound never decreases.

use ndarray::{Array2, Array3, ArrayView2, Axis};

use super::beta::{solve_beta, BetaConstants};
use super::estep::VariationalState;
use crate::params::{Hyperparams, ModelParams, Variant};
use crate::terms::{exclusive_sums, pair_rate_sum, Dyads};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MStepReport {
    /// Updates whose denominator vanished; the parameter was set to 0.
    pub zero_denominators: usize,
    /// `beta` (or some `beta(t)`) hit the floor because no transition happened.
    pub beta_floored: bool,
}

struct Numerators {
    u: Array3<f64>,
    v: Array3<f64>,
    w: Array3<f64>,
    eta: f64,
}

fn layer(t: usize, layers: usize) -> usize {
    if layers == 1 {
        0
    } else {
        t
    }
}

fn numerators(dyads: &Dyads, state: &VariationalState, params: &ModelParams) -> Numerators {
    let (ml, n, k) = params.u.dim();
    let al = params.affinity_layers();
    let mut nu = Array3::zeros((ml, n, k));
    let mut nv = Array3::zeros((ml, n, k));
    let mut nw = Array3::zeros((al, k, k));
    let mut eta = 0.0;
    for (idx, e) in dyads.events.iter().enumerate() {
        let (m, l) = (layer(e.t, ml), layer(e.t, al));
        let r1 = state.rho1(idx) * e.weight;
        eta += (1.0 - state.rho1(idx)) * e.weight;
        let row = state.phi(idx);
        for a in 0..k {
            for b in 0..k {
                let c = r1 * row[a * k + b];
                nu[[m, e.i, a]] += c;
                nv[[m, e.j, b]] += c;
                nw[[l, a, b]] += c;
            }
        }
    }
    Numerators { u: nu, v: nv, w: nw, eta }
}

/// Steps whose terms involve membership layer `m`.
fn steps_of_layer(m: usize, layers: usize, n_steps: usize) -> std::ops::Range<usize> {
    if layers == 1 {
        0..n_steps
    } else {
        m..m + 1
    }
}

fn ratio(num: f64, den: f64, zero: &mut usize) -> f64 {
    if den > 0.0 {
        (num / den).max(0.0)
    } else {
        *zero += 1;
        0.0
    }
}

pub(crate) fn m_step_on(
    dyads: &Dyads,
    state: &VariationalState,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> (ModelParams, MStepReport) {
    let mut report = MStepReport::default();
    let mut next = params.clone();
    let num = numerators(dyads, state, params);
    let (ml, n, k) = params.u.dim();
    let n_steps = dyads.n_steps();
    let (prior_a, prior_b) = if params.variant.has_membership_prior() {
        (hyper.a - 1.0, hyper.b)
    } else {
        (0.0, 0.0)
    };

    // u
    for m in 0..ml {
        let v = params.v.index_axis(Axis(0), m).to_owned();
        let others = exclusive_sums(&v.view());
        let mut den = Array2::from_elem((n, k), prior_b);
        let mut weighted_w = Array2::<f64>::zeros((k, k));
        for t in steps_of_layer(m, ml, n_steps) {
            let bh = params.beta_hat(t);
            let w = params.w_at(t);
            weighted_w.scaled_add(bh, &w);
            for &(i, j, _) in &dyads.steps[t].masked {
                for a in 0..k {
                    let s: f64 = (0..k).map(|b| v[[j, b]] * w[[a, b]]).sum();
                    den[[i, a]] -= bh * s;
                }
            }
        }
        for i in 0..n {
            for a in 0..k {
                let s: f64 = (0..k).map(|b| others[[i, b]] * weighted_w[[a, b]]).sum();
                den[[i, a]] += s;
                next.u[[m, i, a]] = ratio(prior_a + num.u[[m, i, a]], den[[i, a]], &mut report.zero_denominators);
            }
        }
    }

    // v, with the new u
    for m in 0..ml {
        let u = next.u.index_axis(Axis(0), m).to_owned();
        let others = exclusive_sums(&u.view());
        let mut den = Array2::from_elem((n, k), prior_b);
        let mut weighted_w = Array2::<f64>::zeros((k, k));
        for t in steps_of_layer(m, ml, n_steps) {
            let bh = params.beta_hat(t);
            let w = params.w_at(t);
            weighted_w.scaled_add(bh, &w);
            for &(i, j, _) in &dyads.steps[t].masked {
                for b in 0..k {
                    let s: f64 = (0..k).map(|a| u[[i, a]] * w[[a, b]]).sum();
                    den[[j, b]] -= bh * s;
                }
            }
        }
        for j in 0..n {
            for b in 0..k {
                let s: f64 = (0..k).map(|a| others[[j, a]] * weighted_w[[a, b]]).sum();
                den[[j, b]] += s;
                next.v[[m, j, b]] = ratio(prior_a + num.v[[m, j, b]], den[[j, b]], &mut report.zero_denominators);
            }
        }
    }

    // w, with the new u and v
    let al = params.affinity_layers();
    for l in 0..al {
        let mut den = Array2::<f64>::zeros((k, k));
        for t in steps_of_layer(l, al, n_steps) {
            let bh = params.beta_hat(t);
            let (u, v) = (next.u_at(t), next.v_at(t));
            den.scaled_add(bh, &pair_products(&u, &v, &dyads.steps[t].masked));
        }
        for a in 0..k {
            for b in 0..k {
                next.w[[l, a, b]] = ratio(num.w[[l, a, b]], den[[a, b]], &mut report.zero_denominators);
            }
        }
    }

    // eta
    if hyper.eta_zero {
        next.eta = 0.0;
    } else {
        let den: f64 = (1..n_steps)
            .map(|t| params.beta_hat(t) * dyads.steps[t].rec_total)
            .sum();
        next.eta = if den > 0.0 {
            num.eta / den
        } else {
            if num.eta > 0.0 || n_steps > 1 {
                report.zero_denominators += 1;
            }
            0.0
        };
    }

    // beta
    if n_steps > 1 {
        let constants = |t: usize| {
            let st = &dyads.steps[t];
            let rates = pair_rate_sum(&next.u_at(t), &next.v_at(t), &next.w_at(t), &st.masked);
            BetaConstants {
                c1: st.new_edges + st.removed,
                c2: rates + next.eta * st.rec_total,
                c3: st.persisted,
            }
        };
        if next.beta.len() == 1 {
            let total = (1..n_steps).map(constants).fold(BetaConstants::default(), |acc, c| BetaConstants {
                c1: acc.c1 + c.c1,
                c2: acc.c2 + c.c2,
                c3: acc.c3 + c.c3,
            });
            let sol = solve_beta(total);
            report.beta_floored |= sol.floored;
            next.beta = vec![sol.beta];
        } else {
            let solved: Vec<_> = (1..n_steps).map(|t| solve_beta(constants(t))).collect();
            for (t, sol) in solved.into_iter().enumerate() {
                report.beta_floored |= sol.floored;
                next.beta[t] = sol.beta;
            }
        }
    } else {
        let sol = solve_beta(BetaConstants::default());
        report.beta_floored = true;
        next.beta.iter_mut().for_each(|b| *b = sol.beta);
    }

    debug_assert_eq!(next.variant, params.variant);
    if matches!(params.variant, Variant::WStatic) {
        debug_assert_eq!(next.w.dim().0, 1);
    }
    (next, report)
}

/// `sum_{i != j, unmasked} u_ik v_jq` for every `(k, q)`.
fn pair_products(u: &ArrayView2<f64>, v: &ArrayView2<f64>, masked: &[(usize, usize, f64)]) -> Array2<f64> {
    let k = u.ncols();
    let others = exclusive_sums(v);
    let mut out = Array2::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            let all: f64 = (0..u.nrows()).map(|i| u[[i, a]] * others[[i, b]]).sum();
            let held: f64 = masked.iter().map(|&(i, j, _)| u[[i, a]] * v[[j, b]]).sum();
            out[[a, b]] = all - held;
        }
    }
    out
}
