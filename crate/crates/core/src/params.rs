//! Model parameters, hyperparameters, and their JSON document form.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which parameter blocks vary in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Static memberships, one affinity matrix per snapshot, static `beta`.
    #[serde(rename = "w-dyn")]
    WDyn,
    /// Every parameter static.
    #[serde(rename = "w-static")]
    WStatic,
    /// Memberships, affinity and `beta` per snapshot; `eta` stays global.
    #[serde(rename = "full-dyn")]
    FullDyn,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::WDyn, Variant::WStatic, Variant::FullDyn];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::WDyn => "w-dyn",
            Variant::WStatic => "w-static",
            Variant::FullDyn => "full-dyn",
        }
    }

    /// Whether the Gamma priors on `u` and `v` enter the objective.
    pub fn has_membership_prior(self) -> bool {
        !matches!(self, Variant::FullDyn)
    }

    fn membership_layers(self, n_steps: usize) -> usize {
        match self {
            Variant::FullDyn => n_steps,
            _ => 1,
        }
    }

    fn affinity_layers(self, n_steps: usize) -> usize {
        match self {
            Variant::WStatic => 1,
            _ => n_steps,
        }
    }

    fn beta_len(self, n_steps: usize) -> usize {
        match self {
            Variant::FullDyn => n_steps.saturating_sub(1).max(1),
            _ => 1,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w-dyn" => Ok(Variant::WDyn),
            "w-static" => Ok(Variant::WStatic),
            "full-dyn" => Ok(Variant::FullDyn),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

/// Time at which the reciprocal edge `j -> i` boosts the rate of `i -> j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RecLag {
    /// `A_ji(t)`
    Same,
    /// `A_ji(t-1)`
    #[default]
    Previous,
}

impl RecLag {
    pub fn from_lag(lag: u8) -> Result<Self> {
        match lag {
            0 => Ok(RecLag::Same),
            1 => Ok(RecLag::Previous),
            other => Err(Error::InvalidConfig(format!("rec_lag must be 0 or 1, got {other}"))),
        }
    }

    pub fn lag(self) -> u8 {
        match self {
            RecLag::Same => 0,
            RecLag::Previous => 1,
        }
    }
}

impl Serialize for RecLag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.lag())
    }
}

impl<'de> Deserialize<'de> for RecLag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lag = u8::deserialize(d)?;
        RecLag::from_lag(lag).map_err(serde::de::Error::custom)
    }
}

/// Latent state `{u, v, w, eta, beta}`.
///
/// `u` and `v` have shape `(layers, N, K)` and `w` has shape `(layers, K, K)`.
/// A block with a single layer is static. Time-indexed lookups past the last
/// layer return the last layer, which is what forecasting one step beyond the
/// training window needs.
///
/// `beta` holds the removal probability for transitions `t = 1..`; a single
/// entry means it is shared by every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsDocument", into = "ParamsDocument")]
pub struct ModelParams {
    pub variant: Variant,
    pub rec_lag: RecLag,
    pub u: Array3<f64>,
    pub v: Array3<f64>,
    pub w: Array3<f64>,
    pub eta: f64,
    pub beta: Vec<f64>,
}

impl ModelParams {
    /// All-zero parameters with the shapes `variant` needs for `n_steps` snapshots.
    pub fn zeros(variant: Variant, rec_lag: RecLag, n_nodes: usize, k: usize, n_steps: usize) -> Self {
        let ml = variant.membership_layers(n_steps);
        let al = variant.affinity_layers(n_steps);
        Self {
            variant,
            rec_lag,
            u: Array3::zeros((ml, n_nodes, k)),
            v: Array3::zeros((ml, n_nodes, k)),
            w: Array3::zeros((al, k, k)),
            eta: 0.0,
            beta: vec![0.0; variant.beta_len(n_steps)],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.u.shape()[1]
    }

    pub fn n_communities(&self) -> usize {
        self.u.shape()[2]
    }

    pub fn membership_layers(&self) -> usize {
        self.u.shape()[0]
    }

    pub fn affinity_layers(&self) -> usize {
        self.w.shape()[0]
    }

    /// Number of snapshots the parameters were shaped for.
    pub fn n_steps(&self) -> usize {
        match self.variant {
            Variant::WStatic => 1,
            Variant::WDyn => self.affinity_layers(),
            Variant::FullDyn => self.membership_layers(),
        }
    }

    fn membership_index(&self, t: usize) -> usize {
        t.min(self.membership_layers() - 1)
    }

    fn affinity_index(&self, t: usize) -> usize {
        t.min(self.affinity_layers() - 1)
    }

    pub fn u_at(&self, t: usize) -> ArrayView2<'_, f64> {
        self.u.index_axis(ndarray::Axis(0), self.membership_index(t))
    }

    pub fn v_at(&self, t: usize) -> ArrayView2<'_, f64> {
        self.v.index_axis(ndarray::Axis(0), self.membership_index(t))
    }

    pub fn w_at(&self, t: usize) -> ArrayView2<'_, f64> {
        self.w.index_axis(ndarray::Axis(0), self.affinity_index(t))
    }

    /// `beta` for the transition into step `t >= 1`.
    pub fn beta_at(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        let idx = t.max(1).min(self.beta.len()) - 1;
        self.beta[idx]
    }

    /// `beta_hat(t)`: 1 at the initial snapshot, `beta(t)` afterwards.
    pub fn beta_hat(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.beta_at(t)
        }
    }

    /// Continuous-time removal rate `mu = -ln(1 - beta)` for step `t >= 1`.
    pub fn mu_at(&self, t: usize) -> Result<f64> {
        let beta = self.beta_at(t);
        if beta >= 1.0 {
            return Err(Error::Validation("mu is infinite when beta = 1".into()));
        }
        Ok(-(1.0 - beta).ln())
    }

    pub fn validate(&self) -> Result<()> {
        let (ml, n, k) = self.u.dim();
        if self.v.dim() != (ml, n, k) {
            return Err(Error::DimensionMismatch(format!(
                "u has shape {:?} but v has shape {:?}",
                self.u.shape(),
                self.v.shape()
            )));
        }
        let (al, k1, k2) = self.w.dim();
        if k1 != k || k2 != k {
            return Err(Error::DimensionMismatch(format!(
                "w has shape {:?} but K = {k}",
                self.w.shape()
            )));
        }
        if k == 0 || ml == 0 || al == 0 {
            return Err(Error::Validation("empty parameter block".into()));
        }
        let layers_ok = match self.variant {
            Variant::WStatic => ml == 1 && al == 1 && self.beta.len() == 1,
            Variant::WDyn => ml == 1 && self.beta.len() == 1,
            Variant::FullDyn => ml == al && self.beta.len() == ml.saturating_sub(1).max(1),
        };
        if !layers_ok {
            return Err(Error::DimensionMismatch(format!(
                "layer counts (u: {ml}, w: {al}, beta: {}) inconsistent with variant {}",
                self.beta.len(),
                self.variant
            )));
        }
        let nonneg = |a: &Array3<f64>| a.iter().all(|&x| x.is_finite() && x >= 0.0);
        if !nonneg(&self.u) || !nonneg(&self.v) || !nonneg(&self.w) {
            return Err(Error::Validation("u, v, w must be finite and non-negative".into()));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::Validation(format!("eta must be >= 0, got {}", self.eta)));
        }
        if let Some(b) = self.beta.iter().find(|&&b| !(b > 0.0 && b <= 1.0)) {
            return Err(Error::Validation(format!("beta must lie in (0, 1], got {b}")));
        }
        Ok(())
    }

    /// Checks that the parameters can score a network with `n_nodes` nodes and
    /// `n_steps` snapshots.
    pub fn check_compatible(&self, n_nodes: usize, n_steps: usize) -> Result<()> {
        if self.n_nodes() != n_nodes {
            return Err(Error::DimensionMismatch(format!(
                "parameters have {} nodes, network has {n_nodes}",
                self.n_nodes()
            )));
        }
        let expected = match self.variant {
            Variant::WStatic => None,
            Variant::WDyn => Some(self.affinity_layers()),
            Variant::FullDyn => Some(self.membership_layers()),
        };
        if let Some(layers) = expected {
            if layers != n_steps {
                return Err(Error::DimensionMismatch(format!(
                    "parameters have {layers} time layers, network has {n_steps} snapshots"
                )));
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> ParamsDocument {
        ParamsDocument {
            variant: self.variant,
            rec_lag: self.rec_lag,
            n_nodes: self.n_nodes(),
            n_communities: self.n_communities(),
            eta: self.eta,
            beta: self.beta.clone(),
            u: DenseArray::from_array(&self.u),
            v: DenseArray::from_array(&self.v),
            w: DenseArray::from_array(&self.w),
        }
    }

    pub fn from_document(doc: ParamsDocument) -> Result<Self> {
        let params = Self {
            variant: doc.variant,
            rec_lag: doc.rec_lag,
            u: doc.u.into_array()?,
            v: doc.v.into_array()?,
            w: doc.w.into_array()?,
            eta: doc.eta,
            beta: doc.beta,
        };
        if params.n_nodes() != doc.n_nodes || params.n_communities() != doc.n_communities {
            return Err(Error::DimensionMismatch(
                "declared n_nodes / n_communities disagree with array shapes".into(),
            ));
        }
        params.validate()?;
        Ok(params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(s)?)
    }
}

impl TryFrom<ParamsDocument> for ModelParams {
    type Error = Error;

    fn try_from(doc: ParamsDocument) -> Result<Self> {
        Self::from_document(doc)
    }
}

impl From<ModelParams> for ParamsDocument {
    fn from(p: ModelParams) -> Self {
        p.to_document()
    }
}

/// Serialized form of [`ModelParams`]; arrays are row-major with explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub variant: Variant,
    pub rec_lag: RecLag,
    pub n_nodes: usize,
    pub n_communities: usize,
    pub eta: f64,
    pub beta: Vec<f64>,
    pub u: DenseArray,
    pub v: DenseArray,
    pub w: DenseArray,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseArray {
    pub shape: [usize; 3],
    pub data: Vec<f64>,
}

impl DenseArray {
    fn from_array(a: &Array3<f64>) -> Self {
        let (x, y, z) = a.dim();
        Self {
            shape: [x, y, z],
            data: a.iter().copied().collect(),
        }
    }

    fn into_array(self) -> Result<Array3<f64>> {
        let [x, y, z] = self.shape;
        Array3::from_shape_vec((x, y, z), self.data)
            .map_err(|e| Error::DimensionMismatch(format!("array payload: {e}")))
    }
}

/// Prior, community count and EM control settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Number of communities `K`.
    pub k: usize,
    /// Gamma prior shape on memberships, `>= 1`.
    pub a: f64,
    /// Gamma prior rate on memberships, `> 0`.
    pub b: f64,
    /// Relative objective change regarded as converged.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Consecutive converged checks needed to stop.
    pub decision_window: usize,
    /// Iterations between convergence checks.
    pub check_every: usize,
    pub n_restarts: usize,
    pub seed: u64,
    /// Fix `eta = 0` (community-only ablation).
    pub eta_zero: bool,
}

impl Hyperparams {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            a: 1.5,
            b: 10.0,
            tolerance: 1e-4,
            max_iter: 500,
            decision_window: 10,
            check_every: 10,
            n_restarts: 5,
            seed: 0,
            eta_zero: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if !(self.a >= 1.0) {
            return Err(Error::InvalidConfig(format!("prior shape a must be >= 1, got {}", self.a)));
        }
        if !(self.b > 0.0) {
            return Err(Error::InvalidConfig(format!("prior rate b must be > 0, got {}", self.b)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be > 0".into()));
        }
        if self.max_iter == 0 || self.n_restarts == 0 || self.check_every == 0 || self.decision_window == 0 {
            return Err(Error::InvalidConfig(
                "max_iter, n_restarts, check_every and decision_window must be >= 1".into(),
            ));
        }
        Ok(())
    }
}
