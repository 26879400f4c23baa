//! Hyperparameter spaces and seeded random-search config sampling.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeding::{stage_rng, sub_seed, Domain};

/// One hyperparameter value. Floats are compared and hashed by their exact
/// bit pattern so configs are deduplicated without epsilon judgment calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Float(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            ParamValue::Text(v) => Some(v),
            _ => None,
        }
    }

    /// Stable textual form used for uniqueness checks and tie-breaking.
    fn canonical(&self) -> String {
        match self {
            ParamValue::Int(v) => format!("i{v}"),
            ParamValue::Float(v) => format!("f{:016x}", v.to_bits()),
            ParamValue::Text(v) => format!("s{v}"),
        }
    }
}

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Svm,
    RandomForest,
    Gbt,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Svm => "svm",
            Family::RandomForest => "random_forest",
            Family::Gbt => "gbt",
        }
    }
}

/// One dimension of a hyperparameter space.
#[derive(Debug, Clone)]
pub enum Dim {
    /// Finite set of values, sampled uniformly.
    Choice(Vec<ParamValue>),
    /// Integer range, both ends inclusive.
    UniformInt { lo: i64, hi: i64 },
    /// Real range, uniform density.
    UniformF { lo: f64, hi: f64 },
    /// Real range, uniform in log space.
    LogUniformF { lo: f64, hi: f64 },
}

impl Dim {
    /// Number of distinct values, if finite.
    fn cardinality(&self) -> Option<u64> {
        match self {
            Dim::Choice(values) => Some(values.len() as u64),
            Dim::UniformInt { lo, hi } => Some((hi - lo + 1) as u64),
            Dim::UniformF { .. } | Dim::LogUniformF { .. } => None,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> ParamValue {
        match self {
            Dim::Choice(values) => values[rng.random_range(0..values.len())].clone(),
            Dim::UniformInt { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
            Dim::UniformF { lo, hi } => ParamValue::Float(rng.random_range(*lo..*hi)),
            Dim::LogUniformF { lo, hi } => {
                let v = rng.random_range(lo.ln()..hi.ln()).exp();
                ParamValue::Float(v)
            }
        }
    }

    /// All values of a finite dimension, in declaration order.
    fn enumerate(&self) -> Option<Vec<ParamValue>> {
        match self {
            Dim::Choice(values) => Some(values.clone()),
            Dim::UniformInt { lo, hi } => Some((*lo..=*hi).map(ParamValue::Int).collect()),
            _ => None,
        }
    }
}

/// A family's searchable hyperparameter space.
#[derive(Debug, Clone)]
pub struct ParamSpace {
    pub family: Family,
    pub dims: BTreeMap<String, Dim>,
}

impl ParamSpace {
    /// Gradient-boosted trees. `scale_pos_weight` is not sampled: it is
    /// computed from the class ratio at fit time.
    pub fn gbt() -> ParamSpace {
        let mut dims = BTreeMap::new();
        dims.insert("max_depth".into(), Dim::UniformInt { lo: 2, hi: 10 });
        dims.insert(
            "learning_rate".into(),
            Dim::LogUniformF { lo: 0.01, hi: 0.3 },
        );
        dims.insert(
            "n_estimators".into(),
            Dim::Choice([50, 100, 200, 300, 500].map(ParamValue::Int).to_vec()),
        );
        dims.insert("subsample".into(), Dim::UniformF { lo: 0.5, hi: 1.0 });
        dims.insert(
            "colsample_bytree".into(),
            Dim::UniformF { lo: 0.5, hi: 1.0 },
        );
        dims.insert(
            "min_child_weight".into(),
            Dim::Choice([1, 3, 5, 10].map(ParamValue::Int).to_vec()),
        );
        dims.insert("gamma".into(), Dim::UniformF { lo: 0.0, hi: 5.0 });
        dims.insert("reg_lambda".into(), Dim::LogUniformF { lo: 0.1, hi: 10.0 });
        ParamSpace {
            family: Family::Gbt,
            dims,
        }
    }

    /// Random forest. Depth 0 means unlimited; bootstrap is always on in
    /// the searched space but remains a parameter so degenerate
    /// single-tree setups can be expressed by hand.
    pub fn random_forest() -> ParamSpace {
        let mut dims = BTreeMap::new();
        dims.insert("n_trees".into(), Dim::UniformInt { lo: 50, hi: 500 });
        let mut depths = vec![ParamValue::Int(0)];
        depths.extend((4..=32).map(ParamValue::Int));
        dims.insert("max_depth".into(), Dim::Choice(depths));
        dims.insert(
            "max_features".into(),
            Dim::Choice(
                ["sqrt", "log2", "all"]
                    .map(|s| ParamValue::Text(s.into()))
                    .to_vec(),
            ),
        );
        dims.insert(
            "min_samples_leaf".into(),
            Dim::Choice([1, 2, 5, 10].map(ParamValue::Int).to_vec()),
        );
        dims.insert("bootstrap".into(), Dim::Choice(vec![ParamValue::Int(1)]));
        ParamSpace {
            family: Family::RandomForest,
            dims,
        }
    }

    /// Linear SVM: only the regularization trade-off is searched.
    pub fn svm() -> ParamSpace {
        let mut dims = BTreeMap::new();
        dims.insert("c".into(), Dim::LogUniformF { lo: 1e-3, hi: 1e3 });
        dims.insert("epochs".into(), Dim::Choice(vec![ParamValue::Int(200)]));
        ParamSpace {
            family: Family::Svm,
            dims,
        }
    }

    /// All three family spaces.
    pub fn all() -> Vec<ParamSpace> {
        vec![ParamSpace::svm(), ParamSpace::random_forest(), ParamSpace::gbt()]
    }

    /// Total distinct configs, if every dimension is finite.
    pub fn cardinality(&self) -> Option<u64> {
        self.dims
            .values()
            .try_fold(1u64, |acc, d| d.cardinality().map(|c| acc.saturating_mul(c)))
    }
}

/// One classifier configuration drawn from a family space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: Family,
    pub params: BTreeMap<String, ParamValue>,
    /// Seed for any randomness the fit itself uses (bootstrap, subsampling).
    pub seed: u64,
}

impl ModelConfig {
    /// Canonical identity string: family plus every parameter, values in
    /// bit-exact form. Excludes the seed — two configs with equal
    /// parameters are the same search point.
    pub fn canonical_string(&self) -> String {
        let mut out = String::from(self.family.as_str());
        for (k, v) in &self.params {
            out.push('|');
            out.push_str(k);
            out.push('=');
            out.push_str(&v.canonical());
        }
        out
    }

    /// Hex digest of the canonical string; used as the final lexicographic
    /// tie-breaker during model selection.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let hash = Sha256::digest(self.canonical_string().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get_i64(&self, name: &str) -> crate::error::Result<i64> {
        self.params
            .get(name)
            .and_then(ParamValue::as_i64)
            .ok_or_else(|| self.missing(name))
    }

    pub fn get_f64(&self, name: &str) -> crate::error::Result<f64> {
        self.params
            .get(name)
            .and_then(ParamValue::as_f64)
            .ok_or_else(|| self.missing(name))
    }

    pub fn get_text(&self, name: &str) -> crate::error::Result<&str> {
        self.params
            .get(name)
            .and_then(ParamValue::as_text)
            .ok_or_else(|| self.missing(name))
    }

    fn missing(&self, name: &str) -> crate::error::Error {
        crate::error::Error::Tuning(format!(
            "{} config lacks required parameter {name:?}",
            self.family.as_str()
        ))
    }
}

/// Draw `c` pairwise-distinct configs from the space. A finite space with
/// at most `c` points is enumerated exhaustively instead (with a warning).
pub fn sample_configs(
    space: &ParamSpace,
    c: usize,
    seed: u64,
) -> (Vec<ModelConfig>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut configs: Vec<ModelConfig> = Vec::new();

    if let Some(total) = space.cardinality() {
        if total <= c as u64 {
            warnings.push(format!(
                "{} space holds only {total} configs (requested {c}); enumerating all",
                space.family.as_str()
            ));
            let mut assignments = vec![BTreeMap::new()];
            for (name, dim) in &space.dims {
                let values = dim.enumerate().expect("finite dim enumerates");
                let mut next = Vec::with_capacity(assignments.len() * values.len());
                for base in &assignments {
                    for v in &values {
                        let mut params: BTreeMap<String, ParamValue> = base.clone();
                        params.insert(name.clone(), v.clone());
                        next.push(params);
                    }
                }
                assignments = next;
            }
            for (i, params) in assignments.into_iter().enumerate() {
                configs.push(ModelConfig {
                    family: space.family,
                    params,
                    seed: sub_seed(seed, Domain::ConfigSampling, i as u64),
                });
            }
            return (configs, warnings);
        }
    }

    let mut rng = stage_rng(seed, Domain::ConfigSampling, space.family as u64);
    let mut seen = BTreeSet::new();
    let mut attempts = 0usize;
    let max_attempts = c.saturating_mul(1000).max(1000);
    while configs.len() < c && attempts < max_attempts {
        attempts += 1;
        let params: BTreeMap<String, ParamValue> = space
            .dims
            .iter()
            .map(|(name, dim)| (name.clone(), dim.sample(&mut rng)))
            .collect();
        let candidate = ModelConfig {
            family: space.family,
            params,
            seed: 0,
        };
        if seen.insert(candidate.canonical_string()) {
            let index = configs.len() as u64;
            configs.push(ModelConfig {
                seed: sub_seed(seed, Domain::ConfigSampling, index),
                ..candidate
            });
        }
    }
    if configs.len() < c {
        warnings.push(format!(
            "{}: exhausted sampling after {attempts} attempts with {} unique configs (requested {c})",
            space.family.as_str(),
            configs.len()
        ));
    }
    (configs, warnings)
}
