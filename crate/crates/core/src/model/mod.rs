//! The classifier zoo: linear SVM, random forest and gradient-boosted
//! trees behind one `TrainedClassifier` facade, plus the shared
//! class-weighting and dataset-preparation plumbing.

pub mod forest;
pub mod gbt;
pub mod space;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::model::forest::{ForestModel, MaxFeatures, RfParams};
use crate::model::gbt::{GbtModel, GbtParams};
use crate::model::space::{Family, ModelConfig};
use crate::model::svm::SvmModel;
use crate::model::tree::SortedColumns;

/// Inverse-frequency class weights: w_c = n / (2 · n_c), so a balanced
/// dataset gets (1, 1) and a 90/10 split gets (0.555…, 5).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub human: f64,
    pub bot: f64,
}

impl ClassWeights {
    pub fn balanced() -> ClassWeights {
        ClassWeights {
            human: 1.0,
            bot: 1.0,
        }
    }

    pub fn weight_for(&self, label: f64) -> f64 {
        if label == 1.0 {
            self.bot
        } else {
            self.human
        }
    }
}

/// Weights from observed label frequencies. Errors if either class is
/// missing, since a one-class training set can't be weighted or fit.
pub fn class_weights(labels: &[f64]) -> Result<ClassWeights> {
    let n_bot = labels.iter().filter(|&&y| y == 1.0).count();
    let n_human = labels.len() - n_bot;
    if n_bot == 0 || n_human == 0 {
        return Err(Error::ClassAbsent(format!(
            "cannot weight classes: {n_human} human / {n_bot} bot rows"
        )));
    }
    let n = labels.len() as f64;
    Ok(ClassWeights {
        human: n / (2.0 * n_human as f64),
        bot: n / (2.0 * n_bot as f64),
    })
}

/// A feature matrix reshaped for training: row-major for linear models,
/// column-major plus presorted row orders for tree growers. Building one
/// of these per training subset lets every candidate configuration reuse
/// the same O(m · n log n) sort.
pub struct PreparedDataset {
    pub rows: Vec<Vec<f64>>,
    pub cols: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub schema: Vec<String>,
    pub sorted: SortedColumns,
}

impl PreparedDataset {
    pub fn from_matrix(matrix: &FeatureMatrix) -> PreparedDataset {
        let n = matrix.n_rows();
        let m = matrix.n_cols();
        let mut cols = vec![Vec::with_capacity(n); m];
        for row in &matrix.rows {
            for (j, &v) in row.iter().enumerate() {
                cols[j].push(v);
            }
        }
        let sorted = SortedColumns::build(&cols);
        PreparedDataset {
            rows: matrix.rows.clone(),
            cols,
            labels: matrix.labels.clone(),
            schema: matrix.schema.clone(),
            sorted,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }
}

/// The fitted model behind a classifier, tagged by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svm(SvmModel),
    RandomForest(ForestModel),
    Gbt(GbtModel),
}

/// A classifier fitted to a specific feature subset. Scores are bot
/// probabilities for the tree families and signed margins for the SVM;
/// `cv_threshold` gives the natural decision cut on that scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub family: Family,
    pub schema: Vec<String>,
    pub class_weights: ClassWeights,
    pub seed: u64,
    pub model: ModelKind,
}

impl TrainedClassifier {
    /// Score rows already in this classifier's column order.
    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        match &self.model {
            ModelKind::Svm(m) => m.score_rows(rows),
            ModelKind::RandomForest(m) => m.score_rows(rows),
            ModelKind::Gbt(m) => m.score_rows(rows),
        }
    }

    /// Score a matrix, refusing schema mismatches outright rather than
    /// silently permuting features.
    pub fn score_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        if matrix.schema != self.schema {
            return Err(Error::schema(format!(
                "feature schema mismatch: model expects {:?}, matrix has {:?}",
                self.schema, matrix.schema
            )));
        }
        Ok(self.score_rows(&matrix.rows))
    }

    /// Default decision threshold on this model's score scale before any
    /// precision-recall tuning: 0.5 for probabilities, 0 for margins.
    pub fn cv_threshold(&self) -> f64 {
        match self.family {
            Family::Svm => 0.0,
            Family::RandomForest | Family::Gbt => 0.5,
        }
    }
}

fn rf_params(config: &ModelConfig) -> Result<RfParams> {
    Ok(RfParams {
        n_trees: config.get_i64("n_trees")? as usize,
        max_depth: config.get_i64("max_depth")? as usize,
        max_features: MaxFeatures::parse(config.get_text("max_features")?)?,
        min_samples_leaf: config.get_i64("min_samples_leaf")? as u64,
        bootstrap: config.get_i64("bootstrap")? != 0,
    })
}

fn gbt_params(config: &ModelConfig) -> Result<GbtParams> {
    Ok(GbtParams {
        max_depth: config.get_i64("max_depth")? as usize,
        learning_rate: config.get_f64("learning_rate")?,
        n_estimators: config.get_i64("n_estimators")? as usize,
        subsample: config.get_f64("subsample")?,
        colsample_bytree: config.get_f64("colsample_bytree")?,
        min_child_weight: config.get_i64("min_child_weight")? as f64,
        gamma: config.get_f64("gamma")?,
        reg_lambda: config.get_f64("reg_lambda")?,
        scale_pos_weight: None,
    })
}

/// Fit one configuration on an already-prepared dataset.
///
/// The tree booster handles imbalance through its own scale_pos_weight,
/// so it trains with unit row weights; the SVM and forest consume the
/// supplied class weights directly.
pub fn train_prepared(
    config: &ModelConfig,
    data: &PreparedDataset,
    weights: &ClassWeights,
) -> Result<TrainedClassifier> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset("no training rows".into()));
    }
    for col in &data.cols {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training(
                "non-finite feature value in training data".into(),
            ));
        }
    }
    let n_bot = data.labels.iter().filter(|&&y| y == 1.0).count();
    if n_bot == 0 || n_bot == data.n_rows() {
        return Err(Error::ClassAbsent(format!(
            "training data has a single class ({n_bot}/{} bot rows)",
            data.n_rows()
        )));
    }

    let model = match config.family {
        Family::Svm => {
            let c = config.get_f64("c")?;
            let epochs = config.get_i64("epochs")? as usize;
            ModelKind::Svm(SvmModel::fit(&data.rows, &data.labels, weights, c, epochs))
        }
        Family::RandomForest => {
            let params = rf_params(config)?;
            ModelKind::RandomForest(ForestModel::fit(data, weights, &params, config.seed))
        }
        Family::Gbt => {
            let params = gbt_params(config)?;
            ModelKind::Gbt(GbtModel::fit(data, None, &params, config.seed))
        }
    };
    Ok(TrainedClassifier {
        family: config.family,
        schema: data.schema.clone(),
        class_weights: *weights,
        seed: config.seed,
        model,
    })
}

/// Fit one configuration on a feature matrix.
pub fn train(
    config: &ModelConfig,
    matrix: &FeatureMatrix,
    weights: &ClassWeights,
) -> Result<TrainedClassifier> {
    let data = PreparedDataset::from_matrix(matrix);
    train_prepared(config, &data, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::space::ParamValue;
    use std::collections::BTreeMap;

    fn toy_matrix() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, (i * 7 % 11) as f64])
            .collect();
        let labels: Vec<f64> = (0..20).map(|i| f64::from(i >= 10)).collect();
        FeatureMatrix {
            user_ids: (0..20).map(|i| i.to_string()).collect(),
            schema: vec!["a".into(), "b".into()],
            rows,
            labels,
            dataset_name: "toy".into(),
        }
    }

    fn config(family: Family, pairs: &[(&str, ParamValue)]) -> ModelConfig {
        let mut params = BTreeMap::new();
        for (k, v) in pairs {
            params.insert((*k).to_string(), v.clone());
        }
        ModelConfig {
            family,
            params,
            seed: 7,
        }
    }

    fn svm_config() -> ModelConfig {
        config(
            Family::Svm,
            &[
                ("c", ParamValue::Float(1.0)),
                ("epochs", ParamValue::Int(100)),
            ],
        )
    }

    #[test]
    fn class_weights_follow_inverse_frequency() {
        let mut labels = vec![0.0; 90];
        labels.extend(vec![1.0; 10]);
        let w = class_weights(&labels).unwrap();
        assert!((w.human - 100.0 / 180.0).abs() < 1e-12);
        assert!((w.bot - 5.0).abs() < 1e-12);
        // Balanced data weighs both classes at exactly 1.
        let even = class_weights(&[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(even, ClassWeights::balanced());
    }

    #[test]
    fn class_weights_need_both_classes() {
        assert!(matches!(
            class_weights(&[0.0, 0.0]),
            Err(Error::ClassAbsent(_))
        ));
        assert!(matches!(class_weights(&[1.0]), Err(Error::ClassAbsent(_))));
    }

    #[test]
    fn train_each_family_and_score() {
        let matrix = toy_matrix();
        let weights = class_weights(&matrix.labels).unwrap();
        let configs = [
            svm_config(),
            config(
                Family::RandomForest,
                &[
                    ("n_trees", ParamValue::Int(15)),
                    ("max_depth", ParamValue::Int(0)),
                    ("max_features", ParamValue::Text("sqrt".into())),
                    ("min_samples_leaf", ParamValue::Int(1)),
                    ("bootstrap", ParamValue::Int(1)),
                ],
            ),
            config(
                Family::Gbt,
                &[
                    ("max_depth", ParamValue::Int(3)),
                    ("learning_rate", ParamValue::Float(0.3)),
                    ("n_estimators", ParamValue::Int(20)),
                    ("subsample", ParamValue::Float(1.0)),
                    ("colsample_bytree", ParamValue::Float(1.0)),
                    ("min_child_weight", ParamValue::Int(1)),
                    ("gamma", ParamValue::Float(0.0)),
                    ("reg_lambda", ParamValue::Float(1.0)),
                ],
            ),
        ];
        for cfg in &configs {
            let model = train(cfg, &matrix, &weights).unwrap();
            assert_eq!(model.family, cfg.family);
            assert_eq!(model.schema, matrix.schema);
            let scores = model.score_matrix(&matrix).unwrap();
            assert_eq!(scores.len(), 20);
            // This toy problem is separable on feature a; every family
            // should classify its own training set perfectly.
            let thr = model.cv_threshold();
            for (s, y) in scores.iter().zip(&matrix.labels) {
                assert_eq!(f64::from(*s >= thr), *y, "{:?}", cfg.family);
            }
        }
    }

    #[test]
    fn single_class_training_is_refused() {
        let mut matrix = toy_matrix();
        matrix.labels = vec![0.0; 20];
        let result = train(&svm_config(), &matrix, &ClassWeights::balanced());
        assert!(matches!(result, Err(Error::ClassAbsent(_))));
    }

    #[test]
    fn non_finite_features_are_refused() {
        let mut matrix = toy_matrix();
        matrix.rows[3][1] = f64::NAN;
        let result = train(&svm_config(), &matrix, &ClassWeights::balanced());
        assert!(matches!(result, Err(Error::Training(_))));
    }

    #[test]
    fn schema_mismatch_is_refused_at_scoring() {
        let matrix = toy_matrix();
        let weights = class_weights(&matrix.labels).unwrap();
        let model = train(&svm_config(), &matrix, &weights).unwrap();
        let mut other = matrix.clone();
        other.schema = vec!["b".into(), "a".into()];
        assert!(model.score_matrix(&other).is_err());
    }

    #[test]
    fn classifier_serde_round_trip() {
        let matrix = toy_matrix();
        let weights = class_weights(&matrix.labels).unwrap();
        let model = train(&svm_config(), &matrix, &weights).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: TrainedClassifier = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        assert_eq!(
            back.score_matrix(&matrix).unwrap(),
            model.score_matrix(&matrix).unwrap()
        );
    }
}
