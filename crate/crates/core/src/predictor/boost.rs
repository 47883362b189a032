use std::fs;
use std::path::Path;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::encode::{FeatureVector, Vocabulary};
use super::tree::{Columns, TreeBuilder, TreeNode, TreeParams};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub num_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Fraction of features offered to each split.
    pub colsample: f64,
    pub min_samples_leaf: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            num_trees: 300,
            max_depth: 20,
            learning_rate: 0.05,
            colsample: 0.9,
            min_samples_leaf: 1,
        }
    }
}

impl BoostParams {
    /// Small ensemble for fixtures and quick runs.
    pub fn desk() -> Self {
        Self {
            num_trees: 30,
            max_depth: 4,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return Err(Error::Config(format!(
                "colsample {} outside (0, 1]",
                self.colsample
            )));
        }
        Ok(())
    }
}

/// Squared-loss gradient-boosted regression trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub base_prediction: f64,
    pub params: BoostParams,
    pub num_features: usize,
    pub vocabulary: Vocabulary,
    pub trees: Vec<TreeNode>,
    /// Total split gain per feature.
    pub feature_importance: Vec<f64>,
    /// Training MSE after 0, 1, …, `trees.len()` trees.
    pub training_mse: Vec<f64>,
}

impl BoostedModel {
    fn check_dims(&self, len: usize) -> Result<()> {
        if len != self.num_features {
            return Err(Error::DimensionMismatch {
                expected: self.num_features,
                actual: len,
            });
        }
        Ok(())
    }

    /// Unclamped ensemble score.
    pub fn raw_score(&self, x: &[f64]) -> Result<f64> {
        self.check_dims(x.len())?;
        let eta = self.params.learning_rate;
        Ok(self
            .trees
            .iter()
            .fold(self.base_prediction, |acc, t| acc + eta * t.predict(x)))
    }

    /// Predicted volume, clamped at zero.
    pub fn predict_dense(&self, x: &[f64]) -> Result<f64> {
        let score = self.raw_score(x)?;
        Ok(if score.is_finite() {
            score.max(0.0)
        } else {
            0.0
        })
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        self.predict_dense(&x.to_dense())
    }

    pub fn max_tree_depth(&self) -> usize {
        self.trees.iter().map(TreeNode::depth).max().unwrap_or(0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn mse(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

/// Trains on encoded samples; the vocabulary travels with the model.
pub fn train(
    samples: &[(FeatureVector, f64)],
    vocabulary: Vocabulary,
    params: &BoostParams,
    seed: u64,
) -> Result<BoostedModel> {
    let rows: Vec<Vec<f64>> = samples.iter().map(|(x, _)| x.to_dense()).collect();
    let targets: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
    if let Some(bad) = rows.iter().find(|r| r.len() != vocabulary.num_features()) {
        return Err(Error::DimensionMismatch {
            expected: vocabulary.num_features(),
            actual: bad.len(),
        });
    }
    let mut model = train_dense(&rows, &targets, params, seed)?;
    model.vocabulary = vocabulary;
    Ok(model)
}

/// Trains on dense rows. Tree `m` fits the residuals `y − F_{m−1}(x)`.
pub fn train_dense(
    rows: &[Vec<f64>],
    targets: &[f64],
    params: &BoostParams,
    seed: u64,
) -> Result<BoostedModel> {
    params.validate()?;
    if rows.len() != targets.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} targets",
            rows.len(),
            targets.len()
        )));
    }
    if rows.len() < 2 {
        return Err(Error::NoData(format!(
            "need at least 2 training samples, got {}",
            rows.len()
        )));
    }
    if let Some(bad) = targets.iter().find(|y| !y.is_finite() || **y < 0.0) {
        return Err(Error::InvalidInput(format!(
            "training target {bad} is not a valid volume"
        )));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }

    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let n = targets.len();
    let base = targets.iter().sum::<f64>() / n as f64;
    let eta = params.learning_rate;
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        colsample: params.colsample,
    };

    let mut rng = SimRng::seed_from_u64(seed);
    let mut fitted = vec![base; n];
    let mut residuals = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.num_trees);
    let mut importance = vec![0.0; d];
    let mut history = vec![mse(targets, &fitted)];

    for _ in 0..params.num_trees {
        for i in 0..n {
            residuals[i] = targets[i] - fitted[i];
        }
        let mut builder =
            TreeBuilder::new(Columns { cols: &cols }, &residuals, &tree_params, &mut rng);
        let tree = builder.build();
        for (acc, g) in importance.iter_mut().zip(&builder.importance) {
            *acc += g;
        }
        for (i, row) in rows.iter().enumerate() {
            fitted[i] += eta * tree.predict(row);
        }
        history.push(mse(targets, &fitted));
        trees.push(tree);
    }

    Ok(BoostedModel {
        base_prediction: base,
        params: params.clone(),
        num_features: d,
        vocabulary: Vocabulary::default(),
        trees,
        feature_importance: importance,
        training_mse: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(num_trees: usize, max_depth: usize, eta: f64) -> BoostParams {
        BoostParams {
            num_trees,
            max_depth,
            learning_rate: eta,
            colsample: 1.0,
            min_samples_leaf: 1,
        }
    }

    #[test]
    fn production_defaults() {
        let p = BoostParams::default();
        assert_eq!((p.num_trees, p.max_depth), (300, 20));
        assert_eq!((p.learning_rate, p.colsample), (0.05, 0.9));
    }

    #[test]
    fn constant_target_needs_no_trees() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let m = train_dense(&rows, &[4.0; 3], &params(0, 3, 0.1), 1).unwrap();
        assert_eq!(m.base_prediction, 4.0);
        for r in &rows {
            assert_eq!(m.predict_dense(r).unwrap(), 4.0);
        }
        let m = train_dense(&rows, &[4.0; 3], &params(10, 3, 0.1), 1).unwrap();
        assert_eq!(m.predict_dense(&[9.0]).unwrap(), 4.0);
    }

    #[test]
    fn memorizes_distinct_rows() {
        let rows: Vec<Vec<f64>> = (0..16)
            .map(|i| vec![f64::from(i), f64::from(i % 3)])
            .collect();
        let y: Vec<f64> = (0..16).map(|i| f64::from((i * 7) % 11) + 0.5).collect();
        let m = train_dense(&rows, &y, &params(40, 4, 0.5), 3).unwrap();
        assert!(*m.training_mse.last().unwrap() < 1e-6);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            train_dense(&[vec![1.0]], &[1.0], &params(1, 1, 0.1), 0),
            Err(Error::NoData(_))
        ));
        assert!(train_dense(
            &[vec![1.0], vec![2.0]],
            &[1.0, f64::NAN],
            &params(1, 1, 0.1),
            0
        )
        .is_err());
        assert!(train_dense(&[vec![1.0], vec![2.0]], &[1.0, 2.0], &params(1, 1, 0.0), 0).is_err());
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let m = train_dense(&[vec![1.0], vec![2.0]], &[1.0, 2.0], &params(1, 1, 1.0), 0).unwrap();
        assert!(matches!(
            m.predict_dense(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 1,
                actual: 2
            })
        ));
    }

    #[test]
    fn negative_scores_clamp_to_zero() {
        let mut m =
            train_dense(&[vec![1.0], vec![2.0]], &[1.0, 2.0], &params(0, 1, 1.0), 0).unwrap();
        m.trees.push(TreeNode::Leaf { value: -100.0 });
        assert!(m.raw_score(&[1.0]).unwrap() < 0.0);
        assert_eq!(m.predict_dense(&[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![f64::from(i)]).collect();
        let y: Vec<f64> = (0..8).map(|i| f64::from(i * i)).collect();
        let m = train_dense(&rows, &y, &params(3, 2, 0.3), 9).unwrap();
        let back: BoostedModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
