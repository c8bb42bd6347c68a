//! Random forest of unpruned Gini trees with bootstrap resampling and
//! per-split feature subsampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::tree::{grow, mean_target, Criterion, GrowParams, Tree};
use crate::learn::{check_training_data, stream_rng, Classifier};
use crate::matrix::Matrix;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `floor(sqrt(d))`, at least one.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(m) => m,
        };
        m.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

impl RandomForest {
    /// Fits `n_trees` trees; tree `t` draws from stream `(seed, t)`.
    pub fn fit(x: &Matrix, y: &[bool], params: &ForestParams, seed: u64) -> Result<RandomForest> {
        check_training_data(x, y)?;
        if params.n_trees == 0 {
            return Err(Error::InvalidArgument("random forest needs at least one tree".into()));
        }
        let n = x.n_rows();
        let d = x.n_cols();
        let target: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
        let m = params.max_features.resolve(d);
        let grow_params = GrowParams {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
            max_features: (m < d).then_some(m),
            criterion: Criterion::Gini,
        };
        let trees = par::map_range(params.n_trees, |t| {
            let mut rng = stream_rng(seed, t as u64);
            let samples: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(x, &target, samples, &grow_params, Some(&mut rng), &mean_target(&target))
        });
        Ok(RandomForest { trees })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Each tree's positive-class probability for `x`.
    pub fn tree_probas(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }
}

impl Classifier for RandomForest {
    /// Mean of per-tree leaf frequencies.
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::tree::{DecisionTree, TreeParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn blobs(n: usize, seed: u64) -> (Matrix, Vec<bool>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = i % 3 == 0;
            let shift = if label { 1.0 } else { 0.0 };
            rows.push(vec![
                rng.gen::<f64>() + shift,
                rng.gen::<f64>() * 2.0,
                rng.gen::<f64>() - shift,
                rng.gen::<f64>(),
            ]);
            y.push(label);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn memorises_training_set() {
        let (x, y) = blobs(200, 1);
        let rf = RandomForest::fit(&x, &y, &ForestParams::default(), 9).unwrap();
        let acc = x
            .rows()
            .zip(&y)
            .filter(|(r, &t)| (rf.predict_proba(r) > 0.5) == t)
            .count() as f64
            / y.len() as f64;
        assert!(acc >= 0.99, "training accuracy {acc}");
    }

    #[test]
    fn single_full_tree_equals_decision_tree() {
        let (x, y) = blobs(120, 2);
        let params = ForestParams {
            n_trees: 1,
            max_features: MaxFeatures::All,
            bootstrap: false,
            ..Default::default()
        };
        let rf = RandomForest::fit(&x, &y, &params, 5).unwrap();
        let dt = DecisionTree::fit(&x, &y, &TreeParams::default()).unwrap();
        assert_eq!(&rf.trees()[0], dt.tree());
        let (probe, _) = blobs(50, 3);
        for r in probe.rows() {
            assert_eq!(rf.predict_proba(r), dt.predict_proba(r));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let (x, y) = blobs(150, 4);
        let params = ForestParams {
            n_trees: 25,
            ..Default::default()
        };
        let a = RandomForest::fit(&x, &y, &params, 11).unwrap();
        let b = RandomForest::fit(&x, &y, &params, 11).unwrap();
        let c = RandomForest::fit(&x, &y, &params, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_empty_input() {
        assert!(RandomForest::fit(&Matrix::zeros(0, 3), &[], &ForestParams::default(), 0).is_err());
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(23), 4);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
        assert_eq!(MaxFeatures::Count(50).resolve(7), 7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn proba_is_mean_of_trees(seed in any::<u64>(), probe in proptest::collection::vec(-1.0f64..2.0, 4)) {
            let (x, y) = blobs(60, seed);
            let rf = RandomForest::fit(&x, &y, &ForestParams { n_trees: 15, ..Default::default() }, seed).unwrap();
            let p = rf.predict_proba(&probe);
            let per_tree = rf.tree_probas(&probe);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((p - per_tree.iter().sum::<f64>() / per_tree.len() as f64).abs() < 1e-15);
        }
    }
}
