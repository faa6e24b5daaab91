use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{FeatureSpec, SparseVec};
use super::{clamp_prob, ModelError};
use crate::corpus::Outcome;
use crate::Exec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Recorded with the model; full-batch descent itself draws no randomness.
    pub seed: u64,
    /// Keep the parameters of the epoch with the lowest validation loss.
    pub early_stopping: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.1,
            seed: 0,
            early_stopping: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub config: TrainConfig,
    /// Epoch whose parameters were kept (0 = initialization).
    pub selected_epoch: usize,
    /// Mean training loss (nats) of the parameters after each epoch, index 0 = init.
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub n_train: usize,
    pub n_distinct: usize,
}

/// K independent logistic regressions over a shared hashed feature space.
///
/// Only hashed indices seen in training carry weights; `features` is the
/// sorted list of those indices and `weights[k][j]` belongs to `features[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    pub spec: FeatureSpec,
    pub n_articles: usize,
    pub features: Vec<u32>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub meta: TrainMeta,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Identical feature vectors collapsed into one row with a multiplicity
/// and per-article positive counts. The summed loss and gradient are the
/// same as over the expanded rows.
struct Rows {
    x: Vec<Vec<(usize, f64)>>,
    count: Vec<f64>,
    positives: Vec<Vec<f64>>,
    n: usize,
}

impl Rows {
    fn build(examples: &[(&SparseVec, &Outcome)], col: &HashMap<u32, usize>, k: usize) -> Self {
        let mut slot: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
        let mut rows = Rows {
            x: Vec::new(),
            count: Vec::new(),
            positives: Vec::new(),
            n: examples.len(),
        };
        for (feats, outcome) in examples {
            let x: Vec<(usize, f64)> = feats
                .iter()
                .filter_map(|(i, v)| col.get(i).map(|&j| (j, *v)))
                .collect();
            let key: Vec<(usize, u64)> = x.iter().map(|&(j, v)| (j, v.to_bits())).collect();
            let r = *slot.entry(key).or_insert_with(|| {
                rows.x.push(x);
                rows.count.push(0.0);
                rows.positives.push(vec![0.0; k]);
                rows.x.len() - 1
            });
            rows.count[r] += 1.0;
            for kk in outcome.violated() {
                rows.positives[r][kk] += 1.0;
            }
        }
        rows
    }

    fn logits(&self, weights: &[Vec<f64>], bias: &[f64], exec: Exec) -> Vec<Vec<f64>> {
        exec.map(&self.x, |x| {
            bias.iter()
                .zip(weights)
                .map(|(b, w)| b + x.iter().map(|&(j, v)| w[j] * v).sum::<f64>())
                .collect()
        })
    }

    /// Mean over expanded rows of the summed per-article binary cross-entropy.
    fn loss(&self, logits: &[Vec<f64>]) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        let mut total = 0.0;
        for (r, zs) in logits.iter().enumerate() {
            for (kk, &z) in zs.iter().enumerate() {
                let pos = self.positives[r][kk];
                let neg = self.count[r] - pos;
                total += pos * softplus(-z) + neg * softplus(z);
            }
        }
        total / self.n as f64
    }
}

type Snapshot = (f64, usize, Vec<Vec<f64>>, Vec<f64>);

/// Fits one logistic model per article by full-batch gradient descent on
/// the mean summed binary cross-entropy, starting from all-zero parameters.
pub fn train(
    spec: &FeatureSpec,
    n_articles: usize,
    train_set: &[(&SparseVec, &Outcome)],
    validation_set: &[(&SparseVec, &Outcome)],
    config: &TrainConfig,
    exec: Exec,
) -> Result<OutcomeModel, ModelError> {
    if train_set.is_empty() {
        return Err(ModelError::NoTrainingData);
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(ModelError::BadLearningRate(config.learning_rate));
    }
    for (_, o) in train_set.iter().chain(validation_set) {
        if o.len() != n_articles {
            return Err(ModelError::ArticleMismatch {
                expected: n_articles,
                got: o.len(),
            });
        }
    }

    let mut features: Vec<u32> = train_set
        .iter()
        .flat_map(|(x, _)| x.iter().map(|p| p.0))
        .collect();
    features.sort_unstable();
    features.dedup();
    let col: HashMap<u32, usize> = features.iter().enumerate().map(|(j, &i)| (i, j)).collect();
    let train_rows = Rows::build(train_set, &col, n_articles);
    let val_rows = Rows::build(validation_set, &col, n_articles);

    let d = features.len();
    let mut weights = vec![vec![0.0; d]; n_articles];
    let mut bias = vec![0.0; n_articles];
    // (validation loss, epoch, weights, bias) of the best epoch so far.
    let mut best: Option<Snapshot> = None;
    let mut train_loss = Vec::with_capacity(config.epochs + 1);
    let mut validation_loss = Vec::new();
    let use_val = config.early_stopping && val_rows.n > 0;
    let scale = config.learning_rate / train_rows.n as f64;

    for epoch in 0..=config.epochs {
        let logits = train_rows.logits(&weights, &bias, exec);
        let loss = train_rows.loss(&logits);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        train_loss.push(loss);
        if val_rows.n > 0 {
            let vl = val_rows.loss(&val_rows.logits(&weights, &bias, exec));
            validation_loss.push(vl);
            if use_val && best.as_ref().is_none_or(|b| vl < b.0) {
                best = Some((vl, epoch, weights.clone(), bias.clone()));
            }
        }
        if epoch == config.epochs {
            break;
        }
        for kk in 0..n_articles {
            let w = &mut weights[kk];
            let mut gb = 0.0;
            for (r, zs) in logits.iter().enumerate() {
                let resid = train_rows.count[r] * sigmoid(zs[kk]) - train_rows.positives[r][kk];
                if resid == 0.0 {
                    continue;
                }
                gb += resid;
                for &(j, v) in &train_rows.x[r] {
                    w[j] -= scale * resid * v;
                }
            }
            bias[kk] -= scale * gb;
        }
    }

    let selected_epoch = match best {
        Some((_, epoch, w, b)) => {
            weights = w;
            bias = b;
            epoch
        }
        None => config.epochs,
    };
    Ok(OutcomeModel {
        spec: spec.clone(),
        n_articles,
        features,
        weights,
        bias,
        meta: TrainMeta {
            config: config.clone(),
            selected_epoch,
            train_loss,
            validation_loss,
            n_train: train_rows.n,
            n_distinct: train_rows.x.len(),
        },
    })
}

impl OutcomeModel {
    /// All-zero parameters: every probability is 0.5.
    pub fn zero(spec: FeatureSpec, n_articles: usize) -> Self {
        OutcomeModel {
            spec,
            n_articles,
            features: Vec::new(),
            weights: vec![Vec::new(); n_articles],
            bias: vec![0.0; n_articles],
            meta: TrainMeta {
                config: TrainConfig {
                    epochs: 0,
                    ..TrainConfig::default()
                },
                selected_epoch: 0,
                train_loss: Vec::new(),
                validation_loss: Vec::new(),
                n_train: 0,
                n_distinct: 0,
            },
        }
    }

    pub fn logits(&self, x: &SparseVec) -> Vec<f64> {
        let cols: Vec<(usize, f64)> = x
            .iter()
            .filter_map(|(i, v)| self.features.binary_search(i).ok().map(|j| (j, *v)))
            .collect();
        self.bias
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| b + cols.iter().map(|&(j, v)| w[j] * v).sum::<f64>())
            .collect()
    }

    /// `σ(w_k·x + b_k)` per article, clamped away from 0 and 1.
    pub fn predict_proba(&self, x: &SparseVec) -> Vec<f64> {
        self.logits(x)
            .into_iter()
            .map(|z| clamp_prob(sigmoid(z)))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.bias
            .iter()
            .chain(self.weights.iter().flatten())
            .all(|v| v.is_finite())
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(crate::io::write_json(path, self)?)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let m: OutcomeModel = crate::io::read_json(path)?;
        if m.weights.len() != m.n_articles
            || m.bias.len() != m.n_articles
            || m.weights.iter().any(|w| w.len() != m.features.len())
            || !m.is_finite()
        {
            return Err(ModelError::CorruptCheckpoint(path.display().to_string()));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::EPSILON;

    fn ex(feats: &[(u32, f64)], bits: &[bool]) -> (SparseVec, Outcome) {
        (feats.to_vec(), Outcome(bits.to_vec()))
    }

    fn refs(v: &[(SparseVec, Outcome)]) -> Vec<(&SparseVec, &Outcome)> {
        v.iter().map(|(x, o)| (x, o)).collect()
    }

    fn cfg(epochs: usize, lr: f64) -> TrainConfig {
        TrainConfig {
            epochs,
            learning_rate: lr,
            seed: 7,
            early_stopping: false,
        }
    }

    #[test]
    fn zero_epochs_predicts_half() {
        let data = vec![ex(&[(3, 1.0)], &[true, false])];
        let m = train(
            &FeatureSpec::unigrams(),
            2,
            &refs(&data),
            &[],
            &cfg(0, 0.5),
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(m.predict_proba(&vec![(3, 1.0)]), vec![0.5, 0.5]);
        assert!((m.meta.train_loss[0] - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    /// Two points, feature x in {0,1} plus bias. The same descent written
    /// out by hand on the two scalar parameters.
    #[test]
    fn separable_two_point_problem_matches_hand_recurrence() {
        let data = vec![ex(&[(11, 1.0)], &[true]), ex(&[], &[false])];
        let (epochs, lr) = (400, 1.0);
        let m = train(
            &FeatureSpec::unigrams(),
            1,
            &refs(&data),
            &[],
            &cfg(epochs, lr),
            Exec::Sequential,
        )
        .unwrap();

        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let (mut w, mut b) = (0.0f64, 0.0f64);
        for _ in 0..epochs {
            let r1 = s(w + b) - 1.0;
            let r0 = s(b);
            w -= lr * r1 / 2.0;
            b -= lr * (r1 + r0) / 2.0;
        }
        assert!((m.weights[0][0] - w).abs() < 1e-9);
        assert!((m.bias[0] - b).abs() < 1e-9);
        let p1 = m.predict_proba(&vec![(11, 1.0)])[0];
        let p0 = m.predict_proba(&vec![])[0];
        assert!(p1 >= 0.9 && p0 <= 0.1, "p1={p1} p0={p0}");
    }

    /// Labels drawn independently of features: the fitted probability sits
    /// near the base rate and the loss near the base rate's binary entropy.
    #[test]
    fn random_labels_recover_base_rate() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let base = 0.3;
        let data: Vec<_> = (0..20_000)
            .map(|_| {
                let f = rng.gen_range(0..4u32);
                ex(&[(f, 1.0)], &[rng.gen_bool(base)])
            })
            .collect();
        let m = train(
            &FeatureSpec::unigrams(),
            1,
            &refs(&data),
            &[],
            &cfg(300, 2.0),
            Exec::Sequential,
        )
        .unwrap();
        let rate = data.iter().filter(|(_, o)| o.bit(0)).count() as f64 / data.len() as f64;
        let h = -(rate * rate.ln() + (1.0 - rate) * (1.0 - rate).ln());
        for f in 0..4 {
            let p = m.predict_proba(&vec![(f, 1.0)])[0];
            assert!((p - base).abs() < 0.03, "feature {f}: p={p}");
        }
        let last = *m.meta.train_loss.last().unwrap();
        assert!(
            last <= h + 1e-9 && h - last < 1e-3,
            "loss {last} vs entropy {h}"
        );
    }

    #[test]
    fn loss_is_monotone_and_training_deterministic() {
        let data: Vec<_> = (0..50u32)
            .map(|i| ex(&[(i % 5, 1.0), (10 + i % 3, 2.0)], &[i % 5 < 2, i % 3 == 0]))
            .collect();
        let a = train(
            &FeatureSpec::unigrams(),
            2,
            &refs(&data),
            &[],
            &cfg(100, 0.3),
            Exec::Sequential,
        )
        .unwrap();
        let b = train(
            &FeatureSpec::unigrams(),
            2,
            &refs(&data),
            &[],
            &cfg(100, 0.3),
            Exec::Parallel,
        )
        .unwrap();
        assert_eq!(a.weights, b.weights);
        for w in a.meta.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(*a.meta.train_loss.last().unwrap() < 2.0 * std::f64::consts::LN_2);
    }

    #[test]
    fn hand_computed_prediction() {
        let data = vec![
            ex(&[(1, 2.0), (4, 1.0)], &[true]),
            ex(&[(4, 3.0)], &[false]),
        ];
        let m = train(
            &FeatureSpec::unigrams(),
            1,
            &refs(&data),
            &[],
            &cfg(5, 0.2),
            Exec::Sequential,
        )
        .unwrap();
        let x = vec![(1, 2.0), (4, 1.0), (99, 5.0)];
        let z = m.bias[0] + 2.0 * m.weights[0][0] + 1.0 * m.weights[0][1];
        let want = 1.0 / (1.0 + (-z).exp());
        assert!((m.predict_proba(&x)[0] - want).abs() < 1e-15);
    }

    #[test]
    fn huge_logits_are_clamped() {
        let mut m = OutcomeModel::zero(FeatureSpec::unigrams(), 2);
        m.bias = vec![1e6, -1e6];
        assert_eq!(m.predict_proba(&vec![]), vec![1.0 - EPSILON, EPSILON]);
    }

    #[test]
    fn divergent_learning_rate_aborts() {
        let data: Vec<_> = (0..20u32)
            .map(|i| ex(&[(0, 1e150 * (i as f64 + 1.0))], &[i % 2 == 0]))
            .collect();
        let err = train(
            &FeatureSpec::unigrams(),
            1,
            &refs(&data),
            &[],
            &cfg(50, 1e10),
            Exec::Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::NonFiniteLoss { .. }), "{err}");
    }

    #[test]
    fn early_stopping_keeps_best_validation_epoch() {
        // Training labels contradict validation labels, so validation loss rises from epoch 0.
        let tr = vec![ex(&[(1, 1.0)], &[true]); 10];
        let va = vec![ex(&[(1, 1.0)], &[false]); 10];
        let mut c = cfg(20, 0.5);
        c.early_stopping = true;
        let m = train(
            &FeatureSpec::unigrams(),
            1,
            &refs(&tr),
            &refs(&va),
            &c,
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(m.meta.selected_epoch, 0);
        assert_eq!(m.predict_proba(&vec![(1, 1.0)]), vec![0.5]);
    }

    #[test]
    fn input_validation() {
        let data = vec![ex(&[], &[true])];
        assert!(matches!(
            train(
                &FeatureSpec::unigrams(),
                1,
                &[],
                &[],
                &cfg(1, 0.1),
                Exec::Sequential
            ),
            Err(ModelError::NoTrainingData)
        ));
        assert!(matches!(
            train(
                &FeatureSpec::unigrams(),
                1,
                &refs(&data),
                &[],
                &cfg(1, 0.0),
                Exec::Sequential
            ),
            Err(ModelError::BadLearningRate(_))
        ));
    }
}
