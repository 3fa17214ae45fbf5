//! Training loop, non-randomized k-fold cross-validation, frame accuracy,
//! and symmetric label-noise injection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{sha256_hex, Checkpoint};
use crate::image::{encode, fit_scaling, MotionImage, ScalingSpec};
use crate::ingest::{LabelSequence, LabeledSequence};
use crate::network::{init_params, loss_and_gradients, predict, NetworkConfig, Parameters};
use crate::optim::{adam_step, AdamHyper, AdamState};
use crate::{par, Error, Result};

/// Mixes `parts` into `base` (splitmix64 finalizer per part).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut s = base;
    for &p in parts {
        let mut z = s ^ p
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        s = z ^ (z >> 31);
    }
    s
}

/// Contiguous fold assignment in dataset order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldSpec {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// The first `n mod k` folds get `⌈n/k⌉` items, the rest `⌊n/k⌋`.
pub fn make_folds(n: usize, k: usize) -> Result<FoldSpec> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("fold count {k} must be in [1, {n}]")));
    }
    let (base, extra) = (n / k, n % k);
    let mut assignments = Vec::with_capacity(n);
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        assignments.extend(std::iter::repeat_n(fold, size));
    }
    Ok(FoldSpec { k, assignments })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.p) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "noise probability must be in [0, 1], got {}",
                self.p
            )))
        }
    }
}

/// Replaces each label with probability `p` by a uniformly drawn different class.
pub fn inject_noise(labels: &[usize], spec: &NoiseSpec, classes: usize) -> LabelSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    labels
        .iter()
        .map(|&y| {
            if classes >= 2 && rng.random_bool(spec.p) {
                let r = rng.random_range(0..classes - 1);
                if r >= y {
                    r + 1
                } else {
                    r
                }
            } else {
                y
            }
        })
        .collect()
}

/// Correct and total frame counts; pooled accuracy is `correct / total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameTally {
    pub correct: usize,
    pub total: usize,
}

impl FrameTally {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn add(&mut self, other: FrameTally) {
        self.correct += other.correct;
        self.total += other.total;
    }
}

pub fn frame_tally<P, T>(pred: &[P], truth: &[T]) -> Result<FrameTally>
where
    P: AsRef<[usize]>,
    T: AsRef<[usize]>,
{
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predicted vs {} true sequences",
            pred.len(),
            truth.len()
        )));
    }
    let mut tally = FrameTally::default();
    for (p, t) in pred.iter().zip(truth) {
        let (p, t) = (p.as_ref(), t.as_ref());
        if p.len() != t.len() {
            return Err(Error::Shape(format!(
                "{} predicted vs {} true frames",
                p.len(),
                t.len()
            )));
        }
        tally.correct += p.iter().zip(t).filter(|(a, b)| a == b).count();
        tally.total += t.len();
    }
    Ok(tally)
}

/// Fraction of frames predicted correctly, pooled over all sequences.
pub fn frame_accuracy<P, T>(pred: &[P], truth: &[T]) -> Result<f64>
where
    P: AsRef<[usize]>,
    T: AsRef<[usize]>,
{
    frame_tally(pred, truth).map(|t| t.accuracy())
}

/// An encoded image with its per-frame targets.
#[derive(Debug, Clone)]
pub struct Example {
    pub image: MotionImage,
    pub labels: LabelSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: Parameters,
    pub optimizer: AdamState,
    /// Mean per-sequence loss for each epoch.
    pub loss_trace: Vec<f64>,
}

/// Trains from `init_params(config, seed)` for `epochs` passes, one Adam step
/// per sequence in a seeded shuffled order.
pub fn train_one(
    config: &NetworkConfig,
    hyper: &AdamHyper,
    train_set: &[Example],
    epochs: usize,
    seed: u64,
) -> Result<TrainOutcome> {
    config.validate()?;
    let params = init_params(config, seed);
    let optimizer = AdamState::new(&params);
    resume_training(config, hyper, train_set, params, optimizer, 0, epochs, seed)
}

/// Continues training after `epochs_done` epochs. Shuffling depends only on
/// `(seed, epoch)`, so splitting a run across calls reproduces it exactly.
#[allow(clippy::too_many_arguments)]
pub fn resume_training(
    config: &NetworkConfig,
    hyper: &AdamHyper,
    train_set: &[Example],
    mut params: Parameters,
    mut optimizer: AdamState,
    epochs_done: usize,
    epochs: usize,
    seed: u64,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    hyper.validate()?;
    params.check_matches(config)?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut loss_trace = Vec::with_capacity(epochs);
    for epoch in epochs_done..epochs_done + epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x5348_5546, epoch as u64]));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let ex = &train_set[i];
            let (loss, grads) = loss_and_gradients(&params, &ex.image, &ex.labels, config)?;
            adam_step(&mut params, &grads, &mut optimizer, hyper)?;
            total += loss;
        }
        loss_trace.push(total / train_set.len() as f64);
    }
    Ok(TrainOutcome {
        params,
        optimizer,
        loss_trace,
    })
}

/// Predicts every example; sequences are evaluated concurrently.
pub fn predict_all(
    params: &Parameters,
    images: &[&MotionImage],
    config: &NetworkConfig,
) -> Result<Vec<LabelSequence>> {
    par::map(images, |img| predict(params, img, config))
        .into_iter()
        .collect()
}

pub fn encode_all(sequences: &[&LabeledSequence], scaling: &ScalingSpec) -> Vec<Example> {
    sequences
        .iter()
        .map(|s| Example {
            image: encode(&s.motion, scaling),
            labels: s.labels.clone(),
        })
        .collect()
}

/// One cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub fold: usize,
    pub train: FrameTally,
    pub test: FrameTally,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub loss_trace: Vec<f64>,
    pub config: NetworkConfig,
    pub hyper: AdamHyper,
    pub epochs: usize,
    pub seed: u64,
    pub noise: Option<NoiseSpec>,
    pub scaling: ScalingSpec,
    /// SHA-256 of the serialized run settings.
    pub config_digest: String,
    /// SHA-256 of the fold model's checkpoint JSON.
    pub checkpoint_digest: String,
}

/// Frame accuracies pooled over all folds.
pub fn pooled(reports: &[TrainReport]) -> (FrameTally, FrameTally) {
    let mut train = FrameTally::default();
    let mut test = FrameTally::default();
    for r in reports {
        train.add(r.train);
        test.add(r.test);
    }
    (train, test)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossValidation {
    pub config: NetworkConfig,
    pub hyper: AdamHyper,
    pub epochs: usize,
    pub seed: u64,
    pub noise: Option<NoiseSpec>,
}

impl CrossValidation {
    /// Digest of the network and optimization settings. Noise is reported
    /// separately, so a run with `p = 0` digests like a clean run.
    pub fn digest(&self) -> String {
        let settings = (&self.config, &self.hyper, self.epochs, self.seed);
        sha256_hex(
            serde_json::to_string(&settings)
                .expect("plain data serializes")
                .as_bytes(),
        )
    }

    /// Seed used for fold `fold`'s initialization and shuffling.
    pub fn fold_seed(&self, fold: usize) -> u64 {
        derive_seed(self.seed, &[fold as u64])
    }

    pub fn run(&self, dataset: &[LabeledSequence], folds: &FoldSpec) -> Result<Vec<TrainReport>> {
        cross_validate(self, dataset, folds)
    }
}

/// Trains on all folds but one and evaluates on the held-out fold against its
/// true labels, for every fold. Folds run concurrently.
pub fn cross_validate(
    cv: &CrossValidation,
    dataset: &[LabeledSequence],
    folds: &FoldSpec,
) -> Result<Vec<TrainReport>> {
    cv.config.validate()?;
    cv.hyper.validate()?;
    if let Some(n) = &cv.noise {
        n.validate()?;
    }
    if folds.assignments.len() != dataset.len() {
        return Err(Error::Config(format!(
            "fold assignment covers {} sequences, dataset has {}",
            folds.assignments.len(),
            dataset.len()
        )));
    }
    let fold_ids: Vec<usize> = (0..folds.k).collect();
    par::map(&fold_ids, |&fold| run_fold(cv, dataset, folds, fold))
        .into_iter()
        .collect()
}

fn run_fold(
    cv: &CrossValidation,
    dataset: &[LabeledSequence],
    folds: &FoldSpec,
    fold: usize,
) -> Result<TrainReport> {
    let train_idx = folds.complement(fold);
    let test_idx = folds.members(fold);
    if train_idx.is_empty() {
        return Err(Error::Empty(
            "training set (a single fold leaves nothing to train on)",
        ));
    }
    let train_seqs: Vec<&LabeledSequence> = train_idx.iter().map(|&i| &dataset[i]).collect();
    let test_seqs: Vec<&LabeledSequence> = test_idx.iter().map(|&i| &dataset[i]).collect();
    let scaling = fit_scaling(train_seqs.iter().map(|s| &s.motion))?;

    let clean_train = encode_all(&train_seqs, &scaling);
    let mut noisy_train = clean_train.clone();
    if let Some(noise) = &cv.noise {
        for (ex, &i) in noisy_train.iter_mut().zip(&train_idx) {
            let spec = NoiseSpec {
                p: noise.p,
                seed: derive_seed(noise.seed, &[i as u64]),
            };
            ex.labels = inject_noise(&ex.labels, &spec, cv.config.classes);
        }
    }

    let seed = cv.fold_seed(fold);
    let outcome = train_one(&cv.config, &cv.hyper, &noisy_train, cv.epochs, seed)?;

    let train_imgs: Vec<&MotionImage> = clean_train.iter().map(|e| &e.image).collect();
    let train_pred = predict_all(&outcome.params, &train_imgs, &cv.config)?;
    let train_truth: Vec<&[usize]> = clean_train.iter().map(|e| e.labels.as_slice()).collect();
    let train = frame_tally(&train_pred, &train_truth)?;

    let test_examples = encode_all(&test_seqs, &scaling);
    let test_imgs: Vec<&MotionImage> = test_examples.iter().map(|e| &e.image).collect();
    let test_pred = predict_all(&outcome.params, &test_imgs, &cv.config)?;
    let test_truth: Vec<&[usize]> = test_seqs.iter().map(|s| s.labels.as_slice()).collect();
    let test = frame_tally(&test_pred, &test_truth)?;

    let checkpoint = Checkpoint::new(cv.config, scaling, outcome.params).to_json()?;
    Ok(TrainReport {
        fold,
        train,
        test,
        train_accuracy: train.accuracy(),
        test_accuracy: test.accuracy(),
        loss_trace: outcome.loss_trace,
        config: cv.config,
        hyper: cv.hyper,
        epochs: cv.epochs,
        seed,
        noise: cv.noise,
        scaling,
        config_digest: cv.digest(),
        checkpoint_digest: sha256_hex(checkpoint.as_bytes()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_70_by_7() {
        let f = make_folds(70, 7).unwrap();
        for i in 0..7 {
            assert_eq!(f.members(i), (i * 10..i * 10 + 10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn folds_uneven_and_single() {
        let f = make_folds(7, 3).unwrap();
        assert_eq!(f.assignments, vec![0, 0, 0, 1, 1, 2, 2]);
        assert_eq!(make_folds(5, 1).unwrap().assignments, vec![0; 5]);
        assert!(make_folds(5, 0).is_err());
        assert!(make_folds(5, 6).is_err());
    }

    #[test]
    fn noise_extremes() {
        let labels: Vec<usize> = (0..1000).map(|i| i % 4).collect();
        let none = inject_noise(&labels, &NoiseSpec { p: 0.0, seed: 3 }, 4);
        assert_eq!(none, labels);
        let all = inject_noise(&labels, &NoiseSpec { p: 1.0, seed: 3 }, 4);
        assert!(all.iter().zip(&labels).all(|(a, b)| a != b && *a < 4));
    }

    #[test]
    fn noise_rate_concentrates() {
        let n = 100_000;
        let labels: Vec<usize> = (0..n).map(|i| (i / 37) % 10).collect();
        let noisy = inject_noise(&labels, &NoiseSpec { p: 0.8, seed: 11 }, 10);
        let frac = noisy.iter().zip(&labels).filter(|(a, b)| a != b).count() as f64 / n as f64;
        assert!(
            (frac - 0.8).abs() <= 3.0 * (0.8 * 0.2 / n as f64).sqrt(),
            "{frac}"
        );
        // Replacement classes are uniform over the other nine.
        let mut counts = [0usize; 10];
        for (a, b) in noisy.iter().zip(&labels) {
            if a != b {
                counts[(a + 10 - b) % 10] += 1;
            }
        }
        let flipped = counts.iter().sum::<usize>() as f64;
        for &c in &counts[1..] {
            let share = c as f64 / flipped;
            assert!((share - 1.0 / 9.0).abs() < 0.01, "{share}");
        }
    }

    #[test]
    fn accuracy_counts() {
        assert_eq!(
            frame_accuracy(&[vec![0, 1, 1, 0]], &[vec![0, 1, 0, 0]]).unwrap(),
            0.75
        );
        assert_eq!(frame_accuracy(&[vec![1, 1]], &[vec![1, 1]]).unwrap(), 1.0);
        assert_eq!(frame_accuracy(&[vec![0, 0]], &[vec![1, 1]]).unwrap(), 0.0);
        assert!(frame_accuracy(&[vec![0]], &[vec![0, 1]]).is_err());
        // Pooled, not averaged per sequence.
        let a = frame_accuracy(&[vec![0], vec![1, 1, 1]], &[vec![1], vec![1, 1, 1]]).unwrap();
        assert_eq!(a, 0.75);
    }

    #[test]
    fn seeds_differ_by_part() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(5, &[3, 4]), derive_seed(5, &[3, 4]));
    }
}
