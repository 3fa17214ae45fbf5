use mocap_tcn::image::fit_scaling;
use mocap_tcn::network::{init_params, NetworkConfig};
use mocap_tcn::optim::AdamHyper;
use mocap_tcn::synth::{generate, SynthSpec};
use mocap_tcn::trainer::{
    encode_all, make_folds, pooled, resume_training, train_one, CrossValidation, Example, NoiseSpec,
};

fn small_data(n: usize) -> (Vec<mocap_tcn::ingest::LabeledSequence>, Vec<Example>) {
    let spec = SynthSpec {
        n_sequences: n,
        min_frames: 80,
        max_frames: 100,
        joints: 4,
        classes: 3,
        seed: 5,
        ..SynthSpec::default()
    };
    let data = generate(&spec).unwrap();
    let scaling = fit_scaling(data.iter().map(|s| &s.motion)).unwrap();
    let refs: Vec<_> = data.iter().collect();
    let examples = encode_all(&refs, &scaling);
    (data, examples)
}

fn cfg() -> NetworkConfig {
    NetworkConfig::new(3, 4, 3).with_channels(8)
}

#[test]
fn zero_epochs_returns_initialization() {
    let (_, ex) = small_data(3);
    let out = train_one(&cfg(), &AdamHyper::default(), &ex, 0, 9).unwrap();
    assert_eq!(out.params, init_params(&cfg(), 9));
    assert!(out.loss_trace.is_empty());
}

#[test]
fn empty_training_set_is_an_error() {
    assert!(train_one(&cfg(), &AdamHyper::default(), &[], 1, 0).is_err());
}

#[test]
fn first_epoch_loss_near_uniform_and_trending_down() {
    let (_, ex) = small_data(6);
    let out = train_one(&cfg(), &AdamHyper::with_lr(3e-3), &ex, 15, 1).unwrap();
    assert!(out.loss_trace[0] <= 3f64.ln() + 0.5, "{:?}", out.loss_trace);
    assert!(out.loss_trace.iter().all(|l| l.is_finite()));
    assert!(out.loss_trace.last().unwrap() < &out.loss_trace[0]);
}

#[test]
fn training_is_deterministic_and_resumable() {
    let (_, ex) = small_data(4);
    let hyper = AdamHyper::default();
    let a = train_one(&cfg(), &hyper, &ex, 6, 3).unwrap();
    let b = train_one(&cfg(), &hyper, &ex, 6, 3).unwrap();
    assert_eq!(a, b);
    let half = train_one(&cfg(), &hyper, &ex, 3, 3).unwrap();
    let rest = resume_training(&cfg(), &hyper, &ex, half.params, half.optimizer, 3, 3, 3).unwrap();
    assert_eq!(rest.params, a.params);
    assert_eq!(rest.optimizer, a.optimizer);
    assert_eq!([half.loss_trace, rest.loss_trace].concat(), a.loss_trace);
}

fn cv(noise: Option<NoiseSpec>, epochs: usize) -> CrossValidation {
    CrossValidation {
        config: cfg(),
        hyper: AdamHyper::with_lr(3e-3),
        epochs,
        seed: 11,
        noise,
    }
}

#[test]
fn single_fold_cross_validation_fails() {
    let (data, _) = small_data(3);
    let folds = make_folds(3, 1).unwrap();
    assert!(cv(None, 1).run(&data, &folds).is_err());
}

#[test]
fn zero_noise_matches_clean_run_exactly() {
    let (data, _) = small_data(6);
    let folds = make_folds(6, 3).unwrap();
    let clean = cv(None, 3).run(&data, &folds).unwrap();
    let zero = cv(Some(NoiseSpec { p: 0.0, seed: 4 }), 3)
        .run(&data, &folds)
        .unwrap();
    for (a, b) in clean.iter().zip(&zero) {
        assert_eq!(a.checkpoint_digest, b.checkpoint_digest);
        assert_eq!(a.config_digest, b.config_digest);
        assert_eq!((a.train, a.test), (b.train, b.test));
        assert_eq!(a.loss_trace, b.loss_trace);
    }
}

#[test]
fn reports_are_well_formed() {
    let (data, _) = small_data(5);
    let folds = make_folds(5, 5).unwrap();
    let reports = cv(Some(NoiseSpec { p: 0.3, seed: 1 }), 2)
        .run(&data, &folds)
        .unwrap();
    assert_eq!(reports.len(), 5);
    let frames: usize = data.iter().map(|s| s.labels.len()).sum();
    let (_, test) = pooled(&reports);
    assert_eq!(test.total, frames);
    for (i, r) in reports.iter().enumerate() {
        assert_eq!(r.fold, i);
        assert_eq!(r.loss_trace.len(), 2);
        assert!((0.0..=1.0).contains(&r.train_accuracy) && (0.0..=1.0).contains(&r.test_accuracy));
        assert_eq!(r.test.total, data[i].labels.len());
    }
}

#[test]
fn clean_labels_beat_heavy_noise() {
    let spec = SynthSpec {
        n_sequences: 10,
        min_frames: 120,
        max_frames: 140,
        joints: 4,
        classes: 3,
        seed: 8,
        ..SynthSpec::default()
    };
    let data = generate(&spec).unwrap();
    let folds = make_folds(data.len(), 5).unwrap();
    let run = |p| {
        let cv = CrossValidation {
            config: NetworkConfig::new(3, 4, 3).with_channels(12),
            hyper: AdamHyper::with_lr(3e-3),
            epochs: 25,
            seed: 2,
            noise: Some(NoiseSpec { p, seed: 6 }),
        };
        pooled(&cv.run(&data, &folds).unwrap()).1.accuracy()
    };
    let (clean, noisy) = (run(0.0), run(0.8));
    assert!(clean > noisy, "clean {clean}, noisy {noisy}");
}
