//! Cross-module flows through the public API.

use signbridge::cnn::{self, CnnModel, TrainConfig};
use signbridge::correction::{correct_offline, Lexicon};
use signbridge::datagen::{stratified_split, synth_landmarks, synth_silhouettes, LandmarkDatasetSpec, SilhouetteDatasetSpec};
use signbridge::ensemble::{combine, decode_stream, EnsembleWeights, StreamDecodeConfig};
use signbridge::features::FeatureVector;
use signbridge::forest::{ForestHyperparams, ForestModel};
use signbridge::video::{
    duplicate_frames, interpolate_sequence, read_sequence, text_to_keyframes, write_sequence, GestureAtlas,
    InterpolationMethod,
};
use signbridge::vision::{resize, silhouette};
use signbridge::{Label, LabelSpace, Real};

fn small_forest() -> ForestHyperparams {
    ForestHyperparams {
        n_estimators: 15,
        ..ForestHyperparams::default()
    }
}

fn landmark_data<T: Real>(per_class: usize, seed: u64) -> (Vec<FeatureVector<T>>, Vec<usize>) {
    let spec = LandmarkDatasetSpec {
        num_classes: LabelSpace::landmark().len(),
        per_class,
        spread: 0.05,
        seed,
    };
    synth_landmarks::<T>(&spec).unwrap().into_iter().map(|(f, y)| (f.flatten(), y)).unzip()
}

fn forest_accuracy<T: Real>() -> f64 {
    let (x, y) = landmark_data::<T>(20, 3);
    let (train, test) = stratified_split(&y, 0.25, 1).unwrap();
    let pick = |idx: &[usize]| -> (Vec<FeatureVector<T>>, Vec<usize>) {
        idx.iter().map(|&i| (x[i].clone(), y[i])).unzip()
    };
    let (xt, yt) = pick(&train);
    let model = ForestModel::train(&xt, &yt, &LabelSpace::landmark(), &small_forest(), 7).unwrap();
    let (xs, ys) = pick(&test);
    let hits = xs.iter().zip(&ys).filter(|(v, &t)| model.predict_class(v) == t).count();
    hits as f64 / ys.len() as f64
}

#[test]
fn forest_learns_landmarks_in_both_precisions() {
    assert!(forest_accuracy::<f64>() >= 0.95);
    assert!(forest_accuracy::<f32>() >= 0.95);
}

#[test]
fn forest_file_round_trip_keeps_predictions() {
    let (x, y) = landmark_data::<f64>(8, 5);
    let model = ForestModel::train(&x, &y, &LabelSpace::landmark(), &small_forest(), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rfc.model");
    model.save(&path).unwrap();
    let loaded = ForestModel::<f64>::load(&path).unwrap();
    for v in &x {
        assert_eq!(model.predict_proba(v), loaded.predict_proba(v));
    }
}

/// A few epochs on real silhouettes, then recognizer outputs from both
/// models combined in the shared space and decoded to text.
#[test]
fn recognizers_feed_the_decoder() {
    let spec = SilhouetteDatasetSpec {
        num_classes: LabelSpace::silhouette().len(),
        per_class: 6,
        side: 48,
        seed: 4,
    };
    let data: Vec<(_, usize)> = synth_silhouettes(&spec)
        .unwrap()
        .into_iter()
        .map(|(img, y)| (silhouette(&resize(&img, 32, 32).unwrap()), y))
        .collect();
    let mut net = CnnModel::<f32>::build(&LabelSpace::silhouette(), 1).unwrap();
    let config = TrainConfig {
        max_epochs: 3,
        ..TrainConfig::default()
    };
    let report = cnn::train(&mut net, &data, &[], &config).unwrap();
    assert!(report.history.last().unwrap().train_loss < report.history[0].train_loss);

    let (x, y) = landmark_data::<f64>(10, 9);
    let forest = ForestModel::train(&x, &y, &LabelSpace::landmark(), &small_forest(), 3).unwrap();
    let shared = LabelSpace::shared();
    let hi = [7usize, 8];
    let mut frames = Vec::new();
    for &class in &hi {
        let v = &x[class * 10];
        let p_rfc = forest.predict_proba(v).embed(&shared).unwrap();
        let img = &data[class * 6].0;
        let p_cnn = net.predict(img).unwrap().cast::<f64>().embed(&shared).unwrap();
        let p = combine(&p_rfc, &p_cnn, EnsembleWeights::new(0.9).unwrap()).unwrap();
        frames.extend(std::iter::repeat_n(p.top_label(), 4));
    }
    assert_eq!(frames[0], Label::Letter(7));
    let text = decode_stream(&frames, StreamDecodeConfig::default()).unwrap();
    assert_eq!(text, "HI");
    assert_eq!(correct_offline(&text, &Lexicon::builtin()).unwrap().candidates.len(), 3);
}

#[test]
fn video_survives_disk_round_trip() {
    let atlas = GestureAtlas::synthetic();
    let seq = interpolate_sequence(
        &duplicate_frames(&text_to_keyframes("OK", &atlas).unwrap()).unwrap(),
        InterpolationMethod::Flow,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sequence(&seq, dir.path()).unwrap();
    let back = read_sequence(dir.path()).unwrap();
    assert_eq!(back.frames, seq.frames);
    assert_eq!((back.fps, back.keyframes), (60, 2));
}
