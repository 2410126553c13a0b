//! One function per subcommand. Each writes its artifacts and a JSON report
//! under the output directory and returns the report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use signbridge::cnn::{self, CnnModel};
use signbridge::correction::{correct_offline, CorrectionResult, Lexicon, RemoteCorrector, BUILTIN_PHRASES};
use signbridge::datagen::{
    corrupt_corpus, render_class_shape, stratified_split, synth_landmarks, synth_silhouettes, ErrorMix,
    LandmarkDatasetSpec, ShapeJitter, SilhouetteDatasetSpec,
};
use signbridge::ensemble::{
    combine, decode_stream, ensemble_accuracy, optimize_weights, ClassProbabilities, EnsembleWeights, ValidationPair,
};
use signbridge::features::{FeatureVector, LandmarkFrame};
use signbridge::forest::{grid_search, ForestModel, SearchSpace};
use signbridge::metrics::{confusion_and_metrics, EvalReport};
use signbridge::rng::substream;
use signbridge::video::{
    self, duplicate_frames, interpolate_sequence, text_to_keyframes, write_sequence, FrameSequence, GestureAtlas,
};
use signbridge::vision::{pnm, resize, silhouette, GrayImage};
use signbridge::{Label, LabelSpace};

use crate::config::{CorrectorKind, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::landmark_csv::{parse_landmark_csv, write_landmark_csv};

/// Version of every JSON report written by the CLI.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
const CNN_SIDE: usize = 32;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Writes `<output_dir>/<name>.json` with the schema version and command.
fn write_report(cfg: &PipelineConfig, name: &str, mut body: Value) -> CliResult<Value> {
    create_dir(&cfg.output_dir)?;
    let obj = body.as_object_mut().expect("reports are JSON objects");
    obj.insert("schema_version".into(), json!(REPORT_SCHEMA_VERSION));
    obj.insert("command".into(), json!(name));
    let path = cfg.output_dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&body).expect("report serializes");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(body)
}

/// Reports leave out wall-clock time so reruns are byte-identical; timings
/// go to the log instead.
fn eval_json(report: &EvalReport) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    v.as_object_mut().expect("object").remove("runtime_ms");
    v
}

fn log_time(log: &mut dyn Write, what: &str, start: Instant) {
    let _ = writeln!(log, "{what}: {:.0} ms", start.elapsed().as_secs_f64() * 1e3);
}

// ---- datasets ----------------------------------------------------------

struct LandmarkData {
    x: Vec<FeatureVector<f64>>,
    y: Vec<usize>,
}

fn load_landmarks(path: &Path, space: &LabelSpace) -> CliResult<LandmarkData> {
    let frames = parse_landmark_csv(path)?;
    if frames.is_empty() {
        return Err(CliError::Data(format!("{}: no samples", path.display())));
    }
    let mut x = Vec::with_capacity(frames.len());
    let mut y = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let label = f
            .label
            .ok_or_else(|| CliError::Data(format!("{}: line {}: sample has no label", path.display(), i + 2)))?;
        let idx = space.index_of(label).ok_or_else(|| {
            CliError::Data(format!(
                "{}: line {}: label {label} is not in the model's label space",
                path.display(),
                i + 2
            ))
        })?;
        x.push(f.flatten());
        y.push(idx);
    }
    Ok(LandmarkData { x, y })
}

fn is_pnm(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("pgm" | "ppm" | "pnm")
    )
}

fn sorted_images(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_pnm(p))
        .collect();
    files.sort();
    Ok(files)
}

/// Resize to the network input and binarize with Otsu's threshold.
pub fn prepare_silhouette(img: &GrayImage) -> CliResult<GrayImage> {
    Ok(silhouette(&resize(img, CNN_SIDE, CNN_SIDE)?))
}

/// `<dir>/<LABEL>/*.pgm`, label directories and files in name order.
fn load_silhouettes(dir: &Path, space: &LabelSpace) -> CliResult<Vec<(GrayImage, usize)>> {
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let mut out = Vec::new();
    for sub in subdirs {
        let name = sub.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let label: Label = name
            .parse()
            .map_err(|_| CliError::Data(format!("{}: directory is not a class label", sub.display())))?;
        let idx = space.index_of(label).ok_or_else(|| {
            CliError::Data(format!("{}: label {label} is not in the model's label space", sub.display()))
        })?;
        for file in sorted_images(&sub)? {
            out.push((prepare_silhouette(&pnm::read_pgm(&file)?)?, idx));
        }
    }
    if out.is_empty() {
        return Err(CliError::Data(format!("{}: no images", dir.display())));
    }
    Ok(out)
}

fn split(cfg: &PipelineConfig, labels: &[usize]) -> CliResult<(Vec<usize>, Vec<usize>)> {
    let (train, test) = stratified_split(labels, cfg.test_fraction, substream(cfg.seed, "split"))?;
    if train.is_empty() || test.is_empty() {
        return Err(CliError::Data("too few samples for a train/test split".into()));
    }
    Ok((train, test))
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

fn load_atlas(cfg: &PipelineConfig) -> CliResult<GestureAtlas> {
    match &cfg.atlas_dir {
        Some(dir) => Ok(GestureAtlas::load(dir)?),
        None => Ok(GestureAtlas::synthetic()),
    }
}

// ---- datagen -----------------------------------------------------------

pub fn datagen(cfg: &PipelineConfig, log: &mut dyn Write) -> CliResult<Value> {
    let start = Instant::now();
    create_dir(&cfg.output_dir)?;
    let lm_spec = LandmarkDatasetSpec {
        num_classes: LabelSpace::landmark().len(),
        per_class: cfg.per_class,
        spread: cfg.spread,
        seed: substream(cfg.seed, "dataset-landmarks"),
    };
    let landmarks = synth_landmarks::<f64>(&lm_spec)?;
    let frames: Vec<LandmarkFrame<f64>> = landmarks.iter().map(|(f, _)| f.clone()).collect();
    write_landmark_csv(&cfg.landmark_csv, &frames)?;

    let sil_spec = SilhouetteDatasetSpec {
        num_classes: LabelSpace::silhouette().len(),
        per_class: cfg.per_class,
        side: cfg.side,
        seed: substream(cfg.seed, "dataset-silhouettes"),
    };
    let silhouettes = synth_silhouettes(&sil_spec)?;
    let space = LabelSpace::silhouette();
    for (i, (img, class)) in silhouettes.iter().enumerate() {
        let sub = cfg.silhouette_dir.join(space.label(*class).to_string());
        create_dir(&sub)?;
        pnm::write_pgm(&sub.join(format!("{:04}.pgm", i % cfg.per_class)), img)?;
    }

    let atlas_dir = cfg.output_dir.join("atlas");
    GestureAtlas::synthetic().save(&atlas_dir)?;

    let corpus = corrupt_corpus(BUILTIN_PHRASES, 500, &ErrorMix::default(), substream(cfg.seed, "corruption"))?;
    let corpus_path = cfg.output_dir.join("corrections.tsv");
    let mut tsv = String::from("corrupted\tclean\tkind\n");
    for (bad, clean, kind) in &corpus {
        tsv.push_str(&format!("{bad}\t{clean}\t{kind}\n"));
    }
    fs::write(&corpus_path, tsv).map_err(|e| io_err(&corpus_path, e))?;

    let demo_rows = write_demo_input(cfg, &lm_spec)?;
    log_time(log, "datagen", start);
    write_report(
        cfg,
        "datagen",
        json!({
            "seed": cfg.seed,
            "landmark_samples": landmarks.len(),
            "silhouette_samples": silhouettes.len(),
            "correction_pairs": corpus.len(),
            "demo_text": cfg.demo_text,
            "demo_frames": demo_rows,
        }),
    )
}

/// Landmark rows (and matching silhouette frames) spelling the demo text,
/// each character held for `demo_hold` frames. Samples come from the same
/// class clusters as the training data but from fresh draws.
fn write_demo_input(cfg: &PipelineConfig, spec: &LandmarkDatasetSpec) -> CliResult<usize> {
    let text = cfg.demo_text.to_ascii_uppercase();
    let space = LabelSpace::landmark();
    let mut labels = Vec::new();
    for c in text.chars() {
        let label = match c {
            ' ' => Label::Space,
            c => Label::letter(c).ok_or(signbridge::Error::UnsupportedChar(c))?,
        };
        labels.extend(std::iter::repeat_n(label, cfg.demo_hold));
    }
    if labels.is_empty() {
        return Err(CliError::Usage("datagen.demo_text must not be empty".into()));
    }
    let extra = LandmarkDatasetSpec {
        per_class: spec.per_class + labels.len(),
        ..spec.clone()
    };
    let pool = synth_landmarks::<f64>(&extra)?;
    let mut used = vec![0usize; space.len()];
    let mut rows = Vec::with_capacity(labels.len());
    let sil_dir = cfg.output_dir.join("demo_silhouettes");
    create_dir(&sil_dir)?;
    for (j, &label) in labels.iter().enumerate() {
        let class = space.require_index(label)?;
        let k = spec.per_class + used[class];
        used[class] += 1;
        let (frame, _) = &pool[class * extra.per_class + k];
        rows.push(LandmarkFrame::new(frame.points().to_vec(), None)?);
        let img = match label {
            Label::Letter(i) => render_class_shape(i as usize, cfg.side, ShapeJitter::default()),
            _ => GrayImage::filled(cfg.side, cfg.side, 0),
        };
        pnm::write_pgm(&sil_dir.join(video::frame_file_name(j)), &img)?;
    }
    write_landmark_csv(&cfg.output_dir.join("demo_landmarks.csv"), &rows)?;
    Ok(rows.len())
}

// ---- training ----------------------------------------------------------

pub fn train_rfc(cfg: &PipelineConfig, log: &mut dyn Write) -> CliResult<Value> {
    let start = Instant::now();
    let space = LabelSpace::landmark();
    let data = load_landmarks(&cfg.landmark_csv, &space)?;
    let (train_idx, test_idx) = split(cfg, &data.y)?;
    let (x, y) = (pick(&data.x, &train_idx), pick(&data.y, &train_idx));
    let (mut params, mut grid) = (cfg.forest.clone(), Value::Null);
    if cfg.rfc_grid {
        let result = grid_search(&x, &y, &space, &SearchSpace::default(), cfg.cv_folds, substream(cfg.seed, "grid"))?;
        grid = json!({"configs": result.rows.len(), "best_cv_accuracy": result.best_accuracy});
        params = result.best;
    }
    let model = ForestModel::train(&x, &y, &space, &params, substream(cfg.seed, "forest"))?;
    let xt = pick(&data.x, &test_idx);
    let preds: Vec<usize> = xt.iter().map(|v| model.predict_class(v)).collect();
    let report = confusion_and_metrics(&preds, &pick(&data.y, &test_idx), &space)?;
    create_dir(&cfg.output_dir)?;
    model.save(&cfg.rfc_model)?;
    log_time(log, "train-rfc", start);
    write_report(
        cfg,
        "train-rfc",
        json!({
            "params": params_json(&params),
            "grid": grid,
            "train_samples": train_idx.len(),
            "test_samples": test_idx.len(),
            "test": eval_json(&report),
        }),
    )
}

fn params_json(p: &signbridge::forest::ForestHyperparams) -> Value {
    json!({
        "n_estimators": p.n_estimators,
        "max_depth": p.max_depth,
        "min_samples_split": p.min_samples_split,
        "min_samples_leaf": p.min_samples_leaf,
        "bootstrap": p.bootstrap,
        "max_features": p.max_features,
    })
}

#[derive(Serialize)]
struct EpochJson {
    epoch: usize,
    train_loss: f64,
    train_accuracy: f64,
    val_loss: f64,
    val_accuracy: f64,
}

pub fn train_cnn(cfg: &PipelineConfig, log: &mut dyn Write) -> CliResult<Value> {
    let start = Instant::now();
    let space = LabelSpace::silhouette();
    let data = load_silhouettes(&cfg.silhouette_dir, &space)?;
    let labels: Vec<usize> = data.iter().map(|d| d.1).collect();
    let (train_idx, val_idx) = split(cfg, &labels)?;
    let (train_set, val_set) = (pick(&data, &train_idx), pick(&data, &val_idx));
    let mut model = CnnModel::<f32>::build(&space, substream(cfg.seed, "cnn-init"))?;
    let report = cnn::train(&mut model, &train_set, &val_set, &cfg.cnn)?;
    for e in &report.history {
        let _ = writeln!(
            log,
            "epoch {:3}  loss {:.4}  acc {:.3}  val_loss {:.4}  val_acc {:.3}",
            e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
        );
    }
    let preds = val_set
        .iter()
        .map(|(img, _)| model.predict(img).map(|p| p.argmax()))
        .collect::<signbridge::Result<Vec<_>>>()?;
    let eval = confusion_and_metrics(&preds, &pick(&labels, &val_idx), &space)?;
    create_dir(&cfg.output_dir)?;
    model.save(&cfg.cnn_model)?;
    log_time(log, "train-cnn", start);
    let history: Vec<EpochJson> = report
        .history
        .iter()
        .map(|e| EpochJson {
            epoch: e.epoch,
            train_loss: e.train_loss,
            train_accuracy: e.train_accuracy,
            val_loss: e.val_loss,
            val_accuracy: e.val_accuracy,
        })
        .collect();
    write_report(
        cfg,
        "train-cnn",
        json!({
            "train_samples": train_idx.len(),
            "val_samples": val_idx.len(),
            "best_epoch": report.best_epoch,
            "stopped_early": report.stopped_early,
            "history": history,
            "params": model.param_count(),
            "validation": eval_json(&eval),
        }),
    )
}

// ---- tune --------------------------------------------------------------

/// Grid search over the full hyperparameter space on the training split.
/// Prints one row per configuration to `out`.
pub fn tune(cfg: &PipelineConfig, out: &mut dyn Write, log: &mut dyn Write) -> CliResult<Value> {
    let start = Instant::now();
    let space = LabelSpace::landmark();
    let data = load_landmarks(&cfg.landmark_csv, &space)?;
    let (train_idx, _) = split(cfg, &data.y)?;
    let result = grid_search(
        &pick(&data.x, &train_idx),
        &pick(&data.y, &train_idx),
        &space,
        &SearchSpace::default(),
        cfg.cv_folds,
        substream(cfg.seed, "grid"),
    )?;
    let w = |e: std::io::Error| CliError::Data(format!("writing results: {e}"));
    writeln!(out, "# n_estimators max_depth min_samples_split min_samples_leaf bootstrap mean_cv_accuracy").map_err(w)?;
    let mut rows = Vec::with_capacity(result.rows.len());
    for row in &result.rows {
        let p = &row.params;
        let depth = p.max_depth.map_or("none".to_string(), |d| d.to_string());
        writeln!(
            out,
            "{} {} {} {} {} {:.6}",
            p.n_estimators, depth, p.min_samples_split, p.min_samples_leaf, p.bootstrap, row.mean_accuracy
        )
        .map_err(w)?;
        rows.push(json!({"params": params_json(p), "fold_accuracy": row.fold_accuracy, "mean_accuracy": row.mean_accuracy}));
    }
    log_time(log, "tune", start);
    write_report(
        cfg,
        "tune",
        json!({
            "folds": cfg.cv_folds,
            "best": params_json(&result.best),
            "best_cv_accuracy": result.best_accuracy,
            "rows": rows,
        }),
    )
}

// ---- eval --------------------------------------------------------------

pub fn eval(cfg: &PipelineConfig, log: &mut dyn Write) -> CliResult<Value> {
    let start = Instant::now();
    let has_rfc = cfg.rfc_model.exists();
    let has_cnn = cfg.cnn_model.exists();
    if !has_rfc && !has_cnn {
        return Err(CliError::Data(format!(
            "no model found at {} or {}",
            cfg.rfc_model.display(),
            cfg.cnn_model.display()
        )));
    }
    let mut body = json!({});

    // per class, the held-out probabilities in the shared space
    let mut rfc_probs: Vec<(Label, ClassProbabilities<f64>)> = Vec::new();
    if has_rfc {
        let model = ForestModel::<f64>::load(&cfg.rfc_model)?;
        let data = load_landmarks(&cfg.landmark_csv, model.classes())?;
        if data.x[0].len() != model.n_features() {
            return Err(CliError::Data(format!(
                "model expects {} features, data has {}",
                model.n_features(),
                data.x[0].len()
            )));
        }
        let (_, test_idx) = split(cfg, &data.y)?;
        let mut preds = Vec::with_capacity(test_idx.len());
        for &i in &test_idx {
            let p = model.predict_proba(&data.x[i]);
            preds.push(model.predict_class(&data.x[i]));
            rfc_probs.push((model.classes().label(data.y[i]), p.embed(&LabelSpace::shared())?));
        }
        let report = confusion_and_metrics(&preds, &pick(&data.y, &test_idx), model.classes())?;
        body["rfc"] = eval_json(&report);
    }
    let mut cnn_probs: Vec<(Label, ClassProbabilities<f64>)> = Vec::new();
    if has_cnn {
        let model = CnnModel::<f32>::load(&cfg.cnn_model)?;
        let data = load_silhouettes(&cfg.silhouette_dir, model.classes())?;
        let labels: Vec<usize> = data.iter().map(|d| d.1).collect();
        let (_, val_idx) = split(cfg, &labels)?;
        let mut preds = Vec::with_capacity(val_idx.len());
        for &i in &val_idx {
            let p = model.predict(&data[i].0)?.cast::<f64>();
            preds.push(p.argmax());
            cnn_probs.push((model.classes().label(labels[i]), p.embed(&LabelSpace::shared())?));
        }
        let report = confusion_and_metrics(&preds, &pick(&labels, &val_idx), model.classes())?;
        body["cnn"] = eval_json(&report);
    }
    if has_rfc && has_cnn {
        let pairs = pair_by_label(&rfc_probs, &cnn_probs);
        if !pairs.is_empty() {
            let rfc_only = ensemble_accuracy(&pairs, EnsembleWeights::new(1.0)?)?;
            let cnn_only = ensemble_accuracy(&pairs, EnsembleWeights::new(0.0)?)?;
            let (w, acc) = if cfg.optimize_ensemble {
                optimize_weights(&pairs)?
            } else {
                let w = EnsembleWeights::new(cfg.w_rfc)?;
                (w, ensemble_accuracy(&pairs, w)?)
            };
            body["ensemble"] = json!({
                "pairs": pairs.len(),
                "w_rfc": w.w_rfc,
                "w_cnn": w.w_cnn,
                "accuracy": acc,
                "rfc_only_accuracy": rfc_only,
                "cnn_only_accuracy": cnn_only,
            });
        }
    }
    log_time(log, "eval", start);
    write_report(cfg, "eval", body)
}

/// Match the k-th held-out sample of each label from both recognizers.
fn pair_by_label(
    rfc: &[(Label, ClassProbabilities<f64>)],
    cnn: &[(Label, ClassProbabilities<f64>)],
) -> Vec<ValidationPair<f64>> {
    let mut pairs = Vec::new();
    for label in LabelSpace::shared().labels() {
        let a = rfc.iter().filter(|(l, _)| l == label);
        let b = cnn.iter().filter(|(l, _)| l == label);
        for ((_, p_rfc), (_, p_cnn)) in a.zip(b) {
            pairs.push(ValidationPair {
                p_rfc: p_rfc.clone(),
                p_cnn: p_cnn.clone(),
                truth: *label,
            });
        }
    }
    pairs
}

// ---- correction and video ----------------------------------------------

pub struct CorrectionOutcome {
    pub result: CorrectionResult,
    pub fallback_used: bool,
    pub remote_error: Option<String>,
}

pub fn run_correction(cfg: &PipelineConfig, text: &str, fallback: bool) -> CliResult<CorrectionOutcome> {
    if text.trim().is_empty() {
        return Err(CliError::Data("nothing to correct".into()));
    }
    let lexicon = Lexicon::builtin();
    match cfg.corrector {
        CorrectorKind::Offline => Ok(CorrectionOutcome {
            result: correct_offline(text, &lexicon)?,
            fallback_used: false,
            remote_error: None,
        }),
        CorrectorKind::Remote => {
            let remote = RemoteCorrector::new(cfg.remote.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
            match remote.correct(text) {
                Ok(result) => Ok(CorrectionOutcome {
                    result,
                    fallback_used: false,
                    remote_error: None,
                }),
                Err(e) if fallback => Ok(CorrectionOutcome {
                    result: correct_offline(text, &lexicon)?,
                    fallback_used: true,
                    remote_error: Some(e.to_string()),
                }),
                Err(e) => Err(CliError::Remote(e.to_string())),
            }
        }
    }
}

fn correction_json(text: &str, o: &CorrectionOutcome) -> Value {
    json!({
        "input": text,
        "candidates": o.result.candidates,
        "source": o.result.source,
        "fallback_used": o.fallback_used,
        "remote_error": o.remote_error,
    })
}

pub fn correct(cfg: &PipelineConfig, text: &str, fallback: bool, out: &mut dyn Write) -> CliResult<Value> {
    let outcome = run_correction(cfg, text, fallback)?;
    for (i, c) in outcome.result.candidates.iter().enumerate() {
        let _ = writeln!(out, "{}. {c}", i + 1);
    }
    write_report(cfg, "correct", correction_json(text, &outcome))
}

fn sequence_json(seq: &FrameSequence, dir_name: &str, manifest: &Path) -> CliResult<Value> {
    let bytes = fs::read(manifest).map_err(|e| io_err(manifest, e))?;
    Ok(json!({
        "directory": dir_name,
        "fps": seq.fps,
        "frame_count": seq.len(),
        "manifest_sha256": video::sha256_hex(&bytes),
    }))
}

/// Keyframes, duplication and interpolation for `text`, written under the
/// output directory (`video/`, plus `video_1fps/` and `video_24fps/` when
/// all stages are requested).
pub fn render_video(cfg: &PipelineConfig, text: &str) -> CliResult<Value> {
    let atlas = load_atlas(cfg)?;
    let key = text_to_keyframes(text, &atlas)?;
    let dup = duplicate_frames(&key)?;
    let smooth = interpolate_sequence(&dup, cfg.interpolation)?;
    let mut stages = Vec::new();
    if cfg.all_stages {
        for (seq, name) in [(&key, "video_1fps"), (&dup, "video_24fps")] {
            let manifest = write_sequence(seq, &cfg.output_dir.join(name))?;
            stages.push(sequence_json(seq, name, &manifest)?);
        }
    }
    let manifest = write_sequence(&smooth, &cfg.output_dir.join("video"))?;
    stages.push(sequence_json(&smooth, "video", &manifest)?);
    Ok(json!({
        "text": text,
        "interpolation": cfg.interpolation.to_string(),
        "keyframes": key.len(),
        "stages": stages,
    }))
}

pub fn synthesize(cfg: &PipelineConfig, text: &str, log: &mut dyn Write) -> CliResult<Value> {
    let start = Instant::now();
    let text = text.trim().to_ascii_uppercase();
    let body = render_video(cfg, &text)?;
    log_time(log, "synthesize", start);
    write_report(cfg, "synthesize", body)
}

// ---- translate ---------------------------------------------------------

/// Recognize the input frames, decode them to raw text, correct it and
/// render the best candidate.
pub fn translate(cfg: &PipelineConfig, fallback: bool, log: &mut dyn Write) -> CliResult<Value> {
    let start = Instant::now();
    let shared = LabelSpace::shared();
    let rfc = ForestModel::<f64>::load(&cfg.rfc_model)?;
    let frames = parse_landmark_csv(&cfg.input_csv)?;
    if frames.is_empty() {
        return Err(CliError::Data(format!("{}: no frames", cfg.input_csv.display())));
    }
    let mut probs: Vec<ClassProbabilities<f64>> = frames
        .iter()
        .map(|f| rfc.predict_proba(&f.flatten()).embed(&shared))
        .collect::<signbridge::Result<_>>()?;
    let mut used_cnn = false;
    if let Some(dir) = &cfg.input_silhouettes {
        let cnn_model = CnnModel::<f32>::load(&cfg.cnn_model)?;
        let images = sorted_images(dir)?;
        if images.len() != frames.len() {
            return Err(CliError::Data(format!(
                "{} silhouette frames for {} landmark rows",
                images.len(),
                frames.len()
            )));
        }
        let w = EnsembleWeights::new(cfg.w_rfc)?;
        for (p, path) in probs.iter_mut().zip(&images) {
            let img = prepare_silhouette(&pnm::read_pgm(path)?)?;
            let q = cnn_model.predict(&img)?.cast::<f64>().embed(&shared)?;
            *p = combine(p, &q, w)?;
        }
        used_cnn = true;
    }
    let labels: Vec<Label> = probs.iter().map(|p| p.top_label()).collect();
    let raw = decode_stream(&labels, cfg.decode)?;
    let raw = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if raw.is_empty() {
        return Err(CliError::Data("no text recognized in the input".into()));
    }
    let outcome = run_correction(cfg, &raw, fallback)?;
    let chosen = outcome.result.best().to_string();
    let video = render_video(cfg, &chosen)?;
    log_time(log, "translate", start);
    write_report(
        cfg,
        "translate",
        json!({
            "frames": frames.len(),
            "ensemble": used_cnn,
            "w_rfc": if used_cnn { Some(cfg.w_rfc) } else { None },
            "frame_labels": labels.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "raw_text": raw,
            "correction": correction_json(&raw, &outcome),
            "text": chosen,
            "video": video,
        }),
    )
}
