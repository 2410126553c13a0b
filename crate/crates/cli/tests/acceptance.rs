//! Acceptance checks, run in order with one PASS/FAIL line each.
//! `cargo test -p signbridge-cli --test acceptance -- --nocapture` shows them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use serde_json::Value;

use signbridge::cnn::{gradient_check, Architecture, CnnModel, LayerSpec, Padding, Tensor3};
use signbridge::correction::{correct_offline, evaluate_corrector, Lexicon, BUILTIN_PHRASES};
use signbridge::datagen::{corrupt_corpus, ErrorKind, ErrorMix};
use signbridge::rng;
use signbridge::video::{
    duplicate_frames, estimate_block_flow, estimate_flow, extract_context, interpolate_sequence, source_position,
    synthesize_frame, text_to_keyframes, GestureAtlas, InterpolationMethod,
};
use signbridge::vision::{otsu_threshold, GrayImage};
use signbridge::{Label, LabelSpace};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["signbridge"];
    argv.extend_from_slice(args);
    let code = signbridge_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into(), String::from_utf8_lossy(&err).into())
}

fn cli_ok(args: &[&str]) -> Result<(), String> {
    let (code, _, err) = cli(args);
    if code == 0 {
        Ok(())
    } else {
        Err(format!("`{}` exited {code}: {}", args.join(" "), err.trim()))
    }
}

fn report(dir: &Path, name: &str) -> Result<Value, String> {
    let text = fs::read_to_string(dir.join(format!("{name}.json"))).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn cnn_structure() -> Outcome {
    let m = CnnModel::<f32>::build(&LabelSpace::silhouette(), 0).map_err(|e| e.to_string())?;
    let summary = m.summary();
    let shapes: Vec<Vec<usize>> = summary.iter().filter(|s| s.kind != "dropout").map(|s| s.output.clone()).collect();
    let want_shapes = vec![
        vec![31, 31, 16],
        vec![15, 15, 16],
        vec![13, 13, 32],
        vec![4, 4, 32],
        vec![4, 4, 64],
        vec![1, 1, 64],
        vec![128],
        vec![27],
    ];
    let params: Vec<usize> = summary.iter().map(|s| s.params).filter(|&p| p > 0).collect();
    check(
        shapes == want_shapes && params[..4] == [80, 4640, 51264, 8320],
        format!("shapes {shapes:?}, params {params:?}"),
    )
}

fn gradients() -> Outcome {
    let arch = Architecture {
        input: [6, 6, 1],
        layers: vec![
            LayerSpec::Conv { filters: 3, kernel: 2, padding: Padding::Valid },
            LayerSpec::MaxPool { size: 2, stride: 1, ceil: false },
            LayerSpec::Conv { filters: 4, kernel: 3, padding: Padding::Same },
            LayerSpec::MaxPool { size: 3, stride: 3, ceil: true },
            LayerSpec::Dense { units: 5 },
            LayerSpec::Dropout { rate: 0.2 },
            LayerSpec::Dense { units: 3 },
        ],
    };
    let space = LabelSpace::new(vec![Label::Letter(0), Label::Letter(1), Label::Letter(2)]).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let m = CnnModel::<f64>::with_architecture(arch.clone(), &space, seed).map_err(|e| e.to_string())?;
        let mut r = rng::stream(seed, "acceptance-input", 0);
        let x = Tensor3::from_vec(6, 6, 1, (0..36).map(|_| r.random_range(0.0..1.0)).collect()).unwrap();
        for truth in 0..3 {
            worst = worst.max(gradient_check(&m, &x, truth).map_err(|e| e.to_string())?);
        }
    }
    check(worst < 1e-4, format!("max relative error {worst:.2e}"))
}

/// Exhaustive search in exact integer arithmetic, written independently of
/// the library: maximize (s0*n1 - s1*n0)^2 / (n0*n1), lowest t on ties.
fn exhaustive_otsu(img: &GrayImage) -> u8 {
    let mut best: Option<(u8, u128, u128)> = None;
    for t in 0..=255u8 {
        let (mut n0, mut s0, mut n1, mut s1) = (0u128, 0u128, 0u128, 0u128);
        for &p in img.pixels() {
            if p <= t {
                n0 += 1;
                s0 += p as u128;
            } else {
                n1 += 1;
                s1 += p as u128;
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (s0 * n1).abs_diff(s1 * n0);
        let (num, den) = (d * d, n0 * n1);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    match best {
        Some((t, num, _)) if num > 0 => t,
        _ => img.pixels()[0],
    }
}

fn otsu_oracle() -> Outcome {
    let mut r = rng::stream(11, "acceptance-otsu", 0);
    let mut mismatches = 0;
    for i in 0..100 {
        let (w, h) = (r.random_range(1..40), r.random_range(1..40));
        // mix of uniform noise, two-level images and narrow ranges
        let img = match i % 3 {
            0 => GrayImage::from_fn(w, h, |_, _| r.random()),
            1 => {
                let (a, b) = (r.random::<u8>(), r.random::<u8>());
                GrayImage::from_fn(w, h, |_, _| if r.random_bool(0.5) { a } else { b })
            }
            _ => {
                let base = r.random_range(0..200u8);
                GrayImage::from_fn(w, h, |_, _| base + r.random_range(0..50u8))
            }
        };
        mismatches += usize::from(otsu_threshold(&img) != exhaustive_otsu(&img));
    }
    check(mismatches == 0, format!("{mismatches}/100 mismatches"))
}

/// Trains both recognizers through the CLI on the default synthetic data
/// and returns the eval report.
fn desk_scale_eval(dir: &Path) -> Result<(Value, Value, Value), String> {
    let out = dir.to_str().unwrap();
    let common = ["--seed", "2024", "--out", out];
    let with = |cmd: &str, extra: &[&'static str]| {
        let mut a = vec![cmd];
        a.extend_from_slice(&common);
        a.extend_from_slice(extra);
        cli_ok(&a)
    };
    with("datagen", &[])?;
    let start = Instant::now();
    with("train-rfc", &[])?;
    eprintln!("train-rfc took {:.1} s", start.elapsed().as_secs_f64());
    let start = Instant::now();
    with("train-cnn", &["--set", "cnn.max_epochs=15"])?;
    eprintln!("train-cnn took {:.1} s", start.elapsed().as_secs_f64());
    with("eval", &[])?;
    Ok((report(dir, "train-rfc")?, report(dir, "train-cnn")?, report(dir, "eval")?))
}

fn rfc_accuracy(rfc: &Value) -> Outcome {
    let acc = rfc["test"]["accuracy"].as_f64().ok_or("missing accuracy")?;
    let n = rfc["test_samples"].as_u64().unwrap_or(0);
    check(acc >= 0.95, format!("test accuracy {acc:.4} on {n} samples"))
}

fn cnn_accuracy(cnn: &Value) -> Outcome {
    let history = cnn["history"].as_array().ok_or("missing history")?;
    let acc = cnn["validation"]["accuracy"].as_f64().ok_or("missing accuracy")?;
    check(
        acc >= 0.80 && history.len() <= 15,
        format!("validation accuracy {acc:.4} after {} epochs", history.len()),
    )
}

fn ensemble_dominance(eval: &Value) -> Outcome {
    let e = &eval["ensemble"];
    let (acc, rfc, cnn) = (e["accuracy"].as_f64(), e["rfc_only_accuracy"].as_f64(), e["cnn_only_accuracy"].as_f64());
    let (Some(acc), Some(rfc), Some(cnn)) = (acc, rfc, cnn) else {
        return Err(format!("incomplete ensemble report: {e}"));
    };
    check(
        acc >= rfc.max(cnn),
        format!("ensemble {acc:.4} (w_rfc {}) vs rfc {rfc:.4}, cnn {cnn:.4}", e["w_rfc"]),
    )
}

fn corruption_mix() -> Outcome {
    let corpus = corrupt_corpus(BUILTIN_PHRASES, 10_000, &ErrorMix::default(), 99).map_err(|e| e.to_string())?;
    let want = [
        (ErrorKind::Substitution, 0.35),
        (ErrorKind::Missing, 0.25),
        (ErrorKind::Extra, 0.20),
        (ErrorKind::WordOrder, 0.20),
    ];
    let mut seen = Vec::new();
    let mut ok = true;
    for (kind, p) in want {
        let share = corpus.iter().filter(|c| c.2 == kind).count() as f64 / corpus.len() as f64;
        ok &= (share - p).abs() <= 0.02;
        seen.push(format!("{kind} {share:.3}"));
    }
    check(ok, seen.join(", "))
}

fn offline_corrector() -> Outcome {
    let lexicon = Lexicon::builtin();
    let corpus = corrupt_corpus(BUILTIN_PHRASES, 500, &ErrorMix::default(), 500).map_err(|e| e.to_string())?;
    let pairs: Vec<(&str, &str)> = corpus.iter().map(|(bad, clean, _)| (bad.as_str(), clean.as_str())).collect();
    let m = evaluate_corrector(&lexicon, &pairs).map_err(|e| e.to_string())?;
    let toy = correct_offline("TOY BOK", &lexicon).map_err(|e| e.to_string())?;
    let thank = correct_offline("you thank", &lexicon).map_err(|e| e.to_string())?;
    check(
        lexicon.len() >= 200 && m.top3_accuracy >= 0.90 && toy.contains("TOY BOOK") && thank.contains("THANK YOU"),
        format!(
            "lexicon {} words, top-1 {:.3}, top-3 {:.3}; TOY BOK -> {:?}; you thank -> {:?}",
            lexicon.len(),
            m.top1_accuracy,
            m.top3_accuracy,
            toy.candidates,
            thank.candidates
        ),
    )
}

fn frame_counts() -> Outcome {
    let atlas = GestureAtlas::synthetic();
    let texts = ["A", "HI", "CAT", "SIGN BRIDG", "AB C"];
    for text in texts {
        let n = text.chars().count();
        let key = text_to_keyframes(text, &atlas).map_err(|e| e.to_string())?;
        let dup = duplicate_frames(&key).map_err(|e| e.to_string())?;
        let smooth = interpolate_sequence(&dup, InterpolationMethod::Flow).map_err(|e| e.to_string())?;
        if (key.len(), dup.len(), smooth.len()) != (n, 24 * n, 60 * n) {
            return Err(format!("{text:?}: {} / {} / {}", key.len(), dup.len(), smooth.len()));
        }
        for (j, frame) in smooth.frames.iter().enumerate() {
            let (i, fifths) = source_position(j);
            if fifths == 0 && *frame != dup.frames[i] {
                return Err(format!("{text:?}: aligned frame {j} differs from source {i}"));
            }
        }
        if n == 2 && dup.frames[30] != key.frames[1] {
            return Err("frame 30 of a two-letter text is not the second keyframe".into());
        }
    }
    check(true, format!("n, 24n, 60n for {} texts; aligned frames exact", texts.len()))
}

fn flow_sanity() -> Outcome {
    let mut r = rng::stream(5, "acceptance-flow", 0);
    let a = GrayImage::from_fn(96, 96, |_, _| r.random());
    let b = GrayImage::from_fn(96, 96, |x, y| a.get(x.saturating_sub(2), y));
    let flow = estimate_block_flow(&a, &b).map_err(|e| e.to_string())?;
    let (mut interior, mut hits) = (0, 0);
    for row in 1..flow.rows - 1 {
        for col in 1..flow.cols - 1 {
            interior += 1;
            hits += usize::from(flow.at(col, row) == (2, 0));
        }
    }
    let zero = estimate_flow(&a, &a, 0.5).map_err(|e| e.to_string())?;
    let ctx = extract_context(&a, &a).map_err(|e| e.to_string())?;
    let same = synthesize_frame(&a, &a, &zero, &ctx, 0.5).map_err(|e| e.to_string())?;
    check(
        hits as f64 >= 0.9 * interior as f64 && zero.is_zero() && same == a,
        format!("{hits}/{interior} interior blocks at (2, 0); identical input gives zero flow and identity"),
    )
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn translate_determinism(tmp: &Path) -> Outcome {
    let mut runs = Vec::new();
    for run in ["run-a", "run-b"] {
        let dir = tmp.join(run);
        let out = dir.to_str().unwrap();
        let mut common = vec!["--seed", "31", "--out", out];
        for kv in ["datagen.per_class=12", "rfc.n_estimators=25", "cnn.max_epochs=2"] {
            common.extend(["--set", kv]);
        }
        for cmd in ["datagen", "train-rfc", "train-cnn"] {
            let mut a = vec![cmd];
            a.extend(&common);
            cli_ok(&a)?;
        }
        let demo = dir.join("demo_landmarks.csv");
        let sil = dir.join("demo_silhouettes");
        let mut a = vec!["translate"];
        a.extend(&common);
        a.extend(["--input", demo.to_str().unwrap(), "--silhouettes", sil.to_str().unwrap()]);
        cli_ok(&a)?;
        runs.push(snapshot(&dir));
    }
    let (a, b) = (&runs[0], &runs[1]);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let frames = a.keys().filter(|k| k.starts_with("video/") && k.ends_with(".pgm")).count();
    check(
        a.len() == b.len() && differing.is_empty() && a.contains_key("rfc.model") && a.contains_key("translate.json"),
        format!("{} files compared ({frames} output frames), differing: {differing:?}", a.len()),
    )
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let desk = desk_scale_eval(&tmp.path().join("desk"));
    let from_desk = |f: &dyn Fn(&(Value, Value, Value)) -> Outcome| match &desk {
        Ok(reports) => f(reports),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("1 CNN layer shapes and parameter counts", cnn_structure()),
        ("2 backprop matches finite differences", gradients()),
        ("3 Otsu equals exhaustive search", otsu_oracle()),
        ("4 forest test accuracy >= 0.95", from_desk(&|r| rfc_accuracy(&r.0))),
        ("5 CNN validation accuracy >= 0.80 within 15 epochs", from_desk(&|r| cnn_accuracy(&r.1))),
        ("6 ensemble >= best single model", from_desk(&|r| ensemble_dominance(&r.2))),
        ("7 corruption mix within 0.02", corruption_mix()),
        ("8 offline corrector top-3 >= 0.90", offline_corrector()),
        ("9 frame count contracts", frame_counts()),
        ("10 flow sanity", flow_sanity()),
        ("11 translate is deterministic", translate_determinism(tmp.path())),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
