//! Flat `key = value` configuration. Blank lines and lines starting with `#`
//! are ignored; later assignments win. Command-line flags are applied on top
//! as further assignments.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `seed` | required | root of every random stream |
//! | `output_dir` | `out` | where artifacts and reports go |
//! | `landmark_csv` | `<output_dir>/landmarks.csv` | labeled landmark dataset |
//! | `silhouette_dir` | `<output_dir>/silhouettes` | `<LABEL>/*.pgm` images |
//! | `atlas_dir` | synthetic atlas | `<LETTER>/*.pgm` gesture images |
//! | `rfc_model` | `<output_dir>/rfc.model` | forest model file |
//! | `cnn_model` | `<output_dir>/cnn.model` | CNN model file |
//! | `test_fraction` | `0.2` | stratified hold-out share |
//! | `datagen.per_class` | `100` | samples per class |
//! | `datagen.spread` | `0.05` | landmark cluster spread |
//! | `datagen.side` | `32` | silhouette side in pixels |
//! | `datagen.demo_text` | `HELLO WORLD` | text spelled by the demo input |
//! | `datagen.demo_hold` | `4` | frames per demo character |
//! | `rfc.n_estimators` | `200` | |
//! | `rfc.max_depth` | `20` | integer or `none` |
//! | `rfc.min_samples_split` | `5` | |
//! | `rfc.min_samples_leaf` | `2` | |
//! | `rfc.bootstrap` | `true` | |
//! | `rfc.max_features` | `sqrt` | integer or `sqrt` |
//! | `rfc.grid` | `false` | train with the best grid-search configuration |
//! | `cv_folds` | `5` | folds for grid search |
//! | `cnn.learning_rate` | `0.001` | |
//! | `cnn.batch_size` | `32` | |
//! | `cnn.max_epochs` | `100` | |
//! | `cnn.patience` | `5` | |
//! | `ensemble.w_rfc` | `0.5` | forest weight when both recognizers run |
//! | `ensemble.optimize` | `true` | `eval` searches the weight grid |
//! | `decode.debounce` | `3` | frames before a class takes effect |
//! | `corrector` | `offline` | `offline` or `remote` |
//! | `remote.endpoint` | | hosted corrector URL |
//! | `remote.token_env` | | environment variable holding the token |
//! | `remote.timeout_ms` | `10000` | |
//! | `remote.max_retries` | `2` | |
//! | `remote.backoff_ms` | `200` | |
//! | `remote.prompt_template` | built in | must contain `{input}` |
//! | `interpolation` | `flow` | `flow` or `crossfade` |
//! | `video.all_stages` | `false` | also write the 1 and 24 FPS sequences |
//! | `input_csv` | `<output_dir>/demo_landmarks.csv` | landmarks to translate |
//! | `input_silhouettes` | | optional frames for the CNN during translate |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use signbridge::cnn::TrainConfig;
use signbridge::correction::RemoteCorrectorConfig;
use signbridge::ensemble::StreamDecodeConfig;
use signbridge::forest::ForestHyperparams;
use signbridge::video::InterpolationMethod;

use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "seed",
    "output_dir",
    "landmark_csv",
    "silhouette_dir",
    "atlas_dir",
    "rfc_model",
    "cnn_model",
    "test_fraction",
    "datagen.per_class",
    "datagen.spread",
    "datagen.side",
    "datagen.demo_text",
    "datagen.demo_hold",
    "rfc.n_estimators",
    "rfc.max_depth",
    "rfc.min_samples_split",
    "rfc.min_samples_leaf",
    "rfc.bootstrap",
    "rfc.max_features",
    "rfc.grid",
    "cv_folds",
    "cnn.learning_rate",
    "cnn.batch_size",
    "cnn.max_epochs",
    "cnn.patience",
    "ensemble.w_rfc",
    "ensemble.optimize",
    "decode.debounce",
    "corrector",
    "remote.endpoint",
    "remote.token_env",
    "remote.timeout_ms",
    "remote.max_retries",
    "remote.backoff_ms",
    "remote.prompt_template",
    "interpolation",
    "video.all_stages",
    "input_csv",
    "input_silhouettes",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectorKind {
    Offline,
    Remote,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub landmark_csv: PathBuf,
    pub silhouette_dir: PathBuf,
    pub atlas_dir: Option<PathBuf>,
    pub rfc_model: PathBuf,
    pub cnn_model: PathBuf,
    pub test_fraction: f64,
    pub per_class: usize,
    pub spread: f64,
    pub side: usize,
    pub demo_text: String,
    pub demo_hold: usize,
    pub forest: ForestHyperparams,
    pub rfc_grid: bool,
    pub cv_folds: usize,
    pub cnn: TrainConfig,
    pub w_rfc: f64,
    pub optimize_ensemble: bool,
    pub decode: StreamDecodeConfig,
    pub corrector: CorrectorKind,
    pub remote: RemoteCorrectorConfig,
    pub interpolation: InterpolationMethod,
    pub all_stages: bool,
    pub input_csv: PathBuf,
    pub input_silhouettes: Option<PathBuf>,
}

/// Raw assignments in order of precedence.
#[derive(Clone, Debug, Default)]
pub struct Assignments(BTreeMap<String, String>);

impl Assignments {
    pub fn parse_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut a = Assignments::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key = value", path.display(), n + 1))
            })?;
            a.set(k.trim(), v.trim())
                .map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), n + 1)))?;
        }
        Ok(a)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !KEYS.contains(&key) {
            return Err(format!("unknown config key {key:?}"));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// `KEY=VALUE` from a `--set` flag.
    pub fn set_pair(&mut self, pair: &str) -> CliResult<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        self.set(k.trim(), v.trim()).map_err(CliError::Usage)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| CliError::Usage(format!("config key {key}: cannot parse {v:?}: {e}"))),
        }
    }

    fn optional_usize(&self, key: &str, default: Option<usize>, none_word: &str) -> CliResult<Option<usize>> {
        match self.get(key) {
            None => Ok(default),
            Some(v) if v == none_word => Ok(None),
            Some(_) => self.parse::<usize>(key, 0).map(Some),
        }
    }

    fn path(&self, key: &str, default: PathBuf) -> PathBuf {
        self.get(key).map_or(default, PathBuf::from)
    }

    pub fn resolve(&self) -> CliResult<PipelineConfig> {
        let seed = match self.get("seed") {
            Some(_) => self.parse("seed", 0u64)?,
            None => return Err(CliError::Usage("a seed is required (config key `seed` or --seed)".into())),
        };
        let output_dir = self.path("output_dir", PathBuf::from("out"));
        let base_forest = ForestHyperparams::default();
        let forest = ForestHyperparams {
            n_estimators: self.parse("rfc.n_estimators", base_forest.n_estimators)?,
            max_depth: self.optional_usize("rfc.max_depth", base_forest.max_depth, "none")?,
            min_samples_split: self.parse("rfc.min_samples_split", base_forest.min_samples_split)?,
            min_samples_leaf: self.parse("rfc.min_samples_leaf", base_forest.min_samples_leaf)?,
            bootstrap: self.parse("rfc.bootstrap", base_forest.bootstrap)?,
            max_features: self.optional_usize("rfc.max_features", None, "sqrt")?,
        };
        forest.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let base_cnn = TrainConfig::default();
        let cnn = TrainConfig {
            learning_rate: self.parse("cnn.learning_rate", base_cnn.learning_rate)?,
            batch_size: self.parse("cnn.batch_size", base_cnn.batch_size)?,
            max_epochs: self.parse("cnn.max_epochs", base_cnn.max_epochs)?,
            patience: self.parse("cnn.patience", base_cnn.patience)?,
            seed: signbridge::rng::substream(seed, "cnn-train"),
        };
        cnn.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let base_remote = RemoteCorrectorConfig::default();
        let remote = RemoteCorrectorConfig {
            endpoint: self.get("remote.endpoint").unwrap_or(&base_remote.endpoint).to_string(),
            token_env: self.get("remote.token_env").map(str::to_string),
            timeout_ms: self.parse("remote.timeout_ms", base_remote.timeout_ms)?,
            max_retries: self.parse("remote.max_retries", base_remote.max_retries)?,
            prompt_template: self
                .get("remote.prompt_template")
                .unwrap_or(&base_remote.prompt_template)
                .to_string(),
            backoff_ms: self.parse("remote.backoff_ms", base_remote.backoff_ms)?,
            max_in_flight: base_remote.max_in_flight,
        };
        let corrector = match self.get("corrector").unwrap_or("offline") {
            "offline" => CorrectorKind::Offline,
            "remote" => {
                remote.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                CorrectorKind::Remote
            }
            other => return Err(CliError::Usage(format!("corrector {other:?} is not offline or remote"))),
        };
        let test_fraction: f64 = self.parse("test_fraction", 0.2)?;
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(CliError::Usage(format!("test_fraction {test_fraction} must lie in (0, 1)")));
        }
        let w_rfc: f64 = self.parse("ensemble.w_rfc", 0.5)?;
        if !(0.0..=1.0).contains(&w_rfc) {
            return Err(CliError::Usage(format!("ensemble.w_rfc {w_rfc} must lie in [0, 1]")));
        }
        let debounce: usize = self.parse("decode.debounce", 3)?;
        if debounce == 0 {
            return Err(CliError::Usage("decode.debounce must be >= 1".into()));
        }
        let interpolation = self
            .parse("interpolation", InterpolationMethod::Flow)?;
        Ok(PipelineConfig {
            seed,
            landmark_csv: self.path("landmark_csv", output_dir.join("landmarks.csv")),
            silhouette_dir: self.path("silhouette_dir", output_dir.join("silhouettes")),
            atlas_dir: self.get("atlas_dir").map(PathBuf::from),
            rfc_model: self.path("rfc_model", output_dir.join("rfc.model")),
            cnn_model: self.path("cnn_model", output_dir.join("cnn.model")),
            test_fraction,
            per_class: self.parse("datagen.per_class", 100)?,
            spread: self.parse("datagen.spread", 0.05)?,
            side: self.parse("datagen.side", 32)?,
            demo_text: self.get("datagen.demo_text").unwrap_or("HELLO WORLD").to_string(),
            demo_hold: self.parse("datagen.demo_hold", 4)?,
            forest,
            rfc_grid: self.parse("rfc.grid", false)?,
            cv_folds: self.parse("cv_folds", 5)?,
            cnn,
            w_rfc,
            optimize_ensemble: self.parse("ensemble.optimize", true)?,
            decode: StreamDecodeConfig { debounce },
            corrector,
            remote,
            interpolation,
            all_stages: self.parse("video.all_stages", false)?,
            input_csv: self.path("input_csv", output_dir.join("demo_landmarks.csv")),
            input_silhouettes: self.get("input_silhouettes").map(PathBuf::from),
            output_dir,
        })
    }
}
