//! End-to-end leave-one-speaker-out experiments driven by a TOML config.
//!
//! A run loads or extracts utterance-level features once, then for every
//! held-out speaker selects features, optionally learns a projection, trains
//! the classifier and predicts on that speaker. Folds run in parallel, each
//! with its own seeds derived from the run seed.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::folds::{loso_folds, Fold, Manifest};
use super::metrics::{compute_metrics, EvalReport};
use super::synth::{synth_imbalanced, SynthConfig, SynthPreset};
use crate::elm::{helm_train, make_weights, ElmConfig, HelmConfig, SingleElm, TrainedModel, TrainingSet, WeightScheme};
use crate::error::{Error, Result};
use crate::extract::{ExtractConfig, Extractor};
use crate::features::{FeatureMatrix, FeatureTable};
use crate::functionals::{utterance_matrix, FunctionalSet};
use crate::linalg::{column_stats, standardize};
use crate::pqpso::{learn_projection, stratified_split, PqpsoConfig};
use crate::selection::{select, SelectionMethod};

/// Where the samples come from. Exactly one field must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Audio manifest (`path,speaker,label`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    /// Feature CSV, either utterance-level or frame-level with an `utterance` column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<SynthPreset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    pub method: SelectionMethod,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    pub d_out: usize,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub pqpso: PqpsoConfig,
}

fn default_validation_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Elm,
    #[default]
    Helm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub scheme: WeightScheme,
    pub elm: ElmConfig,
    pub helm: HelmConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Helm,
            scheme: WeightScheme::Proposed,
            elm: ElmConfig::default(),
            helm: HelmConfig::default(),
        }
    }
}

/// Full run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    #[serde(default)]
    pub extract: ExtractConfig,
    #[serde(default)]
    pub functionals: FunctionalSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionConfig>,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        let set = [d.manifest.is_some(), d.features.is_some(), d.preset.is_some(), d.synth.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if set != 1 {
            return Err(Error::BadConfig(
                "[data] needs exactly one of manifest, features, preset, synth".into(),
            ));
        }
        if let Some(s) = &self.selection {
            if s.k == 0 {
                return Err(Error::BadConfig("selection k must be at least 1".into()));
            }
        }
        if let Some(r) = &self.reduction {
            if r.d_out == 0 {
                return Err(Error::BadConfig("reduction d_out must be at least 1".into()));
            }
        }
        match self.classifier.kind {
            ClassifierKind::Elm => self.classifier.elm.validate(),
            ClassifierKind::Helm => self.classifier.helm.validate(),
        }
    }
}

/// Seeds of one fold, all derived from the run seed and the fold index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSeeds {
    pub classifier: u64,
    pub pqpso: u64,
    pub split: u64,
}

pub fn fold_seeds(run_seed: u64, fold: usize) -> FoldSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(fold as u64 + 1);
    FoldSeeds {
        classifier: rng.next_u64(),
        pqpso: rng.next_u64(),
        split: rng.next_u64(),
    }
}

/// Outcome of one fold.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: Fold,
    pub seeds: FoldSeeds,
    pub selected: Option<Vec<usize>>,
    pub predictions: Vec<usize>,
    pub report: EvalReport,
}

/// Pooled report plus per-fold results.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub pooled: EvalReport,
    pub folds: Vec<FoldResult>,
    pub features: FeatureMatrix,
}

impl RunResult {
    /// Unweighted mean of the per-fold WAR, UAR and G-mean.
    pub fn fold_average(&self) -> (f64, f64, f64) {
        let k = self.folds.len() as f64;
        let sum = |f: fn(&EvalReport) -> f64| self.folds.iter().map(|r| f(&r.report)).sum::<f64>() / k;
        (sum(|r| r.war), sum(|r| r.uar), sum(|r| r.gmean))
    }

    /// Report document with every float rounded to four decimals.
    pub fn report_json(&self) -> Result<String> {
        let (war, uar, gmean) = self.fold_average();
        let per_fold: Vec<Value> = self
            .folds
            .iter()
            .map(|f| {
                let mut v = serde_json::to_value(&f.report)?;
                v["speaker"] = Value::from(f.fold.speaker.clone());
                v["n_test"] = Value::from(f.fold.test.len());
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let mut doc = serde_json::to_value(&self.pooled)?;
        doc["aggregation"] = Value::from("pooled");
        doc["fold_average"] = serde_json::json!({ "war": war, "uar": uar, "gmean": gmean });
        doc["per_fold"] = Value::Array(per_fold);
        round_floats(&mut doc, 4);
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Rounds every non-integer number in a JSON tree to `places` decimals.
pub fn round_floats(v: &mut Value, places: i32) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().expect("f64 number");
            let s = 10f64.powi(places);
            *v = serde_json::Number::from_f64((f * s).round() / s).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(|x| round_floats(x, places)),
        Value::Object(o) => o.values_mut().for_each(|x| round_floats(x, places)),
        _ => {}
    }
}

/// Utterance-level features for the configured data source.
///
/// Relative paths are resolved against `base_dir`.
pub fn load_features(cfg: &RunConfig, base_dir: &Path) -> Result<FeatureMatrix> {
    let d = &cfg.data;
    let resolve = |p: &PathBuf| if p.is_relative() { base_dir.join(p) } else { p.clone() };
    if let Some(p) = &d.features {
        let table = FeatureTable::read(resolve(p))?;
        return match table.utterances {
            Some(_) => utterance_matrix(&table, &cfg.functionals).map_err(|e| e.in_stage("functionals")),
            None => Ok(table.matrix),
        };
    }
    if let Some(p) = &d.manifest {
        let manifest = Manifest::read(resolve(p))?;
        let extractor = Extractor::new(cfg.extract.clone()).map_err(|e| e.in_stage("extract"))?;
        let table = extractor.extract_manifest(&manifest).map_err(|e| e.in_stage("extract"))?;
        return utterance_matrix(&table, &cfg.functionals).map_err(|e| e.in_stage("functionals"));
    }
    if let Some(p) = d.preset {
        return p.generate(cfg.seed);
    }
    let synth = d.synth.as_ref().expect("validated");
    synth_imbalanced(synth)
}

/// Runs every fold on already loaded features.
pub fn run_on_features(cfg: &RunConfig, fm: FeatureMatrix) -> Result<RunResult> {
    cfg.validate()?;
    let folds = loso_folds(&fm.speakers)?;
    let results: Vec<FoldResult> = folds
        .into_par_iter()
        .enumerate()
        .map(|(i, fold)| run_fold(cfg, &fm, fold, fold_seeds(cfg.seed, i)))
        .collect::<Result<_>>()?;
    let n = fm.n_samples();
    let mut truth = Vec::with_capacity(n);
    let mut pred = Vec::with_capacity(n);
    for r in &results {
        truth.extend(r.fold.test.iter().map(|&i| fm.labels[i]));
        pred.extend_from_slice(&r.predictions);
    }
    let pooled = compute_metrics(&truth, &pred, &fm.class_names)?;
    Ok(RunResult {
        pooled,
        folds: results,
        features: fm,
    })
}

fn run_fold(cfg: &RunConfig, fm: &FeatureMatrix, fold: Fold, seeds: FoldSeeds) -> Result<FoldResult> {
    let mut train = fm.select_rows(&fold.train);
    let mut test = fm.select_rows(&fold.test);

    let mut selected = None;
    if let Some(sel) = &cfg.selection {
        let k = sel.k.min(train.n_features());
        let res = select(&train, k, sel.method).map_err(|e| e.in_stage("select"))?;
        train = train.select_columns(&res.selected_indices);
        test = test.select_columns(&res.selected_indices);
        selected = Some(res.selected_indices);
    }

    if let Some(red) = &cfg.reduction {
        let (mean, sd) = column_stats(&train.data);
        train = train.with_data(standardize(&train.data, &mean, &sd), train.feature_names.clone())?;
        test = test.with_data(standardize(&test.data, &mean, &sd), test.feature_names.clone())?;
        let (tr_idx, va_idx) =
            stratified_split(&train, red.validation_fraction, seeds.split).map_err(|e| e.in_stage("reduce"))?;
        let pcfg = PqpsoConfig {
            seed: seeds.pqpso,
            ..red.pqpso
        };
        let d_out = red.d_out.min(train.n_features());
        let proj = learn_projection(&train.select_rows(&tr_idx), &train.select_rows(&va_idx), d_out, &pcfg)
            .map_err(|e| e.in_stage("reduce"))?;
        let names: Vec<String> = (0..d_out).map(|j| format!("p{j}")).collect();
        train = train.with_data(&train.data * &proj.matrix, names.clone())?;
        test = test.with_data(&test.data * &proj.matrix, names)?;
    }

    let model = train_classifier(&train, &cfg.classifier, seeds.classifier).map_err(|e| e.in_stage("train"))?;
    let predictions = model.predict(&test.data).map_err(|e| e.in_stage("predict"))?.classes;
    let report = compute_metrics(&test.labels, &predictions, &fm.class_names)?;
    Ok(FoldResult {
        fold,
        seeds,
        selected,
        predictions,
        report,
    })
}

/// Trains the configured classifier with `seed` overriding the config seed.
pub fn train_classifier(train: &FeatureMatrix, cfg: &ClassifierConfig, seed: u64) -> Result<TrainedModel> {
    let ts = TrainingSet::from_features(train)?;
    match cfg.kind {
        ClassifierKind::Elm => {
            let weights = match cfg.scheme {
                WeightScheme::None => None,
                s => Some(make_weights(&ts.labels, ts.n_classes, s)?),
            };
            let ecfg = ElmConfig { seed, ..cfg.elm.clone() };
            Ok(TrainedModel::Elm(SingleElm::train(&ts, &ecfg, weights.as_deref())?))
        }
        ClassifierKind::Helm => {
            let hcfg = HelmConfig {
                seed,
                ..cfg.helm.clone()
            };
            Ok(TrainedModel::Helm(helm_train(&ts, &hcfg, cfg.scheme)?))
        }
    }
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub report: PathBuf,
    pub result: RunResult,
}

/// Runs a full experiment and writes its artifacts under `out_dir`:
/// `config.toml`, `seeds.json`, `predictions/fold_NN.csv` and `report.json`.
pub fn run_experiment(cfg: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<RunArtifacts> {
    cfg.validate()?;
    let fm = load_features(cfg, base_dir)?;
    let result = run_on_features(cfg, fm)?;

    fs::create_dir_all(out_dir.join("predictions"))?;
    fs::write(out_dir.join("config.toml"), cfg.to_toml()?)?;
    let seeds = serde_json::json!({
        "seed": cfg.seed,
        "folds": result.folds.iter().map(|f| serde_json::json!({
            "speaker": f.fold.speaker,
            "classifier": f.seeds.classifier,
            "pqpso": f.seeds.pqpso,
            "split": f.seeds.split,
        })).collect::<Vec<_>>(),
    });
    fs::write(out_dir.join("seeds.json"), serde_json::to_string_pretty(&seeds)?)?;
    let fm = &result.features;
    for (i, f) in result.folds.iter().enumerate() {
        let mut w = csv::Writer::from_path(out_dir.join("predictions").join(format!("fold_{i:02}.csv")))?;
        w.write_record(["index", "speaker", "truth", "pred"])?;
        for (&row, &p) in f.fold.test.iter().zip(&f.predictions) {
            w.write_record([
                row.to_string(),
                fm.speakers[row].clone(),
                fm.class_names[fm.labels[row]].clone(),
                fm.class_names[p].clone(),
            ])?;
        }
        w.flush()?;
    }
    let report = out_dir.join("report.json");
    fs::write(&report, result.report_json()?)?;
    Ok(RunArtifacts {
        dir: out_dir.to_path_buf(),
        report,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> RunConfig {
        RunConfig::from_toml(
            r#"
            seed = 3
            [data.synth]
            counts = [60, 20]
            dims = 6
            separation = 3.0
            speakers = 4
            [selection]
            method = "mrmr"
            k = 4
            [classifier]
            kind = "elm"
            scheme = "w1"
            elm = { hidden = 40, c = 1.0 }
            "#,
        )
        .unwrap()
    }

    #[test]
    fn fold_sizes_sum_to_dataset() {
        let cfg = small_cfg();
        let fm = load_features(&cfg, Path::new(".")).unwrap();
        let res = run_on_features(&cfg, fm).unwrap();
        assert_eq!(res.folds.len(), 4);
        let total: usize = res.folds.iter().map(|f| f.report.n).sum();
        assert_eq!(total, 80);
        assert_eq!(res.pooled.n, 80);
        assert!(res.pooled.war > 0.8);
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = small_cfg();
        let a = run_on_features(&cfg, load_features(&cfg, Path::new(".")).unwrap()).unwrap();
        let b = run_on_features(&cfg, load_features(&cfg, Path::new(".")).unwrap()).unwrap();
        assert_eq!(a.report_json().unwrap(), b.report_json().unwrap());
    }

    #[test]
    fn reduction_stage_runs() {
        let mut cfg = small_cfg();
        cfg.reduction = Some(ReductionConfig {
            d_out: 2,
            validation_fraction: 0.25,
            pqpso: PqpsoConfig {
                particles: 10,
                schedule: crate::pqpso::CeSchedule {
                    max_iters: 20,
                    ..Default::default()
                },
                ..Default::default()
            },
        });
        let res = run_on_features(&cfg, load_features(&cfg, Path::new(".")).unwrap()).unwrap();
        assert_eq!(res.pooled.n, 80);
    }

    #[test]
    fn config_must_name_one_source() {
        assert!(RunConfig::from_toml("seed = 1\n[data]\n").is_err());
        assert!(RunConfig::from_toml("seed = 1\n[data]\npreset = \"two-moons\"\nfeatures = \"x.csv\"\n").is_err());
        assert!(RunConfig::from_toml("seed = 1\n[data]\npreset = \"two-moons\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = small_cfg();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn rounding() {
        let mut v = serde_json::json!({"a": 0.123456, "b": [1, 2.00004], "c": "x"});
        round_floats(&mut v, 4);
        assert_eq!(v.to_string(), r#"{"a":0.1235,"b":[1,2.0],"c":"x"}"#);
    }

    #[test]
    fn failing_stage_is_named() {
        let mut cfg = small_cfg();
        cfg.data.synth.as_mut().unwrap().counts = vec![60, 1];
        // One speaker holds the only minority sample, so its fold trains without that class.
        let err = run_on_features(&cfg, load_features(&cfg, Path::new(".")).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "train", .. }), "{err}");
    }
}
