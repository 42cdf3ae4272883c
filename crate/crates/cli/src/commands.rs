//! Subcommand implementations.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use serkit_core::elm::{ElmConfig, HelmConfig, ModelFile, WeightScheme};
use serkit_core::eval::{
    compute_metrics, round_floats, run_experiment, train_classifier, ClassifierConfig, ClassifierKind, Manifest,
    RunConfig, SynthPreset,
};
use serkit_core::extract::{parse_kinds, ExtractConfig, Extractor};
use serkit_core::features::{write_table, FeatureTable};
use serkit_core::functionals::{utterance_matrix, FunctionalSet};
use serkit_core::linalg::{column_stats, from_rows, standardize, to_rows};
use serkit_core::pqpso::{learn_projection, stratified_split, PqpsoConfig};
use serkit_core::selection::{select, SelectionMethod};
use serkit_core::FeatureMatrix;

use crate::Command;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Extract {
            manifest,
            out,
            config,
            features,
        } => extract(&manifest, &out, config.as_deref(), features.as_deref()),
        Command::Functionals { input, set, out } => functionals(&input, &set, &out),
        Command::Select {
            method,
            k,
            input,
            out,
            indices,
            reuse,
        } => select_cmd(&method, k, &input, &out, indices.as_deref(), reuse.as_deref()),
        Command::Reduce {
            method,
            dout,
            seed,
            input,
            out,
            matrix,
            trace,
            apply,
            validation_fraction,
            particles,
            iterations,
        } => {
            if method != "pqpso" {
                bail!("unknown reduction method `{method}` (only `pqpso` is available)");
            }
            match apply {
                Some(p) => reduce_apply(&p, &input, &out),
                None => {
                    let dout = dout.ok_or_else(|| anyhow!("--dout is required unless --apply is given"))?;
                    let mut cfg = PqpsoConfig {
                        seed,
                        ..PqpsoConfig::default()
                    };
                    if let Some(p) = particles {
                        cfg.particles = p;
                    }
                    if let Some(t) = iterations {
                        cfg.schedule.max_iters = t;
                    }
                    reduce_learn(&input, &out, dout, validation_fraction, &cfg, matrix.as_deref(), trace.as_deref())
                }
            }
        }
        Command::Train {
            scheme,
            kind,
            cfg,
            seed,
            input,
            model,
        } => train(&scheme, &kind, cfg.as_deref(), seed, &input, &model),
        Command::Predict { model, input, out } => predict(&model, &input, &out),
        Command::Loso { config, out } => loso(&config, out),
        Command::Synth { preset, seed, out } => {
            let p: SynthPreset = preset.parse()?;
            p.generate(seed)?.write_csv(&out)?;
            Ok(())
        }
        Command::Metrics { truth, pred, out } => metrics(&truth, &pred, out.as_deref()),
    }
}

fn extract(manifest: &Path, out: &Path, config: Option<&Path>, features: Option<&str>) -> Result<()> {
    let mut cfg: ExtractConfig = match config {
        Some(p) => toml::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => ExtractConfig::default(),
    };
    if let Some(f) = features {
        cfg.kinds = parse_kinds(f)?;
    }
    let manifest = Manifest::read(manifest)?;
    let table = Extractor::new(cfg)?.extract_manifest(&manifest)?;
    write_table(fs::File::create(out)?, &table.matrix, table.utterances.as_deref())?;
    log::info!(
        "wrote {} frames x {} dims to {}",
        table.matrix.n_samples(),
        table.matrix.n_features(),
        out.display()
    );
    Ok(())
}

fn functionals(input: &Path, set: &str, out: &Path) -> Result<()> {
    let set: FunctionalSet = set.parse()?;
    let table = FeatureTable::read(input)?;
    utterance_matrix(&table, &set)?.write_csv(out)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct IndicesFile {
    method: SelectionMethod,
    selected_indices: Vec<usize>,
    selected_names: Vec<String>,
    scores: Vec<f64>,
}

fn select_cmd(
    method: &str,
    k: Option<usize>,
    input: &Path,
    out: &Path,
    indices: Option<&Path>,
    reuse: Option<&Path>,
) -> Result<()> {
    let fm = FeatureMatrix::read_csv(input)?;
    let idx = match reuse {
        Some(p) => {
            let f: IndicesFile = serde_json::from_str(&fs::read_to_string(p)?)?;
            for (&i, name) in f.selected_indices.iter().zip(&f.selected_names) {
                if fm.feature_names.get(i) != Some(name) {
                    bail!("feature {i} of {} is not `{name}` as recorded in {}", input.display(), p.display());
                }
            }
            f.selected_indices
        }
        None => {
            let method: SelectionMethod = match method.to_ascii_lowercase().as_str() {
                "mrmr" => SelectionMethod::Mrmr,
                "cfs" => SelectionMethod::Cfs,
                other => bail!("unknown selection method `{other}`"),
            };
            let k = k.ok_or_else(|| anyhow!("--k is required unless --use is given"))?;
            let res = select(&fm, k, method)?;
            if let Some(p) = indices {
                let f = IndicesFile {
                    method,
                    selected_names: res.selected_indices.iter().map(|&i| fm.feature_names[i].clone()).collect(),
                    selected_indices: res.selected_indices.clone(),
                    scores: res.scores.clone(),
                };
                fs::write(p, serde_json::to_string_pretty(&f)?)?;
            }
            res.selected_indices
        }
    };
    fm.select_columns(&idx).write_csv(out)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ProjectionFile {
    format_version: u32,
    input_features: Vec<String>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `dims x d_out`, row-major.
    matrix: Vec<Vec<f64>>,
    validation_cost: f64,
    seed: u64,
}

fn reduce_learn(
    input: &Path,
    out: &Path,
    dout: usize,
    validation_fraction: f64,
    cfg: &PqpsoConfig,
    matrix: Option<&Path>,
    trace: Option<&Path>,
) -> Result<()> {
    let fm = FeatureMatrix::read_csv(input)?;
    let (mean, scale) = column_stats(&fm.data);
    let z = fm.with_data(standardize(&fm.data, &mean, &scale), fm.feature_names.clone())?;
    let (tr, va) = stratified_split(&z, validation_fraction, cfg.seed)?;
    let res = learn_projection(&z.select_rows(&tr), &z.select_rows(&va), dout, cfg)?;
    log::info!("validation error {:.4} after {} iterations", res.cost, res.trace.len() - 1);
    let names = (0..dout).map(|j| format!("p{j}")).collect();
    z.with_data(&z.data * &res.matrix, names)?.write_csv(out)?;
    if let Some(p) = matrix {
        let f = ProjectionFile {
            format_version: 1,
            input_features: fm.feature_names.clone(),
            mean,
            scale,
            matrix: to_rows(&res.matrix),
            validation_cost: res.cost,
            seed: cfg.seed,
        };
        fs::write(p, serde_json::to_string_pretty(&f)?)?;
    }
    if let Some(p) = trace {
        let mut w = csv::Writer::from_path(p)?;
        for row in &res.trace {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn reduce_apply(projection: &Path, input: &Path, out: &Path) -> Result<()> {
    let f: ProjectionFile = serde_json::from_str(&fs::read_to_string(projection)?)?;
    let fm = FeatureMatrix::read_csv(input)?;
    if fm.feature_names != f.input_features {
        bail!(
            "{} has features that differ from the ones the projection was learned on",
            input.display()
        );
    }
    let p = from_rows(&f.matrix).ok_or_else(|| anyhow!("projection matrix is empty or ragged"))?;
    let names = (0..p.ncols()).map(|j| format!("p{j}")).collect();
    let z = standardize(&fm.data, &f.mean, &f.scale);
    fm.with_data(z * p, names)?.write_csv(out)?;
    Ok(())
}

fn train(scheme: &str, kind: &str, cfg: Option<&Path>, seed: Option<u64>, input: &Path, model: &Path) -> Result<()> {
    let scheme: WeightScheme = scheme.parse()?;
    let text = match cfg {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let mut classifier = ClassifierConfig {
        scheme,
        ..ClassifierConfig::default()
    };
    let config_seed = match kind.to_ascii_lowercase().as_str() {
        "helm" => {
            classifier.kind = ClassifierKind::Helm;
            classifier.helm = toml::from_str::<HelmConfig>(&text).context("parsing H-ELM config")?;
            classifier.helm.seed
        }
        "elm" => {
            classifier.kind = ClassifierKind::Elm;
            classifier.elm = toml::from_str::<ElmConfig>(&text).context("parsing ELM config")?;
            classifier.elm.seed
        }
        other => bail!("unknown classifier kind `{other}` (expected helm or elm)"),
    };
    let fm = FeatureMatrix::read_csv(input)?;
    let trained = train_classifier(&fm, &classifier, seed.unwrap_or(config_seed))?;
    ModelFile::new(trained, fm.class_names.clone()).save(model)?;
    Ok(())
}

fn predict(model: &Path, input: &Path, out: &Path) -> Result<()> {
    let file = ModelFile::load(model)?;
    let fm = FeatureMatrix::read_csv(input)?;
    let pred = file.model.predict(&fm.data)?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["index", "speaker", "truth", "pred"])?;
    for (i, &c) in pred.classes.iter().enumerate() {
        w.write_record([
            i.to_string(),
            fm.speakers[i].clone(),
            fm.class_names[fm.labels[i]].clone(),
            file.class_names[c].clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn loso(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = RunConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let out = out.unwrap_or_else(|| {
        let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
        base.join("runs").join(stem)
    });
    let art = run_experiment(&cfg, base, &out)?;
    let r = &art.result.pooled;
    println!(
        "{} folds, {} samples: WAR {:.4} UAR {:.4} G-mean {:.4} -> {}",
        art.result.folds.len(),
        r.n,
        r.war,
        r.uar,
        r.gmean,
        art.report.display()
    );
    Ok(())
}

fn read_column(path: &Path, names: &[&str]) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = names
        .iter()
        .find_map(|n| headers.iter().position(|h| h == *n))
        .ok_or_else(|| anyhow!("{} has none of the columns {names:?}", path.display()))?;
    rdr.records()
        .map(|r| Ok(r?.get(col).unwrap_or_default().to_string()))
        .collect()
}

fn metrics(truth: &Path, pred: &Path, out: Option<&Path>) -> Result<()> {
    let t = read_column(truth, &["truth", "label"])?;
    let p = read_column(pred, &["pred", "label"])?;
    let classes: Vec<String> = t.iter().chain(&p).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let index = |s: &String| classes.binary_search(s).expect("collected above");
    let ti: Vec<usize> = t.iter().map(index).collect();
    let pi: Vec<usize> = p.iter().map(index).collect();
    let report = compute_metrics(&ti, &pi, &classes)?;
    let mut v = serde_json::to_value(&report)?;
    round_floats(&mut v, 4);
    let text = serde_json::to_string_pretty(&v)?;
    match out {
        Some(o) => fs::write(o, text)?,
        None => println!("{text}"),
    }
    Ok(())
}
