//! Acceptance suite. Each criterion prints one `PASS` or `FAIL` line; the
//! binary exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use serkit_core::elm::{
    helm_train_with_diagnostics, make_weights, one_hot, solve_output_weights, Branch, ElmConfig, HelmConfig,
    SingleElm, TrainingSet, WeightScheme,
};
use serkit_core::eval::{compute_metrics, imbalance_ratio, two_moons, SynthPreset};
use serkit_core::functionals::{apply_to_rows, Functional, FunctionalSet};
use serkit_core::gabor::check_default_dims;
use serkit_core::linalg::rel_frobenius;
use serkit_core::pqpso::{pqpso_minimize, PqpsoConfig, StopReason, TruncatedLaplace};
use serkit_core::selection::mrmr_select;
use serkit_core::FeatureMatrix;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    check(t < limit, format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn branch_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for (n, l) in [(30, 80), (120, 40)] {
        for _ in 0..50 {
            let h = DMatrix::from_fn(n, l, |_, _| rng.random_range(-1.0..1.0));
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let t = one_hot(&labels, 3);
            let c = 10f64.powf(rng.random_range(-2.0..2.0));
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
            for weights in [None, Some(w.as_slice())] {
                let p = solve_output_weights(&h, &t, weights, c, Branch::Primal);
                let d = solve_output_weights(&h, &t, weights, c, Branch::Dual);
                worst = worst.max(rel_frobenius(&p, &d));
            }
        }
    }
    check(worst < 1e-8, format!("worst relative difference {worst:.3e}"))?;
    let t = within(start, Duration::from_secs(5))?;
    Ok(format!("worst relative difference {worst:.2e} over 200 solves in {t:.2?}"))
}

fn weight_table() -> Outcome {
    let cases: [(&[usize], WeightScheme, [f64; 2]); 5] = [
        (&[2, 1], WeightScheme::W1, [0.5, 1.0]),
        (&[4, 1], WeightScheme::W2, [0.1545, 1.0]),
        (&[4, 1], WeightScheme::W3 { d: 2.0 }, [0.25, 0.5]),
        (&[3, 1], WeightScheme::W4, [0.25, 0.75]),
        (&[3, 1], WeightScheme::Proposed, [1.0 / 3.0, 3.0 / 7.0]),
    ];
    let labels_for = |counts: &[usize]| -> Vec<usize> {
        counts.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat_n(c, k)).collect()
    };
    for (counts, scheme, want) in cases {
        let labels = labels_for(counts);
        let w = make_weights(&labels, 2, scheme).map_err(|e| e.to_string())?;
        for (i, &l) in labels.iter().enumerate() {
            check(
                (w[i] - want[l]).abs() <= 1e-12,
                format!("{scheme} on {counts:?}: sample {i} got {} want {}", w[i], want[l]),
            )?;
        }
    }
    let balanced = labels_for(&[7, 7]);
    for scheme in WeightScheme::ALL_WEIGHTED.into_iter().chain([WeightScheme::None]) {
        let w = make_weights(&balanced, 2, scheme).map_err(|e| e.to_string())?;
        check(w.iter().all(|&v| (v - w[0]).abs() <= 1e-12), format!("{scheme} not uniform on balanced data"))?;
    }
    Ok("five worked examples and the balanced case match to 1e-12".into())
}

fn ir_constants() -> Outcome {
    let rows: [(&str, &[usize], f64); 3] = [
        ("EMODB", &[127, 46, 69, 71, 62, 81, 79], 0.3622),
        ("SAVEE", &[60, 60, 60, 60, 60, 60, 120], 0.5),
        ("IEMOCAP", &[1103, 1636, 1084, 1708], 0.6347),
    ];
    let mut got = Vec::new();
    for (name, counts, want) in rows {
        let ir = imbalance_ratio(counts).map_err(|e| e.to_string())?;
        check(
            (ir * 1e4).round() == (want * 1e4_f64).round(),
            format!("{name}: {ir:.6} does not round to {want}"),
        )?;
        got.push(format!("{name} {ir:.4}"));
    }
    Ok(got.join(", "))
}

/// Adaptive Simpson quadrature.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

/// Integral of `f` over `[a, b]`, split at the kink `k`.
fn integrate_kinked<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, k: f64) -> f64 {
    let k = k.clamp(a, b);
    simpson(f, a, k, 1e-13) + simpson(f, k, b, 1e-13)
}

fn tld_sampler() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 100_000;
    let mut worst_ks: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    for set in 0..5 {
        let mu: f64 = rng.random_range(-3.0..3.0);
        let sigma: f64 = rng.random_range(0.1..3.0);
        let lower = mu - rng.random_range(0.05..4.0);
        let upper = mu + rng.random_range(0.05..4.0);
        let d = TruncatedLaplace::new(mu, sigma, lower, upper).map_err(|e| e.to_string())?;

        let kernel = |x: f64| (-(x - mu).abs() / sigma).exp();
        let total = integrate_kinked(&kernel, lower, upper, mu);
        let oracle_cdf = |x: f64| integrate_kinked(&kernel, lower, x, mu) / total;

        let mass = integrate_kinked(&|x| d.pdf(x), lower, upper, mu);
        worst_mass = worst_mass.max((mass - 1.0).abs());
        check((mass - 1.0).abs() <= 1e-6, format!("set {set}: pdf integrates to {mass}"))?;

        let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let outside = xs.iter().filter(|&&x| !(lower..=upper).contains(&x)).count();
        check(outside == 0, format!("set {set}: {outside} samples outside [{lower}, {upper}]"))?;
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = oracle_cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        worst_ks = worst_ks.max(ks);
        check(ks < 0.01, format!("set {set} (mu {mu:.3}, sigma {sigma:.3}): KS {ks:.4}"))?;
    }
    Ok(format!("worst KS {worst_ks:.4}, worst |mass - 1| {worst_mass:.1e}, no samples out of bounds"))
}

fn pqpso_sphere() -> Outcome {
    let start = Instant::now();
    let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let mut hits = 0;
    let mut costs = Vec::new();
    for seed in 0..10 {
        let cfg = PqpsoConfig {
            seed,
            ..PqpsoConfig::default()
        };
        let res = pqpso_minimize(sphere, 10, -5.0, 5.0, &cfg).map_err(|e| e.to_string())?;
        check(
            res.trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost),
            format!("seed {seed}: best-so-far trace increases"),
        )?;
        if res.best_cost < 1e-6 {
            hits += 1;
        }
        costs.push(res.best_cost);
    }
    let t = within(start, Duration::from_secs(30))?;
    check(hits >= 9, format!("only {hits}/10 seeds below 1e-6: {costs:.2?}"))?;

    let cfg = PqpsoConfig::default();
    let flat = pqpso_minimize(|_| 1.5, 10, -5.0, 5.0, &cfg).map_err(|e| e.to_string())?;
    check(
        flat.stop == StopReason::Stagnation && flat.iterations() == cfg.schedule.max_try,
        format!("constant objective ran {} iterations ({:?})", flat.iterations(), flat.stop),
    )?;
    let worst = costs.iter().copied().fold(0.0, f64::max);
    Ok(format!("{hits}/10 seeds below 1e-6 (worst {worst:.1e}) in {t:.2?}; constant objective stops after {}", cfg.schedule.max_try))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn imbalance_benefit() -> Outcome {
    let start = Instant::now();
    let schemes = [
        WeightScheme::None,
        WeightScheme::W1,
        WeightScheme::W2,
        WeightScheme::W3 { d: 2.0 },
        WeightScheme::W4,
        WeightScheme::Proposed,
    ];
    let mut gmean = vec![Vec::new(); schemes.len()];
    let mut war = vec![Vec::new(); schemes.len()];
    for seed in 0..20u64 {
        let train = SynthPreset::Imbalanced10to1.generate(2 * seed).map_err(|e| e.to_string())?;
        let test = SynthPreset::Imbalanced10to1.generate(2 * seed + 1).map_err(|e| e.to_string())?;
        let ts = TrainingSet::from_features(&train).map_err(|e| e.to_string())?;
        let cfg = ElmConfig {
            hidden: 500,
            c: 1.0,
            seed,
            ..ElmConfig::default()
        };
        for (k, &scheme) in schemes.iter().enumerate() {
            let w = match scheme {
                WeightScheme::None => None,
                s => Some(make_weights(&ts.labels, ts.n_classes, s).map_err(|e| e.to_string())?),
            };
            let model = SingleElm::train(&ts, &cfg, w.as_deref()).map_err(|e| e.to_string())?;
            let pred = model.predict(&test.data).map_err(|e| e.to_string())?;
            let r = compute_metrics(&test.labels, &pred.classes, &test.class_names).map_err(|e| e.to_string())?;
            gmean[k].push(r.gmean);
            war[k].push(r.war);
        }
    }
    let g: Vec<f64> = gmean.into_iter().map(median).collect();
    let a: Vec<f64> = war.into_iter().map(median).collect();
    let gain = g[5] - g[0];
    let drops: Vec<f64> = a.iter().skip(1).map(|w| a[0] - w).collect();
    let max_drop = drops.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t = within(start, Duration::from_secs(120))?;
    check(gain >= 0.05, format!("G-mean gain {gain:.4} (unweighted {:.4}, proposed {:.4})", g[0], g[5]))?;
    check(max_drop <= 0.02, format!("largest median WAR drop {max_drop:.4}"))?;
    Ok(format!(
        "median G-mean {:.4} -> {:.4} (gain {gain:.4}), largest WAR drop {max_drop:.4}, {t:.2?}",
        g[0], g[5]
    ))
}

fn helm_two_moons() -> Outcome {
    let start = Instant::now();
    let train = two_moons(2000, 0.15, 10, 11).map_err(|e| e.to_string())?;
    let test = two_moons(2000, 0.15, 10, 12).map_err(|e| e.to_string())?;
    let ts = TrainingSet::from_features(&train).map_err(|e| e.to_string())?;
    // The data are balanced, so no weighting. Weighted schemes scale every
    // sample by roughly 1/N_c, which acts like dividing C by the class size.
    let cfg = HelmConfig::default();
    check(cfg.sparse_sizes == vec![100, 100] && cfg.proj_size == 500, "desk config is not [100,100]+500")?;
    let (model, diag) = helm_train_with_diagnostics(&ts, &cfg, WeightScheme::None).map_err(|e| e.to_string())?;
    let pred = model.predict(&test.data).map_err(|e| e.to_string())?;
    let acc = pred.classes.iter().zip(&test.labels).filter(|(p, t)| p == t).count() as f64 / test.n_samples() as f64;
    let resid = model.orthonormality_residual();
    let t = within(start, Duration::from_secs(30))?;
    check(acc >= 0.95, format!("test accuracy {acc:.4}"))?;
    check(resid < 1e-10, format!("orthonormality residual {resid:.2e}"))?;
    for (i, obj) in diag.fista_objectives.iter().enumerate() {
        check(
            obj.windows(2).all(|w| w[1] <= w[0]),
            format!("layer {i}: FISTA objective increases"),
        )?;
    }
    Ok(format!(
        "accuracy {acc:.4}, residual {resid:.1e}, {} monotone FISTA traces, {t:.2?}",
        diag.fista_objectives.len()
    ))
}

fn feature_dims() -> Outcome {
    let got = check_default_dims().map_err(|e| e.to_string())?;
    check(got == (41, 455, 1020), format!("got {got:?}"))?;
    Ok(format!("{} GBFB filters, {} GBFB dims, {} SGBFB dims", got.0, got.1, got.2))
}

/// Straightforward reference implementations, written independently of the library.
fn reference(f: Functional, x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut sum = 0.0;
    for v in x {
        sum += v;
    }
    let m = sum / n;
    let central = |k: i32| x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / n;
    let sd = (central(2) * n / (n - 1.0)).sqrt();
    match f {
        Functional::Mean => m,
        Functional::QuadraticMean => (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
        Functional::HarmonicMean => n / x.iter().map(|v| v.recip()).sum::<f64>(),
        Functional::GeometricMean => x.iter().map(|v| v.ln() / n).sum::<f64>().exp(),
        Functional::Std => sd,
        Functional::Skewness => central(3) / sd.powi(3),
        Functional::Kurtosis => central(4) / sd.powi(4),
        Functional::Percentile(p) => {
            let need = ((p * n / 100.0).floor() as usize).max(1);
            // Smallest value with at least `need` values at or below it.
            *x.iter()
                .filter(|&&c| x.iter().filter(|&&v| v <= c).count() >= need)
                .min_by(|a, b| a.total_cmp(b))
                .unwrap()
        }
        Functional::ZeroCrossing => {
            let changes = x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
            changes as f64 / n
        }
    }
}

fn functionals_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let all = [
        Functional::Mean,
        Functional::QuadraticMean,
        Functional::HarmonicMean,
        Functional::GeometricMean,
        Functional::Std,
        Functional::Skewness,
        Functional::Kurtosis,
        Functional::Percentile(1.0),
        Functional::Percentile(25.0),
        Functional::Percentile(50.0),
        Functional::Percentile(99.0),
        Functional::ZeroCrossing,
    ];
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let len = rng.random_range(2..200);
        let positive = trial % 2 == 0;
        let x: Vec<f64> = (0..len)
            .map(|_| {
                let v: f64 = rng.random_range(-5.0..5.0);
                if positive {
                    v.abs() + 0.01
                } else {
                    v
                }
            })
            .collect();
        for f in all {
            if !positive && matches!(f, Functional::HarmonicMean | Functional::GeometricMean) {
                continue;
            }
            let got = f.apply(&x).map_err(|e| e.to_string())?;
            let want = reference(f, &x);
            let err = (got - want).abs() / want.abs().max(1.0);
            worst = worst.max(err);
            check(err <= 1e-12, format!("{f} on trial {trial}: {got} vs {want}"))?;
        }
    }
    let frames = DMatrix::from_fn(1715, 40, |_, _| rng.random_range(-1.0..1.0));
    let out = apply_to_rows(&frames, &FunctionalSet::default()).map_err(|e| e.to_string())?;
    check(out.len() == 6860, format!("1715-dim frames gave {} dims", out.len()))?;
    Ok(format!("worst scaled error {worst:.1e} over 1000 vectors; 1715 dims -> {}", out.len()))
}

/// The mRMR sanity set: 400 samples over 4 classes. Features 0 and 1 each
/// carry one bit of the class (plus noise), 2 and 3 are exact copies of 0 and
/// 1, and 4..12 are pure noise.
fn mrmr_set(seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 400;
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
    let mut data = DMatrix::zeros(n, 12);
    for (i, &y) in labels.iter().enumerate() {
        for j in 0..12 {
            let e: f64 = StandardNormal.sample(&mut rng);
            data[(i, j)] = match j {
                0 => 2.0 * (y & 1) as f64 + 0.5 * e,
                1 => 2.0 * (y >> 1) as f64 + 0.5 * e,
                _ => e,
            };
        }
        data[(i, 2)] = data[(i, 0)];
        data[(i, 3)] = data[(i, 1)];
    }
    let names = (0..12).map(|j| format!("f{j}")).collect();
    let speakers = vec!["s".to_string(); n];
    let classes = (0..4).map(|c| format!("c{c}")).collect();
    FeatureMatrix::new(data, names, speakers, labels, classes).unwrap()
}

fn mrmr_sanity() -> Outcome {
    let mut good = 0;
    let mut misses = Vec::new();
    for seed in 0..20 {
        let picks = mrmr_select(&mrmr_set(seed), 3).map_err(|e| e.to_string())?.selected_indices;
        if picks.contains(&0) && picks.contains(&1) && !picks.contains(&2) && !picks.contains(&3) {
            good += 1;
        } else {
            misses.push(format!("seed {seed}: {picks:?}"));
        }
    }
    check(good >= 18, format!("only {good}/20 seeds: {}", misses.join("; ")))?;
    Ok(format!("{good}/20 seeds pick both informative features and no duplicate"))
}

fn serkit(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_serkit"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(
        out.status.success(),
        format!("serkit {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)),
    )
}

fn same_bytes(a: &Path, b: &Path) -> Result<(), String> {
    let x = std::fs::read(a).map_err(|e| format!("{}: {e}", a.display()))?;
    let y = std::fs::read(b).map_err(|e| format!("{}: {e}", b.display()))?;
    check(x == y, format!("{} and {} differ", a.display(), b.display()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let config = d.join("run.toml");
    std::fs::write(
        &config,
        r#"
seed = 5

[data.synth]
counts = [90, 30]
dims = 8
separation = 2.5
speakers = 4

[selection]
method = "mrmr"
k = 5

[reduction]
d_out = 3
pqpso = { particles = 10, schedule = { max_iters = 20 } }

[classifier]
kind = "helm"
scheme = "proposed"
helm = { sparse_sizes = [20, 20], proj_size = 40 }
"#,
    )
    .map_err(|e| e.to_string())?;
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let (r1, r2) = (d.join("r1"), d.join("r2"));
    for r in [&r1, &r2] {
        serkit(&["loso", "--config", &s(&config), "--out", &s(r)])?;
    }
    let mut compared = 0;
    for name in ["report.json", "seeds.json", "config.toml"] {
        same_bytes(&r1.join(name), &r2.join(name))?;
        compared += 1;
    }
    for entry in std::fs::read_dir(r1.join("predictions")).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        same_bytes(&r1.join("predictions").join(&name), &r2.join("predictions").join(&name))?;
        compared += 1;
    }

    let data = d.join("data.csv");
    serkit(&["synth", "--preset", "imbalanced10to1", "--seed", "3", "--out", &s(&data)])?;
    for (i, scheme) in ["proposed", "proposed"].iter().enumerate() {
        serkit(&[
            "train", "--kind", "elm", "--scheme", scheme, "--seed", "2", "--in", &s(&data), "--model",
            &s(&d.join(format!("m{i}.json"))),
        ])?;
        serkit(&[
            "predict", "--model", &s(&d.join(format!("m{i}.json"))), "--in", &s(&data), "--out",
            &s(&d.join(format!("p{i}.csv"))),
        ])?;
        serkit(&[
            "metrics", "--truth", &s(&d.join(format!("p{i}.csv"))), "--pred", &s(&d.join(format!("p{i}.csv"))),
            "--out", &s(&d.join(format!("q{i}.json"))),
        ])?;
    }
    for stem in ["m", "p", "q"] {
        let ext = if stem == "p" { "csv" } else { "json" };
        same_bytes(&d.join(format!("{stem}0.{ext}")), &d.join(format!("{stem}1.{ext}")))?;
        compared += 1;
    }
    Ok(format!("{compared} output files identical across repeated runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("closed-form branch identity", branch_identity),
        ("weight-scheme table", weight_table),
        ("IR constants", ir_constants),
        ("TLD sampler", tld_sampler),
        ("pQPSO sphere", pqpso_sphere),
        ("imbalance benefit", imbalance_benefit),
        ("H-ELM two moons", helm_two_moons),
        ("feature dimensions", feature_dims),
        ("functionals oracle", functionals_oracle),
        ("mRMR sanity", mrmr_sanity),
        ("CLI determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str()) || id.ends_with(p.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(msg) => println!("PASS {id} ({name}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id} ({name}): {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
