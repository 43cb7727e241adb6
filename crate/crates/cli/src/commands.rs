use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use rayon::prelude::*;

use topolayer_core::baseline::{cross_validate, vectorize_sample, SvmConfig};
use topolayer_core::check::{check_gradients, check_oracle, check_stability, CheckReport};
use topolayer_core::io::{self, fmt_sig, Manifest, ManifestEntry, SampleKind, SplitSpec};
use topolayer_core::metrics::{bottleneck, wasserstein};
use topolayer_core::nn::{
    evaluate, train_on_split, Checkpoint, Dataset, EpochMetrics, ModelConfig,
};
use topolayer_core::synth::synthetic_graphs;
use topolayer_core::Norm;

use crate::data::{self, input_error};
use crate::{
    BaselineArgs, CheckArgs, DiagramsArgs, DistArgs, EvalArgs, InputKind, SplitChoice, Suite,
    SynthArgs, TrainArgs,
};

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn diagrams(a: DiagramsArgs) -> Result<ExitCode> {
    create_dir(&a.out)?;
    let width = (a.directions.saturating_sub(1)).to_string().len().max(2);
    let written: Vec<usize> = a
        .inputs
        .par_iter()
        .map(|input| -> Result<usize> {
            let stem = data::sample_stem(input)?;
            let (diagrams, suffix): (Vec<_>, Box<dyn Fn(usize) -> String>) = match a.kind {
                InputKind::Graph => (
                    data::graph_diagrams(input)?,
                    Box::new(|k| format!("dim{k}")),
                ),
                InputKind::Image => (
                    data::image_diagrams(input, a.directions)?,
                    Box::new(move |k| format!("dir{k:0width$}")),
                ),
            };
            for (k, d) in diagrams.iter().enumerate() {
                io::write_diagram(&a.out.join(format!("{stem}_{}.json", suffix(k))), d)?;
            }
            Ok(diagrams.len())
        })
        .collect::<Result<_>>()?;
    println!(
        "wrote {} diagram files for {} inputs to {}",
        written.iter().sum::<usize>(),
        written.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn default_config(manifest: &Manifest) -> ModelConfig {
    let images = manifest.samples.iter().any(|s| s.kind == SampleKind::Image);
    if images {
        let count = manifest.directions.unwrap_or(data::DEFAULT_DIRECTIONS);
        ModelConfig::image_default(count, 16, 64)
    } else {
        ModelConfig::graph_default(16, 64)
    }
}

fn run_path(out: &Path, run: usize, runs: usize) -> PathBuf {
    if runs == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.run{run}.{ext}"),
        None => format!("{stem}.run{run}"),
    };
    out.with_file_name(name)
}

fn write_metrics(path: &Path, history: &[EpochMetrics]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["epoch", "lr", "train_loss", "test_acc"])?;
    for m in history {
        w.write_record([
            m.epoch.to_string(),
            m.lr.to_string(),
            m.train_loss.to_string(),
            m.test_acc.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn accuracy_text(acc: Option<f64>) -> String {
    acc.map_or_else(|| "n/a (empty test split)".into(), |a| fmt_sig(a, 12))
}

pub fn train(a: TrainArgs) -> Result<ExitCode> {
    if a.runs == 0 {
        return Err(input_error("--runs must be at least 1"));
    }
    let manifest = io::load_manifest(&a.manifest)?;
    let mut config = match &a.config {
        Some(path) => io::read_config(path)?,
        None => default_config(&manifest),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.train_fraction = manifest.split.train_fraction;
    config.validate()?;
    let dataset = Dataset::new(data::load_samples(&manifest)?)?;

    let mut accuracies = Vec::with_capacity(a.runs);
    for run in 0..a.runs {
        let mut c = config.clone();
        c.seed = config.seed.wrapping_add(run as u64);
        let split_seed = manifest.split.seed.wrapping_add(run as u64);
        let (train_idx, test_idx) =
            dataset.stratified_split(manifest.split.train_fraction, split_seed);
        let checkpoint = train_on_split(&c, &dataset, train_idx, test_idx)?;
        io::write_json(&run_path(&a.out, run, a.runs), &checkpoint)?;
        if let Some(metrics) = &a.metrics {
            write_metrics(&run_path(metrics, run, a.runs), &checkpoint.history)?;
        }
        println!(
            "run {run} (seed {}): test accuracy {}",
            c.seed,
            accuracy_text(checkpoint.test_accuracy)
        );
        accuracies.extend(checkpoint.test_accuracy);
    }
    if a.runs > 1 && !accuracies.is_empty() {
        let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
        println!(
            "mean test accuracy over {} runs: {}",
            accuracies.len(),
            fmt_sig(mean, 12)
        );
    }
    Ok(ExitCode::SUCCESS)
}

pub fn eval(a: EvalArgs) -> Result<ExitCode> {
    let checkpoint: Checkpoint = io::read_json(&a.checkpoint)?;
    let manifest = io::load_manifest(&a.manifest)?;
    let samples = data::load_samples(&manifest)?;
    let pick = |idx: &[usize]| -> Result<Vec<_>> {
        idx.iter()
            .map(|&i| {
                samples.get(i).cloned().ok_or_else(|| {
                    input_error(format!(
                        "checkpoint split refers to sample {i}, manifest has {}",
                        samples.len()
                    ))
                })
            })
            .collect()
    };
    let subset = match a.split {
        SplitChoice::All => samples.clone(),
        SplitChoice::Train => pick(&checkpoint.train_indices)?,
        SplitChoice::Test => pick(&checkpoint.test_indices)?,
    };
    let accuracy = evaluate(&checkpoint, &subset)?;
    println!(
        "accuracy {} on {} samples",
        fmt_sig(accuracy, 12),
        subset.len()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn baseline(a: BaselineArgs) -> Result<ExitCode> {
    if !a.labels.is_file() {
        return Err(input_error(format!(
            "label file {} not found",
            a.labels.display()
        )));
    }
    let labeled = data::load_labeled_diagrams(&a.diagrams_dir, &a.labels)?;
    let labels: Vec<usize> = labeled.iter().map(|(_, l)| *l).collect();
    let svm = SvmConfig {
        seed: a.seed,
        ..SvmConfig::default()
    };

    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(p) => {
            Box::new(fs::File::create(p).with_context(|| format!("writing {}", p.display()))?)
        }
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["n", "accuracy"])?;
    for &n in &a.n {
        let vectors = labeled
            .iter()
            .map(|(d, _)| vectorize_sample(d, n, a.essential_cap))
            .collect::<Result<Vec<_>, _>>()?;
        let acc = cross_validate(&vectors, &labels, a.folds, &svm)?;
        w.write_record([n.to_string(), fmt_sig(acc, 12)])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn dist(a: DistArgs) -> Result<ExitCode> {
    let q: Norm = a.q.parse()?;
    let d = io::read_diagram(&a.a)?;
    let e = io::read_diagram(&a.b)?;
    if d.dim() != e.dim() {
        return Err(input_error(format!(
            "diagrams have different dimensions ({} and {})",
            d.dim(),
            e.dim()
        )));
    }
    let value = match a.p.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => bottleneck(&d, &e, q),
        other => {
            let p: u32 = other.parse().ok().filter(|&p| p >= 1).ok_or_else(|| {
                input_error(format!(
                    "--p must be an integer >= 1 or 'inf', got '{}'",
                    a.p
                ))
            })?;
            wasserstein(&d, &e, p, q)?
        }
    };
    println!("{}", fmt_sig(value, 12));
    Ok(ExitCode::SUCCESS)
}

fn print_report(r: &CheckReport) {
    let worst = match r.suite.as_str() {
        "oracle" => String::new(),
        "gradients" => format!(", max relative error {:.3e}", r.worst),
        _ => format!(", max ratio to bound {:.4}", r.worst),
    };
    println!(
        "{}: {}/{} passed, {} failed{worst}",
        r.suite,
        r.passed,
        r.trials,
        r.trials - r.passed
    );
}

pub fn check(a: CheckArgs) -> Result<ExitCode> {
    let reports = match a.suite {
        Suite::Oracle => vec![check_oracle(a.trials, a.seed)?],
        Suite::Gradients => vec![check_gradients(a.trials, a.seed)],
        Suite::Stability => {
            let norms = match &a.q {
                Some(q) => vec![q.parse::<Norm>()?],
                None => vec![Norm::L(2), Norm::Infinity],
            };
            norms
                .into_iter()
                .map(|q| check_stability(a.trials, a.seed, q))
                .collect()
        }
    };
    reports.iter().for_each(print_report);
    let failures: Vec<&serde_json::Value> = reports.iter().flat_map(|r| &r.failures).collect();
    if failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    let replay = serde_json::json!({ "seed": a.seed, "failures": failures });
    match &a.failures {
        Some(path) => {
            io::write_json(path, &replay)?;
            println!("failing instances written to {}", path.display());
        }
        None => println!("{}", io::to_canonical_json(&replay)?),
    }
    Ok(ExitCode::FAILURE)
}

pub fn synth(a: SynthArgs) -> Result<ExitCode> {
    let graphs_dir = a.out.join("graphs");
    create_dir(&graphs_dir)?;
    let graphs = synthetic_graphs(a.count, a.seed);
    let width = a.count.saturating_sub(1).to_string().len().max(3);
    let mut entries = Vec::with_capacity(graphs.len());
    let mut labels = csv::Writer::from_path(a.out.join("labels.csv"))?;
    labels.write_record(["sample", "label"])?;
    for (i, (g, label)) in graphs.iter().enumerate() {
        let name = format!("g{i:0width$}");
        let rel = PathBuf::from("graphs").join(format!("{name}.txt"));
        io::write_text(&a.out.join(&rel), &io::format_edge_list(g))?;
        labels.write_record([name, label.to_string()])?;
        entries.push(ManifestEntry {
            path: rel,
            kind: SampleKind::Graph,
            label: *label,
            diagrams: vec![],
        });
    }
    labels.flush()?;
    let manifest = Manifest {
        samples: entries,
        split: SplitSpec {
            train_fraction: 0.9,
            seed: a.seed,
        },
        directions: None,
    };
    io::write_json(&a.out.join("manifest.json"), &manifest)?;
    println!(
        "wrote {} graphs, manifest.json and labels.csv to {}",
        graphs.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
