use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polyrx::budget_table::{BudgetQuery, BudgetReport};
use polyrx::config::{CatalogKind, ExperimentSpec};
use polyrx::dataset::Dataset;
use polyrx::experiment::{evaluate, gen_dataset, simulate, train_on, Classifier};
use polyrx::{report_io, weights};
use polyrx_core::rfnet::FixedFormat;

#[derive(Parser)]
#[command(name = "polyrx", version, about = "Polymorphic receiver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a labeled I/Q dataset.
    GenDataset {
        #[command(flatten)]
        common: Common,
    },
    /// Train a float model on a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset base path (without `.iq` / `.json`).
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Convert float weights to fixed point.
    Quantize {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value = "fixed(32,10)")]
        format: FixedFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy and confusion matrix of a weight file.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Second weight file to measure argmax agreement against.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: Split,
    },
    /// End-to-end throughput of the receiver against the oracle.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Model weights; needed unless the classifier is a stub.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "model")]
        classifier: ClassifierKind,
        /// Report only the oracle columns.
        #[arg(long)]
        oracle_only: bool,
    },
    /// Real-time budget table.
    Budget(BudgetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Test,
    Train,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierKind {
    Model,
    Perfect,
    AlwaysWrong,
}

#[derive(Args)]
struct Common {
    /// TOML experiment spec; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    catalog: Option<CatalogKind>,
    #[arg(long)]
    sps: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    nlos: bool,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    buffer_samples: Option<usize>,
    #[arg(long)]
    switch_time: Option<f64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    switches: Option<usize>,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(p) => ExperimentSpec::load(p)?,
            None => ExperimentSpec::default(),
        };
        if self.seed.is_some() {
            spec.seed = self.seed;
        }
        if let Some(k) = self.catalog {
            spec.catalog.kind = k;
        }
        if let Some(v) = self.sps {
            spec.catalog.samples_per_symbol = v;
        }
        if self.snr_db.is_some() {
            spec.channel.snr_db = self.snr_db;
        }
        spec.channel.nlos |= self.nlos;
        if let Some(v) = self.per_class {
            spec.dataset.per_class = v;
        }
        if let Some(v) = self.epochs {
            spec.train.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            spec.train.learning_rate = v;
        }
        if let Some(v) = self.buffer_samples {
            spec.run.buffer_samples = v;
        }
        if let Some(v) = self.switch_time {
            spec.run.switch_time_s = v;
        }
        if let Some(v) = self.seeds {
            spec.run.seeds = v;
        }
        if let Some(v) = self.switches {
            spec.run.switches = v;
        }
        spec.seed = Some(spec.resolved_seed()?);
        Ok(spec)
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 5e6)]
    sample_rate: f64,
    /// Defaults to the smallest feasible buffer for the summed latencies.
    #[arg(long)]
    buffer_samples: Option<u64>,
    #[arg(long, default_value_t = 0.016)]
    t_cn: f64,
    #[arg(long, default_value_t = 0.0)]
    t_buf: f64,
    #[arg(long, default_value_t = 0.0)]
    t_in: f64,
    #[arg(long, default_value_t = 0.0)]
    t_out: f64,
    /// Defaults to the shortest switch time the buffer allows.
    #[arg(long)]
    switch_time: Option<f64>,
    #[arg(long)]
    json: bool,
    /// Also write `budget.json` and `budget.txt` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn budget(a: &BudgetArgs) -> Result<bool> {
    let report = BudgetReport::new(&BudgetQuery {
        sample_rate_hz: a.sample_rate,
        buffer_samples: a.buffer_samples,
        t_buf_s: a.t_buf,
        t_in_s: a.t_in,
        t_cn_s: a.t_cn,
        t_out_s: a.t_out,
        switch_time_s: a.switch_time,
    })?;
    let json = report.json()?;
    let table = report.table();
    print!("{}", if a.json { &json } else { &table });
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("budget.json"), &json).with_context(|| format!("writing {}", dir.display()))?;
        fs::write(dir.join("budget.txt"), &table).with_context(|| format!("writing {}", dir.display()))?;
    }
    Ok(report.feasible)
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenDataset { common } => {
            let spec = common.spec()?;
            let data = gen_dataset(&spec, spec.seed.unwrap_or(0))?;
            let out = common.out_dir()?;
            data.save(&out.join("dataset"))?;
            write(out.join("spec.toml"), &spec.to_toml()?)?;
            eprintln!("wrote {} windows of {} samples", data.len(), data.window_len());
        }
        Command::Train { common, dataset } => {
            let spec = common.spec()?;
            let catalog = spec.validate()?;
            let data = Dataset::load(&dataset)?;
            ensure!(
                data.n_classes() == catalog.len(),
                "dataset has {} classes, spec catalog has {}",
                data.n_classes(),
                catalog.len()
            );
            let t = train_on(&spec, &data, spec.seed.unwrap_or(0))?;
            let out = common.out_dir()?;
            weights::save(&out.join("weights.bin"), &t.model, &data.meta.class_names)?;
            let mut csv = String::from("epoch,loss\n");
            for (i, l) in t.loss_history.iter().enumerate() {
                csv += &format!("{},{}\n", i + 1, l);
            }
            write(out.join("loss_history.csv"), &csv)?;
            let metrics = serde_json::json!({
                "train_accuracy": t.train_accuracy,
                "test_accuracy": t.test_accuracy,
                "n_train": t.n_train,
                "n_test": t.n_test,
                "parameters": t.model.arch.param_count(),
            });
            write(
                out.join("metrics.json"),
                &(serde_json::to_string_pretty(&metrics)? + "\n"),
            )?;
            write(out.join("spec.toml"), &spec.to_toml()?)?;
            eprintln!("test accuracy {:.4}", t.test_accuracy);
        }
        Command::Quantize {
            weights: input,
            format,
            out,
        } => {
            let w = weights::load(&input)?;
            let q = w.model.quantized(format)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            weights::save(&out.join("weights_fixed.bin"), &q, &w.class_names)?;
        }
        Command::Eval {
            common,
            weights: path,
            dataset,
            reference,
            split,
        } => {
            let spec = common.spec()?;
            let w = weights::load(&path)?;
            let r = reference.as_deref().map(weights::load).transpose()?;
            let data = Dataset::load(&dataset)?;
            let (train, test) = data.split(spec.dataset.test_fraction, spec.seed.unwrap_or(0))?;
            let set = match split {
                Split::Test => test,
                Split::Train => train,
                Split::All => data.tensors()?,
            };
            ensure!(!set.is_empty(), "selected split is empty");
            let e = evaluate(&w.model, &set, r.as_ref().map(|r| &r.model))?;
            let out = common.out_dir()?;
            let mut doc = serde_json::json!({ "accuracy": e.accuracy, "tensors": set.len() });
            if let Some(a) = e.agreement {
                doc["agreement"] = a.into();
            }
            write(out.join("eval.json"), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            let mut csv = String::from("true\\predicted");
            for j in 0..e.confusion.len() {
                csv += &format!(",{j}");
            }
            csv.push('\n');
            for (i, row) in e.confusion.iter().enumerate() {
                csv += &i.to_string();
                for v in row {
                    csv += &format!(",{v}");
                }
                csv.push('\n');
            }
            write(out.join("confusion.csv"), &csv)?;
            eprintln!("accuracy {:.4}", e.accuracy);
        }
        Command::Simulate {
            common,
            weights: path,
            classifier,
            oracle_only,
        } => {
            let spec = common.spec()?;
            let catalog = spec.validate()?;
            let classifier = match classifier {
                ClassifierKind::Perfect => Classifier::Perfect,
                ClassifierKind::AlwaysWrong => Classifier::AlwaysWrong,
                ClassifierKind::Model if oracle_only && path.is_none() => Classifier::Perfect,
                ClassifierKind::Model => {
                    let Some(p) = path else {
                        bail!("--weights is required with the model classifier");
                    };
                    let w = weights::load(&p)?;
                    ensure!(
                        w.model.arch.n_classes == catalog.len(),
                        "model has {} classes, catalog has {}",
                        w.model.arch.n_classes,
                        catalog.len()
                    );
                    Classifier::Model(w.model)
                }
            };
            let sim = simulate(&catalog, &spec.channel, &spec.run, &classifier, spec.seed.unwrap_or(0))?;
            let out = common.out_dir()?;
            report_io::write_report(out, "report", &sim.report, oracle_only, Some(&sim.per_seed_ratio))?;
            write(out.join("spec.toml"), &spec.to_toml()?)?;
            if !oracle_only {
                eprintln!("ratio {:.4}", sim.report.ratio());
            }
        }
        Command::Budget(a) => return budget(&a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
