//! `chronnect compare`: cross-validate a set of methods on one corpus under
//! a single shared fold plan, then tabulate and plot the results.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::Args;

use chronnect::evaluation::{
    make_folds, roc_csv_string, run_protocol_with_models, FoldModel, Method, MetricsReport,
    SubjectRecord, SvmConfig,
};
use chronnect::recurrent::Variant;
use chronnect::chronnectome::WindowSpec;

use crate::commands::{
    ensure_dir, hash_corpus, load_corpus, parse_flag, positive_flag, records_from, to_pretty_json,
    write_output, FoldArgs, RecipeArgs,
};
use crate::failure::Failure;
use crate::manifest::RunManifest;
use crate::svg::roc_svg;
use crate::table::{render_csv, render_text, Row};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Corpus manifest (or its directory)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated method list, or "all" for the standard seven
    #[arg(long, default_value = "all")]
    pub methods: String,
    #[command(flatten)]
    pub layout: FoldArgs,
    #[command(flatten)]
    pub recipe: RecipeArgs,
    /// Window length in volumes
    #[arg(long, default_value = "30")]
    pub window: String,
    /// Window stride in volumes
    #[arg(long, default_value = "2")]
    pub stride: String,
    /// Crop length in windows for sequence models
    #[arg(long, default_value = "30")]
    pub crop: String,
    /// Base seed for folds, training, and stochastic baselines
    #[arg(long, default_value = "0")]
    pub seed: String,
    /// Status count for the clustering baseline
    #[arg(long = "num-statuses", default_value = "3")]
    pub num_statuses: String,
    /// Variability-threshold parameter of the variability baseline
    #[arg(long, default_value = "0.05")]
    pub alpha: String,
    /// Parallel method workers
    #[arg(long, default_value = "1")]
    pub jobs: String,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

/// One requested method: stable rank for table order, display name for the
/// table, slug for file names.
#[derive(Debug)]
struct MethodSpec {
    rank: usize,
    display: String,
    slug: String,
    method: Method,
}

/// The standard comparison in table row order, optionally extended by the
/// probe methods `oracle` and `coin-flip`.
const METHOD_TOKENS: [&str; 9] = [
    "static-fc-svm",
    "dfc-variability",
    "dfc-status",
    "full-lstm",
    "stacked-full-bilstm",
    "bilstm-last",
    "full-bilstm",
    "oracle",
    "coin-flip",
];
const STANDARD_METHODS: usize = 7;

struct MethodContext {
    hidden: usize,
    train_stride: usize,
    num_statuses: usize,
    alpha: f64,
    seed: u64,
    train: chronnect::training::TrainConfig,
}

fn build_method(token: &str, ctx: &MethodContext) -> Result<MethodSpec, Failure> {
    let rank = METHOD_TOKENS
        .iter()
        .position(|t| *t == token)
        .ok_or_else(|| {
            Failure::Usage(format!(
                "unknown method '{token}'; expected one of {}",
                METHOD_TOKENS.join(", ")
            ))
        })?;
    let svm = SvmConfig {
        seed: ctx.seed,
        ..SvmConfig::default()
    };
    let h = ctx.hidden;
    let lstm = |variant: Variant| Method::Lstm {
        variant,
        hidden_dim: h,
        train: ctx.train.clone(),
        train_stride: ctx.train_stride,
    };
    let (display, method) = match token {
        "static-fc-svm" => ("Static FC + SVM".to_string(), Method::StaticFcSvm { svm }),
        "dfc-variability" => (
            "dFC-variability".to_string(),
            Method::DfcVariability {
                alpha: ctx.alpha,
                svm,
            },
        ),
        "dfc-status" => (
            "dFC-status".to_string(),
            Method::DfcStatus {
                num_statuses: ctx.num_statuses,
                svm,
            },
        ),
        "full-lstm" => (format!("Full-LSTM{h}"), lstm(Variant::FullLstm)),
        "stacked-full-bilstm" => (
            format!("Full-BiLSTM{h}-Stack"),
            lstm(Variant::StackedFullBiLstm),
        ),
        "bilstm-last" => (format!("BiLSTM{h}-Last"), lstm(Variant::BiLstmLast)),
        "full-bilstm" => (format!("Full-BiLSTM{h}"), lstm(Variant::FullBiLstm)),
        "oracle" => ("Oracle".to_string(), Method::Oracle),
        "coin-flip" => ("Coin flip".to_string(), Method::CoinFlip { seed: ctx.seed }),
        _ => unreachable!("token validated against METHOD_TOKENS"),
    };
    Ok(MethodSpec {
        rank,
        display,
        slug: method.name(),
        method,
    })
}

/// Parses `--methods` and returns specs sorted into table row order.
fn parse_methods(raw: &str, ctx: &MethodContext) -> Result<Vec<MethodSpec>, Failure> {
    let mut specs = Vec::new();
    if raw.trim() == "all" {
        for token in &METHOD_TOKENS[..STANDARD_METHODS] {
            specs.push(build_method(token, ctx)?);
        }
    } else {
        for token in raw.split(',') {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            if specs.iter().any(|s: &MethodSpec| {
                METHOD_TOKENS[s.rank] == token
            }) {
                continue;
            }
            specs.push(build_method(token, ctx)?);
        }
        if specs.is_empty() {
            return Err(Failure::Usage("--methods selected nothing".to_string()));
        }
        specs.sort_by_key(|s| s.rank);
    }
    Ok(specs)
}

type MethodResult = Result<(MetricsReport, Vec<FoldModel>), chronnect::Error>;

pub fn run(args: &CompareArgs) -> Result<(), Failure> {
    let num_folds = args.layout.num_folds()?;
    if num_folds < 2 {
        return Err(Failure::Usage("--folds must be at least 2".to_string()));
    }
    let val_fraction = args.layout.fraction()?;
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Failure::Usage(
            "--val-fraction must lie strictly between 0 and 1".to_string(),
        ));
    }
    let window_len = positive_flag("--window", &args.window)?;
    let stride = positive_flag("--stride", &args.stride)?;
    let window = WindowSpec::new(window_len, stride).map_err(|e| Failure::Usage(e.to_string()))?;
    let crop_len = positive_flag("--crop", &args.crop)?;
    let seed: u64 = parse_flag("--seed", &args.seed)?;
    let jobs = positive_flag("--jobs", &args.jobs)?;
    let ctx = MethodContext {
        hidden: args.recipe.hidden_dim()?,
        train_stride: args.recipe.train_stride()?,
        num_statuses: positive_flag("--num-statuses", &args.num_statuses)?,
        alpha: parse_flag("--alpha", &args.alpha)?,
        seed,
        train: args.recipe.train_config(seed)?,
    };
    let specs = parse_methods(&args.methods, &ctx)?;

    let mut run = RunManifest::new("compare", seed);
    run.echo("manifest", args.manifest.display().to_string());
    run.echo("methods", args.methods.clone());
    run.echo("window", args.window.clone());
    run.echo("stride", args.stride.clone());
    run.echo("crop", args.crop.clone());
    run.echo("seed", args.seed.clone());
    run.echo("num_statuses", args.num_statuses.clone());
    run.echo("alpha", args.alpha.clone());
    run.echo("jobs", args.jobs.clone());
    run.echo("out", args.out.display().to_string());
    args.recipe.echo_into(&mut run.config_echo);
    args.layout.echo_into(&mut run.config_echo);

    let corpus = load_corpus(&args.manifest)?;
    hash_corpus(&mut run, &corpus)?;
    let records: Vec<SubjectRecord> = records_from(corpus.subjects);
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    // One plan shared by every method. Each method still derives its own
    // training seeds, so methods are comparable but not correlated.
    let plan = make_folds(&labeled, num_folds, val_fraction, seed)?;

    // Method-level worker pool: methods are the unit of parallelism, and
    // each runs its folds sequentially.
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<MethodResult>>> =
        specs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(specs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= specs.len() {
                    break;
                }
                let result =
                    run_protocol_with_models(&records, &window, &specs[i].method, &plan, crop_len);
                *results[i].lock().expect("result slot poisoned") = Some(result);
            });
        }
    });

    ensure_dir(&args.out)?;
    let mut rows = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for (spec, slot) in specs.iter().zip(&results) {
        let result = slot
            .lock()
            .expect("result slot poisoned")
            .take()
            .expect("worker pool covered every method");
        match result {
            Ok((report, models)) => {
                write_output(
                    &mut run,
                    &args.out,
                    &format!("metrics/{}.json", spec.slug),
                    &to_pretty_json(&report)?,
                )?;
                write_output(
                    &mut run,
                    &args.out,
                    &format!("roc/{}.csv", spec.slug),
                    roc_csv_string(&report.roc).as_bytes(),
                )?;
                write_output(
                    &mut run,
                    &args.out,
                    &format!("roc/{}.svg", spec.slug),
                    roc_svg(&spec.display, &report.roc, report.mean.auc).as_bytes(),
                )?;
                for (f, model) in models.iter().enumerate() {
                    write_output(
                        &mut run,
                        &args.out,
                        &format!("models/{}/fold{f}.json", spec.slug),
                        &to_pretty_json(model)?,
                    )?;
                }
                rows.push(Row::from_report(&spec.display, &report));
            }
            Err(err) => {
                eprintln!("method {}: {err}", spec.slug);
                failures.push((spec.slug.clone(), err.to_string()));
                rows.push(Row::failed(&spec.display));
            }
        }
    }

    let text = render_text(&rows);
    write_output(&mut run, &args.out, "table.txt", text.as_bytes())?;
    write_output(&mut run, &args.out, "table.csv", render_csv(&rows).as_bytes())?;
    run.write(&args.out)?;
    print!("{text}");
    if !failures.is_empty() {
        return Err(Failure::Data(format!(
            "{} of {} methods failed: {}",
            failures.len(),
            specs.len(),
            failures
                .iter()
                .map(|(slug, _)| slug.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    Ok(())
}
