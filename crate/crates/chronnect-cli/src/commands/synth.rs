//! `chronnect synth`: generate a synthetic two-class corpus.

use std::path::PathBuf;

use clap::Args;

use chronnect::datagen::{
    generate_corpus, occupancy_coded_spec, order_coded_spec, write_corpus, SyntheticSpec,
};

use crate::commands::{ensure_dir, parse_flag};
use crate::failure::Failure;
use crate::manifest::RunManifest;

/// Presets use the standard desk-scale corpus: 16 ROIs, 136 volumes,
/// 3 statuses, 100 subjects per class, 1 scan each.
const PRESET_ROIS: usize = 16;
const PRESET_STATUSES: usize = 3;
const DEFAULT_SEED: &str = "7";

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Spec JSON file describing the corpus
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub spec: Option<PathBuf>,
    /// Built-in corpus family
    #[arg(long, value_parser = ["order-coded", "occupancy-coded"])]
    pub preset: Option<String>,
    /// Output directory for the corpus
    #[arg(long)]
    pub out: PathBuf,
    /// Corpus seed; overrides the seed in --spec
    #[arg(long)]
    pub seed: Option<String>,
}

pub fn run(args: &SynthArgs) -> Result<(), Failure> {
    let mut run = RunManifest::new("synth", 0);
    let seed_flag = match &args.seed {
        Some(raw) => Some((raw.clone(), parse_flag::<u64>("--seed", raw)?)),
        None => None,
    };

    let spec: SyntheticSpec = match (&args.spec, &args.preset) {
        (Some(path), None) => {
            run.hash_input("spec", path)?;
            run.echo("spec", path.display().to_string());
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
            let mut spec: SyntheticSpec = serde_json::from_str(&text).map_err(|e| {
                Failure::Data(format!(
                    "invalid spec JSON at {}:{}:{}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?;
            if let Some((_, seed)) = &seed_flag {
                spec.seed = *seed;
            }
            spec.validate()?;
            spec
        }
        (None, Some(preset)) => {
            run.echo("preset", preset.clone());
            let seed = seed_flag
                .as_ref()
                .map(|(_, s)| *s)
                .unwrap_or_else(|| DEFAULT_SEED.parse().expect("constant parses"));
            match preset.as_str() {
                "order-coded" => order_coded_spec(PRESET_ROIS, PRESET_STATUSES, seed)?,
                "occupancy-coded" => occupancy_coded_spec(PRESET_ROIS, PRESET_STATUSES, seed)?,
                other => {
                    return Err(Failure::Usage(format!("unknown preset '{other}'")));
                }
            }
        }
        // clap enforces exactly one of --spec/--preset; this arm is
        // unreachable through the binary.
        _ => {
            return Err(Failure::Usage(
                "exactly one of --spec or --preset is required".to_string(),
            ));
        }
    };

    run.seed = spec.seed;
    run.echo(
        "seed",
        seed_flag
            .as_ref()
            .map(|(raw, _)| raw.clone())
            .unwrap_or_else(|| spec.seed.to_string()),
    );
    run.echo("out", args.out.display().to_string());

    let subjects = generate_corpus(&spec)?;
    ensure_dir(&args.out)?;
    let manifest = write_corpus(&args.out, &spec, &subjects)?;
    run.record_output("manifest.json");
    let mut num_scans = 0usize;
    for subject in &manifest.subjects {
        for rel in &subject.scans {
            run.record_output(rel.clone());
            num_scans += 1;
        }
    }
    run.write(&args.out)?;
    println!(
        "wrote {} subjects ({} scans) to {}",
        manifest.subjects.len(),
        num_scans,
        args.out.display()
    );
    Ok(())
}
