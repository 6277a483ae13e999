//! `chronnect gradcheck`: compare analytic gradients against central finite
//! differences and report the worst relative error per parameter tensor.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;

use chronnect::recurrent::{
    gradient_check, gradient_check_corrupted, ModelConfig, TensorCheck, Variant,
};

use crate::commands::{parse_flag, positive_flag};
use crate::failure::Failure;
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Model variant, or "all" for every variant
    #[arg(long, default_value = "all")]
    pub model: String,
    /// Hidden units per direction
    #[arg(long, default_value = "8")]
    pub hidden: String,
    /// Input feature dimension of the probe sequence
    #[arg(long = "input-dim", default_value = "12")]
    pub input_dim: String,
    /// Probe sequence length
    #[arg(long, default_value = "5")]
    pub len: String,
    /// Seed for parameters and the probe sequence
    #[arg(long, default_value = "0")]
    pub seed: String,
    /// Finite-difference step, also the pass threshold
    #[arg(long, default_value = "1e-5")]
    pub eps: String,
    /// Corrupt one analytic gradient entry first (negative control)
    #[arg(long, hide = true)]
    pub corrupt: bool,
    /// Optional directory for a run manifest
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &GradcheckArgs) -> Result<(), Failure> {
    let hidden = positive_flag("--hidden", &args.hidden)?;
    let input_dim = positive_flag("--input-dim", &args.input_dim)?;
    let len = positive_flag("--len", &args.len)?;
    let seed: u64 = parse_flag("--seed", &args.seed)?;
    let eps: f64 = parse_flag("--eps", &args.eps)?;
    if !(eps > 0.0) {
        return Err(Failure::Usage("--eps must be positive".to_string()));
    }
    let variants: Vec<Variant> = if args.model == "all" {
        Variant::ALL.to_vec()
    } else {
        vec![Variant::from_str(&args.model).map_err(|e| Failure::Usage(e.to_string()))?]
    };

    let mut worst: Option<(String, f64)> = None;
    for variant in &variants {
        let config = ModelConfig::new(*variant, input_dim, hidden, len);
        let checks: Vec<TensorCheck> = if args.corrupt {
            gradient_check_corrupted(&config, seed, eps)?
        } else {
            gradient_check(&config, seed, eps)?
        };
        for check in &checks {
            let ok = check.max_rel_err < eps;
            println!(
                "{} {}: max_rel_err={:.3e} {}",
                variant.name(),
                check.name,
                check.max_rel_err,
                if ok { "ok" } else { "FAIL" }
            );
            let name = format!("{}/{}", variant.name(), check.name);
            if worst.as_ref().map_or(true, |(_, w)| check.max_rel_err > *w) {
                worst = Some((name, check.max_rel_err));
            }
        }
    }
    let (worst_name, worst_err) = worst.expect("at least one variant was checked");

    if let Some(out) = &args.out {
        crate::commands::ensure_dir(out)?;
        let mut run = RunManifest::new("gradcheck", seed);
        run.echo("model", args.model.clone());
        run.echo("hidden", args.hidden.clone());
        run.echo("input_dim", args.input_dim.clone());
        run.echo("len", args.len.clone());
        run.echo("seed", args.seed.clone());
        run.echo("eps", args.eps.clone());
        run.echo("worst_tensor", worst_name.clone());
        run.echo("worst_max_rel_err", format!("{worst_err:e}"));
        run.write(out)?;
    }

    if worst_err < eps {
        println!("gradcheck ok: worst {worst_name} at {worst_err:.3e}");
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "gradient check failed: {worst_name} max_rel_err={worst_err:.3e} >= {eps:e}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_args() -> GradcheckArgs {
        GradcheckArgs {
            model: "full-lstm".to_string(),
            hidden: "3".to_string(),
            input_dim: "4".to_string(),
            len: "3".to_string(),
            seed: "0".to_string(),
            eps: "1e-5".to_string(),
            corrupt: false,
            out: None,
        }
    }

    #[test]
    fn healthy_gradients_pass() {
        run(&base_args()).unwrap();
    }

    #[test]
    fn corrupted_gradients_fail_with_the_verification_code() {
        let mut args = base_args();
        args.corrupt = true;
        let err = run(&args).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn manifest_is_written_when_out_is_given() {
        let tmp = tempfile::tempdir().unwrap();
        let mut args = base_args();
        args.out = Some(tmp.path().to_path_buf());
        run(&args).unwrap();
        let manifest: RunManifest = serde_json::from_slice(
            &std::fs::read(tmp.path().join("run_manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest.command, "gradcheck");
        assert_eq!(manifest.config_echo["eps"], "1e-5");
    }
}
