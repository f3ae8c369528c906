use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use floatdet::pipeline::{
    evaluate, read_records, run_sequence, GroundTruth, PipelineConfig, SequenceOptions,
};
use floatdet::{Error, Result};

#[derive(Parser)]
#[command(
    name = "floatdet",
    version,
    about = "Floating-object detection in video frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector on every frame of a directory.
    Detect(DetectArgs),
    /// Score detection records against ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    log_eps: Option<f64>,
    #[arg(long)]
    scales: Option<usize>,
    #[arg(long)]
    patch_side: Option<usize>,
    #[arg(long)]
    dict_size: Option<usize>,
    #[arg(long)]
    ksvd_iters: Option<usize>,
    #[arg(long)]
    ormp_eps: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    max_atoms: Option<usize>,
    /// Comma-separated disk radii.
    #[arg(long)]
    radii: Option<String>,
    #[arg(long)]
    no_refine: bool,
    #[arg(long)]
    per_detector: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reuse_dict: Option<usize>,
    /// Write `<frame>_overlay.png` with the boxes drawn.
    #[arg(long)]
    overlay: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    iou: f64,
}

impl DetectArgs {
    fn flag_settings(&self) -> Vec<(&'static str, String)> {
        let mut s = Vec::new();
        let mut push = |k, v: Option<String>| {
            if let Some(v) = v {
                s.push((k, v));
            }
        };
        push("log-eps", self.log_eps.map(|v| v.to_string()));
        push("scales", self.scales.map(|v| v.to_string()));
        push("patch-side", self.patch_side.map(|v| v.to_string()));
        push("dict-size", self.dict_size.map(|v| v.to_string()));
        push("ksvd-iters", self.ksvd_iters.map(|v| v.to_string()));
        push("ormp-eps", self.ormp_eps.map(|v| v.to_string()));
        push("lambda", self.lambda.map(|v| v.to_string()));
        push("sigma", self.sigma.map(|v| v.to_string()));
        push("max-atoms", self.max_atoms.map(|v| v.to_string()));
        push("radii", self.radii.clone());
        push("no-refine", self.no_refine.then(|| "true".into()));
        push("per-detector", self.per_detector.map(|v| v.to_string()));
        push("stride", self.stride.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("reuse-dict", self.reuse_dict.map(|v| v.to_string()));
        s
    }
}

fn detect(args: DetectArgs) -> Result<()> {
    let mut cfg = PipelineConfig::default();
    let mut overlay = args.overlay;
    if let Some(path) = &args.config {
        for (k, v) in cfg.apply_file(path)? {
            match k.as_str() {
                "overlay" => {
                    overlay |= v.parse::<bool>().map_err(|_| {
                        Error::InvalidParameter(format!("bad value `{v}` for `overlay`"))
                    })?
                }
                _ => return Err(Error::InvalidParameter(format!("unknown config key `{k}`"))),
            }
        }
    }
    for (k, v) in args.flag_settings() {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    let results = run_sequence(
        &args.input,
        &cfg,
        &args.output,
        &SequenceOptions { overlay },
    )?;
    let boxes: usize = results.iter().map(|r| r.boxes.len()).sum();
    eprintln!(
        "{} frames, {} boxes, records in {}",
        results.len(),
        boxes,
        args.output.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let records = read_records(&args.results)?;
    let gt = GroundTruth::load(&args.gt)?;
    let report = evaluate(&records, &gt, args.iou)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("serializable")
    );
    println!();
    print!("{}", report.table());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, res) = match cli.command {
        Command::Detect(a) => ("detect", detect(a)),
        Command::Eval(a) => ("eval", eval(a)),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("floatdet {name}: {e}");
            ExitCode::FAILURE
        }
    }
}
