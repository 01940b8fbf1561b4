use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use boxfit::formats::evaluate_predictions;
use boxfit::gradcheck::Term;
use boxfit::{
    fit_annotations, run_gradcheck, AnnotationFile, FitSettings, GradcheckOptions, ImagePatch64,
    Mask, ResultFile,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "boxfit",
    version,
    about = "Fit object polygons from bounding boxes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one polygon per annotated box.
    Fit(FitArgs),
    /// Score predicted polygons against binary masks named `<id>.png`.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt_masks: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Compare analytic gradients with finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Scale one term's gradient by 1.1 (negative control).
        #[arg(long, hide = true)]
        corrupt: Option<TermArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TermArg {
    Unary,
    Membership,
    Local,
    Global,
    Total,
}

impl From<TermArg> for Term {
    fn from(t: TermArg) -> Self {
        match t {
            TermArg::Unary => Term::Unary,
            TermArg::Membership => Term::Membership,
            TermArg::Local => Term::Local,
            TermArg::Global => Term::Global,
            TermArg::Total => Term::Total,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Ellipse,
    Square,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    boxes: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    sigma_i: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    dilation: Option<usize>,
    #[arg(long)]
    clip: Option<usize>,
    #[arg(long)]
    pad: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl FitArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("vertices", self.k.map(|v| v.to_string()));
        put(
            "init",
            self.init.map(|i| match i {
                InitArg::Ellipse => "ellipse".to_string(),
                InitArg::Square => "square".to_string(),
            }),
        );
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("tau", self.tau.map(|v| v.to_string()));
        put("sigma_i", self.sigma_i.map(|v| v.to_string()));
        put("window", self.window.map(|v| v.to_string()));
        put("dilation", self.dilation.map(|v| v.to_string()));
        put("grid", self.clip.map(|v| v.to_string()));
        put("pad", self.pad.map(|v| v.to_string()));
        put("max_iters", self.max_iters.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        out
    }
}

/// Error with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

fn fail(code: u8, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

fn load_image(path: &Path) -> anyhow::Result<ImagePatch64> {
    let rgb = image::open(path)
        .with_context(|| format!("cannot read image {}", path.display()))?
        .to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb
        .pixels()
        .map(|p| p.0.map(|c| c as f64 / 255.0))
        .collect();
    Ok(ImagePatch64::new(w, h, data)?)
}

fn load_mask(path: &Path) -> Option<Mask> {
    let gray = image::open(path).ok()?.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    Some(Mask::new(
        w,
        h,
        gray.pixels().map(|p| p.0[0] != 0).collect(),
    ))
}

fn fit(args: &FitArgs) -> Result<(), Failure> {
    let img = load_image(&args.image).map_err(|e| fail(2, e))?;
    let text = fs::read_to_string(&args.boxes)
        .with_context(|| format!("cannot read annotations {}", args.boxes.display()))
        .map_err(|e| fail(3, e))?;
    let ann = AnnotationFile::parse(&text).map_err(|e| {
        fail(
            3,
            anyhow!("malformed annotations {}: {e}", args.boxes.display()),
        )
    })?;

    let mut settings = FitSettings::default();
    if let Some(path) = &args.config {
        let cfg = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        settings
            .apply_text(&cfg)
            .with_context(|| format!("in {}", path.display()))?;
    }
    for (k, v) in args.overrides() {
        settings.set(k, &v).map_err(anyhow::Error::from)?;
    }
    settings.validate().map_err(anyhow::Error::from)?;

    let results = fit_annotations(&img, &ann, &settings);
    fs::write(&args.out, results.to_json())
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(svg) = &args.svg {
        fs::write(svg, results.to_svg(img.width(), img.height()))
            .with_context(|| format!("cannot write {}", svg.display()))?;
    }
    let failed = results.results.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "fitted {} instance(s), {failed} failed",
        results.results.len() - failed
    );
    Ok(())
}

fn eval(pred: &Path, gt_masks: &Path, report: &Path) -> Result<(), Failure> {
    let text =
        fs::read_to_string(pred).with_context(|| format!("cannot read {}", pred.display()))?;
    let results = ResultFile::parse(&text)
        .map_err(|e| fail(3, anyhow!("malformed results {}: {e}", pred.display())))?;
    let rep = evaluate_predictions(&results, |id| {
        load_mask(&gt_masks.join(format!("{id}.png")))
    });
    fs::write(report, rep.to_json())
        .with_context(|| format!("cannot write {}", report.display()))?;
    match rep.mean_iou {
        Some(m) => println!(
            "mean IoU {m:.4} over {} instance(s), {} without score",
            rep.evaluated, rep.failed
        ),
        None => println!("no instance scored, {} without score", rep.failed),
    }
    Ok(())
}

fn gradcheck(seed: u64, trials: usize, corrupt: Option<TermArg>) -> Result<(), Failure> {
    let rep = run_gradcheck(&GradcheckOptions {
        seed,
        trials,
        corrupt: corrupt.map(Term::from),
        ..Default::default()
    });
    for t in &rep.terms {
        println!(
            "{:<10} worst {:.3e} checked {:>6} skipped {:>5} {}",
            t.term.name(),
            t.worst,
            t.checked,
            t.skipped,
            if t.passed { "PASS" } else { "FAIL" }
        );
    }
    if rep.passed() {
        Ok(())
    } else {
        let names: Vec<_> = rep.failing().iter().map(|t| t.name()).collect();
        Err(anyhow!(
            "gradient check failed for {} (tolerance {:e})",
            names.join(", "),
            rep.tolerance
        )
        .into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Fit(args) => fit(args),
        Command::Eval {
            pred,
            gt_masks,
            report,
        } => eval(pred, gt_masks, report),
        Command::Gradcheck {
            seed,
            trials,
            corrupt,
        } => gradcheck(*seed, *trials, *corrupt),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
