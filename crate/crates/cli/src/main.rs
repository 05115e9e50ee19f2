use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use topohough_core::experiments::{self, BaselineParams, DetectorParams, ExperimentOutput};
use topohough_core::io::{diagram_csv, lines_json, points_to_csv, read_points, write_all};
use topohough_core::scene::{gen_scene, random_scene, Scene};
use topohough_core::{
    configure_threads_from_env, detect, diagram, svg, CellField, DetectConfig, Error, KernelKind, KernelSpec,
    NormalizationMode, Result, SelectionPolicy,
};

/// Line detection in point clouds by persistence of a continuous Hough score.
#[derive(Parser)]
#[command(name = "topohough", version)]
#[command(after_help = "Set TOPOHOUGH_THREADS to cap the number of worker threads.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect lines in a point file (CSV `x,y` rows or JSON `[[x,y],...]`).
    Detect(DetectArgs),
    /// Sample a synthetic scene.
    Generate(GenerateArgs),
    /// Persistence diagram of a cached cell field.
    Diagram(DiagramArgs),
    /// Run one of the benchmark studies.
    Benchmark {
        #[command(subcommand)]
        study: Study,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Hat,
    Rbf,
}

impl From<Kernel> for KernelKind {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Hat => KernelKind::Hat,
            Kernel::Rbf => KernelKind::Rbf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mean,
    Sum,
}

impl From<Mode> for NormalizationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Mean => NormalizationMode::Mean,
            Mode::Sum => NormalizationMode::Sum,
        }
    }
}

#[derive(Args)]
#[group(id = "selection", required = true, multiple = false)]
struct Selection {
    /// Keep the k most persistent maxima.
    #[arg(long, group = "selection")]
    top_k: Option<usize>,
    /// Keep every maximum with persistence at least alpha.
    #[arg(long, group = "selection")]
    alpha: Option<f64>,
}

impl Selection {
    fn policy(&self) -> SelectionPolicy {
        match (self.top_k, self.alpha) {
            (Some(k), _) => SelectionPolicy::TopK(k),
            (_, Some(a)) => SelectionPolicy::Threshold(a),
            _ => unreachable!("clap enforces one selection"),
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "hat")]
    kernel: Kernel,
    /// Kernel width in input units.
    #[arg(long)]
    sigma: f64,
    /// Approximation budget in score units of --mode.
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "mean")]
    mode: Mode,
    #[command(flatten)]
    selection: Selection,
    /// Detected lines as JSON.
    #[arg(long)]
    lines_out: PathBuf,
    /// Persistence diagram as CSV.
    #[arg(long)]
    diagram_out: PathBuf,
    /// Points and detected lines as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Persistence diagram as SVG.
    #[arg(long)]
    diagram_svg: Option<PathBuf>,
    /// Cache the cell field as JSON for the diagram command.
    #[arg(long)]
    field_out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of random lines.
    #[arg(long, required_unless_present = "demo")]
    lines: Option<usize>,
    /// Points per line; one value applies to every line.
    #[arg(long, value_delimiter = ',', required_unless_present = "demo")]
    points: Vec<usize>,
    /// Half-width of the uniform orthogonal noise [default: 1, or 0.5
    /// with --demo].
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = experiments::EXTENT)]
    extent: f64,
    #[arg(long)]
    seed: u64,
    /// Scene index within the seed's streams.
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// The fixed three-line demo scene (18/12/8 points, extent 32) instead
    /// of random lines; `--seed 0` is the reference instance.
    #[arg(long, conflicts_with_all = ["lines", "points"])]
    demo: bool,
    /// Scene JSON.
    #[arg(long)]
    out: PathBuf,
    /// Points only, as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DiagramArgs {
    /// Cell field JSON written by `detect --field-out`.
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Disable the Möbius gluing of the strip (debugging only).
    #[arg(long)]
    untwisted: bool,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Study {
    /// Threshold gap, persistence against vote counts.
    Gap {
        #[command(flatten)]
        common: StudyArgs,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 5.0)]
        sigma: f64,
        /// Budget in sum units.
        #[arg(long, default_value_t = 5.0)]
        epsilon: f64,
    },
    /// Matched line errors of both methods.
    Quality {
        #[command(flatten)]
        common: StudyArgs,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 5.0)]
        sigma: f64,
        #[arg(long, default_value_t = 5.0)]
        epsilon: f64,
    },
    /// Detection error over kernel widths and noise levels.
    SigmaSweep {
        #[command(flatten)]
        common: StudyArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20")]
        sigmas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "3,5,8")]
        noise: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        epsilon: f64,
    },
    /// Detection error and runtime over approximation budgets.
    EpsSweep {
        #[command(flatten)]
        common: StudyArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,7,9,11,13")]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        sigma: f64,
        #[arg(long, default_value_t = 5.0)]
        noise: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads_from_env()?;
    match cli.command {
        Command::Detect(args) => cmd_detect(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Diagram(args) => cmd_diagram(args),
        Command::Benchmark { study } => cmd_benchmark(study),
    }
}

fn with_context(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        Error::Io(io) => Error::InvalidArgument(format!("cannot read {}: {io}", path.display())),
        other => other,
    }
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let points = read_points(&args.input).map_err(|e| with_context(&args.input, e))?;
    let kernel = KernelSpec::new(args.kernel.into(), args.sigma)?;
    let cfg = DetectConfig::new(kernel, args.epsilon, args.selection.policy()).with_mode(args.mode.into());
    let found = detect(&points, &cfg)?;

    let mut outputs: Vec<(&Path, String)> = vec![
        (&args.lines_out, lines_json(&found.lines)),
        (&args.diagram_out, diagram_csv(&found.pairs, &found.field)?),
    ];
    if let Some(p) = &args.svg {
        let lines: Vec<_> = found.lines.iter().map(|l| l.params()).collect();
        outputs.push((p, svg::scene_svg(&points, &lines)));
    }
    if let Some(p) = &args.diagram_svg {
        outputs.push((p, svg::diagram_svg(&found.pairs, found.lines.len())));
    }
    if let Some(p) = &args.field_out {
        outputs.push((p, found.field.to_json()?));
    }
    write_outputs(&outputs)?;
    eprintln!("{} lines from {} points ({} cells)", found.lines.len(), points.len(), found.field.len());
    Ok(())
}

fn write_outputs(outputs: &[(&Path, String)]) -> Result<()> {
    let refs: Vec<(&Path, &str)> = outputs.iter().map(|(p, c)| (*p, c.as_str())).collect();
    write_all(&refs)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let scene: Scene = if args.demo {
        let specs = experiments::demo_specs(args.noise.unwrap_or(experiments::DEMO_NOISE));
        gen_scene(&specs, experiments::EXTENT, args.seed)?
    } else {
        let n = args.lines.expect("clap requires --lines without --demo");
        let counts = match args.points.as_slice() {
            [c] => vec![*c; n],
            cs if cs.len() == n => cs.to_vec(),
            cs => return Err(Error::InvalidArgument(format!("--points lists {} counts for {n} lines", cs.len()))),
        };
        random_scene(&counts, args.noise.unwrap_or(1.0), args.extent, args.seed, args.index)?
    };
    let mut outputs: Vec<(&Path, String)> = vec![(&args.out, scene.to_json()? + "\n")];
    if let Some(p) = &args.csv {
        outputs.push((p, points_to_csv(&scene.points)));
    }
    write_outputs(&outputs)?;
    eprintln!("{} points on {} lines", scene.points.len(), scene.truth.len());
    Ok(())
}

fn cmd_diagram(args: DiagramArgs) -> Result<()> {
    let text = fs::read_to_string(&args.field).map_err(|e| with_context(&args.field, e.into()))?;
    let field = CellField::from_json(&text)?;
    let (pairs, _) = diagram(&field, SelectionPolicy::TopK(1), !args.untwisted)?;
    let mut outputs: Vec<(&Path, String)> = vec![(&args.out, diagram_csv(&pairs, &field)?)];
    if let Some(p) = &args.svg {
        outputs.push((p, svg::diagram_svg(&pairs, 0)));
    }
    write_outputs(&outputs)?;
    eprintln!("{} pairs from {} cells", pairs.len(), field.len());
    Ok(())
}

fn cmd_benchmark(study: Study) -> Result<()> {
    let (out, dir) = match study {
        Study::Gap { common, trials, noise, sigma, epsilon } => {
            let det = DetectorParams::hat(sigma, epsilon)?;
            let (rows, s) = experiments::gap_experiment(trials, common.seed, noise, &det, &BaselineParams::default())?;
            eprintln!(
                "gap: vote gap zero in {:.1}% of trials, persistence gap positive in {:.1}%",
                100.0 * s.frac_delta_vote_zero,
                100.0 * s.frac_delta_pers_positive
            );
            (experiments::gap_output(&rows, &s)?, common.out_dir)
        }
        Study::Quality { common, trials, noise, sigma, epsilon } => {
            let det = DetectorParams::hat(sigma, epsilon)?;
            let (rows, s) =
                experiments::quality_experiment(trials, common.seed, noise, &det, &BaselineParams::default())?;
            (experiments::quality_output(&rows, &s)?, common.out_dir)
        }
        Study::SigmaSweep { common, trials, sigmas, noise, epsilon } => {
            let (rows, s) = experiments::sigma_sweep(&sigmas, &noise, trials, common.seed, epsilon)?;
            for l in &s.levels {
                eprintln!("noise {}: best sigma {}", l.noise, l.best_sigma);
            }
            (experiments::sigma_output(&rows, &s)?, common.out_dir)
        }
        Study::EpsSweep { common, trials, epsilons, sigma, noise } => {
            let (rows, s) = experiments::epsilon_sweep(&epsilons, trials, common.seed, sigma, noise)?;
            eprintln!("runtime ratio finest/coarsest budget: {:.1}", s.runtime_ratio);
            (experiments::epsilon_output(&rows, &s)?, common.out_dir)
        }
    };
    write_study(&out, &dir)
}

fn write_study(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = out.files.iter().map(|(name, _)| dir.join(name)).collect();
    let refs: Vec<(&Path, &str)> = paths.iter().zip(&out.files).map(|(p, (_, c))| (p.as_path(), c.as_str())).collect();
    write_all(&refs)?;
    for p in &paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}
