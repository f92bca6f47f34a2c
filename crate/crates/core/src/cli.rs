//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorClass, Result};
use crate::evaluation::phantom::add_gaussian_noise;
use crate::evaluation::{basin_analysis, dice, mean_std, tre, translation_profile};
use crate::io::{self, DiceEntry, DiceSummary, ElementType, ProfileReport, RegistrationReport, TreSummary};
use crate::metrics::MetricKind;
use crate::registration::{register_with_progress, RepresentationKind};
use crate::repr::{make_representation, roughness, RepresentationConfig, VfcParams, DEFAULT_NOISE_ETA, DEFAULT_RADIUS};
use crate::transform::Transform;
use crate::volume::{resample_fill, GridGeometry};

/// Exit code and optional machine-readable artifact of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub report: Option<PathBuf>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Usage => EXIT_USAGE,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

#[derive(Parser, Debug)]
#[command(name = "vfsreg", version, about = "Volumetric registration on VFC and NGF vector representations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the VFC field of a volume and report its roughness.
    VfcField(VfcFieldArgs),
    /// Run a multi-stage registration described by a config file.
    Register(RegisterArgs),
    /// Similarity against whole-voxel translations along one axis.
    TranslateStudy(TranslateStudyArgs),
    /// Target registration error over landmark pairs.
    EvalTre(EvalTreArgs),
    /// Dice overlap per label.
    EvalDice(EvalDiceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Preset {
    Lung,
    Brain,
    Abdomen,
}

impl Preset {
    fn gamma(self) -> f64 {
        let name = self.to_possible_value().expect("no skipped variants");
        io::preset_gamma(name.get_name()).expect("every preset has a gamma")
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutputType {
    Float32,
    Float64,
}

impl From<OutputType> for ElementType {
    fn from(t: OutputType) -> Self {
        match t {
            OutputType::Float32 => ElementType::Float32,
            OutputType::Float64 => ElementType::Float64,
        }
    }
}

#[derive(Args, Debug)]
pub struct VfcFieldArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Kernel decay exponent; overrides --preset.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: usize,
    /// Scale every vector to unit length.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub normalize: bool,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "float32")]
    pub element_type: OutputType,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RegisterArgs {
    #[arg(long)]
    pub fixed: PathBuf,
    #[arg(long)]
    pub moving: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_transform: Option<PathBuf>,
    #[arg(long)]
    pub out_warped: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Record wall time in the report (makes it run-dependent).
    #[arg(long)]
    pub timing: bool,
    /// Suppress per-iteration progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug)]
pub struct TranslateStudyArgs {
    #[arg(long)]
    pub fixed: PathBuf,
    /// Defaults to the fixed image (a self-study on one noise realization).
    #[arg(long)]
    pub moving: Option<PathBuf>,
    /// Comma-separated list of vfc, ngf, intensity.
    #[arg(long, value_delimiter = ',', default_value = "vfc,ngf")]
    pub representation: Vec<String>,
    /// Defaults to mean_dot_product for vector representations, ssd otherwise.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub gamma_list: Vec<f64>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: usize,
    /// Gaussian noise standard deviation in percent of the dynamic range.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub axis: usize,
    /// Largest shift in voxels; shifts run from -range to range.
    #[arg(long, default_value_t = 30)]
    pub range: i64,
    /// Output prefix; writes <prefix>_<rep>[_g<gamma>].csv and .json.
    #[arg(long)]
    pub out_csv: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalTreArgs {
    #[arg(long)]
    pub fixed_lms: PathBuf,
    #[arg(long)]
    pub moving_lms: PathBuf,
    /// Transform file mapping fixed to moving space; identity if absent.
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// Voxel spacing in mm, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "geometry")]
    pub spacing: Option<Vec<f64>>,
    /// Image whose header supplies spacing and origin.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Index of the first voxel in the landmark files.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u32).range(0..=1))]
    pub index_base: u32,
    /// Row label in the summary table; defaults to the fixed landmark file stem.
    #[arg(long)]
    pub subject: Option<String>,
    /// Per-point CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalDiceArgs {
    #[arg(long)]
    pub labels_a: PathBuf,
    #[arg(long)]
    pub labels_b: PathBuf,
    /// Labels to score; defaults to every non-zero label present in either map.
    #[arg(long, value_delimiter = ',')]
    pub label_list: Vec<u32>,
    /// JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Usage errors, help and version text are handled here as well.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return CommandOutcome { exit_code: code, report: None };
        }
    };
    match execute(&cli.command, out, err) {
        Ok(report) => CommandOutcome { exit_code: EXIT_OK, report },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            CommandOutcome { exit_code: exit_code(&e), report: None }
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<Option<PathBuf>> {
    match cmd {
        Command::VfcField(a) => cmd_vfc_field(a, out, err),
        Command::Register(a) => cmd_register(a, out, err),
        Command::TranslateStudy(a) => cmd_translate_study(a, out),
        Command::EvalTre(a) => cmd_eval_tre(a, out),
        Command::EvalDice(a) => cmd_eval_dice(a, out),
    }
}

fn say(w: &mut dyn Write, text: std::fmt::Arguments) -> Result<()> {
    w.write_fmt(text).map_err(|e| Error::io("<stdout>", e))?;
    w.write_all(b"\n").map_err(|e| Error::io("<stdout>", e))
}

fn resolve_gamma(gamma: Option<f64>, preset: Option<Preset>) -> f64 {
    gamma.or(preset.map(Preset::gamma)).unwrap_or(VfcParams::default().gamma)
}

#[derive(Serialize, Deserialize)]
struct VfcFieldReport {
    schema_version: u32,
    gamma: f64,
    radius: usize,
    normalize: bool,
    roughness: f64,
    constant_input: bool,
}

pub fn cmd_vfc_field(a: &VfcFieldArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Option<PathBuf>> {
    let v = io::read_scalar(&a.input)?;
    let params = VfcParams {
        gamma: resolve_gamma(a.gamma, a.preset),
        radius: a.radius,
        normalize: a.normalize,
        ..VfcParams::default()
    };
    let (lo, hi) = v.min_max();
    let constant = lo == hi;
    let field = if constant {
        say(err, format_args!("warning: input is constant; writing a zero field"))?;
        crate::volume::VectorField::zeros(v.geometry().clone())
    } else {
        make_representation(&v, &RepresentationConfig::Vfc(params.clone()))?
    };
    io::write_field(&a.output, &field, a.element_type.into())?;
    let r = roughness(&field);
    say(out, format_args!("gamma={} radius={} normalize={} roughness={r:.6}", params.gamma, params.radius, params.normalize))?;
    if let Some(path) = &a.report {
        let rep = VfcFieldReport {
            schema_version: io::REPORT_SCHEMA_VERSION,
            gamma: params.gamma,
            radius: params.radius,
            normalize: params.normalize,
            roughness: r,
            constant_input: constant,
        };
        io::write_json(path, &rep)?;
    }
    Ok(a.report.clone())
}

pub fn cmd_register(a: &RegisterArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Option<PathBuf>> {
    let fixed = io::read_scalar(&a.fixed)?;
    let moving = io::read_scalar(&a.moving)?;
    let stages = io::read_config(&a.config)?;
    let quiet = a.quiet;
    let mut progress = |p: &crate::registration::Progress| {
        if !quiet {
            let _ = writeln!(err, "stage={} level={} iter={} metric={}", p.stage, p.level, p.iteration, p.metric);
        }
    };
    let (result, failure) = match register_with_progress(&stages, &fixed, &moving, &mut progress) {
        Ok(r) => (r, None),
        Err(f) => (*f.partial, Some((f.stage, f.error))),
    };
    let mut report = RegistrationReport::new(&stages, &result, a.timing);
    if let Some((stage, e)) = &failure {
        report.error = Some(format!("stage {stage}: {e}"));
    }
    if let Some(path) = &a.report {
        io::write_json(path, &report)?;
    }
    if let Some((_, e)) = failure {
        return Err(e);
    }
    if let Some(path) = &a.out_transform {
        io::write_transform(path, &result.transform)?;
    }
    if let Some(path) = &a.out_warped {
        let warped = resample_fill(&moving, &result.transform, fixed.geometry(), 0.0);
        io::write_scalar(path, &warped, ElementType::Float32)?;
    }
    print_registration_summary(&report, out)?;
    Ok(a.report.clone())
}

/// Writes the human-readable summary of a registration report.
pub fn print_registration_summary(r: &RegistrationReport, out: &mut dyn Write) -> Result<()> {
    for l in &r.levels {
        let first = l.trace.first().copied().unwrap_or(f64::NAN);
        let last = l.trace.last().copied().unwrap_or(f64::NAN);
        say(
            out,
            format_args!(
                "stage {} level {} (x{}): {} iterations, metric {first:.6} -> {last:.6}{}",
                l.stage,
                l.level,
                l.factor,
                l.iterations,
                if l.converged { "" } else { " (not converged)" }
            ),
        )?;
    }
    for (i, t) in r.final_transform.iter().enumerate() {
        match t.displacement_mm {
            Some(d) => say(out, format_args!("transform {i}: {} displacement {d:.6} mm", t.kind))?,
            None => say(out, format_args!("transform {i}: {} parameters {:?}", t.kind, t.parameters))?,
        }
    }
    say(out, format_args!("converged: {}", r.converged))
}

fn representation_for(name: &str, gamma: f64, radius: usize) -> Result<RepresentationKind> {
    Ok(match name {
        "vfc" => RepresentationKind::Vfc(VfcParams { gamma, radius, ..VfcParams::default() }),
        "ngf" => RepresentationKind::Ngf { eta: DEFAULT_NOISE_ETA },
        "intensity" => RepresentationKind::Intensity,
        other => return Err(Error::Parameter(format!("unknown representation '{other}'"))),
    })
}

pub fn cmd_translate_study(a: &TranslateStudyArgs, out: &mut dyn Write) -> Result<Option<PathBuf>> {
    if a.range < 2 {
        return Err(Error::Parameter(format!("range must be at least 2, got {}", a.range)));
    }
    if !(a.noise >= 0.0) {
        return Err(Error::Parameter(format!("noise must be non-negative, got {}", a.noise)));
    }
    let mut fixed = io::read_scalar(&a.fixed)?;
    let mut moving = match &a.moving {
        Some(p) => Some(io::read_scalar(p)?),
        None => None,
    };
    if a.noise > 0.0 {
        fixed = add_gaussian_noise(&fixed, a.noise, a.seed)?;
        moving = moving.map(|m| add_gaussian_noise(&m, a.noise, a.seed.wrapping_add(1))).transpose()?;
    }
    let moving = moving.as_ref().unwrap_or(&fixed);
    let gammas = if a.gamma_list.is_empty() {
        vec![resolve_gamma(None, a.preset)]
    } else {
        a.gamma_list.clone()
    };
    let shifts: Vec<i64> = (-a.range..=a.range).collect();
    let mut jobs = Vec::new();
    for rep in &a.representation {
        if rep == "vfc" {
            for &g in &gammas {
                jobs.push((representation_for(rep, g, a.radius)?, format!("{rep}_g{g}")));
            }
        } else {
            jobs.push((representation_for(rep, 0.0, a.radius)?, rep.clone()));
        }
    }
    say(out, format_args!("{:<16} {:>10} {:>14} {:>13}", "setting", "min_shift", "capture_range", "local_minima"))?;
    let mut last = None;
    for (kind, tag) in jobs {
        let metric = match &a.metric {
            Some(m) => MetricKind::parse(m).ok_or_else(|| Error::Parameter(format!("unknown metric '{m}'")))?,
            None if matches!(kind, RepresentationKind::Intensity) => MetricKind::parse("ssd").expect("ssd exists"),
            None => MetricKind::MeanDotProduct,
        };
        let mut profile = translation_profile(&fixed, moving, &kind, metric, a.axis, &shifts)?;
        profile.metadata.noise_percent = Some(a.noise);
        profile.metadata.seed = Some(a.seed);
        let basin = basin_analysis(&profile)?;
        let stem = format!("{}_{tag}", a.out_csv.display());
        let csv = PathBuf::from(format!("{stem}.csv"));
        let json = PathBuf::from(format!("{stem}.json"));
        io::write_profile_csv(&csv, &profile)?;
        io::write_json(&json, &ProfileReport { schema_version: io::REPORT_SCHEMA_VERSION, profile, basin })?;
        say(
            out,
            format_args!(
                "{tag:<16} {:>10} {:>14} {:>13}",
                basin.global_min_shift, basin.capture_range, basin.local_minima_count
            ),
        )?;
        last = Some(json);
    }
    Ok(last)
}

fn landmark_geometry(a: &EvalTreArgs) -> Result<GridGeometry> {
    if let Some(p) = &a.geometry {
        return io::read_header(p)?.geometry();
    }
    let spacing = a.spacing.clone().unwrap_or_else(|| vec![1.0; 3]);
    let n = spacing.len();
    GridGeometry::new(&vec![1; n], &spacing, &vec![0.0; n])
}

/// One `Subject | Orig. | Registered` table row.
pub fn tre_row(subject: &str, s: &TreSummary) -> String {
    format!(
        "{subject} | {:.2} ± {:.2} | {:.2} ± {:.2}",
        s.original.mean, s.original.std, s.registered.mean, s.registered.std
    )
}

pub fn cmd_eval_tre(a: &EvalTreArgs, out: &mut dyn Write) -> Result<Option<PathBuf>> {
    let g = landmark_geometry(a)?;
    let fixed = io::read_landmarks_dirlab(&a.fixed_lms, &g, a.index_base)?;
    let moving = io::read_landmarks_dirlab(&a.moving_lms, &g, a.index_base)?;
    let t = match &a.transform {
        Some(p) => io::read_transform(p)?,
        None => Transform::identity(g.ndim()),
    };
    let summary = TreSummary {
        schema_version: io::REPORT_SCHEMA_VERSION,
        count: fixed.len(),
        original: tre(&fixed, &moving, &Transform::identity(g.ndim()))?,
        registered: tre(&fixed, &moving, &t)?,
    };
    let subject = a.subject.clone().unwrap_or_else(|| stem(&a.fixed_lms));
    say(out, format_args!("Subject | Orig. | Registered"))?;
    say(out, format_args!("{}", tre_row(&subject, &summary)))?;
    if let Some(p) = &a.out {
        io::write_tre_csv(p, &summary.registered)?;
    }
    if let Some(p) = &a.report {
        io::write_json(p, &summary)?;
    }
    Ok(a.report.clone())
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn cmd_eval_dice(a: &EvalDiceArgs, out: &mut dyn Write) -> Result<Option<PathBuf>> {
    let la = io::read_labels(&a.labels_a)?;
    let lb = io::read_labels(&a.labels_b)?;
    la.geometry().ensure_same(lb.geometry())?;
    let labels = if a.label_list.is_empty() {
        let mut all: Vec<u32> = la.labels().iter().chain(lb.labels()).copied().filter(|&l| l != 0).collect();
        all.sort_unstable();
        all.dedup();
        all
    } else {
        a.label_list.clone()
    };
    if labels.is_empty() {
        return Err(Error::Parameter("no labels to score".into()));
    }
    let entries = labels
        .iter()
        .map(|&label| Ok(DiceEntry { label, dice: dice(&la, &lb, label)? }))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = entries.iter().map(|e| e.dice).collect();
    let (mean, std) = mean_std(&scores);
    for e in &entries {
        say(out, format_args!("label {}: {:.4}", e.label, e.dice))?;
    }
    say(out, format_args!("mean: {mean:.4} ± {std:.4}"))?;
    if let Some(p) = &a.out {
        io::write_json(p, &DiceSummary { schema_version: io::REPORT_SCHEMA_VERSION, labels: entries, mean, std })?;
    }
    Ok(a.out.clone())
}
