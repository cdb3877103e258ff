//! `ren`: simulate and analyse automata with recursive neighbor estimation.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ren_core::analysis::{
    classify_pattern, evolve, transient_experiment, AnalysisError, TransientConfig,
};
use ren_core::compiler::{
    compile_extended_eca, table_fingerprint, TableStepper, MAX_COMPILED_RADIUS,
};
use ren_core::render::{default_palette, render_pbm, render_ppm_radius, PbmFormat, SpaceTime};
use ren_core::rle::{parse_rle, Pattern};
use ren_core::rule::{eca_equivalence_classes, parse_life_code};
use ren_core::soup::{build_gradient_radius_field, derive_seed, random_soup_1d, random_soup_2d};
use ren_core::{
    Automaton, BaseRule, Boundary, EcaAutomaton, EcaRule, ExtendedRule, Grid1D, Grid2D,
    LifeAutomaton, LifeRule, SequenceCode,
};

/// Role tags for seeds derived from a single `--seed`.
const ROLE_SOUP: u64 = 1;
const ROLE_FIELD: u64 = 2;

#[derive(Parser)]
#[command(
    name = "ren",
    version,
    about = "Cellular automata with recursive estimation of neighbors"
)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rule and write a space-time diagram (1-D) or final state (2-D).
    Simulate(SimulateArgs),
    /// Transient-length experiment over random soups; CSV on stdout or --out.
    Transient(TransientArgs),
    /// Classify an RLE pattern as still life, oscillator, spaceship, ...
    Classify(ClassifyArgs),
    /// Mix two radii in one Life-like grid along a left-to-right gradient.
    Mix(MixArgs),
    /// List elementary rules and their mirror/complement classes.
    Rules(RulesArgs),
    /// Compile an extended elementary rule to a RENW lookup table.
    Compile(CompileArgs),
}

#[derive(Debug, Clone, Copy)]
struct Dims {
    width: usize,
    height: usize,
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("`{t}` is not a positive integer"))
    };
    Ok(Dims {
        width: num(w)?,
        height: num(h)?,
    })
}

#[derive(Debug, Clone)]
enum Init {
    Single,
    Soup { density: f64, seed: u64 },
    Rle(PathBuf),
}

fn parse_init(s: &str) -> Result<Init, String> {
    if s == "single" {
        return Ok(Init::Single);
    }
    if let Some(path) = s.strip_prefix("rle:") {
        return Ok(Init::Rle(PathBuf::from(path)));
    }
    if let Some(rest) = s.strip_prefix("soup:") {
        let (d, seed) = rest.split_once(':').ok_or("expected soup:DENSITY:SEED")?;
        let density = parse_density(d)?;
        let seed = seed.parse().map_err(|_| format!("bad seed `{seed}`"))?;
        return Ok(Init::Soup { density, seed });
    }
    Err(format!(
        "expected single, soup:DENSITY:SEED or rle:PATH, got `{s}`"
    ))
}

fn parse_density(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|d| (0.0..=1.0).contains(d))
        .ok_or_else(|| format!("density `{s}` is not a number in [0, 1]"))
}

fn parse_radius(s: &str) -> Result<u32, String> {
    s.parse::<u32>()
        .ok()
        .filter(|&r| r >= 1)
        .ok_or_else(|| format!("radius `{s}` must be an integer >= 1"))
}

#[derive(Debug, Clone)]
struct Radii(Vec<u32>);

fn parse_radii(s: &str) -> Result<Radii, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse_radius(a)?, parse_radius(b)?);
                if a > b {
                    return Err(format!("empty radius range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_radius(part)?),
        }
    }
    Ok(Radii(out))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Periodic,
    FixedZero,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Periodic => Boundary::Periodic,
            BoundaryArg::FixedZero => Boundary::FixedZero,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    /// P4
    Raw,
    /// P1
    Plain,
}

impl From<FormatArg> for PbmFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Raw => PbmFormat::Raw,
            FormatArg::Plain => PbmFormat::Plain,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Layered,
    /// Compiled lookup table (elementary rules, R <= 12)
    Table,
}

#[derive(Args)]
struct SimulateArgs {
    /// Extended rule code such as '#110R2' or 'B3S23R4'
    #[arg(long, value_parser = parse_rule)]
    rule: ExtendedRule,
    /// Lattice width for elementary rules
    #[arg(long, conflicts_with = "dims")]
    width: Option<usize>,
    /// WIDTHxHEIGHT for Life-like rules
    #[arg(long, value_parser = parse_dims)]
    dims: Option<Dims>,
    #[arg(long, default_value_t = 100)]
    steps: u64,
    /// single | soup:DENSITY:SEED | rle:PATH
    #[arg(long, default_value = "single", value_parser = parse_init)]
    init: Init,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
    boundary: BoundaryArg,
    /// Output PBM file, or - for stdout
    #[arg(long)]
    out: PathBuf,
    /// Also write every Nth 2-D frame as OUT_STEM-TTTTTT.pbm
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    every: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Raw)]
    format: FormatArg,
    #[arg(long, value_enum, default_value_t = EngineArg::Layered)]
    engine: EngineArg,
}

#[derive(Args)]
struct TransientArgs {
    /// Sequence code such as '[B3S23]' or '[#110]'
    #[arg(long, value_parser = parse_sequence)]
    seq: SequenceCode,
    /// Comma-separated radii; ranges like 1..4 allowed
    #[arg(long, value_parser = parse_radii)]
    radii: Radii,
    /// WIDTHxHEIGHT for Life-like sequences
    #[arg(long, value_parser = parse_dims, conflicts_with = "width")]
    dims: Option<Dims>,
    /// Lattice width for elementary sequences
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, default_value = "0.5", value_parser = parse_density)]
    density: f64,
    /// Soups per radius
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    #[arg(long, default_value_t = 20_000)]
    max_steps: u64,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// States kept for exact cycle detection before switching to Brent's method
    #[arg(long, default_value_t = 1 << 20)]
    max_states: usize,
    /// CSV file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Life-like rule code; defaults to the pattern's rule, else B3S23R1
    #[arg(long, value_parser = parse_rule)]
    rule: Option<ExtendedRule>,
    /// RLE file
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    max_period: u64,
    /// Empty border around the pattern (default: R * max_period + extent)
    #[arg(long)]
    pad: Option<usize>,
}

#[derive(Args)]
struct MixArgs {
    /// Life-like base rule such as B4S1234
    #[arg(long, value_parser = parse_life)]
    rule: LifeRule,
    /// Radius at the left edge
    #[arg(long, value_parser = parse_radius)]
    left_r: u32,
    /// Radius at the right edge
    #[arg(long, value_parser = parse_radius)]
    right_r: u32,
    #[arg(long, default_value = "256x128", value_parser = parse_dims)]
    dims: Dims,
    /// Initial density (default 0.2 for B4S1234, 0.5 otherwise)
    #[arg(long, value_parser = parse_density)]
    density: Option<f64>,
    #[arg(long, default_value_t = 500)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
    boundary: BoundaryArg,
    /// Output PPM of the final state, or - for stdout
    #[arg(long)]
    out: PathBuf,
    /// Also write every Nth frame as OUT_STEM-TTTTTT.ppm
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    every: Option<u64>,
}

#[derive(Args)]
struct RulesArgs {
    /// Print the 88 mirror/complement classes instead of all 256 rules
    #[arg(long)]
    classes: bool,
}

#[derive(Args)]
struct CompileArgs {
    /// Extended elementary rule such as '#30R8'
    #[arg(long, value_parser = parse_rule)]
    rule: ExtendedRule,
    /// RENW output file
    #[arg(long)]
    out: PathBuf,
}

fn parse_rule(s: &str) -> Result<ExtendedRule, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_sequence(s: &str) -> Result<SequenceCode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_life(s: &str) -> Result<LifeRule, String> {
    parse_life_code(s).map_err(|e| format!("{e}"))
}

/// A flag combination that clap cannot check on its own. Exits with 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if path == Path::new("-") {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()?;
        return Ok(());
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// `dir/stem-000120.ext` for frame `t` of `out`.
fn frame_path(out: &Path, t: u64, ext: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "frame".to_string());
    out.with_file_name(format!("{stem}-{t:06}.{ext}"))
}

fn read_pattern(path: &Path) -> Result<(Pattern, Option<ExtendedRule>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_rle(&text).with_context(|| format!("parsing {}", path.display()))
}

fn centered_2d(pattern: &Pattern, dims: Dims, boundary: Boundary) -> Result<Grid2D> {
    if pattern.width() > dims.width || pattern.height() > dims.height {
        bail!(
            "pattern is {}x{} but the grid is only {}x{}",
            pattern.width(),
            pattern.height(),
            dims.width,
            dims.height
        );
    }
    let (r0, c0) = (
        (dims.height - pattern.height()) / 2,
        (dims.width - pattern.width()) / 2,
    );
    let mut g = Grid2D::new(dims.width, dims.height, boundary);
    for &(r, c) in pattern.cells() {
        g.set(r0 + r, c0 + c, true);
    }
    Ok(g)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let boundary = Boundary::from(args.boundary);
    let format = PbmFormat::from(args.format);
    let radius = args.rule.radius();
    match args.rule.base {
        BaseRule::Eca(rule) => {
            if args.dims.is_some() {
                return usage("elementary rules take --width, not --dims");
            }
            if args.every.is_some() {
                return usage("--every applies to 2-D runs only");
            }
            let Some(width) = args.width else {
                return usage("elementary rules need --width");
            };
            if width == 0 {
                return usage("--width must be positive");
            }
            let initial = match &args.init {
                Init::Single => Grid1D::single_seed(width, boundary),
                Init::Soup { density, seed } => {
                    random_soup_1d(width, *density, derive_seed(*seed, &[ROLE_SOUP]), boundary)?
                }
                Init::Rle(path) => {
                    let (p, _) = read_pattern(path)?;
                    if p.height() > 1 || p.width() > width {
                        bail!("a 1-D start pattern must be one row of at most {width} cells");
                    }
                    let mut g = Grid1D::new(width, boundary);
                    let c0 = (width - p.width()) / 2;
                    for &(_, c) in p.cells() {
                        g.set(c0 + c, true);
                    }
                    g
                }
            };
            let st = match args.engine {
                EngineArg::Layered => SpaceTime::record(
                    &EcaAutomaton::homogeneous(rule, radius)?,
                    &initial,
                    args.steps as usize,
                )?,
                EngineArg::Table => {
                    check_compiled_radius(radius)?;
                    let table = compile_extended_eca(rule, radius)?;
                    SpaceTime::record(&TableStepper::new(&table), &initial, args.steps as usize)?
                }
            };
            write_output(&args.out, &render_pbm(&st, format))
        }
        BaseRule::Life(rule) => {
            if args.width.is_some() {
                return usage("Life-like rules take --dims, not --width");
            }
            if matches!(args.engine, EngineArg::Table) {
                return usage("--engine table supports elementary rules only");
            }
            let Some(dims) = args.dims else {
                return usage("Life-like rules need --dims WIDTHxHEIGHT");
            };
            let automaton = LifeAutomaton::new(rule, radius)?;
            let mut state = match &args.init {
                Init::Single => {
                    let mut g = Grid2D::new(dims.width, dims.height, boundary);
                    g.set(dims.height / 2, dims.width / 2, true);
                    g
                }
                Init::Soup { density, seed } => random_soup_2d(
                    dims.width,
                    dims.height,
                    *density,
                    derive_seed(*seed, &[ROLE_SOUP]),
                    boundary,
                )?,
                Init::Rle(path) => centered_2d(&read_pattern(path)?.0, dims, boundary)?,
            };
            match args.every {
                None => state = evolve(&automaton, &state, args.steps)?,
                Some(every) => {
                    for t in 0..=args.steps {
                        if t > 0 {
                            state = automaton.step(&state)?;
                        }
                        if t % every == 0 {
                            write_output(
                                &frame_path(&args.out, t, "pbm"),
                                &render_pbm(&state, format),
                            )?;
                        }
                    }
                }
            }
            write_output(&args.out, &render_pbm(&state, format))
        }
    }
}

fn cmd_transient(args: TransientArgs) -> Result<()> {
    let (width, height) = match (args.seq.base, args.dims, args.width) {
        (BaseRule::Eca(_), Some(_), _) => {
            return usage("elementary sequences take --width, not --dims")
        }
        (BaseRule::Eca(_), None, Some(w)) => (w, 1),
        (BaseRule::Eca(_), None, None) => (256, 1),
        (BaseRule::Life(_), _, Some(_)) => {
            return usage("Life-like sequences take --dims, not --width")
        }
        (BaseRule::Life(_), Some(d), None) => (d.width, d.height),
        (BaseRule::Life(_), None, None) => (64, 64),
    };
    if width == 0 {
        return usage("--width must be positive");
    }
    let mut config = TransientConfig::new(args.seq.clone(), args.radii.0.clone());
    config.width = width;
    config.height = height;
    config.density = args.density;
    config.n_seeds = args.seeds as usize;
    config.max_steps = args.max_steps;
    config.base_seed = args.seed;
    config.max_states_remembered = args.max_states;
    let report = transient_experiment(&config)?;
    match &args.out {
        Some(path) => write_output(path, report.to_csv().as_bytes())?,
        None => write_output(Path::new("-"), report.to_csv().as_bytes())?,
    }
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
    for s in &report.summaries {
        eprintln!(
            "{}R{}: runs={} timeouts={} mean_transient={} median_transient={}",
            args.seq.base,
            s.radius,
            s.runs,
            s.timeouts,
            fmt_opt(s.mean_transient),
            fmt_opt(s.median_transient)
        );
    }
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let (pattern, file_rule) = read_pattern(&args.pattern)?;
    let rule = args
        .rule
        .or(file_rule)
        .unwrap_or(ExtendedRule::new(BaseRule::Life(LifeRule::conway()), 1)?);
    let BaseRule::Life(life) = rule.base else {
        return usage("classify needs a Life-like rule");
    };
    let automaton = LifeAutomaton::new(life, rule.radius())?;
    match classify_pattern(&pattern, &automaton, args.max_period as usize, args.pad) {
        Ok(class) => {
            println!("{class}");
            Ok(())
        }
        Err(e @ AnalysisError::InsufficientPad { .. }) => usage(e.to_string()),
        Err(e) => Err(e.into()),
    }
}

fn cmd_mix(args: MixArgs) -> Result<()> {
    let boundary = Boundary::from(args.boundary);
    let Dims { width, height } = args.dims;
    if width < 2 {
        return usage("mixing needs a grid at least 2 cells wide");
    }
    let density = args
        .density
        .unwrap_or(if args.rule == parse_life("B4S1234").unwrap() {
            0.2
        } else {
            0.5
        });
    let field = build_gradient_radius_field(
        width,
        height,
        args.left_r,
        args.right_r,
        derive_seed(args.seed, &[ROLE_FIELD]),
    )?;
    let palette = default_palette();
    if (field.max_radius() as usize) > palette.len() {
        return usage(format!(
            "radii above {} have no palette color",
            palette.len()
        ));
    }
    let field = Arc::new(field);
    let soup = random_soup_2d(
        width,
        height,
        density,
        derive_seed(args.seed, &[ROLE_SOUP]),
        boundary,
    )?;
    let mut state = soup
        .with_radius_field(field.clone())
        .expect("field built for these dimensions");
    let automaton = LifeAutomaton::new(args.rule, field.max_radius())?;
    for t in 0..=args.steps {
        if t > 0 {
            state = automaton.step(&state)?;
        }
        if args.every.is_some_and(|e| t % e == 0) {
            write_output(
                &frame_path(&args.out, t, "ppm"),
                &render_ppm_radius(&state, &field, &palette)?,
            )?;
        }
    }
    write_output(&args.out, &render_ppm_radius(&state, &field, &palette)?)
}

fn cmd_rules(args: RulesArgs) -> Result<()> {
    let classes = eca_equivalence_classes();
    let mut out = String::new();
    if args.classes {
        for class in &classes {
            let members: Vec<String> = class.members.iter().map(|r| r.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\n",
                class.representative,
                members.join(" ")
            ));
        }
    } else {
        for n in 0..=255u8 {
            let rule = EcaRule::new(n);
            let rep = classes
                .iter()
                .find(|c| c.members.contains(&rule))
                .map(|c| c.representative)
                .expect("classes partition all rules");
            out.push_str(&format!("{rule}\tclass {rep}\n"));
        }
    }
    write_output(Path::new("-"), out.as_bytes())
}

fn check_compiled_radius(radius: u32) -> Result<()> {
    if radius > MAX_COMPILED_RADIUS {
        return usage(format!(
            "tables stop at R = {MAX_COMPILED_RADIUS}; use the layered engine for R = {radius}"
        ));
    }
    Ok(())
}

fn cmd_compile(args: CompileArgs) -> Result<()> {
    let BaseRule::Eca(rule) = args.rule.base else {
        return usage("only elementary rules compile to tables");
    };
    check_compiled_radius(args.rule.radius())?;
    let table = compile_extended_eca(rule, args.rule.radius())?;
    write_output(&args.out, &table.to_bytes())?;
    println!("{:032x}", table_fingerprint(&table));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return usage("--threads must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker threads")?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Transient(a) => cmd_transient(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Mix(a) => cmd_mix(a),
        Command::Rules(a) => cmd_rules(a),
        Command::Compile(a) => cmd_compile(a),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
