use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use ddcap::asymptotics::constant_k;
use ddcap::bounds::{AlphaChoice, BoundsReport, Evaluation};
use ddcap::capacity::{blahut_arimoto, BaOptions, SimplexGrid, DEFAULT_GRID_STEP};
use ddcap::channel::{law_check, random_blocks, sample_segmented};
use ddcap::figures::{fig1_rows, fig2_rows, fig34_rows, linear_grid};
use ddcap::ChannelParams;

mod table;

use table::{Cell, Format, Table};

const EXIT_USAGE: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ddcap", version, about = "Capacity bounds for deletion/duplication channels")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "csv")]
    format: Format,

    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form bounds at one parameter point.
    Bounds(BoundsArgs),
    /// Blahut–Arimoto capacity with side information.
    Capacity(CapacityArgs),
    /// Regenerate figure data as CSV files.
    Figures(FiguresArgs),
    /// Monte Carlo run of the segmented channel.
    Simulate(SimulateArgs),
    /// The constants K, K1 and K2.
    Constants(ConstantsArgs),
    /// Bounds (and optionally capacity) over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct PointArgs {
    #[arg(long)]
    ell: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct AlphaArgs {
    /// Fixed Markov transition probability.
    #[arg(long)]
    alpha: Option<f64>,
    /// Maximize over α.
    #[arg(long)]
    optimize_alpha: bool,
    /// Uniform input (α = 0.5).
    #[arg(long)]
    uniform: bool,
}

impl AlphaArgs {
    fn choice(&self) -> AlphaChoice {
        match (self.alpha, self.optimize_alpha) {
            (Some(a), _) => AlphaChoice::Fixed(a),
            (None, true) => AlphaChoice::Optimize,
            _ => AlphaChoice::Uniform,
        }
    }
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    alpha: AlphaArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BaArgs {
    /// Bracket width in bits per block.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
}

impl BaArgs {
    fn options(&self) -> BaOptions {
        BaOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..BaOptions::default()
        }
    }
}

#[derive(Debug, Args)]
struct CapacityArgs {
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    ba: BaArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FiguresArgs {
    /// Figures to regenerate; 3 and 4 share fig34.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u8).range(1..=4))]
    fig: Vec<u8>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Spacing of the (p,q) grid.
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    /// Largest p+q on the figure 1 grid.
    #[arg(long, default_value_t = 1.0)]
    max_sum: f64,
    /// Block lengths for figure 1.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 5, 6, 7, 8])]
    fig1_ells: Vec<usize>,
    /// Block lengths for figure 2.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32, 64, 128, 256])]
    fig2_ells: Vec<usize>,
    /// Duplication probabilities for figure 2.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75])]
    fig2_qs: Vec<f64>,
    #[command(flatten)]
    ba: BaArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long)]
    blocks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Compare per-block output frequencies with the exact law.
    #[arg(long)]
    check_law: bool,
    /// Smallest expected count of an output word included in the law check.
    #[arg(long, default_value_t = 20.0)]
    min_expected: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    /// Bound on the truncated tail of K.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// `start:stop:step`, or a single value.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Range {
    start: f64,
    stop: f64,
    step: f64,
}

fn parse_range(s: &str) -> Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let r = match parts.as_slice() {
        [v] => {
            let v = num(v)?;
            Range {
                start: v,
                stop: v,
                step: 1.0,
            }
        }
        [a, b, c] => Range {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        },
        _ => return Err("expected start:stop:step or a single value".into()),
    };
    if !(r.step > 0.0) {
        return Err(format!("step {} must be positive", r.step));
    }
    if !(0.0 <= r.start && r.start <= r.stop && r.stop <= 1.0) {
        return Err(format!("range [{}, {}] outside [0, 1]", r.start, r.stop));
    }
    Ok(r)
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Block lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    ell: Vec<usize>,
    /// Deletion probabilities as start:stop:step.
    #[arg(long, value_parser = parse_range)]
    p: Range,
    /// Duplication probabilities as start:stop:step.
    #[arg(long, value_parser = parse_range)]
    q: Range,
    #[command(flatten)]
    alpha: AlphaArgs,
    /// Also run Blahut–Arimoto at every point.
    #[arg(long)]
    ba: bool,
    #[command(flatten)]
    ba_opts: BaArgs,
    /// Recorded in the output for provenance; the sweep itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(io::Error),
}

impl From<ddcap::Error> for Failure {
    fn from(e: ddcap::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type CmdResult = Result<u8, Failure>;

fn emit(table: &Table, format: Format, out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, table.render(format)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write_to(format, &mut lock)?;
            lock.flush()
        }
    }
}

fn evaluation_name(e: Evaluation) -> &'static str {
    match e {
        Evaluation::ClosedForm => "closed_form",
        Evaluation::Enumeration => "enumeration",
    }
}

const BOUNDS_HEADER: [&str; 11] = [
    "ell",
    "p",
    "q",
    "alpha",
    "l_si_alpha",
    "l_si_uniform",
    "upper_u",
    "l_no_si",
    "l_no_si_raw",
    "hb_pq",
    "evaluation",
];

fn bounds_cells(r: &BoundsReport) -> Vec<Cell> {
    vec![
        r.params.ell().into(),
        r.params.p().into(),
        r.params.q().into(),
        r.alpha.into(),
        r.l_si_alpha.into(),
        r.l_si_uniform.into(),
        r.upper_u.into(),
        r.l_no_si.into(),
        r.l_no_si_raw.into(),
        r.hb_pq.into(),
        evaluation_name(r.evaluation).into(),
    ]
}

fn cmd_bounds(args: &BoundsArgs, format: Format) -> CmdResult {
    let pt = &args.point;
    let params = ChannelParams::new(pt.ell, pt.p, pt.q)?;
    let report = BoundsReport::evaluate(&params, args.alpha.choice())?;
    let mut t = Table::new(BOUNDS_HEADER.to_vec());
    t.push(bounds_cells(&report));
    emit(&t, format, args.out.as_deref())?;
    Ok(0)
}

fn cmd_capacity(args: &CapacityArgs, format: Format) -> CmdResult {
    let pt = &args.point;
    let params = ChannelParams::new(pt.ell, pt.p, pt.q)?;
    let sol = blahut_arimoto(&params, &args.ba.options())?;
    let mut t = Table::new(vec![
        "ell",
        "p",
        "q",
        "capacity_bits_per_symbol",
        "upper_bits_per_symbol",
        "bracket_lower",
        "bracket_upper",
        "iterations",
        "converged",
    ]);
    t.push(vec![
        pt.ell.into(),
        pt.p.into(),
        pt.q.into(),
        sol.capacity_bits_per_symbol.into(),
        sol.upper_bits_per_symbol().into(),
        sol.bracket_lower.into(),
        sol.bracket_upper.into(),
        sol.iterations.into(),
        sol.converged.into(),
    ]);
    emit(&t, format, args.out.as_deref())?;
    if sol.converged {
        Ok(0)
    } else {
        eprintln!(
            "ddcap: Blahut–Arimoto stopped after {} iterations with bracket width {:e}",
            sol.iterations,
            sol.bracket_upper - sol.bracket_lower
        );
        Ok(EXIT_NONCONVERGENCE)
    }
}

fn cmd_figures(args: &FiguresArgs, format: Format) -> CmdResult {
    fs::create_dir_all(&args.out)?;
    let ba = args.ba.options();
    let mut warnings = 0usize;
    let file = |name: &str| args.out.join(format!("{name}.{}", format.extension()));

    if args.fig.contains(&1) {
        let grid = SimplexGrid::new(args.grid_step, args.max_sum)?;
        let rows = fig1_rows(&args.fig1_ells, &grid, &ba)?;
        let mut t = Table::new(vec!["ell", "delta_u_percent", "delta_l_percent"]);
        for r in &rows {
            for (p, q) in &r.excluded {
                warnings += 1;
                eprintln!("ddcap: warning: fig1 ell={} p={p} q={q}: no convergence, excluded", r.ell);
            }
            t.push(vec![r.ell.into(), r.delta_u_percent.into(), r.delta_l_percent.into()]);
        }
        emit(&t, format, Some(&file("fig1")))?;
    }

    if args.fig.contains(&2) {
        let rows = fig2_rows(&args.fig2_ells, &args.fig2_qs, args.grid_step)?;
        let mut t = Table::new(vec!["ell", "q", "delta_lsi_percent"]);
        for r in &rows {
            t.push(vec![r.ell.into(), r.q.into(), r.delta_lsi_percent.into()]);
        }
        emit(&t, format, Some(&file("fig2")))?;
    }

    let mut fig34_ells = Vec::new();
    if args.fig.contains(&3) {
        fig34_ells.push(8);
    }
    if args.fig.contains(&4) {
        fig34_ells.push(2);
    }
    if !fig34_ells.is_empty() {
        let ps = linear_grid(0.0, 1.0, args.grid_step)?;
        let mut t = Table::new(vec!["ell", "p", "upper_u", "l_opt", "l_uniform", "c_si"]);
        for ell in fig34_ells {
            for r in fig34_rows(ell, &ps, &ba)? {
                if !r.converged {
                    warnings += 1;
                    eprintln!("ddcap: warning: fig34 ell={ell} p={}: no convergence", r.p);
                }
                t.push(vec![
                    r.ell.into(),
                    r.p.into(),
                    r.upper_u.into(),
                    r.l_opt.into(),
                    r.l_uniform.into(),
                    r.c_si.into(),
                ]);
            }
        }
        emit(&t, format, Some(&file("fig34")))?;
    }

    if warnings > 0 {
        eprintln!("ddcap: {warnings} warning(s)");
    }
    Ok(0)
}

fn cmd_simulate(args: &SimulateArgs, format: Format) -> CmdResult {
    let pt = &args.point;
    let params = ChannelParams::new(pt.ell, pt.p, pt.q)?;
    let blocks = random_blocks(pt.ell, args.blocks, args.seed)?;
    let sample = sample_segmented(&params, &blocks, args.seed)?;
    let (del, unchanged, dup) = sample.tallies();
    let mut header = vec![
        "ell",
        "p",
        "q",
        "blocks",
        "seed",
        "output_len",
        "deletions",
        "unchanged",
        "duplications",
    ];
    let mut row: Vec<Cell> = vec![
        pt.ell.into(),
        pt.p.into(),
        pt.q.into(),
        args.blocks.into(),
        args.seed.into(),
        sample.output.len().into(),
        del.into(),
        unchanged.into(),
        dup.into(),
    ];
    if args.check_law {
        let check = law_check(&params, &sample, args.min_expected)?;
        header.extend(["checked_outputs", "max_z", "impossible_outputs"]);
        row.extend([
            check.checked.into(),
            check.max_z.into(),
            check.impossible.into(),
        ]);
    }
    let mut t = Table::new(header);
    t.push(row);
    emit(&t, format, args.out.as_deref())?;
    Ok(0)
}

fn cmd_constants(args: &ConstantsArgs, format: Format) -> CmdResult {
    let c = constant_k(args.tol)?;
    let mut t = Table::new(vec!["k", "k1", "k2", "terms", "tail_bound"]);
    t.push(vec![
        c.k.into(),
        c.k1.into(),
        c.k2.into(),
        c.terms.into(),
        c.tail_bound.into(),
    ]);
    emit(&t, format, args.out.as_deref())?;
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs, format: Format) -> CmdResult {
    let ps = linear_grid(args.p.start, args.p.stop, args.p.step)?;
    let qs = linear_grid(args.q.start, args.q.stop, args.q.step)?;
    let mut points = Vec::new();
    for &ell in &args.ell {
        for &p in &ps {
            for &q in &qs {
                if p + q <= 1.0 + 1e-12 {
                    points.push(ChannelParams::new(ell, p, q)?);
                }
            }
        }
    }
    let choice = args.alpha.choice();
    let ba = args.ba_opts.options();
    let rows = points
        .par_iter()
        .map(|params| {
            let report = BoundsReport::evaluate(params, choice)?;
            let sol = if args.ba {
                Some(blahut_arimoto(params, &ba)?)
            } else {
                None
            };
            Ok((report, sol))
        })
        .collect::<ddcap::Result<Vec<_>>>()?;

    let mut header = BOUNDS_HEADER.to_vec();
    header.push("seed");
    if args.ba {
        header.extend(["c_si", "converged"]);
    }
    let mut t = Table::new(header);
    let mut unconverged = 0;
    for (report, sol) in &rows {
        let mut cells = bounds_cells(report);
        cells.push(args.seed.into());
        if let Some(sol) = sol {
            unconverged += usize::from(!sol.converged);
            cells.push(sol.capacity_bits_per_symbol.into());
            cells.push(sol.converged.into());
        }
        t.push(cells);
    }
    emit(&t, format, args.out.as_deref())?;
    if unconverged > 0 {
        eprintln!("ddcap: {unconverged} point(s) did not converge");
        return Ok(EXIT_NONCONVERGENCE);
    }
    Ok(0)
}

fn run(cli: &Cli) -> CmdResult {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a, cli.format),
        Command::Capacity(a) => cmd_capacity(a, cli.format),
        Command::Figures(a) => cmd_figures(a, cli.format),
        Command::Simulate(a) => cmd_simulate(a, cli.format),
        Command::Constants(a) => cmd_constants(a, cli.format),
        Command::Sweep(a) => cmd_sweep(a, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("ddcap: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(e)) => {
            eprintln!("ddcap: {e}");
            ExitCode::FAILURE
        }
    }
}
