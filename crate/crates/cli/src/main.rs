//! `permrad`: encode/decode, subset statistics, BLER simulation and
//! ambiguity-function sweeps for frequency-permutation waveforms.

mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use permrad::bler::{nn_approx, union_bound, BoundInputs};
use permrad::montecarlo::{run_bler_paired, ReceiverKind, SimConfig, SimResult};
use permrad::radar::{
    af_grid, grid_psl, is_costas, lattice_psl, max_repeats, repeats_histogram, FrequencyMapping, PslGrid,
    WaveformParams,
};
use permrad::subsets::DEFAULT_BUDGET;
use permrad::{Permutation, SubsetSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use output::{Cell, OutputDir};

#[derive(Debug)]
pub enum CliError {
    Core(permrad::Error),
    Usage(String),
    Io(String),
}

impl From<permrad::Error> for CliError {
    fn from(e: permrad::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(permrad::Error::BudgetExceeded { .. }) => 3,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(s) | CliError::Io(s) => f.write_str(s),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "permrad", version, about)]
struct Cli {
    /// Worker threads for simulations and sweeps; 0 uses every core.
    #[arg(long, global = true, env = "PERMRAD_WORKERS", default_value_t = 0)]
    workers: usize,

    /// Output directory for CSV files and manifests.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// File name stem for outputs (default derived from the command and subset).
    #[arg(long, global = true)]
    name: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Map a data symbol to its permutation (printed 1-based).
    Encode {
        #[command(flatten)]
        subset: SubsetArgs,
        #[arg(long)]
        symbol: u64,
    },
    /// Map a permutation (1-based, comma separated) back to its symbol.
    Decode {
        #[command(flatten)]
        subset: SubsetArgs,
        #[arg(long)]
        perm: String,
    },
    /// Size, minimum distance, distance distribution and repeats histogram.
    SubsetStats {
        #[command(flatten)]
        subset: SubsetArgs,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Monte Carlo BLER from a JSON config, optionally with bound columns.
    Bler {
        /// Simulation config, or a manifest written by an earlier `bler` run.
        #[arg(long)]
        config: PathBuf,
        /// Comma separated SNR grid in dB, overriding the config.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_trials: Option<u64>,
        #[arg(long)]
        min_errors: Option<u64>,
        /// Add union bound and nearest-neighbor columns.
        #[arg(long)]
        bounds: bool,
    },
    /// Ambiguity-function magnitude grid and peak sidelobe summary.
    Af {
        /// Permutation, 1-based and comma separated.
        #[arg(long)]
        perm: String,
        /// Tone labels, 1-based and comma separated (default identity).
        #[arg(long)]
        mapping: Option<String>,
        /// Delay half-span in units of T (default M).
        #[arg(long)]
        tau_span: Option<f64>,
        /// Doppler half-span in units of 1/T (default M).
        #[arg(long)]
        fd_span: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[command(flatten)]
        psl: PslArgs,
    },
    /// Dense-grid peak sidelobe level of every subset member.
    PslHist {
        #[command(flatten)]
        subset: SubsetArgs,
        #[command(flatten)]
        psl: PslArgs,
        #[arg(long, default_value_t = 0.05)]
        bin_width: f64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Repeats histogram under a frequency mapping versus the identity.
    /// Radar-ranked subsets are ranked under the identity mapping here.
    RemapEval {
        #[command(flatten)]
        subset: SubsetArgs,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SubsetKind {
    Universal,
    Block,
    Alternating,
    Radar,
    Explicit,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SubsetArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, value_enum, default_value_t = SubsetKind::Universal)]
    subset: SubsetKind,
    /// Block length for `--subset block`.
    #[arg(long)]
    k: Option<usize>,
    /// Member count for `--subset radar`.
    #[arg(long)]
    size: Option<u64>,
    /// Member ranks for `--subset explicit`, comma separated.
    #[arg(long)]
    ranks: Option<String>,
    /// Tone labels, 1-based and comma separated (default identity).
    #[arg(long)]
    mapping: Option<String>,
}

impl SubsetArgs {
    fn mapping(&self) -> CliResult<FrequencyMapping> {
        match &self.mapping {
            Some(s) => Ok(FrequencyMapping::from_one_based(&parse_list(s, "mapping")?)?),
            None => Ok(FrequencyMapping::identity(self.m)?),
        }
    }

    fn build(&self, radar_mapping: &FrequencyMapping) -> CliResult<SubsetSpec> {
        let need = |what: &str| CliError::Usage(format!("--subset {:?} needs --{what}", self.subset).to_lowercase());
        Ok(match self.subset {
            SubsetKind::Universal => SubsetSpec::universal(self.m)?,
            SubsetKind::Block => SubsetSpec::block(self.m, self.k.ok_or_else(|| need("k"))?)?,
            SubsetKind::Alternating => SubsetSpec::alternating(self.m)?,
            SubsetKind::Radar => {
                SubsetSpec::radar_ranked(self.m, radar_mapping, self.size.ok_or_else(|| need("size"))?)?
            }
            SubsetKind::Explicit => {
                let ranks = parse_list(self.ranks.as_deref().ok_or_else(|| need("ranks"))?, "ranks")?;
                SubsetSpec::explicit(self.m, ranks)?
            }
        })
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct PslArgs {
    /// Delay/Doppler step of the sidelobe search grid.
    #[arg(long, default_value_t = PslGrid::default().step)]
    psl_step: f64,
    /// Delays with `|τ/T|` below this count as mainlobe.
    #[arg(long, default_value_t = PslGrid::default().min_tau)]
    min_tau: f64,
}

impl PslArgs {
    fn grid(&self) -> PslGrid {
        PslGrid {
            step: self.psl_step,
            min_tau: self.min_tau,
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Usage(format!("bad {what} entry '{t}'")))
        })
        .collect()
}

fn parse_perm(s: &str) -> CliResult<Permutation> {
    Ok(Permutation::from_one_based(&parse_list::<usize>(s, "permutation")?)?)
}

fn perm_label(p: &Permutation) -> String {
    p.to_one_based()
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn subset_label(spec: &SubsetSpec) -> String {
    let m = spec.m();
    match spec.variant() {
        permrad::Variant::Block { k } => format!("block{k}_m{m}"),
        permrad::Variant::RadarRanked { size, .. } => format!("radar{size}_m{m}"),
        _ => format!("{}_m{m}", spec.kind_name()),
    }
}

fn workers(n: usize) -> usize {
    if n > 0 {
        n
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

fn pool(n: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers(n))
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

fn print_json(v: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let t0 = Instant::now();
    match &cli.command {
        Command::Encode { subset, symbol } => {
            let spec = subset.build(&subset.mapping()?)?;
            println!(
                "{}",
                serde_json::to_string(&spec.encode(*symbol)?.to_one_based()).expect("serializable")
            );
            Ok(())
        }
        Command::Decode { subset, perm } => {
            let spec = subset.build(&subset.mapping()?)?;
            let p = parse_perm(perm)?;
            if p.m() == spec.m() && !spec.contains(&p) {
                return Err(permrad::Error::NotInSubset(p.to_string()).into());
            }
            println!("{}", spec.decode(&p)?);
            Ok(())
        }
        Command::SubsetStats { subset, budget } => subset_stats(&cli, subset, *budget, t0),
        Command::Bler {
            config,
            snr,
            seed,
            max_trials,
            min_errors,
            bounds,
        } => {
            let overrides = Overrides {
                snr: snr.as_deref().map(|s| parse_list(s, "SNR")).transpose()?,
                seed: *seed,
                max_trials: *max_trials,
                min_errors: *min_errors,
                bounds: *bounds,
            };
            bler(&cli, config, &overrides, t0)
        }
        Command::Af {
            perm,
            mapping,
            tau_span,
            fd_span,
            step,
            psl,
        } => {
            let p = parse_perm(perm)?;
            let map = match mapping {
                Some(s) => FrequencyMapping::from_one_based(&parse_list(s, "mapping")?)?,
                None => FrequencyMapping::identity(p.m())?,
            };
            af(
                &cli,
                &p,
                &map,
                tau_span.unwrap_or(p.m() as f64),
                fd_span.unwrap_or(p.m() as f64),
                *step,
                psl,
                t0,
            )
        }
        Command::PslHist {
            subset,
            psl,
            bin_width,
            budget,
        } => psl_hist(&cli, subset, psl, *bin_width, *budget, t0),
        Command::RemapEval { subset, budget } => remap_eval(&cli, subset, *budget, t0),
    }
}

fn subset_stats(cli: &Cli, args: &SubsetArgs, budget: u64, t0: Instant) -> CliResult<()> {
    let map = args.mapping()?;
    let spec = args.build(&map)?;
    let dist = spec.distance_distribution(budget)?;
    let hist = repeats_histogram(&spec, &map, budget)?;
    let stem = cli
        .name
        .clone()
        .unwrap_or_else(|| format!("stats_{}", subset_label(&spec)));
    let mut out = OutputDir::create(&cli.out)?;
    let costas = hist.get(&0).copied().unwrap_or(0);
    out.write_csv(
        &format!("{stem}_summary.csv"),
        &["m", "subset", "size", "d_min", "rate_bits", "costas"],
        vec![vec![
            spec.m().into(),
            spec.kind_name().into(),
            spec.size().into(),
            dist.d_min.into(),
            spec.data_rate_bits().into(),
            costas.into(),
        ]],
    )?;
    out.write_csv(
        &format!("{stem}_distance.csv"),
        &["distance", "count"],
        dist.a.iter().map(|(&l, &c)| vec![l.into(), c.into()]).collect(),
    )?;
    out.write_csv(
        &format!("{stem}_repeats.csv"),
        &["max_repeats", "count"],
        hist.iter().map(|(&r, &c)| vec![r.into(), c.into()]).collect(),
    )?;
    let config = json!({ "subset": spec, "mapping": map.to_one_based(), "budget": budget });
    let manifest = out.finish(&stem, "subset-stats", config, None, t0.elapsed())?;
    print_json(&json!({
        "size": spec.size(),
        "d_min": dist.d_min,
        "rate_bits": spec.data_rate_bits(),
        "costas": costas,
        "outputs": manifest.outputs,
    }));
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlerJob {
    /// Output stem; defaults to the subset label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(flatten)]
    sim: SimConfig,
    /// Receivers to run on identical trials instead of `receiver` alone.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    receivers: Vec<ReceiverKind>,
    #[serde(default)]
    bounds: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BlerFile {
    Replay { command: String, config: serde_json::Value },
    Many { runs: Vec<BlerJob> },
    One(Box<BlerJob>),
}

struct Overrides {
    snr: Option<Vec<f64>>,
    seed: Option<u64>,
    max_trials: Option<u64>,
    min_errors: Option<u64>,
    bounds: bool,
}

fn load_jobs(path: &PathBuf) -> CliResult<Vec<BlerJob>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", path.display()));
    match serde_json::from_str::<BlerFile>(&text).map_err(bad)? {
        BlerFile::Replay { command, config } => {
            if command != "bler" {
                return Err(CliError::Usage(format!("manifest is for '{command}', not 'bler'")));
            }
            match serde_json::from_value::<BlerFile>(config).map_err(bad)? {
                BlerFile::Many { runs } => Ok(runs),
                BlerFile::One(job) => Ok(vec![*job]),
                BlerFile::Replay { .. } => Err(CliError::Usage("nested manifest".into())),
            }
        }
        BlerFile::Many { runs } => Ok(runs),
        BlerFile::One(job) => Ok(vec![*job]),
    }
}

fn bler(cli: &Cli, path: &PathBuf, ov: &Overrides, t0: Instant) -> CliResult<()> {
    let mut jobs = load_jobs(path)?;
    if jobs.is_empty() {
        return Err(CliError::Usage("config has no runs".into()));
    }
    for job in &mut jobs {
        if let Some(s) = &ov.snr {
            job.sim.snr_grid_db = s.clone();
        }
        if let Some(s) = ov.seed {
            job.sim.seed = s;
        }
        if let Some(t) = ov.max_trials {
            job.sim.max_trials = t;
        }
        if let Some(e) = ov.min_errors {
            job.sim.min_errors = e;
        }
        job.bounds |= ov.bounds;
        job.sim.validate()?;
    }
    let mut stems = BTreeSet::new();
    for job in &jobs {
        let base = job.name.clone().unwrap_or_else(|| subset_label(&job.sim.subset));
        let receivers = if job.receivers.is_empty() {
            vec![job.sim.receiver]
        } else {
            job.receivers.clone()
        };
        for rx in &receivers {
            if !stems.insert(format!("{base}_{}", rx.label())) {
                return Err(CliError::Usage(format!("duplicate output name {base}_{}", rx.label())));
            }
        }
    }

    let mut out = OutputDir::create(&cli.out)?;
    let mut summary = Vec::new();
    for job in &jobs {
        let base = job.name.clone().unwrap_or_else(|| subset_label(&job.sim.subset));
        let receivers = if job.receivers.is_empty() {
            vec![job.sim.receiver]
        } else {
            job.receivers.clone()
        };
        let results = run_bler_paired(&job.sim, &receivers, workers(cli.workers))?;
        let bounds = if job.bounds {
            Some(bound_columns(&job.sim)?)
        } else {
            None
        };
        for res in &results {
            let file = format!("{base}_{}.csv", res.config.receiver.label());
            write_bler_csv(&mut out, &file, res, bounds.as_deref(), receivers.len() > 1)?;
            summary.push(json!({
                "file": file,
                "bler": res.points.iter().map(|p| p.bler).collect::<Vec<_>>(),
            }));
        }
    }
    let stem = cli.name.clone().unwrap_or_else(|| "bler".into());
    let seed = if jobs.len() == 1 { Some(jobs[0].sim.seed) } else { None };
    let config = json!({ "runs": jobs });
    out.finish(&stem, "bler", config, seed, t0.elapsed())?;
    print_json(&summary);
    Ok(())
}

/// `(union bound, nearest-neighbor approximation)` per SNR point.
fn bound_columns(cfg: &SimConfig) -> CliResult<Vec<(f64, Option<f64>)>> {
    let base = BoundInputs::from_parts(&cfg.subset, &cfg.channel, cfg.e_total, cfg.e_total)?;
    cfg.snr_grid_db
        .iter()
        .map(|&snr| {
            let inp = base.with_snr_db(snr);
            Ok((union_bound(&inp)?, nn_approx(&inp).ok()))
        })
        .collect()
}

fn write_bler_csv(
    out: &mut OutputDir,
    file: &str,
    res: &SimResult,
    bounds: Option<&[(f64, Option<f64>)]>,
    paired: bool,
) -> CliResult<()> {
    let mut header = vec![
        "snr_db",
        "trials",
        "errors",
        "bler",
        "ci_lo",
        "ci_hi",
        "fallbacks",
        "subproblems_mean",
    ];
    if paired {
        header.push("agree_with_first");
    }
    if bounds.is_some() {
        header.extend(["bound_ub", "bound_nn"]);
    }
    let rows = res
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = &p.diagnostics;
            let mut row: Vec<Cell> = vec![
                p.snr_db.into(),
                p.trials.into(),
                p.block_errors.into(),
                p.bler.into(),
                p.ci_lo.into(),
                p.ci_hi.into(),
                d.fallbacks.into(),
                (d.subproblems_total as f64 / p.trials.max(1) as f64).into(),
            ];
            if paired {
                row.push(d.agree_with_first.unwrap_or(p.trials).into());
            }
            if let Some(b) = bounds {
                row.push(b[i].0.into());
                row.push(b[i].1.into());
            }
            row
        })
        .collect();
    out.write_csv(file, &header, rows)
}

#[allow(clippy::too_many_arguments)]
fn af(
    cli: &Cli,
    p: &Permutation,
    map: &FrequencyMapping,
    tau_span: f64,
    fd_span: f64,
    step: f64,
    psl: &PslArgs,
    t0: Instant,
) -> CliResult<()> {
    let params = WaveformParams::normalized(p.m());
    let grid = af_grid(p, map, &params, tau_span, fd_span, step)?;
    let lattice = lattice_psl(p, map)?;
    let dense = pool(cli.workers)?.install(|| grid_psl(p, map, &params, &psl.grid()))?;
    let repeats = max_repeats(p, map)?;
    let costas = is_costas(p, map)?;
    let stem = cli.name.clone().unwrap_or_else(|| {
        let digits: Vec<String> = p.to_one_based().iter().map(|v| v.to_string()).collect();
        format!("af_{}", digits.join("-"))
    });
    let mut out = OutputDir::create(&cli.out)?;
    let mut rows = Vec::with_capacity(grid.tau_axis.len() * grid.fd_axis.len());
    for (i, &tau) in grid.tau_axis.iter().enumerate() {
        for (j, &fd) in grid.fd_axis.iter().enumerate() {
            rows.push(vec![tau.into(), fd.into(), grid.mag[i][j].into()]);
        }
    }
    out.write_csv(&format!("{stem}_grid.csv"), &["tau", "fd", "mag"], rows)?;
    out.write_csv(
        &format!("{stem}_summary.csv"),
        &["perm", "lattice_psl", "grid_psl", "max_repeats", "costas"],
        vec![vec![
            perm_label(p).into(),
            lattice.into(),
            dense.into(),
            repeats.into(),
            (costas as u64).into(),
        ]],
    )?;
    let config = json!({
        "perm": p.to_one_based(),
        "mapping": map.to_one_based(),
        "tau_span": tau_span,
        "fd_span": fd_span,
        "step": step,
        "psl": psl,
    });
    let manifest = out.finish(&stem, "af", config, None, t0.elapsed())?;
    print_json(&json!({
        "lattice_psl": lattice,
        "grid_psl": dense,
        "max_repeats": repeats,
        "costas": costas,
        "outputs": manifest.outputs,
    }));
    Ok(())
}

fn psl_hist(cli: &Cli, args: &SubsetArgs, psl: &PslArgs, bin_width: f64, budget: u64, t0: Instant) -> CliResult<()> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(CliError::Usage(format!("bin width {bin_width} must lie in (0, 1]")));
    }
    let map = args.mapping()?;
    let spec = args.build(&map)?;
    if spec.size() > budget {
        return Err(permrad::Error::BudgetExceeded {
            what: "peak sidelobe histogram",
            needed: spec.size(),
            budget,
        }
        .into());
    }
    let params = WaveformParams::normalized(spec.m());
    let grid = psl.grid();
    let members: Vec<Permutation> = spec.enumerate().collect();
    let values: Vec<f64> = pool(cli.workers)?.install(|| {
        members
            .par_iter()
            .map(|p| grid_psl(p, &map, &params, &grid))
            .collect::<permrad::Result<_>>()
    })?;

    let n_bins = (1.0 / bin_width - 1e-9).ceil() as usize;
    let mut counts = vec![0u64; n_bins];
    for &v in &values {
        counts[((v / bin_width) as usize).min(n_bins - 1)] += 1;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);

    let stem = cli
        .name
        .clone()
        .unwrap_or_else(|| format!("psl_{}", subset_label(&spec)));
    let mut out = OutputDir::create(&cli.out)?;
    out.write_csv(
        &format!("{stem}_values.csv"),
        &["rank", "perm", "psl"],
        members
            .iter()
            .zip(&values)
            .map(|(p, &v)| vec![p.rank().into(), perm_label(p).into(), v.into()])
            .collect(),
    )?;
    out.write_csv(
        &format!("{stem}_hist.csv"),
        &["bin_lo", "bin_hi", "count"],
        counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                vec![
                    (i as f64 * bin_width).into(),
                    ((i + 1) as f64 * bin_width).min(1.0).into(),
                    c.into(),
                ]
            })
            .collect(),
    )?;
    out.write_csv(
        &format!("{stem}_summary.csv"),
        &["count", "mean", "min", "max", "step", "min_tau"],
        vec![vec![
            values.len().into(),
            mean.into(),
            lo.into(),
            hi.into(),
            grid.step.into(),
            grid.min_tau.into(),
        ]],
    )?;
    let config = json!({ "subset": spec, "mapping": map.to_one_based(), "psl": psl, "bin_width": bin_width });
    let manifest = out.finish(&stem, "psl-hist", config, None, t0.elapsed())?;
    print_json(&json!({ "count": values.len(), "mean": mean, "min": lo, "max": hi, "outputs": manifest.outputs }));
    Ok(())
}

fn remap_eval(cli: &Cli, args: &SubsetArgs, budget: u64, t0: Instant) -> CliResult<()> {
    let map = args.mapping()?;
    let ident = FrequencyMapping::identity(args.m)?;
    let spec = args.build(&ident)?;
    let before = repeats_histogram(&spec, &ident, budget)?;
    let after = repeats_histogram(&spec, &map, budget)?;
    let keys: BTreeSet<usize> = before.keys().chain(after.keys()).copied().collect();
    let get = |h: &BTreeMap<usize, u64>, k: usize| h.get(&k).copied().unwrap_or(0);
    let stem = cli
        .name
        .clone()
        .unwrap_or_else(|| format!("remap_{}", subset_label(&spec)));
    let mut out = OutputDir::create(&cli.out)?;
    out.write_csv(
        &format!("{stem}.csv"),
        &["max_repeats", "identity", "mapped", "diff"],
        keys.iter()
            .rev()
            .map(|&k| {
                let (b, a) = (get(&before, k), get(&after, k));
                vec![
                    k.into(),
                    b.into(),
                    a.into(),
                    Cell::Text((a as i64 - b as i64).to_string()),
                ]
            })
            .collect(),
    )?;
    let config = json!({ "subset": spec, "mapping": map.to_one_based(), "budget": budget });
    let manifest = out.finish(&stem, "remap-eval", config, None, t0.elapsed())?;
    print_json(&json!({
        "total": spec.size(),
        "costas_identity": get(&before, 0),
        "costas_mapped": get(&after, 0),
        "outputs": manifest.outputs,
    }));
    Ok(())
}
