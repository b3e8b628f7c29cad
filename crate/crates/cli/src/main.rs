mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use convexlab::builtins::{lookup, Registered};
use convexlab::energy::DomainGrid;
use convexlab::polyconvexity::PolyGrids;
use convexlab::rank_one::{
    convexity_scan, rank_one_random_scan, rank_one_scan, split_rank_one_criterion, LogGrid, ScanSettings,
};
use convexlab::report::{reproduce, CheckReport, ContourSheet, ReproduceOptions, SuiteItem};
use convexlab::sublevel::{
    aubert_connect_path, compactness_check, connect_path, grid_connectivity, ordered_compactness_check,
    SAMPLES_PER_SEGMENT,
};
use convexlab::{Error, Mat2, Verdict};

use config::Config;

/// Numerical checks of convexity notions for planar isotropic energies.
#[derive(Parser, Debug)]
#[command(name = "convexlab", version)]
struct Cli {
    /// Flat key = value file; flags take precedence over its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print check reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (also `CONVEXLAB_THREADS`; the smaller value wins).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate W(F).
    Eval {
        #[arg(long)]
        energy: Option<String>,
        /// Row-major entries a11,a12,a21,a22.
        #[arg(long, allow_hyphen_values = true)]
        matrix: Option<String>,
    },
    #[command(subcommand)]
    Check(Check),
    /// Tabulate W(diag(λ1, λ2)) on a log grid as CSV or SVG.
    Contour {
        #[arg(long)]
        energy: Option<String>,
        #[command(flatten)]
        grid: GridArg,
        /// Comma-separated contour levels.
        #[arg(long, allow_hyphen_values = true)]
        levels: Option<String>,
        /// csv or svg.
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the fixed reproduction suite and print its JSON report.
    ReproducePaper {
        /// Restrict to items (repeatable or comma-separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Energy definition file replacing W0 in the suite.
        #[arg(long)]
        w0_file: Option<PathBuf>,
        /// Include wall times in the report.
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GridArg {
    /// Log grid `min,max,n`: ln λ in [min, max] with n nodes per axis.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Check {
    /// Rank-one convexity: grid scan, random scan, full convexity, or the
    /// split-energy criterion.
    RankOne {
        #[arg(long)]
        energy: Option<String>,
        /// scan, random, convexity or criterion.
        #[arg(long)]
        method: Option<String>,
        #[command(flatten)]
        grid: GridArg,
        #[arg(long)]
        angles: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Interval-intersection polyconvexity falsifier.
    Polyconvexity {
        #[arg(long)]
        energy: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        gamma_grid: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        nu_grid: Option<String>,
    },
    /// Compactness and connectivity of a sublevel set, with an optional
    /// connecting path between two matrices.
    Sublevel {
        #[arg(long)]
        energy: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        level: Option<String>,
        #[command(flatten)]
        grid: GridArg,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
    },
}

/// Bad input from the user; exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Parse { .. } | Error::UnknownEnergy(_) | Error::Io(_)) => 2,
        Some(_) => 3,
        None => 2,
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| usage(format!("{what}: '{t}' is not a number"))))
        .collect()
}

fn parse_matrix(s: &str) -> Result<Mat2> {
    let v = parse_list(s, "matrix")?;
    if v.len() != 4 {
        return Err(usage(format!("matrix needs 4 entries, got {}", v.len())));
    }
    Ok(Mat2::new(v[0], v[1], v[2], v[3])?)
}

fn parse_grid(s: Option<String>, default: DomainGrid) -> Result<DomainGrid> {
    let Some(s) = s else { return Ok(default) };
    let v = parse_list(&s, "grid")?;
    if v.len() != 3 || v[2] < 2.0 || v[2].fract() != 0.0 {
        return Err(usage("grid is min,max,n with an integer n >= 2"));
    }
    Ok(DomainGrid::new(v[0], v[1], v[0], v[1], v[2] as usize, v[2] as usize)?)
}

fn parse_num<T: std::str::FromStr>(s: Option<String>, key: &str) -> Result<Option<T>> {
    s.map(|v| v.trim().parse::<T>().map_err(|_| usage(format!("{key}: cannot parse '{v}'"))))
        .transpose()
}

fn energy(cfg: &Config, flag: Option<String>) -> Result<Registered> {
    let name = cfg.pick(flag, "energy").ok_or_else(|| usage("--energy is required"))?;
    Ok(lookup(&name)?)
}

fn verdict_code(v: Verdict) -> u8 {
    if v.is_failure() {
        1
    } else {
        0
    }
}

fn emit(report: &CheckReport, json: bool) -> u8 {
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.render_text());
    }
    verdict_code(report.verdict)
}

fn write_or_print(path: Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads(cfg: &Config, flag: Option<usize>) -> Result<()> {
    let from_cfg = parse_num::<usize>(cfg.get("threads").map(str::to_string), "threads")?;
    let from_env = match std::env::var("CONVEXLAB_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("CONVEXLAB_THREADS: cannot parse '{v}'")))?,
        ),
        Err(_) => None,
    };
    let requested = flag.or(from_cfg);
    let n = match (requested, from_env) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    if let Some(n) = n.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = match &cli.config {
        Some(p) => Config::load(&p.to_string_lossy()).map_err(|e| usage(format!("{e:#}")))?,
        None => Config::default(),
    };
    configure_threads(&cfg, cli.threads)?;
    let json = cfg.flag(cli.json, "json").map_err(|e| usage(e.to_string()))?;
    match cli.command {
        Command::Eval { energy: name, matrix } => {
            let e = energy(&cfg, name)?;
            let m = cfg.pick(matrix, "matrix").ok_or_else(|| usage("--matrix is required"))?;
            let v = e.ordered().eval_matrix(&parse_matrix(&m)?)?;
            println!("{v}");
            Ok(0)
        }
        Command::Check(Check::RankOne {
            energy: name,
            method,
            grid,
            angles,
            samples,
            seed,
        }) => {
            let e = energy(&cfg, name)?;
            let mut settings = ScanSettings::default();
            settings.bases = parse_grid(cfg.pick(grid.grid, "grid"), settings.bases)?;
            if let Some(a) = parse_num(cfg.pick(angles.map(|a| a.to_string()), "angles"), "angles")? {
                settings.angles = a;
            }
            let method = cfg.pick(method, "method").unwrap_or_else(|| "scan".into());
            let report = match method.as_str() {
                "scan" => CheckReport::from_scan("rank-one", &rank_one_scan(&e.ordered(), &settings)),
                "convexity" => CheckReport::from_scan("convexity", &convexity_scan(&e.ordered(), &settings)),
                "random" => {
                    let n = parse_num(cfg.pick(samples.map(|s| s.to_string()), "samples"), "samples")?;
                    let s = parse_num(cfg.pick(seed.map(|s| s.to_string()), "seed"), "seed")?;
                    let r = rank_one_random_scan(&e.ordered(), n.unwrap_or(10_000), s.unwrap_or(7), &settings);
                    CheckReport::from_scan("rank-one-random", &r)
                }
                "criterion" => {
                    let split = e
                        .split()
                        .ok_or_else(|| usage(format!("{} has no volumetric-isochoric split", e.name())))?;
                    CheckReport::from_criterion(&split_rank_one_criterion(split, &LogGrid::CRITERION)?)
                }
                other => return Err(usage(format!("unknown method '{other}'"))),
            };
            Ok(emit(&report, json))
        }
        Command::Check(Check::Polyconvexity {
            energy: name,
            gamma_grid,
            nu_grid,
        }) => {
            let e = energy(&cfg, name)?;
            let d = PolyGrids::default();
            let grids = PolyGrids {
                gamma: parse_grid(cfg.pick(gamma_grid, "gamma-grid"), d.gamma)?,
                nu: parse_grid(cfg.pick(nu_grid, "nu-grid"), d.nu)?,
            };
            Ok(emit(&CheckReport::from_poly(&grids.run(&e.ordered())), json))
        }
        Command::Check(Check::Sublevel {
            energy: name,
            level,
            grid,
            from,
            to,
        }) => {
            let e = energy(&cfg, name)?;
            let c: f64 = parse_num(cfg.pick(level, "level"), "level")?.ok_or_else(|| usage("--level is required"))?;
            let grid = parse_grid(cfg.pick(grid.grid, "grid"), DomainGrid::default())?;
            let g = e.ordered();
            let compact = match e.split() {
                Some(s) => compactness_check(s, c),
                None => ordered_compactness_check(&g, c),
            };
            let conn = grid_connectivity(&g, c, &grid);
            let mut report = CheckReport::from_compactness(&compact);
            report.check = "sublevel".into();
            report.resolution = CheckReport::from_connectivity(&conn).resolution;
            report.margin("components", Some(conn.components as f64));
            report.margin("nodes_in_sublevel", Some(conn.nodes_in_sublevel as f64));
            if conn.components > 1 {
                report.verdict = Verdict::Fail;
                report.notes.push(format!("{} grid components", conn.components));
            }
            match (cfg.pick(from, "from"), cfg.pick(to, "to")) {
                (Some(a), Some(b)) => {
                    let (a, b) = (parse_matrix(&a)?, parse_matrix(&b)?);
                    let path = match e.split() {
                        Some(s) => connect_path(s, &a, &b, c)?,
                        None if e.name() == "aubert" => aubert_connect_path(&g, &a, &b, c)?,
                        None => return Err(usage(format!("no path construction for {}", e.name()))),
                    };
                    let v = path.validate(&g, SAMPLES_PER_SEGMENT);
                    report.margin("path_max_excess", Some(v.max_excess));
                    report.margin("path_endpoint_gap", Some(v.max_endpoint_gap));
                    if !v.valid {
                        report.verdict = Verdict::Fail;
                        report.notes.push("connecting path leaves the sublevel set".into());
                    }
                    report.witnesses = serde_json::json!({
                        "compactness": report.witnesses,
                        "path": path,
                        "path_validation": v,
                    });
                }
                (None, None) => {}
                _ => return Err(usage("--from and --to go together")),
            }
            Ok(emit(&report, json))
        }
        Command::Contour {
            energy: name,
            grid,
            levels,
            format,
            output,
        } => {
            let e = energy(&cfg, name)?;
            let grid = parse_grid(cfg.pick(grid.grid, "grid"), DomainGrid::default())?;
            let levels = match cfg.pick(levels, "levels") {
                Some(s) => parse_list(&s, "levels")?,
                None => Vec::new(),
            };
            let sheet = ContourSheet::compute(&e.ordered(), &grid, &levels)?;
            let text = match cfg.pick(format, "format").as_deref().unwrap_or("csv") {
                "csv" => sheet.to_csv(),
                "svg" => sheet.to_svg(),
                other => return Err(usage(format!("unknown format '{other}'"))),
            };
            write_or_print(output.or_else(|| cfg.get("output").map(PathBuf::from)), &text)?;
            Ok(0)
        }
        Command::ReproducePaper {
            only,
            w0_file,
            timing,
            output,
        } => {
            let only = if only.is_empty() {
                cfg.get("only").map(|s| s.split(',').map(|t| t.trim().to_string()).collect()).unwrap_or_default()
            } else {
                only
            };
            let mut opts = ReproduceOptions {
                only: only
                    .iter()
                    .filter(|s| !s.is_empty())
                    .map(|s| SuiteItem::parse(s).map_err(|e| usage(e.to_string())))
                    .collect::<Result<_>>()?,
                timing: cfg.flag(timing, "timing").map_err(|e| usage(e.to_string()))?,
                ..ReproduceOptions::default()
            };
            if let Some(p) = w0_file.or_else(|| cfg.get("w0-file").map(PathBuf::from)) {
                match lookup(&format!("file:{}", p.display()))? {
                    Registered::Split(s) => opts.w0 = s,
                    Registered::Ordered(_) => return Err(usage("w0 file must define a split energy")),
                }
            }
            let report = reproduce(&opts);
            eprint!("{}", report.render_text());
            write_or_print(output.or_else(|| cfg.get("output").map(PathBuf::from)), &(report.to_json() + "\n"))?;
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
