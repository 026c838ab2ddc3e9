mod config;
mod output;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand};
use config::{pick, ConfigFile};
use csorbit::experiments::{
    self, EllipseConfig, FockCircleConfig, PhasePreset, Report, ScaledEllipseConfig, Su11Case,
    Su11Config, Su2Config,
};
use output::Format;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "csorbit",
    version,
    about = "Eigenstates as coherent-state superpositions along group orbits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key = value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Phase preset for `phases`: h4, su2, su11 or all.
    #[arg(long, global = true)]
    system: Option<String>,
    /// SU(1,1) generator for `su11`: k0, k2 or parabolic.
    #[arg(long, global = true)]
    case: Option<String>,
    /// Spin.
    #[arg(long, global = true)]
    j: Option<f64>,
    /// Bargmann index.
    #[arg(long, global = true)]
    k: Option<f64>,
    /// Oscillator scale.
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Target eigenvalue.
    #[arg(long, global = true, allow_hyphen_values = true)]
    t0: Option<f64>,
    /// Level index.
    #[arg(long, global = true)]
    m: Option<u32>,
    /// Circle radius for `fock-circle`.
    #[arg(long, global = true)]
    r0: Option<f64>,
    /// Ellipse semi-axes.
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Orbit nodes (superposed states for `ellipse-naive`).
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Basis truncation.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Heatmap side length; 0 disables heatmaps.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Radial rays for `scaled-ellipse`.
    #[arg(long, global = true)]
    rays: Option<usize>,
    /// Skip the doubled-resolution rerun of `ellipse-naive`.
    #[arg(long, global = true)]
    no_refine: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Worker threads for grid evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Number eigenstates from in-phase circles.
    FockCircle,
    /// Equispaced coherent states on an ellipse and the off-ellipse Q maximum.
    EllipseNaive,
    /// Scaled-oscillator eigenstates on ellipses.
    ScaledEllipse,
    /// Spin eigenstates from latitude circles.
    Su2Latitudes,
    /// SU(1,1) eigenstates of K0, K2 or K0 + K1.
    Su11,
    /// Geometric phases of preset closed curves.
    Phases,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::FockCircle => "fock-circle",
            Command::EllipseNaive => "ellipse-naive",
            Command::ScaledEllipse => "scaled-ellipse",
            Command::Su2Latitudes => "su2-latitudes",
            Command::Su11 => "su11",
            Command::Phases => "phases",
        }
    }
}

/// Fully resolved run parameters, unset entries falling back to command defaults.
#[derive(Debug, Clone)]
struct RunConfig {
    command: Command,
    system: Option<String>,
    case: Option<String>,
    j: Option<f64>,
    k: Option<f64>,
    s: Option<f64>,
    t0: Option<f64>,
    m: Option<u32>,
    r0: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    nodes: Option<usize>,
    cutoff: Option<usize>,
    grid: Option<usize>,
    rays: Option<usize>,
    refine: bool,
    out: PathBuf,
    formats: Vec<Format>,
    threads: Option<usize>,
}

impl RunConfig {
    fn resolve(cli: Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let formats = match cli.format {
            Some(f) => f,
            None => match file.raw("format") {
                Some(list) => list
                    .split(',')
                    .map(|f| f.parse::<Format>().map_err(anyhow::Error::msg))
                    .collect::<Result<Vec<_>>>()
                    .context("config key format")?,
                None => vec![Format::Csv, Format::Json, Format::Pgm],
            },
        };
        let refine = if cli.no_refine {
            false
        } else {
            file.get::<bool>("refine")?.unwrap_or(true)
        };
        let mut formats = formats;
        formats.sort();
        formats.dedup();
        let cfg = RunConfig {
            command: cli.command,
            system: pick(cli.system, &file, "system")?,
            case: pick(cli.case, &file, "case")?,
            j: pick(cli.j, &file, "j")?,
            k: pick(cli.k, &file, "k")?,
            s: pick(cli.s, &file, "s")?,
            t0: pick(cli.t0, &file, "t0")?,
            m: pick(cli.m, &file, "m")?,
            r0: pick(cli.r0, &file, "r0")?,
            a: pick(cli.a, &file, "a")?,
            b: pick(cli.b, &file, "b")?,
            nodes: pick(cli.nodes, &file, "nodes")?,
            cutoff: pick(cli.cutoff, &file, "cutoff")?,
            grid: pick(cli.grid, &file, "grid")?,
            rays: pick(cli.rays, &file, "rays")?,
            refine,
            out: pick(cli.out, &file, "out")?.unwrap_or_else(|| PathBuf::from("out")),
            formats,
            threads: pick(cli.threads, &file, "threads")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            if let Some(v) = v {
                ensure!(
                    v.is_finite() && v > 0.0,
                    "--{name} must be positive, got {v}"
                );
            }
            Ok(())
        };
        positive("j", self.j)?;
        positive("k", self.k)?;
        positive("s", self.s)?;
        positive("a", self.a)?;
        positive("b", self.b)?;
        if let Some(j) = self.j {
            ensure!(
                (2.0 * j - (2.0 * j).round()).abs() < 1e-12,
                "--j must be a multiple of 1/2, got {j}"
            );
        }
        if let Some(t0) = self.t0 {
            ensure!(t0.is_finite(), "--t0 must be finite");
        }
        if let Some(r0) = self.r0 {
            ensure!(r0.is_finite() && r0 >= 0.0, "--r0 must be non-negative");
        }
        if let Some(n) = self.nodes {
            ensure!(n >= 4, "--nodes must be at least 4, got {n}");
        }
        if let Some(c) = self.cutoff {
            ensure!(c >= 1, "--cutoff must be at least 1");
        }
        if let Some(g) = self.grid {
            ensure!(g == 0 || g >= 2, "--grid must be 0 or at least 2, got {g}");
        }
        if let Some(r) = self.rays {
            ensure!(r >= 1, "--rays must be at least 1");
        }
        if let Some(t) = self.threads {
            ensure!(t >= 1, "--threads must be at least 1");
        }
        Ok(())
    }

    fn su11_case(&self) -> Result<Su11Case> {
        Ok(match self.case.as_deref().unwrap_or("k0") {
            "k0" => Su11Case::K0,
            "k2" => Su11Case::K2,
            "parabolic" => Su11Case::Parabolic,
            other => bail!("--case must be k0, k2 or parabolic, got {other:?}"),
        })
    }

    fn presets(&self) -> Result<Vec<PhasePreset>> {
        Ok(match self.system.as_deref().unwrap_or("all") {
            "all" => PhasePreset::ALL.to_vec(),
            "h4" => vec![PhasePreset::H4Circle],
            "su2" => vec![PhasePreset::Su2Latitude],
            "su11" => vec![PhasePreset::Su11Circle],
            other => bail!("--system must be h4, su2, su11 or all, got {other:?}"),
        })
    }

    fn run(&self) -> Result<Report> {
        let report = match self.command {
            Command::FockCircle => {
                let d = FockCircleConfig::default();
                let t0 = self.t0.or(self.m.map(f64::from)).unwrap_or(d.t0);
                experiments::fock_circle(&FockCircleConfig {
                    t0,
                    r0: self.r0,
                    nodes: self.nodes.unwrap_or(d.nodes),
                    cutoff: self.cutoff.unwrap_or(d.cutoff),
                    grid: self.grid.unwrap_or(d.grid),
                })?
            }
            Command::EllipseNaive => {
                let d = EllipseConfig::default();
                experiments::ellipse_naive(&EllipseConfig {
                    a: self.a.unwrap_or(d.a),
                    b: self.b.unwrap_or(d.b),
                    states: self.nodes.unwrap_or(d.states),
                    cutoff: self.cutoff.unwrap_or(d.cutoff),
                    grid: self.grid.unwrap_or(d.grid),
                    refine: self.refine,
                })?
            }
            Command::ScaledEllipse => {
                let d = ScaledEllipseConfig::default();
                experiments::scaled_ellipse(&ScaledEllipseConfig {
                    n: self.m.unwrap_or(d.n),
                    s: self.s.unwrap_or(d.s),
                    nodes: self.nodes.unwrap_or(d.nodes),
                    cutoff: self.cutoff.unwrap_or(d.cutoff),
                    rays: self.rays.unwrap_or(d.rays),
                    grid: self.grid.unwrap_or(d.grid),
                })?
            }
            Command::Su2Latitudes => {
                let d = Su2Config::default();
                experiments::su2_latitudes(&Su2Config {
                    two_j: self.j.map_or(d.two_j, |j| (2.0 * j).round() as u32),
                    nodes: self.nodes.unwrap_or(d.nodes),
                    grid: self.grid.unwrap_or(d.grid),
                })?
            }
            Command::Su11 => {
                let d = Su11Config::default();
                experiments::su11(&Su11Config {
                    case: self.su11_case()?,
                    k: self.k.unwrap_or(d.k),
                    t0: self.t0,
                    m: self.m.unwrap_or(d.m),
                    nodes: self.nodes,
                    cutoff: self.cutoff.unwrap_or(d.cutoff),
                    grid: self.grid.unwrap_or(d.grid),
                })?
            }
            Command::Phases => experiments::phases(&self.presets()?, self.nodes.unwrap_or(256))?,
        };
        Ok(report)
    }
}

fn print_summary(report: &Report) {
    for (key, value) in &report.parameters {
        println!("{key} = {value}");
    }
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {} = {:.10e} ({})", c.name, c.value, c.requirement);
    }
    for note in &report.notes {
        println!("note: {note}");
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cfg = RunConfig::resolve(Cli::parse())?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let report = cfg
        .run()
        .with_context(|| format!("running {}", cfg.command.name()))?;
    print_summary(&report);
    for path in output::write_report(&report, &cfg.out, &cfg.formats)? {
        println!("wrote {}", path.display());
    }
    Ok(report.passed())
}
