use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gensobol::artifact::subset_label;
use gensobol::config::{BandSettings, FixingSettings, StudyConfig};
use gensobol::core::sobol::SobolReport;
use gensobol::study::resolve_out_dir;
use gensobol::{Result, Study};

#[derive(Parser)]
#[command(name = "gensobol", version, about = "Generalized Sobol' sensitivity indices for time-dependent models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Study config (TOML).
    config: PathBuf,
    /// Recompute artifacts even when current ones exist.
    #[arg(long)]
    force: bool,
    /// Artifact directory (overrides `output.dir` and `$GENSOBOL_OUT`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct SobolOverrides {
    /// mc, pointwise-nisp, pointwise-cs, spectral-nisp or spectral-cs.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    nkl: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    /// Spectral denominator: eigenvalues or surrogate.
    #[arg(long)]
    denominator: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble, spectrum and Sobol' indices in one go.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: SobolOverrides,
    },
    /// Evaluate the model on the configured samples.
    Ensemble {
        #[command(flatten)]
        common: Common,
        /// Also write `ensemble.csv`.
        #[arg(long)]
        csv: bool,
    },
    /// Leading eigenpairs of the ensemble covariance.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Generalized Sobol' indices on `[0, T]`.
    Sobol {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: SobolOverrides,
    },
    /// Total indices on growing windows `[0, tau]`.
    Window {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: SobolOverrides,
    },
    /// Error of fixing the non-kept variables at random nominal values.
    Fix {
        #[command(flatten)]
        common: Common,
        /// Variables kept random (comma separated).
        #[arg(long, value_delimiter = ',')]
        keep: Option<Vec<String>>,
    },
    /// Percentile bands of the full and reduced models.
    Bands {
        #[command(flatten)]
        common: Common,
        /// Variables kept random (comma separated).
        #[arg(long, value_delimiter = ',')]
        keep: Option<Vec<String>>,
    },
}

fn apply(cfg: &mut StudyConfig, o: &SobolOverrides, log: &mut Vec<String>) {
    if let Some(m) = &o.method {
        cfg.pipeline.method = m.clone();
        log.push(format!("--method {m}"));
    }
    if let Some(k) = o.nkl {
        cfg.pipeline.nkl = Some(k);
        cfg.pipeline.variance_ratio = None;
        log.push(format!("--nkl {k}"));
    }
    if let Some(p) = o.order {
        cfg.pipeline.order = Some(p);
        log.push(format!("--order {p}"));
    }
    if let Some(d) = &o.denominator {
        cfg.pipeline.denominator = Some(d.clone());
        log.push(format!("--denominator {d}"));
    }
}

fn open(common: &Common, edit: impl FnOnce(&mut StudyConfig, &mut Vec<String>)) -> Result<(Study, Vec<String>)> {
    let (mut cfg, hash) = StudyConfig::load(&common.config)?;
    let mut overrides = Vec::new();
    edit(&mut cfg, &mut overrides);
    if common.force {
        overrides.push("--force".into());
    }
    let dir = resolve_out_dir(&cfg, common.out.as_deref());
    Ok((Study::new(cfg, hash, dir, common.force)?, overrides))
}

fn print_report(r: &SobolReport, names: &[String], dir: &Path) {
    println!("method {}  T = {}", r.method.as_str(), r.horizon);
    println!("{:<24} {:>12} {:>12}", "variable", "S_first", "S_tot");
    for e in &r.entries {
        println!("{:<24} {:>12.6} {:>12.6}", subset_label(&e.target, names), e.first, e.total);
    }
    for (i, v) in r.flags() {
        println!("warning: {} {:?}", subset_label(&r.entries[i].target, names), v);
    }
    println!("artifacts in {}", dir.display());
}

fn execute(cmd: Command) -> Result<()> {
    let (name, common) = match &cmd {
        Command::Run { common, .. } => ("run", common),
        Command::Ensemble { common, .. } => ("ensemble", common),
        Command::Spectrum { common } => ("spectrum", common),
        Command::Sobol { common, .. } => ("sobol", common),
        Command::Window { common, .. } => ("window", common),
        Command::Fix { common, .. } => ("fix", common),
        Command::Bands { common, .. } => ("bands", common),
    };
    let (mut study, overrides) = open(common, |cfg, log| match &cmd {
        Command::Run { overrides, .. } | Command::Sobol { overrides, .. } | Command::Window { overrides, .. } => {
            apply(cfg, overrides, log)
        }
        Command::Ensemble { csv: true, .. } => {
            cfg.output.ensemble_csv = true;
            log.push("--csv".into());
        }
        Command::Fix { keep: Some(k), .. } => {
            log.push(format!("--keep {}", k.join(",")));
            match &mut cfg.fixing {
                Some(f) => f.keep = k.clone(),
                None => cfg.fixing = Some(FixingSettings::keeping(k.clone())),
            }
        }
        Command::Bands { keep: Some(k), .. } => {
            log.push(format!("--keep {}", k.join(",")));
            match &mut cfg.bands {
                Some(b) => b.keep = k.clone(),
                None => cfg.bands = Some(BandSettings::keeping(k.clone())),
            }
        }
        _ => {}
    })?;
    let names = study.param_names();
    let dir = study.dir().to_path_buf();
    let outcome = match cmd {
        Command::Run { .. } => study.run().map(|r| print_report(&r, &names, &dir)),
        Command::Ensemble { .. } => study.build_ensemble().map(|e| {
            println!("ensemble: {} samples x {} nodes in {}", e.n_samples(), e.n_times(), dir.display());
        }),
        Command::Spectrum { .. } => study.load_ensemble().and_then(|e| study.spectrum(&e)).map(|(_, s)| {
            let rel = s.eigenvalues().first().copied().unwrap_or(0.0);
            for (i, l) in s.eigenvalues().iter().enumerate() {
                println!("{:>3} {:>14.6e} {:>12.4e}", i + 1, l, if rel > 0.0 { l / rel } else { 0.0 });
            }
        }),
        Command::Sobol { .. } => study.sobol(None).map(|(r, _)| print_report(&r, &names, &dir)),
        Command::Window { .. } => study.window().map(|pts| {
            println!("{} windows written to {}", pts.len(), dir.display());
        }),
        Command::Fix { .. } => study.fix().map(|r| {
            println!("mean fixing error {:.6}  (S_tot of fixed set {:.6})", r.mean_error, r.reference_total);
            for m in &r.markov {
                println!("  P(error >= {}) = {:.4}", m.eps, m.rate);
            }
        }),
        Command::Bands { .. } => study.bands().map(|(_, cov, agree)| {
            let when = |t: Option<f64>| t.map_or("never".to_string(), |t| format!("t = {t}"));
            println!("coverage: {}  first uncovered: {}", cov.all_covered(), when(cov.first_violation));
            println!("agreement: {}  first disagreement: {}", agree.all_covered(), when(agree.first_violation));
        }),
    };
    study.write_log(name, &overrides)?;
    outcome
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
