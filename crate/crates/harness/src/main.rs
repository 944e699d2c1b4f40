use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use agentopt::metrics::{
    area_trapezoid, average_distance, generational_distance, hypervolume, hypervolume_complement,
};
use agentopt_harness::config::{load_config, Preset};
use agentopt_harness::experiment::{report, run_experiment, ExperimentSummary};
use agentopt_harness::output::{read_archive, read_points};

#[derive(Parser)]
#[command(name = "agentopt", version, about = "Multi-agent cooperative optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run paired independent/cooperating repetitions from a config file.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of repetitions.
        #[arg(long)]
        reps: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Force deterministic scheduling.
        #[arg(long)]
        deterministic: bool,
    },
    /// List the built-in solver presets.
    Presets,
    /// Front metrics for a two-objective archive or point file.
    Metrics {
        archive: PathBuf,
        /// Reference front, one `z1,z2` pair per line.
        #[arg(long)]
        front: Option<PathBuf>,
        #[arg(long, value_parser = parse_pair)]
        utopia: [f64; 2],
        #[arg(long = "ref", value_parser = parse_pair)]
        reference: [f64; 2],
    },
    /// Rebuild summaries from an existing output directory.
    Report { dir: PathBuf },
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|_| format!("bad number {a:?}"))?,
            b.parse().map_err(|_| format!("bad number {b:?}"))?,
        ]),
        _ => Err(format!("expected z1,z2, got {s:?}")),
    }
}

fn load_front(path: &Path) -> Result<Vec<[f64; 2]>> {
    // Archive files carry z1/z2 columns; anything else is a plain pair list.
    match read_archive(path) {
        Ok(rows) => {
            let pts: Vec<[f64; 2]> = rows.iter().filter(|(z, _)| z.len() == 2).map(|(z, _)| [z[0], z[1]]).collect();
            if pts.len() != rows.len() {
                bail!("{}: expected exactly two objectives", path.display());
            }
            Ok(pts)
        }
        Err(_) => Ok(read_points(path)?),
    }
}

fn print_summary(s: &ExperimentSummary) {
    for row in &s.boxplot {
        println!(
            "{:<12} {:<11} runs={:<3} min={:.6e} median={:.6e} max={:.6e}",
            row.measure, row.mode, row.runs, row.min, row.median, row.max
        );
    }
    if let Some(m) = &s.metrics {
        for r in m {
            let f = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
            println!("{:<48} {:>14} {:>14}", r.measure, f(r.independent), f(r.cooperating));
        }
    }
    for f in &s.failures {
        eprintln!("failed: {f}");
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            reps,
            seed,
            deterministic,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(r) = reps {
                cfg.repetitions = r;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.deterministic |= deterministic;
            let summary = run_experiment(&cfg).context("experiment failed")?;
            print_summary(&summary);
            println!("results in {}", cfg.output_dir.display());
        }
        Command::Presets => {
            for p in [Preset::Hen, Preset::Mutas] {
                println!("{} (budget {:?}, np {:?})", p.name(), p.budget(), p.np());
                for s in p.roster() {
                    println!("  {:<10} {:<4} size {:?} omega {}", s.label.as_deref().unwrap_or("-"), s.kind, s.size, s.omega);
                }
            }
        }
        Command::Metrics {
            archive,
            front,
            utopia,
            reference,
        } => {
            let pts = load_front(&archive)?;
            println!("points\t{}", pts.len());
            println!("hypervolume\t{}", hypervolume(&pts, reference));
            println!("hypervolume_complement\t{}", hypervolume_complement(&pts, reference, utopia));
            let area = area_trapezoid(&pts);
            println!("area\t{}{}", area.value, if area.degenerate { "\t(degenerate)" } else { "" });
            match average_distance(&pts, utopia) {
                Ok(v) => println!("average_distance\t{v}"),
                Err(e) => println!("average_distance\tn/a ({e})"),
            }
            match front {
                Some(f) => {
                    let truth = load_front(&f)?;
                    println!("generational_distance\t{}", generational_distance(&pts, &truth)?);
                }
                None => println!("generational_distance\tn/a"),
            }
        }
        Command::Report { dir } => {
            let summary = report(&dir)?;
            print_summary(&summary);
        }
    }
    Ok(())
}
