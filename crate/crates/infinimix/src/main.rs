use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use infinimix::scenario::{self, LadderCache, RunArtifact, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(name = "infinimix", version, about = "Infinite-volume mixing experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file (or a bundled scenario by name)
    Run {
        scenario: String,
        /// Output directory for the artifact and series files
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads for the internal task grid
        #[arg(long)]
        threads: Option<usize>,
        /// Disable the lattice-ladder cache
        #[arg(long)]
        no_cache: bool,
    },
    /// List registered maps, observables or bundled scenarios
    List { what: String },
    /// Render a plain-text summary of a run artifact
    Report { artifact: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Run {
            scenario: arg,
            out,
            threads,
            no_cache,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
            let (name, text) = scenario::load_scenario(&arg)?;
            let config = ScenarioConfig::parse(&text)?;
            let opts = RunOptions {
                out_dir: out,
                cache_dir: if no_cache {
                    None
                } else {
                    Some(LadderCache::default_dir())
                },
            };
            let artifact = scenario::run_scenario(&config, &name, &opts);
            println!(
                "{name}: {} ({} ms, {} cache hits) -> {}",
                artifact.status,
                artifact.finished_unix_ms - artifact.started_unix_ms,
                artifact.cache_hits,
                opts.out_dir.join(format!("{name}.artifact.json")).display()
            );
            if artifact.status == "error" {
                if let Some(msg) = artifact.payload.get("error") {
                    eprintln!("error: {msg}");
                }
            }
            Ok(ExitCode::from(artifact.exit_code as u8))
        }
        Cmd::List { what } => {
            match what.as_str() {
                "maps" => {
                    println!("boole                 Boole transformation x - 1/x");
                    println!("rw:<k1>:<k2>          random-walk map, uniform jumps k1..k2-1 (k2-k1 >= 2)");
                    println!("custom:<file.json>    lift or explicit branch spec from a JSON file");
                }
                "observables" => {
                    println!("global:");
                    println!("  one                                  constant 1");
                    println!("  const:<c>                            constant c");
                    println!("  sign                                 sign(x), sign(0) = 0");
                    println!("  cos:<j>                              cos(2 pi x / j)");
                    println!("  halfcell:<j>                         indicator of [0, j/2) + jZ");
                    println!("  step:<l>:<r>:<offset>:<v0,v1,...>    cell step with constant tails");
                    println!("local:");
                    println!("  indicator:<a>:<b>[:norm]             1_[a,b], optionally mass one");
                    println!("  gauss:<center>:<width>               Gaussian truncated at 8 widths");
                    println!("  triangle:<a>:<b>                     unit-mass tent");
                    println!("  dipole:<j>:<k>                       1_[j,j+1) - 1_[k,k+1)");
                }
                "scenarios" => {
                    for (name, _) in scenario::bundled_scenarios() {
                        println!("{name}");
                    }
                }
                other => {
                    return Err(format!("unknown list target {other:?}; try maps, observables or scenarios").into());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report { artifact } => {
            let text = std::fs::read_to_string(&artifact)?;
            let a: RunArtifact = serde_json::from_str(&text)?;
            print_report(&a);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_report(a: &RunArtifact) {
    println!("experiment   {}", a.experiment);
    println!("map          {}", a.map);
    println!("status       {} (exit {})", a.status, a.exit_code);
    println!("library      {}", a.library_version);
    println!("wall time    {} ms", a.finished_unix_ms - a.started_unix_ms);
    println!("cache hits   {}", a.cache_hits);
    for key in [
        "verdict",
        "estimate",
        "rho_hat",
        "coalescence_defect",
        "max_increase",
        "glm3_restricted_index",
        "target",
        "tail_max",
    ] {
        if let Some(v) = a.payload.get(key) {
            println!("{key:<12} {v}");
        }
    }
    if let Some(series) = a
        .payload
        .get("estimates")
        .and_then(|v| v.as_array())
        .or_else(|| a.payload.get("values").and_then(|v| v.as_array()))
    {
        let head: Vec<String> = series.iter().take(4).map(|v| v.to_string()).collect();
        let tail: Vec<String> = series
            .iter()
            .rev()
            .take(2)
            .map(|v| v.to_string())
            .collect();
        println!(
            "series       [{}, ..., {}] ({} points)",
            head.join(", "),
            tail.into_iter().rev().collect::<Vec<_>>().join(", "),
            series.len()
        );
    }
}
