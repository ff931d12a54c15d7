use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use loadcoord_cli::config::{build_instance, load_config};
use loadcoord_cli::experiments::{
    er_rows, er_sweep, example1_instance, outcome_rows, regional_instance, run_algorithms,
    ErSweepParams, RunParams,
};
use loadcoord_cli::output::{
    resolve_out, trace_path, write_results, write_trace, ResultRow, RESULT_HEADER,
};
use loadcoord_cli::verify::run_checks;

#[derive(Parser)]
#[command(
    name = "loadcoord",
    about = "Spot/contract coordination experiments: shadow-price tatonnement vs. the bifurcation baseline"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo evaluation samples (overrides the config).
    #[arg(long)]
    samples: Option<usize>,
    /// Frank-Wolfe convergence tolerance (overrides the config).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Results CSV path; defaults to a per-command name under
    /// $LOADCOORD_OUT_DIR (or the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Built-in 1000-load lane instance; also writes the iteration trace.
    Example1 {
        #[command(flatten)]
        common: Common,
    },
    /// Axis sweep from a config, or the built-in edge-probability preset.
    Sweep {
        /// "paper-er": 50x50 random bipartite graphs, capacity 25.
        #[arg(long)]
        preset: Option<String>,
        /// Graph draws per sweep point (preset only).
        #[arg(long)]
        draws: Option<usize>,
        /// Comma-separated sweep points (preset only).
        #[arg(long)]
        points: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Built-in single-region slotted instance with random time windows.
    Regional {
        #[arg(long, default_value_t = 20)]
        loads: usize,
        #[arg(long, default_value_t = 8)]
        slots: usize,
        #[arg(long, default_value_t = 6)]
        capacity: u64,
        /// Give every load the full horizon (collapses to lane behavior).
        #[arg(long)]
        identical: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Bipartite instance from a config with an edge-list file.
    Bipartite {
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant battery; exits nonzero on any failure.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Example1 { common } => cmd_example1(common),
        Cmd::Sweep { preset, draws, points, common } => cmd_sweep(preset, draws, points, common),
        Cmd::Regional { loads, slots, capacity, identical, common } => {
            cmd_regional(loads, slots, capacity, identical, common)
        }
        Cmd::Bipartite { common } => cmd_bipartite(common),
        Cmd::Verify { common } => cmd_verify(common),
    }
}

fn cmd_example1(common: Common) -> anyhow::Result<ExitCode> {
    let inst = example1_instance();
    let params = RunParams {
        epsilon: common.epsilon.unwrap_or(1e-6),
        samples: common.samples.unwrap_or(400),
        seed: common.seed.unwrap_or(0),
        trace: true,
        ..RunParams::default()
    };
    let outcome = run_algorithms(&inst, &params)?;
    let rows = outcome_rows("example1", None, &outcome, params.seed);
    let out = resolve_out(&common.out, "example1.csv");
    write_results(&out, &rows)?;
    let tpath = trace_path(&out);
    write_trace(&tpath, &outcome.dfw.trace)?;
    println!(
        "example1: dfw {} ({} iterations, gap {:.3e}), baseline {}, savings {:.2}%",
        outcome.dfw_report.mean_cost,
        outcome.dfw.iterations,
        outcome.dfw.final_gap,
        outcome.lba_report.mean_cost,
        outcome.savings_pct
    );
    println!("wrote {} and {}", out.display(), tpath.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    preset: Option<String>,
    draws: Option<usize>,
    points: Option<String>,
    common: Common,
) -> anyhow::Result<ExitCode> {
    if let Some(name) = preset {
        if name != "paper-er" {
            bail!("unknown preset {name:?} (expected \"paper-er\")");
        }
        let mut params = ErSweepParams::default();
        if let Some(d) = draws {
            params.draws = d;
        }
        if let Some(list) = points {
            params.points = list
                .split(',')
                .map(|s| s.trim().parse::<f64>().context("parsing --points"))
                .collect::<anyhow::Result<Vec<f64>>>()?;
        }
        if let Some(s) = common.samples {
            params.samples = s;
        }
        if let Some(e) = common.epsilon {
            params.epsilon = e;
        }
        if let Some(s) = common.seed {
            params.seed = s;
        }
        let results = er_sweep(&params)?;
        for pt in &results {
            println!(
                "p={:.2}: baseline {:.1}, dfw {:.1}, savings {:.2}% +/- {:.2}",
                pt.p, pt.lba_mean, pt.dfw_mean, pt.savings_pct, pt.savings_se
            );
        }
        let rows = er_rows("paper-er", &results, params.seed);
        let out = resolve_out(&common.out, "sweep_paper_er.csv");
        write_results(&out, &rows)?;
        println!("wrote {}", out.display());
        return Ok(ExitCode::SUCCESS);
    }

    let config_path = common.config.as_ref().context("sweep needs --config or --preset")?;
    let loaded = load_config(config_path)?;
    let sweep = loaded.cfg.sweep.as_ref().context("config has no [sweep] section")?;
    let base = build_instance(&loaded)?;
    let params = RunParams {
        epsilon: common.epsilon.or(loaded.cfg.dfw.epsilon).unwrap_or(1e-4),
        max_iterations: loaded.cfg.dfw.max_iterations.unwrap_or(100_000_000),
        samples: common.samples.or(loaded.cfg.eval.samples).unwrap_or(400),
        seed: common.seed.or(loaded.cfg.eval.seed).unwrap_or(0),
        trace: false,
    };
    let mut rows: Vec<ResultRow> = Vec::new();
    for &value in &sweep.values {
        let mut inst = base.clone();
        match sweep.axis.as_str() {
            "capacity" => {
                if value < 0.0 || value.fract() != 0.0 {
                    bail!("capacity sweep values must be nonnegative integers, got {value}");
                }
                inst.capacity = value as u64;
            }
            "alternate_cost" => {
                inst.alternate_costs = vec![value; inst.num_loads()];
            }
            other => bail!("unknown sweep axis {other:?} (expected capacity or alternate_cost)"),
        }
        let outcome = run_algorithms(&inst, &params)?;
        rows.extend(outcome_rows(&loaded.cfg.experiment, Some(value), &outcome, params.seed));
        println!(
            "{}={}: dfw {:.1}, baseline {:.1}, savings {:.2}%",
            sweep.axis, value, outcome.dfw_report.mean_cost, outcome.lba_report.mean_cost,
            outcome.savings_pct
        );
    }
    let out = resolve_out(&common.out, "sweep.csv");
    write_results(&out, &rows)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_regional(
    loads: usize,
    slots: usize,
    capacity: u64,
    identical: bool,
    common: Common,
) -> anyhow::Result<ExitCode> {
    let out = resolve_out(&common.out, "regional.csv");
    if loads == 0 {
        std::fs::write(&out, format!("{RESULT_HEADER}\n"))?;
        println!("no loads; wrote empty {}", out.display());
        return Ok(ExitCode::SUCCESS);
    }
    let seed = common.seed.unwrap_or(0);
    let samples = common.samples.unwrap_or(400);
    let inst = regional_instance(loads, slots, capacity, identical, seed)?;
    let params = RunParams {
        epsilon: common.epsilon.unwrap_or(50.0),
        samples,
        seed,
        trace: false,
        ..RunParams::default()
    };
    let outcome = run_algorithms(&inst, &params)?;
    let rows = outcome_rows("regional", None, &outcome, seed);
    write_results(&out, &rows)?;
    let ones = vec![1u64; loads];
    let gap = inst.family.substitutability_gap(&ones, samples, seed)?;
    let bound = ((loads as f64) * (slots as f64).ln() / 2.0).sqrt();
    println!(
        "regional: dfw {:.1}, baseline {:.1}, substitutability gap {:.3} +/- {:.3} (bound {:.3})",
        outcome.dfw_report.mean_cost,
        outcome.lba_report.mean_cost,
        gap.mean,
        gap.stderr,
        bound
    );
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bipartite(common: Common) -> anyhow::Result<ExitCode> {
    let config_path = common.config.as_ref().context("bipartite needs --config")?;
    let loaded = load_config(config_path)?;
    let inst = build_instance(&loaded)?;
    let params = RunParams {
        epsilon: common.epsilon.or(loaded.cfg.dfw.epsilon).unwrap_or(50.0),
        max_iterations: loaded.cfg.dfw.max_iterations.unwrap_or(100_000_000),
        samples: common.samples.or(loaded.cfg.eval.samples).unwrap_or(400),
        seed: common.seed.or(loaded.cfg.eval.seed).unwrap_or(0),
        trace: false,
    };
    let outcome = run_algorithms(&inst, &params)?;
    let rows = outcome_rows(&loaded.cfg.experiment, None, &outcome, params.seed);
    let out = resolve_out(&common.out, "bipartite.csv");
    write_results(&out, &rows)?;
    println!(
        "{}: dfw {:.1} +/- {:.1} ({} iterations), baseline {:.1}, savings {:.2}% +/- {:.2}",
        loaded.cfg.experiment,
        outcome.dfw_report.mean_cost,
        outcome.dfw_report.stderr,
        outcome.dfw.iterations,
        outcome.lba_report.mean_cost,
        outcome.savings_pct,
        outcome.savings_se
    );
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(common: Common) -> anyhow::Result<ExitCode> {
    let checks = run_checks(common.seed.unwrap_or(0));
    let mut all_ok = true;
    for c in &checks {
        println!("check {}: {} — {}", c.name, if c.ok { "ok" } else { "FAIL" }, c.detail);
        all_ok &= c.ok;
    }
    if all_ok {
        println!("all {} checks passed", checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}
