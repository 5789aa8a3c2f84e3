//! Command-line front end. Every subcommand accepts `--config`, `--seed`
//! and `--out`; outputs land in the `--out` directory.
//!
//! Exit status: 0 on success, 1 on configuration or input errors, 2 when
//! training diverged, 64 for an unknown subcommand or malformed arguments.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::chc::{build_hierarchy, truth_purity};
use crate::episodes::{generate_corpus, task_stream, TaskSet, TASKSET_VERSION};
use crate::error::{Error, Result};
use crate::gram::taylor_residual;
use crate::harness::config::{ExperimentConfig, Variant};
use crate::harness::io::{self, Checkpoint, CHECKPOINT_VERSION};
use crate::harness::oracle::gradcheck_suite;
use crate::harness::protocols::{
    base_to_new_split, eval_seed, run_protocol, train_all, train_variant, Prepared, Protocol, SeedStates,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "metaprompt",
    about = "Meta-learned soft prompts on planted image-text corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the experiment and generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a planted corpus (corpus.json).
    GenData(Common),
    /// Cluster the corpus into topics and domains (hierarchy.json).
    Cluster(Common),
    /// Sample meta-training tasks from the hierarchy (tasks.json).
    GenTasks(Common),
    /// Meta-train once per evaluation seed (checkpoint.json, trace.csv).
    Train(Common),
    /// Base-to-new evaluation (report.csv, report.txt).
    EvalB2n(Common),
    /// Held-out-domain evaluation (report.csv, report.txt).
    EvalXdomain(Common),
    /// The four-row ablation grid (report.csv, report.txt).
    Ablate(Common),
    /// Finite-difference check of the meta-gradients (gradcheck.json).
    Gradcheck(Common),
    /// Alignment and Taylor-residual traces (diag_alignment.csv, diag_taylor.csv).
    Diag(Common),
}

/// Parses `argv` (including the program name) and runs the command.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let cfg = match c.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads corpus and hierarchy from `out`, creating whichever is missing.
fn load_or_build(cfg: &ExperimentConfig, out: &Path) -> Result<Prepared> {
    let cp = out.join(io::CORPUS_FILE);
    let corpus = if cp.exists() {
        io::read_corpus(&cp)?
    } else {
        let c = generate_corpus(&cfg.generator)?;
        io::write_json(&cp, &c)?;
        c
    };
    let hp = out.join(io::HIERARCHY_FILE);
    let hierarchy = if hp.exists() {
        io::read_hierarchy(&hp)?
    } else {
        let h = build_hierarchy(&corpus, cfg.chc, cfg.seed)?;
        io::write_json(&hp, &h)?;
        h
    };
    Prepared::new(cfg, corpus, hierarchy)
}

fn any_failed(states: &SeedStates) -> bool {
    states.iter().any(|s| s.is_err())
}

fn trained_states(prep: &Prepared, cfg: &ExperimentConfig, out: &Path, protocol: Protocol) -> Result<SeedStates> {
    let variant = cfg.variant();
    let path = out.join(io::CHECKPOINT_FILE);
    if path.exists() {
        let ck: Checkpoint = io::read_json(&path, CHECKPOINT_VERSION)?;
        if ck.matches(cfg, protocol, variant) {
            println!("using {}", path.display());
            return ck.states();
        }
    }
    train_all(prep, cfg, variant, protocol)
}

fn finish(reports: &[crate::harness::protocols::EvalReport], out: &Path) -> Result<i32> {
    let (csv, txt) = io::write_reports(out, reports)?;
    print!("{}", io::report_text(reports));
    println!("wrote {} and {}", csv.display(), txt.display());
    let failed = reports.iter().any(|r| r.per_seed.iter().any(|s| s.failure.is_some()));
    Ok(if failed { EXIT_DIVERGED } else { EXIT_OK })
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::GenData(c) => {
            let cfg = load_config(&c)?;
            let corpus = generate_corpus(&cfg.generator)?;
            let path = c.out.join(io::CORPUS_FILE);
            io::write_json(&path, &corpus)?;
            println!("wrote {} ({} pairs)", path.display(), corpus.len());
            Ok(EXIT_OK)
        }
        Command::Cluster(c) => {
            let cfg = load_config(&c)?;
            let cp = c.out.join(io::CORPUS_FILE);
            let corpus = if cp.exists() {
                io::read_corpus(&cp)?
            } else {
                generate_corpus(&cfg.generator)?
            };
            let h = build_hierarchy(&corpus, cfg.chc, cfg.seed)?;
            let path = c.out.join(io::HIERARCHY_FILE);
            io::write_json(&path, &h)?;
            for cl in &h.clusters {
                println!(
                    "cluster {}: '{}' ({} pairs, {} domains)",
                    cl.id,
                    cl.topic_label,
                    cl.members.len(),
                    cl.domains.len()
                );
            }
            if let Some((t, d)) = truth_purity(&h, &corpus) {
                println!("topic purity {t:.3}, domain purity {d:.3}");
            }
            println!("wrote {}", path.display());
            Ok(EXIT_OK)
        }
        Command::GenTasks(c) => {
            let cfg = load_config(&c)?;
            let prep = load_or_build(&cfg, &c.out)?;
            let tasks =
                task_stream(&prep.hierarchy, cfg.tasks, cfg.seed, cfg.hyper.total_tasks).collect::<Result<Vec<_>>>()?;
            let set = TaskSet {
                version: TASKSET_VERSION,
                seed: cfg.seed,
                config: cfg.tasks,
                tasks,
            };
            let path = c.out.join(io::TASKS_FILE);
            io::write_json(&path, &set)?;
            println!("wrote {} ({} tasks)", path.display(), set.tasks.len());
            Ok(EXIT_OK)
        }
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            let prep = load_or_build(&cfg, &c.out)?;
            let variant = cfg.variant();
            let states = train_all(&prep, &cfg, variant, Protocol::BaseToNew)?;
            let ck = Checkpoint::from_states(&cfg, Protocol::BaseToNew, variant, &states);
            io::write_json(&c.out.join(io::CHECKPOINT_FILE), &ck)?;
            io::write_trace(&c.out.join(io::TRACE_FILE), &states)?;
            for (i, s) in states.iter().enumerate() {
                match s {
                    Ok(m) => println!(
                        "seed {i}: {} steps, final query loss {:.4}",
                        m.step,
                        m.trace.last().map_or(f64::NAN, |r| r.mean_query_loss)
                    ),
                    Err(reason) => println!("seed {i}: {reason}"),
                }
            }
            Ok(if any_failed(&states) { EXIT_DIVERGED } else { EXIT_OK })
        }
        Command::EvalB2n(c) => {
            let cfg = load_config(&c)?;
            let prep = load_or_build(&cfg, &c.out)?;
            let states = trained_states(&prep, &cfg, &c.out, Protocol::BaseToNew)?;
            let report = run_protocol(&prep, &cfg, cfg.variant(), Protocol::BaseToNew, Some(&states))?;
            finish(&[report], &c.out)
        }
        Command::EvalXdomain(c) => {
            let cfg = load_config(&c)?;
            if cfg.chc.domains < 2 || cfg.generator.n_domains < 2 {
                return Err(Error::Config(
                    "cross-domain evaluation needs at least two domains".into(),
                ));
            }
            let prep = load_or_build(&cfg, &c.out)?;
            let states = trained_states(&prep, &cfg, &c.out, Protocol::CrossDomain)?;
            let report = run_protocol(&prep, &cfg, cfg.variant(), Protocol::CrossDomain, Some(&states))?;
            finish(&[report], &c.out)
        }
        Command::Ablate(c) => {
            let cfg = load_config(&c)?;
            let prep = load_or_build(&cfg, &c.out)?;
            let reports = Variant::GRID
                .iter()
                .map(|&v| run_protocol(&prep, &cfg, v, Protocol::BaseToNew, None))
                .collect::<Result<Vec<_>>>()?;
            finish(&reports, &c.out)
        }
        Command::Gradcheck(c) => {
            let cfg = load_config(&c)?;
            let report = gradcheck_suite(cfg.seed)?;
            let path = c.out.join("gradcheck.json");
            io::write_json(&path, &report)?;
            println!(
                "theta: {} entries, max relative error {:.3e}",
                report.theta_entries, report.theta_max_relative_error
            );
            println!(
                "phi:   {} entries, max relative error {:.3e}",
                report.phi_entries, report.phi_max_relative_error
            );
            let ok = report.max_relative_error() <= 1e-4;
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(if ok { EXIT_OK } else { EXIT_CONFIG })
        }
        Command::Diag(c) => {
            let cfg = load_config(&c)?;
            let prep = load_or_build(&cfg, &c.out)?;
            diag(&prep, &cfg, &c.out)
        }
    }
}

fn diag(prep: &Prepared, cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let seed = eval_seed(cfg, 0);
    let set = base_to_new_split(prep, cfg, seed)?;
    let state = train_variant(
        prep,
        cfg,
        Variant::Full,
        &set.train,
        seed,
        cfg.hyper.total_tasks,
        |_| Ok(()),
    )?;

    let path = out.join("diag_alignment.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::io(&path, e))?;
    let err = |e: csv::Error| Error::io(&path, e);
    w.write_record(["version", "step", "tasks_seen", "mean_alignment", "mean_query_loss"])
        .map_err(err)?;
    for r in &state.trace {
        w.write_record([
            io::CSV_VERSION.to_string(),
            r.step.to_string(),
            r.tasks_seen.to_string(),
            format!("{:.9}", r.mean_alignment),
            format!("{:.9}", r.mean_query_loss),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let tpath = out.join("diag_taylor.csv");
    let mut w = csv::Writer::from_path(&tpath).map_err(|e| Error::io(&tpath, e))?;
    let err = |e: csv::Error| Error::io(&tpath, e);
    w.write_record(["version", "task", "alpha", "residual"]).map_err(err)?;
    let mut tasks_cfg = cfg.tasks;
    tasks_cfg.k_way = tasks_cfg.k_way.min(crate::episodes::usable_clusters(&set.train));
    let probe_seed = crate::seeding::derive(seed, &[0xD1A6]);
    for (t, task) in task_stream(&set.train, tasks_cfg, probe_seed, 10).enumerate() {
        let (vocab, support, query) = task?.materialize(&set.train, &prep.corpus)?;
        let ep = crate::gram::Episode {
            model: &prep.model,
            vocab,
            support,
            query,
        };
        for alpha in [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2.5e-3] {
            let r = taylor_residual(&state.theta, state.regulator(&cfg.hyper), &ep, alpha)?;
            w.write_record([
                io::CSV_VERSION.to_string(),
                t.to_string(),
                format!("{alpha:e}"),
                format!("{r:.6e}"),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&tpath, e))?;
    println!("wrote {} and {}", path.display(), tpath.display());
    Ok(EXIT_OK)
}
