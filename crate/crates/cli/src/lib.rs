//! Batch runner for the `nonharmonic` engine: one subcommand per analysis,
//! driven by a strict TOML config. See `docs/config.md` for the schema.

pub mod config;
pub mod output;
pub mod suite;
pub mod tasks;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use serde_json::json;

use config::{ConfigError, RunConfig};
use output::{Timing, TaskOutput};
use tasks::Context;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    System,
    Transform,
    Weights,
    Symbol,
    Apply,
    Compose,
    Adjoint,
    Parametrix,
    Garding,
    Compact,
    Resolvent,
    Solve,
    Suite,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::System => "system",
            Task::Transform => "transform",
            Task::Weights => "weights",
            Task::Symbol => "symbol",
            Task::Apply => "apply",
            Task::Compose => "compose",
            Task::Adjoint => "adjoint",
            Task::Parametrix => "parametrix",
            Task::Garding => "garding",
            Task::Compact => "compact",
            Task::Resolvent => "resolvent",
            Task::Solve => "solve",
            Task::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub task: Task,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Format,
    pub plots: bool,
}

/// What the process prints and returns.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn config_failure(errors: &[ConfigError]) -> Outcome {
    let doc = json!({"status": "config_error", "errors": errors});
    Outcome {
        code: EXIT_CONFIG,
        stdout: String::new(),
        stderr: serde_json::to_string_pretty(&doc).expect("errors serialize") + "\n",
    }
}

/// Input and geometry problems are configuration errors; everything else a
/// module reports is a failed numerical precondition.
fn is_config_error(e: &nonharmonic::Error) -> bool {
    use nonharmonic::Error as E;
    matches!(
        e,
        E::InvalidParameter(_)
            | E::GeometryMismatch(_)
            | E::WindowTooSmall(_)
            | E::KindMismatch { .. }
            | E::Parse(_)
            | E::Io(_)
            | E::Csv(_)
    )
}

fn dispatch(task: Task, ctx: &Context) -> Result<TaskOutput, nonharmonic::Error> {
    match task {
        Task::System => tasks::system(ctx),
        Task::Transform => tasks::transform(ctx),
        Task::Weights => tasks::weights(ctx),
        Task::Symbol => tasks::symbol(ctx),
        Task::Apply => tasks::apply(ctx),
        Task::Compose => tasks::compose(ctx),
        Task::Adjoint => tasks::adjoint(ctx),
        Task::Parametrix => tasks::parametrix_task(ctx),
        Task::Garding => tasks::garding(ctx),
        Task::Compact => tasks::compact(ctx),
        Task::Resolvent => tasks::resolvent(ctx),
        Task::Solve => tasks::solve(ctx),
        Task::Suite => suite::run(ctx.cfg.seed),
    }
}

fn summary(format: Format, task: Task, out: &TaskOutput, error: Option<&str>, dir: &Path) -> String {
    match format {
        Format::Json => {
            let mut doc = json!({
                "task": task.name(),
                "verdict": if out.passed() && error.is_none() { "pass" } else { "fail" },
                "checks": out.checks,
                "output_dir": dir.display().to_string(),
            });
            if let Some(e) = error {
                doc["error"] = json!(e);
            }
            serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["check", "pass", "detail"]).expect("in-memory write");
            if let Some(e) = error {
                w.write_record(["precondition", "false", e]).expect("in-memory write");
            }
            for c in &out.checks {
                w.write_record([c.name.as_str(), if c.pass { "true" } else { "false" }, c.detail.as_str()])
                    .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
        }
    }
}

pub fn run(inv: &Invocation) -> Outcome {
    let started = Instant::now();
    let (mut cfg, base_dir) = match &inv.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => (c, p.parent().map(Path::to_path_buf)),
            Err(e) => return config_failure(&e),
        },
        None => (RunConfig::default(), None),
    };
    if let Some(s) = inv.seed {
        cfg.seed = s;
    }
    // --out is relative to the working directory, output_dir to the config file
    let root = match &inv.out {
        Some(o) => {
            cfg.output_dir = o.clone();
            o.clone()
        }
        None => config::resolve_path(base_dir.as_deref(), &cfg.output_dir),
    };
    let dir = root.join(inv.task.name());
    let ctx = match Context::new(cfg.clone(), base_dir) {
        Ok(c) => c,
        Err(e) => {
            return config_failure(&[ConfigError {
                path: "".into(),
                message: format!("{}: {e}", inv.task.name()),
            }])
        }
    };
    let setup = started.elapsed().as_secs_f64();
    let result = dispatch(inv.task, &ctx);
    let compute = started.elapsed().as_secs_f64() - setup;
    let (out, error, code) = match result {
        Ok(out) => {
            let code = if out.passed() { EXIT_OK } else { EXIT_VERDICT };
            (out, None, code)
        }
        Err(e) if is_config_error(&e) => {
            return config_failure(&[ConfigError {
                path: "".into(),
                message: format!("{}: {e}", inv.task.name()),
            }])
        }
        Err(e) => (TaskOutput::default(), Some(format!("{}: {e}", inv.task.name())), EXIT_VERDICT),
    };
    let payload = output::payload(inv.task.name(), &cfg, &out, error.as_deref());
    let timings = [
        Timing {
            phase: "setup".into(),
            seconds: setup,
        },
        Timing {
            phase: "compute".into(),
            seconds: compute,
        },
    ];
    if let Err(e) = output::write_artifacts(&dir, &payload, &timings, &out.series, inv.plots) {
        return config_failure(&[ConfigError {
            path: "output_dir".into(),
            message: format!("cannot write artifacts to {}: {e}", dir.display()),
        }]);
    }
    Outcome {
        code,
        stdout: summary(inv.format, inv.task, &out, error.as_deref(), &dir),
        stderr: error.map(|e| format!("{e}\n")).unwrap_or_default(),
    }
}
