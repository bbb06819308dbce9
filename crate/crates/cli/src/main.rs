use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use micronav::agp::{plan_2d, AgpParams, InflationSpec, SphereScene, DEFAULT_ALPHA, DEFAULT_PLANES, DEFAULT_SPACING};
use micronav::bench::{self, BenchConfig, ScenarioSource};
use micronav::escape::PolicyHandle;
use micronav::nav::{Controller, NavConfig};
use micronav::rl::TrainConfig;
use micronav::Vec2;
use micronav_service::{SessionConfig, WorldSource};
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "micronav", version, about = "Microrobot motion planning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scene file (JSON).
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Settings file (JSON) for the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan a 2D path from the scene start to its first target.
    Plan {
        #[command(flatten)]
        common: Common,
    },
    /// Plan a 3D path among spheres (random scene unless --scene is given).
    Plan3d {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_PLANES)]
        planes: usize,
        /// Spheres in the random scene.
        #[arg(long, default_value_t = 30)]
        spheres: usize,
    },
    /// Compare planners on the seeded benchmark arenas.
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Run one closed-loop episode.
    Scenario {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "rule")]
        controller: Controller,
        /// Moving target in the generated arena.
        #[arg(long)]
        moving: bool,
        /// Local controller alone, without the global planner.
        #[arg(long)]
        no_planner: bool,
        #[arg(long, default_value_t = bench::DEFAULT_FRAMES_CAP)]
        frames: u64,
        /// Policy checkpoint for the rl controller (defaults to the bundled one).
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Train the escape policy.
    Train {
        #[command(flatten)]
        common: Common,
        /// 2e5-step run instead of the full 1e6 steps.
        #[arg(long)]
        desk: bool,
    },
    /// Greedy success rate of a policy in the escape environment.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Policy checkpoint; the uniform random policy when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        episodes: usize,
    },
    /// Serve live sessions over WebSocket.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long, default_value_t = 25.0)]
        fps: f64,
        #[arg(long, default_value = "rule")]
        controller: Controller,
        #[arg(long)]
        policy: Option<PathBuf>,
    },
}

/// Planner settings for `plan`.
#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlanSettings {
    alpha: f64,
    spacing: f64,
    inflation: BTreeMap<u32, f64>,
    via: Vec<Vec2>,
    bounded: bool,
}

impl Default for PlanSettings {
    fn default() -> Self {
        PlanSettings { alpha: DEFAULT_ALPHA, spacing: DEFAULT_SPACING, inflation: BTreeMap::new(), via: Vec::new(), bounded: true }
    }
}

fn settings<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_policy(path: Option<&Path>, controller: Controller) -> Result<Option<PolicyHandle>> {
    Ok(match path {
        Some(p) => Some(PolicyHandle::load(p)?),
        None if controller == Controller::Rl => Some(bench::bundled_policy()?),
        None => None,
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Cmd::Plan { common } => {
            let path = common.scene.as_deref().context("plan needs --scene")?;
            let scene = micronav::sim::load_phantom(path)?;
            let start = scene.start.context("scene has no start")?;
            let end = scene.targets.first().context("scene has no target")?.pos;
            let s: PlanSettings = settings(common.config.as_deref())?;
            let mut inflation = InflationSpec::new();
            for (id, d) in s.inflation {
                inflation.set(id, d)?;
            }
            let mut params = if s.bounded { AgpParams::within(scene.width as f64, scene.height as f64) } else { AgpParams::default() };
            params = AgpParams { alpha: s.alpha, spacing: s.spacing, inflation, via: s.via, ..params };
            let plan = plan_2d(&scene.obstacles, start, end, &params)?;
            emit(common.out.as_deref(), &plan.to_json())?;
        }
        Cmd::Plan3d { common, planes, spheres } => {
            let scene = match &common.scene {
                Some(p) => SphereScene::load(p)?,
                None => SphereScene::random(spheres, common.seed),
            };
            let plan = scene.plan(planes, DEFAULT_SPACING, DEFAULT_ALPHA)?;
            emit(common.out.as_deref(), &plan.to_json())?;
        }
        Cmd::Bench { common } => {
            let mut config: BenchConfig = settings(common.config.as_deref())?;
            if common.seed != 0 {
                config.seed = common.seed;
            }
            let (records, summary) = bench::cmd_bench(&config)?;
            println!("{:<7} {:>5} {:>9} {:>8} {:>10} {:>12} {:>10}", "planner", "arena", "obstacles", "feasible", "length", "var", "time_ms");
            for r in &summary.rows {
                let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
                println!(
                    "{:<7} {:>5} {:>9} {:>5}/{:<2} {:>10} {:>12} {:>10.3}",
                    r.planner.name(),
                    r.arena,
                    r.obstacles,
                    r.feasible,
                    r.runs,
                    f(r.mean_length),
                    f(r.var_length),
                    1e3 * r.mean_time_s
                );
            }
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir)?;
                bench::write_records_csv(&records, File::create(dir.join("records.csv"))?)?;
                std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            }
        }
        Cmd::Scenario { common, controller, moving, no_planner, frames, policy } => {
            let mut config: NavConfig = settings(common.config.as_deref())?;
            config.controller = controller;
            config.use_planner &= !no_planner;
            let source = match (&common.scene, moving) {
                (Some(p), _) => ScenarioSource::Scene(p.clone()),
                (None, true) => ScenarioSource::Moving,
                (None, false) => ScenarioSource::Fixed,
            };
            let policy = load_policy(policy.as_deref(), controller)?;
            let mut log = match &common.out {
                Some(p) => Some(BufWriter::new(File::create(p)?)),
                None => None,
            };
            let report = bench::cmd_scenario(&source, config, policy, common.seed, frames, log.as_mut().map(|w| w as &mut dyn Write))?;
            if let Some(mut w) = log {
                w.flush()?;
            }
            let mut v = serde_json::to_value(&report)?;
            v.as_object_mut().expect("report is an object").remove("distance");
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Cmd::Train { common, desk } => {
            let out = common.out.context("train needs --out DIR")?;
            let base = if desk { TrainConfig::desk(common.seed) } else { TrainConfig { seed: common.seed, ..TrainConfig::default() } };
            let config = match &common.config {
                Some(_) => TrainConfig { seed: common.seed, ..settings(common.config.as_deref())? },
                None => base,
            };
            let outcome = bench::cmd_train(&config, &out)?;
            let best = outcome.best.as_ref().map(|(_, r)| r.success_rate);
            println!("steps {} updates {} best eval {:?} -> {}", outcome.steps, outcome.updates, best, out.display());
        }
        Cmd::Eval { common, policy, episodes } => {
            let report = bench::cmd_eval(policy.as_deref(), episodes, common.seed)?;
            emit(common.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
        }
        Cmd::Serve { common, bind, fps, controller, policy } => {
            let mut nav: NavConfig = settings(common.config.as_deref())?;
            nav.controller = controller;
            let world = match &common.scene {
                Some(p) => WorldSource::Scene(micronav::sim::load_phantom(p)?),
                None => WorldSource::Arena { moving: false },
            };
            let policy = match policy {
                Some(p) => Some(PolicyHandle::load(p)?),
                None => bench::bundled_policy().ok(),
            };
            if common.out.is_some() {
                bail!("serve does not write output");
            }
            micronav_service::serve(&bind, SessionConfig { world, nav, policy, seed: common.seed, fps })?;
        }
    }
    Ok(())
}
