//! Experiment drivers: the planner comparison, closed-loop scenarios, and
//! thin training and evaluation front-ends. Outputs are plain CSV and JSON.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agp::{plan_2d, AgpParams};
use crate::baselines::{pso_plan, rrt_plan, wastar_plan, PsoParams, RrtParams, WaStarParams};
use crate::error::{Error, Result};
use crate::escape::PolicyHandle;
use crate::geom::Vec2;
use crate::nav::{Controller, NavConfig, Navigator};
use crate::rl::{self, EnvConfig, EscapeEnv, EvalReport, SavedModel, TrainConfig, TrainOutcome};
use crate::scene::{generate_arena, ArenaSpec, Scene, Target};
use crate::sim::{generate_dynamic, EventKind, FrameRecord, Mode, Sim, SimConfig, TrajectoryLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planner {
    Agp,
    Wastar,
    Rrt,
    Pso,
}

impl Planner {
    pub const ALL: [Planner; 4] = [Planner::Agp, Planner::Wastar, Planner::Rrt, Planner::Pso];

    pub fn name(self) -> &'static str {
        match self {
            Planner::Agp => "agp",
            Planner::Wastar => "wastar",
            Planner::Rrt => "rrt",
            Planner::Pso => "pso",
        }
    }
}

impl std::str::FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Planner::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown planner {s:?} (agp, wastar, rrt, pso)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub planner: Planner,
    pub arena: u32,
    pub obstacles: usize,
    pub run: u32,
    pub seed: u64,
    pub length: Option<f64>,
    pub time_s: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub planner: Planner,
    pub arena: u32,
    pub obstacles: usize,
    pub runs: usize,
    pub feasible: usize,
    pub mean_length: Option<f64>,
    /// Sample variance over feasible runs.
    pub var_length: Option<f64>,
    pub mean_time_s: f64,
    pub var_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub crate_version: String,
}

impl HostInfo {
    pub fn current() -> Self {
        HostInfo {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            crate_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub host: HostInfo,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Arena ids; arena `k` holds `10 k` obstacles and uses seed `k`.
    pub arenas: Vec<u32>,
    pub runs: u32,
    pub planners: Vec<Planner>,
    /// Base seed for the stochastic planners; run `i` uses `seed + i`.
    pub seed: u64,
    /// Spread runs over threads. Timings then include contention.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { arenas: (1..=6).collect(), runs: 10, planners: Planner::ALL.to_vec(), seed: 0, parallel: false }
    }
}

pub fn arena_scene(arena: u32) -> Result<Scene> {
    if arena == 0 {
        return Err(Error::InvalidArgument("arena ids start at 1".into()));
    }
    generate_arena(&ArenaSpec::benchmark(10 * arena as usize, arena as u64))
}

/// Runs one planner on `scene` from its start to its first target. Only the
/// planner call is timed; failures come back as infeasible.
pub fn run_planner(planner: Planner, scene: &Scene, seed: u64) -> (Option<f64>, f64) {
    let start = scene.start.unwrap_or(Vec2::ZERO);
    let end = scene.targets.first().map_or(Vec2::new(scene.width as f64, scene.height as f64), |t| t.pos);
    let (w, h) = (scene.width as f64, scene.height as f64);
    let zones = scene.zones();
    let t0 = Instant::now();
    let length = match planner {
        Planner::Agp => plan_2d(&scene.obstacles, start, end, &AgpParams::within(w, h)).ok().map(|p| p.length),
        Planner::Wastar => wastar_plan(&zones, w, h, start, end, &WaStarParams::benchmark()).ok().map(|r| r.path.length),
        Planner::Rrt => rrt_plan(&zones, w, h, start, end, &RrtParams::benchmark(seed)).ok().map(|r| r.path.length),
        Planner::Pso => pso_plan(&zones, start, end, &PsoParams::benchmark(scene.obstacles.len(), seed))
            .ok()
            .filter(|r| r.feasible())
            .map(|r| r.path.length),
    };
    (length, t0.elapsed().as_secs_f64())
}

/// The planner comparison: every planner on every arena, `runs` times.
/// Records come back ordered by (planner, arena, run).
pub fn cmd_bench(config: &BenchConfig) -> Result<(Vec<RunRecord>, BenchSummary)> {
    if config.runs == 0 || config.arenas.is_empty() || config.planners.is_empty() {
        return Err(Error::InvalidArgument("bench needs at least one planner, arena and run".into()));
    }
    let scenes = config.arenas.iter().map(|&a| arena_scene(a).map(|s| (a, s))).collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for &p in &config.planners {
        for (a, s) in &scenes {
            for run in 0..config.runs {
                jobs.push((p, *a, s, run));
            }
        }
    }
    let one = |&(p, a, s, run): &(Planner, u32, &Scene, u32)| {
        let seed = config.seed + run as u64;
        let (length, time_s) = run_planner(p, s, seed);
        RunRecord { planner: p, arena: a, obstacles: s.obstacles.len(), run, seed, length, time_s, feasible: length.is_some() }
    };
    let records: Vec<RunRecord> = if config.parallel { jobs.par_iter().map(one).collect() } else { jobs.iter().map(one).collect() };
    let summary = BenchSummary { host: HostInfo::current(), rows: summarize(&records) };
    Ok((records, summary))
}

/// Sample mean and variance computed on deviations from the first sample,
/// so identical samples give exactly their value and zero variance.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    let Some(&k) = xs.first() else { return (0.0, 0.0) };
    let n = xs.len() as f64;
    let (s1, s2) = xs.iter().fold((0.0, 0.0), |(a, b), x| (a + (x - k), b + (x - k) * (x - k)));
    let var = if xs.len() > 1 { ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0) } else { 0.0 };
    (k + s1 / n, var)
}

/// Mean and variance per (planner, arena), in first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Planner, u32)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.planner, r.arena)) {
            keys.push((r.planner, r.arena));
        }
    }
    keys.into_iter()
        .map(|(planner, arena)| {
            let group: Vec<&RunRecord> = records.iter().filter(|r| r.planner == planner && r.arena == arena).collect();
            let lengths: Vec<f64> = group.iter().filter_map(|r| r.length).collect();
            let times: Vec<f64> = group.iter().map(|r| r.time_s).collect();
            let (ml, vl) = mean_var(&lengths);
            let (mt, vt) = mean_var(&times);
            SummaryRow {
                planner,
                arena,
                obstacles: group[0].obstacles,
                runs: group.len(),
                feasible: lengths.len(),
                mean_length: (!lengths.is_empty()).then_some(ml),
                var_length: (!lengths.is_empty()).then_some(vl),
                mean_time_s: mt,
                var_time_s: vt,
            }
        })
        .collect()
}

pub fn write_records_csv(records: &[RunRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(input: impl Read) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(|e| Error::Parse(e.to_string()))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Reached,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub controller: Controller,
    pub use_planner: bool,
    pub seed: u64,
    pub frames: u64,
    pub targets_reached: usize,
    pub collisions: u64,
    /// Frames driven by a local controller.
    pub local_frames: u64,
    pub mean_compute_ms: f64,
    pub max_compute_ms: f64,
    pub outcome: Outcome,
    /// Distance to the active target after every frame.
    pub distance: Vec<f64>,
}

impl ScenarioReport {
    pub fn collision_free_arrival(&self) -> bool {
        self.outcome == Outcome::Reached && self.collisions == 0
    }
}

pub const SCENARIO_START: Vec2 = Vec2::new(100.0, 100.0);
pub const SCENARIO_TARGET: Vec2 = Vec2::new(1900.0, 1900.0);
/// Velocity of the target in the moving-target scenario, px per frame.
pub const MOVING_TARGET_VEL: Vec2 = Vec2::new(-2.0, -1.0);

/// A seeded dynamic arena with the robot in the upper-left corner and the
/// target in the lower-right one; the moving variant scripts the target.
pub fn arena_scenario(seed: u64, moving: bool) -> Result<Sim> {
    let c = SimConfig::arena(seed);
    let obstacles = generate_dynamic(&c, &[SCENARIO_START, SCENARIO_TARGET])?;
    let target = Target { pos: SCENARIO_TARGET, vel: if moving { MOVING_TARGET_VEL } else { Vec2::ZERO } };
    Ok(Sim::new(c.width, c.height, c.robot_radius, c.robot_speed, SCENARIO_START, obstacles, vec![target]))
}

/// Simulation over a loaded scene; the scene's robot spec wins over the
/// arena defaults.
pub fn scene_sim(scene: &Scene) -> Sim {
    let robot = scene.robot.unwrap_or(crate::scene::RobotSpec { radius: 25.0, speed: 10.0 });
    Sim::from_scene(scene, robot.radius, robot.speed)
}

/// Runs the closed loop until every target is reached or `frames_cap`
/// frames pass. Collisions are counted and the run continues.
pub fn run_scenario<W: Write>(
    name: &str,
    seed: u64,
    sim: &mut Sim,
    nav: &mut Navigator,
    frames_cap: u64,
    mut log: Option<&mut TrajectoryLog<W>>,
) -> Result<ScenarioReport> {
    let (mut total, mut worst) = (0.0f64, 0.0f64);
    let mut distance = Vec::new();
    let mut frames = 0;
    let mut local = 0;
    let start_collisions = sim.state.collisions;
    while !nav.state.finished && frames < frames_cap {
        let f = nav.advance(sim)?;
        frames += 1;
        local += u64::from(f.output.mode != Mode::Global);
        total += f.compute_s;
        worst = worst.max(f.compute_s);
        let active = sim.state.targets.get(nav.state.target.min(sim.state.targets.len().saturating_sub(1)));
        distance.push(active.map_or(0.0, |t| t.pos.dist(sim.state.robot)));
        let events = std::mem::take(&mut sim.state.events);
        if let Some(log) = log.as_mut() {
            let plan = if events.iter().any(|e| matches!(e.kind, EventKind::Replan { .. })) {
                nav.state.plan.as_ref().map(|p| p.nodes.clone())
            } else {
                None
            };
            log.write(&FrameRecord { frame: sim.state.frame, robot: sim.state.robot, phi: sim.min_clearance(), mode: f.output.mode, events, plan })?;
        }
    }
    Ok(ScenarioReport {
        scenario: name.to_string(),
        controller: nav.config.controller,
        use_planner: nav.config.use_planner,
        seed,
        frames,
        targets_reached: nav.state.target.min(sim.state.targets.len()),
        collisions: (sim.state.collisions - start_collisions) as u64,
        local_frames: local,
        mean_compute_ms: if frames > 0 { 1e3 * total / frames as f64 } else { 0.0 },
        max_compute_ms: 1e3 * worst,
        outcome: if nav.state.finished { Outcome::Reached } else { Outcome::Timeout },
        distance,
    })
}

/// Source of a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Fixed,
    Moving,
    Scene(PathBuf),
}

pub const DEFAULT_FRAMES_CAP: u64 = 3000;

/// One closed-loop episode with the requested controller.
pub fn cmd_scenario(
    source: &ScenarioSource,
    config: NavConfig,
    policy: Option<PolicyHandle>,
    seed: u64,
    frames_cap: u64,
    log: Option<&mut dyn Write>,
) -> Result<ScenarioReport> {
    let (name, mut sim) = match source {
        ScenarioSource::Fixed => ("fixed".to_string(), arena_scenario(seed, false)?),
        ScenarioSource::Moving => ("moving".to_string(), arena_scenario(seed, true)?),
        ScenarioSource::Scene(path) => {
            let scene = crate::sim::load_phantom(path)?;
            (path.file_stem().map_or("scene".into(), |s| s.to_string_lossy().into_owned()), scene_sim(&scene))
        }
    };
    let mut nav = Navigator::new(config, policy)?;
    match log {
        Some(w) => {
            let mut log = TrajectoryLog::new(w);
            run_scenario(&name, seed, &mut sim, &mut nav, frames_cap, Some(&mut log))
        }
        None => run_scenario::<std::io::Sink>(&name, seed, &mut sim, &mut nav, frames_cap, None),
    }
}

/// Trains with the default environment and writes `best.qnet`,
/// `final.qnet` and `train_log.jsonl` into `out_dir`.
pub fn cmd_train(config: &TrainConfig, out_dir: &Path) -> Result<TrainOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let mut log = std::io::BufWriter::new(std::fs::File::create(out_dir.join("train_log.jsonl"))?);
    let config = TrainConfig { diagnostic_dir: config.diagnostic_dir.clone().or_else(|| Some(out_dir.to_path_buf())), ..config.clone() };
    let outcome = rl::train(&config, |s| EscapeEnv::new(EnvConfig::default(), s), Some(&mut log))?;
    log.flush()?;
    let save = |name: &str, net: &rl::Mlp<f32>| {
        rl::save_model(out_dir.join(name), &SavedModel { net: net.clone(), seed: config.seed, steps: Some(outcome.steps) })
    };
    save("final.qnet", &outcome.final_net)?;
    if let Some((net, _)) = &outcome.best {
        save("best.qnet", net)?;
    }
    Ok(outcome)
}

/// Greedy evaluation of a saved policy, or the uniform random baseline
/// when `policy` is `None`.
pub fn cmd_eval(policy: Option<&Path>, episodes: usize, seed: u64) -> Result<EvalReport> {
    let mut env = EscapeEnv::new(EnvConfig::default(), seed)?;
    match policy {
        Some(path) => {
            let p = PolicyHandle::load(path)?;
            rl::evaluate(&mut env, episodes, |o| crate::escape::policy_act(&p, o))
        }
        None => rl::evaluate(&mut env, episodes, rl::random_policy(seed ^ 0x5eed)),
    }
}

/// Path of the bundled checkpoint (full-length training run, seed 1).
pub fn bundled_policy_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join("policy.qnet")
}

pub fn bundled_policy() -> Result<PolicyHandle> {
    PolicyHandle::load(bundled_policy_path())
}
