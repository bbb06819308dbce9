//! A short training run of the escape policy. Pass a step count to train
//! longer; the desk run uses 200000.

use micronav::bench::cmd_train;
use micronav::rl::TrainConfig;

fn main() -> micronav::Result<()> {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let config = TrainConfig { total_steps: steps, warmup: 2_000.min(steps / 2), eval_every: 500, eval_episodes: 20, ..TrainConfig::desk(1) };
    let out = std::env::temp_dir().join("micronav_train");
    let outcome = cmd_train(&config, &out)?;
    for r in &outcome.history {
        println!("step {:7}: success {:.2} return {:+.3}", r.step, r.success_rate, r.mean_return);
    }
    println!("{} updates, checkpoints in {}", outcome.updates, out.display());
    Ok(())
}
