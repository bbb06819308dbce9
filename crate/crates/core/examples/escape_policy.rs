//! Greedy success of the bundled escape policy against the random policy
//! in the training environment.

use micronav::bench::{bundled_policy_path, cmd_eval};

fn main() -> micronav::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let random = cmd_eval(None, episodes, 3)?;
    let trained = cmd_eval(Some(&bundled_policy_path()), episodes, 3)?;
    println!("random  success {:.3} mean return {:+.3}", random.success_rate, random.mean_return);
    println!("trained success {:.3} mean return {:+.3}", trained.success_rate, trained.mean_return);
    Ok(())
}
