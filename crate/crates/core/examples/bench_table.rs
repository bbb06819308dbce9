//! A reduced planner benchmark written as CSV plus a JSON summary.

use micronav::bench::{cmd_bench, write_records_csv, BenchConfig};

fn main() -> micronav::Result<()> {
    let config = BenchConfig { runs: 3, parallel: true, ..BenchConfig::default() };
    let (records, summary) = cmd_bench(&config)?;
    let dir = std::env::temp_dir().join("micronav_bench");
    std::fs::create_dir_all(&dir)?;
    write_records_csv(&records, std::fs::File::create(dir.join("records.csv"))?)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap())?;
    for row in &summary.rows {
        println!(
            "{:<7} arena {} length {:>9} var {:>10} time {:8.3} ms",
            row.planner.name(),
            row.arena,
            row.mean_length.map_or("-".into(), |l| format!("{l:.2}")),
            row.var_length.map_or("-".into(), |v| format!("{v:.3}")),
            1e3 * row.mean_time_s
        );
    }
    println!("written to {}", dir.display());
    Ok(())
}
