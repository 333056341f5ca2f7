//! Counting knapsack solutions over honest transcripts and comparing the
//! mean against 2^n / p.

use kap::attack::solution_count_experiment;
use kap::SeededRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::new(b"count example", "experiment");
    for n in [8, 12, 16] {
        let stats = solution_count_experiment(n, 20, &mut rng)?;
        println!(
            "n = {n:2}, p = {:5}: mean {:8.2}  min {:4}  max {:4}  predicted {:8.3}",
            stats.p, stats.mean, stats.min, stats.max, stats.prediction
        );
    }

    let stats = solution_count_experiment(10, 5, &mut rng)?;
    stats.write_csv(std::io::stdout())?;
    Ok(())
}
