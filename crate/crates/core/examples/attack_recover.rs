//! Recovering Alice's secret from a transcript when her permutation is
//! known, and failing when the guess is wrong.

use kap::attack::{full_attack, random_wrong_guess, GuessSet, HonestInstance};
use kap::SeededRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = HonestInstance::generate(10, b"target")?;
    let sigma = inst.alice.permutation();
    println!("alice sigma = {:?}", sigma.image());

    let truth = GuessSet::true_prefix(sigma, 10);
    for c in full_attack(&inst.transcript, &truth)? {
        println!(
            "candidate t = {:?}",
            c.t.iter().map(|&b| b as u8).collect::<Vec<_>>()
        );
        println!(
            "  alpha = {}, g = {}, correct = {}",
            c.alpha,
            c.g,
            inst.matches(&c)
        );
    }

    let mut rng = SeededRng::new(b"wrong", "guess");
    let mut empty = 0;
    for _ in 0..50 {
        let wrong = random_wrong_guess(10, &truth, &mut rng);
        empty += full_attack(&inst.transcript, &wrong)?.is_empty() as usize;
    }
    println!("wrong guesses with no candidate: {empty}/50");
    Ok(())
}
