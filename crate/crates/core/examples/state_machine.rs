//! Driving both session state machines by hand, round by round.

use kap::params::{alice_secret_from_seed, bob_secret_from_seed};
use kap::{gen_public_params, AliceSession, BobSession};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pp = gen_public_params(8, b"by hand")?;
    let mut alice = AliceSession::new(&pp, alice_secret_from_seed(&pp, b"a"));
    let mut bob = BobSession::new(&pp, bob_secret_from_seed(&pp, b"b"));

    let r1 = alice.round1()?;
    println!(
        "round 1: {} values of mu, alice now {}",
        r1.mu.len(),
        alice.state_label()
    );

    let r2 = bob.round2(&r1)?;
    println!(
        "round 2: tau_A = {}, bob now {}",
        r2.tau_a,
        bob.state_label()
    );

    let r3 = alice.round3(&r2)?;
    println!(
        "round 3: {} digests, tau_B = {}",
        r3.digests.len(),
        r3.tau_b
    );

    let (r4, bob_key) = bob.round4(&r3)?;
    println!("round 4: k0 = {}", r4.k0);

    let alice_key = alice.finalize(&r4)?;
    assert_eq!(alice_key, bob_key);
    println!("shared g = {}", alice_key.g);

    // sessions refuse to run a round twice
    if let Err(e) = alice.round1() {
        println!("replay rejected: {e}");
    }
    Ok(())
}
