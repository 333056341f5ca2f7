//! Counting evaluations of h on each side of the handshake.

use kap::owf::CountingOwf;
use kap::params::{alice_secret_from_seed, bob_secret_from_seed};
use kap::{gen_public_params, AliceSession, BobSession, OwfId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>4} {:>6} {:>6} {:>6}", "n", "K+1", "alice", "bob");
    for n in [8, 16, 32, 64] {
        let pp = gen_public_params(n, b"budget")?;
        let ha = CountingOwf::new(OwfId::Sha256V1);
        let hb = CountingOwf::new(OwfId::Sha256V1);
        let mut alice = AliceSession::with_owf(&pp, alice_secret_from_seed(&pp, b"a"), ha.clone());
        let mut bob = BobSession::with_owf(&pp, bob_secret_from_seed(&pp, b"b"), hb.clone());

        let r2 = bob.round2(&alice.round1()?)?;
        let r3 = alice.round3(&r2)?;
        let alice_round3 = ha.count();
        let (r4, _) = bob.round4(&r3)?;
        alice.finalize(&r4)?;

        println!(
            "{n:>4} {:>6} {:>6} {:>6}",
            pp.offset_bound() + 1,
            alice_round3,
            hb.count()
        );
    }
    Ok(())
}
