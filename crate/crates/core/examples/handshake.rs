//! One in-memory handshake at n = 16.
//!
//!     cargo run --example handshake

use kap::{gen_public_params, run_handshake};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pp = gen_public_params(16, b"example")?;
    println!(
        "n = {}, p = {:#x}, K = {}",
        pp.n(),
        pp.modulus().p(),
        pp.offset_bound()
    );

    let out = run_handshake(&pp, b"alice seed", b"bob seed")?;
    println!("alice g = {} h(g) = {}", out.alice.g, out.alice.digest);
    println!("bob   g = {} h(g) = {}", out.bob.g, out.bob.digest);
    println!(
        "{}",
        if out.agreed() {
            "keys agree"
        } else {
            "keys differ"
        }
    );

    for line in out.transcript.to_jsonl().lines() {
        let cut = line.len().min(72);
        println!(
            "{}{}",
            &line[..cut],
            if cut < line.len() { " ..." } else { "" }
        );
    }
    Ok(())
}
