//! Alice listens on an ephemeral port, Bob connects from another thread.

use std::net::{TcpListener, TcpStream};
use std::thread;

use kap::params::{alice_secret_from_seed, bob_secret_from_seed};
use kap::protocol::{drive_alice, drive_bob};
use kap::wire::StreamChannel;
use kap::{gen_public_params, AliceSession, BobSession};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pp = gen_public_params(16, b"tcp")?;
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    println!("listening on {addr}");

    let (alice_key, bob_key) = thread::scope(|s| {
        let server = s.spawn(|| {
            let (stream, _) = listener.accept().expect("accept");
            let mut session = AliceSession::new(&pp, alice_secret_from_seed(&pp, b"server"));
            drive_alice(&mut session, &mut StreamChannel(stream))
        });
        let stream = TcpStream::connect(addr).expect("connect");
        let mut session = BobSession::new(&pp, bob_secret_from_seed(&pp, b"client"));
        let bob = drive_bob(&mut session, &mut StreamChannel(stream));
        (server.join().expect("server thread"), bob)
    });

    let (a, b) = (alice_key?, bob_key?);
    println!("alice: {}", a.digest);
    println!("bob:   {}", b.digest);
    assert_eq!(a, b);
    Ok(())
}
