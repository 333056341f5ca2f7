#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub fn kap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kap"))
}

pub fn run_kap(args: &[&str]) -> Output {
    kap().args(args).output().expect("spawn kap")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn gen_params(dir: &Path, name: &str, n: usize, seed: &str) -> PathBuf {
    let path = dir.join(name);
    let out = run_kap(&[
        "gen-params",
        "--n",
        &n.to_string(),
        "--seed",
        seed,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

/// A `serve --once` child on an ephemeral port.
pub struct Server {
    pub child: Child,
    pub addr: SocketAddr,
    reader: BufReader<std::process::ChildStdout>,
}

impl Server {
    pub fn start(params: &Path, seed: &str) -> Server {
        let mut child = kap()
            .args(["serve", "--params", params.to_str().unwrap()])
            .args(["--port", "0", "--seed", seed, "--once"])
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .expect("spawn serve");
        let mut reader = BufReader::new(child.stdout.take().unwrap());
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let addr = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .parse()
            .unwrap();
        Server {
            child,
            addr,
            reader,
        }
    }

    /// Waits for exit; returns (exit code, remaining stdout).
    pub fn finish(mut self) -> (i32, String) {
        let mut rest = String::new();
        self.reader.read_to_string(&mut rest).unwrap();
        let status = self.child.wait().unwrap();
        (status.code().unwrap_or(-1), rest)
    }
}

pub fn digest_line(text: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix("key digest: "))
        .map(str::to_string)
}

/// One loopback handshake; returns (serve digest, connect digest).
pub fn loopback(params: &Path, seed_a: &str, seed_b: &str) -> (Option<String>, Option<String>) {
    let server = Server::start(params, seed_a);
    let client = run_kap(&[
        "connect",
        "--params",
        params.to_str().unwrap(),
        "--host",
        &server.addr.to_string(),
        "--seed",
        seed_b,
    ]);
    let (code, rest) = server.finish();
    let a = (code == 0).then(|| digest_line(&rest)).flatten();
    let b = client
        .status
        .success()
        .then(|| digest_line(&stdout(&client)))
        .flatten();
    (a, b)
}
