//! The `kap` command-line driver.
//!
//! Exit codes: 0 on success, 1 on protocol, validation or I/O failure,
//! 2 on usage errors (bad flags, oversized attack budgets).

use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};

use crate::attack::{
    count_experiment_with_limit, full_attack, random_wrong_guess, AttackError, GuessSet,
    HonestInstance, EXHAUSTIVE_LIMIT, EXPERIMENT_LIMIT,
};
use crate::owf::{CountingOwf, OwfId};
use crate::params::{
    alice_secret_from_seed, bob_secret_from_seed, gen_public_params, offset_bound, PublicParams,
};
use crate::protocol::{
    drive_alice, drive_bob, run_handshake, AliceSession, BobSession, HandshakeOutcome,
};
use crate::rng::SeededRng;
use crate::wire::{
    params_from_file, params_to_file, transcript_read, transcript_write, write_atomic,
    StreamChannel,
};

const IO_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Parser)]
#[command(
    name = "kap",
    version,
    about = "Four-pass knapsack key agreement over F_p"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate public parameters and write them as JSON.
    GenParams {
        #[arg(long)]
        n: usize,
        /// Seed bytes in hex.
        #[arg(long)]
        seed: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full handshake in memory and report whether the keys agree.
    Run {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        seed_alice: String,
        #[arg(long)]
        seed_bob: String,
        /// Write the transcript (JSON Lines) here.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Check a recorded transcript against a replay with these seeds.
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Play Alice on a TCP listener.
    Serve {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long)]
        seed: String,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Exit after the first connection.
        #[arg(long)]
        once: bool,
    },
    /// Play Bob against a listening Alice.
    Connect {
        #[arg(long)]
        params: PathBuf,
        /// Peer address as HOST:PORT.
        #[arg(long)]
        host: String,
        #[arg(long)]
        seed: String,
    },
    /// Desk-scale cryptanalysis experiments.
    Attack {
        #[command(subcommand)]
        command: AttackCommand,
    },
    /// Measure hash-evaluation counts and handshake time per n.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum AttackCommand {
    /// Count knapsack solutions over honest transcripts.
    Count {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value = "01")]
        seed: String,
        /// Allow n above the default cap.
        #[arg(long)]
        force: bool,
    },
    /// Attack one honest instance under a true or random guess of sigma.
    Recover {
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Number of guessed sigma values (defaults to n).
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        guess_true: bool,
        #[arg(long, default_value = "01")]
        seed: String,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

impl From<AttackError> for CliError {
    fn from(e: AttackError) -> Self {
        match e {
            AttackError::TooLarge { .. } | AttackError::InvalidGuess(_) => {
                CliError::Usage(e.to_string())
            }
            other => failure(other),
        }
    }
}

type CliResult = Result<(), CliError>;

fn parse_seed(flag: &str, s: &str) -> Result<Vec<u8>, CliError> {
    let bytes = hex::decode(s.strip_prefix("0x").unwrap_or(s))
        .map_err(|e| CliError::Usage(format!("--{flag}: {e}")))?;
    if bytes.is_empty() {
        return Err(CliError::Usage(format!("--{flag} must not be empty")));
    }
    Ok(bytes)
}

fn load_params(path: &Path) -> Result<PublicParams, CliError> {
    params_from_file(path).map_err(|e| failure(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Failure(msg)) = &e;
            let _ = writeln!(err, "error: {msg}");
            e.code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::GenParams { n, seed, out: path } => cmd_gen_params(n, &seed, &path, out),
        Command::Run {
            params,
            seed_alice,
            seed_bob,
            transcript,
            verify,
        } => cmd_run(
            &params,
            &seed_alice,
            &seed_bob,
            transcript.as_deref(),
            verify.as_deref(),
            out,
        ),
        Command::Serve {
            params,
            port,
            seed,
            bind,
            once,
        } => cmd_serve(&params, &bind, port, &seed, once, out),
        Command::Connect { params, host, seed } => cmd_connect(&params, &host, &seed, out),
        Command::Attack { command } => match command {
            AttackCommand::Count {
                n,
                trials,
                csv,
                seed,
                force,
            } => cmd_attack_count(n, trials, csv.as_deref(), &seed, force, out),
            AttackCommand::Recover {
                n,
                r,
                guess_true,
                seed,
                force,
            } => cmd_attack_recover(n, r, guess_true, &seed, force, out),
        },
        Command::Bench { n, trials } => cmd_bench(&n, trials, out),
    }
    .and_then(|()| out.flush().map_err(failure))
}

fn cmd_gen_params(n: usize, seed: &str, path: &Path, out: &mut dyn Write) -> CliResult {
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    let seed = parse_seed("seed", seed)?;
    let pp = gen_public_params(n, &seed).map_err(|e| CliError::Usage(e.to_string()))?;
    params_to_file(&pp, path).map_err(failure)?;
    writeln!(out, "p = {:#x}", pp.modulus().p()).map_err(failure)?;
    writeln!(out, "byte_width = {}", pp.modulus().byte_width()).map_err(failure)?;
    Ok(())
}

fn cmd_run(
    params: &Path,
    seed_alice: &str,
    seed_bob: &str,
    transcript: Option<&Path>,
    verify: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult {
    let seed_alice = parse_seed("seed-alice", seed_alice)?;
    let seed_bob = parse_seed("seed-bob", seed_bob)?;
    let pp = load_params(params)?;
    let outcome = run_handshake(&pp, &seed_alice, &seed_bob).map_err(failure)?;

    writeln!(out, "alice: {}", outcome.alice.digest).map_err(failure)?;
    writeln!(out, "bob:   {}", outcome.bob.digest).map_err(failure)?;
    if let Some(path) = transcript {
        transcript_write(&outcome.transcript, path).map_err(failure)?;
    }
    if let Some(path) = verify {
        verify_transcript(&pp, &outcome, path)?;
        writeln!(out, "transcript verified").map_err(failure)?;
    }
    if outcome.agreed() {
        writeln!(out, "AGREE").map_err(failure)?;
        Ok(())
    } else {
        writeln!(out, "DISAGREE").map_err(failure)?;
        Err(failure("keys differ"))
    }
}

fn verify_transcript(pp: &PublicParams, replay: &HandshakeOutcome, path: &Path) -> CliResult {
    let recorded =
        transcript_read(path).map_err(|e| failure(format!("{}: {e}", path.display())))?;
    recorded.decode(pp).map_err(failure)?;
    for (round, (got, want)) in recorded
        .frames()
        .iter()
        .zip(replay.transcript.frames())
        .enumerate()
    {
        if got != want {
            return Err(failure(format!(
                "transcript mismatch at round {}",
                round + 1
            )));
        }
    }
    Ok(())
}

fn connection_seed(seed: &[u8], index: u64) -> Vec<u8> {
    if index == 0 {
        return seed.to_vec();
    }
    let mut s = seed.to_vec();
    s.extend_from_slice(&index.to_be_bytes());
    s
}

fn cmd_serve(
    params: &Path,
    bind: &str,
    port: u16,
    seed: &str,
    once: bool,
    out: &mut dyn Write,
) -> CliResult {
    let seed = parse_seed("seed", seed)?;
    let pp = load_params(params)?;
    let listener = TcpListener::bind((bind, port)).map_err(failure)?;
    writeln!(
        out,
        "listening on {}",
        listener.local_addr().map_err(failure)?
    )
    .map_err(failure)?;
    out.flush().map_err(failure)?;

    for (index, conn) in listener.incoming().enumerate() {
        let result = conn.map_err(failure).and_then(|stream| {
            stream.set_read_timeout(Some(IO_TIMEOUT)).map_err(failure)?;
            let secret = alice_secret_from_seed(&pp, &connection_seed(&seed, index as u64));
            let mut session = AliceSession::new(&pp, secret);
            drive_alice(&mut session, &mut StreamChannel(stream)).map_err(failure)
        });
        match result {
            Ok(key) => {
                writeln!(out, "key digest: {}", key.digest).map_err(failure)?;
                out.flush().map_err(failure)?;
                if once {
                    return Ok(());
                }
            }
            Err(e) if once => return Err(e),
            Err(CliError::Usage(msg) | CliError::Failure(msg)) => {
                eprintln!("connection {index}: {msg}");
            }
        }
    }
    Ok(())
}

fn cmd_connect(params: &Path, host: &str, seed: &str, out: &mut dyn Write) -> CliResult {
    let seed = parse_seed("seed", seed)?;
    let pp = load_params(params)?;
    let stream = TcpStream::connect(host).map_err(|e| failure(format!("{host}: {e}")))?;
    stream.set_read_timeout(Some(IO_TIMEOUT)).map_err(failure)?;
    let mut session = BobSession::new(&pp, bob_secret_from_seed(&pp, &seed));
    let key = drive_bob(&mut session, &mut StreamChannel(stream)).map_err(failure)?;
    writeln!(out, "key digest: {}", key.digest).map_err(failure)?;
    Ok(())
}

fn check_attack_size(n: usize, force: bool) -> CliResult {
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    if n > EXPERIMENT_LIMIT && !force {
        return Err(CliError::Usage(format!(
            "--n {n} exceeds {EXPERIMENT_LIMIT}; pass --force to go up to {EXHAUSTIVE_LIMIT}"
        )));
    }
    Ok(())
}

fn cmd_attack_count(
    n: usize,
    trials: usize,
    csv_path: Option<&Path>,
    seed: &str,
    force: bool,
    out: &mut dyn Write,
) -> CliResult {
    check_attack_size(n, force)?;
    let seed = parse_seed("seed", seed)?;
    let limit = if force {
        EXHAUSTIVE_LIMIT
    } else {
        EXPERIMENT_LIMIT
    };
    let mut rng = SeededRng::new(&seed, "attack-count");
    let stats = count_experiment_with_limit(n, trials, &mut rng, limit)?;

    let mut csv_bytes = Vec::new();
    stats.write_csv(&mut csv_bytes).map_err(failure)?;
    match csv_path {
        Some(path) => write_atomic(path, &csv_bytes).map_err(failure)?,
        None => out.write_all(&csv_bytes).map_err(failure)?,
    }
    writeln!(
        out,
        "n={} p={:#x} trials={} mean={:.3} min={} max={} prediction={:.3}",
        stats.n, stats.p, trials, stats.mean, stats.min, stats.max, stats.prediction
    )
    .map_err(failure)?;
    Ok(())
}

fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn cmd_attack_recover(
    n: usize,
    r: Option<usize>,
    guess_true: bool,
    seed: &str,
    force: bool,
    out: &mut dyn Write,
) -> CliResult {
    check_attack_size(n, force)?;
    let r = r.unwrap_or(n);
    if !(2..=n).contains(&r) {
        return Err(CliError::Usage(format!("--r must be in 2..={n}, got {r}")));
    }
    let seed = parse_seed("seed", seed)?;
    let inst = HonestInstance::generate(n, &seed)?;
    let truth = GuessSet::true_prefix(inst.alice.permutation(), r);
    let guess = if guess_true {
        truth
    } else {
        random_wrong_guess(n, &truth, &mut SeededRng::new(&seed, "attack-guess"))
    };

    let w = |out: &mut dyn Write, line: String| writeln!(out, "{line}").map_err(failure);
    w(
        out,
        format!("n = {n}, p = {:#x}, r = {r}", inst.pp().modulus().p()),
    )?;
    w(out, format!("guess     = {:?}", guess.values()))?;
    w(
        out,
        format!("alice t   = {}", bits_to_string(inst.alice.bits())),
    )?;

    let candidates = full_attack(&inst.transcript, &guess)?;
    w(out, format!("candidates: {}", candidates.len()))?;
    for c in &candidates {
        w(
            out,
            format!(
                "  t = {} alpha = {} sigma = {:?} g = {}{}",
                bits_to_string(&c.t),
                c.alpha,
                c.sigma.image(),
                c.g,
                if c.unique { "" } else { " (ambiguous)" }
            ),
        )?;
    }
    let success = candidates.iter().any(|c| inst.matches(c));
    w(out, (if success { "SUCCESS" } else { "FAIL" }).to_string())?;
    Ok(())
}

fn cmd_bench(ns: &[usize], trials: usize, out: &mut dyn Write) -> CliResult {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let mut timings: Vec<(usize, f64)> = Vec::new();
    let mut rows = Vec::new();
    for &n in ns {
        if n < 2 {
            return Err(CliError::Usage(format!(
                "--n entries must be at least 2, got {n}"
            )));
        }
        let pp = gen_public_params(n, b"bench").map_err(failure)?;
        let alice_owf = CountingOwf::new(OwfId::Sha256V1);
        let bob_owf = CountingOwf::new(OwfId::Sha256V1);
        let mut alice_count = 0;
        let mut bob_max = 0;
        let start = Instant::now();
        for trial in 0..trials as u64 {
            let seed = trial.to_be_bytes();
            let mut alice =
                AliceSession::with_owf(&pp, alice_secret_from_seed(&pp, &seed), alice_owf.clone());
            let mut bob =
                BobSession::with_owf(&pp, bob_secret_from_seed(&pp, &seed), bob_owf.clone());
            alice_owf.reset();
            bob_owf.reset();
            let r1 = alice.round1().map_err(failure)?;
            let r2 = bob.round2(&r1).map_err(failure)?;
            let r3 = alice.round3(&r2).map_err(failure)?;
            alice_count = alice_owf.count();
            let (r4, _) = bob.round4(&r3).map_err(failure)?;
            bob_max = bob_max.max(bob_owf.count());
            alice.finalize(&r4).map_err(failure)?;
        }
        let expected = offset_bound(n) as u64 + 1;
        if alice_count != expected {
            return Err(failure(format!(
                "n={n}: alice made {alice_count} hash evaluations, expected {expected}"
            )));
        }
        let mean_ms = start.elapsed().as_secs_f64() * 1e3 / trials as f64;
        timings.push((n, mean_ms));
        rows.push((n, expected, alice_count, bob_max, mean_ms));
    }

    writeln!(out, "n,K+1,alice_h_evals,bob_h_evals_max,mean_ms,ratio_2n").map_err(failure)?;
    for (n, k1, a, b, ms) in rows {
        let ratio = timings
            .iter()
            .find(|(m, _)| *m == 2 * n)
            .map(|(_, t2)| format!("{:.3}", t2 / ms))
            .unwrap_or_else(|| "-".into());
        writeln!(out, "{n},{k1},{a},{b},{ms:.3},{ratio}").map_err(failure)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("kap").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn missing_flag_is_usage_error() {
        let (code, _, err) = run_cli(&["gen-params", "--seed", "01", "--out", "x.json"]);
        assert_eq!(code, 2);
        assert!(err.contains("--n"));
    }

    #[test]
    fn bad_seed_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let (code, _, _) = run_cli(&[
            "gen-params",
            "--n",
            "4",
            "--seed",
            "zz",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
        assert!(!path.exists());
    }

    #[test]
    fn attack_size_guard() {
        let (code, _, err) = run_cli(&["attack", "count", "--n", "21", "--trials", "1"]);
        assert_eq!(code, 2, "{err}");
        let (code, _, _) = run_cli(&["attack", "recover", "--n", "21"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_cli(&["attack", "count", "--n", "25", "--force", "--trials", "1"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_cli(&["attack", "recover", "--n", "8", "--r", "1"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn bench_counts() {
        let (code, out, err) = run_cli(&["bench", "--n", "4,8", "--trials", "2"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.lines().any(|l| l.starts_with("4,11,11,")), "{out}");
        assert!(out.lines().any(|l| l.starts_with("8,37,37,")), "{out}");
    }
}
