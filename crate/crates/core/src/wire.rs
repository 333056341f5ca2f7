//! Byte formats: field elements, the four round messages, stream framing,
//! the JSON parameter file and the JSON Lines transcript.
//!
//! Field elements are big-endian, exactly `byte_width(p)` bytes. Message
//! payloads carry no internal length prefixes: every vector length follows
//! from the public parameters.
//!
//! | type | payload                                        |
//! |------|------------------------------------------------|
//! | 0x01 | `mu_1 .. mu_n`                                 |
//! | 0x02 | `nu_1 .. nu_n || tau_A`                        |
//! | 0x03 | `(K+1) * 32` digest bytes `|| tau_B`           |
//! | 0x04 | `k0` as 4-byte big-endian                      |
//!
//! A frame is `type (1 byte) || payload length (4 bytes BE) || payload`.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, Sender};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, Modulus};
use crate::owf::{Digest, OwfId, DIGEST_LEN};
use crate::params::PublicParams;
use crate::protocol::{Round1Msg, Round2Msg, Round3Msg, Round4Msg};
use crate::rng::RNG_TAG;

/// Frame header size: type byte plus 4-byte length.
pub const FRAME_HEADER_LEN: usize = 5;

/// Upper bound on a payload accepted from a stream.
pub const MAX_PAYLOAD_LEN: usize = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("length mismatch in {what}: expected {expected} bytes, got {actual}")]
    BadLength {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{what} is not a canonical field element")]
    NotCanonical { what: &'static str },
    #[error("{what} = {value} exceeds {bound}")]
    OutOfRange {
        what: &'static str,
        value: u64,
        bound: u64,
    },
    #[error("unknown message type {0:#04x}")]
    BadType(u8),
    #[error("expected message type {expected:#04x}, got {actual:#04x}")]
    UnexpectedType { expected: u8, actual: u8 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {path}: {reason}")]
    Validation { path: String, reason: String },
    #[error("transcript out of order at line {line}: expected round {expected}, found {found}")]
    Order {
        line: usize,
        expected: u8,
        found: u8,
    },
    #[error("peer closed the channel")]
    ChannelClosed,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for WireError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::UnexpectedEof
            | io::ErrorKind::ConnectionReset
            | io::ErrorKind::ConnectionAborted
            | io::ErrorKind::BrokenPipe => WireError::ChannelClosed,
            _ => WireError::Io(e.to_string()),
        }
    }
}

fn validation(path: impl Into<String>, reason: impl ToString) -> WireError {
    WireError::Validation {
        path: path.into(),
        reason: reason.to_string(),
    }
}

/// Big-endian, zero-padded to `m.byte_width()` bytes.
pub fn encode_field(x: &FieldElement, m: &Modulus) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.byte_width());
    encode_field_into(x, m, &mut out);
    out
}

fn encode_field_into(x: &FieldElement, m: &Modulus, out: &mut Vec<u8>) {
    let bytes = x.value().to_bytes_be();
    let bytes: &[u8] = if x.is_zero() { &[] } else { &bytes };
    out.resize(out.len() + m.byte_width() - bytes.len(), 0);
    out.extend_from_slice(bytes);
}

pub fn decode_field(b: &[u8], m: &Modulus) -> Result<FieldElement, WireError> {
    decode_field_named(b, m, "field element")
}

fn decode_field_named(
    b: &[u8],
    m: &Modulus,
    what: &'static str,
) -> Result<FieldElement, WireError> {
    if b.len() != m.byte_width() {
        return Err(WireError::BadLength {
            what,
            expected: m.byte_width(),
            actual: b.len(),
        });
    }
    m.element(BigUint::from_bytes_be(b))
        .map_err(|_| WireError::NotCanonical { what })
}

/// Message type tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Round1 = 0x01,
    Round2 = 0x02,
    Round3 = 0x03,
    Round4 = 0x04,
}

impl TryFrom<u8> for MsgType {
    type Error = WireError;

    fn try_from(b: u8) -> Result<Self, WireError> {
        match b {
            0x01 => Ok(MsgType::Round1),
            0x02 => Ok(MsgType::Round2),
            0x03 => Ok(MsgType::Round3),
            0x04 => Ok(MsgType::Round4),
            other => Err(WireError::BadType(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + self.payload.len());
        out.push(self.msg_type as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one complete frame; trailing bytes are a length error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < FRAME_HEADER_LEN {
            return Err(WireError::BadLength {
                what: "frame header",
                expected: FRAME_HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let msg_type = MsgType::try_from(bytes[0])?;
        let declared = u32::from_be_bytes(bytes[1..5].try_into().unwrap()) as usize;
        let payload = &bytes[FRAME_HEADER_LEN..];
        if payload.len() != declared {
            return Err(WireError::BadLength {
                what: "frame payload",
                expected: declared,
                actual: payload.len(),
            });
        }
        Ok(Frame {
            msg_type,
            payload: payload.to_vec(),
        })
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

/// Writes one frame and flushes.
pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<(), WireError> {
    w.write_all(&frame.to_bytes())?;
    w.flush()?;
    Ok(())
}

/// Reads exactly one frame from a byte stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Frame, WireError> {
    let mut header = [0u8; FRAME_HEADER_LEN];
    r.read_exact(&mut header)?;
    let msg_type = MsgType::try_from(header[0])?;
    let len = u32::from_be_bytes(header[1..].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD_LEN {
        return Err(WireError::OutOfRange {
            what: "frame payload length",
            value: len as u64,
            bound: MAX_PAYLOAD_LEN as u64,
        });
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Frame { msg_type, payload })
}

/// A round message with a fixed payload layout.
pub trait WireMessage: Sized {
    const TYPE: MsgType;
    fn encode_payload(&self, pp: &PublicParams) -> Vec<u8>;
    fn decode_payload(payload: &[u8], pp: &PublicParams) -> Result<Self, WireError>;
}

pub fn encode_msg<M: WireMessage>(msg: &M, pp: &PublicParams) -> Frame {
    Frame {
        msg_type: M::TYPE,
        payload: msg.encode_payload(pp),
    }
}

pub fn decode_msg<M: WireMessage>(frame: &Frame, pp: &PublicParams) -> Result<M, WireError> {
    if frame.msg_type != M::TYPE {
        return Err(WireError::UnexpectedType {
            expected: M::TYPE as u8,
            actual: frame.msg_type as u8,
        });
    }
    M::decode_payload(&frame.payload, pp)
}

fn expect_payload_len(
    what: &'static str,
    payload: &[u8],
    expected: usize,
) -> Result<(), WireError> {
    if payload.len() != expected {
        return Err(WireError::BadLength {
            what,
            expected,
            actual: payload.len(),
        });
    }
    Ok(())
}

fn decode_elements(
    bytes: &[u8],
    m: &Modulus,
    what: &'static str,
) -> Result<Vec<FieldElement>, WireError> {
    bytes
        .chunks_exact(m.byte_width())
        .map(|chunk| decode_field_named(chunk, m, what))
        .collect()
}

impl WireMessage for Round1Msg {
    const TYPE: MsgType = MsgType::Round1;

    fn encode_payload(&self, pp: &PublicParams) -> Vec<u8> {
        let m = pp.modulus();
        let mut out = Vec::with_capacity(self.mu.len() * m.byte_width());
        for x in &self.mu {
            encode_field_into(x, m, &mut out);
        }
        out
    }

    fn decode_payload(payload: &[u8], pp: &PublicParams) -> Result<Self, WireError> {
        let m = pp.modulus();
        expect_payload_len("round 1 payload", payload, pp.n() * m.byte_width())?;
        Ok(Round1Msg {
            mu: decode_elements(payload, m, "mu")?,
        })
    }
}

impl WireMessage for Round2Msg {
    const TYPE: MsgType = MsgType::Round2;

    fn encode_payload(&self, pp: &PublicParams) -> Vec<u8> {
        let m = pp.modulus();
        let mut out = Vec::with_capacity((self.nu.len() + 1) * m.byte_width());
        for x in &self.nu {
            encode_field_into(x, m, &mut out);
        }
        encode_field_into(&self.tau_a, m, &mut out);
        out
    }

    fn decode_payload(payload: &[u8], pp: &PublicParams) -> Result<Self, WireError> {
        let m = pp.modulus();
        let w = m.byte_width();
        expect_payload_len("round 2 payload", payload, (pp.n() + 1) * w)?;
        let (nu, tau_a) = payload.split_at(pp.n() * w);
        Ok(Round2Msg {
            nu: decode_elements(nu, m, "nu")?,
            tau_a: decode_field_named(tau_a, m, "tau_A")?,
        })
    }
}

impl WireMessage for Round3Msg {
    const TYPE: MsgType = MsgType::Round3;

    fn encode_payload(&self, pp: &PublicParams) -> Vec<u8> {
        let m = pp.modulus();
        let mut out = Vec::with_capacity(self.digests.len() * DIGEST_LEN + m.byte_width());
        for d in &self.digests {
            out.extend_from_slice(d.as_bytes());
        }
        encode_field_into(&self.tau_b, m, &mut out);
        out
    }

    fn decode_payload(payload: &[u8], pp: &PublicParams) -> Result<Self, WireError> {
        let m = pp.modulus();
        let list_len = (pp.offset_bound() + 1) * DIGEST_LEN;
        expect_payload_len("round 3 payload", payload, list_len + m.byte_width())?;
        let (list, tau_b) = payload.split_at(list_len);
        let digests = list
            .chunks_exact(DIGEST_LEN)
            .map(|c| Digest(c.try_into().unwrap()))
            .collect();
        Ok(Round3Msg {
            digests,
            tau_b: decode_field_named(tau_b, m, "tau_B")?,
        })
    }
}

impl WireMessage for Round4Msg {
    const TYPE: MsgType = MsgType::Round4;

    fn encode_payload(&self, _pp: &PublicParams) -> Vec<u8> {
        self.k0.to_be_bytes().to_vec()
    }

    fn decode_payload(payload: &[u8], pp: &PublicParams) -> Result<Self, WireError> {
        expect_payload_len("round 4 payload", payload, 4)?;
        let k0 = u32::from_be_bytes(payload.try_into().unwrap());
        let bound = pp.offset_bound() as u64;
        if k0 as u64 > bound {
            return Err(WireError::OutOfRange {
                what: "k0",
                value: k0 as u64,
                bound,
            });
        }
        Ok(Round4Msg { k0 })
    }
}

/// Any of the four messages, for decoding frames of unknown type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Round1(Round1Msg),
    Round2(Round2Msg),
    Round3(Round3Msg),
    Round4(Round4Msg),
}

impl Message {
    pub fn decode(frame: &Frame, pp: &PublicParams) -> Result<Self, WireError> {
        Ok(match frame.msg_type {
            MsgType::Round1 => Message::Round1(decode_msg(frame, pp)?),
            MsgType::Round2 => Message::Round2(decode_msg(frame, pp)?),
            MsgType::Round3 => Message::Round3(decode_msg(frame, pp)?),
            MsgType::Round4 => Message::Round4(decode_msg(frame, pp)?),
        })
    }

    pub fn encode(&self, pp: &PublicParams) -> Frame {
        match self {
            Message::Round1(m) => encode_msg(m, pp),
            Message::Round2(m) => encode_msg(m, pp),
            Message::Round3(m) => encode_msg(m, pp),
            Message::Round4(m) => encode_msg(m, pp),
        }
    }
}

/// An ordered, reliable frame transport between the two parties.
pub trait FrameChannel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), WireError>;
    fn recv_frame(&mut self) -> Result<Frame, WireError>;
}

/// One end of an in-memory channel pair.
#[derive(Debug)]
pub struct MemChannel {
    tx: Sender<Frame>,
    rx: Receiver<Frame>,
    tap: Option<Sender<Frame>>,
}

impl MemChannel {
    pub fn pair() -> (MemChannel, MemChannel) {
        let (a_tx, b_rx) = mpsc::channel();
        let (b_tx, a_rx) = mpsc::channel();
        (
            MemChannel {
                tx: a_tx,
                rx: a_rx,
                tap: None,
            },
            MemChannel {
                tx: b_tx,
                rx: b_rx,
                tap: None,
            },
        )
    }

    /// Copies every frame sent from this end to `tap`.
    pub fn tap(&mut self, tap: Sender<Frame>) {
        self.tap = Some(tap);
    }
}

impl FrameChannel for MemChannel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), WireError> {
        if let Some(tap) = &self.tap {
            let _ = tap.send(frame.clone());
        }
        self.tx
            .send(frame.clone())
            .map_err(|_| WireError::ChannelClosed)
    }

    fn recv_frame(&mut self) -> Result<Frame, WireError> {
        self.rx.recv().map_err(|_| WireError::ChannelClosed)
    }
}

/// Frames over any byte stream, e.g. a `TcpStream`.
#[derive(Debug)]
pub struct StreamChannel<S>(pub S);

impl<S: Read + Write> FrameChannel for StreamChannel<S> {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), WireError> {
        write_frame(&mut self.0, frame)
    }

    fn recv_frame(&mut self) -> Result<Frame, WireError> {
        read_frame(&mut self.0)
    }
}

/// The four frames of one run, in round order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    frames: Vec<Frame>,
}

/// A transcript decoded against its public parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedTranscript {
    pub round1: Round1Msg,
    pub round2: Round2Msg,
    pub round3: Round3Msg,
    pub round4: Round4Msg,
}

const ROUND_ORDER: [MsgType; 4] = [
    MsgType::Round1,
    MsgType::Round2,
    MsgType::Round3,
    MsgType::Round4,
];

#[derive(Serialize, Deserialize)]
struct TranscriptLine {
    round: u8,
    hex: String,
}

impl Transcript {
    /// Requires exactly one frame per round, in order.
    pub fn new(frames: Vec<Frame>) -> Result<Self, WireError> {
        for (idx, expected) in ROUND_ORDER.iter().enumerate() {
            match frames.get(idx) {
                Some(f) if f.msg_type == *expected => {}
                Some(f) => {
                    return Err(WireError::Order {
                        line: idx + 1,
                        expected: *expected as u8,
                        found: f.msg_type as u8,
                    })
                }
                None => {
                    return Err(WireError::Order {
                        line: idx + 1,
                        expected: *expected as u8,
                        found: 0,
                    })
                }
            }
        }
        if frames.len() != ROUND_ORDER.len() {
            return Err(WireError::Order {
                line: ROUND_ORDER.len() + 1,
                expected: 0,
                found: frames[ROUND_ORDER.len()].msg_type as u8,
            });
        }
        Ok(Transcript { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn decode(&self, pp: &PublicParams) -> Result<DecodedTranscript, WireError> {
        Ok(DecodedTranscript {
            round1: decode_msg(&self.frames[0], pp)?,
            round2: decode_msg(&self.frames[1], pp)?,
            round3: decode_msg(&self.frames[2], pp)?,
            round4: decode_msg(&self.frames[3], pp)?,
        })
    }

    /// One JSON object per line: `{"round": k, "hex": "<frame bytes>"}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.frames {
            let line = TranscriptLine {
                round: f.msg_type as u8,
                hex: f.to_hex(),
            };
            out.push_str(&serde_json::to_string(&line).expect("transcript line serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, WireError> {
        let mut frames = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let parsed: TranscriptLine = serde_json::from_str(&line)
                .map_err(|e| WireError::Parse(format!("line {lineno}: {e}")))?;
            let bytes = hex::decode(&parsed.hex)
                .map_err(|e| WireError::Parse(format!("line {lineno}: {e}")))?;
            let frame = Frame::from_bytes(&bytes)?;
            let expected = frames.len() as u8 + 1;
            if parsed.round != expected || frame.msg_type as u8 != expected {
                let found = if parsed.round != expected {
                    parsed.round
                } else {
                    frame.msg_type as u8
                };
                return Err(WireError::Order {
                    line: lineno,
                    expected,
                    found,
                });
            }
            frames.push(frame);
        }
        Transcript::new(frames)
    }
}

/// Writes `contents` next to `path` and renames into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), WireError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| WireError::from(e.error))?;
    Ok(())
}

pub fn transcript_write(t: &Transcript, path: &Path) -> Result<(), WireError> {
    write_atomic(path, t.to_jsonl().as_bytes())
}

pub fn transcript_read(path: &Path) -> Result<Transcript, WireError> {
    Transcript::from_jsonl(BufReader::new(fs::File::open(path)?))
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsFile {
    n: usize,
    p: String,
    owf: String,
    seed: String,
    rng: String,
    #[serde(rename = "C")]
    c: Vec<Vec<String>>,
}

fn parse_hex_uint(s: &str) -> Option<BigUint> {
    let digits = s.strip_prefix("0x").unwrap_or(s);
    if digits.is_empty() {
        return None;
    }
    BigUint::parse_bytes(digits.as_bytes(), 16)
}

pub fn params_to_json(pp: &PublicParams) -> String {
    let file = ParamsFile {
        n: pp.n(),
        p: format!("{:x}", pp.modulus().p()),
        owf: pp.owf().name().to_string(),
        seed: hex::encode(pp.seed()),
        rng: pp.rng_tag().to_string(),
        c: pp
            .matrix()
            .iter()
            .map(|row| row.iter().map(|x| format!("{:x}", x.value())).collect())
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("params serialize");
    s.push('\n');
    s
}

/// Parses and validates a parameter document. Validation errors name the
/// offending field, e.g. `C[0][0]`.
pub fn params_from_json(text: &str) -> Result<PublicParams, WireError> {
    let file: ParamsFile =
        serde_json::from_str(text).map_err(|e| WireError::Parse(e.to_string()))?;

    if file.n < 2 {
        return Err(validation("n", "must be at least 2"));
    }
    let p = parse_hex_uint(&file.p).ok_or_else(|| validation("p", "not a hex integer"))?;
    let modulus = Modulus::new(p).map_err(|e| validation("p", e))?;
    let owf: OwfId = file.owf.parse().map_err(|e| validation("owf", e))?;
    let seed = hex::decode(&file.seed).map_err(|e| validation("seed", e))?;
    if file.rng != RNG_TAG {
        return Err(validation(
            "rng",
            format!("unknown stream {:?}, expected {RNG_TAG:?}", file.rng),
        ));
    }
    if file.c.len() != file.n {
        return Err(validation(
            "C",
            format!("expected {} rows, found {}", file.n, file.c.len()),
        ));
    }
    let mut c = Vec::with_capacity(file.n);
    for (i, row) in file.c.iter().enumerate() {
        if row.len() != file.n {
            return Err(validation(
                format!("C[{i}]"),
                format!("expected {} entries, found {}", file.n, row.len()),
            ));
        }
        let parsed = row
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let path = format!("C[{i}][{j}]");
                let v = parse_hex_uint(s).ok_or_else(|| validation(&path, "not a hex integer"))?;
                modulus.element(v).map_err(|e| match e {
                    FieldError::NotCanonical { .. } => validation(&path, "entry is not below p"),
                    other => validation(&path, other),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        c.push(parsed);
    }
    PublicParams::new(modulus, c, owf, seed, file.rng).map_err(|e| validation("params", e))
}

pub fn params_to_file(pp: &PublicParams, path: &Path) -> Result<(), WireError> {
    write_atomic(path, params_to_json(pp).as_bytes())
}

pub fn params_from_file(path: &Path) -> Result<PublicParams, WireError> {
    params_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::gen_public_params;

    fn m(p: u64) -> Modulus {
        Modulus::new_u64(p).unwrap()
    }

    #[test]
    fn encode_field_examples() {
        let m257 = m(257);
        assert_eq!(encode_field(&m257.from_u64(5), &m257), vec![0x00, 0x05]);
        assert_eq!(encode_field(&m257.from_u64(256), &m257), vec![0x01, 0x00]);
        assert_eq!(encode_field(&m257.from_u64(0), &m257), vec![0x00, 0x00]);
        let m5 = m(5);
        assert_eq!(encode_field(&m5.from_u64(4), &m5), vec![0x04]);
    }

    #[test]
    fn decode_field_examples() {
        let m257 = m(257);
        assert_eq!(
            decode_field(&[0x00, 0x05], &m257).unwrap(),
            m257.from_u64(5)
        );
        assert_eq!(
            decode_field(&[0x01, 0x01], &m257),
            Err(WireError::NotCanonical {
                what: "field element"
            })
        );
        assert!(matches!(
            decode_field(&[0x05], &m257),
            Err(WireError::BadLength { .. })
        ));
    }

    #[test]
    fn round4_frame_layout() {
        let pp = gen_public_params(2, b"x").unwrap();
        let frame = encode_msg(&Round4Msg { k0: 0 }, &pp);
        assert_eq!(frame.to_bytes(), vec![0x04, 0, 0, 0, 4, 0, 0, 0, 0]);
    }

    #[test]
    fn round1_payload_layout() {
        let modulus = m(7);
        let c = vec![
            vec![modulus.from_u64(1), modulus.from_u64(2)],
            vec![modulus.from_u64(3), modulus.from_u64(4)],
        ];
        let pp = PublicParams::new(modulus, c, OwfId::Sha256V1, vec![1], RNG_TAG.into()).unwrap();
        let msg = Round1Msg {
            mu: vec![pp.modulus().from_u64(3), pp.modulus().from_u64(6)],
        };
        let frame = encode_msg(&msg, &pp);
        assert_eq!(frame.payload, vec![0x03, 0x06]);
        assert_eq!(frame.to_bytes(), vec![0x01, 0, 0, 0, 2, 0x03, 0x06]);
        assert_eq!(decode_msg::<Round1Msg>(&frame, &pp).unwrap(), msg);
    }

    #[test]
    fn decode_rejects_wrong_type() {
        let pp = gen_public_params(2, b"x").unwrap();
        let frame = encode_msg(&Round4Msg { k0: 1 }, &pp);
        assert_eq!(
            decode_msg::<Round1Msg>(&frame, &pp),
            Err(WireError::UnexpectedType {
                expected: 1,
                actual: 4
            })
        );
        assert_eq!(
            Frame::from_bytes(&[0x09, 0, 0, 0, 0]),
            Err(WireError::BadType(9))
        );
    }

    #[test]
    fn k0_beyond_bound_rejected() {
        let pp = gen_public_params(2, b"x").unwrap();
        let frame = encode_msg(&Round4Msg { k0: 4 }, &pp);
        assert!(matches!(
            decode_msg::<Round4Msg>(&frame, &pp),
            Err(WireError::OutOfRange { what: "k0", .. })
        ));
    }

    #[test]
    fn stream_framing_roundtrip_and_truncation() {
        let frame = Frame {
            msg_type: MsgType::Round2,
            payload: vec![1, 2, 3],
        };
        let mut buf = Vec::new();
        write_frame(&mut buf, &frame).unwrap();
        assert_eq!(read_frame(&mut buf.as_slice()).unwrap(), frame);
        assert_eq!(read_frame(&mut &buf[..6]), Err(WireError::ChannelClosed));
    }

    #[test]
    fn params_json_roundtrip() {
        let pp = gen_public_params(5, b"\xde\xad").unwrap();
        let text = params_to_json(&pp);
        assert_eq!(params_from_json(&text).unwrap(), pp);
    }

    fn tamper(
        pp: &PublicParams,
        f: impl FnOnce(&mut serde_json::Value),
    ) -> Result<PublicParams, WireError> {
        let mut v: serde_json::Value = serde_json::from_str(&params_to_json(pp)).unwrap();
        f(&mut v);
        params_from_json(&v.to_string())
    }

    #[test]
    fn params_validation_paths() {
        let pp = gen_public_params(4, b"v").unwrap();
        let err = tamper(&pp, |v| v["C"][0][0] = "b".into()).unwrap_err();
        assert!(
            matches!(err, WireError::Validation { ref path, .. } if path == "C[0][0]"),
            "{err}"
        );

        let err = tamper(&pp, |v| v["p"] = "f".into()).unwrap_err();
        assert!(matches!(err, WireError::Validation { ref path, .. } if path == "p"));

        let err = tamper(&pp, |v| v["owf"] = "md5".into()).unwrap_err();
        assert!(matches!(err, WireError::Validation { ref path, .. } if path == "owf"));

        let err = tamper(&pp, |v| {
            v["C"][2].as_array_mut().unwrap().pop();
        })
        .unwrap_err();
        assert!(matches!(err, WireError::Validation { ref path, .. } if path == "C[2]"));

        assert!(matches!(
            params_from_json("{not json"),
            Err(WireError::Parse(_))
        ));
    }

    #[test]
    fn external_prime_override_is_accepted() {
        let pp = gen_public_params(4, b"v").unwrap();
        // 13 is prime but not derive_modulus(4) = 11; all entries are < 11 < 13.
        let parsed = tamper(&pp, |v| v["p"] = "d".into()).unwrap();
        assert_eq!(parsed.modulus().p(), &BigUint::from(13u8));
    }
}
