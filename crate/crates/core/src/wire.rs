//! Binary frames and TCP runners.
//!
//! Frame: `"MVP1"`, a type byte, the payload length as u32 LE, the payload.
//! Query payload: server index (u16 LE), k (u32 LE), k elements.
//! Answer payload: server index (u16 LE), vector length (u32 LE), elements
//! in graded-lex order. Error payload: UTF-8 text.

use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{debug, warn};
use rand::Rng;

use crate::algebra::HasseVector;
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::pir::{
    client_query, client_reconstruct, Answer, Database, PirParams, PirServer, Query, Transcript,
};

pub const MAGIC: [u8; 4] = *b"MVP1";
pub const HEADER_LEN: usize = 9;
/// Server index and count fields at the start of query and answer payloads.
pub const PAYLOAD_HEADER_LEN: usize = 6;
/// Bytes per message beyond the encoded field elements.
pub const MESSAGE_OVERHEAD: usize = HEADER_LEN + PAYLOAD_HEADER_LEN;
pub const MAX_PAYLOAD: usize = 1 << 20;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    Query = 1,
    Answer = 2,
    Error = 3,
}

impl TryFrom<u8> for MessageType {
    type Error = crate::error::Error;

    fn try_from(b: u8) -> Result<Self> {
        match b {
            1 => Ok(MessageType::Query),
            2 => Ok(MessageType::Answer),
            3 => Ok(MessageType::Error),
            other => Err(Error::Protocol(format!(
                "unknown message type {other:#04x}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: MessageType,
    pub payload: Vec<u8>,
}

/// Parsed frame header: type byte (unchecked) and payload length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub kind: u8,
    pub len: usize,
}

impl Header {
    /// Fails on bad magic or an oversized payload; both end a connection.
    pub fn parse(bytes: &[u8; HEADER_LEN]) -> Result<Self> {
        if bytes[..4] != MAGIC {
            return Err(Error::Protocol("bad magic".into()));
        }
        let len = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
        if len > MAX_PAYLOAD {
            return Err(Error::Protocol(format!(
                "payload of {len} bytes exceeds {MAX_PAYLOAD}"
            )));
        }
        Ok(Header {
            kind: bytes[4],
            len,
        })
    }
}

impl Frame {
    pub fn new(kind: MessageType, payload: Vec<u8>) -> Self {
        Frame { kind, payload }
    }

    pub fn error(message: &str) -> Self {
        Frame::new(MessageType::Error, message.as_bytes().to_vec())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(self.kind as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decodes exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let head: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| Error::Protocol(format!("truncated header ({} bytes)", bytes.len())))?;
        let header = Header::parse(head)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != header.len {
            return Err(Error::Protocol(format!(
                "header announces {} payload bytes, found {}",
                header.len,
                payload.len()
            )));
        }
        Ok(Frame {
            kind: MessageType::try_from(header.kind)?,
            payload: payload.to_vec(),
        })
    }

    /// Message text of an error frame.
    pub fn error_text(&self) -> Option<String> {
        (self.kind == MessageType::Error)
            .then(|| String::from_utf8_lossy(&self.payload).into_owned())
    }
}

/// Reads one frame. `Ok(None)` on a clean end of stream before any header
/// byte.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Option<Frame>> {
    let mut head = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match reader.read(&mut head[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("connection closed inside a header".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let header = Header::parse(&head)?;
    let mut payload = vec![0u8; header.len];
    reader.read_exact(&mut payload)?;
    Ok(Some(Frame {
        kind: MessageType::try_from(header.kind)?,
        payload,
    }))
}

fn payload_with_prefix(field: &Field, server: usize, elements: &[FieldElement]) -> Vec<u8> {
    let width = field.element_width();
    let mut out = Vec::with_capacity(PAYLOAD_HEADER_LEN + width * elements.len());
    out.extend_from_slice(&(server as u16).to_le_bytes());
    out.extend_from_slice(&(elements.len() as u32).to_le_bytes());
    for &a in elements {
        field.encode_into(a, &mut out);
    }
    out
}

fn split_payload(field: &Field, payload: &[u8]) -> Result<(usize, Vec<FieldElement>)> {
    if payload.len() < PAYLOAD_HEADER_LEN {
        return Err(Error::Protocol(format!(
            "payload of {} bytes is shorter than its header",
            payload.len()
        )));
    }
    let server = u16::from_le_bytes([payload[0], payload[1]]) as usize;
    let count = u32::from_le_bytes(payload[2..6].try_into().expect("4 bytes")) as usize;
    let width = field.element_width();
    let body = &payload[PAYLOAD_HEADER_LEN..];
    if count.checked_mul(width) != Some(body.len()) {
        return Err(Error::Protocol(format!(
            "{count} elements of {width} bytes announced, {} bytes present",
            body.len()
        )));
    }
    let elements = body
        .chunks_exact(width)
        .map(|c| field.decode(c))
        .collect::<Result<Vec<_>>>()?;
    Ok((server, elements))
}

pub fn query_payload(field: &Field, query: &Query) -> Vec<u8> {
    payload_with_prefix(field, query.server, &query.point)
}

pub fn encode_query(field: &Field, query: &Query) -> Vec<u8> {
    Frame::new(MessageType::Query, query_payload(field, query)).encode()
}

pub fn decode_query(field: &Field, payload: &[u8]) -> Result<Query> {
    let (server, point) = split_payload(field, payload)?;
    Ok(Query { server, point })
}

pub fn decode_query_frame(field: &Field, bytes: &[u8]) -> Result<Query> {
    let frame = expect_kind(Frame::decode(bytes)?, MessageType::Query)?;
    decode_query(field, &frame.payload)
}

pub fn answer_payload(field: &Field, answer: &Answer) -> Vec<u8> {
    payload_with_prefix(field, answer.server, &answer.values.values)
}

pub fn encode_answer(field: &Field, answer: &Answer) -> Vec<u8> {
    Frame::new(MessageType::Answer, answer_payload(field, answer)).encode()
}

/// Decodes an answer payload; the vector length must be `C(k + e - 1, e - 1)`.
pub fn decode_answer(params: &PirParams, payload: &[u8]) -> Result<Answer> {
    let (server, values) = split_payload(params.field(), payload)?;
    if values.len() != params.answer_len() {
        return Err(Error::Protocol(format!(
            "answer carries {} elements, expected {}",
            values.len(),
            params.answer_len()
        )));
    }
    Ok(Answer {
        server,
        values: HasseVector::new(params.k(), params.multiplicity(), values)?,
    })
}

pub fn decode_answer_frame(params: &PirParams, bytes: &[u8]) -> Result<Answer> {
    let frame = expect_kind(Frame::decode(bytes)?, MessageType::Answer)?;
    decode_answer(params, &frame.payload)
}

fn expect_kind(frame: Frame, kind: MessageType) -> Result<Frame> {
    if let Some(text) = frame.error_text() {
        return Err(Error::Protocol(format!("peer reported: {text}")));
    }
    if frame.kind != kind {
        return Err(Error::Protocol(format!(
            "expected a {kind:?} frame, got {:?}",
            frame.kind
        )));
    }
    Ok(frame)
}

/// What one server process needs to answer queries.
#[derive(Clone, Debug)]
pub struct ServerState {
    field: Field,
    server: PirServer,
    /// When set, queries addressed to another server index are refused.
    index: Option<usize>,
}

impl ServerState {
    pub fn new(params: &PirParams, db: &Database, index: Option<usize>) -> Result<Self> {
        if let Some(i) = index.filter(|&i| i >= params.t()) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: params.t(),
            });
        }
        Ok(ServerState {
            field: params.field().clone(),
            server: PirServer::new(params, db)?,
            index,
        })
    }

    /// The reply to one incoming frame.
    pub fn respond(&self, frame: &Frame) -> Frame {
        match self.try_respond(frame) {
            Ok(f) => f,
            Err(e) => Frame::error(&e.to_string()),
        }
    }

    fn try_respond(&self, frame: &Frame) -> Result<Frame> {
        if frame.kind != MessageType::Query {
            return Err(Error::Protocol(format!(
                "servers accept only queries, got {:?}",
                frame.kind
            )));
        }
        let query = decode_query(&self.field, &frame.payload)?;
        if let Some(i) = self.index.filter(|&i| i != query.server) {
            return Err(Error::Protocol(format!(
                "query for server {} sent to server {i}",
                query.server
            )));
        }
        let answer = self.server.answer(&query)?;
        Ok(Frame::new(
            MessageType::Answer,
            answer_payload(&self.field, &answer),
        ))
    }

    /// Handles raw bytes as a connection would: returns the reply frames and
    /// whether the connection stays open.
    pub fn handle_bytes(&self, bytes: &[u8]) -> (Vec<u8>, bool) {
        let mut reader = bytes;
        let mut out = Vec::new();
        loop {
            match read_frame_tolerant(&mut reader) {
                Ok(None) => return (out, true),
                Ok(Some(Incoming::Frame(frame))) => out.extend(self.respond(&frame).encode()),
                Ok(Some(Incoming::UnknownType(kind))) => {
                    out.extend(Frame::error(&format!("unknown message type {kind:#04x}")).encode())
                }
                Err(e) => {
                    out.extend(Frame::error(&e.to_string()).encode());
                    return (out, false);
                }
            }
        }
    }
}

enum Incoming {
    Frame(Frame),
    UnknownType(u8),
}

// Like `read_frame`, but an unknown type byte consumes its payload and is
// reported rather than failing, so the stream stays in sync.
fn read_frame_tolerant<R: Read>(reader: &mut R) -> Result<Option<Incoming>> {
    let mut head = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match reader.read(&mut head[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("connection closed inside a header".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let header = Header::parse(&head)?;
    let mut payload = vec![0u8; header.len];
    reader
        .read_exact(&mut payload)
        .map_err(|_| Error::Protocol("connection closed inside a payload".into()))?;
    Ok(Some(match MessageType::try_from(header.kind) {
        Ok(kind) => Incoming::Frame(Frame { kind, payload }),
        Err(_) => Incoming::UnknownType(header.kind),
    }))
}

fn handle_connection(state: &ServerState, mut stream: TcpStream, timeout: Duration) {
    let peer = stream
        .peer_addr()
        .map(|a| a.to_string())
        .unwrap_or_else(|_| "?".into());
    if let Err(e) = stream
        .set_read_timeout(Some(timeout))
        .and_then(|_| stream.set_write_timeout(Some(timeout)))
    {
        warn!("{peer}: cannot set timeouts: {e}");
        return;
    }
    loop {
        let reply = match read_frame_tolerant(&mut stream) {
            Ok(None) => break,
            Ok(Some(Incoming::Frame(frame))) => (state.respond(&frame), true),
            Ok(Some(Incoming::UnknownType(kind))) => (
                Frame::error(&format!("unknown message type {kind:#04x}")),
                true,
            ),
            Err(Error::Io(e)) => {
                debug!("{peer}: {e}");
                break;
            }
            Err(e) => (Frame::error(&e.to_string()), false),
        };
        if let Err(e) = stream.write_all(&reply.0.encode()) {
            debug!("{peer}: write failed: {e}");
            break;
        }
        if !reply.1 {
            break;
        }
    }
    let _ = stream.shutdown(Shutdown::Both);
}

/// A server running on background threads.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for the accept loop to end.
    pub fn shutdown(mut self) {
        self.stop_inner();
    }

    fn stop_inner(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_millis(500));
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_inner();
        }
    }
}

fn accept_loop(
    listener: TcpListener,
    state: Arc<ServerState>,
    stop: Arc<AtomicBool>,
    timeout: Duration,
) {
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        match conn {
            Ok(stream) => {
                let state = Arc::clone(&state);
                thread::spawn(move || handle_connection(&state, stream, timeout));
            }
            Err(e) => warn!("accept failed: {e}"),
        }
    }
}

/// Binds `addr` and serves on background threads.
pub fn spawn_server(state: ServerState, addr: impl ToSocketAddrs) -> Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let state = Arc::new(state);
    let thread = {
        let stop = Arc::clone(&stop);
        thread::spawn(move || accept_loop(listener, state, stop, DEFAULT_TIMEOUT))
    };
    debug!("serving on {addr}");
    Ok(ServerHandle {
        addr,
        stop,
        thread: Some(thread),
    })
}

/// Serves on the current thread until the process ends.
pub fn serve(state: ServerState, listener: TcpListener) -> Result<()> {
    accept_loop(
        listener,
        Arc::new(state),
        Arc::new(AtomicBool::new(false)),
        DEFAULT_TIMEOUT,
    );
    Ok(())
}

/// Sends one frame and reads one reply.
pub fn exchange(addr: &str, request: &[u8], timeout: Duration) -> Result<Vec<u8>> {
    let target = addr
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| Error::InvalidArgument(format!("cannot resolve {addr}")))?;
    let mut stream = TcpStream::connect_timeout(&target, timeout)?;
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.write_all(request)?;
    let frame = read_frame(&mut stream)?
        .ok_or_else(|| Error::Protocol("connection closed without a reply".into()))?;
    Ok(frame.encode())
}

/// Retrieves record `index` from t servers at `addrs` (server i at
/// `addrs[i]`), querying them concurrently.
pub fn remote_query<R: Rng + ?Sized>(
    params: &PirParams,
    addrs: &[String],
    index: usize,
    rng: &mut R,
) -> Result<(FieldElement, Transcript)> {
    remote_query_with_timeout(params, addrs, index, rng, DEFAULT_TIMEOUT)
}

pub fn remote_query_with_timeout<R: Rng + ?Sized>(
    params: &PirParams,
    addrs: &[String],
    index: usize,
    rng: &mut R,
    timeout: Duration,
) -> Result<(FieldElement, Transcript)> {
    if addrs.len() != params.t() {
        return Err(Error::InvalidArgument(format!(
            "{} server addresses for {} servers",
            addrs.len(),
            params.t()
        )));
    }
    let field = params.field();
    let (ctx, queries) = client_query(params, index, rng)?;
    let requests: Vec<Vec<u8>> = queries.iter().map(|q| encode_query(field, q)).collect();
    let replies: Vec<Result<Vec<u8>>> = thread::scope(|s| {
        let handles: Vec<_> = addrs
            .iter()
            .zip(&requests)
            .map(|(addr, req)| s.spawn(move || exchange(addr, req, timeout)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Protocol("request thread panicked".into())))
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut answers = Vec::with_capacity(queries.len());
    let mut transcript = Transcript::default();
    for (i, reply) in replies.into_iter().enumerate() {
        let decoded = reply.and_then(|bytes| {
            let answer = decode_answer_frame(params, &bytes)?;
            Ok((answer, bytes.len()))
        });
        match decoded {
            Ok((answer, len)) => {
                transcript.record(field, &queries[i], &answer, requests[i].len(), len);
                answers.push(answer);
            }
            Err(e) => failures.push((i, e)),
        }
    }
    if let Some((index, first)) = failures.first() {
        let mut reason = first.to_string();
        if failures.len() > 1 {
            let others: Vec<String> = failures[1..]
                .iter()
                .map(|(i, e)| format!("server {i} ({}): {e}", addrs[*i]))
                .collect();
            reason.push_str(&format!("; also {}", others.join("; ")));
        }
        return Err(Error::Server {
            index: *index,
            addr: addrs[*index].clone(),
            reason,
        });
    }
    let value = client_reconstruct(params, &ctx, &answers)?;
    Ok((value, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::DecodingPoly;
    use crate::field::primitive_root_of_unity;
    use crate::mvf::MvFamily;
    use crate::pir::{rng_from_seed, DecoderSource, MvfSource};

    fn toy() -> PirParams {
        let f = Field::gf4();
        let h = primitive_root_of_unity(&f, 3).unwrap();
        let g = h.gamma();
        let decoder = DecodingPoly::new(3, &f, vec![(0, f.mul(g, g)), (1, g)]).unwrap();
        let family = MvFamily::new(
            6,
            2,
            vec![0, 1, 3, 4],
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![0, 1], vec![1, 0]],
        )
        .unwrap();
        PirParams::build(
            &f,
            3,
            2,
            MvfSource::Family(family),
            DecoderSource::Poly(decoder),
        )
        .unwrap()
    }

    #[test]
    fn query_frame_layout() {
        let f = Field::gf4();
        let g = f.from_coeffs(&[0, 1]).unwrap();
        let q = Query {
            server: 1,
            point: vec![g, f.one()],
        };
        let bytes = encode_query(&f, &q);
        assert_eq!(
            bytes,
            vec![b'M', b'V', b'P', b'1', 1, 8, 0, 0, 0, 1, 0, 2, 0, 0, 0, 2, 1]
        );
        assert_eq!(decode_query_frame(&f, &bytes).unwrap(), q);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_query_frame(&f, &bad).is_err());
        assert!(decode_query_frame(&f, &bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn answer_length_is_checked() {
        let params = toy();
        let f = params.field().clone();
        let g = params.roots().gamma();
        let answer = Answer {
            server: 1,
            values: HasseVector::new(2, 2, vec![f.zero(), f.one(), g]).unwrap(),
        };
        let bytes = encode_answer(&f, &answer);
        assert_eq!(bytes.len(), MESSAGE_OVERHEAD + 3);
        assert_eq!(decode_answer_frame(&params, &bytes).unwrap(), answer);

        let short = Frame::new(MessageType::Answer, payload_with_prefix(&f, 1, &[f.one()]));
        assert!(decode_answer_frame(&params, &short.encode()).is_err());
    }

    #[test]
    fn unknown_type_keeps_connection() {
        let params = toy();
        let f = params.field().clone();
        let db = Database::new(&f, vec![f.one(), f.zero()]).unwrap();
        let state = ServerState::new(&params, &db, None).unwrap();
        let mut input = Frame {
            kind: MessageType::Error,
            payload: vec![],
        }
        .encode();
        input[4] = 9;
        let q = Query {
            server: 0,
            point: vec![f.one(), f.one()],
        };
        input.extend(encode_query(&f, &q));
        let (out, open) = state.handle_bytes(&input);
        assert!(open);
        let first = read_frame(&mut &out[..]).unwrap().unwrap();
        assert_eq!(first.kind, MessageType::Error);
        let second = Frame::decode(&out[HEADER_LEN + first.payload.len()..]).unwrap();
        assert_eq!(second.kind, MessageType::Answer);
    }

    #[test]
    fn loopback_matches_in_process() {
        let params = toy();
        let f = params.field().clone();
        let db = Database::new(&f, vec![f.one(), params.roots().gamma()]).unwrap();
        let handles: Vec<_> = (0..2)
            .map(|i| {
                spawn_server(
                    ServerState::new(&params, &db, Some(i)).unwrap(),
                    "127.0.0.1:0",
                )
                .unwrap()
            })
            .collect();
        let addrs: Vec<String> = handles.iter().map(|h| h.addr().to_string()).collect();
        for index in 0..2 {
            let (remote, rt) =
                remote_query(&params, &addrs, index, &mut rng_from_seed(Some(5))).unwrap();
            let (local, lt) =
                crate::pir::run_protocol(&params, &db, index, &mut rng_from_seed(Some(5))).unwrap();
            assert_eq!(remote, local);
            assert_eq!(rt, lt);
        }
        let swapped = vec![addrs[1].clone(), addrs[0].clone()];
        let err = remote_query(&params, &swapped, 0, &mut rng_from_seed(Some(1))).unwrap_err();
        assert!(matches!(err, Error::Server { index: 0, .. }), "{err}");
        for h in handles {
            h.shutdown();
        }
    }
}
