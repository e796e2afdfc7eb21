//! Wire messages and their JSON codec.
//!
//! Every message is one JSON object whose first field is `"type"`. Over a
//! byte stream each object is terminated by `\n`; over a message transport
//! (WebSocket) each frame carries exactly one object.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::PlayerId;
use crate::log::{LogEvent, LogRecord};
use crate::rules::PhaseTag;
use crate::{BinauralFrame, TableGeometry, Vec2};

pub const PROTOCOL_VERSION: u32 = 1;

pub const MESSAGE_TYPES: [&str; 6] = ["hello", "join", "input", "snapshot", "event", "bye"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub protocol: u32,
    pub tick_hz: u32,
    pub mode: String,
    pub table: TableGeometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinStatus {
    Request,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Join {
    pub status: JoinStatus,
    /// Requested slot (client) or assigned slot (server). `None` asks for any.
    pub player: Option<PlayerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Racket state reported by a client, in the client's own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientInput {
    pub seq: u32,
    /// Latest snapshot tick the client had seen when sending.
    pub client_tick: u64,
    pub racket_tip: Vec2,
    pub face_normal: Vec2,
    pub tip_vel: Vec2,
    pub trigger_held: bool,
}

/// World state for one recipient, in that recipient's frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub player: PlayerId,
    pub ball_pos: Vec2,
    pub ball_vel: Vec2,
    pub ball_live: bool,
    /// Racket tips of A and B.
    pub rackets: [Vec2; 2],
    pub phase: PhaseTag,
    /// Points of A and B in the current game.
    pub scores: [u8; 2],
    pub games_won: [u8; 2],
    pub server: PlayerId,
    pub cues: BinauralFrame,
    pub events: Vec<LogRecord>,
}

impl Snapshot {
    /// The spatial content re-expressed in `player`'s frame.
    pub fn to_frame(&self, player: PlayerId) -> Snapshot {
        let f = |v| self.player.frame(player.frame(v));
        Snapshot {
            player,
            ball_pos: f(self.ball_pos),
            ball_vel: f(self.ball_vel),
            rackets: [f(self.rackets[0]), f(self.rackets[1])],
            events: self
                .events
                .iter()
                .map(|r| LogRecord {
                    tick: r.tick,
                    event: r.event.to_frame(self.player).to_frame(player),
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// A shared event (announcement, phase change, game or match end) relayed
/// identically to every client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMessage {
    pub tick: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bye {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello(Hello),
    Join(Join),
    Input(ClientInput),
    Snapshot(Snapshot),
    Event(EventMessage),
    Bye(Bye),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("truncated message: input ends at byte {offset}")]
    Truncated { offset: usize },
    #[error("message has no \"type\" field")]
    MissingType,
    #[error("unknown message type {0:?}")]
    UnknownType(String),
    #[error("invalid {kind} message: {message}")]
    Invalid { kind: String, message: String },
}

#[derive(Debug, Error)]
#[error("encoding failed: {0}")]
pub struct EncodeError(#[from] serde_json::Error);

/// The message as a single JSON object, without a trailing newline.
pub fn encode(msg: &Message) -> Result<Vec<u8>, EncodeError> {
    Ok(serde_json::to_vec(msg)?)
}

/// [`encode`] followed by the stream delimiter.
pub fn encode_line(msg: &Message) -> Result<Vec<u8>, EncodeError> {
    let mut bytes = encode(msg)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, chunk) in bytes.split(|b| *b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += chunk.len() + 1;
    }
    bytes.len()
}

/// Decodes one message. A single trailing newline is accepted.
pub fn decode(bytes: &[u8]) -> Result<Message, DecodeError> {
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let value: Value = serde_json::from_slice(body).map_err(|e| {
        let offset = byte_offset(body, e.line(), e.column());
        if e.is_eof() {
            DecodeError::Truncated { offset: body.len() }
        } else {
            DecodeError::Syntax {
                offset,
                message: e.to_string(),
            }
        }
    })?;
    let kind = match value.get("type") {
        Some(Value::String(s)) => s.clone(),
        Some(other) => {
            return Err(DecodeError::Invalid {
                kind: other.to_string(),
                message: "\"type\" must be a string".into(),
            })
        }
        None => return Err(DecodeError::MissingType),
    };
    if !MESSAGE_TYPES.contains(&kind.as_str()) {
        return Err(DecodeError::UnknownType(kind));
    }
    serde_json::from_value(value).map_err(|e| DecodeError::Invalid {
        kind,
        message: e.to_string(),
    })
}

/// Splits a byte stream into newline-delimited messages.
#[derive(Debug, Default)]
pub struct LineDecoder {
    buf: Vec<u8>,
    consumed: usize,
}

impl LineDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends bytes and returns every complete message they finish, in order.
    /// A bad message yields an error in its slot; later messages still decode.
    pub fn push(&mut self, bytes: &[u8]) -> Vec<Result<Message, DecodeError>> {
        self.buf.extend_from_slice(bytes);
        let mut out = Vec::new();
        while let Some(pos) = self.buf.iter().position(|b| *b == b'\n') {
            let line: Vec<u8> = self.buf.drain(..=pos).collect();
            let base = self.consumed;
            self.consumed += line.len();
            if line.len() == 1 {
                continue;
            }
            out.push(decode(&line).map_err(|e| shift(e, base)));
        }
        out
    }

    /// Bytes received but not yet terminated by a newline.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    /// Ends the stream; an unterminated tail is reported as truncated.
    pub fn finish(self) -> Result<(), DecodeError> {
        if self.buf.iter().all(u8::is_ascii_whitespace) {
            Ok(())
        } else {
            Err(DecodeError::Truncated {
                offset: self.consumed + self.buf.len(),
            })
        }
    }
}

fn shift(e: DecodeError, base: usize) -> DecodeError {
    match e {
        DecodeError::Syntax { offset, message } => DecodeError::Syntax {
            offset: offset + base,
            message,
        },
        DecodeError::Truncated { offset } => DecodeError::Truncated {
            offset: offset + base,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::SourceKind;

    fn input() -> Message {
        Message::Input(ClientInput {
            seq: 3,
            client_tick: 99,
            racket_tip: Vec2::new(0.1, -1.6),
            face_normal: Vec2::new(0.0, 1.0),
            tip_vel: Vec2::new(0.0, 2.5),
            trigger_held: false,
        })
    }

    #[test]
    fn type_field_comes_first() {
        let text = String::from_utf8(encode(&input()).unwrap()).unwrap();
        assert!(text.starts_with(r#"{"type":"input","seq":3,"client_tick":99,"#), "{text}");
        assert_eq!(decode(text.as_bytes()).unwrap(), input());
    }

    #[test]
    fn unknown_type_is_typed_error() {
        assert_eq!(
            decode(br#"{"type":"teleport","x":1}"#),
            Err(DecodeError::UnknownType("teleport".into()))
        );
        assert_eq!(decode(br#"{"seq":1}"#), Err(DecodeError::MissingType));
    }

    #[test]
    fn truncated_frame_reports_offset() {
        let bytes = encode(&input()).unwrap();
        let cut = &bytes[..20];
        assert_eq!(decode(cut), Err(DecodeError::Truncated { offset: 20 }));
    }

    #[test]
    fn syntax_error_offset_points_at_fault() {
        let bad = br#"{"type":"bye","reason":x}"#;
        match decode(bad) {
            Err(DecodeError::Syntax { offset, .. }) => assert_eq!(bad[offset], b'x'),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn line_decoder_survives_bad_lines() {
        let mut d = LineDecoder::new();
        let mut stream = encode_line(&input()).unwrap();
        stream.extend_from_slice(b"{\"type\":\"warp\"}\n");
        stream.extend_from_slice(&encode_line(&Message::Bye(Bye { reason: "done".into() })).unwrap());
        let (a, b) = stream.split_at(7);
        let mut out = d.push(a);
        assert!(out.is_empty());
        out.extend(d.push(b));
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], Ok(input()));
        assert_eq!(out[1], Err(DecodeError::UnknownType("warp".into())));
        assert!(matches!(out[2], Ok(Message::Bye(_))));
        assert!(d.finish().is_ok());
    }

    #[test]
    fn line_decoder_reports_unterminated_tail() {
        let mut d = LineDecoder::new();
        let line = encode_line(&input()).unwrap();
        d.push(&line);
        d.push(b"{\"type\":");
        assert_eq!(
            d.finish(),
            Err(DecodeError::Truncated {
                offset: line.len() + 8
            })
        );
    }

    #[test]
    fn snapshot_reframing_is_involutive() {
        let s = Snapshot {
            tick: 5,
            player: PlayerId::A,
            ball_pos: Vec2::new(0.3, 1.0),
            ball_vel: Vec2::new(-1.0, 2.0),
            ball_live: true,
            rackets: [Vec2::new(0.0, -1.68), Vec2::new(0.2, 1.68)],
            phase: PhaseTag::Rally,
            scores: [2, 0],
            games_won: [0, 0],
            server: PlayerId::A,
            cues: BinauralFrame::common(SourceKind::Rolling).with_gain(0.0),
            events: vec![],
        };
        let b = s.to_frame(PlayerId::B);
        assert_eq!(b.ball_pos, Vec2::new(-0.3, -1.0));
        assert_eq!(b.to_frame(PlayerId::A), s);
    }
}
