//! Server loop, wire protocol and link simulation.

pub mod link;
pub mod protocol;
pub mod session;

pub use link::{link_deliver, LinkModel, LinkSim};
pub use protocol::{decode, encode, encode_line, ClientInput, DecodeError, Message, Snapshot};
pub use session::{InboundInput, Session, SessionConfig, SessionError, TickOutput};
