//! WebSocket game server.
//!
//! One simulation thread owns the [`Session`]. Every connection gets a reader
//! thread and a writer thread; they talk to the simulation only through
//! channels, so all game state changes happen in one place and in tick order.

use std::collections::HashMap;
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use showdown_core::agent::{to_client_input, Agent, Controller};
use showdown_core::config::{derive_seed, Mode, RunConfig};
use showdown_core::harness::{header, HarnessError};
use showdown_core::log::LogRecord;
use showdown_core::metrics::{stats_from_records, MatchStats};
use showdown_core::netcode::protocol::{Bye, EventMessage, Hello, Join, JoinStatus, PROTOCOL_VERSION};
use showdown_core::netcode::{decode, encode, InboundInput, Message, Session};
use showdown_core::physics::TICK_HZ;
use showdown_core::PlayerId;
use thiserror::Error;
use tungstenite::protocol::Role;
use tungstenite::WebSocket;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("mode {0} is not playable over the network")]
    Mode(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pacing {
    /// One tick every 1/60 s.
    #[default]
    Realtime,
    /// Advance as soon as every connected player has sent a fresh input.
    Lockstep,
}

pub struct ServerSummary {
    pub records: Vec<LogRecord>,
    pub stats: MatchStats,
    pub winner: PlayerId,
    pub ticks: u64,
}

type ConnId = u64;

enum Inbound {
    Connected(ConnId, Sender<Message>),
    Message(ConnId, Message),
    Closed(ConnId),
}

/// Bound server, ready to run one match.
pub struct Server {
    listener: TcpListener,
    cfg: RunConfig,
    pacing: Pacing,
}

impl Server {
    pub fn bind(addr: &str, cfg: RunConfig, pacing: Pacing) -> Result<Self, ServerError> {
        if cfg.run.mode == Mode::Bots {
            return Err(ServerError::Mode("bots"));
        }
        cfg.validate().map_err(HarnessError::from)?;
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            cfg,
            pacing,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until the match is over, then says goodbye to every client.
    pub fn run(self) -> Result<ServerSummary, ServerError> {
        let (tx, rx) = mpsc::channel();
        let stop = Arc::new(AtomicBool::new(false));
        let listener = self.listener.try_clone()?;
        let accept_stop = stop.clone();
        thread::spawn(move || accept_loop(listener, tx, accept_stop));
        let result = Simulation::new(&self.cfg, self.pacing)?.run(rx);
        stop.store(true, Ordering::SeqCst);
        // Wake the accept loop so it sees the stop flag.
        let _ = TcpStream::connect(self.listener.local_addr()?);
        result
    }
}

fn accept_loop(listener: TcpListener, tx: Sender<Inbound>, stop: Arc<AtomicBool>) {
    let mut next_id: ConnId = 0;
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            return;
        }
        let Ok(stream) = stream else { continue };
        next_id += 1;
        let id = next_id;
        let tx = tx.clone();
        thread::spawn(move || {
            if let Err(e) = connection(id, stream, tx.clone()) {
                eprintln!("connection {id}: {e}");
            }
            let _ = tx.send(Inbound::Closed(id));
        });
    }
}

fn connection(id: ConnId, stream: TcpStream, tx: Sender<Inbound>) -> Result<(), Box<dyn std::error::Error>> {
    stream.set_nodelay(true)?;
    let ws = tungstenite::accept(stream)?;
    // Split into independent reader and writer over clones of the socket.
    let sock = ws.into_inner();
    let mut reader = WebSocket::from_raw_socket(sock.try_clone()?, Role::Server, None);
    let mut writer = WebSocket::from_raw_socket(sock, Role::Server, None);
    let (out_tx, out_rx) = mpsc::channel::<Message>();
    tx.send(Inbound::Connected(id, out_tx))?;
    thread::spawn(move || {
        for msg in out_rx {
            let bye = matches!(msg, Message::Bye(_));
            let Ok(bytes) = encode(&msg) else { continue };
            let text = String::from_utf8(bytes).expect("JSON is UTF-8");
            if writer.send(tungstenite::Message::text(text)).is_err() {
                return;
            }
            if bye {
                let _ = writer.close(None);
                let _ = writer.flush();
                return;
            }
        }
    });
    loop {
        match reader.read() {
            Ok(tungstenite::Message::Text(t)) => match decode(t.as_bytes()) {
                Ok(msg) => tx.send(Inbound::Message(id, msg))?,
                Err(e) => eprintln!("connection {id}: dropped bad message: {e}"),
            },
            Ok(tungstenite::Message::Binary(b)) => match decode(&b) {
                Ok(msg) => tx.send(Inbound::Message(id, msg))?,
                Err(e) => eprintln!("connection {id}: dropped bad message: {e}"),
            },
            Ok(tungstenite::Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.into()),
        }
    }
}

struct Simulation {
    cfg: RunConfig,
    pacing: Pacing,
    session: Session,
    agent: Option<Agent>,
    records: Vec<LogRecord>,
    clients: HashMap<ConnId, Sender<Message>>,
    /// Connection holding each human slot.
    slots: [Option<ConnId>; 2],
    humans: [bool; 2],
    /// Inputs received since the last tick, per slot.
    fresh: [bool; 2],
    pending: Vec<InboundInput>,
    agent_seq: u32,
}

impl Simulation {
    fn new(cfg: &RunConfig, pacing: Pacing) -> Result<Self, ServerError> {
        let session = Session::new(cfg.session_config(true), derive_seed(cfg.run.seed, 0))
            .map_err(HarnessError::from)?;
        let agent = (cfg.run.mode == Mode::Pva).then(|| {
            Agent::new(
                PlayerId::B,
                cfg.agent.clone(),
                cfg.table,
                cfg.physics,
                derive_seed(cfg.run.seed, 2),
            )
        });
        Ok(Self {
            cfg: cfg.clone(),
            pacing,
            session,
            humans: [true, agent.is_none()],
            agent,
            records: vec![header(cfg)],
            clients: HashMap::new(),
            slots: [None, None],
            fresh: [false; 2],
            pending: Vec::new(),
            agent_seq: 0,
        })
    }

    fn hello(&self) -> Message {
        Message::Hello(Hello {
            protocol: PROTOCOL_VERSION,
            tick_hz: TICK_HZ,
            mode: self.cfg.run.mode.as_str().into(),
            table: self.cfg.table,
        })
    }

    fn send(&self, id: ConnId, msg: Message) {
        if let Some(tx) = self.clients.get(&id) {
            let _ = tx.send(msg);
        }
    }

    fn slot_of(&self, id: ConnId) -> Option<PlayerId> {
        PlayerId::BOTH.into_iter().find(|p| self.slots[p.index()] == Some(id))
    }

    fn join(&mut self, id: ConnId, join: Join) {
        if join.status != JoinStatus::Request {
            return;
        }
        if let Some(p) = self.slot_of(id) {
            return self.send(id, accepted(p));
        }
        let free = |p: PlayerId| self.humans[p.index()] && self.slots[p.index()].is_none();
        let choice = match join.player {
            Some(p) => free(p).then_some(p),
            None => PlayerId::BOTH.into_iter().find(|p| free(*p)),
        };
        match choice {
            Some(p) => {
                self.slots[p.index()] = Some(id);
                self.send(id, accepted(p));
            }
            None => self.send(
                id,
                Message::Join(Join {
                    status: JoinStatus::Rejected,
                    player: None,
                    reason: Some("no free player slot".into()),
                }),
            ),
        }
    }

    fn handle(&mut self, event: Inbound) {
        match event {
            Inbound::Connected(id, tx) => {
                self.clients.insert(id, tx);
                self.send(id, self.hello());
            }
            Inbound::Closed(id) => {
                self.clients.remove(&id);
                for s in &mut self.slots {
                    if *s == Some(id) {
                        *s = None;
                    }
                }
            }
            Inbound::Message(id, Message::Join(j)) => self.join(id, j),
            Inbound::Message(id, Message::Input(input)) => match self.slot_of(id) {
                Some(p) => {
                    self.fresh[p.index()] = true;
                    self.pending.push(InboundInput::new(p, input));
                }
                None => self.send(
                    id,
                    Message::Join(Join {
                        status: JoinStatus::Rejected,
                        player: None,
                        reason: Some("join before sending input".into()),
                    }),
                ),
            },
            Inbound::Message(id, Message::Bye(_)) => {
                self.send(id, Message::Bye(Bye { reason: "goodbye".into() }));
            }
            Inbound::Message(..) => {}
        }
    }

    fn all_seated(&self) -> bool {
        (0..2).all(|i| !self.humans[i] || self.slots[i].is_some())
    }

    fn ready(&self) -> bool {
        (0..2).all(|i| !self.humans[i] || self.slots[i].is_none() || self.fresh[i])
    }

    fn tick(&mut self) -> Result<(), ServerError> {
        let mut inputs = std::mem::take(&mut self.pending);
        if let Some(agent) = &mut self.agent {
            self.agent_seq += 1;
            let racket = agent.command();
            inputs.push(InboundInput::new(
                PlayerId::B,
                to_client_input(&racket, self.agent_seq, self.session.now()),
            ));
        }
        let out = self.session.tick(&inputs).map_err(HarnessError::from)?;
        self.fresh = [false; 2];
        let snapshots = out.snapshots.expect("snapshots enabled");
        for p in PlayerId::BOTH {
            if let Some(id) = self.slots[p.index()] {
                self.send(id, Message::Snapshot(snapshots[p.index()].clone()));
            }
        }
        if let Some(agent) = &mut self.agent {
            agent.observe(&snapshots[PlayerId::B.index()]);
        }
        for r in out.records.iter().filter(|r| r.event.is_shared()) {
            let msg = Message::Event(EventMessage {
                tick: r.tick,
                event: r.event.clone(),
            });
            for id in self.slots.iter().flatten() {
                self.send(*id, msg.clone());
            }
        }
        self.records.extend(out.records);
        Ok(())
    }

    fn run(mut self, rx: Receiver<Inbound>) -> Result<ServerSummary, ServerError> {
        let period = Duration::from_secs_f64(1.0 / f64::from(TICK_HZ));
        let lockstep_timeout = Duration::from_millis(500);
        let mut deadline = Instant::now();
        while !self.session.is_over() {
            if self.session.now() >= self.cfg.run.tick_limit {
                return Err(HarnessError::Timeout {
                    tick_limit: self.cfg.run.tick_limit,
                    partial: self.records,
                }
                .into());
            }
            if !self.all_seated() {
                // Nothing advances until every human slot is taken.
                match rx.recv() {
                    Ok(ev) => self.handle(ev),
                    Err(_) => return Err(io::Error::other("listener stopped").into()),
                }
                deadline = Instant::now();
                continue;
            }
            let wait_until = match self.pacing {
                Pacing::Realtime => deadline,
                Pacing::Lockstep => Instant::now() + lockstep_timeout,
            };
            loop {
                if self.pacing == Pacing::Lockstep && self.ready() {
                    while let Ok(ev) = rx.try_recv() {
                        self.handle(ev);
                    }
                    break;
                }
                let now = Instant::now();
                if now >= wait_until {
                    break;
                }
                match rx.recv_timeout(wait_until - now) {
                    Ok(ev) => self.handle(ev),
                    Err(RecvTimeoutError::Timeout) => break,
                    Err(RecvTimeoutError::Disconnected) => {
                        return Err(io::Error::other("listener stopped").into())
                    }
                }
            }
            if !self.all_seated() {
                continue;
            }
            self.tick()?;
            deadline += period;
        }
        let winner = self.session.match_state().finished.expect("match is over");
        for id in self.clients.keys() {
            self.send(*id, Message::Bye(Bye {
                reason: format!("match over, {winner} wins"),
            }));
        }
        // Give writers a moment to deliver the goodbye and clients to hang up.
        let grace = Instant::now() + Duration::from_secs(1);
        while !self.clients.is_empty() {
            let now = Instant::now();
            if now >= grace {
                break;
            }
            match rx.recv_timeout(grace - now) {
                Ok(Inbound::Closed(id)) => {
                    self.clients.remove(&id);
                }
                Ok(_) => {}
                Err(_) => break,
            }
        }
        let stats = stats_from_records(&self.records, self.cfg.metrics).map_err(HarnessError::from)?;
        Ok(ServerSummary {
            ticks: self.session.now(),
            records: self.records,
            stats,
            winner,
        })
    }
}

fn accepted(p: PlayerId) -> Message {
    Message::Join(Join {
        status: JoinStatus::Accepted,
        player: Some(p),
        reason: None,
    })
}
