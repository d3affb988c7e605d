//! One hosted space: the single ordering point for its edits.

use std::collections::BTreeMap;

use serde_json::Value;
use slowspace_core::canonical::{parse, Canon, StrictObj};
use slowspace_core::model::quantize4;
use slowspace_core::protocol::{apply, EditOp, Envelope};
use slowspace_core::{Cell, DecodeError, GridSpec, Space, WorldPoint};
use thiserror::Error;

/// How presence turns into wear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResiduePolicy {
    /// Wear added per second of presence.
    pub wear_rate: f64,
    pub cap: f64,
}

impl Default for ResiduePolicy {
    fn default() -> Self {
        ResiduePolicy {
            wear_rate: 0.001,
            cap: 1.0,
        }
    }
}

impl ResiduePolicy {
    pub fn new(wear_rate: f64) -> Result<Self, String> {
        if !(wear_rate.is_finite() && wear_rate > 0.0) {
            return Err(format!("wear rate must be positive, got {wear_rate}"));
        }
        Ok(ResiduePolicy {
            wear_rate,
            ..ResiduePolicy::default()
        })
    }
}

/// One applied op in the authoritative order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogEntry {
    pub seq: u64,
    pub origin: u64,
    pub op: EditOp,
}

impl LogEntry {
    pub fn to_json(&self) -> Vec<u8> {
        Canon::obj([
            ("seq", Canon::UInt(self.seq)),
            ("origin", Canon::UInt(self.origin)),
            ("op", self.op.to_canon()),
        ])
        .to_bytes()
    }

    pub fn from_json(bytes: &[u8]) -> Result<LogEntry, DecodeError> {
        let mut o = StrictObj::new("log entry", parse(bytes)?)?;
        let entry = LogEntry {
            seq: o.u64("seq")?,
            origin: o.u64("origin")?,
            op: EditOp::from_value(o.take("op")?)?,
        };
        o.finish()?;
        Ok(entry)
    }
}

/// Serializes a log as JSON Lines.
pub fn encode_log(log: &[LogEntry]) -> String {
    let mut out = String::new();
    for e in log {
        out.push_str(std::str::from_utf8(&e.to_json()).expect("canonical json is utf-8"));
        out.push('\n');
    }
    out
}

pub fn decode_log(text: &str) -> Result<Vec<LogEntry>, DecodeError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| LogEntry::from_json(l.as_bytes()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("replay failed at seq {seq}: {reason}")]
pub struct ReplayError {
    pub seq: u64,
    pub reason: String,
}

/// Folds `log` over `creation`. The log must continue `creation.op_seq`
/// without gaps and every entry must apply.
pub fn replay_log(creation: &Space, log: &[LogEntry]) -> Result<Space, ReplayError> {
    let mut space = creation.clone();
    for entry in log {
        let expected = space.op_seq + 1;
        if entry.seq != expected {
            return Err(ReplayError {
                seq: entry.seq,
                reason: format!("expected seq {expected}"),
            });
        }
        apply(&mut space, &entry.op).map_err(|e| ReplayError {
            seq: entry.seq,
            reason: e.name().to_owned(),
        })?;
        space.op_seq = entry.seq;
    }
    Ok(space)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipient {
    All,
    Client(u64),
    AllExcept(u64),
}

/// A message the session wants delivered.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub to: Recipient,
    pub env: Envelope,
}

impl Outbound {
    fn to(client: u64, env: Envelope) -> Self {
        Outbound {
            to: Recipient::Client(client),
            env,
        }
    }

    pub fn reaches(&self, client: u64) -> bool {
        match self.to {
            Recipient::All => true,
            Recipient::Client(c) => c == client,
            Recipient::AllExcept(c) => c != client,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Subscriber {
    pub name: String,
    last_client_op_id: u64,
    last_cell: Option<Cell>,
}

#[derive(Debug, Clone)]
pub struct Session {
    base: Space,
    space: Space,
    op_log: Vec<LogEntry>,
    subscribers: BTreeMap<u64, Subscriber>,
    next_client_id: u64,
    /// Unrounded wear per cell; the space holds the 1e-4 rounding.
    wear: Vec<f64>,
    dirty: bool,
}

impl Session {
    /// Hosts `space` (assumed valid). Its current state becomes the log's base.
    pub fn new(space: Space) -> Self {
        Session {
            base: space.clone(),
            wear: space.residue.clone(),
            space,
            op_log: Vec::new(),
            subscribers: BTreeMap::new(),
            next_client_id: 1,
            dirty: false,
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// State the op log starts from.
    pub fn base(&self) -> &Space {
        &self.base
    }

    pub fn op_log(&self) -> &[LogEntry] {
        &self.op_log
    }

    pub fn subscribers(&self) -> &BTreeMap<u64, Subscriber> {
        &self.subscribers
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn mark_saved(&mut self) {
        self.dirty = false;
    }

    /// Registers a client and returns its id with the `Welcome` to send it.
    pub fn join(&mut self, name: impl Into<String>) -> (u64, Envelope) {
        let client_id = self.next_client_id;
        self.next_client_id += 1;
        self.subscribers.insert(
            client_id,
            Subscriber {
                name: name.into(),
                last_client_op_id: 0,
                last_cell: None,
            },
        );
        let welcome = Envelope::Welcome {
            client_id,
            snapshot: self.space.clone(),
            seq: self.space.op_seq,
        };
        (client_id, welcome)
    }

    pub fn leave(&mut self, client_id: u64) {
        self.subscribers.remove(&client_id);
    }

    /// Orders and applies one submission. Success is broadcast to every
    /// subscriber, the origin included; failure goes back to the origin only.
    pub fn handle_submit(
        &mut self,
        client_id: u64,
        client_op_id: u64,
        op: EditOp,
    ) -> Vec<Outbound> {
        let Some(sub) = self.subscribers.get_mut(&client_id) else {
            return vec![Outbound::to(
                client_id,
                Envelope::error("not_subscribed", "send hello first"),
            )];
        };
        if client_op_id <= sub.last_client_op_id {
            return vec![Outbound::to(
                client_id,
                Envelope::Rejected {
                    client_op_id,
                    reason: "StaleClientOpId".into(),
                },
            )];
        }
        sub.last_client_op_id = client_op_id;

        match apply(&mut self.space, &op) {
            Err(e) => vec![Outbound::to(
                client_id,
                Envelope::Rejected {
                    client_op_id,
                    reason: e.name().into(),
                },
            )],
            Ok(assigned_item_id) => {
                let seq = self.space.op_seq + 1;
                self.space.op_seq = seq;
                self.op_log.push(LogEntry {
                    seq,
                    origin: client_id,
                    op,
                });
                self.dirty = true;
                vec![Outbound {
                    to: Recipient::All,
                    env: Envelope::OpApplied {
                        seq,
                        origin_client: client_id,
                        client_op_id,
                        op,
                        assigned_item_id,
                    },
                }]
            }
        }
    }

    /// Accumulates wear where the client stands. Reports outside the grid are
    /// ignored.
    pub fn record_presence(
        &mut self,
        client_id: u64,
        position: WorldPoint,
        dwell_s: f64,
        policy: &ResiduePolicy,
    ) -> Vec<Outbound> {
        let mut out = Vec::new();
        if !(dwell_s.is_finite() && dwell_s >= 0.0) {
            return out;
        }
        let Ok(cell) = self.space.grid.cell_of_world(position) else {
            return out;
        };
        let Ok(index) = self.space.grid.index(cell) else {
            return out;
        };
        if let Some(sub) = self.subscribers.get_mut(&client_id) {
            if sub.last_cell != Some(cell) {
                sub.last_cell = Some(cell);
                out.push(Outbound {
                    to: Recipient::AllExcept(client_id),
                    env: Envelope::PresenceBroadcast { client_id, cell },
                });
            }
        }
        let accumulated = (self.wear[index] + dwell_s * policy.wear_rate).min(policy.cap);
        self.wear[index] = accumulated;
        let rounded = quantize4(accumulated);
        if rounded != self.space.residue[index] {
            self.space
                .set_wear(cell, rounded)
                .expect("cell came from the grid");
            self.dirty = true;
            out.push(Outbound {
                to: Recipient::All,
                env: Envelope::ResidueDelta {
                    cell,
                    wear: rounded,
                },
            });
        }
        out
    }

    /// Replays the log over the base state, carrying residue across since wear
    /// is not part of the op order.
    pub fn replayed(&self) -> Result<Space, ReplayError> {
        let mut s = replay_log(&self.base, &self.op_log)?;
        s.residue = self.space.residue.clone();
        Ok(s)
    }
}

/// Parses the body of a `POST /spaces` request.
pub fn decode_create_request(v: Value) -> Result<(String, u64, GridSpec), DecodeError> {
    let mut o = StrictObj::new("create request", v)?;
    let name = o.string("name")?;
    let seed = match o.take_opt("seed") {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| o.bad("seed", "unsigned integer"))?,
        None => 0,
    };
    let grid = match o.take_opt("grid") {
        Some(v) => {
            let mut g = StrictObj::new("grid", v)?;
            let grid = GridSpec::new(g.u32("width")?, g.u32("height")?, g.f64("cell_size")?)
                .map_err(|e| DecodeError {
                    position: 0,
                    reason: e.to_string(),
                })?;
            g.finish()?;
            grid
        }
        None => GridSpec::default(),
    };
    o.finish()?;
    Ok((name, seed, grid))
}
