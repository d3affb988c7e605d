//! Client-side replica: optimistic local application reconciled against the
//! server's total order.
//!
//! `confirmed` is always a pure fold of `OpApplied` messages over the welcome
//! snapshot. `view` is `confirmed` with the pending queue replayed on top.
//!
//! A pending op that targets an item still awaiting its own `PlaceItem`
//! confirmation is held back and only sent once the server has issued the
//! item's real id. Submissions are FIFO, so everything queued behind a held op
//! is held too. This keeps predicted ids off the wire entirely.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use super::envelope::Envelope;
use super::op::{apply, EditOp};
use crate::error::SceneError;
use crate::model::{Cell, Space};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplicaError {
    #[error("op rejected locally: {0}")]
    LocalRejected(SceneError),
    #[error("sequence gap: expected {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("replica diverged from server: {0}")]
    Desync(String),
    #[error("unexpected {0} envelope")]
    Unexpected(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ItemRef {
    /// An id the server has issued.
    Issued(u64),
    /// The item created by the pending `PlaceItem` with this local key.
    Pending(u64),
}

#[derive(Debug, Clone)]
struct PendingOp {
    local: u64,
    /// `None` while held back.
    client_op_id: Option<u64>,
    op: EditOp,
    target: Option<ItemRef>,
    /// For `PlaceItem`: the id this op currently holds in `view`.
    predicted_id: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ClientReplica {
    client_id: u64,
    confirmed: Space,
    view: Space,
    pending: VecDeque<PendingOp>,
    next_client_op_id: u64,
    next_local: u64,
    peers: BTreeMap<u64, Cell>,
    last_error: Option<(String, String)>,
}

impl ClientReplica {
    /// Starts a replica from the server's `Welcome`.
    pub fn new(client_id: u64, snapshot: Space) -> Self {
        ClientReplica {
            client_id,
            view: snapshot.clone(),
            confirmed: snapshot,
            pending: VecDeque::new(),
            next_client_op_id: 1,
            next_local: 1,
            peers: BTreeMap::new(),
            last_error: None,
        }
    }

    pub fn from_welcome(env: &Envelope) -> Result<Self, ReplicaError> {
        match env {
            Envelope::Welcome {
                client_id,
                snapshot,
                ..
            } => Ok(ClientReplica::new(*client_id, snapshot.clone())),
            other => Err(ReplicaError::Unexpected(other.tag())),
        }
    }

    pub fn client_id(&self) -> u64 {
        self.client_id
    }

    pub fn confirmed(&self) -> &Space {
        &self.confirmed
    }

    pub fn view(&self) -> &Space {
        &self.view
    }

    /// Pending ops in order, with the `client_op_id` they were sent under
    /// (`None` while held back) and item references resolved against `view`.
    pub fn pending(&self) -> Vec<(Option<u64>, EditOp)> {
        self.pending
            .iter()
            .filter_map(|p| self.resolve(p).map(|op| (p.client_op_id, op)))
            .collect()
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_settled(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn peers(&self) -> &BTreeMap<u64, Cell> {
        &self.peers
    }

    pub fn last_error(&self) -> Option<&(String, String)> {
        self.last_error.as_ref()
    }

    fn resolve(&self, p: &PendingOp) -> Option<EditOp> {
        match p.target {
            None => Some(p.op),
            Some(ItemRef::Issued(id)) => Some(p.op.with_target(id)),
            Some(ItemRef::Pending(key)) => self
                .pending
                .iter()
                .find(|q| q.local == key)
                .and_then(|q| q.predicted_id)
                .map(|id| p.op.with_target(id)),
        }
    }

    /// Applies a locally authored op to the view and returns the messages to send.
    pub fn on_local(&mut self, op: EditOp) -> Result<Vec<Envelope>, ReplicaError> {
        let target = op.target_item().map(|id| {
            self.pending
                .iter()
                .find(|p| p.predicted_id == Some(id))
                .map_or(ItemRef::Issued(id), |p| ItemRef::Pending(p.local))
        });
        let assigned = apply(&mut self.view, &op).map_err(ReplicaError::LocalRejected)?;
        let local = self.next_local;
        self.next_local += 1;
        self.pending.push_back(PendingOp {
            local,
            client_op_id: None,
            op,
            target,
            predicted_id: assigned,
        });
        Ok(self.flush())
    }

    /// Sends every unsent op from the front of the queue until one still
    /// depends on an unconfirmed placement.
    fn flush(&mut self) -> Vec<Envelope> {
        let mut out = Vec::new();
        for i in 0..self.pending.len() {
            if self.pending[i].client_op_id.is_some() {
                continue;
            }
            if matches!(self.pending[i].target, Some(ItemRef::Pending(_))) {
                break;
            }
            let Some(op) = self.resolve(&self.pending[i]) else {
                break;
            };
            let id = self.next_client_op_id;
            self.next_client_op_id += 1;
            self.pending[i].client_op_id = Some(id);
            out.push(Envelope::SubmitOp {
                client_op_id: id,
                op,
            });
        }
        out
    }

    /// Replays pending ops over `confirmed`, dropping those that no longer apply.
    fn rebuild(&mut self) {
        let mut view = self.confirmed.clone();
        let mut kept: VecDeque<PendingOp> = VecDeque::with_capacity(self.pending.len());
        for mut p in std::mem::take(&mut self.pending) {
            let op = match p.target {
                None => Some(p.op),
                Some(ItemRef::Issued(id)) => Some(p.op.with_target(id)),
                Some(ItemRef::Pending(key)) => kept
                    .iter()
                    .find(|q| q.local == key)
                    .and_then(|q| q.predicted_id)
                    .map(|id| p.op.with_target(id)),
            };
            if let Some(op) = op {
                if let Ok(assigned) = apply(&mut view, &op) {
                    p.predicted_id = assigned;
                    kept.push_back(p);
                }
            }
        }
        self.pending = kept;
        self.view = view;
    }

    /// Handles a server message and returns any submissions it released.
    pub fn on_server(&mut self, env: &Envelope) -> Result<Vec<Envelope>, ReplicaError> {
        match env {
            Envelope::OpApplied {
                seq,
                origin_client,
                client_op_id,
                op,
                assigned_item_id,
            } => {
                let expected = self.confirmed.op_seq + 1;
                if *seq != expected {
                    return Err(ReplicaError::SequenceGap {
                        expected,
                        got: *seq,
                    });
                }
                let mut next = self.confirmed.clone();
                let issued = apply(&mut next, op)
                    .map_err(|e| ReplicaError::Desync(format!("seq {seq} does not apply: {e}")))?;
                if issued != *assigned_item_id {
                    return Err(ReplicaError::Desync(format!(
                        "seq {seq} issued {issued:?}, server assigned {assigned_item_id:?}"
                    )));
                }
                next.op_seq = *seq;
                self.confirmed = next;

                if *origin_client == self.client_id {
                    if let Some(pos) = self
                        .pending
                        .iter()
                        .position(|p| p.client_op_id == Some(*client_op_id))
                    {
                        let done = self.pending.remove(pos).expect("position is valid");
                        if let Some(id) = issued {
                            for p in self.pending.iter_mut() {
                                if p.target == Some(ItemRef::Pending(done.local)) {
                                    p.target = Some(ItemRef::Issued(id));
                                }
                            }
                        }
                    }
                }
                self.rebuild();
                Ok(self.flush())
            }
            Envelope::Rejected { client_op_id, .. } => {
                self.pending
                    .retain(|p| p.client_op_id != Some(*client_op_id));
                self.rebuild();
                Ok(self.flush())
            }
            Envelope::ResidueDelta { cell, wear } => {
                // residue is outside the op order; mirror it on both states
                let _ = self.confirmed.set_wear(*cell, *wear);
                let _ = self.view.set_wear(*cell, *wear);
                Ok(Vec::new())
            }
            Envelope::PresenceBroadcast { client_id, cell } => {
                self.peers.insert(*client_id, *cell);
                Ok(Vec::new())
            }
            Envelope::Error { code, detail } => {
                self.last_error = Some((code.clone(), detail.clone()));
                Ok(Vec::new())
            }
            Envelope::Welcome {
                client_id,
                snapshot,
                ..
            } => Ok(self.rejoin(*client_id, snapshot.clone())),
            other => Err(ReplicaError::Unexpected(other.tag())),
        }
    }

    /// Adopts a fresh snapshot after reconnecting and resubmits every pending op.
    pub fn rejoin(&mut self, client_id: u64, snapshot: Space) -> Vec<Envelope> {
        self.client_id = client_id;
        self.confirmed = snapshot;
        self.peers.clear();
        for p in self.pending.iter_mut() {
            p.client_op_id = None;
        }
        self.rebuild();
        self.flush()
    }
}
