//! Per-space apply loops. Every mutation of a space goes through its actor
//! task, which is the single ordering point for that space.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use slowspace_core::pcg::Catalog;
use slowspace_core::protocol::{EditOp, Envelope};
use slowspace_core::{GridSpec, Space, WorldPoint};
use tokio::sync::{mpsc, oneshot};

use crate::session::{Outbound, ResiduePolicy, Session};
use crate::store::{SpaceStore, StoreError};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
    pub policy: ResiduePolicy,
    pub autosave: Duration,
    pub catalog: Catalog,
    /// Static editor assets served at `/`.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            addr: ([127, 0, 0, 1], 8080).into(),
            data_dir: PathBuf::from("data"),
            policy: ResiduePolicy::default(),
            autosave: Duration::from_secs(10),
            catalog: Catalog::default(),
            ui_dir: None,
        }
    }
}

pub type Outbox = mpsc::UnboundedSender<Envelope>;

enum Command {
    Join {
        name: String,
        outbox: Outbox,
        reply: oneshot::Sender<u64>,
    },
    Submit {
        client_id: u64,
        client_op_id: u64,
        op: EditOp,
    },
    Presence {
        client_id: u64,
        position: WorldPoint,
        dwell_s: f64,
    },
    Leave {
        client_id: u64,
    },
    Snapshot {
        reply: oneshot::Sender<Space>,
    },
    Save {
        reply: oneshot::Sender<Result<(), String>>,
    },
}

/// Cheap handle onto one space's apply loop.
#[derive(Clone)]
pub struct SpaceHandle {
    tx: mpsc::UnboundedSender<Command>,
}

#[derive(Debug, thiserror::Error)]
#[error("space loop has shut down")]
pub struct LoopClosed;

impl SpaceHandle {
    /// Subscribes a connection. Its `Welcome` is the first message on `outbox`.
    pub async fn join(&self, name: String, outbox: Outbox) -> Result<u64, LoopClosed> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Command::Join {
                name,
                outbox,
                reply,
            })
            .map_err(|_| LoopClosed)?;
        rx.await.map_err(|_| LoopClosed)
    }

    pub fn submit(&self, client_id: u64, client_op_id: u64, op: EditOp) -> Result<(), LoopClosed> {
        self.tx
            .send(Command::Submit {
                client_id,
                client_op_id,
                op,
            })
            .map_err(|_| LoopClosed)
    }

    pub fn presence(
        &self,
        client_id: u64,
        position: WorldPoint,
        dwell_s: f64,
    ) -> Result<(), LoopClosed> {
        self.tx
            .send(Command::Presence {
                client_id,
                position,
                dwell_s,
            })
            .map_err(|_| LoopClosed)
    }

    pub fn leave(&self, client_id: u64) {
        let _ = self.tx.send(Command::Leave { client_id });
    }

    pub async fn snapshot(&self) -> Result<Space, LoopClosed> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Command::Snapshot { reply })
            .map_err(|_| LoopClosed)?;
        rx.await.map_err(|_| LoopClosed)
    }

    pub async fn save(&self) -> Result<Result<(), String>, LoopClosed> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Command::Save { reply })
            .map_err(|_| LoopClosed)?;
        rx.await.map_err(|_| LoopClosed)
    }
}

struct SpaceLoop {
    session: Session,
    outboxes: HashMap<u64, Outbox>,
    store: Arc<SpaceStore>,
    policy: ResiduePolicy,
}

impl SpaceLoop {
    fn deliver(&mut self, out: Vec<Outbound>) {
        for msg in out {
            let mut dead = Vec::new();
            for (id, outbox) in &self.outboxes {
                if msg.reaches(*id) && outbox.send(msg.env.clone()).is_err() {
                    dead.push(*id);
                }
            }
            for id in dead {
                self.outboxes.remove(&id);
                self.session.leave(id);
            }
        }
    }

    fn save(&mut self) -> Result<(), String> {
        crate::store::save_space(&mut self.session, &self.store)
            .map(|_| ())
            .map_err(|e| e.to_string())
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Join {
                name,
                outbox,
                reply,
            } => {
                let (client_id, welcome) = self.session.join(name);
                let _ = outbox.send(welcome);
                self.outboxes.insert(client_id, outbox);
                let _ = reply.send(client_id);
            }
            Command::Submit {
                client_id,
                client_op_id,
                op,
            } => {
                let out = self.session.handle_submit(client_id, client_op_id, op);
                self.deliver(out);
            }
            Command::Presence {
                client_id,
                position,
                dwell_s,
            } => {
                let policy = self.policy;
                let out = self
                    .session
                    .record_presence(client_id, position, dwell_s, &policy);
                self.deliver(out);
            }
            Command::Leave { client_id } => {
                self.outboxes.remove(&client_id);
                self.session.leave(client_id);
            }
            Command::Snapshot { reply } => {
                let _ = reply.send(self.session.space().clone());
            }
            Command::Save { reply } => {
                let _ = reply.send(self.save());
            }
        }
    }

    async fn run(mut self, mut rx: mpsc::UnboundedReceiver<Command>, autosave: Duration) {
        let mut tick = tokio::time::interval(autosave);
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        tick.tick().await;
        loop {
            tokio::select! {
                cmd = rx.recv() => match cmd {
                    Some(cmd) => self.handle(cmd),
                    None => break,
                },
                _ = tick.tick() => {
                    if self.session.is_dirty() {
                        if let Err(e) = self.save() {
                            tracing::error!("autosave of {} failed: {e}", self.session.space().space_id);
                        }
                    }
                }
            }
        }
        if self.session.is_dirty() {
            if let Err(e) = self.save() {
                tracing::error!(
                    "final save of {} failed: {e}",
                    self.session.space().space_id
                );
            }
        }
    }
}

/// Registry of open spaces.
pub struct Hub {
    store: Arc<SpaceStore>,
    config: ServerConfig,
    spaces: Mutex<HashMap<String, SpaceHandle>>,
}

impl Hub {
    pub fn new(config: ServerConfig) -> Result<Arc<Hub>, StoreError> {
        let store = Arc::new(SpaceStore::new(&config.data_dir)?);
        Ok(Arc::new(Hub {
            store,
            config,
            spaces: Mutex::new(HashMap::new()),
        }))
    }

    pub fn store(&self) -> &SpaceStore {
        &self.store
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn create(&self, name: &str, seed: u64, grid: GridSpec) -> Result<Space, StoreError> {
        self.store.create(name, seed, grid)
    }

    /// Returns the apply loop for `space_id`, loading the space on first use.
    /// Must be called from within a Tokio runtime.
    pub fn open(&self, space_id: &str) -> Result<SpaceHandle, StoreError> {
        let mut spaces = self.spaces.lock().expect("hub lock poisoned");
        if let Some(h) = spaces.get(space_id) {
            if !h.tx.is_closed() {
                return Ok(h.clone());
            }
        }
        let session = crate::store::open_space(&self.store, space_id)?;
        let (tx, rx) = mpsc::unbounded_channel();
        let lp = SpaceLoop {
            session,
            outboxes: HashMap::new(),
            store: self.store.clone(),
            policy: self.config.policy,
        };
        tokio::spawn(lp.run(rx, self.config.autosave));
        let handle = SpaceHandle { tx };
        spaces.insert(space_id.to_owned(), handle.clone());
        Ok(handle)
    }

    /// Current state: the live one if open, otherwise from disk.
    pub async fn snapshot(&self, space_id: &str) -> Result<Space, StoreError> {
        let live = self
            .spaces
            .lock()
            .expect("hub lock poisoned")
            .get(space_id)
            .cloned();
        if let Some(h) = live {
            if let Ok(space) = h.snapshot().await {
                return Ok(space);
            }
        }
        self.store.load(space_id)
    }

    /// Saves every open space.
    pub async fn save_all(&self) {
        let handles: Vec<(String, SpaceHandle)> = self
            .spaces
            .lock()
            .expect("hub lock poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (id, h) in handles {
            if let Ok(Err(e)) = h.save().await {
                tracing::error!("saving {id} failed: {e}");
            }
        }
    }
}
