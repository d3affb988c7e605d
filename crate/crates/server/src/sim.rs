//! In-process convergence fuzzer: simulated clients talk to a [`Session`]
//! through the real wire codec, with randomized delivery order.

use std::collections::VecDeque;

use slowspace_core::pcg::SplitMix64;
use slowspace_core::protocol::{decode, encode, ClientReplica, EditOp, Envelope, ReplicaError};
use slowspace_core::{scene_hash, Cell, GridSpec, ItemKind, Space, Terrain, TimeOfDay, WallEdge};
use thiserror::Error;

use crate::session::{replay_log, LogEntry, Session};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzConfig {
    pub clients: usize,
    pub ops: usize,
    pub seed: u64,
    pub grid: GridSpec,
}

impl FuzzConfig {
    pub fn new(clients: usize, ops: usize, seed: u64) -> Self {
        FuzzConfig {
            clients,
            ops,
            seed,
            // small enough that clients keep colliding
            grid: GridSpec::new(6, 6, 2.0).expect("valid grid"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub seed: u64,
    pub creation: Space,
    pub final_space: Space,
    pub log: Vec<LogEntry>,
    pub server_hash: u64,
    pub replay_hash: u64,
    pub replica_hashes: Vec<u64>,
    pub generated: usize,
    pub local_rejections: usize,
    pub server_rejections: usize,
    pub messages: usize,
}

impl FuzzReport {
    pub fn converged(&self) -> bool {
        self.replica_hashes.iter().all(|h| *h == self.server_hash)
            && self.replay_hash == self.server_hash
    }
}

#[derive(Debug, Error)]
pub enum FuzzError {
    #[error("client {client}: {source}")]
    Replica { client: usize, source: ReplicaError },
    #[error("wire codec failed on a message it produced: {0}")]
    Codec(String),
    #[error("server log does not replay: {0}")]
    Replay(String),
    #[error("client {0} still has pending ops after the network drained")]
    Unsettled(usize),
}

fn pick<T: Copy>(rng: &mut SplitMix64, xs: &[T]) -> T {
    xs[rng.below(xs.len() as u64) as usize]
}

fn random_cell(rng: &mut SplitMix64, grid: &GridSpec) -> Cell {
    Cell::new(
        rng.below(grid.width.into()) as u32,
        rng.below(grid.height.into()) as u32,
    )
}

/// A random edit, mostly valid against `view`. About one in twenty targets
/// something that does not exist so local rejection gets exercised too.
pub fn random_op(view: &Space, rng: &mut SplitMix64) -> EditOp {
    let grid = view.grid;
    let roll = rng.below(100);
    if roll < 5 {
        return match rng.below(2) {
            0 => EditOp::RemoveItem {
                item_id: view.next_item_id + rng.below(5),
            },
            _ => EditOp::SetTerrain {
                cell: Cell::new(grid.width + rng.below(3) as u32, 0),
                terrain: Terrain::Rock,
            },
        };
    }
    let items = &view.items;
    match roll {
        5..=22 => EditOp::SetTerrain {
            cell: random_cell(rng, &grid),
            terrain: pick(rng, &Terrain::ALL),
        },
        23..=40 => {
            let edge = if rng.below(2) == 0 {
                WallEdge::h(
                    rng.below(grid.width.into()) as u32,
                    rng.below(u64::from(grid.height) + 1) as u32,
                )
            } else {
                WallEdge::v(
                    rng.below(u64::from(grid.width) + 1) as u32,
                    rng.below(grid.height.into()) as u32,
                )
            };
            EditOp::SetWall {
                edge,
                present: !view.has_wall(edge),
            }
        }
        41..=52 => EditOp::SetTimeOfDay {
            time_of_day: pick(rng, &TimeOfDay::ALL),
        },
        53..=74 if !items.is_empty() => {
            let it = items[rng.below(items.len() as u64) as usize];
            // crowd a corner so capacity conflicts happen
            let to = if rng.below(2) == 0 {
                Cell::new(rng.below(2) as u32, rng.below(2) as u32)
            } else {
                random_cell(rng, &grid)
            };
            EditOp::MoveItem {
                item_id: it.id,
                to_cell: to,
            }
        }
        75..=86 if !items.is_empty() => {
            let it = items[rng.below(items.len() as u64) as usize];
            EditOp::RemoveItem { item_id: it.id }
        }
        _ => {
            let cell = if rng.below(2) == 0 {
                Cell::new(rng.below(2) as u32, rng.below(2) as u32)
            } else {
                random_cell(rng, &grid)
            };
            EditOp::PlaceItem {
                kind: pick(rng, &ItemKind::ALL),
                cell,
            }
        }
    }
}

/// Sends a message through the wire codec, as a transport would.
fn wire(env: &Envelope) -> Result<Envelope, FuzzError> {
    decode(&encode(env)).map_err(|e| FuzzError::Codec(e.to_string()))
}

struct SimClient {
    replica: ClientReplica,
    uplink: VecDeque<Envelope>,
    downlink: VecDeque<Envelope>,
}

/// Runs the simulation and reports final hashes. Errors mean a protocol
/// invariant broke; a clean report with `converged() == false` means the
/// replicas drained but disagree.
pub fn run_fuzz(cfg: &FuzzConfig) -> Result<FuzzReport, FuzzError> {
    let mut rng = SplitMix64::new(cfg.seed);
    let creation = Space::new(format!("fuzz-{}", cfg.seed), "fuzz", cfg.seed, cfg.grid)
        .expect("fuzz grid is valid");
    let mut session = Session::new(creation.clone());

    let mut clients: Vec<SimClient> = (0..cfg.clients.max(1))
        .map(|i| {
            let (_, welcome) = session.join(format!("sim-{i}"));
            let welcome = wire(&welcome)?;
            let replica = ClientReplica::from_welcome(&welcome)
                .map_err(|source| FuzzError::Replica { client: i, source })?;
            Ok(SimClient {
                replica,
                uplink: VecDeque::new(),
                downlink: VecDeque::new(),
            })
        })
        .collect::<Result<_, FuzzError>>()?;

    let mut generated = 0;
    let mut local_rejections = 0;
    let mut server_rejections = 0;
    let mut messages = 0;

    loop {
        let busy: Vec<usize> = (0..clients.len())
            .filter(|i| !clients[*i].uplink.is_empty() || !clients[*i].downlink.is_empty())
            .collect();
        if generated >= cfg.ops && busy.is_empty() {
            break;
        }
        let c = rng.below(clients.len() as u64) as usize;
        let action = if generated < cfg.ops {
            rng.below(3)
        } else {
            1 + rng.below(2)
        };
        match action {
            0 => {
                generated += 1;
                let op = random_op(clients[c].replica.view(), &mut rng);
                match clients[c].replica.on_local(op) {
                    Ok(out) => clients[c].uplink.extend(out),
                    Err(ReplicaError::LocalRejected(_)) => local_rejections += 1,
                    Err(source) => return Err(FuzzError::Replica { client: c, source }),
                }
            }
            1 => {
                // a random number of queued submissions reach the server
                let burst = 1 + rng.below(3);
                for _ in 0..burst {
                    let Some(env) = clients[c].uplink.pop_front() else {
                        break;
                    };
                    messages += 1;
                    let Envelope::SubmitOp { client_op_id, op } = wire(&env)? else {
                        continue;
                    };
                    let client_id = clients[c].replica.client_id();
                    for out in session.handle_submit(client_id, client_op_id, op) {
                        if matches!(out.env, Envelope::Rejected { .. }) {
                            server_rejections += 1;
                        }
                        let env = wire(&out.env)?;
                        for cl in clients.iter_mut() {
                            if out.reaches(cl.replica.client_id()) {
                                cl.downlink.push_back(env.clone());
                            }
                        }
                    }
                }
            }
            _ => {
                let burst = 1 + rng.below(3);
                for _ in 0..burst {
                    let Some(env) = clients[c].downlink.pop_front() else {
                        break;
                    };
                    messages += 1;
                    let out = clients[c]
                        .replica
                        .on_server(&env)
                        .map_err(|source| FuzzError::Replica { client: c, source })?;
                    clients[c].uplink.extend(out);
                }
            }
        }
    }

    for (i, cl) in clients.iter().enumerate() {
        if !cl.replica.is_settled() {
            return Err(FuzzError::Unsettled(i));
        }
    }
    let replayed =
        replay_log(&creation, session.op_log()).map_err(|e| FuzzError::Replay(e.to_string()))?;
    Ok(FuzzReport {
        seed: cfg.seed,
        server_hash: scene_hash(session.space()),
        replay_hash: scene_hash(&replayed),
        replica_hashes: clients
            .iter()
            .flat_map(|c| {
                [
                    scene_hash(c.replica.confirmed()),
                    scene_hash(c.replica.view()),
                ]
            })
            .collect(),
        creation,
        final_space: session.space().clone(),
        log: session.op_log().to_vec(),
        generated,
        local_rejections,
        server_rejections,
        messages,
    })
}
