//! Wire messages, op dispatch and the client replica state machine.

mod envelope;
mod op;
mod replica;

pub use envelope::{decode, encode, Envelope, PROTO_VERSION, WIRE_VERSION};
pub use op::{apply, EditOp};
pub use replica::{ClientReplica, ReplicaError};
