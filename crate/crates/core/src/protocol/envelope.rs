use serde_json::Value;

use super::op::EditOp;
use crate::canonical::{parse, Canon, StrictObj};
use crate::error::DecodeError;
use crate::model::{quantize4, Cell, Space, WorldPoint};
use crate::space_file::{cell_canon, cell_from_value, space_canon, space_from_value};

/// Envelope schema version carried in every message as `"v"`.
pub const WIRE_VERSION: u64 = 1;
/// Application protocol version a server speaks (sent in `Hello`).
pub const PROTO_VERSION: u64 = 1;

/// One protocol message, client→server or server→client.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    // client → server
    Hello {
        proto_version: u64,
        space_id: String,
        client_name: String,
    },
    SubmitOp {
        client_op_id: u64,
        op: EditOp,
    },
    PresenceReport {
        position: WorldPoint,
        dwell_s: f64,
    },
    // server → client
    Welcome {
        client_id: u64,
        snapshot: Space,
        seq: u64,
    },
    OpApplied {
        seq: u64,
        origin_client: u64,
        client_op_id: u64,
        op: EditOp,
        /// Present iff `op` is a `PlaceItem`.
        assigned_item_id: Option<u64>,
    },
    Rejected {
        client_op_id: u64,
        reason: String,
    },
    PresenceBroadcast {
        client_id: u64,
        cell: Cell,
    },
    ResidueDelta {
        cell: Cell,
        wear: f64,
    },
    Error {
        code: String,
        detail: String,
    },
}

impl Envelope {
    pub fn tag(&self) -> &'static str {
        match self {
            Envelope::Hello { .. } => "hello",
            Envelope::SubmitOp { .. } => "submit",
            Envelope::PresenceReport { .. } => "presence",
            Envelope::Welcome { .. } => "welcome",
            Envelope::OpApplied { .. } => "op",
            Envelope::Rejected { .. } => "reject",
            Envelope::PresenceBroadcast { .. } => "presence_b",
            Envelope::ResidueDelta { .. } => "residue",
            Envelope::Error { .. } => "error",
        }
    }

    pub fn error(code: impl Into<String>, detail: impl Into<String>) -> Envelope {
        Envelope::Error {
            code: code.into(),
            detail: detail.into(),
        }
    }
}

fn point_canon(p: WorldPoint) -> Canon {
    Canon::Arr(vec![Canon::Real(p.x), Canon::Real(p.y), Canon::Real(p.z)])
}

/// Serializes an envelope as canonical JSON.
pub fn encode(env: &Envelope) -> Vec<u8> {
    let t = ("t", Canon::str(env.tag()));
    let v = ("v", Canon::UInt(WIRE_VERSION));
    let c = match env {
        Envelope::Hello {
            proto_version,
            space_id,
            client_name,
        } => Canon::obj([
            t,
            v,
            ("proto_version", Canon::UInt(*proto_version)),
            ("space_id", Canon::str(space_id.as_str())),
            ("client_name", Canon::str(client_name.as_str())),
        ]),
        Envelope::SubmitOp { client_op_id, op } => Canon::obj([
            t,
            v,
            ("client_op_id", Canon::UInt(*client_op_id)),
            ("op", op.to_canon()),
        ]),
        Envelope::PresenceReport { position, dwell_s } => Canon::obj([
            t,
            v,
            ("position", point_canon(*position)),
            ("dwell_s", Canon::Real(*dwell_s)),
        ]),
        Envelope::Welcome {
            client_id,
            snapshot,
            seq,
        } => Canon::obj([
            t,
            v,
            ("client_id", Canon::UInt(*client_id)),
            ("snapshot", space_canon(snapshot)),
            ("seq", Canon::UInt(*seq)),
        ]),
        Envelope::OpApplied {
            seq,
            origin_client,
            client_op_id,
            op,
            assigned_item_id,
        } => {
            let mut c = Canon::obj([
                t,
                v,
                ("seq", Canon::UInt(*seq)),
                ("origin_client", Canon::UInt(*origin_client)),
                ("client_op_id", Canon::UInt(*client_op_id)),
                ("op", op.to_canon()),
            ]);
            if let (Some(id), Canon::Obj(fields)) = (assigned_item_id, &mut c) {
                fields.insert("assigned_item_id".into(), Canon::UInt(*id));
            }
            c
        }
        Envelope::Rejected {
            client_op_id,
            reason,
        } => Canon::obj([
            t,
            v,
            ("client_op_id", Canon::UInt(*client_op_id)),
            ("reason", Canon::str(reason.as_str())),
        ]),
        Envelope::PresenceBroadcast { client_id, cell } => Canon::obj([
            t,
            v,
            ("client_id", Canon::UInt(*client_id)),
            ("cell", cell_canon(*cell)),
        ]),
        Envelope::ResidueDelta { cell, wear } => Canon::obj([
            t,
            v,
            ("cell", cell_canon(*cell)),
            ("wear", Canon::Fixed4(*wear)),
        ]),
        Envelope::Error { code, detail } => Canon::obj([
            t,
            v,
            ("code", Canon::str(code.as_str())),
            ("detail", Canon::str(detail.as_str())),
        ]),
    };
    c.to_bytes()
}

fn point_from_value(v: &Value) -> Result<WorldPoint, DecodeError> {
    match v.as_array().map(Vec::as_slice) {
        Some([x, y, z]) => {
            let num = |v: &Value| {
                v.as_f64()
                    .ok_or_else(|| DecodeError::schema("position components must be numbers"))
            };
            Ok(WorldPoint::new(num(x)?, num(y)?, num(z)?))
        }
        _ => Err(DecodeError::schema("position must be [x, y, z]")),
    }
}

/// Parses one envelope. Unknown tags and unknown fields are errors; the
/// decoder never panics on any input.
pub fn decode(bytes: &[u8]) -> Result<Envelope, DecodeError> {
    let mut o = StrictObj::new("envelope", parse(bytes)?)?;
    let tag = o.string("t")?;
    let version = o.u64("v")?;
    if version != WIRE_VERSION {
        return Err(DecodeError::schema(format!(
            "unsupported envelope version {version}"
        )));
    }
    let env = match tag.as_str() {
        "hello" => Envelope::Hello {
            proto_version: o.u64("proto_version")?,
            space_id: o.string("space_id")?,
            client_name: o.string("client_name")?,
        },
        "submit" => Envelope::SubmitOp {
            client_op_id: o.u64("client_op_id")?,
            op: EditOp::from_value(o.take("op")?)?,
        },
        "presence" => Envelope::PresenceReport {
            position: point_from_value(&o.take("position")?)?,
            dwell_s: o.f64("dwell_s")?,
        },
        "welcome" => Envelope::Welcome {
            client_id: o.u64("client_id")?,
            snapshot: space_from_value(o.take("snapshot")?)?,
            seq: o.u64("seq")?,
        },
        "op" => {
            let seq = o.u64("seq")?;
            let origin_client = o.u64("origin_client")?;
            let client_op_id = o.u64("client_op_id")?;
            let op = EditOp::from_value(o.take("op")?)?;
            let assigned_item_id = match o.take_opt("assigned_item_id") {
                Some(v) => Some(
                    v.as_u64()
                        .ok_or_else(|| o.bad("assigned_item_id", "unsigned integer"))?,
                ),
                None => None,
            };
            if assigned_item_id.is_some() != op.is_place() {
                return Err(DecodeError::schema(
                    "assigned_item_id must be present exactly for place ops",
                ));
            }
            Envelope::OpApplied {
                seq,
                origin_client,
                client_op_id,
                op,
                assigned_item_id,
            }
        }
        "reject" => Envelope::Rejected {
            client_op_id: o.u64("client_op_id")?,
            reason: o.string("reason")?,
        },
        "presence_b" => Envelope::PresenceBroadcast {
            client_id: o.u64("client_id")?,
            cell: cell_from_value(&o.take("cell")?)?,
        },
        "residue" => Envelope::ResidueDelta {
            cell: cell_from_value(&o.take("cell")?)?,
            wear: quantize4(o.f64("wear")?),
        },
        "error" => Envelope::Error {
            code: o.string("code")?,
            detail: o.string("detail")?,
        },
        other => {
            return Err(DecodeError::schema(format!(
                "unknown message tag `{other}`"
            )))
        }
    };
    o.finish()?;
    Ok(env)
}
