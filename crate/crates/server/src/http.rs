//! HTTP and WebSocket endpoints.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use slowspace_core::canonical::{parse, Canon};
use slowspace_core::canonical_bytes;
use slowspace_core::protocol::{decode, encode, Envelope, PROTO_VERSION};
use slowspace_core::scene::materialize;
use tokio::sync::mpsc;
use tower_http::services::ServeDir;

use crate::hub::Hub;
use crate::session::decode_create_request;
use crate::store::StoreError;

pub fn router(hub: Arc<Hub>) -> Router {
    let ui = hub.config().ui_dir.clone();
    let router = Router::new()
        .route("/spaces", get(list_spaces).post(create_space))
        .route("/spaces/{id}/file", get(space_file))
        .route("/spaces/{id}/export", get(space_export))
        .route("/ws/{id}", get(ws_upgrade))
        .with_state(hub);
    match ui {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

/// Binds and serves until ctrl-c, then saves every open space.
pub async fn serve(hub: Arc<Hub>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(hub.config().addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(hub.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    hub.save_all().await;
    Ok(())
}

fn json(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    json(
        status,
        Canon::obj([("error", Canon::str(msg.into()))]).to_bytes(),
    )
}

fn store_error(e: StoreError) -> Response {
    match e {
        StoreError::NotFound(_) => error(StatusCode::NOT_FOUND, e.to_string()),
        StoreError::CorruptFile { .. } | StoreError::Invalid(_) => {
            error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
        }
        StoreError::Io { .. } => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn list_spaces(State(hub): State<Arc<Hub>>) -> Response {
    match hub.store().list() {
        Ok(list) => {
            let items = list
                .into_iter()
                .map(|(id, name)| {
                    Canon::obj([("space_id", Canon::str(id)), ("name", Canon::str(name))])
                })
                .collect();
            json(StatusCode::OK, Canon::Arr(items).to_bytes())
        }
        Err(e) => store_error(e),
    }
}

async fn create_space(State(hub): State<Arc<Hub>>, body: Bytes) -> Response {
    let req = parse(&body).and_then(decode_create_request);
    let (name, seed, grid) = match req {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    match hub.create(&name, seed, grid) {
        Ok(space) => json(
            StatusCode::CREATED,
            Canon::obj([
                ("space_id", Canon::str(space.space_id)),
                ("name", Canon::str(space.name)),
            ])
            .to_bytes(),
        ),
        Err(e) => store_error(e),
    }
}

async fn space_file(State(hub): State<Arc<Hub>>, Path(id): Path<String>) -> Response {
    match hub.snapshot(&id).await {
        Ok(space) => json(StatusCode::OK, canonical_bytes(&space)),
        Err(e) => store_error(e),
    }
}

async fn space_export(State(hub): State<Arc<Hub>>, Path(id): Path<String>) -> Response {
    let space = match hub.snapshot(&id).await {
        Ok(space) => space,
        Err(e) => return store_error(e),
    };
    match materialize(&space, &hub.config().catalog) {
        Ok(scene) => json(StatusCode::OK, scene.canonical_bytes()),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

async fn ws_upgrade(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Response {
    if !hub.store().exists(&id) {
        return error(StatusCode::NOT_FOUND, format!("space `{id}` not found"));
    }
    ws.on_upgrade(move |socket| connection(hub, id, socket))
}

async fn send_env(socket: &mut WebSocket, env: &Envelope) -> bool {
    let text = String::from_utf8(encode(env)).expect("canonical json is utf-8");
    socket.send(Message::Text(text.into())).await.is_ok()
}

/// Waits for the client's `Hello`, then pumps messages both ways.
async fn connection(hub: Arc<Hub>, space_id: String, mut socket: WebSocket) {
    let hello = loop {
        match socket.recv().await {
            Some(Ok(Message::Text(t))) => break decode(t.as_bytes()),
            Some(Ok(Message::Binary(b))) => break decode(&b),
            Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
            Some(Ok(_)) => continue,
        }
    };
    let name = match hello {
        Ok(Envelope::Hello {
            proto_version,
            space_id: sid,
            client_name,
        }) => {
            if proto_version != PROTO_VERSION {
                let detail =
                    format!("server speaks protocol {PROTO_VERSION}, client sent {proto_version}");
                send_env(&mut socket, &Envelope::error("unsupported_version", detail)).await;
                return;
            }
            if sid != space_id {
                send_env(
                    &mut socket,
                    &Envelope::error("space_mismatch", "hello names a different space"),
                )
                .await;
                return;
            }
            client_name
        }
        Ok(other) => {
            send_env(
                &mut socket,
                &Envelope::error("expected_hello", format!("got {}", other.tag())),
            )
            .await;
            return;
        }
        Err(e) => {
            send_env(&mut socket, &Envelope::error("decode", e.to_string())).await;
            return;
        }
    };

    let handle = match hub.open(&space_id) {
        Ok(h) => h,
        Err(e) => {
            send_env(&mut socket, &Envelope::error("open_failed", e.to_string())).await;
            return;
        }
    };
    let (outbox, mut inbox) = mpsc::unbounded_channel::<Envelope>();
    let Ok(client_id) = handle.join(name, outbox.clone()).await else {
        return;
    };

    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(env) = inbox.recv().await {
            let text = String::from_utf8(encode(&env)).expect("canonical json is utf-8");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    while let Some(msg) = stream.next().await {
        let bytes: Vec<u8> = match msg {
            Ok(Message::Text(t)) => t.as_bytes().to_vec(),
            Ok(Message::Binary(b)) => b.to_vec(),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        let sent = match decode(&bytes) {
            Ok(Envelope::SubmitOp { client_op_id, op }) => {
                handle.submit(client_id, client_op_id, op).is_ok()
            }
            Ok(Envelope::PresenceReport { position, dwell_s }) => {
                handle.presence(client_id, position, dwell_s).is_ok()
            }
            Ok(other) => outbox
                .send(Envelope::error(
                    "unexpected",
                    format!("clients may not send {}", other.tag()),
                ))
                .is_ok(),
            Err(e) => outbox
                .send(Envelope::error("decode", e.to_string()))
                .is_ok(),
        };
        if !sent {
            break;
        }
    }
    handle.leave(client_id);
    drop(outbox);
    writer.abort();
}
