//! HTTP + websocket front end. Routes: `/ws` (protocol), `/health`, and
//! static assets for everything else. One [`Connection`] per socket.

use std::future::Future;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::response::{IntoResponse, Json};
use axum::routing::get;
use axum::Router;
use serde::Serialize;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::protocol::{Connection, ServerMessage, PROTOCOL_VERSION};
use crate::scenario::SCHEMA_VERSION;

#[derive(Debug, Clone)]
pub struct AppConfig {
    pub assets: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Health {
    pub status: String,
    pub name: String,
    pub version: String,
    pub protocol: u32,
    pub scenario_schema: u32,
}

impl Health {
    pub fn current() -> Self {
        Health {
            status: "ok".into(),
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            protocol: PROTOCOL_VERSION,
            scenario_schema: SCHEMA_VERSION,
        }
    }
}

pub fn router(config: AppConfig) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/health", get(|| async { Json(Health::current()) }))
        .fallback_service(ServeDir::new(config.assets))
}

pub async fn bind(addr: &str) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

pub async fn serve(
    listener: TcpListener,
    config: AppConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(config)).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C.
pub async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

async fn ws_upgrade(ws: WebSocketUpgrade) -> impl IntoResponse {
    ws.on_upgrade(|socket| run_connection(socket, Connection::default()))
}

async fn send_all(socket: &mut WebSocket, messages: Vec<ServerMessage>) -> Result<(), axum::Error> {
    for msg in messages {
        socket.send(Message::Text(msg.encode().into())).await?;
    }
    Ok(())
}

/// Serial message loop. Scenario playback is interleaved between frames at
/// the scenario rate.
pub async fn run_connection(mut socket: WebSocket, mut conn: Connection) {
    let mut ticker: Option<tokio::time::Interval> = None;
    loop {
        if conn.is_playing() && ticker.is_none() {
            let rate = conn.playback_rate().unwrap_or(30.0);
            ticker = Some(tokio::time::interval(Duration::from_secs_f64(1.0 / rate)));
        } else if !conn.is_playing() {
            ticker = None;
        }
        let replies = tokio::select! {
            frame = socket.recv() => match frame {
                Some(Ok(Message::Text(text))) => conn.handle_text(text.as_str()),
                Some(Ok(Message::Binary(_))) => vec![ServerMessage::Error { code: 400, detail: "binary frames are not supported".into() }],
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => continue,
            },
            _ = async { ticker.as_mut().expect("ticker set").tick().await }, if ticker.is_some() => {
                conn.step_playback().unwrap_or_default()
            }
        };
        if send_all(&mut socket, replies).await.is_err() {
            break;
        }
    }
}
