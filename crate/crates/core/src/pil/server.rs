use super::{encode_error, encode_frame, encode_summary, ClientMessage, ControlInput, Session};
use crate::config::{parse_trigger, ToolkitConfig};
use crate::cooperation::MonitorParams;
use crate::sim::{PedestrianKind, ScenarioId, TrialConfig};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use std::sync::Arc;
use std::time::Duration;
use tokio::sync::{mpsc, watch};
use tokio::time::{sleep_until, Instant};

const PAGE: &str = include_str!("page.html");
const OUTBOUND_QUEUE: usize = 256;

/// Shared, read-only settings for every session.
#[derive(Debug, Clone)]
pub struct ServiceState {
    pub config: ToolkitConfig,
    pub monitor: MonitorParams,
}

impl ServiceState {
    pub fn new(config: ToolkitConfig, monitor: MonitorParams) -> Self {
        Self { config, monitor }
    }

    fn trial(&self, scenario: &str, policy: &str) -> Result<TrialConfig, String> {
        let scenario: ScenarioId = scenario.parse().map_err(|e| format!("{e}"))?;
        let trigger = parse_trigger(policy).map_err(|e| e.to_string())?;
        let mut cfg = self.config.trial(scenario, trigger, PedestrianKind::Manual, 0);
        cfg.monitor = self.monitor;
        Ok(cfg)
    }
}

pub fn router(state: ServiceState) -> Router {
    Router::new()
        .route("/", get(|| async { Html(PAGE) }))
        .route("/healthz", get(|| async { "ok" }))
        .route("/ws", get(ws_handler))
        .with_state(Arc::new(state))
}

pub async fn serve(listener: tokio::net::TcpListener, state: ServiceState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<Arc<ServiceState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| session_task(socket, state))
}

struct StartRequest {
    scenario: String,
    policy: String,
}

async fn session_task(socket: WebSocket, state: Arc<ServiceState>) {
    let (mut sink, mut stream) = socket.split();
    let (control_tx, control_rx) = watch::channel(None::<ControlInput>);
    let (start_tx, start_rx) = mpsc::channel::<StartRequest>(4);
    let (out_tx, mut out_rx) = mpsc::channel::<String>(OUTBOUND_QUEUE);

    let writer = tokio::spawn(async move {
        while let Some(text) = out_rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    let errors = out_tx.clone();
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            let text = match msg {
                Message::Text(t) => t,
                Message::Close(_) => break,
                _ => continue,
            };
            match serde_json::from_str::<ClientMessage>(&text) {
                Ok(ClientMessage::Control { target_speed, timestamp }) => {
                    control_tx.send_replace(Some(ControlInput { target_speed, timestamp }));
                }
                Ok(ClientMessage::Start { scenario, policy }) => {
                    if start_tx.send(StartRequest { scenario, policy }).await.is_err() {
                        break;
                    }
                }
                Err(e) => {
                    let _ = errors.try_send(encode_error(&format!("bad message: {e}")));
                }
            }
        }
    });

    run_sessions(&state, control_rx, start_rx, out_tx).await;
    reader.abort();
    let _ = writer.await;
}

/// The authoritative loop: waits for a start request, then steps the
/// session every tick until it terminates or a new start arrives.
async fn run_sessions(
    state: &ServiceState,
    mut control: watch::Receiver<Option<ControlInput>>,
    mut starts: mpsc::Receiver<StartRequest>,
    out: mpsc::Sender<String>,
) {
    let mut pending = starts.recv().await;
    while let Some(req) = pending.take() {
        let cfg = match state.trial(&req.scenario, &req.policy) {
            Ok(c) => c,
            Err(e) => {
                let _ = out.send(encode_error(&e)).await;
                pending = starts.recv().await;
                continue;
            }
        };
        let tick = Duration::from_secs_f64(cfg.dt);
        let mut session = Session::new(cfg).expect("service trial config is valid");
        // only controls sent after this start count
        control.mark_unchanged();
        let mut latest: Option<ControlInput> = None;
        if out.send(encode_frame(&session.current())).await.is_err() {
            return;
        }
        let mut deadline = Instant::now() + tick;
        loop {
            tokio::select! {
                biased;
                r = starts.recv() => match r {
                    Some(r) => {
                        pending = Some(r);
                        break;
                    }
                    None => return,
                },
                _ = sleep_until(deadline) => {}
            }
            if control.has_changed().unwrap_or(false) {
                latest = *control.borrow_and_update();
            }
            let frame = session.step(latest.as_ref());
            if out.send(encode_frame(&frame)).await.is_err() {
                return;
            }
            if session.is_finished() {
                if let Some(m) = session.summary() {
                    let _ = out.send(encode_summary(&m)).await;
                }
                break;
            }
            // fixed step: if we fell behind by more than a tick, let wall time
            // slip instead of bursting steps to catch up
            deadline += tick;
            let now = Instant::now();
            if deadline + tick < now {
                deadline = now;
            }
        }
        if pending.is_none() {
            pending = starts.recv().await;
        }
    }
}
