//! Pedestrian-in-the-loop, two ways.
//!
//! Without arguments a session is driven in-process by a scripted "human"
//! who hesitates, then walks, and the recorded control stream is replayed
//! offline to show the log is reproduced exactly.
//!
//! With `serve` the WebSocket service starts and the browser client is at
//! http://127.0.0.1:8080/ (arrow keys or the slider set the walking speed).
//!
//!     cargo run --example pil_session
//!     cargo run --example pil_session -- serve

use crosswalk_ir::config::ToolkitConfig;
use crosswalk_ir::cooperation::{MonitorParams, TriggerKind};
use crosswalk_ir::pil::{encode_frame, recorded_controls, replay_controls, serve, ControlInput, ServiceState, Session};
use crosswalk_ir::sim::{PedestrianKind, ScenarioId, TrialConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if std::env::args().nth(1).as_deref() == Some("serve") {
        let rt = tokio::runtime::Runtime::new()?;
        return rt.block_on(async {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:8080").await?;
            println!("open http://{}/", listener.local_addr()?);
            serve(listener, ServiceState::new(ToolkitConfig::default(), MonitorParams::default())).await?;
            Ok(())
        });
    }

    let cfg = TrialConfig::new(ScenarioId::S2, TriggerKind::IntentRecognition, PedestrianKind::Manual, 0);
    let mut session = Session::new(cfg)?;
    let mut step = 0;
    while !session.is_finished() {
        // edge forward, stop when the car is close, then go once it has passed
        let speed = match session.current() {
            f if f.av.distance > 12.0 => 1.0,
            f if f.av.distance > -2.0 => 0.0,
            _ => 1.5,
        };
        let frame = session.step(Some(&ControlInput::new(speed)));
        if step % 20 == 0 || session.is_finished() {
            println!("{}", encode_frame(&frame));
        }
        step += 1;
    }
    let log = session.log();
    println!("\nsummary {}", serde_json::to_string(&session.summary())?);
    let replayed = replay_controls(session.config(), &recorded_controls(&log))?;
    println!("replayed log identical: {}", replayed.to_ndjson() == log.to_ndjson());
    Ok(())
}
