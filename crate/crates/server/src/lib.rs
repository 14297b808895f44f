//! HTTP front end for a [`TriageSession`]: the review queue API plus the
//! static files of the browser UI.

mod api;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use pubdev_core::triage::TriageSession;

pub use api::{router, ItemView, LabelRequest, LabelResponse, MetricsView};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server stopped abnormally: {0}")]
    Serve(String),
    #[error(transparent)]
    Core(#[from] pubdev_core::Error),
}

pub type SharedSession = Arc<Mutex<TriageSession>>;

/// Router state: the session and an optional directory holding the UI bundle.
#[derive(Clone)]
pub struct AppState {
    pub session: SharedSession,
    pub ui_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(session: TriageSession, ui_dir: Option<PathBuf>) -> AppState {
        AppState {
            session: Arc::new(Mutex::new(session)),
            ui_dir,
        }
    }
}

/// A running server. Dropping it without calling [`TriageServer::shutdown`]
/// leaves the task running until the runtime stops.
pub struct TriageServer {
    local_addr: SocketAddr,
    session: SharedSession,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl TriageServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn session(&self) -> &SharedSession {
        &self.session
    }

    /// Stops accepting connections, lets in-flight requests finish and syncs
    /// the label store.
    pub async fn shutdown(mut self) -> Result<(), ServerError> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match (&mut self.task).await {
            Ok(Ok(())) => {}
            Ok(Err(e)) => return Err(ServerError::Serve(e.to_string())),
            Err(e) => return Err(ServerError::Serve(e.to_string())),
        }
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        session.sync()?;
        log::info!("triage server stopped, label store synced");
        Ok(())
    }
}

/// Binds `addr` and serves the API in the background.
pub async fn serve_triage(
    session: TriageSession,
    addr: &str,
    ui_dir: Option<PathBuf>,
) -> Result<TriageServer, ServerError> {
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServerError::Bind {
            addr: addr.to_owned(),
            source,
        })?;
    let local_addr = listener.local_addr().map_err(|source| ServerError::Bind {
        addr: addr.to_owned(),
        source,
    })?;
    let state = AppState::new(session, ui_dir);
    let session = state.session.clone();
    let (stop, stopped) = oneshot::channel::<()>();
    let app = router(state);
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await
    });
    log::info!("triage server listening on http://{local_addr}");
    Ok(TriageServer {
        local_addr,
        session,
        stop: Some(stop),
        task,
    })
}
