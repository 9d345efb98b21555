//! HTTP/JSON review service over the frame selection engine.
//!
//! One process serves one dataset for one reviewer. Every endpoint is a thin
//! shell over [`afse_core::pipeline`], so service and batch outputs agree for
//! equal configuration.

mod error;
mod routes;
mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use state::{AppState, ServiceConfig};

/// Builds the application router. `ui_dir`, when given, is served for every
/// path outside `/api`.
pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = routes::api().with_state(state);
    match ui_dir {
        Some(dir) => {
            api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true))
        }
        None => api,
    }
}

/// Loads the dataset in the background and serves on `listener` until the
/// process stops. Requests made before loading finishes receive 503.
pub async fn serve_on(
    listener: TcpListener,
    config: ServiceConfig,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let state = AppState::new(config);
    let loader = Arc::clone(&state);
    tokio::task::spawn_blocking(move || match loader.initialize() {
        Ok(n) => tracing::info!(frames = n, "dataset loaded"),
        Err(e) => tracing::error!("dataset failed to load: {e}"),
    });
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, ui_dir)).await
}

pub async fn serve(
    addr: SocketAddr,
    config: ServiceConfig,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    serve_on(TcpListener::bind(addr).await?, config, ui_dir).await
}
