use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use cpbo_service::{router, AppState, Registry, Settings, Store};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "cpbo-service", about = "Serve interactive preference optimization sessions")]
struct Args {
    #[arg(long, env = "CPBO_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Directory holding one JSON snapshot per session.
    #[arg(long, env = "CPBO_DATA_DIR", default_value = "sessions")]
    data_dir: PathBuf,
    #[arg(long, env = "CPBO_BUDGET", default_value_t = 50)]
    budget: usize,
    #[arg(long, env = "CPBO_WARM_POINTS", default_value_t = 200)]
    warm_points: usize,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let store = Store::open(&args.data_dir)?;
    let settings = Settings { default_budget: args.budget, default_warm_points: args.warm_points };
    let state = Arc::new(AppState::new(store, Registry::with_defaults(), settings));
    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    tracing::info!(addr = %args.listen, dir = %args.data_dir.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
