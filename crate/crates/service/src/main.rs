use std::net::SocketAddr;
use std::path::PathBuf;

use axv_explain_service::{serve, ServiceConfig};
use clap::Parser;
use tracing_subscriber::EnvFilter;

/// Why / why-not chat service for remote autonomous vehicle missions.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Listen address.
    #[arg(long, env = "AXV_EXPLAIN_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Static UI assets served at `/`.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Append each mission's transcript to `<dir>/<mission id>.jsonl`.
    #[arg(long)]
    transcript_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let config = ServiceConfig { ui_dir: args.ui_dir, transcript_dir: args.transcript_dir };
    serve(listener, config, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
