//! Standalone server binary.

use std::net::SocketAddr;

use clap::Parser;

use restpilot_core::catalog::parse_catalog;
use restpilot_server::{spawn, AppState};

#[derive(Parser)]
#[command(name = "restpilot-server", about = "Serve the engine API over HTTP")]
struct Args {
    /// Address to bind; port 0 picks a free one.
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// OpenAPI document to register at startup, as NAME=PATH. Repeatable.
    #[arg(long = "catalog", value_name = "NAME=PATH")]
    catalogs: Vec<String>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let state = AppState::new();
    for pair in &args.catalogs {
        let (name, path) = pair
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("--catalog wants NAME=PATH, got '{pair}'"))?;
        let text = std::fs::read_to_string(path)?;
        state.register(parse_catalog(name, &text)?).await;
    }
    let (addr, handle) = spawn(args.addr, state).await?;
    println!("listening on http://{addr}");
    handle.await?;
    Ok(())
}
