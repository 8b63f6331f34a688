use clap::Parser;
use orthomodel_service::{router, AppState};
use std::net::{Ipv4Addr, SocketAddr};

#[derive(Debug, Parser)]
#[command(name = "orthomodel-service", version, about = "Local session service for interactive orthomodel editing")]
struct Args {
    /// Port on the loopback interface.
    #[arg(long, env = "ORTHOMODEL_PORT", default_value_t = 7878)]
    port: u16,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, args.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::default())).await
}
