//! axum binding for [`Service`].

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::IntoResponse;
use axum::Router;
use tokio::net::TcpListener;

use super::{Config, Service};

pub fn router(service: Arc<Service>) -> Router {
    Router::new().fallback(move |method: Method, uri: Uri, body: Bytes| {
        let service = Arc::clone(&service);
        async move {
            let path = uri.path().to_owned();
            let res = tokio::task::spawn_blocking(move || service.handle(method.as_str(), &path, &body))
                .await
                .expect("handler does not panic");
            let status = StatusCode::from_u16(res.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (
                status,
                [(header::CONTENT_TYPE, "application/json")],
                res.body.to_string(),
            )
                .into_response()
        }
    })
}

/// Serves on an already bound listener until the task is dropped, evicting
/// idle sessions once a minute.
pub async fn serve(service: Arc<Service>, listener: TcpListener) -> std::io::Result<()> {
    let gc = Arc::clone(&service);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            gc.gc_sessions(Instant::now());
        }
    });
    axum::serve(listener, router(service)).await
}

/// Binds `0.0.0.0:<port>` and serves forever.
pub async fn run(config: Config) -> std::io::Result<()> {
    let listener = TcpListener::bind(("0.0.0.0", config.port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    serve(Arc::new(Service::new(config)), listener).await
}
