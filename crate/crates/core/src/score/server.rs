//! Serves any [`EmbeddingBackend`] over the embedding wire protocol.
//!
//! Used to expose the built-in test backend as a local service, and by the
//! protocol tests to exercise [`super::HttpBackend`] end to end.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Serialize;
use tiny_http::{Header, Method, Request, Response, Server};

use super::backend::{BackendError, EmbeddingBackend};
use super::http::{decode_pcm, AudioRequest, AudioResponse, ErrorResponse, TextResponse};

pub struct BackendServer {
    server: Arc<Server>,
    ready: Arc<AtomicBool>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl BackendServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts serving on
    /// a background thread.
    pub fn start<B>(backend: B, addr: &str) -> std::io::Result<Self>
    where
        B: EmbeddingBackend + 'static,
    {
        let server = Arc::new(Server::http(addr).map_err(std::io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("server is not bound to an IP socket"))?;
        let ready = Arc::new(AtomicBool::new(true));
        let worker = {
            let server = server.clone();
            let ready = ready.clone();
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    handle(&backend, &ready, request);
                }
            })
        };
        Ok(Self { server, ready, addr, worker: Some(worker) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// While not ready every request is answered with 503.
    pub fn set_ready(&self, ready: bool) {
        self.ready.store(ready, Ordering::SeqCst);
    }

    /// Blocks serving requests until the process exits.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for BackendServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn json_response<T: Serialize>(status: u16, body: &T) -> Response<std::io::Cursor<Vec<u8>>> {
    let bytes = serde_json::to_vec(body).expect("response serializes");
    Response::from_data(bytes)
        .with_status_code(status)
        .with_header(Header::from_bytes("Content-Type", "application/json").expect("static header"))
}

fn error_response(status: u16, message: impl Into<String>) -> Response<std::io::Cursor<Vec<u8>>> {
    json_response(status, &ErrorResponse { error: message.into() })
}

fn backend_error(e: BackendError) -> Response<std::io::Cursor<Vec<u8>>> {
    match e {
        BackendError::Rejected { status, message } => error_response(status, message),
        other => error_response(500, other.to_string()),
    }
}

#[derive(serde::Deserialize)]
struct TextRequestOwned {
    texts: Vec<String>,
}

fn route<B: EmbeddingBackend>(backend: &B, method: &Method, path: &str, body: &[u8]) -> Response<std::io::Cursor<Vec<u8>>> {
    match (method, path) {
        (Method::Get, "/v1/info") => match backend.info() {
            Ok(info) => json_response(200, &info),
            Err(e) => backend_error(e),
        },
        (Method::Post, "/v1/embed/text") => {
            let req: TextRequestOwned = match serde_json::from_slice(body) {
                Ok(r) => r,
                Err(e) => return error_response(400, format!("malformed request: {e}")),
            };
            if req.texts.iter().any(|t| t.trim().is_empty()) {
                return error_response(400, "texts must be non-empty strings");
            }
            match backend.embed_texts(&req.texts) {
                Ok(embeddings) => json_response(200, &TextResponse { embeddings }),
                Err(e) => backend_error(e),
            }
        }
        (Method::Post, "/v1/embed/audio") => {
            let req: AudioRequest = match serde_json::from_slice(body) {
                Ok(r) => r,
                Err(e) => return error_response(400, format!("malformed request: {e}")),
            };
            let pcm = match decode_pcm(&req.audio_b64) {
                Ok(p) => p,
                Err(msg) => return error_response(400, msg),
            };
            if pcm.iter().any(|s| !s.is_finite()) {
                return error_response(400, "audio contains non-finite samples");
            }
            match backend.embed_audio(&pcm, req.sample_rate) {
                Ok(embedding) => json_response(200, &AudioResponse { embedding }),
                Err(e) => backend_error(e),
            }
        }
        (_, "/v1/info" | "/v1/embed/text" | "/v1/embed/audio") => error_response(405, "method not allowed"),
        _ => error_response(404, format!("no route for {path}")),
    }
}

fn handle<B: EmbeddingBackend>(backend: &B, ready: &AtomicBool, mut request: Request) {
    let response = if !ready.load(Ordering::SeqCst) {
        error_response(503, "model loading")
    } else {
        let mut body = Vec::new();
        match request.as_reader().read_to_end(&mut body) {
            Ok(_) => {
                let path = request.url().split('?').next().unwrap_or("").to_string();
                route(backend, request.method(), &path, &body)
            }
            Err(e) => error_response(400, format!("unreadable body: {e}")),
        }
    };
    let _ = request.respond(response);
}
