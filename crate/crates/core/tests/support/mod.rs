//! Minimal HTTP/1.1 server for exercising the remote clients.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

pub struct Request {
    pub method: String,
    pub path: String,
    pub body: Vec<u8>,
}

pub struct Response {
    pub status: u16,
    pub body: String,
}

impl Response {
    pub fn json(body: serde_json::Value) -> Self {
        Self {
            status: 200,
            body: body.to_string(),
        }
    }

    pub fn error(status: u16, message: &str) -> Self {
        Self {
            status,
            body: serde_json::json!({ "error": message }).to_string(),
        }
    }
}

pub struct MockServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    pub peak_in_flight: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let mut parts = line.split_whitespace();
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();
    let mut length = 0usize;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header).ok()?;
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body).ok()?;
    Some(Request { method, path, body })
}

/// Serves `handler` on an ephemeral local port until the process exits.
pub fn serve<F>(handler: F) -> MockServer
where
    F: Fn(&Request) -> Response + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let url = format!("http://{}", listener.local_addr().unwrap());
    let handler = Arc::new(handler);
    let requests = Arc::new(AtomicUsize::new(0));
    let in_flight = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    {
        let requests = requests.clone();
        let peak = peak.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let handler = handler.clone();
                let requests = requests.clone();
                let in_flight = in_flight.clone();
                let peak = peak.clone();
                thread::spawn(move || {
                    let Some(req) = read_request(&mut stream) else { return };
                    requests.fetch_add(1, Ordering::SeqCst);
                    let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    let resp = handler(&req);
                    in_flight.fetch_sub(1, Ordering::SeqCst);
                    let reason = if resp.status < 400 { "OK" } else { "Error" };
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                        resp.status,
                        reason,
                        resp.body.len(),
                        resp.body
                    );
                    let _ = stream.flush();
                });
            }
        });
    }
    MockServer {
        url,
        requests,
        peak_in_flight: peak,
    }
}

/// An embedding sidecar backed by the hash embedder, with a small delay so
/// concurrent batches overlap.
pub fn embedding_sidecar(dim: usize) -> MockServer {
    serve(move |req| match (req.method.as_str(), req.path.as_str()) {
        ("GET", "/health") => Response::json(serde_json::json!({ "status": "ok", "model": "mock-hash", "dim": dim })),
        ("POST", "/embed") => {
            let body: serde_json::Value = match serde_json::from_slice(&req.body) {
                Ok(v) => v,
                Err(e) => return Response::error(400, &e.to_string()),
            };
            let Some(texts) = body["texts"].as_array() else {
                return Response::error(400, "missing texts");
            };
            thread::sleep(std::time::Duration::from_millis(20));
            let vectors: Vec<Vec<f64>> = texts
                .iter()
                .map(|t| pocketlens::embed::hash_embed(t.as_str().unwrap_or(""), dim, 0).unwrap_or(vec![0.0; dim]))
                .collect();
            Response::json(serde_json::json!({ "dim": dim, "vectors": vectors }))
        }
        _ => Response::error(404, "not found"),
    })
}
