#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::time::Duration;

/// What a stub does with one request.
pub enum Reply {
    Json(u16, String),
    /// Keep the connection open without answering.
    Hang(Duration),
}

#[derive(Debug, Clone)]
pub struct Seen {
    pub headers: Vec<(String, String)>,
    pub body: String,
}

pub struct Stub {
    pub url: String,
    pub seen: Arc<Mutex<Vec<Seen>>>,
}

impl Stub {
    pub fn count(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }
}

/// Minimal HTTP/1.1 server; `handler` gets the 0-based request index and
/// the request body.
pub fn stub<F>(handler: F) -> Stub
where
    F: Fn(usize, &str) -> Reply + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen: Arc<Mutex<Vec<Seen>>> = Arc::default();
    let handler = Arc::new(handler);
    let log = seen.clone();
    std::thread::spawn(move || {
        for conn in listener.incoming() {
            let Ok(conn) = conn else { break };
            let (handler, log) = (handler.clone(), log.clone());
            std::thread::spawn(move || serve_one(conn, &*handler, &log));
        }
    });
    Stub { url, seen }
}

fn serve_one(mut conn: TcpStream, handler: &dyn Fn(usize, &str) -> Reply, log: &Mutex<Vec<Seen>>) {
    let mut reader = BufReader::new(conn.try_clone().unwrap());
    let mut headers = Vec::new();
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.trim_end().split_once(':') {
            headers.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
    }
    let len: usize = headers
        .iter()
        .find(|(k, _)| k == "content-length")
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(0);
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).unwrap();
    let body = String::from_utf8(body).unwrap();
    let index = {
        let mut l = log.lock().unwrap();
        l.push(Seen {
            headers,
            body: body.clone(),
        });
        l.len() - 1
    };
    match handler(index, &body) {
        Reply::Json(status, payload) => {
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            let _ = conn.write_all(resp.as_bytes());
        }
        Reply::Hang(d) => std::thread::sleep(d),
    }
}

/// A running service on an ephemeral port; dropping it stops the runtime.
pub struct Service {
    pub base: String,
    pub _rt: tokio::runtime::Runtime,
}

pub fn spawn_service(state: counterframe::service::AppState) -> Service {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let app = counterframe::service::router(state);
    rt.spawn(async move { axum::serve(listener, app).await });
    Service { base, _rt: rt }
}

/// Status and body of a request, whether or not the status is 2xx.
pub fn call(req: ureq::Request, body: Option<&str>) -> (u16, String) {
    let res = match body {
        Some(b) => req.set("Content-Type", "application/json").send_string(b),
        None => req.call(),
    };
    match res {
        Ok(r) => (r.status(), r.into_string().unwrap()),
        Err(ureq::Error::Status(code, r)) => (code, r.into_string().unwrap()),
        Err(e) => panic!("transport error: {e}"),
    }
}

/// Splits a server-sent event stream into `(event, data)` pairs.
pub fn sse_events(body: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for block in body.split("\n\n").filter(|b| !b.trim().is_empty()) {
        let mut event = String::from("message");
        let mut data = Vec::new();
        for line in block.lines() {
            if let Some(v) = line.strip_prefix("event:") {
                event = v.trim_start().to_string();
            } else if let Some(v) = line.strip_prefix("data:") {
                data.push(v.strip_prefix(' ').unwrap_or(v));
            }
        }
        out.push((event, data.join("\n")));
    }
    out
}

/// Rebuilds a run from its streamed step records and the `done` summary.
pub fn reassemble(events: &[(String, String)]) -> counterframe_core::CounterfactualRun {
    let records: Vec<serde_json::Value> = events
        .iter()
        .filter(|(e, _)| e == "step")
        .map(|(_, d)| serde_json::from_str(d).unwrap())
        .collect();
    let (_, done) = events.iter().find(|(e, _)| e == "done").expect("done event");
    let mut summary: serde_json::Value = serde_json::from_str(done).unwrap();
    summary["records"] = serde_json::Value::Array(records);
    serde_json::from_value(summary).unwrap()
}
