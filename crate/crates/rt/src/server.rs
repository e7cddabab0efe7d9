//! Control and telemetry over WebSocket, plus static files for the browser panel.
//!
//! One thread owns the listener and every client. Each text frame a client
//! sends is a control message and gets exactly one reply frame; telemetry
//! frames are broadcast to all clients as they leave the audio thread. Plain
//! HTTP requests on the same port get `/status` as JSON, or files from the UI
//! directory when one is configured.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use tungstenite::handshake::derive_accept_key;
use tungstenite::protocol::Role;
use tungstenite::{Message, WebSocket};

use crate::session::{ControlHandle, TelemetryQueue};

const MAX_REQUEST_HEAD: usize = 16 * 1024;
const IDLE_SLEEP: Duration = Duration::from_millis(2);

pub struct ControlServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    clients: Arc<AtomicUsize>,
    thread: Option<JoinHandle<()>>,
}

impl ControlServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Connected WebSocket clients.
    pub fn clients(&self) -> usize {
        self.clients.load(Ordering::Relaxed)
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Release);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ControlServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Serves `control` (and `telemetry`, when given) on `listener` until stopped.
pub fn serve_control(
    listener: TcpListener,
    control: ControlHandle,
    telemetry: Option<TelemetryQueue>,
    ui_dir: Option<PathBuf>,
) -> io::Result<ControlServer> {
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let clients = Arc::new(AtomicUsize::new(0));
    let mut worker = Worker {
        listener,
        control,
        telemetry,
        ui_dir,
        clients: Vec::new(),
        count: clients.clone(),
    };
    let flag = stop.clone();
    let thread = std::thread::Builder::new()
        .name("angus-control".into())
        .spawn(move || {
            while !flag.load(Ordering::Acquire) {
                if !worker.poll() {
                    std::thread::sleep(IDLE_SLEEP);
                }
            }
            for mut ws in worker.clients.drain(..) {
                let _ = ws.close(None);
                let _ = ws.flush();
            }
        })?;
    Ok(ControlServer { addr, stop, clients, thread: Some(thread) })
}

struct Worker {
    listener: TcpListener,
    control: ControlHandle,
    telemetry: Option<TelemetryQueue>,
    ui_dir: Option<PathBuf>,
    clients: Vec<WebSocket<TcpStream>>,
    count: Arc<AtomicUsize>,
}

fn would_block(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if io.kind() == io::ErrorKind::WouldBlock)
}

impl Worker {
    /// One pass over the listener, the clients and the telemetry queue.
    /// Returns whether anything happened.
    fn poll(&mut self) -> bool {
        let mut busy = false;
        loop {
            match self.listener.accept() {
                Ok((stream, _)) => {
                    busy = true;
                    if let Ok(Some(ws)) = self.accept(stream) {
                        self.clients.push(ws);
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => break,
                Err(_) => break,
            }
        }

        let control = &self.control;
        self.clients.retain_mut(|ws| loop {
            match ws.read() {
                Ok(Message::Text(text)) => {
                    busy = true;
                    let reply = control.apply_text(text.as_str());
                    if let Err(e) = ws.send(Message::text(reply.to_string())) {
                        if !would_block(&e) {
                            break false;
                        }
                    }
                }
                Ok(Message::Close(_)) => break false,
                Ok(_) => busy = true,
                Err(e) if would_block(&e) => break true,
                Err(_) => break false,
            }
        });

        if let Some(q) = &self.telemetry {
            while let Some(frame) = q.pop() {
                busy = true;
                let Ok(text) = serde_json::to_string(&frame) else { continue };
                self.clients.retain_mut(|ws| match ws.send(Message::text(text.clone())) {
                    Ok(()) => true,
                    Err(e) => would_block(&e),
                });
            }
        }
        self.clients.retain_mut(|ws| match ws.flush() {
            Ok(()) => true,
            Err(e) => would_block(&e),
        });
        self.count.store(self.clients.len(), Ordering::Relaxed);
        busy
    }

    /// Reads the HTTP request head. WebSocket upgrades become clients; anything
    /// else is answered and closed.
    fn accept(&self, mut stream: TcpStream) -> io::Result<Option<WebSocket<TcpStream>>> {
        stream.set_nonblocking(false)?;
        stream.set_read_timeout(Some(Duration::from_secs(2)))?;
        let mut buf = Vec::with_capacity(1024);
        let mut chunk = [0u8; 1024];
        let head_end = loop {
            let n = stream.read(&mut chunk)?;
            if n == 0 {
                return Ok(None);
            }
            buf.extend_from_slice(&chunk[..n]);
            if let Some(i) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                break i + 4;
            }
            if buf.len() > MAX_REQUEST_HEAD {
                respond(&mut stream, "431 Request Header Fields Too Large", "text/plain", b"")?;
                return Ok(None);
            }
        };
        let head = String::from_utf8_lossy(&buf[..head_end]).into_owned();
        let request = Request::parse(&head);

        match request.header("sec-websocket-key") {
            Some(key) if request.header("upgrade").is_some_and(|u| u.eq_ignore_ascii_case("websocket")) => {
                let response = format!(
                    "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Accept: {}\r\n\r\n",
                    derive_accept_key(key.as_bytes())
                );
                stream.write_all(response.as_bytes())?;
                stream.set_read_timeout(None)?;
                stream.set_nonblocking(true)?;
                let rest = buf[head_end..].to_vec();
                Ok(Some(WebSocket::from_partially_read(stream, rest, Role::Server, None)))
            }
            _ => {
                self.serve_http(&mut stream, &request)?;
                Ok(None)
            }
        }
    }

    fn serve_http(&self, stream: &mut TcpStream, request: &Request) -> io::Result<()> {
        if request.method != "GET" && request.method != "HEAD" {
            return respond(stream, "405 Method Not Allowed", "text/plain", b"");
        }
        let path = request.path.split(['?', '#']).next().unwrap_or("/");
        if path == "/status" {
            let body = self.control.status().to_string();
            return respond(stream, "200 OK", "application/json", body.as_bytes());
        }
        let Some(root) = &self.ui_dir else {
            return match path {
                "/" => respond(stream, "200 OK", "text/plain", b"angus control server: connect a WebSocket to this port\n"),
                _ => respond(stream, "404 Not Found", "text/plain", b"not found\n"),
            };
        };
        match static_file(root, path) {
            Some((body, mime)) => respond(stream, "200 OK", mime, &body),
            None => respond(stream, "404 Not Found", "text/plain", b"not found\n"),
        }
    }
}

struct Request {
    method: String,
    path: String,
    headers: Vec<(String, String)>,
}

impl Request {
    fn parse(head: &str) -> Self {
        let mut lines = head.split("\r\n");
        let mut first = lines.next().unwrap_or("").split_whitespace();
        let method = first.next().unwrap_or("").to_string();
        let path = first.next().unwrap_or("/").to_string();
        let headers = lines
            .filter_map(|l| l.split_once(':'))
            .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string()))
            .collect();
        Request { method, path, headers }
    }

    fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

fn respond(stream: &mut TcpStream, status: &str, mime: &str, body: &[u8]) -> io::Result<()> {
    let head = format!(
        "HTTP/1.1 {status}\r\nContent-Type: {mime}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(body)?;
    stream.flush()
}

fn mime_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "wasm" => "application/wasm",
        _ => "application/octet-stream",
    }
}

/// File under `root` for a URL path; `None` for anything escaping the root.
fn static_file(root: &Path, url_path: &str) -> Option<(Vec<u8>, &'static str)> {
    let rel = Path::new(url_path.trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    let mut path = root.join(rel);
    if path.is_dir() {
        path.push("index.html");
    }
    let body = std::fs::read(&path).ok()?;
    Some((body, mime_type(&path)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_head_parsing() {
        let r = Request::parse("GET /index.html?x=1 HTTP/1.1\r\nHost: a\r\nUpgrade: WebSocket\r\n\r\n");
        assert_eq!(r.method, "GET");
        assert_eq!(r.path, "/index.html?x=1");
        assert_eq!(r.header("upgrade"), Some("WebSocket"));
        assert_eq!(r.header("host"), Some("a"));
        assert_eq!(r.header("missing"), None);
    }

    #[test]
    fn static_paths_stay_inside_the_root() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("index.html"), "<p>hi</p>").unwrap();
        std::fs::write(dir.path().join("app.js"), "1").unwrap();
        assert_eq!(static_file(dir.path(), "/").unwrap().1, "text/html; charset=utf-8");
        assert_eq!(static_file(dir.path(), "/app.js").unwrap().0, b"1");
        assert!(static_file(dir.path(), "/../etc/passwd").is_none());
        assert!(static_file(dir.path(), "/nope.css").is_none());
    }
}
