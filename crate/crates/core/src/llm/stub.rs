//! Minimal scripted HTTP server standing in for a chat-completion endpoint.
//!
//! Replies are served in script order; once the script is exhausted the last
//! reply repeats. Intended for tests and offline demos.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

#[derive(Clone, Debug)]
pub struct ScriptedReply {
    pub status: u16,
    pub body: String,
}

impl ScriptedReply {
    pub fn status(status: u16) -> ScriptedReply {
        ScriptedReply {
            status,
            body: format!("{{\"error\":\"status {status}\"}}"),
        }
    }

    /// A 200 response whose assistant message is `content`.
    pub fn content(content: &str) -> ScriptedReply {
        let body = serde_json::json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]
        });
        ScriptedReply {
            status: 200,
            body: body.to_string(),
        }
    }
}

type Responder = dyn Fn(&serde_json::Value) -> ScriptedReply + Send + Sync;

struct Shared {
    script: Vec<ScriptedReply>,
    responder: Option<Box<Responder>>,
    bodies: Mutex<Vec<String>>,
}

pub struct StubServer {
    addr: std::net::SocketAddr,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(script: Vec<ScriptedReply>) -> StubServer {
        assert!(!script.is_empty(), "stub script must not be empty");
        Self::spawn(Shared {
            script,
            responder: None,
            bodies: Mutex::new(Vec::new()),
        })
    }

    /// Serve replies computed from each parsed request body.
    pub fn with_responder(
        f: impl Fn(&serde_json::Value) -> ScriptedReply + Send + Sync + 'static,
    ) -> StubServer {
        Self::spawn(Shared {
            script: Vec::new(),
            responder: Some(Box::new(f)),
            bodies: Mutex::new(Vec::new()),
        })
    }

    fn spawn(shared: Shared) -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let addr = listener.local_addr().expect("stub address");
        let shared = Arc::new(shared);
        let stop = Arc::new(AtomicBool::new(false));
        let (s, st) = (shared.clone(), stop.clone());
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if st.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let _ = serve(stream, &s);
                }
            }
        });
        StubServer {
            addr,
            shared,
            stop,
            handle: Some(handle),
        }
    }

    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    /// Number of requests received so far.
    pub fn requests(&self) -> usize {
        self.shared.bodies.lock().unwrap().len()
    }

    pub fn request_bodies(&self) -> Vec<String> {
        self.shared.bodies.lock().unwrap().clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.is_empty() {
        return Ok(());
    }
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    let body = String::from_utf8_lossy(&body).into_owned();
    let reply = {
        let mut bodies = shared.bodies.lock().unwrap();
        bodies.push(body.clone());
        match &shared.responder {
            Some(f) => f(&serde_json::from_str(&body).unwrap_or(serde_json::Value::Null)),
            None => shared.script[(bodies.len() - 1).min(shared.script.len() - 1)].clone(),
        }
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    )?;
    stream.flush()
}
