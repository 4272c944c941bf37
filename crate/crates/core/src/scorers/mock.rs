//! A local stand-in for the external scoring service, speaking the same
//! wire protocol. Used by tests and for offline pipeline runs.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::scorers::external::{ErrorBody, ScoreRequestBody, ScoreResponseBody, WireScore};

/// What the mock answers to one `/score` request.
#[derive(Clone, Debug)]
pub struct MockReply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl MockReply {
    /// Scores every pair with `f`, listing them in reverse order so
    /// clients that match by position instead of id get caught.
    pub fn scores(req: &ScoreRequestBody, f: impl Fn(&str, &str) -> f64) -> Self {
        let scores = req
            .pairs
            .iter()
            .rev()
            .map(|p| WireScore {
                id: p.id.clone(),
                entail: f(&p.premise, &p.hypothesis),
            })
            .collect();
        MockReply {
            status: 200,
            body: serde_json::to_string(&ScoreResponseBody { scores }).unwrap(),
            delay: Duration::ZERO,
        }
    }

    pub fn error(status: u16, message: &str) -> Self {
        MockReply {
            status,
            body: serde_json::to_string(&ErrorBody {
                error: message.into(),
            })
            .unwrap(),
            delay: Duration::ZERO,
        }
    }

    pub fn raw(status: u16, body: impl Into<String>) -> Self {
        MockReply {
            status,
            body: body.into(),
            delay: Duration::ZERO,
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

type Handler = dyn Fn(&ScoreRequestBody, usize) -> MockReply + Send + Sync;

#[derive(Default)]
struct Stats {
    requests: AtomicUsize,
    max_batch: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
}

pub struct MockScoreServer {
    addr: String,
    stop: Arc<AtomicBool>,
    stats: Arc<Stats>,
    handle: Option<JoinHandle<()>>,
}

impl MockScoreServer {
    /// Starts on an ephemeral localhost port. `handler` gets the parsed
    /// request and its 0-based sequence number.
    pub fn start<F>(handler: F) -> std::io::Result<Self>
    where
        F: Fn(&ScoreRequestBody, usize) -> MockReply + Send + Sync + 'static,
    {
        let server = tiny_http::Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("no ip address"))?
            .to_string();
        let stop = Arc::new(AtomicBool::new(false));
        let stats = Arc::new(Stats::default());
        let handler: Arc<Handler> = Arc::new(handler);
        let (stop2, stats2) = (stop.clone(), stats.clone());
        let handle = thread::spawn(move || {
            while !stop2.load(Ordering::SeqCst) {
                let Ok(Some(req)) = server.recv_timeout(Duration::from_millis(20)) else {
                    continue;
                };
                let (handler, stats) = (handler.clone(), stats2.clone());
                thread::spawn(move || serve(req, handler.as_ref(), &stats));
            }
        });
        Ok(MockScoreServer {
            addr,
            stop,
            stats,
            handle: Some(handle),
        })
    }

    /// Always answers `entail` for every pair.
    pub fn constant(entail: f64) -> std::io::Result<Self> {
        Self::start(move |req, _| MockReply::scores(req, |_, _| entail))
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.stats.requests.load(Ordering::SeqCst)
    }

    pub fn max_batch_seen(&self) -> usize {
        self.stats.max_batch.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.stats.max_in_flight.load(Ordering::SeqCst)
    }
}

fn serve(mut req: tiny_http::Request, handler: &Handler, stats: &Stats) {
    let json = tiny_http::Header::from_bytes("content-type", "application/json").unwrap();
    let path = req.url().to_string();
    if req.method() == &tiny_http::Method::Get && path == "/health" {
        let body = r#"{"model":"mock","max_batch_size":1024}"#;
        let _ = req.respond(tiny_http::Response::from_string(body).with_header(json));
        return;
    }
    if req.method() != &tiny_http::Method::Post || path != "/score" {
        let body = serde_json::to_string(&ErrorBody {
            error: "not found".into(),
        })
        .unwrap();
        let _ = req.respond(
            tiny_http::Response::from_string(body)
                .with_status_code(404)
                .with_header(json),
        );
        return;
    }
    let seq = stats.requests.fetch_add(1, Ordering::SeqCst);
    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let mut text = String::new();
    let reply = match req.as_reader().read_to_string(&mut text) {
        Err(e) => MockReply::error(400, &e.to_string()),
        Ok(_) => match serde_json::from_str::<ScoreRequestBody>(&text) {
            Err(e) => MockReply::error(400, &e.to_string()),
            Ok(body) => {
                stats
                    .max_batch
                    .fetch_max(body.pairs.len(), Ordering::SeqCst);
                handler(&body, seq)
            }
        },
    };
    if !reply.delay.is_zero() {
        thread::sleep(reply.delay);
    }
    stats.in_flight.fetch_sub(1, Ordering::SeqCst);
    let _ = req.respond(
        tiny_http::Response::from_string(reply.body)
            .with_status_code(reply.status)
            .with_header(json),
    );
}

impl Drop for MockScoreServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
