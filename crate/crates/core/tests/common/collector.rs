//! Minimal collect endpoint for HTTP tests.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::thread;

#[derive(Debug, Clone)]
pub struct Received {
    pub method: String,
    pub path: String,
    pub idempotency_key: Option<String>,
    pub body: Vec<u8>,
}

pub struct StubCollector {
    pub url: String,
    received: Arc<Mutex<Vec<Received>>>,
    statuses: Arc<Mutex<VecDeque<u16>>>,
    server: Arc<tiny_http::Server>,
    handle: Option<thread::JoinHandle<()>>,
}

impl StubCollector {
    /// Answers with the queued `statuses` first, then 201.
    pub fn start(statuses: &[u16]) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let url = format!("http://{}", server.server_addr().to_ip().unwrap());
        let received: Arc<Mutex<Vec<Received>>> = Arc::default();
        let statuses = Arc::new(Mutex::new(statuses.iter().copied().collect::<VecDeque<_>>()));
        let handle = {
            let (server, received, statuses) = (server.clone(), received.clone(), statuses.clone());
            thread::spawn(move || {
                for mut req in server.incoming_requests() {
                    let mut body = Vec::new();
                    let _ = req.as_reader().read_to_end(&mut body);
                    let key = req
                        .headers()
                        .iter()
                        .find(|h| h.field.equiv("Idempotency-Key"))
                        .map(|h| h.value.to_string());
                    received.lock().unwrap().push(Received {
                        method: req.method().to_string(),
                        path: req.url().to_owned(),
                        idempotency_key: key,
                        body,
                    });
                    let status = statuses.lock().unwrap().pop_front().unwrap_or(201);
                    let _ = req.respond(tiny_http::Response::empty(status));
                }
            })
        };
        StubCollector {
            url,
            received,
            statuses,
            server,
            handle: Some(handle),
        }
    }

    pub fn received(&self) -> Vec<Received> {
        self.received.lock().unwrap().clone()
    }

    pub fn queue(&self, status: u16) {
        self.statuses.lock().unwrap().push_back(status);
    }
}

impl Drop for StubCollector {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
