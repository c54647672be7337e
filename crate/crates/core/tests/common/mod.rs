#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use editval::align::apply_edits;
use editval::corpus::{Annotation, CorpusRecord, Edit, ReferenceSet, Sentence};
use editval::judge::{ChatTransport, ModelEndpoint, RetryPolicy, TransportError};
use editval::{extract_edits, EditCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tokens(rng: &mut ChaCha8Rng, max_len: usize, vocab: usize) -> Vec<String> {
    let n = rng.random_range(0..=max_len);
    (0..n).map(|_| format!("w{}", rng.random_range(0..vocab))).collect()
}

/// Textbook dynamic-programming edit distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

pub fn random_counts(rng: &mut ChaCha8Rng, max: u64) -> EditCounts {
    EditCounts::new(rng.random_range(0..=max), rng.random_range(0..=max), rng.random_range(0..=max), rng.random_range(0..=max))
}

/// A record with one hypothesis system and references given as token
/// sequences.
pub fn record(source: &str, hyp: &str, refs: &[&str]) -> CorpusRecord {
    let src = Sentence::from_raw("doc", 0, source);
    let annotations = refs
        .iter()
        .enumerate()
        .map(|(i, r)| Annotation { annotator: i, edits: extract_edits(&src.tokens, &toks(r)) })
        .collect();
    let mut hypotheses = std::collections::BTreeMap::new();
    hypotheses.insert("sys".to_owned(), Sentence::from_raw("doc", 0, hyp));
    CorpusRecord { references: ReferenceSet { source: src.clone(), annotations }, source: src, hypotheses }
}

pub fn endpoint(name: &str) -> ModelEndpoint {
    ModelEndpoint::new(name, format!("{name}-model")).with_retry(RetryPolicy { max_retries: 2, backoff_ms: 0 })
}

pub fn first_turn_reply(label: bool) -> String {
    format!("Analysis: looks {}.\nFinal Judgment: [{}]", if label { "fine" } else { "wrong" }, u8::from(label))
}

pub fn refinement_reply(label: bool) -> String {
    format!("{{\"llm_analysis\": \"reviewed\", \"llm_prediction\": {}}}", u8::from(label))
}

/// Replies by endpoint name with a fixed label; counts calls and tracks the
/// peak number of concurrent calls.
pub struct LabelTransport {
    pub labels: HashMap<String, bool>,
    pub first_turn: String,
    pub delay: Duration,
    pub calls: AtomicUsize,
    in_flight: AtomicUsize,
    pub peak: AtomicUsize,
}

impl LabelTransport {
    pub fn new(first_turn: &str, labels: &[(&str, bool)]) -> Self {
        Self {
            labels: labels.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            first_turn: first_turn.to_owned(),
            delay: Duration::ZERO,
            calls: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn with_delay(mut self, d: Duration) -> Self {
        self.delay = d;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

impl ChatTransport for LabelTransport {
    fn complete(&self, endpoint: &ModelEndpoint, _prompt: &str) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        let label = self.labels[&endpoint.name];
        Ok(if endpoint.name == self.first_turn { first_turn_reply(label) } else { refinement_reply(label) })
    }
}

/// Replies from a fixed queue per endpoint; records every prompt.
pub struct QueueTransport {
    pub queues: Mutex<HashMap<String, Vec<Result<String, TransportError>>>>,
    pub prompts: Mutex<Vec<(String, String)>>,
}

impl QueueTransport {
    pub fn new(queues: Vec<(&str, Vec<Result<String, TransportError>>)>) -> Self {
        Self {
            queues: Mutex::new(queues.into_iter().map(|(k, mut v)| {
                v.reverse();
                (k.to_owned(), v)
            }).collect()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn calls_to(&self, name: &str) -> usize {
        self.prompts.lock().unwrap().iter().filter(|(n, _)| n == name).count()
    }
}

impl ChatTransport for QueueTransport {
    fn complete(&self, endpoint: &ModelEndpoint, prompt: &str) -> Result<String, TransportError> {
        self.prompts.lock().unwrap().push((endpoint.name.clone(), prompt.to_owned()));
        self.queues
            .lock()
            .unwrap()
            .get_mut(&endpoint.name)
            .and_then(Vec::pop)
            .unwrap_or_else(|| Err(TransportError::Other(format!("script for {} exhausted", endpoint.name))))
    }
}

/// Texts rebuilt independently from the edit lists: the reference outside
/// the focal chunk, and source or hypothesis inside it.
pub fn expected_pair_texts(src: &[String], reference: &[Edit], hyp: &[Edit], chunk: std::ops::Range<usize>) -> (Vec<String>, Vec<String>, usize, usize) {
    let inside = |e: &Edit| e.span_start >= chunk.start && e.span_end <= chunk.end;
    let outside: Vec<Edit> = reference.iter().filter(|e| !inside(e)).cloned().collect();
    let mut with_hyp = outside.clone();
    with_hyp.extend(hyp.iter().filter(|e| inside(e)).cloned());
    with_hyp.sort_by_key(|e| (e.span_start, e.span_end));
    let before: Vec<Edit> = outside.iter().filter(|e| e.span_end <= chunk.start).cloned().collect();
    let prefix_len = apply_edits(&src[..chunk.start], &before).unwrap().len();
    let after: Vec<Edit> = outside
        .iter()
        .filter(|e| e.span_start >= chunk.end)
        .map(|e| Edit { span_start: e.span_start - chunk.end, span_end: e.span_end - chunk.end, ..e.clone() })
        .collect();
    let suffix_len = apply_edits(&src[chunk.end..], &after).unwrap().len();
    (apply_edits(src, &outside).unwrap(), apply_edits(src, &with_hyp).unwrap(), prefix_len, suffix_len)
}

/// Serves `reply` to every request, one connection at a time, and returns
/// the base URL plus a channel of received request bodies.
pub fn stub_server(reply: &'static str, n: usize) -> (String, std::sync::mpsc::Receiver<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        for stream in listener.incoming().take(n) {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            tx.send(format!("{}\n{}", request_line.trim(), String::from_utf8(body).unwrap())).unwrap();
            let resp = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
            stream.write_all(resp.as_bytes()).unwrap();
        }
    });
    (url, rx)
}
