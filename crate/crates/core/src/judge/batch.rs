use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::cache::{cache_key, VerdictCache};
use super::{Judge, JudgeError, Verdict};
use crate::align::EditPair;

/// Judges `pairs` with at most `max_in_flight` concurrent judge calls.
///
/// Output is positionally aligned with the input. Pairs with equal content
/// are judged once; cached verdicts skip the judge entirely. A failing pair
/// fills its own slot with the error and does not stop the batch. Errors are
/// never cached.
pub fn judge_batch(
    pairs: &[EditPair],
    judge: &dyn Judge,
    cache: Option<&VerdictCache>,
    max_in_flight: usize,
) -> Vec<Result<Verdict, JudgeError>> {
    let fingerprint = judge.fingerprint();
    let keys: Vec<String> = pairs.iter().map(|p| cache_key(p, &fingerprint)).collect();

    let mut first_of: HashMap<&str, usize> = HashMap::new();
    let mut todo: Vec<usize> = Vec::new();
    let mut resolved: HashMap<&str, Result<Verdict, JudgeError>> = HashMap::new();
    for (i, key) in keys.iter().enumerate() {
        if first_of.contains_key(key.as_str()) {
            continue;
        }
        first_of.insert(key, i);
        match cache.and_then(|c| c.get(key)) {
            Some(v) => {
                resolved.insert(key, Ok(v));
            }
            None => todo.push(i),
        }
    }

    let results: Mutex<Vec<(usize, Result<Verdict, JudgeError>)>> = Mutex::new(Vec::with_capacity(todo.len()));
    let next = AtomicUsize::new(0);
    let workers = max_in_flight.max(1).min(todo.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let slot = next.fetch_add(1, Ordering::Relaxed);
                let Some(&i) = todo.get(slot) else { break };
                let outcome = judge.judge(&pairs[i]);
                if let (Ok(v), Some(c)) = (&outcome, cache) {
                    if let Err(e) = c.insert(keys[i].clone(), v.clone()) {
                        log::warn!("could not persist verdict: {e}");
                    }
                }
                results.lock().expect("results lock").push((i, outcome));
            });
        }
    });
    for (i, outcome) in results.into_inner().expect("results lock") {
        resolved.insert(keys[i].as_str(), outcome);
    }

    keys.iter().map(|k| resolved.get(k.as_str()).cloned().expect("every key resolved")).collect()
}
