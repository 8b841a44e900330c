//! Scoped-thread fan-out with deterministic reductions.

use std::sync::atomic::{AtomicUsize, Ordering};

/// Worker count: `OSP_WORKERS` if set, else available parallelism, capped.
pub(crate) fn worker_count() -> usize {
    if let Ok(v) = std::env::var("OSP_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            return n.clamp(1, 64);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).clamp(1, 8)
}

/// Evaluates `probe` over `0..len` and returns the hit with the smallest
/// index, regardless of worker scheduling.
pub(crate) fn parallel_first<T: Send>(
    len: usize,
    probe: &(dyn Fn(usize) -> Option<T> + Sync),
) -> Option<T> {
    let workers = worker_count().min(len.max(1));
    if workers <= 1 || len < 64 {
        return (0..len).find_map(probe);
    }
    let best_index = AtomicUsize::new(usize::MAX);
    let mut results: Vec<Option<(usize, T)>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let best = &best_index;
                scope.spawn(move || {
                    let mut local: Option<(usize, T)> = None;
                    let mut index = w;
                    while index < len {
                        if index >= best.load(Ordering::Relaxed) {
                            break;
                        }
                        if let Some(hit) = probe(index) {
                            best.fetch_min(index, Ordering::Relaxed);
                            local = Some((index, hit));
                            break;
                        }
                        index += workers;
                    }
                    local
                })
            })
            .collect();
        results = handles.into_iter().map(|h| h.join().expect("worker panicked")).collect();
    });
    results
        .into_iter()
        .flatten()
        .min_by_key(|(index, _)| *index)
        .map(|(_, hit)| hit)
}

/// Evaluates `score` over `0..len` and returns the maximum under `Ord`,
/// breaking ties toward the smallest index.
pub(crate) fn parallel_max<T: Send + Ord>(
    len: usize,
    score: &(dyn Fn(usize) -> T + Sync),
) -> Option<T> {
    let workers = worker_count().min(len.max(1));
    if workers <= 1 || len < 64 {
        return (0..len).map(score).max();
    }
    let mut results: Vec<Option<T>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut best: Option<T> = None;
                    let mut index = w;
                    while index < len {
                        let value = score(index);
                        if best.as_ref().is_none_or(|b| value > *b) {
                            best = Some(value);
                        }
                        index += workers;
                    }
                    best
                })
            })
            .collect();
        results = handles.into_iter().map(|h| h.join().expect("worker panicked")).collect();
    });
    results.into_iter().flatten().max()
}
