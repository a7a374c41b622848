//! Bounded parallel map that hands results to a single consumer in input
//! order.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

/// Applies `work` to every item on at most `limit` threads. `sink` runs on
/// the calling thread and sees results strictly in index order; returning
/// `false` stops the dispatch of further items (items already in flight
/// still finish but are not delivered).
pub fn ordered_map<T, U, F, S>(items: &[T], limit: usize, work: F, mut sink: S)
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
    S: FnMut(usize, U) -> bool,
{
    if items.is_empty() {
        return;
    }
    let limit = limit.clamp(1, items.len());
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, U)>();
    std::thread::scope(|scope| {
        for _ in 0..limit {
            let tx = tx.clone();
            let (next, stop, work) = (&next, &stop, &work);
            scope.spawn(move || loop {
                if stop.load(Ordering::Acquire) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::AcqRel);
                if i >= items.len() {
                    break;
                }
                if tx.send((i, work(i, &items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut want = 0;
        for (i, value) in rx {
            pending.insert(i, value);
            while let Some(value) = pending.remove(&want) {
                if !sink(want, value) {
                    stop.store(true, Ordering::Release);
                    return;
                }
                want += 1;
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn delivers_in_order_despite_uneven_work() {
        let items: Vec<u64> = (0..40).collect();
        let mut seen = Vec::new();
        ordered_map(
            &items,
            8,
            |_, &x| {
                std::thread::sleep(Duration::from_millis((40 - x) % 7));
                x * 2
            },
            |i, v| {
                seen.push((i, v));
                true
            },
        );
        assert_eq!(seen, (0..40).map(|i| (i as usize, i * 2)).collect::<Vec<_>>());
    }

    #[test]
    fn stop_halts_delivery() {
        let items: Vec<u32> = (0..100).collect();
        let mut seen = 0;
        ordered_map(&items, 4, |_, &x| x, |i, _| {
            seen += 1;
            i < 9
        });
        assert_eq!(seen, 10);
    }

    #[test]
    fn concurrency_is_bounded() {
        let live = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        let items = vec![(); 30];
        ordered_map(
            &items,
            3,
            |_, _| {
                let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(2));
                live.fetch_sub(1, Ordering::SeqCst);
            },
            |_, _| true,
        );
        assert!(peak.load(Ordering::SeqCst) <= 3);
    }
}
