//! Job distribution.
//!
//! A [`JobTransport`] runs indexed jobs somewhere and hands results back to
//! the orchestrator thread in completion order. The orchestrator owns all
//! aggregation state, so results may arrive in any order.

use std::sync::atomic::{AtomicBool, Ordering};

pub trait JobTransport {
    /// Runs `work(i)` for every `i` in `0..jobs`, passing each result to
    /// `sink` on the calling thread. When `sink` returns `false` no further
    /// jobs are started; results of jobs already running are discarded.
    fn dispatch<T: Send>(
        &self,
        jobs: usize,
        work: &(dyn Fn(usize) -> T + Sync),
        sink: &mut dyn FnMut(usize, T) -> bool,
    );
}

/// In-process work queue served by a fixed number of worker threads.
#[derive(Clone, Copy, Debug)]
pub struct LocalQueue {
    workers: usize,
}

impl LocalQueue {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }
}

impl JobTransport for LocalQueue {
    fn dispatch<T: Send>(
        &self,
        jobs: usize,
        work: &(dyn Fn(usize) -> T + Sync),
        sink: &mut dyn FnMut(usize, T) -> bool,
    ) {
        let (job_tx, job_rx) = crossbeam_channel::unbounded::<usize>();
        let (res_tx, res_rx) = crossbeam_channel::unbounded::<(usize, T)>();
        for i in 0..jobs {
            job_tx.send(i).expect("receiver alive");
        }
        drop(job_tx);
        let stop = AtomicBool::new(false);
        std::thread::scope(|scope| {
            for _ in 0..self.workers.min(jobs.max(1)) {
                let (job_rx, res_tx, stop) = (job_rx.clone(), res_tx.clone(), &stop);
                scope.spawn(move || {
                    while let Ok(i) = job_rx.recv() {
                        if stop.load(Ordering::Acquire) {
                            break;
                        }
                        if res_tx.send((i, work(i))).is_err() {
                            break;
                        }
                    }
                });
            }
            drop(res_tx);
            for (i, result) in res_rx.iter() {
                if !sink(i, result) {
                    stop.store(true, Ordering::Release);
                    break;
                }
            }
            // Dropping the receiver makes in-flight sends fail and workers exit.
            drop(res_rx);
        });
    }
}
