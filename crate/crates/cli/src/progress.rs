//! Rate-limited progress lines of the form `STAGE done/total`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

type Sink = Box<dyn Fn(&str) + Send + Sync>;

pub struct Progress {
    stage: String,
    total: u64,
    done: AtomicU64,
    /// Smallest percentage not yet reported.
    next_percent: AtomicU64,
    /// (percent, done) of the last line written.
    last: Mutex<Option<(u64, u64)>>,
    sink: Option<Sink>,
}

fn percent(done: u64, total: u64) -> u64 {
    if total == 0 {
        100
    } else {
        (u128::from(done) * 100 / u128::from(total)) as u64
    }
}

impl Progress {
    /// Reports through `sink`; `None` reports nothing.
    pub fn new(stage: impl Into<String>, total: u64, sink: Option<Sink>) -> Self {
        Progress {
            stage: stage.into(),
            total,
            done: AtomicU64::new(0),
            next_percent: AtomicU64::new(0),
            last: Mutex::new(None),
            sink,
        }
    }

    /// Reports on stderr unless `quiet`.
    pub fn stderr(stage: impl Into<String>, total: u64, quiet: bool) -> Self {
        let sink: Option<Sink> = if quiet {
            None
        } else {
            Some(Box::new(|line: &str| eprintln!("{line}")))
        };
        Progress::new(stage, total, sink)
    }

    pub fn done(&self) -> u64 {
        self.done.load(Ordering::Relaxed).min(self.total)
    }

    pub fn advance(&self, n: u64) {
        let done = (self.done.fetch_add(n, Ordering::Relaxed) + n).min(self.total);
        self.report(done);
    }

    /// Emits the final line if it has not been written yet.
    pub fn finish(&self) {
        self.report(self.done());
    }

    fn report(&self, done: u64) {
        let pct = percent(done, self.total);
        if pct < self.next_percent.load(Ordering::Relaxed) {
            return;
        }
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if last.is_some_and(|(p, _)| pct <= p) {
            return;
        }
        if let Some(sink) = &self.sink {
            sink(&format!("{} {}/{}", self.stage, done, self.total));
        }
        *last = Some((pct, done));
        self.next_percent.store(pct + 1, Ordering::Relaxed);
    }
}
