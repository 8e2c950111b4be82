//! Processor time of the calling thread.
//!
//! Trials may run on a thread pool, so per-thread CPU time is the quantity
//! that stays attributable to a single run.

/// Seconds of CPU time consumed by the current thread.
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Accumulates CPU time only while running, so telemetry between epochs can
/// be excluded.
#[derive(Debug, Default)]
pub struct CpuStopwatch {
    total: f64,
    started: Option<f64>,
}

impl CpuStopwatch {
    pub fn start(&mut self) {
        self.started = Some(thread_cpu_seconds());
    }

    pub fn stop(&mut self) {
        if let Some(t0) = self.started.take() {
            self.total += (thread_cpu_seconds() - t0).max(0.0);
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.total
    }
}
