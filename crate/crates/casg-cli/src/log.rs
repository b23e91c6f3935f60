//! Minimal stderr logger gated by the `CASG_LOG` environment variable.

use std::sync::atomic::{AtomicU8, Ordering};

static LEVEL: AtomicU8 = AtomicU8::new(1); // warn

/// Reads `CASG_LOG` (error, warn, info, debug); unknown values keep the
/// default of `warn`.
pub fn init_from_env() {
    let level = match std::env::var("CASG_LOG").as_deref() {
        Ok("error") => 0,
        Ok("warn") => 1,
        Ok("info") => 2,
        Ok("debug") => 3,
        _ => 1,
    };
    LEVEL.store(level, Ordering::Relaxed);
}

fn log(level: u8, tag: &str, message: &str) {
    if LEVEL.load(Ordering::Relaxed) >= level {
        eprintln!("[{tag}] {message}");
    }
}

pub fn error(message: &str) {
    log(0, "error", message);
}

pub fn warn(message: &str) {
    log(1, "warn", message);
}

pub fn info(message: &str) {
    log(2, "info", message);
}

#[allow(dead_code)]
pub fn debug(message: &str) {
    log(3, "debug", message);
}
