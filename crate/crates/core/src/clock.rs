use chrono::{DateTime, TimeZone, Utc};

/// Source of wall-clock time, so runs can be replayed byte-for-byte.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always returns the same instant.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl FixedClock {
    /// 2000-01-01T00:00:00Z
    pub fn epoch_2000() -> Self {
        FixedClock(Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).single().expect("valid date"))
    }
}

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}
