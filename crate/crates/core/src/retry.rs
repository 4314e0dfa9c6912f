//! Retry with exponential backoff, shared by the translation and
//! prediction clients.

use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt; total attempts = `max_retries + 1`.
    pub max_retries: u32,
    /// Delay before retry k (0-based) is `backoff_base * 2^k`.
    #[serde(with = "millis")]
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, backoff_base: Duration::from_millis(500) }
    }
}

/// Outcome of a single attempt.
#[derive(Debug)]
pub enum Attempt<E> {
    /// Worth retrying (network error, 5xx, rate limited).
    Transient(E),
    /// Retrying will not help.
    Fatal(E),
}

#[derive(Debug)]
pub enum RetryError<E> {
    Exhausted { attempts: u32, last: E },
    Fatal(E),
}

impl RetryPolicy {
    pub fn delay_for(&self, retry: u32) -> Duration {
        self.backoff_base.saturating_mul(2u32.saturating_pow(retry.min(16)))
    }

    pub fn run<T, E>(&self, mut op: impl FnMut(u32) -> Result<T, Attempt<E>>) -> Result<T, RetryError<E>> {
        let mut attempt = 0;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(RetryError::Fatal(e)),
                Err(Attempt::Transient(e)) => {
                    if attempt >= self.max_retries {
                        return Err(RetryError::Exhausted { attempts: attempt + 1, last: e });
                    }
                    let delay = self.delay_for(attempt);
                    if !delay.is_zero() {
                        log::debug!("attempt {} failed, retrying in {:?}", attempt + 1, delay);
                        std::thread::sleep(delay);
                    }
                    attempt += 1;
                }
            }
        }
    }
}

pub(crate) mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}
