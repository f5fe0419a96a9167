//! Pull client for a Crossref-style cursored listing:
//! `GET {base}/works?cursor={token}&rows={n}` → `{"items": [...], "next_cursor": ...}`.

use std::time::Duration;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

pub const START_CURSOR: &str = "*";

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("transport failure after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: String },
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Exponential backoff: `base * factor^(attempt-1)` between attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { base: Duration::from_secs(1), factor: 2, max_attempts: 5 }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, attempt: u32) -> Duration {
        self.base * self.factor.saturating_pow(attempt.saturating_sub(2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarvestPage {
    pub records: Vec<Value>,
    pub next_cursor: Option<String>,
}

#[derive(Deserialize)]
struct PageBody {
    items: Vec<Value>,
    next_cursor: Option<String>,
}

pub struct HarvestClient {
    base: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl HarvestClient {
    pub fn new(base: &str) -> Self {
        Self::with_retry(base, RetryPolicy::default())
    }

    pub fn with_retry(base: &str, retry: RetryPolicy) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build();
        Self { base: base.trim_end_matches('/').to_owned(), agent: ureq::Agent::new_with_config(config), retry }
    }

    fn page_url(&self, cursor: &str, rows: usize) -> String {
        let enc: String = url::form_urlencoded::byte_serialize(cursor.as_bytes()).collect();
        format!("{}/works?cursor={enc}&rows={rows}", self.base)
    }

    /// Fetch one page. `cursor = None` starts a new listing.
    pub fn fetch_page(&self, cursor: Option<&str>, rows: usize) -> Result<HarvestPage, HarvestError> {
        if rows == 0 {
            return Err(HarvestError::Protocol("page size must be positive".into()));
        }
        let url = self.page_url(cursor.unwrap_or(START_CURSOR), rows);
        let mut last = String::new();
        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                std::thread::sleep(self.retry.delay_before(attempt));
            }
            let mut resp = match self.agent.get(&url).call() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            if status >= 500 || status == 429 {
                last = format!("HTTP {status}");
                continue;
            }
            if !(200..300).contains(&status) {
                return Err(HarvestError::Protocol(format!("unexpected HTTP {status}")));
            }
            let body = match resp.body_mut().read_to_string() {
                Ok(b) => b,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let page: PageBody =
                serde_json::from_str(&body).map_err(|e| HarvestError::Protocol(format!("malformed body: {e}")))?;
            if page.items.len() > rows {
                return Err(HarvestError::Protocol(format!("server returned {} items for rows={rows}", page.items.len())));
            }
            return Ok(HarvestPage { records: page.items, next_cursor: page.next_cursor });
        }
        Err(HarvestError::Transport { attempts: self.retry.max_attempts, last })
    }

    /// Iterate pages from `cursor` until the server stops returning one.
    pub fn pages(&self, cursor: Option<String>, rows: usize) -> Pages<'_> {
        Pages { client: self, cursor, rows, done: false }
    }
}

pub struct Pages<'a> {
    client: &'a HarvestClient,
    cursor: Option<String>,
    rows: usize,
    done: bool,
}

impl Pages<'_> {
    /// Cursor that will be requested next (resume point).
    pub fn cursor(&self) -> Option<&str> {
        self.cursor.as_deref()
    }
}

impl Iterator for Pages<'_> {
    type Item = Result<HarvestPage, HarvestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.client.fetch_page(self.cursor.as_deref(), self.rows) {
            Ok(page) => {
                match &page.next_cursor {
                    Some(c) => self.cursor = Some(c.clone()),
                    None => self.done = true,
                }
                Some(Ok(page))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        let delays: Vec<u64> = (2..=5).map(|a| p.delay_before(a).as_secs()).collect();
        assert_eq!(delays, vec![1, 2, 4, 8]);
    }
}
