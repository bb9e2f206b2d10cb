use serde::{Deserialize, Serialize};

/// Inclusive range of admissible start times. `earliest > latest` means empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartWindow {
    pub earliest: i64,
    pub latest: i64,
}

impl StartWindow {
    pub fn new(earliest: i64, latest: i64) -> Self {
        Self { earliest, latest }
    }

    pub fn is_empty(&self) -> bool {
        self.earliest > self.latest
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.latest - self.earliest + 1) as usize
        }
    }

    pub fn contains(&self, t: i64) -> bool {
        self.earliest <= t && t <= self.latest
    }

    pub fn clip(&self, lo: i64, hi: i64) -> Self {
        Self::new(self.earliest.max(lo), self.latest.min(hi))
    }

    /// Start times in the window; negative times are skipped.
    pub fn times(&self) -> impl Iterator<Item = u32> {
        let lo = self.earliest.max(0);
        (lo..=self.latest).map(|t| t as u32)
    }
}

impl std::fmt::Display for StartWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.earliest, self.latest)
    }
}
