//! Verdict bookkeeping for the acceptance run.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Measured and shown, but not graded in this mode.
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub criterion: String,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.status, self.criterion, self.detail)
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub verdicts: Vec<Verdict>,
}

impl Report {
    /// Graded when `graded`, otherwise recorded as information with the
    /// outcome it would have had.
    pub fn record(&mut self, graded: bool, criterion: &str, ok: bool, detail: impl Into<String>) -> &Verdict {
        let mut detail = detail.into();
        let status = match (graded, ok) {
            (true, true) => Status::Pass,
            (true, false) => Status::Fail,
            (false, _) => {
                detail.push_str(if ok { " (meets the threshold)" } else { " (below the threshold)" });
                Status::Info
            }
        };
        self.verdicts.push(Verdict { status, criterion: criterion.into(), detail });
        self.verdicts.last().unwrap()
    }

    pub fn check(&mut self, criterion: &str, ok: bool, detail: impl Into<String>) -> &Verdict {
        self.record(true, criterion, ok, detail)
    }

    pub fn failures(&self) -> usize {
        self.verdicts.iter().filter(|v| v.status == Status::Fail).count()
    }

    pub fn summary(&self) -> String {
        let graded = self.verdicts.iter().filter(|v| v.status != Status::Info).count();
        format!("{} of {graded} graded criteria passed, {} failed", graded - self.failures(), self.failures())
    }
}

/// True when no value exceeds the one before it.
pub fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}
