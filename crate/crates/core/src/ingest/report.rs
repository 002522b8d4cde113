use serde::{Deserialize, Serialize};

/// One record that was not accepted, with its line in the source file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: Option<u64>,
    pub record: String,
    pub reason: String,
}

/// Accepted/rejected tallies; `accepted + rejected == total` always.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub rejections: Vec<Rejection>,
}

impl ValidationReport {
    pub fn accept(&mut self) {
        self.total += 1;
        self.accepted += 1;
    }

    pub fn reject(
        &mut self,
        line: Option<u64>,
        record: impl Into<String>,
        reason: impl Into<String>,
    ) {
        self.total += 1;
        self.rejected += 1;
        self.rejections.push(Rejection {
            line,
            record: record.into(),
            reason: reason.into(),
        });
    }

    pub fn is_consistent(&self) -> bool {
        self.accepted + self.rejected == self.total && self.rejections.len() == self.rejected
    }
}
