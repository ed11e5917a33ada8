//! Scripted application demands: one line per iteration, comma-separated
//! application tags, position = pair slot.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sbrra::Application;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DemandScript {
    pub lines: Vec<Vec<Application>>,
}

impl DemandScript {
    /// Blank lines and `#` comments are skipped; every other line is one
    /// iteration, in order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let apps = line
                .split(',')
                .map(|tag| tag.parse::<Application>().map_err(|msg| Error::DemandScript { line: i + 1, msg }))
                .collect::<Result<Vec<_>>>()?;
            lines.push(apps);
        }
        Ok(Self { lines })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Demand of `slot` in 1-based `iteration`, if the script covers it.
    pub fn demand_for(&self, iteration: u32, slot: usize) -> Option<Application> {
        let idx = usize::try_from(iteration).ok()?.checked_sub(1)?;
        self.lines.get(idx)?.get(slot).copied()
    }

    pub fn to_text(&self) -> String {
        self.lines
            .iter()
            .map(|l| l.iter().map(Application::as_str).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
