use std::fmt::Display;
use std::io::Write;

use anyhow::Context;
use serde::Serialize;

use crate::{Format, Global};

/// Plot-ready rows.
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = D>, D: Display>(&mut self, row: I) {
        self.rows.push(row.into_iter().map(|x| x.to_string()).collect());
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    config: &'a C,
    result: &'a R,
}

/// Write `{config, result}` as JSON, or the table with the config as a comment.
pub fn emit<C: Serialize, R: Serialize>(
    global: &Global,
    config: &C,
    result: &R,
    table: impl FnOnce() -> Table,
) -> anyhow::Result<()> {
    let text = match global.format() {
        Format::Json => {
            let mut s = serde_json::to_string(&Envelope { config, result })?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let t = table();
            let mut s = format!("# config: {}\n{}\n", serde_json::to_string(config)?, t.header.join(","));
            for row in &t.rows {
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s
        }
    };
    match &global.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
