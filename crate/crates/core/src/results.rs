//! Accuracy tables in CSV or Markdown.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::formats::DialogueFormat;
use crate::traits::{Trait, TraitMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("accuracy {0} outside [0, 1]")]
pub struct CellOutOfRange(pub f64);

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    /// Set for dialogue tables.
    pub format: Option<DialogueFormat>,
    /// Accuracies as fractions in `[0, 1]`.
    pub cells: TraitMap<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableStyle {
    Csv,
    Markdown,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    /// Finds or creates the row for `(model, format)`.
    fn row_mut(&mut self, model: &str, format: Option<DialogueFormat>) -> &mut ResultRow {
        let pos = self
            .rows
            .iter()
            .position(|r| r.model == model && r.format == format);
        let pos = pos.unwrap_or_else(|| {
            self.rows.push(ResultRow {
                model: String::from(model),
                format,
                cells: TraitMap::default(),
            });
            self.rows.len() - 1
        });
        &mut self.rows[pos]
    }

    pub fn set(
        &mut self,
        model: &str,
        format: Option<DialogueFormat>,
        trait_: Trait,
        accuracy: f64,
    ) -> Result<(), CellOutOfRange> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(CellOutOfRange(accuracy));
        }
        self.row_mut(model, format).cells[trait_] = Some(accuracy);
        Ok(())
    }

    fn is_dialogue(&self) -> bool {
        self.rows.iter().any(|r| r.format.is_some())
    }

    /// Rows grouped by format (S, S+C, F), insertion order within a group.
    fn ordered_rows(&self) -> Vec<&ResultRow> {
        let mut rows: Vec<&ResultRow> = self.rows.iter().collect();
        rows.sort_by_key(|r| r.format);
        rows
    }
}

/// Percentage with two decimals, rounding half up: 0.59716 renders as `59.72`.
pub fn render_percent(fraction: f64) -> String {
    // the small offset absorbs representation error at exact halves
    let hundredths = libm::floor(fraction * 10_000.0 + 0.5 + 1e-7) as i64;
    alloc::format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

pub fn emit_results(table: &ResultTable, style: TableStyle) -> String {
    let dialogue = table.is_dialogue();
    let mut header: Vec<&str> = alloc::vec!["model"];
    if dialogue {
        header.push("format");
    }
    header.extend(Trait::ALL.map(Trait::code));

    let body: Vec<Vec<String>> = table
        .ordered_rows()
        .into_iter()
        .map(|r| {
            let mut cols = alloc::vec![r.model.clone()];
            if dialogue {
                cols.push(
                    r.format
                        .map(|f| String::from(f.label()))
                        .unwrap_or_default(),
                );
            }
            cols.extend(
                r.cells
                    .0
                    .iter()
                    .map(|c| c.map(render_percent).unwrap_or_default()),
            );
            cols
        })
        .collect();

    let mut out = String::new();
    match style {
        TableStyle::Csv => {
            let _ = writeln!(out, "{}", header.join(","));
            for cols in body {
                let _ = writeln!(out, "{}", cols.join(","));
            }
        }
        TableStyle::Markdown => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let rule: Vec<&str> = header.iter().map(|_| "---").collect();
            let _ = writeln!(out, "| {} |", rule.join(" | "));
            for cols in body {
                let _ = writeln!(out, "| {} |", cols.join(" | "));
            }
        }
    }
    out
}
