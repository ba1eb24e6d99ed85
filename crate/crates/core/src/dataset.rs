//! Labeled text datasets in `label<TAB>text` or `label,text` line format.

use std::fs;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::text::{tokenize, Label, TokenSequence};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {0}: expected `label<TAB>text` or `label,text`")]
    BadRow(usize),
    #[error("line {0}: label is not a non-negative integer")]
    BadLabel(usize),
    #[error("dataset contains no rows")]
    Empty,
}

/// Loads a dataset file. Each non-blank line holds a class id, a tab or comma,
/// and the raw text; a first line whose label field is not an integer is
/// treated as a header and skipped.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<(TokenSequence, Label)>, DatasetError> {
    let raw = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut saw_data = false;
    for (index, line) in raw.lines().enumerate() {
        let line_no = index + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (label_field, text) = split_row(line).ok_or(DatasetError::BadRow(line_no))?;
        let id: usize = match label_field.trim().parse() {
            Ok(id) => id,
            Err(_) if !saw_data && index == 0 => continue,
            Err(_) => return Err(DatasetError::BadLabel(line_no)),
        };
        let tokens = tokenize(text).map_err(|_| DatasetError::BadRow(line_no))?;
        rows.push((tokens, Label::new(id)));
        saw_data = true;
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(rows)
}

/// Splits at the first tab if the line has one, otherwise the first comma.
fn split_row(line: &str) -> Option<(&str, &str)> {
    line.split_once('\t').or_else(|| line.split_once(','))
}

/// Draws `count` rows without replacement, keeping the file order of the
/// selection. Asking for more rows than exist returns them all.
pub fn sample_rows<R: Rng>(
    rows: &[(TokenSequence, Label)],
    count: usize,
    rng: &mut R,
) -> Vec<(TokenSequence, Label)> {
    if count >= rows.len() {
        return rows.to_vec();
    }
    let mut picked = rand::seq::index::sample(rng, rows.len(), count).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| rows[i].clone()).collect()
}
