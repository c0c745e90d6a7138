//! CSV ingestion: headerless or single-header numeric matrices.

use likeproj::Dataset;

/// Parse CSV text into a Dataset.
///
/// Conventions: blank lines are skipped; a single leading header row is
/// auto-detected (any cell that does not parse as a number); decimal point
/// only, scientific notation accepted. Ragged rows and non-numeric body
/// cells produce a one-line diagnostic naming the row and column.
pub fn parse_matrix(text: &str) -> Result<(Dataset, usize), String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut skipped_blank = 0usize;
    let mut width: Option<usize> = None;
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            skipped_blank += 1;
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let mut parsed = Vec::with_capacity(cells.len());
        let mut bad_cell = None;
        for (col, cell) in cells.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => parsed.push(v),
                _ => {
                    bad_cell = Some(col);
                    break;
                }
            }
        }
        if let Some(col) = bad_cell {
            if rows.is_empty() && !saw_header {
                // first data-bearing row: treat as header
                saw_header = true;
                width = Some(cells.len());
                continue;
            }
            return Err(format!(
                "line {}: cell {} ({:?}) is not numeric",
                lineno + 1,
                col + 1,
                cells[col]
            ));
        }
        match width {
            None => width = Some(parsed.len()),
            Some(w) if w != parsed.len() => {
                return Err(format!(
                    "line {}: ragged row with {} columns, expected {}",
                    lineno + 1,
                    parsed.len(),
                    w
                ));
            }
            _ => {}
        }
        rows.push(parsed);
    }
    if rows.is_empty() {
        return Err("no data rows found".into());
    }
    let data = Dataset::from_rows(rows).map_err(|e| e.to_string())?;
    Ok((data, skipped_blank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headerless_numeric() {
        let (d, blank) = parse_matrix("1,2\n3,4\n").unwrap();
        assert_eq!((d.n(), d.p(), blank), (2, 2, 0));
    }

    #[test]
    fn header_and_blank_lines() {
        let (d, blank) = parse_matrix("x,y\n\n1,2\n\n3e0,-4.5\n").unwrap();
        assert_eq!((d.n(), d.p(), blank), (2, 2, 2));
        assert_eq!(d.row(1), &[3.0, -4.5]);
    }

    #[test]
    fn ragged_row_diagnostic() {
        let err = parse_matrix("1,2\n3\n").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("ragged"), "{err}");
    }

    #[test]
    fn non_numeric_body_cell() {
        let err = parse_matrix("1,2\n3,oops\n").unwrap_err();
        assert!(err.contains("line 2") && err.contains("cell 2"), "{err}");
    }

    #[test]
    fn nan_rejected() {
        assert!(parse_matrix("1,2\nNaN,3\n").is_err());
    }
}
