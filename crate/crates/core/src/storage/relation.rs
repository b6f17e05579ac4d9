//! Text ingestion of relation files.

use std::io::BufRead;
use std::path::Path;

use super::StorageError;

/// Tuples as read from disk, before dictionary encoding. Duplicates are
/// retained; trie construction deduplicates.
#[derive(Debug, Clone)]
pub struct RawRelation {
    pub arity: usize,
    /// Row-major key fields, `arity` per row.
    pub rows: Vec<String>,
    /// Optional numeric annotation column, one value per row.
    pub annotations: Option<Vec<f64>>,
}

impl RawRelation {
    pub fn len(&self) -> usize {
        if self.arity == 0 {
            0
        } else {
            self.rows.len() / self.arity
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[String] {
        &self.rows[i * self.arity..(i + 1) * self.arity]
    }
}

/// Loads a whitespace-separated relation file. Lines starting with `#` are
/// skipped. When `annotated` is `None` the presence of a trailing numeric
/// column is detected from the first data row.
pub fn load_relation(
    path: &Path,
    arity: usize,
    annotated: Option<bool>,
) -> Result<RawRelation, StorageError> {
    let file = std::fs::File::open(path).map_err(|e| StorageError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut rows = Vec::new();
    let mut annotations: Option<Vec<f64>> = None;
    let mut detected = annotated;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| StorageError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let with_annot = *detected.get_or_insert_with(|| {
            fields.len() == arity + 1 && fields[arity].parse::<f64>().is_ok()
        });
        let expected = arity + usize::from(with_annot);
        if fields.len() != expected {
            return Err(StorageError::RowArityMismatch {
                line: lineno + 1,
                expected,
                found: fields.len(),
            });
        }
        for f in &fields[..arity] {
            rows.push((*f).to_string());
        }
        if with_annot {
            let value = fields[arity]
                .parse::<f64>()
                .map_err(|_| StorageError::RowArityMismatch {
                    line: lineno + 1,
                    expected,
                    found: fields.len(),
                })?;
            annotations.get_or_insert_with(Vec::new).push(value);
        }
    }
    Ok(RawRelation {
        arity,
        rows,
        annotations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir();
        let path = dir.join(format!(
            "triejoin-rel-{}-{:?}.txt",
            std::process::id(),
            std::thread::current().id()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_simple_edge_list() {
        let path = write_temp("0 1\n1 2\n");
        let rel = load_relation(&path, 2, None).unwrap();
        assert_eq!(rel.len(), 2);
        assert_eq!(rel.row(0), ["0", "1"]);
        assert!(rel.annotations.is_none());
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn skips_comment_lines() {
        let path = write_temp("# comment\n0 1\n");
        let rel = load_relation(&path, 2, None).unwrap();
        assert_eq!(rel.len(), 1);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn reports_row_arity_mismatch_with_line() {
        let path = write_temp("0 1\n0 1 junk extra\n");
        let err = load_relation(&path, 2, None).unwrap_err();
        match err {
            StorageError::RowArityMismatch { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn detects_annotation_column() {
        let path = write_temp("0 1 0.5\n1 2 2.5\n");
        let rel = load_relation(&path, 2, None).unwrap();
        assert_eq!(rel.annotations.as_deref(), Some(&[0.5, 2.5][..]));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_relation(Path::new("/nonexistent/xyz.txt"), 2, None).unwrap_err();
        assert!(matches!(err, StorageError::Io { .. }));
    }
}
