//! Matrix Market coordinate files.
//!
//! Reads `real`/`double` and `complex` coordinate matrices with `general`,
//! `symmetric`, `skew-symmetric` or `hermitian` storage (symmetric storage
//! is expanded). Writes `general` coordinate files with 17 significant
//! digits, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{c, is_real, CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CMatrix> {
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text)
}

pub fn save_matrix_market(m: &CMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_matrix_market(m))?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_matrix_market(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" {
        return Err(Error::UnsupportedField(format!("object '{}'", tokens[1])));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::UnsupportedField(format!("format '{}'", tokens[2])));
    }
    let complex = match tokens[3].as_str() {
        "real" | "double" => false,
        "complex" => true,
        other => return Err(Error::UnsupportedField(format!("field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" if complex => Symmetry::Hermitian,
        other => return Err(Error::UnsupportedField(format!("symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_line, size) = body.next().ok_or_else(|| parse_err(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(size_line, format!("bad size line: {e}")))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(parse_err(size_line, "size line needs 'rows cols entries'"));
    };
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }

    let mut m = CMatrix::zeros(rows, cols);
    let mut count = 0;
    for (line_no, line) in body {
        if count == nnz {
            return Err(parse_err(line_no, "more entries than declared"));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let expected = if complex { 4 } else { 3 };
        if fields.len() != expected {
            return Err(parse_err(
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let index = |s: &str, bound: usize| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|e| parse_err(line_no, format!("bad index '{s}': {e}")))?;
            if v == 0 || v > bound {
                return Err(parse_err(line_no, format!("index {v} outside 1..={bound}")));
            }
            Ok(v - 1)
        };
        let number = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| parse_err(line_no, format!("bad value '{s}': {e}")))
        };
        let i = index(fields[0], rows)?;
        let j = index(fields[1], cols)?;
        let value = if complex {
            c(number(fields[2])?, number(fields[3])?)
        } else {
            c(number(fields[2])?, 0.0)
        };
        m[(i, j)] += value;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => m[(j, i)] += value,
                Symmetry::SkewSymmetric => m[(j, i)] -= value,
                Symmetry::Hermitian => m[(j, i)] += value.conj(),
            }
        }
        count += 1;
    }
    if count != nnz {
        return Err(parse_err(
            text.lines().count(),
            format!("declared {nnz} entries, found {count}"),
        ));
    }
    Ok(m)
}

pub fn format_matrix_market(m: &CMatrix) -> String {
    let real = is_real(m);
    let entries: Vec<(usize, usize, C64)> = (0..m.ncols())
        .flat_map(|j| (0..m.nrows()).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            let z = m[(i, j)];
            (z != C64::default()).then_some((i, j, z))
        })
        .collect();
    let mut out = String::new();
    let field = if real { "real" } else { "complex" };
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate {field} general");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), entries.len());
    for (i, j, z) in entries {
        if real {
            let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, z.re);
        } else {
            let _ = writeln!(out, "{} {} {:.16e} {:.16e}", i + 1, j + 1, z.re, z.im);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::to_complex;
    use crate::problems::random::{complex_normal_matrix, random_system, rng};
    use proptest::prelude::*;

    #[test]
    fn single_entry() {
        let m = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2.5\n")
            .unwrap();
        assert_eq!(m, CMatrix::from_element(1, 1, c(2.5, 0.0)));
    }

    #[test]
    fn symmetric_lower_triangle_expands() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n\
                    % 1D Laplacian, lower triangle\n\
                    3 3 5\n\
                    1 1 2\n2 1 -1\n2 2 2\n3 2 -1\n3 3 2\n";
        let m = parse_matrix_market(text).unwrap();
        let expected = to_complex(&crate::problems::laplacian::laplacian_1d(3));
        assert_eq!(m, expected);
    }

    #[test]
    fn complex_general() {
        let text = "%%MatrixMarket matrix coordinate complex general\n2 2 2\n1 1 1.0 -2.0\n2 1 0.5 0.25\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m[(0, 0)], c(1.0, -2.0));
        assert_eq!(m[(1, 0)], c(0.5, 0.25));
        assert_eq!(m[(0, 1)], C64::default());
    }

    #[test]
    fn unsupported_fields() {
        for field in ["pattern", "integer"] {
            let text = format!("%%MatrixMarket matrix coordinate {field} general\n1 1 1\n1 1\n");
            assert!(matches!(parse_matrix_market(&text), Err(Error::UnsupportedField(_))));
        }
        let text = "%%MatrixMarket matrix array real general\n1 1\n1.0\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::UnsupportedField(_))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n3 1 1.0\n";
        match parse_matrix_market(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 abc\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Parse { line: 3, .. })));
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn round_trip_seed42_through_file() {
        let a = to_complex(&random_system(6, 42));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        save_matrix_market(&a, &path).unwrap();
        let back = load_matrix_market(&path).unwrap();
        for (x, y) in a.iter().zip(back.iter()) {
            assert!((x - y).norm() <= 1e-15 * x.norm());
        }
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("%%MatrixMarket matrix coordinate real general"));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in 0u64..1000, rows in 1usize..6, cols in 1usize..6) {
            let m = complex_normal_matrix(rows, cols, &mut rng(seed));
            let back = parse_matrix_market(&format_matrix_market(&m)).unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
