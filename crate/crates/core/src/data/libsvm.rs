//! LIBSVM text format.
//!
//! One sample per line: `<label> <index>:<value> <index>:<value> ...` with
//! 1-based, strictly increasing feature indices. Blank lines and text after
//! `#` are ignored. Accepted raw labels are `-1`, `0`, `+1`/`1` and `2`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{CsrMatrix, DesignMatrix};
use crate::model::Dataset;

/// Rows and raw labels as read, before label mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLibsvm {
    pub labels: Vec<f64>,
    /// 0-based column indices.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Largest 1-based index seen (0 when all rows are empty).
    pub max_index: usize,
}

const ALLOWED_LABELS: [f64; 4] = [-1.0, 0.0, 1.0, 2.0];

/// Reads the rows of a LIBSVM stream without mapping labels.
pub fn read_raw<R: Read>(reader: R) -> Result<RawLibsvm> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut max_index = 0;
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| perr(format!("invalid label `{label_tok}`")))?;
        if !ALLOWED_LABELS.contains(&label) {
            return Err(perr(format!("unsupported label `{label_tok}`")));
        }
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected `index:value`, found `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| perr(format!("invalid feature index `{idx}`")))?;
            if idx == 0 {
                return Err(perr("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(perr(format!("feature index {idx} does not increase (after {last})")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| perr(format!("invalid feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(perr(format!("non-finite feature value `{val}`")));
            }
            last = idx;
            if val != 0.0 {
                row.push((idx - 1, val));
            }
        }
        max_index = max_index.max(last);
        labels.push(label);
        rows.push(row);
    }
    Ok(RawLibsvm {
        labels,
        rows,
        max_index,
    })
}

/// Maps a two-valued label vector to `{0, 1}`: the smaller value becomes 0.
///
/// A single observed value is mapped by sign: values `<= 0` become 0 and
/// positive values become 1, so a file holding only `-1` or only `+1` keeps
/// its meaning.
pub fn map_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = Vec::new();
    for &v in raw {
        if !distinct.contains(&v) {
            distinct.push(v);
            if distinct.len() > 2 {
                return Err(Error::arg(format!(
                    "more than two distinct labels: {distinct:?}"
                )));
            }
        }
    }
    let zero_label = match distinct.as_slice() {
        [a, b] => a.min(*b),
        [a] if *a <= 0.0 => *a,
        _ => f64::NAN,
    };
    Ok(raw.iter().map(|&v| if v == zero_label { 0.0 } else { 1.0 }).collect())
}

/// Builds a sparse dataset from raw rows. `p` defaults to the largest index seen.
pub fn to_dataset(raw: RawLibsvm, labels: Vec<f64>, p: Option<usize>) -> Result<Dataset> {
    let p = match p {
        Some(p) if p < raw.max_index => {
            return Err(Error::arg(format!(
                "feature count override {p} is below the largest index {}",
                raw.max_index
            )))
        }
        Some(p) => p,
        None => raw.max_index,
    };
    if p == 0 {
        return Err(Error::arg("dataset has no features"));
    }
    let x = CsrMatrix::from_rows(p, &raw.rows)?;
    Dataset::new(DesignMatrix::Sparse(x), labels)
}

/// Parses a LIBSVM stream into a sparse dataset with labels in `{0, 1}`.
pub fn parse_libsvm<R: Read>(reader: R, p: Option<usize>) -> Result<Dataset> {
    let raw = read_raw(reader)?;
    let labels = map_labels(&raw.labels)?;
    to_dataset(raw, labels, p)
}

pub fn read_libsvm_file(path: &Path, p: Option<usize>) -> Result<Dataset> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_libsvm(f, p)
}

/// Formats like C's `%.17g`.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    const PREC: i32 = 17;
    let sci = format!("{:.*e}", (PREC - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..PREC).contains(&exp) {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        strip_zeros(format!("{v:.decimals$}"))
    } else {
        let m = strip_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn strip_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes `ds` in LIBSVM format with labels `0`/`1` and values as `%.17g`.
/// Only nonzero entries are written.
pub fn serialize_libsvm<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    for i in 0..ds.n() {
        let label = if ds.y()[i] == 1.0 { "1" } else { "0" };
        out.write_all(label.as_bytes())?;
        for (j, v) in ds.x().row_entries(i) {
            write!(out, " {}:{}", j + 1, format_g17(v))?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_lines() {
        let ds = parse_libsvm("1 3:0.5 7:-1.2\n-1 1:2\n".as_bytes(), None).unwrap();
        assert_eq!(ds.p(), 7);
        assert_eq!(ds.y(), &[1.0, 0.0]);
        assert_eq!(ds.x().row_entries(0), vec![(2, 0.5), (6, -1.2)]);
        assert_eq!(ds.x().row_entries(1), vec![(0, 2.0)]);

        let ds = parse_libsvm("0\n1 2:1\n".as_bytes(), None).unwrap();
        assert!(ds.x().row_entries(0).is_empty());
        assert_eq!(ds.y(), &[0.0, 1.0]);
    }

    #[test]
    fn single_line_labels_keep_their_sign() {
        let ds = parse_libsvm("1 3:0.5 7:-1.2\n".as_bytes(), None).unwrap();
        assert_eq!(ds.y(), &[1.0]);
        let ds = parse_libsvm("-1 1:2\n".as_bytes(), None).unwrap();
        assert_eq!(ds.y(), &[0.0]);
        let ds = parse_libsvm("+1 1:2\n".as_bytes(), None).unwrap();
        assert_eq!(ds.y(), &[1.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_libsvm("1 1:2\n0 2:1 2:3\n".as_bytes(), None).unwrap_err();
        assert_eq!(err, Error::Parse { line: 2, message: "feature index 2 does not increase (after 2)".into() });
        let err = parse_libsvm("1 1:2\n\n3 1:1\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_libsvm("1 1-2\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_libsvm("1 0:2\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_libsvm("1 2:x\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn feature_count_override() {
        let ds = parse_libsvm("1 2:1\n0 1:1\n".as_bytes(), Some(5)).unwrap();
        assert_eq!(ds.p(), 5);
        assert!(parse_libsvm("1 4:1\n".as_bytes(), Some(3)).is_err());
    }

    #[test]
    fn label_mapping() {
        assert_eq!(map_labels(&[-1.0, 1.0, -1.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(map_labels(&[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(map_labels(&[1.0, 2.0, 2.0]).unwrap(), vec![0.0, 1.0, 1.0]);
        assert!(map_labels(&[-1.0, 0.0, 1.0]).is_err());
        assert!(parse_libsvm("-1 1:1\n0 1:1\n1 1:1\n".as_bytes(), None).is_err());
    }

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(0.5), "0.5");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-1.2), "-1.2");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(0.0001), "0.0001");
        for v in [std::f64::consts::PI, -2.5e-300, 7.0e17, 1.0 / 3.0] {
            assert_eq!(format_g17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn serialize_writes_nonzeros_only() {
        let x = DesignMatrix::from_row_major(2, 3, &[0.0, 1.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let ds = Dataset::new(x, vec![1.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        serialize_libsvm(&ds, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1 2:1.5\n0\n");
    }
}
