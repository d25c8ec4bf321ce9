//! Core domain types: code families, the ACZ parameter, BCD index sets, and
//! the plain-text family file format.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A family of `m` binary codes, each of length `n`, with chips in {-1, +1}.
///
/// Code `i` is conceptually the `i`th column of an n×m matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeFamily {
    n: usize,
    m: usize,
    codes: Vec<Vec<i8>>,
}

impl CodeFamily {
    /// Builds a family from per-code chip vectors, validating dimensions and
    /// chip values.
    pub fn new(codes: Vec<Vec<i8>>) -> Result<Self> {
        let m = codes.len();
        let n = codes.first().map_or(0, Vec::len);
        if n < 2 || m < 1 {
            return Err(Error::InvalidDimensions { n, m });
        }
        for (i, code) in codes.iter().enumerate() {
            if code.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: code.len(),
                });
            }
            for (r, &chip) in code.iter().enumerate() {
                if chip != 1 && chip != -1 {
                    return Err(Error::InvalidChip {
                        code: i,
                        row: r,
                        value: chip,
                    });
                }
            }
        }
        Ok(CodeFamily { n, m, codes })
    }

    /// Chips per code.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of codes.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Chips of code `i`.
    pub fn code(&self, i: usize) -> &[i8] {
        &self.codes[i]
    }

    pub fn chip(&self, code: usize, row: usize) -> i8 {
        self.codes[code][row]
    }

    pub(crate) fn set_chip(&mut self, code: usize, row: usize, value: i8) {
        self.codes[code][row] = value;
    }

    pub fn codes(&self) -> impl Iterator<Item = &[i8]> {
        self.codes.iter().map(Vec::as_slice)
    }

    /// Number of codes satisfying the ACZ property.
    pub fn acz_count(&self) -> usize {
        self.codes().filter(|c| is_acz(c)).count()
    }

    /// True when every code satisfies the ACZ property.
    pub fn all_acz(&self) -> bool {
        self.codes().all(is_acz)
    }

    /// Keeps only the ACZ-satisfying codes, preserving order.
    pub fn acz_subset(&self) -> Result<CodeFamily> {
        let codes: Vec<Vec<i8>> = self
            .codes
            .iter()
            .filter(|c| is_acz(c))
            .cloned()
            .collect();
        CodeFamily::new(codes)
    }
}

/// Bound on the shift-one autocorrelation magnitude: 0 for even lengths, 1
/// for odd lengths (where the value cannot be zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AczParameter {
    g: i32,
}

impl AczParameter {
    pub fn for_length(n: usize) -> Self {
        AczParameter {
            g: if n.is_multiple_of(2) { 0 } else { 1 },
        }
    }

    pub fn bound(self) -> i32 {
        self.g
    }
}

/// Shift-one autocorrelation of `code`.
fn shift_one_autocorrelation(code: &[i8]) -> i32 {
    let n = code.len();
    (0..n)
        .map(|s| i32::from(code[s]) * i32::from(code[(s + 1) % n]))
        .sum()
}

/// True when the code's shift-one autocorrelation magnitude is minimal for
/// its length: |a1| <= 0 for even n, |a1| <= 1 for odd n.
pub fn is_acz(code: &[i8]) -> bool {
    let g = AczParameter::for_length(code.len()).bound();
    shift_one_autocorrelation(code).abs() <= g
}

/// The variable subset of one BCD step: an ordered list of distinct
/// (code, row) indices together with the derived set of active columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    entries: Vec<(usize, usize)>,
    active_columns: Vec<usize>,
}

impl IndexSet {
    /// Builds an index set from (code, row) pairs. Pairs must be distinct;
    /// active columns are derived in order of first appearance.
    pub fn new(entries: Vec<(usize, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        let mut seen = entries.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex {
                    code: w[0].0,
                    row: w[0].1,
                });
            }
        }
        let mut active_columns = Vec::new();
        for &(code, _) in &entries {
            if !active_columns.contains(&code) {
                active_columns.push(code);
            }
        }
        Ok(IndexSet {
            entries,
            active_columns,
        })
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Columns containing at least one free bit, in order of first
    /// appearance.
    pub fn active_columns(&self) -> &[usize] {
        &self.active_columns
    }

    pub fn validate_for(&self, n: usize, m: usize) -> Result<()> {
        for &(code, row) in &self.entries {
            if code >= m || row >= n {
                return Err(Error::IndexOutOfRange { code, row, n, m });
            }
        }
        Ok(())
    }
}

/// Renders a family in the text format: header line "n m", then one line per
/// code of n characters, '0' for +1 and '1' for -1.
pub fn family_to_string(family: &CodeFamily) -> String {
    let mut out = String::with_capacity((family.n() + 1) * family.m() + 16);
    out.push_str(&format!("{} {}\n", family.n(), family.m()));
    for code in family.codes() {
        for &chip in code {
            out.push(if chip == 1 { '0' } else { '1' });
        }
        out.push('\n');
    }
    out
}

/// Writes a family to `path` in the text format.
pub fn save_family(family: &CodeFamily, path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path.as_ref())?;
    file.write_all(family_to_string(family).as_bytes())?;
    Ok(())
}

/// Parses the text format, reporting line/column positions on errors.
pub fn parse_family(text: &str, path: impl AsRef<Path>) -> Result<CodeFamily> {
    let path = path.as_ref().to_path_buf();
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::MalformedHeader {
        path: path.clone(),
        line: 1,
        detail: "empty file".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::MalformedHeader {
            path,
            line: 1,
            detail: format!("expected \"n m\", found {:?}", header),
        });
    }
    let n: usize = fields[0].parse().map_err(|_| Error::MalformedHeader {
        path: path.clone(),
        line: 1,
        detail: format!("invalid code length {:?}", fields[0]),
    })?;
    let m: usize = fields[1].parse().map_err(|_| Error::MalformedHeader {
        path: path.clone(),
        line: 1,
        detail: format!("invalid family size {:?}", fields[1]),
    })?;
    if n < 2 || m < 1 {
        return Err(Error::InvalidDimensions { n, m });
    }

    let mut codes = Vec::with_capacity(m);
    for (idx, line) in lines.by_ref().enumerate() {
        let line_no = idx + 2;
        if codes.len() == m {
            // Only blank trailing lines are tolerated after the last code.
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::TrailingContent { path, line: line_no });
        }
        let count = line.chars().count();
        if count != n {
            return Err(Error::WrongLineLength {
                path,
                line: line_no,
                expected: n,
                found: count,
            });
        }
        let mut code = Vec::with_capacity(n);
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '0' => code.push(1),
                '1' => code.push(-1),
                _ => {
                    return Err(Error::IllegalChar {
                        path,
                        line: line_no,
                        col: col + 1,
                        found: ch,
                    })
                }
            }
        }
        codes.push(code);
    }
    if codes.len() != m {
        return Err(Error::MissingCodes {
            path,
            expected: m,
            found: codes.len(),
        });
    }
    CodeFamily::new(codes)
}

/// Reads a family from `path`. Round-trips with [`save_family`] bit-exactly.
pub fn load_family(path: impl AsRef<Path>) -> Result<CodeFamily> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_family(&text, path)
}
