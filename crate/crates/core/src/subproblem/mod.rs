//! Restriction of the correlation objective to a subset of free bits, and
//! exact solvers for the restricted problem.
//!
//! Fixing all chips outside the subset turns every retained correlation value
//! into an affine-plus-bilinear form of the free bits: each product in the
//! correlation sum has both endpoints free (a bilinear entry), exactly one
//! free (a linear entry with the fixed partner as coefficient), or none
//! (constant). Squaring and summing the retained forms gives the restricted
//! objective; the shift-one autocorrelation forms of the active columns give
//! the ACZ constraints.
//!
//! The full problem over all bits can be linearized the same way with one
//! auxiliary product variable per bit pair plus four linking inequalities
//! each; the solvers here branch on the ±1 bits directly instead, since a
//! product of known signs needs no auxiliary variable.

mod solve;

pub use solve::{solve_branch_and_bound, solve_exhaustive, solve_exhaustive_capped, SolveResult};

/// Default upper limit on the subset size accepted by the enumeration solver.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

use crate::correlation::CorrelationTable;
use crate::error::{Error, Result};
use crate::family::{AczParameter, CodeFamily, IndexSet};

/// Which restricted objective to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemMode {
    /// Sum of squared shift-one autocorrelations of the active columns; no
    /// ACZ constraints. Used to reach feasibility.
    StageOne,
    /// All retained correlation terms, with ACZ constraints on the active
    /// columns.
    StageTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearEntry {
    pub bit: u16,
    pub coef: i32,
}

/// Product of two distinct free bits; `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BilinearEntry {
    pub a: u16,
    pub b: u16,
    pub coef: i32,
}

/// One retained correlation value (pair `(code_a, code_b)` at `shift`),
/// decomposed over the free bits. Evaluating at the incumbent assignment
/// reproduces the corresponding table entry exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub code_a: u32,
    pub code_b: u32,
    pub shift: u32,
    pub constant: i32,
    pub linear: Vec<LinearEntry>,
    pub bilinear: Vec<BilinearEntry>,
}

impl Term {
    /// Value of the underlying correlation at the given free-bit assignment.
    pub fn eval(&self, assignment: &[i8]) -> i32 {
        let mut v = self.constant;
        for e in &self.linear {
            v += e.coef * i32::from(assignment[e.bit as usize]);
        }
        for e in &self.bilinear {
            v += e.coef
                * i32::from(assignment[e.a as usize])
                * i32::from(assignment[e.b as usize]);
        }
        v
    }

    fn is_constant(&self) -> bool {
        self.linear.is_empty() && self.bilinear.is_empty()
    }
}

/// Shift-one autocorrelation form of one active column, kept unsquared for
/// the ACZ constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AczTerm {
    pub column: usize,
    pub term: Term,
}

/// The restricted problem over an index set: squared objective terms, a
/// constant offset from fully-fixed retained terms, and (stage two) the ACZ
/// constraint forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialProblem {
    free_bits: Vec<(usize, usize)>,
    incumbent: Vec<i8>,
    terms: Vec<Term>,
    offset: i64,
    acz: Vec<AczTerm>,
    g: i32,
    mode: SubproblemMode,
}

impl PartialProblem {
    pub fn free_bits(&self) -> &[(usize, usize)] {
        &self.free_bits
    }

    /// Incumbent values of the free bits, in free-bit order.
    pub fn incumbent(&self) -> &[i8] {
        &self.incumbent
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn acz_terms(&self) -> &[AczTerm] {
        &self.acz
    }

    pub fn acz_bound(&self) -> i32 {
        self.g
    }

    pub fn mode(&self) -> SubproblemMode {
        self.mode
    }

    /// Drops the ACZ constraints, keeping the objective; used by the timing
    /// benchmark, which solves unconstrained instances.
    pub fn without_acz(mut self) -> Self {
        self.acz.clear();
        self
    }

    /// Restricted objective at an assignment: the squares of all retained
    /// terms plus the constant offset.
    pub fn evaluate(&self, assignment: &[i8]) -> Result<i64> {
        self.check_assignment(assignment)?;
        let sum: i64 = self
            .terms
            .iter()
            .map(|t| {
                let v = i64::from(t.eval(assignment));
                v * v
            })
            .sum();
        Ok(sum + self.offset)
    }

    /// Shift-one autocorrelation of each active column at an assignment.
    pub fn shift_one_values(&self, assignment: &[i8]) -> Result<Vec<(usize, i32)>> {
        self.check_assignment(assignment)?;
        Ok(self
            .acz
            .iter()
            .map(|a| (a.column, a.term.eval(assignment)))
            .collect())
    }

    /// True when the assignment satisfies every ACZ constraint.
    pub fn satisfies_acz(&self, assignment: &[i8]) -> Result<bool> {
        Ok(self
            .shift_one_values(assignment)?
            .iter()
            .all(|&(_, v)| v.abs() <= self.g))
    }

    fn check_assignment(&self, assignment: &[i8]) -> Result<()> {
        if assignment.len() != self.free_bits.len() {
            return Err(Error::AssignmentLength {
                expected: self.free_bits.len(),
                found: assignment.len(),
            });
        }
        Ok(())
    }

    /// Text form for solver cross-validation: one objective term per line,
    /// `i j k | const | id:coef ... | id,id:coef ...`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            let linear = t
                .linear
                .iter()
                .map(|e| format!("{}:{}", e.bit, e.coef))
                .collect::<Vec<_>>()
                .join(" ");
            let bilinear = t
                .bilinear
                .iter()
                .map(|e| format!("{},{}:{}", e.a, e.b, e.coef))
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!(
                "{} {} {} | {} | {} | {}\n",
                t.code_a, t.code_b, t.shift, t.constant, linear, bilinear
            ));
        }
        out
    }
}

/// Builds the restricted problem for an index set against the incumbent
/// family, reading constants from the correlation table.
pub fn build_partial(
    family: &CodeFamily,
    table: &CorrelationTable,
    subset: &IndexSet,
    mode: SubproblemMode,
) -> Result<PartialProblem> {
    if subset.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let n = family.n();
    let m = family.m();
    subset.validate_for(n, m)?;

    // bit id = position in the subset's entry order
    let mut bits_in_column: Vec<Vec<(usize, u16)>> = vec![Vec::new(); m];
    for (id, &(code, row)) in subset.entries().iter().enumerate() {
        bits_in_column[code].push((row, id as u16));
    }
    let incumbent: Vec<i8> = subset
        .entries()
        .iter()
        .map(|&(code, row)| family.chip(code, row))
        .collect();

    let builder = TermBuilder {
        family,
        table,
        bits_in_column: &bits_in_column,
    };

    let mut terms = Vec::new();
    let mut offset = 0i64;
    let mut acz = Vec::new();

    match mode {
        SubproblemMode::StageOne => {
            for &i in subset.active_columns() {
                let term = builder.decompose(i, i, 1);
                if term.is_constant() {
                    offset += i64::from(term.constant) * i64::from(term.constant);
                } else {
                    terms.push(term);
                }
            }
        }
        SubproblemMode::StageTwo => {
            let mut active = vec![false; m];
            for &i in subset.active_columns() {
                active[i] = true;
            }
            for i in 0..m {
                for j in i..m {
                    if !active[i] && !active[j] {
                        continue;
                    }
                    for k in 0..n {
                        if i == j && k == 0 {
                            // The zero-shift autocorrelation is n for any
                            // chip values.
                            offset += (n as i64) * (n as i64);
                            continue;
                        }
                        let term = builder.decompose(i, j, k);
                        if term.is_constant() {
                            offset += i64::from(term.constant) * i64::from(term.constant);
                        } else {
                            terms.push(term);
                        }
                    }
                }
            }
            for &i in subset.active_columns() {
                acz.push(AczTerm {
                    column: i,
                    term: builder.decompose(i, i, 1),
                });
            }
        }
    }

    Ok(PartialProblem {
        free_bits: subset.entries().to_vec(),
        incumbent,
        terms,
        offset,
        acz,
        g: AczParameter::for_length(n).bound(),
        mode,
    })
}

struct TermBuilder<'a> {
    family: &'a CodeFamily,
    table: &'a CorrelationTable,
    bits_in_column: &'a [Vec<(usize, u16)>],
}

impl TermBuilder<'_> {
    /// Decomposes the correlation of pair (i, j) at shift k over the free
    /// bits. Only the sum positions touching a free bit are scanned; the
    /// constant absorbs the rest via the incumbent table value.
    fn decompose(&self, i: usize, j: usize, k: usize) -> Term {
        let n = self.family.n();
        let code_i = self.family.code(i);
        let code_j = self.family.code(j);

        // Sum positions s where chip_i[s] * chip_j[(s+k) % n] involves a free
        // bit: s = row for free rows of code i, s = row - k for free rows of
        // code j.
        let mut positions: Vec<usize> = Vec::new();
        for &(row, _) in &self.bits_in_column[i] {
            positions.push(row);
        }
        for &(row, _) in &self.bits_in_column[j] {
            debug_assert!(k < n);
            positions.push((row + n - k) % n);
        }
        positions.sort_unstable();
        positions.dedup();

        let mut constant = self.table.value(i, j, k);
        let mut linear: Vec<LinearEntry> = Vec::new();
        let mut bilinear: Vec<BilinearEntry> = Vec::new();

        for &s in &positions {
            let s2 = (s + k) % n;
            let f1 = bit_at(&self.bits_in_column[i], s);
            let f2 = bit_at(&self.bits_in_column[j], s2);
            // Remove this product's incumbent value from the constant and
            // re-add it symbolically.
            constant -= i32::from(code_i[s]) * i32::from(code_j[s2]);
            match (f1, f2) {
                (Some(a), Some(b)) if a == b => {
                    // Same bit on both ends (auto term at shift 0): the
                    // product is +1 regardless of sign.
                    constant += 1;
                }
                (Some(a), Some(b)) => add_bilinear(&mut bilinear, a.min(b), a.max(b), 1),
                (Some(a), None) => add_linear(&mut linear, a, i32::from(code_j[s2])),
                (None, Some(b)) => add_linear(&mut linear, b, i32::from(code_i[s])),
                (None, None) => unreachable!("position {s} selected without a free endpoint"),
            }
        }

        linear.retain(|e| e.coef != 0);
        bilinear.retain(|e| e.coef != 0);
        linear.sort_unstable_by_key(|e| e.bit);
        bilinear.sort_unstable_by_key(|e| (e.a, e.b));

        Term {
            code_a: i as u32,
            code_b: j as u32,
            shift: k as u32,
            constant,
            linear,
            bilinear,
        }
    }
}

fn bit_at(bits: &[(usize, u16)], row: usize) -> Option<u16> {
    bits.iter().find(|&&(r, _)| r == row).map(|&(_, id)| id)
}

fn add_linear(entries: &mut Vec<LinearEntry>, bit: u16, coef: i32) {
    if let Some(e) = entries.iter_mut().find(|e| e.bit == bit) {
        e.coef += coef;
    } else {
        entries.push(LinearEntry { bit, coef });
    }
}

fn add_bilinear(entries: &mut Vec<BilinearEntry>, a: u16, b: u16, coef: i32) {
    if let Some(e) = entries.iter_mut().find(|e| e.a == a && e.b == b) {
        e.coef += coef;
    } else {
        entries.push(BilinearEntry { a, b, coef });
    }
}
