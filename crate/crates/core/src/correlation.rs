//! Circular correlations, the sum-of-squares objective, and incremental
//! maintenance of all pairwise correlations under chip flips.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{AczParameter, CodeFamily};

/// Circular cross-correlation of two ±1 sequences of equal length:
/// entry `k` is the inner product of `w` with `v` shifted left by `k`.
pub fn cross_correlation(w: &[i8], v: &[i8]) -> Result<Vec<i32>> {
    if w.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: v.len(),
        });
    }
    let n = w.len();
    Ok((0..n).map(|k| correlation_at(w, v, k)).collect())
}

fn correlation_at(w: &[i8], v: &[i8], k: usize) -> i32 {
    let n = w.len();
    let mut acc = 0i32;
    for s in 0..n {
        acc += i32::from(w[s]) * i32::from(v[(s + k) % n]);
    }
    acc
}

/// Objective values of a family: the integer sum of squared correlations over
/// all unordered code pairs and all shifts, and two normalized forms.
///
/// `mos` divides `isl` by the term count n·m·(m+1)/2. `sidelobe_mos` first
/// removes the m zero-shift autocorrelation peaks (each contributing n²) from
/// the numerator; this is the form used when comparing families against
/// published Gold/Weil figures, since the peaks are constant for every ±1
/// family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub isl: i64,
    pub mos: f64,
    pub sidelobe_mos: f64,
}

impl ObjectiveValue {
    pub fn from_isl(isl: i64, n: usize, m: usize) -> Self {
        let terms = (n as f64) * (m as f64) * (m as f64 + 1.0) / 2.0;
        let peaks = (m as i64) * (n as i64) * (n as i64);
        ObjectiveValue {
            isl,
            mos: isl as f64 / terms,
            sidelobe_mos: (isl - peaks) as f64 / terms,
        }
    }
}

/// All pairwise circular correlations of a family, stored per unordered pair
/// (i, j) with i <= j as a length-n vector. Mutated only through
/// [`apply_assignment`], which keeps the values and the cached objective
/// consistent with the family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationTable {
    n: usize,
    m: usize,
    values: Vec<i32>,
    isl: i64,
    shift_one_energy: i64,
}

impl CorrelationTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn pair_offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.m);
        // Row-major upper triangle including the diagonal.
        (i * (2 * self.m - i + 1) / 2 + (j - i)) * self.n
    }

    /// Correlation vector of the pair (i, j); requires i <= j.
    pub fn pair(&self, i: usize, j: usize) -> &[i32] {
        let off = self.pair_offset(i, j);
        &self.values[off..off + self.n]
    }

    /// Correlation of pair (i, j) at shift k; requires i <= j.
    pub fn value(&self, i: usize, j: usize, k: usize) -> i32 {
        self.values[self.pair_offset(i, j) + k]
    }

    /// Sum of squared correlations over all pairs and shifts, with the
    /// normalized forms. Maintained incrementally; equals a from-scratch
    /// recomputation at all times.
    pub fn objective(&self) -> ObjectiveValue {
        ObjectiveValue::from_isl(self.isl, self.n, self.m)
    }

    pub fn isl(&self) -> i64 {
        self.isl
    }

    /// Stage-one objective: the sum of squared shift-one autocorrelations
    /// over all codes.
    pub fn stage_one_objective(&self) -> i64 {
        self.shift_one_energy
    }

    /// True when every code's shift-one autocorrelation is within the ACZ
    /// bound for this length.
    pub fn all_acz(&self) -> bool {
        let g = AczParameter::for_length(self.n).bound();
        (0..self.m).all(|i| self.value(i, i, 1).abs() <= g)
    }

    /// Recomputes the cached sums by folding over the stored values.
    pub(crate) fn recompute_cached(&mut self) {
        self.isl = self.values.iter().map(|&v| i64::from(v) * i64::from(v)).sum();
        self.shift_one_energy = (0..self.m)
            .map(|i| {
                let v = i64::from(self.value(i, i, 1));
                v * v
            })
            .sum();
    }
}

/// Computes all pairwise correlations of a family by direct integer
/// summation.
pub fn build_table(family: &CodeFamily) -> CorrelationTable {
    build_table_with_threads(family, 1)
}

/// Like [`build_table`], optionally splitting the pair loop across `threads`
/// worker threads. Results are bit-identical to the sequential order because
/// every pair is computed independently into its own slot.
pub fn build_table_with_threads(family: &CodeFamily, threads: usize) -> CorrelationTable {
    let n = family.n();
    let m = family.m();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i..m).map(move |j| (i, j)))
        .collect();

    let fill = |chunk: &mut [i32], &(i, j): &(usize, usize)| {
        let w = family.code(i);
        let v = family.code(j);
        for (k, slot) in chunk.iter_mut().enumerate() {
            *slot = correlation_at(w, v, k);
        }
    };

    let mut values = vec![0i32; pairs.len() * n];
    if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        pool.install(|| {
            values
                .par_chunks_mut(n)
                .zip(pairs.par_iter())
                .for_each(|(chunk, pair)| fill(chunk, pair));
        });
    } else {
        for (chunk, pair) in values.chunks_mut(n).zip(pairs.iter()) {
            fill(chunk, pair);
        }
    }

    let mut table = CorrelationTable {
        n,
        m,
        values,
        isl: 0,
        shift_one_energy: 0,
    };
    table.recompute_cached();
    table
}

/// One chip update: set (code, row) to `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChipAssignment {
    pub code: usize,
    pub row: usize,
    pub value: i8,
}

/// Applies chip updates to the family and patches every affected correlation
/// vector in place, returning the new objective.
///
/// Cost is proportional to (changed bits)·n·m: a flip of chip (i, r) touches
/// only the m pairs involving code i, and each pair's vector is adjusted in
/// O(n) from the partner chips at the two aligned positions.
pub fn apply_assignment(
    family: &mut CodeFamily,
    table: &mut CorrelationTable,
    assignment: &[ChipAssignment],
) -> Result<ObjectiveValue> {
    let n = family.n();
    let m = family.m();
    for a in assignment {
        if a.code >= m || a.row >= n {
            return Err(Error::IndexOutOfRange {
                code: a.code,
                row: a.row,
                n,
                m,
            });
        }
        if a.value != 1 && a.value != -1 {
            return Err(Error::InvalidChip {
                code: a.code,
                row: a.row,
                value: a.value,
            });
        }
    }

    for a in assignment {
        let old = family.chip(a.code, a.row);
        if old == a.value {
            continue;
        }
        family.set_chip(a.code, a.row, a.value);
        flip_chip(family, table, a.code, a.row, i32::from(a.value) - i32::from(old));
    }
    Ok(table.objective())
}

/// Patches the table after chip (i, r) changed by `delta` (±2). The family
/// already holds the new value; no partner position coincides with (i, r)
/// for the shifts that change, so current chips are the right coefficients.
fn flip_chip(family: &CodeFamily, table: &mut CorrelationTable, i: usize, r: usize, delta: i32) {
    let n = table.n;
    let m = table.m;

    for j in 0..m {
        if j == i {
            continue;
        }
        let partner = family.code(j);
        let (lo, hi) = (i.min(j), i.max(j));
        let off = table.pair_offset(lo, hi);
        if i < j {
            // Entry k sums chip_i[s] * chip_j[s+k]; position r pairs with
            // partner[(r+k) % n].
            for k in 0..n {
                let v = &mut table.values[off + k];
                let old = i64::from(*v);
                *v += delta * i32::from(partner[(r + k) % n]);
                table.isl += i64::from(*v) * i64::from(*v) - old * old;
            }
        } else {
            // Entry k sums chip_j[s] * chip_i[s+k]; position r pairs with
            // partner[(r-k) mod n].
            for k in 0..n {
                let v = &mut table.values[off + k];
                let old = i64::from(*v);
                *v += delta * i32::from(partner[(r + n - k) % n]);
                table.isl += i64::from(*v) * i64::from(*v) - old * old;
            }
        }
    }

    // Auto pair: shift 0 stays at n; shift k picks up the two partners at
    // rows r±k, which coincide only when 2k == n.
    let own = family.code(i);
    let off = table.pair_offset(i, i);
    for k in 1..n {
        let v = &mut table.values[off + k];
        let old = i64::from(*v);
        *v += delta * (i32::from(own[(r + k) % n]) + i32::from(own[(r + n - k) % n]));
        let new = i64::from(*v);
        table.isl += new * new - old * old;
        if k == 1 {
            table.shift_one_energy += new * new - old * old;
        }
    }
}

/// Verifies the Fourier energy identity for a pair of ±1 sequences: the sum
/// of squared circular correlations equals (1/n)·Σ|W_f|²·|V_f|² over the
/// length-n DFTs, within `1e-9` relative tolerance.
pub fn parseval_check(w: &[i8], v: &[i8]) -> Result<bool> {
    let correlations = cross_correlation(w, v)?;
    let lhs: f64 = correlations
        .iter()
        .map(|&c| f64::from(c) * f64::from(c))
        .sum();

    let n = w.len();
    let wf = dft(w);
    let vf = dft(v);
    let rhs: f64 = (0..n)
        .map(|f| {
            let (wr, wi) = wf[f];
            let (vr, vi) = vf[f];
            (wr * wr + wi * wi) * (vr * vr + vi * vi)
        })
        .sum::<f64>()
        / n as f64;

    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    Ok((lhs - rhs).abs() <= 1e-9 * scale)
}

/// Naive length-n DFT, adequate for the few-hundred-chip sequences used here.
fn dft(x: &[i8]) -> Vec<(f64, f64)> {
    let n = x.len();
    let step = -2.0 * std::f64::consts::PI / n as f64;
    (0..n)
        .map(|f| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &xt) in x.iter().enumerate() {
                let angle = step * (f * t % n) as f64;
                re += f64::from(xt) * angle.cos();
                im += f64::from(xt) * angle.sin();
            }
            (re, im)
        })
        .collect()
}
