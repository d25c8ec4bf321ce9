//! Exact solvers for the restricted problem: exhaustive enumeration with
//! incremental term updates, and depth-first branch-and-bound.
//!
//! Both return the feasible assignment with the smallest restricted
//! objective; among equal optima, the lexicographically smallest assignment
//! in free-bit order with -1 < +1. Branch-and-bound prunes a subtree only
//! when its lower bound strictly exceeds the best objective found, so every
//! tied optimum is still visited and the tie-break matches enumeration
//! exactly.

use super::{PartialProblem, Term, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};

/// Solver output: the optimal free-bit values, the restricted objective at
/// the optimum, and the number of complete assignments evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub assignment: Vec<i8>,
    pub objective: i64,
    pub nodes_explored: u64,
}

fn lex_less(a: &[i8], b: &[i8]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Flattened per-bit views of where each bit occurs in a term list.
struct Occurrences {
    linear: Vec<Vec<(u32, i32)>>,          // bit -> (term, coef)
    bilinear: Vec<Vec<(u32, u16, i32)>>,   // bit -> (term, other bit, coef)
}

impl Occurrences {
    fn build(terms: &[Term], bit_count: usize) -> Self {
        let mut linear = vec![Vec::new(); bit_count];
        let mut bilinear = vec![Vec::new(); bit_count];
        for (idx, term) in terms.iter().enumerate() {
            for e in &term.linear {
                linear[e.bit as usize].push((idx as u32, e.coef));
            }
            for e in &term.bilinear {
                bilinear[e.a as usize].push((idx as u32, e.b, e.coef));
                bilinear[e.b as usize].push((idx as u32, e.a, e.coef));
            }
        }
        Occurrences { linear, bilinear }
    }
}

/// Enumerates all assignments with the default subset-size cap.
pub fn solve_exhaustive(problem: &PartialProblem) -> Result<SolveResult> {
    solve_exhaustive_capped(problem, DEFAULT_ENUMERATION_CAP)
}

/// Enumerates all 2^|S| assignments in Gray-code order, updating every
/// affected term value incrementally on each single-bit step.
pub fn solve_exhaustive_capped(problem: &PartialProblem, cap: usize) -> Result<SolveResult> {
    let k = problem.free_bits.len();
    if k > cap || k >= 63 {
        return Err(Error::BlockTooLarge {
            size: k,
            cap: cap.min(62),
        });
    }
    let g = problem.g;

    let mut assignment = vec![-1i8; k];
    let mut term_values: Vec<i32> = problem
        .terms
        .iter()
        .map(|t| t.eval(&assignment))
        .collect();
    let mut objective: i64 = problem.offset
        + term_values
            .iter()
            .map(|&v| i64::from(v) * i64::from(v))
            .sum::<i64>();
    let mut acz_values: Vec<i32> = problem
        .acz
        .iter()
        .map(|a| a.term.eval(&assignment))
        .collect();
    let mut violations = acz_values.iter().filter(|v| v.abs() > g).count();

    let obj_occ = Occurrences::build(&problem.terms, k);
    let acz_occ = {
        let owned: Vec<Term> = problem.acz.iter().map(|a| a.term.clone()).collect();
        Occurrences::build(&owned, k)
    };

    let mut best: Option<(i64, Vec<i8>)> = None;
    let consider = |candidate: i64, state: &[i8], best: &mut Option<(i64, Vec<i8>)>| match best {
        Some((b, _)) if candidate > *b => {}
        Some((b, a)) if candidate == *b => {
            if lex_less(state, a) {
                *a = state.to_vec();
            }
        }
        _ => *best = Some((candidate, state.to_vec())),
    };

    if violations == 0 {
        consider(objective, &assignment, &mut best);
    }

    for step in 1u64..(1u64 << k) {
        let f = step.trailing_zeros() as usize;
        let old = assignment[f];
        let new = -old;
        assignment[f] = new;
        let delta = i32::from(new) - i32::from(old);

        for &(t, coef) in &obj_occ.linear[f] {
            let v = &mut term_values[t as usize];
            let before = i64::from(*v);
            *v += delta * coef;
            objective += i64::from(*v) * i64::from(*v) - before * before;
        }
        for &(t, other, coef) in &obj_occ.bilinear[f] {
            let v = &mut term_values[t as usize];
            let before = i64::from(*v);
            *v += delta * coef * i32::from(assignment[other as usize]);
            objective += i64::from(*v) * i64::from(*v) - before * before;
        }
        for &(t, coef) in &acz_occ.linear[f] {
            update_acz(&mut acz_values[t as usize], delta * coef, g, &mut violations);
        }
        for &(t, other, coef) in &acz_occ.bilinear[f] {
            let d = delta * coef * i32::from(assignment[other as usize]);
            update_acz(&mut acz_values[t as usize], d, g, &mut violations);
        }

        if violations == 0 {
            consider(objective, &assignment, &mut best);
        }
    }

    match best {
        Some((objective, assignment)) => Ok(SolveResult {
            assignment,
            objective,
            nodes_explored: 1u64 << k,
        }),
        None => Err(Error::Infeasible),
    }
}

fn update_acz(value: &mut i32, delta: i32, g: i32, violations: &mut usize) {
    let was_violated = value.abs() > g;
    *value += delta;
    let is_violated = value.abs() > g;
    match (was_violated, is_violated) {
        (false, true) => *violations += 1,
        (true, false) => *violations -= 1,
        _ => {}
    }
}

/// Exact branch-and-bound over the free bits.
///
/// Bits are assigned in descending order of total absolute coefficient mass,
/// incumbent sign first. Terms without bilinear entries are bounded in
/// aggregate by expanding the sum of squared affine forms (constant +
/// Gram-matrix machinery, O(|S|) per node); terms with bilinear entries and
/// the ACZ forms carry per-term reachability intervals. All bounds are exact
/// lower bounds, so results match enumeration on every instance.
pub fn solve_branch_and_bound(problem: &PartialProblem) -> Result<SolveResult> {
    let k = problem.free_bits.len();
    let mut search = Search::new(problem, k);
    if search.root_infeasible() {
        return Err(Error::Infeasible);
    }
    search.dfs(0);
    match search.best {
        Some((objective, assignment)) => Ok(SolveResult {
            assignment,
            objective,
            nodes_explored: search.leaves,
        }),
        None => Err(Error::Infeasible),
    }
}

/// Interval state of a term tracked individually: the fixed part accumulated
/// from assigned bits and the absolute mass of entries still involving an
/// unassigned bit.
#[derive(Debug, Clone)]
struct IntervalState {
    fixed: i32,
    mass: i32,
}

impl IntervalState {
    fn of(term: &Term) -> Self {
        let mass = term.linear.iter().map(|e| e.coef.abs()).sum::<i32>()
            + term.bilinear.iter().map(|e| e.coef.abs()).sum::<i32>();
        IntervalState {
            fixed: term.constant,
            mass,
        }
    }

    /// Lower bound of the squared value over all completions.
    fn square_bound(&self) -> i64 {
        let slack = self.fixed.abs() - self.mass;
        if slack <= 0 {
            0
        } else {
            i64::from(slack) * i64::from(slack)
        }
    }

    fn can_reach(&self, lo: i32, hi: i32) -> bool {
        self.fixed - self.mass <= hi && self.fixed + self.mass >= lo
    }
}

struct Search<'p> {
    problem: &'p PartialProblem,
    k: usize,
    order: Vec<usize>,
    assigned: Vec<i8>, // 0 = unassigned

    // Linear-only terms, bounded in aggregate. `gram[f][h]` sums
    // coef_f * coef_h over those terms; `residual[f]` sums (current fixed
    // part) * coef_f; `sq_sum` is the sum of squared fixed parts.
    gram: Vec<i64>,
    sq_sum: i64,
    residual: Vec<i64>,
    trace_unassigned: i64,
    offdiag_unassigned: i64,
    row_unassigned: Vec<i64>,

    // Terms with bilinear entries, bounded per term.
    bterms: Vec<IntervalState>,
    bterm_bound_sum: i64,
    bocc: Occurrences,

    // ACZ constraint forms.
    acz: Vec<IntervalState>,
    aocc: Occurrences,

    best: Option<(i64, Vec<i8>)>,
    leaves: u64,
}

impl<'p> Search<'p> {
    fn new(problem: &'p PartialProblem, k: usize) -> Self {
        let (linear_terms, bilinear_terms): (Vec<&Term>, Vec<&Term>) = {
            let mut lin = Vec::new();
            let mut bil = Vec::new();
            for t in &problem.terms {
                if t.bilinear.is_empty() {
                    lin.push(t);
                } else {
                    bil.push(t);
                }
            }
            (lin, bil)
        };

        let mut gram = vec![0i64; k * k];
        let mut residual = vec![0i64; k];
        let mut sq_sum = 0i64;
        for t in &linear_terms {
            sq_sum += i64::from(t.constant) * i64::from(t.constant);
            for e1 in &t.linear {
                residual[e1.bit as usize] += i64::from(t.constant) * i64::from(e1.coef);
                for e2 in &t.linear {
                    gram[e1.bit as usize * k + e2.bit as usize] +=
                        i64::from(e1.coef) * i64::from(e2.coef);
                }
            }
        }
        let trace_unassigned = (0..k).map(|f| gram[f * k + f]).sum();
        let row_unassigned: Vec<i64> = (0..k)
            .map(|f| {
                (0..k)
                    .filter(|&h| h != f)
                    .map(|h| gram[f * k + h].abs())
                    .sum()
            })
            .collect();
        let offdiag_unassigned = row_unassigned.iter().sum::<i64>() / 2;

        let owned_bil: Vec<Term> = bilinear_terms.iter().map(|&t| t.clone()).collect();
        let bocc = Occurrences::build(&owned_bil, k);
        let bterms: Vec<IntervalState> = owned_bil.iter().map(IntervalState::of).collect();
        let bterm_bound_sum = bterms.iter().map(IntervalState::square_bound).sum();

        let owned_acz: Vec<Term> = problem.acz.iter().map(|a| a.term.clone()).collect();
        let aocc = Occurrences::build(&owned_acz, k);
        let acz: Vec<IntervalState> = owned_acz.iter().map(IntervalState::of).collect();

        // Branch on heavy bits first; ties by bit id for determinism.
        let mut mass = vec![0i64; k];
        for t in &problem.terms {
            for e in &t.linear {
                mass[e.bit as usize] += i64::from(e.coef.abs());
            }
            for e in &t.bilinear {
                mass[e.a as usize] += i64::from(e.coef.abs());
                mass[e.b as usize] += i64::from(e.coef.abs());
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&f| (std::cmp::Reverse(mass[f]), f));

        Search {
            problem,
            k,
            order,
            assigned: vec![0; k],
            gram,
            sq_sum,
            residual,
            trace_unassigned,
            offdiag_unassigned,
            row_unassigned,
            bterms,
            bterm_bound_sum,
            bocc,
            acz,
            aocc,
            best: None,
            leaves: 0,
        }
    }

    fn root_infeasible(&self) -> bool {
        let g = self.problem.g;
        self.acz.iter().any(|a| !a.can_reach(-g, g))
    }

    fn assign(&mut self, f: usize, value: i8) {
        let val = i64::from(value);
        self.assigned[f] = value;

        self.sq_sum += 2 * val * self.residual[f] + self.gram[f * self.k + f];
        for h in 0..self.k {
            self.residual[h] += val * self.gram[h * self.k + f];
        }
        self.trace_unassigned -= self.gram[f * self.k + f];
        self.offdiag_unassigned -= self.row_unassigned[f];
        for h in 0..self.k {
            if h != f && self.assigned[h] == 0 {
                self.row_unassigned[h] -= self.gram[h * self.k + f].abs();
            }
        }

        let value_i32 = i32::from(value);
        for &(t, coef) in &self.bocc.linear[f] {
            let t = t as usize;
            self.bterm_bound_sum -= self.bterms[t].square_bound();
            self.bterms[t].fixed += value_i32 * coef;
            self.bterms[t].mass -= coef.abs();
            self.bterm_bound_sum += self.bterms[t].square_bound();
        }
        for &(t, other, coef) in &self.bocc.bilinear[f] {
            let partner = self.assigned[other as usize];
            if partner != 0 {
                let t = t as usize;
                self.bterm_bound_sum -= self.bterms[t].square_bound();
                self.bterms[t].fixed += value_i32 * i32::from(partner) * coef;
                self.bterms[t].mass -= coef.abs();
                self.bterm_bound_sum += self.bterms[t].square_bound();
            }
        }
        for &(t, coef) in &self.aocc.linear[f] {
            self.acz[t as usize].fixed += value_i32 * coef;
            self.acz[t as usize].mass -= coef.abs();
        }
        for &(t, other, coef) in &self.aocc.bilinear[f] {
            let partner = self.assigned[other as usize];
            if partner != 0 {
                self.acz[t as usize].fixed += value_i32 * i32::from(partner) * coef;
                self.acz[t as usize].mass -= coef.abs();
            }
        }
    }

    /// Exact inverse of [`Search::assign`]. Assignments are undone in stack
    /// order, so any partner that was assigned when `f` was assigned is still
    /// assigned here, and the bilinear-entry updates replay symmetrically.
    fn undo(&mut self, f: usize, value: i8) {
        let value_i32 = i32::from(value);
        for &(t, other, coef) in &self.aocc.bilinear[f] {
            let partner = self.assigned[other as usize];
            if partner != 0 {
                self.acz[t as usize].fixed -= value_i32 * i32::from(partner) * coef;
                self.acz[t as usize].mass += coef.abs();
            }
        }
        for &(t, coef) in &self.aocc.linear[f] {
            self.acz[t as usize].fixed -= value_i32 * coef;
            self.acz[t as usize].mass += coef.abs();
        }
        for &(t, other, coef) in &self.bocc.bilinear[f] {
            let partner = self.assigned[other as usize];
            if partner != 0 {
                let t = t as usize;
                self.bterm_bound_sum -= self.bterms[t].square_bound();
                self.bterms[t].fixed -= value_i32 * i32::from(partner) * coef;
                self.bterms[t].mass += coef.abs();
                self.bterm_bound_sum += self.bterms[t].square_bound();
            }
        }
        for &(t, coef) in &self.bocc.linear[f] {
            let t = t as usize;
            self.bterm_bound_sum -= self.bterms[t].square_bound();
            self.bterms[t].fixed -= value_i32 * coef;
            self.bterms[t].mass += coef.abs();
            self.bterm_bound_sum += self.bterms[t].square_bound();
        }

        for h in 0..self.k {
            if h != f && self.assigned[h] == 0 {
                self.row_unassigned[h] += self.gram[h * self.k + f].abs();
            }
        }
        self.offdiag_unassigned += self.row_unassigned[f];
        self.trace_unassigned += self.gram[f * self.k + f];
        let val = i64::from(value);
        for h in 0..self.k {
            self.residual[h] -= val * self.gram[h * self.k + f];
        }
        self.sq_sum -= 2 * val * self.residual[f] + self.gram[f * self.k + f];

        self.assigned[f] = 0;
    }

    /// Valid lower bound on the restricted objective over all completions of
    /// the current partial assignment.
    fn bound(&self) -> i64 {
        let mut linear_part = self.sq_sum + self.trace_unassigned - 2 * self.offdiag_unassigned;
        for h in 0..self.k {
            if self.assigned[h] == 0 {
                linear_part -= 2 * self.residual[h].abs();
            }
        }
        self.problem.offset + self.bterm_bound_sum + linear_part.max(0)
    }

    /// Checks only the constraint forms touched by the bit just assigned;
    /// untouched forms keep their reachability.
    fn touched_acz_ok(&self, f: usize) -> bool {
        let g = self.problem.g;
        self.aocc.linear[f]
            .iter()
            .map(|&(t, _)| t)
            .chain(self.aocc.bilinear[f].iter().map(|&(t, _, _)| t))
            .all(|t| self.acz[t as usize].can_reach(-g, g))
    }

    fn dfs(&mut self, depth: usize) {
        if depth == self.k {
            self.leaves += 1;
            let g = self.problem.g;
            debug_assert!(self.acz.iter().all(|a| a.mass == 0));
            if self.acz.iter().all(|a| a.fixed.abs() <= g) {
                let objective = self.problem.offset + self.sq_sum + self.bterm_bound_sum;
                match &mut self.best {
                    Some((b, a)) => {
                        if objective < *b
                            || (objective == *b && lex_less(&self.assigned, a))
                        {
                            *b = objective;
                            *a = self.assigned.clone();
                        }
                    }
                    None => self.best = Some((objective, self.assigned.clone())),
                }
            }
            return;
        }

        let f = self.order[depth];
        let incumbent = self.problem.incumbent[f];
        for value in [incumbent, -incumbent] {
            self.assign(f, value);
            if self.touched_acz_ok(f) {
                let prune = match &self.best {
                    Some((b, _)) => self.bound() > *b,
                    None => false,
                };
                if !prune {
                    self.dfs(depth + 1);
                }
            }
            self.undo(f, value);
        }
    }
}
