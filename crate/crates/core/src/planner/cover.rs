//! Exact minimum fractional edge covers.
//!
//! The cover LP — minimize the total edge weight subject to every vertex
//! in the target set receiving weight at least one — is solved exactly in
//! rational arithmetic by enumerating basic feasible solutions: every
//! optimum lies at a vertex of the feasible polyhedron, and each vertex is
//! determined by a full set of active constraints.

use num_rational::Rational64;
use num_traits::{One, Zero};

use super::PlanError;

pub type Rat = Rational64;

/// Minimum total weight over fractional covers of `cover` using `edges`,
/// together with one optimal weight vector.
///
/// `edges[j]` lists the vertices of edge `j`; `cover` lists the vertices
/// that must be covered. Vertices not in `cover` are unconstrained.
pub fn min_fractional_cover(
    edges: &[Vec<usize>],
    cover: &[usize],
) -> Result<(Rat, Vec<Rat>), PlanError> {
    let n = edges.len();
    if cover.is_empty() {
        return Ok((Rat::zero(), vec![Rat::zero(); n]));
    }
    for &v in cover {
        if !edges.iter().any(|e| e.contains(&v)) {
            return Err(PlanError::Infeasible { vertex: v });
        }
    }
    let m = cover.len();
    // Constraint rows: m cover rows (sum of incident weights >= 1) then n
    // nonnegativity rows (x_j >= 0).
    let row = |i: usize, j: usize| -> Rat {
        if i < m {
            if edges[j].contains(&cover[i]) {
                Rat::one()
            } else {
                Rat::zero()
            }
        } else if i - m == j {
            Rat::one()
        } else {
            Rat::zero()
        }
    };
    let rhs = |i: usize| -> Rat {
        if i < m {
            Rat::one()
        } else {
            Rat::zero()
        }
    };

    let total = m + n;
    let mut best: Option<(Rat, Vec<Rat>)> = None;
    let mut active = vec![0usize; n];
    enumerate_combinations(total, n, &mut active, 0, 0, &mut |chosen| {
        let mut a = vec![vec![Rat::zero(); n]; n];
        let mut b = vec![Rat::zero(); n];
        for (k, &i) in chosen.iter().enumerate() {
            for j in 0..n {
                a[k][j] = row(i, j);
            }
            b[k] = rhs(i);
        }
        let Some(x) = solve_square(a, b) else {
            return;
        };
        if x.iter().any(|v| v < &Rat::zero()) {
            return;
        }
        for i in 0..m {
            let lhs: Rat = (0..n).map(|j| row(i, j) * x[j]).sum();
            if lhs < Rat::one() {
                return;
            }
        }
        let objective: Rat = x.iter().sum();
        match &best {
            Some((obj, _)) if *obj <= objective => {}
            _ => best = Some((objective, x)),
        }
    });
    best.ok_or(PlanError::Infeasible { vertex: cover[0] })
}

fn enumerate_combinations(
    total: usize,
    k: usize,
    scratch: &mut Vec<usize>,
    next: usize,
    depth: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        f(scratch);
        return;
    }
    for i in next..total {
        if total - i < k - depth {
            break;
        }
        scratch[depth] = i;
        enumerate_combinations(total, k, scratch, i + 1, depth + 1, f);
    }
}

/// Gaussian elimination with partial pivoting over rationals. Returns
/// `None` for singular systems.
fn solve_square(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for j in col..n {
            a[col][j] /= p;
        }
        b[col] /= p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col];
                for j in col..n {
                    let v = a[col][j];
                    a[r][j] -= factor * v;
                }
                let v = b[col];
                b[r] -= factor * v;
            }
        }
    }
    Some(b)
}
