//! Exact rational feasibility for `A w <= b, w >= 0` (phase one of the
//! simplex method with Bland's rule).

use num::{One, Signed, Zero};

use crate::syntax::Rational;

/// Returns a nonnegative `w` with `A w <= b`, or `None` if none exists.
pub fn lp_feasible(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let m = a.len();
    assert_eq!(m, b.len());
    let n = a.first().map_or(0, Vec::len);
    assert!(a.iter().all(|row| row.len() == n));

    let negative: Vec<usize> = (0..m).filter(|&i| b[i].is_negative()).collect();
    let cols = n + m + negative.len();
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![Rational::zero(); cols + 1];
        let flip = b[i].is_negative();
        let sign = if flip { -Rational::one() } else { Rational::one() };
        for j in 0..n {
            row[j] = &a[i][j] * &sign;
        }
        row[n + i] = sign.clone();
        row[cols] = &b[i] * &sign;
        if flip {
            let k = negative.iter().position(|&r| r == i).unwrap();
            row[n + m + k] = Rational::one();
            basis.push(n + m + k);
        } else {
            basis.push(n + i);
        }
        tab.push(row);
    }

    // Reduced costs of minimizing the sum of the artificial variables.
    let mut cost = vec![Rational::zero(); cols + 1];
    for c in &mut cost[n + m..cols] {
        *c = Rational::one();
    }
    for &i in &negative {
        for j in 0..=cols {
            cost[j] -= &tab[i][j];
        }
    }

    while let Some(enter) = (0..cols).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if tab[i][enter].is_positive() {
                let ratio = &tab[i][cols] / &tab[i][enter];
                let better = match &leave {
                    None => true,
                    Some((l, r)) => ratio < *r || (ratio == *r && basis[i] < basis[*l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // Phase one is bounded below by zero, so a leaving row exists.
        let (row, _) = leave.expect("phase one objective is bounded");
        pivot(&mut tab, &mut cost, row, enter);
        basis[row] = enter;
    }

    if !cost[cols].is_zero() {
        return None;
    }
    let mut w = vec![Rational::zero(); n];
    for (i, &v) in basis.iter().enumerate() {
        if v < n {
            w[v] = tab[i][cols].clone();
        }
    }
    Some(w)
}

fn pivot(tab: &mut [Vec<Rational>], cost: &mut [Rational], row: usize, col: usize) {
    let p = tab[row][col].clone();
    for v in tab[row].iter_mut() {
        *v /= &p;
    }
    let pivot_row = tab[row].clone();
    let eliminate = |target: &mut Vec<Rational>| {
        let f = target[col].clone();
        if !f.is_zero() {
            for (t, p) in target.iter_mut().zip(&pivot_row) {
                *t -= &f * p;
            }
        }
    };
    for (i, r) in tab.iter_mut().enumerate() {
        if i != row {
            eliminate(r);
        }
    }
    let mut c = cost.to_vec();
    eliminate(&mut c);
    cost.clone_from_slice(&c);
}
