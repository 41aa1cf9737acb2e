use super::{EqSystem, VarId};

/// Which variables of the original system have a positive least fixed
/// point, and where the survivors went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Positivity {
    pub positive: Vec<bool>,
    /// Index in the cleaned system, per original variable.
    pub map: Vec<Option<VarId>>,
}

impl Positivity {
    pub fn survivors(&self) -> usize {
        self.positive.iter().filter(|&&b| b).count()
    }
}

/// Removes the variables whose least fixed point is zero, together with
/// every monomial mentioning them. Positivity is the least boolean fixed
/// point of "some monomial has only positive factors".
pub fn clean(s: &EqSystem) -> (EqSystem, Positivity) {
    let mut positive = vec![false; s.len()];
    loop {
        let mut changed = false;
        for i in 0..s.len() {
            if !positive[i] && s.equation(i).iter().any(|m| m.vars.iter().all(|&v| positive[v])) {
                positive[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let (cleaned, map) = s.restrict(&positive);
    (cleaned, Positivity { positive, map })
}
