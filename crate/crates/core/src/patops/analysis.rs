use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use super::{OutputSpec, OutputTerm, PatternOperation, SymbolicValue};
use crate::eqcore::bell;
use crate::error::{Error, Result};

const ENUMERATION_CAP: f64 = 5e7;

/// Calls `f` on every canonical symbolic row of length `len`: named values
/// from `support`, fresh symbols in first-use order. Stops when `f` returns false.
fn for_each_row(len: usize, support: &[u64], what: &str, mut f: impl FnMut(&[SymbolicValue]) -> bool) -> Result<()> {
    if len > 24 {
        return Err(Error::resource(format!("{what} enumeration over arity"), 12));
    }
    // Rows with m named positions: C(len, m) · |support|^m · Bell(len - m).
    let est: f64 = (0..=len)
        .map(|m| {
            let choose = (0..m).fold(1.0, |a, i| a * (len - i) as f64 / (i + 1) as f64);
            choose * (support.len() as f64).powi(m as i32) * bell(len - m) as f64
        })
        .sum();
    if est > ENUMERATION_CAP {
        return Err(Error::resource(format!("{what} enumeration"), ENUMERATION_CAP as u64));
    }
    fn rec(
        row: &mut Vec<SymbolicValue>,
        len: usize,
        fresh: u32,
        support: &[u64],
        f: &mut dyn FnMut(&[SymbolicValue]) -> bool,
    ) -> bool {
        if row.len() == len {
            return f(row);
        }
        for &s in support {
            row.push(SymbolicValue::Named(s));
            let go = rec(row, len, fresh, support, f);
            row.pop();
            if !go {
                return false;
            }
        }
        for j in 0..=fresh {
            row.push(SymbolicValue::Fresh(j));
            let go = rec(row, len, fresh.max(j + 1), support, f);
            row.pop();
            if !go {
                return false;
            }
        }
        true
    }
    rec(&mut Vec::with_capacity(len), len, 0, support, &mut f);
    Ok(())
}

/// Directions (1-based) in which `op` is injective: differing values there
/// always give differing outputs.
pub fn directional_injectivity(op: &PatternOperation) -> Result<BTreeSet<usize>> {
    let n = op.arity();
    let support = op.pattern_support();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    for_each_row(2 * n, &support, "directional injectivity", |row| {
        let (a, b) = row.split_at(n);
        if op.eval_term(a) == op.eval_term(b) {
            alive.retain(|&i| a[i] == b[i]);
        }
        !alive.is_empty()
    })?;
    Ok(alive.into_iter().map(|i| i + 1).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyProfile {
    /// `depends[i]` for 0-based argument position i.
    pub depends: Vec<bool>,
    pub essentially_unary: bool,
}

pub fn dependency_profile(op: &PatternOperation) -> Result<DependencyProfile> {
    let n = op.arity();
    let support = op.pattern_support();
    let mut depends = vec![false; n];
    for_each_row(n, &support, "dependency", |row| {
        let base = op.eval_term(row);
        let next_fresh = row
            .iter()
            .filter_map(|v| match v {
                SymbolicValue::Fresh(j) => Some(j + 1),
                SymbolicValue::Named(_) => None,
            })
            .max()
            .unwrap_or(0);
        let mut alt = row.to_vec();
        for i in 0..n {
            if depends[i] {
                continue;
            }
            let candidates = support
                .iter()
                .map(|&s| SymbolicValue::Named(s))
                .chain((0..=next_fresh).map(SymbolicValue::Fresh));
            for v in candidates {
                if v == row[i] {
                    continue;
                }
                alt[i] = v;
                if op.eval_term(&alt) != base {
                    depends[i] = true;
                    break;
                }
            }
            alt[i] = row[i];
        }
        depends.iter().any(|d| !d)
    })?;
    let essentially_unary = depends.iter().filter(|&&d| d).count() <= 1;
    Ok(DependencyProfile { depends, essentially_unary })
}

/// Whether `op` has at most two values and factors as `φ0(φ1(x1) ⊕ … ⊕ φn(xn))`
/// with `φi` into {0,1}. Decided on the cells of the pattern support plus one
/// generic value per argument.
pub fn is_quasilinear(op: &PatternOperation) -> Result<bool> {
    let n = op.arity();
    let mut cells: Vec<SymbolicValue> = op.pattern_support().into_iter().map(SymbolicValue::Named).collect();
    cells.push(SymbolicValue::Fresh(0));
    let size = (cells.len() as f64).powi(n as i32);
    if size > ENUMERATION_CAP {
        return Err(Error::resource("quasilinearity cell grid", ENUMERATION_CAP as u64));
    }
    let size = size as usize;
    let c = cells.len();
    let decode = |mut idx: usize, out: &mut [usize]| {
        for slot in out.iter_mut().rev() {
            *slot = idx % c;
            idx /= c;
        }
    };
    let mut grid = Vec::with_capacity(size);
    let mut values = BTreeSet::new();
    let mut digits = vec![0usize; n];
    for idx in 0..size {
        decode(idx, &mut digits);
        let row: Vec<SymbolicValue> = digits.iter().map(|&d| cells[d]).collect();
        let r = &op.rules()[op.first_match(|j| row[j])];
        match r.output {
            OutputSpec::Fresh { .. } => return Ok(false),
            OutputSpec::Const(v) => {
                values.insert(v);
                grid.push(v);
            }
        }
    }
    if values.len() > 2 {
        return Ok(false);
    }
    if values.len() <= 1 {
        return Ok(true);
    }
    let high = *values.iter().next_back().expect("two values");
    let bit: Vec<bool> = grid.iter().map(|&v| v == high).collect();
    // Sum of unary functions iff it equals its reconstruction from the lines through cell 0.
    let stride: Vec<usize> = (0..n).map(|i| c.pow((n - 1 - i) as u32)).collect();
    let base = bit[0];
    for idx in 0..size {
        decode(idx, &mut digits);
        let mut acc = base;
        for i in 0..n {
            acc ^= bit[digits[i] * stride[i]] ^ base;
        }
        if acc != bit[idx] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Binary operations injective in some direction whose unary sections are
/// all constant or injective.
pub fn binary_bar_membership(op: &PatternOperation) -> Result<bool> {
    if op.arity() != 2 {
        return Err(Error::Arity(format!("binary_bar_membership needs a binary operation, got arity {}", op.arity())));
    }
    if directional_injectivity(op)?.is_empty() {
        return Ok(false);
    }
    let support = op.pattern_support();
    let fixed: Vec<SymbolicValue> = support
        .iter()
        .map(|&s| SymbolicValue::Named(s))
        .chain([SymbolicValue::Fresh(0), SymbolicValue::Fresh(1)])
        .collect();
    let free: Vec<SymbolicValue> = support
        .iter()
        .map(|&s| SymbolicValue::Named(s))
        .chain((0..3).map(SymbolicValue::Fresh))
        .collect();
    for pos in 0..2 {
        for &c in &fixed {
            let outs: Vec<OutputTerm<SymbolicValue>> = free
                .iter()
                .map(|&x| if pos == 0 { op.eval_term(&[c, x]) } else { op.eval_term(&[x, c]) })
                .collect();
            let constant = outs.windows(2).all(|w| w[0] == w[1]);
            let injective = outs.iter().collect::<HashSet<_>>().len() == outs.len();
            if !constant && !injective {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patops::builtin_operation;

    fn op(name: &str) -> PatternOperation {
        builtin_operation(name).unwrap()
    }

    #[test]
    fn quasilinear_examples() {
        assert!(is_quasilinear(&op("qxor")).unwrap());
        assert!(is_quasilinear(&op("qxor({1,4},7,2)")).unwrap());
        assert!(!is_quasilinear(&op("f3")).unwrap());
        assert!(!is_quasilinear(&op("ess(3)")).unwrap());
        assert!(!is_quasilinear(&op("ess(2)")).unwrap());
        assert!(is_quasilinear(&op("const(5)")).unwrap());
    }

    #[test]
    fn injectivity_examples() {
        assert!(directional_injectivity(&op("f3")).unwrap().is_empty());
        assert_eq!(directional_injectivity(&op("g3")).unwrap(), BTreeSet::from([1]));
        assert_eq!(directional_injectivity(&op("richard")).unwrap(), BTreeSet::from([2]));
        assert_eq!(directional_injectivity(&op("inj(2)")).unwrap(), BTreeSet::from([1, 2]));
        for k in 1..=3 {
            assert_eq!(directional_injectivity(&op(&format!("bar({k})"))).unwrap(), BTreeSet::from([1]));
        }
    }

    #[test]
    fn dependency_examples() {
        let p = dependency_profile(&op("proj(3,2)")).unwrap();
        assert_eq!(p.depends, vec![false, true, false]);
        assert!(p.essentially_unary);
        for k in 3..=5 {
            let p = dependency_profile(&op(&format!("f({k})"))).unwrap();
            assert!(p.depends.iter().all(|&d| d));
            assert!(!p.essentially_unary);
        }
        let p = dependency_profile(&op("const(5)")).unwrap();
        assert_eq!(p.depends, vec![false]);
    }

    #[test]
    fn bar_membership_examples() {
        for k in 1..=3 {
            assert!(binary_bar_membership(&op(&format!("bar({k})"))).unwrap());
        }
        assert!(!binary_bar_membership(&op("richard")).unwrap());
        assert!(binary_bar_membership(&op("inj(2)")).unwrap());
        assert!(binary_bar_membership(&op("f3")).is_err());
    }
}
