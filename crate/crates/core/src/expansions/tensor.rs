//! Tensor-product sheets of one-dimensional families.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{ExpansionFamily, FamilySpec};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::terms::AnalyticTerm;

/// Candidate in the best-first walk over per-axis ranks.
struct Candidate {
    product: f64,
    ranks: Vec<usize>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.product
            .total_cmp(&other.product)
            .then_with(|| other.ranks.cmp(&self.ranks))
    }
}

fn product_of(bounds: &[Vec<f64>], index: &[usize]) -> f64 {
    bounds.iter().zip(index).fold(1.0, |acc, (b, &j)| acc * b[j])
}

/// Products `f^1_{j_1} x ... x f^d_{j_d}` of the axis families, the `max_terms`
/// largest by product of sup bounds, in decreasing order; ties go to the
/// lexicographically smaller multi-index.
pub fn build_tensor_sheet(families: &[ExpansionFamily], max_terms: usize) -> Result<ExpansionFamily> {
    if families.len() < 2 {
        return Err(Error::invalid("a tensor sheet needs at least two axis families"));
    }
    if families.iter().any(|f| f.is_empty()) {
        return Err(Error::invalid("axis family is empty"));
    }
    if families.iter().any(|f| f.dim() != 1) {
        return Err(Error::invalid("axis families must be one-dimensional"));
    }
    if max_terms == 0 {
        return Err(Error::invalid("max_terms must be >= 1"));
    }
    let available = families.iter().try_fold(1usize, |acc, f| acc.checked_mul(f.len()));
    if available.is_some_and(|a| a < max_terms) {
        return Err(Error::invalid(format!(
            "max_terms = {max_terms} exceeds the {} available products",
            available.unwrap_or(usize::MAX)
        )));
    }

    let bounds: Vec<Vec<f64>> = families.iter().map(ExpansionFamily::sup_bounds).collect();
    // per axis: term indices by decreasing bound, ties by index
    let order: Vec<Vec<usize>> = bounds
        .iter()
        .map(|b| {
            let mut idx: Vec<usize> = (0..b.len()).collect();
            idx.sort_by(|&i, &j| b[j].total_cmp(&b[i]).then(i.cmp(&j)));
            idx
        })
        .collect();
    let to_index = |ranks: &[usize]| -> Vec<usize> {
        ranks.iter().zip(&order).map(|(&r, o)| o[r]).collect()
    };

    let start = vec![0usize; families.len()];
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    heap.push(Candidate { product: product_of(&bounds, &to_index(&start)), ranks: start.clone() });
    seen.insert(start);
    let mut picked: Vec<(f64, Vec<usize>)> = Vec::with_capacity(max_terms);
    let mut threshold = f64::INFINITY;
    while let Some(c) = heap.pop() {
        // keep popping past max_terms while products tie with the last kept one
        if picked.len() >= max_terms && c.product < threshold {
            break;
        }
        threshold = c.product;
        for axis in 0..c.ranks.len() {
            if c.ranks[axis] + 1 < order[axis].len() {
                let mut next = c.ranks.clone();
                next[axis] += 1;
                if seen.insert(next.clone()) {
                    let product = product_of(&bounds, &to_index(&next));
                    heap.push(Candidate { product, ranks: next });
                }
            }
        }
        picked.push((c.product, to_index(&c.ranks)));
    }
    picked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    picked.truncate(max_terms);

    let terms = picked
        .iter()
        .map(|(_, index)| {
            AnalyticTerm::tensor(
                index.iter().zip(families).map(|(&j, f)| f.terms()[j].clone()).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let kernel = Kernel::tensor(families.iter().map(|f| f.kernel().clone()).collect())?;
    let spec = FamilySpec::TensorSheet {
        axes: families.iter().map(|f| f.spec().clone()).collect(),
        max_terms,
    };
    let notes = families.iter().flat_map(|f| f.notes().iter().cloned()).collect();
    ExpansionFamily::new(terms, kernel, spec, None, notes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansions::{build_bm_kl, build_bridge_kl};

    #[test]
    fn one_term_axes_give_one_product() {
        let a = build_bm_kl(1.0, 1).unwrap();
        let f = build_tensor_sheet(&[a.clone(), a], 1).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.dim(), 2);
        let v = f.terms()[0].evaluate_at(&[1.0, 1.0]);
        assert!((v - 0.8105695).abs() < 1e-7);
    }

    #[test]
    fn order_is_decreasing_and_matches_brute_force() {
        let a = build_bm_kl(1.0, 12).unwrap();
        let b = build_bridge_kl(2.0, 9).unwrap();
        let f = build_tensor_sheet(&[a.clone(), b.clone()], 40).unwrap();
        let bounds = f.sup_bounds();
        assert!(bounds.windows(2).all(|w| w[1] <= w[0]));
        let mut all: Vec<f64> = Vec::new();
        for x in a.sup_bounds() {
            for y in b.sup_bounds() {
                all.push(1.0 * x * y);
            }
        }
        all.sort_by(|p, q| q.total_cmp(p));
        for (got, want) in bounds.iter().zip(&all) {
            assert_eq!(got, want);
        }
    }

    #[test]
    fn full_sheet_reconstructs_product_kernel() {
        let a = build_bm_kl(1.0, 60).unwrap();
        let f = build_tensor_sheet(&[a.clone(), a], 3600).unwrap();
        let (s, t) = ([0.3, 0.4], [0.8, 0.9]);
        let err = (f.partial_covariance(&s, &t, f.len()) - 0.3 * 0.4).abs();
        assert!(err <= 5e-3, "err={err}");
    }

    #[test]
    fn rejects_bad_requests() {
        let a = build_bm_kl(1.0, 3).unwrap();
        assert!(build_tensor_sheet(std::slice::from_ref(&a), 1).is_err());
        assert!(build_tensor_sheet(&[a.clone(), a.clone()], 10).is_err());
        assert!(build_tensor_sheet(&[a.clone(), a], 0).is_err());
    }
}
