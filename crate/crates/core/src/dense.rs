//! Dense row-major tensor helpers shared by the distribution type and the
//! optimizers. Axes are addressed by bit masks (bit `k` = axis `k`).

use std::f64::consts::LN_2;

/// Entries at or below this are structural zeros inside logarithms.
pub const ZERO_FLOOR: f64 = 1e-15;

pub fn total_size(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Sizes of the axes selected by `mask`, in axis order.
pub fn masked_dims(dims: &[usize], mask: u32) -> Vec<usize> {
    dims.iter()
        .enumerate()
        .filter(|(k, _)| mask & (1 << k) != 0)
        .map(|(_, &d)| d)
        .collect()
}

/// For every flat index of the full tensor, the flat index of its
/// projection onto the axes in `mask`.
pub fn projection_map(dims: &[usize], mask: u32) -> Vec<usize> {
    let n = dims.len();
    let mut target_strides = vec![0usize; n];
    let mut stride = 1;
    for k in (0..n).rev() {
        if mask & (1 << k) != 0 {
            target_strides[k] = stride;
            stride *= dims[k];
        }
    }
    let len = total_size(dims);
    let mut out = Vec::with_capacity(len);
    let mut idx = vec![0usize; n];
    let mut cur = 0usize;
    for _ in 0..len {
        out.push(cur);
        // odometer increment, last axis fastest
        for k in (0..n).rev() {
            idx[k] += 1;
            cur += target_strides[k];
            if idx[k] < dims[k] {
                break;
            }
            cur -= target_strides[k] * dims[k];
            idx[k] = 0;
        }
    }
    out
}

pub fn marginalize(dims: &[usize], probs: &[f64], mask: u32) -> Vec<f64> {
    let map = projection_map(dims, mask);
    let mut out = vec![0.0; total_size(&masked_dims(dims, mask))];
    for (p, &t) in probs.iter().zip(&map) {
        out[t] += p;
    }
    out
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > ZERO_FLOOR)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Decode a flat row-major index into a multi-index.
pub fn unravel(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        idx[k] = flat % dims[k];
        flat /= dims[k];
    }
    idx
}

pub fn ravel(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

/// A linear combination `Σ coef · H(X_mask)` of joint entropies of marginals
/// of a fixed-shape tensor, with its gradient with respect to the tensor.
#[derive(Clone, Debug)]
pub struct EntropyForm {
    dims: Vec<usize>,
    terms: Vec<Term>,
}

#[derive(Clone, Debug)]
struct Term {
    coef: f64,
    map: Vec<usize>,
    size: usize,
}

impl EntropyForm {
    pub fn new(dims: &[usize], terms: &[(f64, u32)]) -> Self {
        let terms = terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .map(|&(coef, mask)| Term {
                coef,
                map: projection_map(dims, mask),
                size: total_size(&masked_dims(dims, mask)),
            })
            .collect();
        EntropyForm {
            dims: dims.to_vec(),
            terms,
        }
    }

    /// `I(A;B|C) = H(AC) + H(BC) - H(ABC) - H(C)`.
    pub fn conditional_mutual_information(dims: &[usize], a: u32, b: u32, c: u32) -> Self {
        Self::new(dims, &Self::cmi_terms(a, b, c))
    }

    pub fn cmi_terms(a: u32, b: u32, c: u32) -> Vec<(f64, u32)> {
        vec![(1.0, a | c), (1.0, b | c), (-1.0, a | b | c), (-1.0, c)]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn marginal(&self, term: &Term, probs: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; term.size];
        for (p, &t) in probs.iter().zip(&term.map) {
            m[t] += p;
        }
        m
    }

    pub fn value(&self, probs: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * entropy_bits(&self.marginal(t, probs)))
            .sum()
    }

    /// Gradient with respect to every tensor entry, in bits.
    pub fn gradient(&self, probs: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; probs.len()];
        for t in &self.terms {
            let m = self.marginal(t, probs);
            // d/dp [-m log2 m] = -(log2 m + 1/ln2)
            let dm: Vec<f64> = m
                .iter()
                .map(|&v| -(v.max(1e-300).log2() + 1.0 / LN_2))
                .collect();
            for (gi, &ti) in g.iter_mut().zip(&t.map) {
                *gi += t.coef * dm[ti];
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_map_matches_unravel() {
        let dims = [2, 3, 2];
        let map = projection_map(&dims, 0b101);
        for (flat, &t) in map.iter().enumerate() {
            let idx = unravel(flat, &dims);
            assert_eq!(t, idx[0] * 2 + idx[2]);
        }
    }

    #[test]
    fn empty_mask_projects_to_scalar() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(marginalize(&[2, 2], &probs, 0), vec![1.0]);
    }

    #[test]
    fn ravel_roundtrip() {
        let dims = [3, 1, 4];
        for flat in 0..12 {
            assert_eq!(ravel(&unravel(flat, &dims), &dims), flat);
        }
    }
}
