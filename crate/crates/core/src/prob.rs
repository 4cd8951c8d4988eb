//! Finite joint distributions, channels and entropic quantities (in bits).

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dense::{self, entropy_bits, marginalize, total_size};
use crate::error::{Error, Result};

/// Tolerance on the total mass of a valid distribution.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Inputs off by at most this much are renormalized with a warning.
pub const RENORMALIZE_TOL: f64 = 1e-6;
/// Default cap on the number of entries produced by [`JointDist::tensor_power`].
pub const DEFAULT_SIZE_BUDGET: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Variable {
            name: name.into(),
            size,
        }
    }
}

/// Build a variable layout from `(name, size)` pairs.
pub fn layout(spec: &[(&str, usize)]) -> Vec<Variable> {
    spec.iter().map(|&(n, s)| Variable::new(n, s)).collect()
}

/// Dense joint probability mass function, row-major with the last variable
/// varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    variables: Vec<Variable>,
    probs: Vec<f64>,
}

fn validate_layout(variables: &[Variable]) -> Result<()> {
    let mut seen = HashSet::new();
    for v in variables {
        if v.size == 0 {
            return Err(Error::InvalidDistribution(format!(
                "variable `{}` has size 0",
                v.name
            )));
        }
        if !seen.insert(v.name.as_str()) {
            return Err(Error::DuplicateVariable(v.name.clone()));
        }
    }
    if variables.len() > 31 {
        return Err(Error::InvalidDistribution("too many variables".into()));
    }
    Ok(())
}

impl JointDist {
    /// Validates and, if the mass is off by at most [`RENORMALIZE_TOL`],
    /// renormalizes with a warning.
    pub fn new(variables: Vec<Variable>, mut probs: Vec<f64>) -> Result<Self> {
        validate_layout(&variables)?;
        let dims: Vec<usize> = variables.iter().map(|v| v.size).collect();
        if probs.len() != total_size(&dims) {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for a state space of {}",
                probs.len(),
                total_size(&dims)
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        let off = (total - 1.0).abs();
        if off > RENORMALIZE_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        if off > NORMALIZATION_TOL {
            log::warn!("probabilities sum to {total}; renormalizing");
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(JointDist { variables, probs })
    }

    pub fn from_fn(variables: Vec<Variable>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let dims: Vec<usize> = variables.iter().map(|v| v.size).collect();
        let probs = (0..total_size(&dims))
            .map(|i| f(&dense::unravel(i, &dims)))
            .collect();
        Self::new(variables, probs)
    }

    pub fn point_mass(variables: Vec<Variable>, at: &[usize]) -> Result<Self> {
        let at = at.to_vec();
        Self::from_fn(variables, move |idx| if idx == at.as_slice() { 1.0 } else { 0.0 })
    }

    pub fn uniform(variables: Vec<Variable>) -> Result<Self> {
        let n: usize = variables.iter().map(|v| v.size).product();
        Self::new(variables, vec![1.0 / n as f64; n])
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dims(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.size).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        Ok(self.variables[self.index_of(name)?].size)
    }

    /// Probability at a multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.probs[dense::ravel(idx, &self.dims())]
    }

    fn mask_of<S: AsRef<str>>(&self, names: &[S]) -> Result<u32> {
        let mut mask = 0u32;
        for n in names {
            let k = self.index_of(n.as_ref())?;
            if mask & (1 << k) != 0 {
                return Err(Error::Overlap(n.as_ref().to_string()));
            }
            mask |= 1 << k;
        }
        Ok(mask)
    }

    fn disjoint_masks<S: AsRef<str>>(&self, sets: &[&[S]]) -> Result<Vec<u32>> {
        let mut seen = 0u32;
        let mut out = Vec::with_capacity(sets.len());
        for set in sets {
            let m = self.mask_of(set)?;
            if m & seen != 0 {
                let k = (m & seen).trailing_zeros() as usize;
                return Err(Error::Overlap(self.variables[k].name.clone()));
            }
            seen |= m;
            out.push(m);
        }
        Ok(out)
    }

    /// Sum out every variable not in `keep`; kept variables stay in their
    /// original order.
    pub fn marginal<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointDist> {
        if keep.is_empty() {
            return Err(Error::EmptySet("marginal keeps no variables"));
        }
        let mask = self.mask_of(keep)?;
        Ok(self.marginal_mask(mask))
    }

    fn marginal_mask(&self, mask: u32) -> JointDist {
        let probs = marginalize(&self.dims(), &self.probs, mask);
        let variables = self
            .variables
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, v)| v.clone())
            .collect();
        JointDist { variables, probs }
    }

    fn entropy_mask(&self, mask: u32) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        entropy_bits(&marginalize(&self.dims(), &self.probs, mask))
    }

    /// `H(vars | given)` in bits.
    pub fn entropy<S: AsRef<str>>(&self, vars: &[S], given: &[S]) -> Result<f64> {
        let m = self.disjoint_masks(&[vars, given])?;
        let h = self.entropy_mask(m[0] | m[1]) - self.entropy_mask(m[1]);
        Ok(h.max(0.0))
    }

    /// `I(A;B|C)` in bits; `c` may be empty.
    pub fn cmi<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptySet("mutual information needs nonempty A and B"));
        }
        let m = self.disjoint_masks(&[a, b, c])?;
        Ok(self.cmi_masks(m[0], m[1], m[2]))
    }

    pub(crate) fn cmi_masks(&self, a: u32, b: u32, c: u32) -> f64 {
        let v = self.entropy_mask(a | c) + self.entropy_mask(b | c)
            - self.entropy_mask(a | b | c)
            - self.entropy_mask(c);
        v.max(0.0)
    }

    pub fn mutual_information<S: AsRef<str>>(&self, a: &[S], b: &[S]) -> Result<f64> {
        self.cmi(a, b, &[] as &[S])
    }

    /// Extend the joint by the output of `ch`, which depends only on its inputs.
    pub fn apply_channel(&self, ch: &Channel) -> Result<JointDist> {
        if self.index_of(&ch.output.name).is_ok() {
            return Err(Error::DuplicateVariable(ch.output.name.clone()));
        }
        let inputs: Vec<usize> = ch
            .input_vars
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<_>>()?;
        if inputs.iter().collect::<HashSet<_>>().len() != inputs.len() {
            return Err(Error::InvalidChannel("repeated input variable".into()));
        }
        let dims = self.dims();
        let rows: usize = inputs.iter().map(|&k| dims[k]).product();
        if rows != ch.rows() {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} rows but its inputs have {} joint states",
                ch.rows(),
                rows
            )));
        }
        let out = ch.output.size;
        let mut probs = Vec::with_capacity(self.probs.len() * out);
        for (flat, &p) in self.probs.iter().enumerate() {
            let idx = dense::unravel(flat, &dims);
            let row = inputs.iter().fold(0, |acc, &k| acc * dims[k] + idx[k]);
            probs.extend(ch.row(row).iter().map(|&w| p * w));
        }
        let mut variables = self.variables.clone();
        variables.push(ch.output.clone());
        JointDist::new(variables, probs)
    }

    /// `n` independent copies. Variable `X` becomes `X_1, ..., X_n`, grouped
    /// per original variable so that `tensor_group("X", n)` names the role.
    pub fn tensor_power(&self, n: usize) -> Result<JointDist> {
        self.tensor_power_with_budget(n, DEFAULT_SIZE_BUDGET)
    }

    pub fn tensor_power_with_budget(&self, n: usize, budget: usize) -> Result<JointDist> {
        if n == 0 {
            return Err(Error::InvalidParameter("tensor power needs n >= 1".into()));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let needed = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(self.len()));
        let needed = match needed {
            Some(v) if v <= budget => v,
            Some(v) => return Err(Error::SizeBudget { needed: v, budget }),
            None => return Err(Error::SizeBudget { needed: usize::MAX, budget }),
        };
        let dims = self.dims();
        let k = dims.len();
        let mut variables = Vec::with_capacity(k * n);
        for v in &self.variables {
            for copy in 1..=n {
                variables.push(Variable::new(format!("{}_{}", v.name, copy), v.size));
            }
        }
        let new_dims: Vec<usize> = variables.iter().map(|v| v.size).collect();
        let mut probs = Vec::with_capacity(needed);
        let mut copy_idx = vec![0usize; k];
        for flat in 0..needed {
            let idx = dense::unravel(flat, &new_dims);
            let mut p = 1.0;
            for c in 0..n {
                for (var, ci) in copy_idx.iter_mut().enumerate() {
                    *ci = idx[var * n + c];
                }
                p *= self.probs[dense::ravel(&copy_idx, &dims)];
            }
            probs.push(p);
        }
        JointDist::new(variables, probs)
    }

    /// Flatten each group of variables into a single product-alphabet
    /// variable (named by joining the group's names with `,`), marginalizing
    /// everything else.
    pub fn group<S: AsRef<str>>(&self, groups: &[&[S]]) -> Result<JointDist> {
        let masks = self.disjoint_masks(groups)?;
        let mut variables = Vec::with_capacity(groups.len());
        let mut members: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
        for (g, &m) in groups.iter().zip(&masks) {
            if m == 0 {
                return Err(Error::EmptySet("role group"));
            }
            let idx: Vec<usize> = g
                .iter()
                .map(|n| self.index_of(n.as_ref()))
                .collect::<Result<_>>()?;
            let name = g.iter().map(|n| n.as_ref()).collect::<Vec<_>>().join(",");
            let size = idx.iter().map(|&k| self.variables[k].size).product();
            variables.push(Variable::new(name, size));
            members.push(idx);
        }
        let dims = self.dims();
        let new_dims: Vec<usize> = variables.iter().map(|v| v.size).collect();
        let mut probs = vec![0.0; total_size(&new_dims)];
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let idx = dense::unravel(flat, &dims);
            let target = members.iter().fold(0usize, |acc, grp| {
                let inner = grp.iter().fold(0, |a, &k| a * dims[k] + idx[k]);
                acc * total_size(&grp.iter().map(|&k| dims[k]).collect::<Vec<_>>()) + inner
            });
            probs[target] += p;
        }
        Ok(JointDist { variables, probs })
    }

    /// Reorder variables; `order[i]` is the current position of new variable `i`.
    pub fn permute(&self, order: &[usize]) -> Result<JointDist> {
        let n = self.variables.len();
        let mut check = order.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        let dims = self.dims();
        let variables: Vec<Variable> = order.iter().map(|&k| self.variables[k].clone()).collect();
        let new_dims: Vec<usize> = variables.iter().map(|v| v.size).collect();
        let mut probs = vec![0.0; self.len()];
        for (flat, &p) in self.probs.iter().enumerate() {
            let idx = dense::unravel(flat, &dims);
            let new_idx: Vec<usize> = order.iter().map(|&k| idx[k]).collect();
            probs[dense::ravel(&new_idx, &new_dims)] = p;
        }
        Ok(JointDist { variables, probs })
    }

    /// Rename a variable, keeping its position.
    pub fn rename(&self, from: &str, to: &str) -> Result<JointDist> {
        let k = self.index_of(from)?;
        let mut variables = self.variables.clone();
        variables[k].name = to.to_string();
        validate_layout(&variables)?;
        Ok(JointDist {
            variables,
            probs: self.probs.clone(),
        })
    }

    pub fn l1_distance(&self, other: &JointDist) -> Result<f64> {
        if self.variables != other.variables {
            return Err(Error::DimensionMismatch("variable layouts differ".into()));
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Mixture `(1 - t) self + t other` on the same layout.
    pub fn mix(&self, other: &JointDist, t: f64) -> Result<JointDist> {
        if self.variables != other.variables {
            return Err(Error::DimensionMismatch("variable layouts differ".into()));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        JointDist::new(self.variables.clone(), probs)
    }
}

/// Names produced by [`JointDist::tensor_power`] for variable `name`.
pub fn tensor_group(name: &str, n: usize) -> Vec<String> {
    if n == 1 {
        return vec![name.to_string()];
    }
    (1..=n).map(|c| format!("{name}_{c}")).collect()
}

/// Seeded symmetric Dirichlet draw over the given layout. Equal seeds give
/// bit-identical output.
pub fn random_dirichlet(variables: Vec<Variable>, concentration: f64, seed: u64) -> Result<JointDist> {
    validate_layout(&variables)?;
    let n: usize = variables.iter().map(|v| v.size).product();
    let probs = dirichlet_vector(n, concentration, &mut ChaCha8Rng::seed_from_u64(seed))?;
    JointDist::new(variables, probs)
}

pub(crate) fn dirichlet_vector<R: rand::Rng>(n: usize, concentration: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "concentration must be positive, got {concentration}"
        )));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = v.iter().sum();
        if total > 0.0 && total.is_finite() {
            v.iter_mut().for_each(|x| *x /= total);
            return Ok(v);
        }
    }
}

/// Default names for a bare shape: `S, Y, Z`, then `W`, then `X4, X5, ...`.
pub fn default_layout(shape: &[usize]) -> Vec<Variable> {
    shape
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let name = match k {
                0 => "S".to_string(),
                1 => "Y".to_string(),
                2 => "Z".to_string(),
                3 => "W".to_string(),
                _ => format!("X{k}"),
            };
            Variable::new(name, s)
        })
        .collect()
}

/// Stochastic kernel from the joint state of `input_vars` to `output`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    input_vars: Vec<String>,
    output: Variable,
    kernel: Vec<f64>,
}

impl Channel {
    pub fn new(input_vars: Vec<String>, output: Variable, kernel: Vec<f64>) -> Result<Self> {
        if output.size == 0 || kernel.len() % output.size != 0 || kernel.is_empty() {
            return Err(Error::InvalidChannel(format!(
                "kernel of {} entries does not tile rows of {}",
                kernel.len(),
                output.size
            )));
        }
        for (r, row) in kernel.chunks(output.size).enumerate() {
            if row.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidChannel(format!("row {r} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidChannel(format!("row {r} sums to {s}")));
            }
        }
        Ok(Channel {
            input_vars,
            output,
            kernel,
        })
    }

    pub fn from_rows(input_vars: &[&str], output: Variable, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            input_vars.iter().map(|s| s.to_string()).collect(),
            output,
            rows.concat(),
        )
    }

    pub fn identity(input: &str, size: usize, output: &str) -> Self {
        Self::deterministic(&[input], size, Variable::new(output, size), |i| i)
    }

    /// Every input maps to output symbol 0 with certainty.
    pub fn constant(input_vars: &[&str], rows: usize, output: Variable) -> Self {
        Self::deterministic(input_vars, rows, output, |_| 0)
    }

    pub fn deterministic(input_vars: &[&str], rows: usize, output: Variable, f: impl Fn(usize) -> usize) -> Self {
        let mut kernel = vec![0.0; rows * output.size];
        for r in 0..rows {
            let o = f(r);
            assert!(o < output.size, "deterministic map out of range");
            kernel[r * output.size + o] = 1.0;
        }
        Channel {
            input_vars: input_vars.iter().map(|s| s.to_string()).collect(),
            output,
            kernel,
        }
    }

    /// Rows drawn independently from a symmetric Dirichlet.
    pub fn random(input_vars: &[&str], rows: usize, output: Variable, concentration: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut kernel = Vec::with_capacity(rows * output.size);
        for _ in 0..rows {
            kernel.extend(dirichlet_vector(output.size, concentration, &mut rng)?);
        }
        Self::new(input_vars.iter().map(|s| s.to_string()).collect(), output, kernel)
    }

    pub fn binary_symmetric(input: &str, output: &str, flip: f64) -> Result<Self> {
        Self::from_rows(
            &[input],
            Variable::new(output, 2),
            &[vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
        )
    }

    pub fn input_vars(&self) -> &[String] {
        &self.input_vars
    }

    pub fn output(&self) -> &Variable {
        &self.output
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn rows(&self) -> usize {
        self.kernel.len() / self.output.size
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.kernel[r * self.output.size..(r + 1) * self.output.size]
    }

    /// Post-compose with `next` (rows of `next` indexed by this output).
    pub fn compose(&self, next: &Channel) -> Result<Channel> {
        if next.rows() != self.output.size {
            return Err(Error::DimensionMismatch("channel composition".into()));
        }
        let m = next.output.size;
        let mut kernel = vec![0.0; self.rows() * m];
        for r in 0..self.rows() {
            for (mid, &w) in self.row(r).iter().enumerate() {
                for (o, &v) in next.row(mid).iter().enumerate() {
                    kernel[r * m + o] += w * v;
                }
            }
        }
        Channel::new(self.input_vars.clone(), next.output.clone(), kernel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> JointDist {
        JointDist::from_fn(layout(&[("S", 2), ("Y", 2), ("Z", 2)]), |i| {
            if i[2] == i[0] ^ i[1] {
                0.25
            } else {
                0.0
            }
        })
        .unwrap()
    }

    fn secret_bit() -> JointDist {
        JointDist::from_fn(layout(&[("S", 2), ("Y", 2), ("Z", 2)]), |i| {
            if i[0] == i[1] {
                0.25
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn marginal_of_uniform_cube_is_uniform_bit() {
        let d = JointDist::uniform(layout(&[("S", 2), ("Y", 2), ("Z", 2)])).unwrap();
        let m = d.marginal(&["S"]).unwrap();
        assert_eq!(m.probs(), &[0.5, 0.5]);
        assert_eq!(m.names(), vec!["S"]);
    }

    #[test]
    fn marginal_over_everything_is_identity() {
        let d = xor();
        assert_eq!(d.marginal(&["S", "Y", "Z"]).unwrap(), d);
    }

    #[test]
    fn marginal_preserves_original_order() {
        let d = xor();
        let m = d.marginal(&["Z", "S"]).unwrap();
        assert_eq!(m.names(), vec!["S", "Z"]);
        assert!(m.probs().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn marginal_errors() {
        let d = xor();
        assert_eq!(d.marginal(&["Q"]), Err(Error::UnknownVariable("Q".into())));
        assert!(matches!(d.marginal::<&str>(&[]), Err(Error::EmptySet(_))));
    }

    #[test]
    fn entropy_examples() {
        let bit = JointDist::uniform(layout(&[("S", 2)])).unwrap();
        assert_eq!(bit.entropy(&["S"], &[]).unwrap(), 1.0);
        let point = JointDist::point_mass(layout(&[("S", 3)]), &[1]).unwrap();
        assert_eq!(point.entropy(&["S"], &[]).unwrap(), 0.0);
        assert!(xor().entropy(&["Z"], &["S", "Y"]).unwrap().abs() < 1e-12);
        assert!(matches!(
            xor().entropy(&["S"], &["S"]),
            Err(Error::Overlap(_))
        ));
    }

    #[test]
    fn cmi_examples() {
        let d = xor();
        assert!(d.cmi(&["S"], &["Y"], &[]).unwrap().abs() < 1e-12);
        assert!((d.cmi(&["S"], &["Y"], &["Z"]).unwrap() - 1.0).abs() < 1e-12);
        assert!((secret_bit().cmi(&["S"], &["Y"], &["Z"]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(d.cmi(&["S"], &["S"], &[]), Err(Error::Overlap(_))));
    }

    #[test]
    fn apply_identity_copies_variable() {
        let d = xor();
        let e = d.apply_channel(&Channel::identity("Z", 2, "Z2")).unwrap();
        let m = e.marginal(&["Z", "Z2"]).unwrap();
        assert_eq!(m.probs(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(e.marginal(&["S", "Y", "Z"]).unwrap(), d);
    }

    #[test]
    fn apply_bsc_flips_with_given_rate() {
        let bit = JointDist::uniform(layout(&[("S", 2)])).unwrap();
        let e = bit
            .apply_channel(&Channel::binary_symmetric("S", "O", 0.1).unwrap())
            .unwrap();
        let p_diff = e.get(&[0, 1]) + e.get(&[1, 0]);
        assert!((p_diff - 0.1).abs() < 1e-15);
    }

    #[test]
    fn apply_channel_errors() {
        let d = xor();
        assert!(matches!(
            d.apply_channel(&Channel::identity("Z", 2, "S")),
            Err(Error::DuplicateVariable(_))
        ));
        assert!(matches!(
            d.apply_channel(&Channel::identity("Z", 3, "W")),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn tensor_power_examples() {
        let d = xor();
        assert_eq!(d.tensor_power(1).unwrap(), d);
        let bit = JointDist::uniform(layout(&[("S", 2)])).unwrap();
        let b3 = bit.tensor_power(3).unwrap();
        assert!((b3.entropy(&tensor_group("S", 3), &[]).unwrap() - 3.0).abs() < 1e-12);
        let d2 = d.tensor_power(2).unwrap();
        let v = d2
            .cmi(&tensor_group("S", 2), &tensor_group("Y", 2), &tensor_group("Z", 2))
            .unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!(matches!(
            d.tensor_power_with_budget(3, 100),
            Err(Error::SizeBudget { .. })
        ));
    }

    #[test]
    fn dirichlet_determinism_and_normalization() {
        let l = layout(&[("S", 2), ("Y", 2), ("Z", 2)]);
        let a = random_dirichlet(l.clone(), 1.0, 42).unwrap();
        let b = random_dirichlet(l.clone(), 1.0, 42).unwrap();
        assert_eq!(a.probs(), b.probs());
        assert!((a.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(random_dirichlet(l, 0.0, 1).is_err());
    }

    #[test]
    fn dirichlet_concentrates_for_large_alpha() {
        for seed in 0..5 {
            let d = random_dirichlet(default_layout(&[2, 2, 2]), 1e6, seed).unwrap();
            let max = d.probs().iter().cloned().fold(f64::MIN, f64::max);
            let min = d.probs().iter().cloned().fold(f64::MAX, f64::min);
            assert!(max - min < 0.01, "seed {seed}: spread {}", max - min);
        }
    }

    #[test]
    fn l1_examples() {
        let l = layout(&[("S", 2)]);
        let a = JointDist::point_mass(l.clone(), &[0]).unwrap();
        let b = JointDist::point_mass(l, &[1]).unwrap();
        assert_eq!(a.l1_distance(&a).unwrap(), 0.0);
        assert_eq!(a.l1_distance(&b).unwrap(), 2.0);
        assert_eq!(b.l1_distance(&a).unwrap(), 2.0);
        assert!(a.l1_distance(&xor()).is_err());
    }

    #[test]
    fn normalization_policy() {
        let l = layout(&[("S", 2)]);
        let d = JointDist::new(l.clone(), vec![0.5, 0.5 + 5e-7]).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(JointDist::new(l.clone(), vec![0.5, 0.6]).is_err());
        assert!(JointDist::new(l.clone(), vec![1.5, -0.5]).is_err());
        assert!(JointDist::new(layout(&[("S", 2), ("S", 1)]), vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn group_flattens_roles() {
        let d = xor();
        let g = d.group(&[&["S", "Y"][..], &["Z"][..]]).unwrap();
        assert_eq!(g.dims(), vec![4, 2]);
        assert_eq!(g.names(), vec!["S,Y", "Z"]);
        // Z is a function of (S, Y)
        assert!(g.entropy(&["Z"], &["S,Y"]).unwrap().abs() < 1e-12);
        assert!(matches!(
            d.group(&[&["S"][..], &["S"][..]]),
            Err(Error::Overlap(_))
        ));
    }

    #[test]
    fn channel_validation_and_composition() {
        assert!(Channel::from_rows(&["S"], Variable::new("O", 2), &[vec![0.5, 0.6]]).is_err());
        let a = Channel::binary_symmetric("S", "A", 0.1).unwrap();
        let b = Channel::binary_symmetric("A", "B", 0.2).unwrap();
        let c = a.compose(&b).unwrap();
        assert!((c.row(0)[1] - (0.1 * 0.8 + 0.9 * 0.2)).abs() < 1e-15);
    }
}
