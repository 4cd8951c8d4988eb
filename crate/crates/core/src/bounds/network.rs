//! A base distribution on `(S, Y, Z)` extended by a chain of channels, each
//! appending one auxiliary axis, together with an entropy-form objective on
//! the resulting joint. Channels are optimized through softmax logits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dense::{self, EntropyForm};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct DescentOptions {
    pub restarts: usize,
    pub max_steps: usize,
    pub min_step: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub(crate) struct ChannelSpec {
    /// Axes the channel reads, in the order its rows are indexed.
    pub inputs: Vec<usize>,
    pub output: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Network {
    base: Vec<f64>,
    specs: Vec<ChannelSpec>,
    dims: Vec<usize>,
    form: EntropyForm,
    /// Per joint entry: index into `base`, then into each kernel.
    base_idx: Vec<usize>,
    kernel_idx: Vec<Vec<usize>>,
    /// Rows whose base-axis input state has zero probability.
    dead: Vec<Vec<bool>>,
}

/// Row-stochastic kernels, one per channel, row-major.
pub(crate) type Kernels = Vec<Vec<f64>>;

impl Network {
    pub fn new(base: &[f64], base_dims: [usize; 3], specs: Vec<ChannelSpec>, terms: &[(f64, u32)]) -> Self {
        let mut dims = base_dims.to_vec();
        for sp in &specs {
            debug_assert!(sp.inputs.iter().all(|&a| a < dims.len()));
            dims.push(sp.output);
        }
        let len = dense::total_size(&dims);
        let mut base_idx = Vec::with_capacity(len);
        let mut kernel_idx = vec![Vec::with_capacity(len); specs.len()];
        for flat in 0..len {
            let idx = dense::unravel(flat, &dims);
            base_idx.push(dense::ravel(&idx[..3], &base_dims));
            for (k, sp) in specs.iter().enumerate() {
                let row = sp.inputs.iter().fold(0, |acc, &a| acc * dims[a] + idx[a]);
                kernel_idx[k].push(row * sp.output + idx[3 + k]);
            }
        }
        // a row is dead when the base part of its input state carries no mass
        let dead = specs
            .iter()
            .map(|sp| {
                let base_mask: u32 = sp.inputs.iter().filter(|&&a| a < 3).map(|&a| 1 << a).sum();
                let marg = dense::marginalize(&base_dims, base, base_mask);
                let rows: usize = sp.inputs.iter().map(|&a| dims[a]).product();
                (0..rows)
                    .map(|r| {
                        let idx = dense::unravel(r, &sp.inputs.iter().map(|&a| dims[a]).collect::<Vec<_>>());
                        let base_part: Vec<usize> = sp
                            .inputs
                            .iter()
                            .zip(&idx)
                            .filter(|(&a, _)| a < 3)
                            .map(|(_, &i)| i)
                            .collect();
                        let dims_part = dense::masked_dims(&base_dims, base_mask);
                        marg[dense::ravel(&base_part, &dims_part)] <= 0.0
                    })
                    .collect()
            })
            .collect();
        Network {
            base: base.to_vec(),
            form: EntropyForm::new(&dims, terms),
            specs,
            dims,
            base_idx,
            kernel_idx,
            dead,
        }
    }

    pub fn rows(&self, k: usize) -> usize {
        self.specs[k].inputs.iter().map(|&a| self.dims[a]).product()
    }

    pub fn outputs(&self, k: usize) -> usize {
        self.specs[k].output
    }

    pub fn channels(&self) -> usize {
        self.specs.len()
    }

    pub fn joint(&self, kernels: &[Vec<f64>]) -> Vec<f64> {
        (0..self.base_idx.len())
            .map(|x| {
                let mut p = self.base[self.base_idx[x]];
                for (k, ker) in kernels.iter().enumerate() {
                    if p == 0.0 {
                        break;
                    }
                    p *= ker[self.kernel_idx[k][x]];
                }
                p
            })
            .collect()
    }

    pub fn value(&self, kernels: &[Vec<f64>]) -> f64 {
        self.form.value(&self.joint(kernels))
    }

    /// Gradient with respect to every kernel entry.
    pub fn kernel_gradient(&self, kernels: &[Vec<f64>]) -> Kernels {
        let g = self.form.gradient(&self.joint(kernels));
        let mut out: Kernels = kernels.iter().map(|k| vec![0.0; k.len()]).collect();
        for x in 0..g.len() {
            let b = self.base[self.base_idx[x]];
            if b == 0.0 {
                continue;
            }
            for k in 0..kernels.len() {
                let mut rest = b * g[x];
                for (j, ker) in kernels.iter().enumerate() {
                    if j != k {
                        rest *= ker[self.kernel_idx[j][x]];
                    }
                }
                out[k][self.kernel_idx[k][x]] += rest;
            }
        }
        out
    }

    /// Gradient with respect to the logits `θ`, where each row is `softmax(θ_row)`.
    pub fn logit_gradient(&self, logits: &[Vec<f64>]) -> (f64, Kernels) {
        let kernels = self.softmax(logits);
        let value = self.value(&kernels);
        let gk = self.kernel_gradient(&kernels);
        let mut out = Vec::with_capacity(kernels.len());
        for k in 0..kernels.len() {
            let m = self.specs[k].output;
            let mut gl = vec![0.0; kernels[k].len()];
            for r in 0..self.rows(k) {
                if self.dead[k][r] {
                    continue;
                }
                let w = &kernels[k][r * m..(r + 1) * m];
                let gw = &gk[k][r * m..(r + 1) * m];
                let mean: f64 = w.iter().zip(gw).map(|(a, b)| a * b).sum();
                for o in 0..m {
                    gl[r * m + o] = w[o] * (gw[o] - mean);
                }
            }
            out.push(gl);
        }
        (value, out)
    }

    pub fn softmax(&self, logits: &[Vec<f64>]) -> Kernels {
        logits
            .iter()
            .enumerate()
            .map(|(k, th)| {
                let m = self.specs[k].output;
                let mut w = vec![0.0; th.len()];
                for r in 0..th.len() / m {
                    let row = &th[r * m..(r + 1) * m];
                    if self.dead[k][r] {
                        w[r * m..(r + 1) * m].iter_mut().for_each(|v| *v = 1.0 / m as f64);
                        continue;
                    }
                    let top = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let e: Vec<f64> = row.iter().map(|v| (v - top).exp()).collect();
                    let s: f64 = e.iter().sum();
                    for o in 0..m {
                        w[r * m + o] = e[o] / s;
                    }
                }
                w
            })
            .collect()
    }

    /// Logits close to `kernels`, used to start descent next to an exact
    /// candidate.
    fn soften(&self, kernels: &[Vec<f64>], mix: f64) -> Kernels {
        kernels
            .iter()
            .enumerate()
            .map(|(k, ker)| {
                let m = self.specs[k].output as f64;
                ker.iter().map(|&w| ((1.0 - mix) * w + mix / m).ln()).collect()
            })
            .collect()
    }

    fn random_logits(&self, rng: &mut ChaCha8Rng) -> Kernels {
        (0..self.channels())
            .map(|k| {
                (0..self.rows(k) * self.outputs(k))
                    .map(|_| {
                        let v: f64 = StandardNormal.sample(rng);
                        2.0 * v
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct DescentResult {
    pub value: f64,
    pub kernels: Kernels,
    pub converged: bool,
    /// Index of the winning start (exact candidates first).
    pub start: usize,
}

/// Gradient descent on the logits with step halving on non-descent.
fn descend(net: &Network, mut logits: Kernels, opts: &DescentOptions) -> DescentResult {
    let (mut value, mut grad) = net.logit_gradient(&logits);
    let mut step = 1.0;
    let mut converged = false;
    for _ in 0..opts.max_steps {
        let norm: f64 = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-14 {
            converged = true;
            break;
        }
        loop {
            let trial: Kernels = logits
                .iter()
                .zip(&grad)
                .map(|(th, g)| th.iter().zip(g).map(|(a, b)| a - step * b).collect())
                .collect();
            let v = net.value(&net.softmax(&trial));
            if v < value {
                logits = trial;
                let (nv, ng) = net.logit_gradient(&logits);
                value = nv;
                grad = ng;
                step *= 2.0;
                break;
            }
            step *= 0.5;
            if step < opts.min_step {
                break;
            }
        }
        if step < opts.min_step {
            converged = true;
            break;
        }
    }
    DescentResult {
        value,
        kernels: net.softmax(&logits),
        converged,
        start: 0,
    }
}

/// Minimize the network objective. Exact candidates are evaluated as given,
/// then descent runs from a softened copy of each candidate and from
/// `opts.restarts` random logits. The lowest value wins, ties going to the
/// lowest start index.
pub(crate) fn minimize(net: &Network, candidates: &[Kernels], opts: &DescentOptions) -> DescentResult {
    let exact: Vec<DescentResult> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| DescentResult {
            value: net.value(c),
            kernels: c.clone(),
            converged: true,
            start: i,
        })
        .collect();
    let offset = exact.len();
    let starts = candidates.len() + opts.restarts;
    let descended: Vec<DescentResult> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let logits = if i < candidates.len() {
                net.soften(&candidates[i], 1e-3)
            } else {
                let k = (i - candidates.len()) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                net.random_logits(&mut rng)
            };
            let mut r = descend(net, logits, opts);
            r.start = offset + i;
            r
        })
        .collect();
    let improved = descended.iter().filter(|r| r.converged).count();
    log::debug!("{improved} of {starts} descents met the step criterion");
    exact
        .into_iter()
        .chain(descended)
        .reduce(|best, r| if r.value < best.value { r } else { best })
        .expect("at least one start")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{default_layout, random_dirichlet};

    fn check_gradient(net: &Network, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = net.random_logits(&mut rng);
        let (_, g) = net.logit_gradient(&logits);
        let h = 1e-6;
        for k in 0..logits.len() {
            for i in 0..logits[k].len() {
                let mut plus = logits.clone();
                let mut minus = logits.clone();
                plus[k][i] += h;
                minus[k][i] -= h;
                let fd = (net.value(&net.softmax(&plus)) - net.value(&net.softmax(&minus))) / (2.0 * h);
                let rel = (fd - g[k][i]).abs() / g[k][i].abs().max(1e-3);
                assert!(rel < 1e-4, "channel {k} entry {i}: fd {fd} vs {}", g[k][i]);
            }
        }
    }

    #[test]
    fn logit_gradients_match_central_differences() {
        for seed in 0..3 {
            let d = random_dirichlet(default_layout(&[2, 2, 3]), 1.0, seed).unwrap();
            let p = d.probs();
            // one-way: U|S, V|U
            let mut terms = EntropyForm::cmi_terms(1 << 3, 1 << 1, 1 << 4);
            terms.extend(EntropyForm::cmi_terms(1 << 3, 1 << 2, 1 << 4).into_iter().map(|(c, m)| (-c, m)));
            let net = Network::new(
                p,
                [2, 2, 3],
                vec![
                    ChannelSpec { inputs: vec![0], output: 4 },
                    ChannelSpec { inputs: vec![3], output: 2 },
                ],
                &terms,
            );
            check_gradient(&net, seed);
            // B1-style: Z'|SYZ
            let mut terms = EntropyForm::cmi_terms(1, 2, 8);
            terms.extend(EntropyForm::cmi_terms(3, 8, 4));
            let net = Network::new(p, [2, 2, 3], vec![ChannelSpec { inputs: vec![0, 1, 2], output: 5 }], &terms);
            check_gradient(&net, 10 + seed);
            // reduced intrinsic: U|SYZ, Z'|ZU, plus H(U)
            let mut terms = EntropyForm::cmi_terms(1, 2, 16);
            terms.push((1.0, 8));
            let net = Network::new(
                p,
                [2, 2, 3],
                vec![
                    ChannelSpec { inputs: vec![0, 1, 2], output: 2 },
                    ChannelSpec { inputs: vec![2, 3], output: 6 },
                ],
                &terms,
            );
            check_gradient(&net, 20 + seed);
        }
    }

    #[test]
    fn descent_never_ascends_from_candidates() {
        let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, 4).unwrap();
        let net = Network::new(
            d.probs(),
            [2, 2, 2],
            vec![ChannelSpec { inputs: vec![2], output: 2 }],
            &EntropyForm::cmi_terms(1, 2, 8),
        );
        let identity = vec![vec![1.0, 0.0, 0.0, 1.0]];
        let opts = DescentOptions {
            restarts: 3,
            max_steps: 200,
            min_step: 1e-9,
            seed: 1,
        };
        let r = minimize(&net, &[identity.clone()], &opts);
        assert!(r.value <= net.value(&identity));
        assert!((net.value(&r.kernels) - r.value).abs() < 1e-12);
    }
}
