//! `Q ↦ I_Q(S;Y|Z)` on a flat `(S, Y, Z)` tensor, in bits.

use crate::dense::ZERO_FLOOR;

/// Mixing weight of the uniform distribution used when evaluating gradients.
pub const GRADIENT_SMOOTHING: f64 = 1e-12;

struct Marginals {
    z: Vec<f64>,
    sz: Vec<f64>,
    yz: Vec<f64>,
}

fn marginals(q: &[f64], dims: [usize; 3]) -> Marginals {
    let [ns, ny, nz] = dims;
    let mut m = Marginals {
        z: vec![0.0; nz],
        sz: vec![0.0; ns * nz],
        yz: vec![0.0; ny * nz],
    };
    for s in 0..ns {
        for y in 0..ny {
            for z in 0..nz {
                let v = q[(s * ny + y) * nz + z];
                m.z[z] += v;
                m.sz[s * nz + z] += v;
                m.yz[y * nz + z] += v;
            }
        }
    }
    m
}

pub fn cmi(q: &[f64], dims: [usize; 3]) -> f64 {
    let [ns, ny, nz] = dims;
    let m = marginals(q, dims);
    let mut total = 0.0;
    for s in 0..ns {
        for y in 0..ny {
            for z in 0..nz {
                let v = q[(s * ny + y) * nz + z];
                if v > ZERO_FLOOR {
                    total += v * (v * m.z[z] / (m.sz[s * nz + z] * m.yz[y * nz + z])).log2();
                }
            }
        }
    }
    total
}

/// Exact partial derivatives `log2(q q_z / (q_sz q_yz))` at `q` (entries must be positive).
pub fn gradient_exact(q: &[f64], dims: [usize; 3]) -> Vec<f64> {
    let [ns, ny, nz] = dims;
    let m = marginals(q, dims);
    let mut g = vec![0.0; q.len()];
    for s in 0..ns {
        for y in 0..ny {
            for z in 0..nz {
                let i = (s * ny + y) * nz + z;
                g[i] = (q[i] * m.z[z] / (m.sz[s * nz + z] * m.yz[y * nz + z])).log2();
            }
        }
    }
    g
}

/// Gradient evaluated at `(1 - ε) q + ε·uniform`.
pub fn gradient(q: &[f64], dims: [usize; 3]) -> Vec<f64> {
    let u = GRADIENT_SMOOTHING / q.len() as f64;
    let smoothed: Vec<f64> = q
        .iter()
        .map(|&v| (1.0 - GRADIENT_SMOOTHING) * v.max(0.0) + u)
        .collect();
    gradient_exact(&smoothed, dims)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
