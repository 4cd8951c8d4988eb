use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::JointDist;

/// Membership tolerance on the pair marginals.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Which variables play Alice (`s`), Bob (`y`) and Eve (`z`). Each role may be
/// a group of variables; groups are flattened to product alphabets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub s: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
}

impl Roles {
    pub fn new(s: &[&str], y: &[&str], z: &[&str]) -> Self {
        let own = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        Roles {
            s: own(s),
            y: own(y),
            z: own(z),
        }
    }

    /// The first three variables of `d`, in order.
    pub fn first_three(d: &JointDist) -> Result<Self> {
        let names = d.names();
        if names.len() < 3 {
            return Err(Error::InvalidParameter(
                "default roles need at least three variables".into(),
            ));
        }
        Ok(Roles::new(&[names[0]], &[names[1]], &[names[2]]))
    }

    /// Same roles with Bob and Eve exchanged.
    pub fn swapped(&self) -> Self {
        Roles {
            s: self.s.clone(),
            y: self.z.clone(),
            z: self.y.clone(),
        }
    }

    pub fn groups(&self) -> [&[String]; 3] {
        [&self.s, &self.y, &self.z]
    }

    /// Flatten `d` onto the three roles (in S, Y, Z order).
    pub fn flatten(&self, d: &JointDist) -> Result<JointDist> {
        for (g, name) in self.groups().iter().zip(["S", "Y", "Z"]) {
            if g.is_empty() {
                return Err(Error::InvalidParameter(format!("role {name} is empty")));
            }
        }
        d.group(&self.groups())
    }
}

/// Signed elementary move on one `s`-slice: `+1` at `(y0,z0)` and `(y1,z1)`,
/// `-1` at `(y0,z1)` and `(y1,z0)`. Both pair marginals are unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleMove {
    pub s: usize,
    pub y0: usize,
    pub y1: usize,
    pub z0: usize,
    pub z1: usize,
}

impl CycleMove {
    /// `(flat index, sign)` of the four touched entries.
    pub fn entries(&self, dims: [usize; 3]) -> [(usize, f64); 4] {
        let [_, ny, nz] = dims;
        let at = |y: usize, z: usize| (self.s * ny + y) * nz + z;
        [
            (at(self.y0, self.z0), 1.0),
            (at(self.y1, self.z1), 1.0),
            (at(self.y0, self.z1), -1.0),
            (at(self.y1, self.z0), -1.0),
        ]
    }

    /// Feasible step interval `[lo, hi]` for `q + t·move >= 0`.
    pub fn interval(&self, q: &[f64], dims: [usize; 3]) -> (f64, f64) {
        let e = self.entries(dims);
        let lo = -q[e[0].0].min(q[e[1].0]);
        let hi = q[e[2].0].min(q[e[3].0]);
        (lo.min(0.0), hi.max(0.0))
    }

    pub fn apply(&self, q: &mut [f64], dims: [usize; 3], t: f64) {
        for (i, sgn) in self.entries(dims) {
            q[i] = (q[i] + sgn * t).max(0.0);
        }
    }
}

/// The set of joint distributions sharing the `(S,Y)` and `(S,Z)` marginals
/// of a base distribution.
#[derive(Clone, Debug)]
pub struct MarginalPolytope {
    base: JointDist,
    dims: [usize; 3],
    pair_sy: Vec<f64>,
    pair_sz: Vec<f64>,
    cycle_basis: Vec<CycleMove>,
}

impl MarginalPolytope {
    /// Flatten `d` onto `roles` and extract the pair marginals.
    pub fn build(d: &JointDist, roles: &Roles) -> Result<Self> {
        Self::from_flat(roles.flatten(d)?)
    }

    /// `base` must already have exactly three variables (S, Y, Z).
    pub fn from_flat(base: JointDist) -> Result<Self> {
        let dv = base.dims();
        if dv.len() != 3 {
            return Err(Error::DimensionMismatch(
                "marginal polytope needs exactly three role variables".into(),
            ));
        }
        let dims = [dv[0], dv[1], dv[2]];
        let [ns, ny, nz] = dims;
        let mut pair_sy = vec![0.0; ns * ny];
        let mut pair_sz = vec![0.0; ns * nz];
        for s in 0..ns {
            for y in 0..ny {
                for z in 0..nz {
                    let p = base.probs()[(s * ny + y) * nz + z];
                    pair_sy[s * ny + y] += p;
                    pair_sz[s * nz + z] += p;
                }
            }
        }
        let mut cycle_basis = Vec::with_capacity(ns * (ny - 1) * (nz - 1));
        for s in 0..ns {
            for y in 1..ny {
                for z in 1..nz {
                    cycle_basis.push(CycleMove {
                        s,
                        y0: 0,
                        y1: y,
                        z0: 0,
                        z1: z,
                    });
                }
            }
        }
        Ok(MarginalPolytope {
            base,
            dims,
            pair_sy,
            pair_sz,
            cycle_basis,
        })
    }

    pub fn base(&self) -> &JointDist {
        &self.base
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn pair_sy(&self) -> &[f64] {
        &self.pair_sy
    }

    pub fn pair_sz(&self) -> &[f64] {
        &self.pair_sz
    }

    pub fn cycle_basis(&self) -> &[CycleMove] {
        &self.cycle_basis
    }

    /// Every elementary 4-cycle (all pairs `y0 < y1`, `z0 < z1`). Contains the
    /// basis and positively spans the tangent cone when one side has size 2.
    pub fn elementary_moves(&self) -> Vec<CycleMove> {
        let [ns, ny, nz] = self.dims;
        let mut out = Vec::new();
        for s in 0..ns {
            for y0 in 0..ny {
                for y1 in y0 + 1..ny {
                    for z0 in 0..nz {
                        for z1 in z0 + 1..nz {
                            out.push(CycleMove { s, y0, y1, z0, z1 });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn p_s(&self, s: usize) -> f64 {
        let ny = self.dims[1];
        self.pair_sy[s * ny..(s + 1) * ny].iter().sum()
    }

    /// `Q(s,y,z) = P(s,y) P(s,z) / P(s)`, zero on empty `s`-slices.
    pub fn feasible_point(&self) -> Vec<f64> {
        let [ns, ny, nz] = self.dims;
        let mut q = vec![0.0; ns * ny * nz];
        for s in 0..ns {
            let ps = self.p_s(s);
            if ps <= 0.0 {
                continue;
            }
            for y in 0..ny {
                for z in 0..nz {
                    q[(s * ny + y) * nz + z] = self.pair_sy[s * ny + y] * self.pair_sz[s * nz + z] / ps;
                }
            }
        }
        q
    }

    pub fn feasible_dist(&self) -> JointDist {
        self.to_dist(self.feasible_point())
    }

    pub(crate) fn to_dist(&self, q: Vec<f64>) -> JointDist {
        JointDist::new(self.base.variables().to_vec(), q)
            .expect("points of the polytope are distributions")
    }

    /// Largest absolute deviation of `q`'s pair marginals from the polytope's.
    pub fn marginal_residual(&self, q: &[f64]) -> f64 {
        let [ns, ny, nz] = self.dims;
        let mut sy = vec![0.0; ns * ny];
        let mut sz = vec![0.0; ns * nz];
        for s in 0..ns {
            for y in 0..ny {
                for z in 0..nz {
                    let v = q[(s * ny + y) * nz + z];
                    sy[s * ny + y] += v;
                    sz[s * nz + z] += v;
                }
            }
        }
        let d1 = sy.iter().zip(&self.pair_sy).map(|(a, b)| (a - b).abs());
        let d2 = sz.iter().zip(&self.pair_sz).map(|(a, b)| (a - b).abs());
        d1.chain(d2).fold(0.0, f64::max)
    }

    pub fn contains_probs(&self, q: &[f64]) -> bool {
        q.len() == self.base.len()
            && q.iter().all(|&v| v >= -1e-12)
            && self.marginal_residual(q) <= MEMBERSHIP_TOL
    }

    pub fn contains(&self, q: &JointDist) -> bool {
        q.dims() == self.base.dims() && self.contains_probs(q.probs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{default_layout, layout, random_dirichlet};

    #[test]
    fn basis_size_matches_polytope_dimension() {
        for (shape, expected) in [([2, 2, 2], 2), ([3, 3, 3], 12), ([2, 4, 3], 12)] {
            let d = random_dirichlet(default_layout(&shape), 1.0, 3).unwrap();
            let poly = MarginalPolytope::build(&d, &Roles::new(&["S"], &["Y"], &["Z"])).unwrap();
            assert_eq!(poly.cycle_basis().len(), expected);
        }
    }

    #[test]
    fn moves_preserve_membership() {
        let d = random_dirichlet(default_layout(&[3, 3, 2]), 1.0, 11).unwrap();
        let poly = MarginalPolytope::build(&d, &Roles::new(&["S"], &["Y"], &["Z"])).unwrap();
        let q0 = poly.feasible_point();
        assert!(poly.contains_probs(&q0));
        for mv in poly.cycle_basis() {
            let (lo, hi) = mv.interval(&q0, poly.dims());
            let mut q = q0.clone();
            mv.apply(&mut q, poly.dims(), 0.5 * hi + 0.1 * lo);
            assert!(poly.contains_probs(&q));
        }
    }

    #[test]
    fn xor_feasible_point_is_uniform() {
        let d = JointDist::from_fn(layout(&[("S", 2), ("Y", 2), ("Z", 2)]), |i| {
            if i[2] == i[0] ^ i[1] { 0.25 } else { 0.0 }
        })
        .unwrap();
        let poly = MarginalPolytope::build(&d, &Roles::first_three(&d).unwrap()).unwrap();
        assert!(poly.feasible_point().iter().all(|&q| (q - 0.125).abs() < 1e-15));
        assert!(!poly.contains_probs(&[0.125; 7]));
    }

    #[test]
    fn secret_bit_feasible_point_is_itself() {
        let d = JointDist::from_fn(layout(&[("S", 2), ("Y", 2), ("Z", 2)]), |i| {
            if i[0] == i[1] { 0.25 } else { 0.0 }
        })
        .unwrap();
        let poly = MarginalPolytope::build(&d, &Roles::first_three(&d).unwrap()).unwrap();
        assert_eq!(poly.feasible_dist(), d);
    }

    #[test]
    fn rejects_bad_roles() {
        let d = random_dirichlet(default_layout(&[2, 2, 2]), 1.0, 1).unwrap();
        assert!(MarginalPolytope::build(&d, &Roles::new(&["S"], &["S"], &["Z"])).is_err());
        assert!(MarginalPolytope::build(&d, &Roles::new(&["S"], &[], &["Z"])).is_err());
    }
}
