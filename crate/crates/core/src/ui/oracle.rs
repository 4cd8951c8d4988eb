//! Derivative-free cross-check for the Frank–Wolfe solver: cyclic exact line
//! search along the elementary 4-cycle moves, from several starting points.
//! Uses neither the transportation subproblems nor the analytic gradient on
//! its search path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::objective::cmi;
use super::polytope::{CycleMove, MarginalPolytope};
use crate::dense::ZERO_FLOOR;

const GOLDEN_ITERS: usize = 100;
const NEWTON_ITERS: usize = 60;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Search {
    Golden,
    Newton,
}

#[derive(Clone, Debug)]
pub(crate) struct OracleRun {
    pub q: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
    pub converged: bool,
}

fn h(x: f64) -> f64 {
    if x > ZERO_FLOOR {
        x * x.log2()
    } else {
        0.0
    }
}

struct Walker<'a> {
    dims: [usize; 3],
    search: Search,
    moves: &'a [CycleMove],
    q: Vec<f64>,
    yz: Vec<f64>,
}

impl Walker<'_> {
    fn refresh_yz(&mut self) {
        let [ns, ny, nz] = self.dims;
        self.yz.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..ns {
            for y in 0..ny {
                for z in 0..nz {
                    self.yz[y * nz + z] += self.q[(s * ny + y) * nz + z];
                }
            }
        }
    }

    fn touched(&self, mv: &CycleMove) -> ([(usize, f64); 4], [(usize, f64); 4]) {
        let nz = self.dims[2];
        let e = mv.entries(self.dims);
        let yz = [
            (mv.y0 * nz + mv.z0, 1.0),
            (mv.y1 * nz + mv.z1, 1.0),
            (mv.y0 * nz + mv.z1, -1.0),
            (mv.y1 * nz + mv.z0, -1.0),
        ];
        (e, yz)
    }

    /// `f(q + t·move) − const`, touching only the affected terms.
    fn restricted(&self, e: &[(usize, f64)], yz: &[(usize, f64)], t: f64) -> f64 {
        let joint: f64 = e.iter().map(|&(i, sg)| h(self.q[i] + sg * t)).sum();
        let pair: f64 = yz.iter().map(|&(i, sg)| h(self.yz[i] + sg * t)).sum();
        joint - pair
    }

    fn shift(&mut self, e: &[(usize, f64)], yz: &[(usize, f64)], t: f64) {
        for &(i, sg) in e {
            self.q[i] = (self.q[i] + sg * t).max(0.0);
        }
        for &(i, sg) in yz {
            self.yz[i] += sg * t;
        }
    }

    fn golden(&self, e: &[(usize, f64)], yz: &[(usize, f64)], lo: f64, hi: f64) -> f64 {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = self.restricted(e, yz, c);
        let mut fd = self.restricted(e, yz, d);
        for _ in 0..GOLDEN_ITERS {
            if b - a <= 1e-17 {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = self.restricted(e, yz, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = self.restricted(e, yz, d);
            }
        }
        0.5 * (a + b)
    }

    /// Zero of the restriction's derivative on `(lo, hi)` by Newton steps
    /// kept inside a shrinking sign bracket.
    fn newton(&self, e: &[(usize, f64)], yz: &[(usize, f64)], lo: f64, hi: f64) -> f64 {
        let slope = |t: f64| -> (f64, f64) {
            let (mut d1, mut d2) = (0.0, 0.0);
            for &(i, sg) in e {
                let x = (self.q[i] + sg * t).max(1e-300);
                d1 += sg * x.log2();
                d2 += 1.0 / x;
            }
            for &(i, sg) in yz {
                let x = (self.yz[i] + sg * t).max(1e-300);
                d1 -= sg * x.log2();
                d2 -= 1.0 / x;
            }
            (d1, d2 / std::f64::consts::LN_2)
        };
        let (mut a, mut b) = (lo, hi);
        let mut t = 0.0f64.clamp(a, b);
        for _ in 0..NEWTON_ITERS {
            let (d1, d2) = slope(t);
            if d1 == 0.0 {
                break;
            }
            if d1 > 0.0 {
                b = t;
            } else {
                a = t;
            }
            let mut next = if d2 > 0.0 { t - d1 / d2 } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - t).abs() <= 1e-17 || b - a <= 1e-17 {
                t = next;
                break;
            }
            t = next;
        }
        t
    }

    /// Exact line search along one move on `[lo, hi]`; returns the step taken.
    fn step(&mut self, e: &[(usize, f64)], yz: &[(usize, f64)], lo: f64, hi: f64) -> f64 {
        if hi - lo <= 0.0 {
            return 0.0;
        }
        let base = self.restricted(e, yz, 0.0);
        let mut best = (0.0, base);
        let inner = match self.search {
            Search::Golden => self.golden(e, yz, lo, hi),
            Search::Newton => self.newton(e, yz, lo, hi),
        };
        for t in [inner, lo, hi] {
            let v = self.restricted(e, yz, t);
            if v < best.1 {
                best = (t, v);
            }
        }
        if best.0 != 0.0 {
            self.shift(e, yz, best.0);
        }
        best.0.abs()
    }

    /// One pass over all moves; returns the largest step taken.
    fn sweep(&mut self) -> f64 {
        let mut largest = 0.0f64;
        for mv in self.moves {
            let (lo, hi) = mv.interval(&self.q, self.dims);
            let (e, yz) = self.touched(mv);
            largest = largest.max(self.step(&e, &yz, lo, hi));
        }
        largest
    }

    /// One pass along the fundamental cycles of each slice's support.
    ///
    /// When the iterate sits on a face, the elementary 4-cycles through the
    /// vanished cells are blocked in one direction, and the remaining ones
    /// need not span the face. Longer cycles through live cells do.
    fn face_sweep(&mut self) -> f64 {
        let [ns, ny, nz] = self.dims;
        let mut largest = 0.0f64;
        for s in 0..ns {
            let live: Vec<bool> = (0..ny * nz).map(|c| self.q[s * ny * nz + c] > LIVE_FLOOR).collect();
            for cycle in support_cycles(&live, ny, nz) {
                let e: Vec<(usize, f64)> = cycle.iter().map(|&(c, sg)| (s * ny * nz + c, sg)).collect();
                let lo = e.iter().filter(|x| x.1 > 0.0).map(|&(i, _)| -self.q[i]).fold(f64::NEG_INFINITY, f64::max);
                let hi = e.iter().filter(|x| x.1 < 0.0).map(|&(i, _)| self.q[i]).fold(f64::INFINITY, f64::min);
                largest = largest.max(self.step(&e, &cycle, lo.min(0.0), hi.max(0.0)));
            }
        }
        largest
    }
}

/// Cells `y·nz + z` below this mass count as vanished when building face cycles.
const LIVE_FLOOR: f64 = 1e-9;

/// Fundamental cycles of the bipartite graph whose edges are the live cells,
/// rows `y` on one side and columns `z` on the other. Each cycle is a list of
/// `(cell, ±1)` with alternating signs, so row and column sums are unchanged.
/// Cycles of length 4 are skipped; the elementary moves cover them.
fn support_cycles(live: &[bool], ny: usize, nz: usize) -> Vec<Vec<(usize, f64)>> {
    // nodes 0..ny are rows, ny..ny+nz columns
    let n = ny + nz;
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut tree = vec![false; ny * nz];
    for root in 0..n {
        if depth[root] != usize::MAX {
            continue;
        }
        depth[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let neighbours: Vec<(usize, usize)> = if u < ny {
                (0..nz).filter(|&z| live[u * nz + z]).map(|z| (ny + z, u * nz + z)).collect()
            } else {
                (0..ny).filter(|&y| live[y * nz + u - ny]).map(|y| (y, y * nz + u - ny)).collect()
            };
            for (v, cell) in neighbours {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    parent[v] = Some(u);
                    tree[cell] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    let cell = |a: usize, b: usize| if a < ny { a * nz + b - ny } else { b * nz + a - ny };
    let mut out = Vec::new();
    for y in 0..ny {
        for z in 0..nz {
            let c = y * nz + z;
            if !live[c] || tree[c] {
                continue;
            }
            // walk both ends up to their common ancestor
            let (mut a, mut b) = (y, ny + z);
            let (mut left, mut right) = (vec![], vec![]);
            while a != b {
                if depth[a] >= depth[b] {
                    let p = parent[a].expect("non-root");
                    left.push(cell(a, p));
                    a = p;
                } else {
                    let p = parent[b].expect("non-root");
                    right.push(cell(b, p));
                    b = p;
                }
            }
            // cycle: c, then z's path up, then y's path down
            let mut path = vec![c];
            path.extend(right);
            path.extend(left.into_iter().rev());
            if path.len() <= 4 {
                continue;
            }
            out.push(
                path.into_iter()
                    .enumerate()
                    .map(|(k, c)| (c, if k % 2 == 0 { 1.0 } else { -1.0 }))
                    .collect(),
            );
        }
    }
    out
}

fn random_start(poly: &MarginalPolytope, moves: &[CycleMove], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut q = poly.feasible_point();
    let dims = poly.dims();
    for _ in 0..3 {
        for mv in moves {
            let (lo, hi) = mv.interval(&q, dims);
            let t = lo + (hi - lo) * rng.random::<f64>();
            mv.apply(&mut q, dims, 0.9 * t);
        }
    }
    q
}

/// Deterministic local refinement of `q` by up to `max_sweeps` sweeps. Line
/// searches use the closed-form derivative of each restriction.
pub(crate) fn polish(poly: &MarginalPolytope, q: Vec<f64>, max_sweeps: usize) -> Vec<f64> {
    let moves = poly.elementary_moves();
    descend(poly, &moves, q, max_sweeps, Search::Newton).q
}

fn descend(
    poly: &MarginalPolytope,
    moves: &[CycleMove],
    start: Vec<f64>,
    max_sweeps: usize,
    search: Search,
) -> OracleRun {
    let dims = poly.dims();
    let mut w = Walker {
        dims,
        search,
        moves,
        q: start,
        yz: vec![0.0; dims[1] * dims[2]],
    };
    w.refresh_yz();
    let mut sweeps = 0;
    let mut converged = false;
    let mut last = cmi(&w.q, dims);
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut step = w.sweep();
        if w.search == Search::Newton {
            step = step.max(w.face_sweep());
        }
        if sweeps % 64 == 0 {
            w.refresh_yz();
        }
        let value = cmi(&w.q, dims);
        let improved = last - value;
        last = value;
        if step < 1e-13 || (improved.abs() < 1e-16 && step < 1e-9) {
            converged = true;
            break;
        }
    }
    OracleRun {
        value: cmi(&w.q, dims),
        q: w.q,
        sweeps,
        converged,
    }
}

/// Best of `starts` runs; start 0 is the conditional-independence coupling.
pub(crate) fn run(poly: &MarginalPolytope, starts: usize, seed: u64, max_sweeps: usize) -> OracleRun {
    let moves = poly.elementary_moves();
    let runs: Vec<OracleRun> = (0..starts.max(1))
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                poly.feasible_point()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                random_start(poly, &moves, &mut rng)
            };
            descend(poly, &moves, start, max_sweeps, Search::Golden)
        })
        .collect();
    // lowest start index wins ties
    runs.into_iter()
        .reduce(|best, r| if r.value < best.value { r } else { best })
        .expect("at least one start")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anti_diagonal_support_has_one_six_cycle() {
        let mut live = vec![true; 9];
        for (y, z) in [(0, 2), (1, 1), (2, 0)] {
            live[y * 3 + z] = false;
        }
        let cycles = support_cycles(&live, 3, 3);
        assert_eq!(cycles.len(), 1);
        let c = &cycles[0];
        assert_eq!(c.len(), 6);
        for k in 0..3 {
            let row: f64 = c.iter().filter(|(i, _)| i / 3 == k).map(|x| x.1).sum();
            let col: f64 = c.iter().filter(|(i, _)| i % 3 == k).map(|x| x.1).sum();
            assert_eq!((row, col), (0.0, 0.0));
        }
        assert!(c.iter().all(|&(i, _)| live[i]));
    }

    #[test]
    fn full_support_needs_no_long_cycles() {
        // a BFS tree from a row of a complete grid closes every edge in 4 steps
        assert!(support_cycles(&[true; 12], 3, 4).is_empty());
    }
}
