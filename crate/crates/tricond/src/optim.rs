//! Bracketed one-dimensional search and coordinate descent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` on `[lo, hi]` until the bracket is below `tol`.
pub fn golden_min(
    f: &mut impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    // The bracket ends are candidates too: the minimum may sit on a box edge.
    let mid = 0.5 * (lo + hi);
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi)), (c, fc), (d, fd)]
        .into_iter()
        .filter(|p| p.1.is_finite())
        .fold(
            (mid, f64::INFINITY),
            |best, p| if p.1 < best.1 { p } else { best },
        )
}

/// Grid scan over `n + 1` points, then golden refinement on both cells adjacent to the best node.
pub fn grid_golden_min(
    f: &mut impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
) -> (f64, f64) {
    let n = n.max(2);
    let xs: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let i = argmin(&vs);
    let mut best = (xs[i], vs[i]);
    for (a, b) in [(i.saturating_sub(1), i), (i, (i + 1).min(n))] {
        if b > a {
            let cand = golden_min(f, xs[a], xs[b], tol);
            if cand.1 < best.1 {
                best = cand;
            }
        }
    }
    best
}

/// Same as [`grid_golden_min`] for maximization.
pub fn grid_golden_max(
    f: &mut impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
) -> (f64, f64) {
    let (x, v) = grid_golden_min(&mut |x| -f(x), lo, hi, n, tol);
    (x, -v)
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x < &v[best] || (!v[best].is_finite() && x.is_finite()) {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    pub seeds: usize,
    pub max_sweeps: usize,
    pub grid: usize,
    pub seed: u64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            seeds: 5,
            max_sweeps: 200,
            grid: 40,
            seed: 0,
        }
    }
}

/// Coordinate descent over the unit box: each sweep does a grid scan plus golden refinement
/// along every coordinate in turn. Restarts from `seeds` random points.
pub fn coordinate_descent(
    f: &mut impl FnMut(&[f64]) -> f64,
    dim: usize,
    opts: DescentOptions,
) -> (Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = (vec![0.5; dim], f64::INFINITY);
    for _ in 0..opts.seeds.max(1) {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let mut fx = f(&x);
        for _ in 0..opts.max_sweeps {
            let before = fx;
            for i in 0..dim {
                let mut line = |v: f64| {
                    let old = x[i];
                    x[i] = v;
                    let y = f(&x);
                    x[i] = old;
                    y
                };
                let (v, fv) = grid_golden_min(&mut line, 0.0, 1.0, opts.grid, 1e-13);
                if fv < fx {
                    x[i] = v;
                    fx = fv;
                }
            }
            if before - fx <= 1e-15 * fx.abs().max(1.0) {
                break;
            }
        }
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}
