#![allow(dead_code)]

use kmsgraph::{GraphAnalysis, MultiGraph, Trace};
use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

pub fn graph(rows: Vec<Vec<u64>>) -> MultiGraph {
    MultiGraph::new(labels(rows.len()), rows).unwrap()
}

pub fn analysis(g: &MultiGraph) -> GraphAnalysis {
    GraphAnalysis::new(g.clone()).unwrap()
}

/// Random multigraph with `n` vertices, entry density `p`, at most `max_count` parallel edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, max_count: u64) -> MultiGraph {
    let rows = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| if rng.random_bool(p) { rng.random_range(1..=max_count) } else { 0 })
                .collect()
        })
        .collect();
    graph(rows)
}

/// Random irreducible multigraph: a Hamiltonian cycle plus random extra edges.
pub fn random_irreducible(rng: &mut ChaCha8Rng, n: usize, max_count: u64) -> MultiGraph {
    let mut rows = vec![vec![0u64; n]; n];
    for i in 0..n {
        rows[i][(i + 1) % n] = rng.random_range(1..=max_count);
    }
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            if rng.random_bool(0.3) {
                *x += rng.random_range(1..=max_count);
            }
        }
    }
    graph(rows)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn arb_graph(max_n: usize, max_count: u64) -> impl Strategy<Value = MultiGraph> {
    (1..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec(
            proptest::collection::vec(prop_oneof![3 => Just(0u64), 2 => 1..=max_count], n),
            n,
        )
        .prop_map(graph)
    })
}

pub fn arb_irreducible(max_n: usize, max_count: u64) -> impl Strategy<Value = MultiGraph> {
    (1..=max_n, any::<u64>()).prop_map(move |(n, seed)| random_irreducible(&mut rng(seed), n, max_count))
}

/// Path counts by walking every edge sequence of length `k`.
pub fn dfs_path_counts(g: &MultiGraph, k: usize) -> Vec<Vec<BigUint>> {
    let n = g.vertex_count();
    let mut out = vec![vec![BigUint::zero(); n]; n];
    fn walk(g: &MultiGraph, start: usize, at: usize, left: usize, out: &mut [Vec<BigUint>]) {
        if left == 0 {
            out[start][at] += 1u32;
            return;
        }
        for &e in g.out_edges(at) {
            walk(g, start, g.edge(e).range, left - 1, out);
        }
    }
    for s in 0..n {
        walk(g, s, s, k, &mut out);
    }
    out
}

type Poly = Vec<BigRational>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn poly_rem(a: &Poly, b: &Poly) -> Poly {
    let mut r = a.clone();
    let lead = b.last().unwrap().clone();
    while r.len() >= b.len() && !(r.len() == 1 && r[0].is_zero()) {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= &f * c;
        }
        r.pop();
        r = trim(r);
        if r.is_empty() {
            r.push(BigRational::zero());
        }
    }
    r
}

fn poly_div(a: &Poly, b: &Poly) -> Poly {
    let mut r = a.clone();
    let lead = b.last().unwrap().clone();
    let mut q = vec![BigRational::zero(); a.len().saturating_sub(b.len()) + 1];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= &f * c;
        }
        q[shift] = f;
        r.pop();
    }
    trim(q)
}

fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut a, mut b) = (trim(a.clone()), trim(b.clone()));
    while !(b.len() == 1 && b[0].is_zero()) {
        let r = poly_rem(&a, &b);
        a = b;
        b = r;
    }
    a
}

/// Characteristic polynomial `det(xI − A)`, constant term first, by Faddeev–LeVerrier.
pub fn char_poly(a: &[Vec<u64>]) -> Vec<BigInt> {
    let n = a.len();
    let am: Vec<Vec<BigRational>> = a
        .iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect();
    let mul = |x: &Vec<Vec<BigRational>>, y: &Vec<Vec<BigRational>>| {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(BigRational::zero(), |s, k| s + &x[i][k] * &y[k][j]))
                    .collect()
            })
            .collect::<Vec<Vec<BigRational>>>()
    };
    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k−1} + c_{n−k+1} I
        let mut next = mul(&am, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        m = next;
        let am_k = mul(&am, &m);
        let tr = (0..n).fold(BigRational::zero(), |s, i| s + &am_k[i][i]);
        coeffs[n - k] = -tr / BigRational::from_integer(BigInt::from(k));
    }
    coeffs.into_iter().map(|c| c.to_integer()).collect()
}

fn eval(p: &[f64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::zero(), |acc, &c| acc * z + c)
}

/// All complex roots of the square-free part of `p` (constant term first).
pub fn roots(p: &[BigInt]) -> Vec<Complex64> {
    let p: Poly = trim(p.iter().map(|c| BigRational::from_integer(c.clone())).collect());
    let dp: Poly = if p.len() > 1 {
        (1..p.len())
            .map(|i| &p[i] * BigRational::from_integer(BigInt::from(i)))
            .collect()
    } else {
        vec![BigRational::zero()]
    };
    let g = poly_gcd(&p, &dp);
    let sf = poly_div(&p, &g);
    let lead = sf.last().unwrap().clone();
    let monic: Vec<f64> = sf.iter().map(|c| (c / &lead).to_f64().unwrap()).collect();
    let deg = monic.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let bound = 1.0 + monic[..deg].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|i| seed.powu(i as u32) * bound * 0.5).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let denom = (0..deg)
                .filter(|&j| j != i)
                .fold(Complex64::one(), |acc, j| acc * (z[i] - z[j]));
            let step = eval(&monic, z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    let dmonic: Vec<f64> = (1..=deg).map(|i| monic[i] * i as f64).collect();
    for zi in z.iter_mut() {
        for _ in 0..50 {
            let d = eval(&dmonic, *zi);
            if d.norm() == 0.0 {
                break;
            }
            let step = eval(&monic, *zi) / d;
            *zi -= step;
            if step.norm() < 1e-16 * zi.norm().max(1.0) {
                break;
            }
        }
    }
    z
}

/// Largest root modulus of the characteristic polynomial.
pub fn radius_oracle(a: &[Vec<u64>]) -> f64 {
    let cp = char_poly(a);
    roots(&cp).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Extreme points of `{τ ≥ 0 : Gᵀτ = e^β τ, Στ = 1}` by trying every support.
pub fn avt_oracle(g: &MultiGraph, beta: f64) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    assert!(n <= 12);
    let gt = g.to_dmatrix().transpose();
    let a = gt - DMatrix::identity(n, n) * beta.exp();
    let scale = beta.exp().max(1.0);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let k = support.len();
        let mut m = DMatrix::zeros(n + 1, k);
        for (c, &v) in support.iter().enumerate() {
            for r in 0..n {
                m[(r, c)] = a[(r, v)];
            }
            m[(n, c)] = 1.0;
        }
        let svd = m.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() <= 1e-9 * smax.max(1.0) {
            continue;
        }
        let mut rhs = nalgebra::DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let x = svd.solve(&rhs, 1e-14).unwrap();
        let resid = (&m * &x - &rhs).amax();
        if resid > 1e-9 * scale || x.iter().any(|&w| w <= 1e-12) {
            continue;
        }
        let mut tau = vec![0.0; n];
        for (c, &v) in support.iter().enumerate() {
            tau[v] = x[c];
        }
        if !out.iter().any(|t| dist(t, &tau) < 1e-8) {
            out.push(tau);
        }
    }
    out
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn trace_dist(a: &Trace, b: &[f64]) -> f64 {
    dist(a.weights(), b)
}

/// Every element of `a` is within `tol` of some element of `b` and vice versa.
pub fn same_point_sets(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| dist(x, y) <= tol))
        && b.iter().all(|y| a.iter().any(|x| dist(x, y) <= tol))
}

pub fn is_nonneg_int(x: &BigInt) -> bool {
    !x.is_negative()
}

/// Collects `criterion N: PASS|FAIL` lines with reasons.
pub struct Report {
    pub name: String,
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            failures: Vec::new(),
        }
    }

    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    /// Prints the verdict line and returns whether the criterion held.
    pub fn finish(self) -> bool {
        if self.failures.is_empty() {
            println!("{}: PASS", self.name);
        } else {
            println!("{}: FAIL ({} problems)", self.name, self.failures.len());
            for f in &self.failures {
                println!("    {f}");
            }
        }
        self.failures.is_empty()
    }
}
