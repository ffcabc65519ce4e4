//! Perron–Frobenius data of non-negative matrices and the averaging-trace polytope.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ComponentDecomposition, MultiGraph, Trace};

pub const MAX_ITERATIONS: usize = 1_000_000;
const BRACKET_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult {
    pub radius: f64,
    pub eigvec: Option<Vec<f64>>,
    /// `‖Mx − λx‖_∞` for the returned eigenvector, 0 otherwise.
    pub residual: f64,
    pub iterations: usize,
}

/// Equality of Perron roots, relative to `max(1, λ)`.
pub fn radii_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn validate(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidMatrix(format!("shape {}x{}", m.nrows(), m.ncols())));
    }
    if let Some(x) = m.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidMatrix(format!("entry {x}")));
    }
    Ok(())
}

fn pattern(m: &DMatrix<f64>) -> MultiGraph {
    let n = m.nrows();
    let labels = (0..n).map(|i| i.to_string()).collect();
    let adjacency = (0..n)
        .map(|i| (0..n).map(|j| u64::from(m[(i, j)] > 0.0)).collect())
        .collect();
    MultiGraph::new(labels, adjacency).expect("pattern of a square matrix")
}

fn block(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Collatz–Wielandt bracketed power iteration on `B + I` for irreducible `B`.
///
/// Returns the Perron root, a positive ℓ1-normalized eigenvector and the
/// iteration count.
fn shifted_power_iteration(b: &DMatrix<f64>) -> Result<(f64, Vec<f64>, usize)> {
    let k = b.nrows();
    let mut x = DVector::from_element(k, 1.0 / k as f64);
    let mut estimate = f64::NAN;
    for it in 1..=MAX_ITERATIONS {
        let y = b * &x + &x;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..k {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        estimate = 0.5 * (lo + hi) - 1.0;
        let total = y.sum();
        x = y / total;
        if hi - lo <= BRACKET_TOLERANCE * hi {
            return Ok((estimate, x.iter().copied().collect(), it));
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        estimate,
    })
}

/// Spectral radius of a non-negative square matrix.
///
/// Computed per irreducible block: `1×1` blocks are read off exactly and a
/// nilpotent matrix returns exactly 0.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<SpectralResult> {
    validate(m)?;
    if m.nrows() == 1 {
        return Ok(SpectralResult {
            radius: m[(0, 0)],
            eigvec: None,
            residual: 0.0,
            iterations: 0,
        });
    }
    let g = pattern(m);
    let dec = ComponentDecomposition::new(&g);
    let mut radius = 0.0f64;
    let mut iterations = 0;
    for comp in dec.components().iter().filter(|c| !c.is_zero) {
        let r = if comp.vertices.len() == 1 {
            let v = comp.vertices[0];
            m[(v, v)]
        } else {
            let (r, _, it) = shifted_power_iteration(&block(m, &comp.vertices))?;
            iterations += it;
            r
        };
        radius = radius.max(r);
    }
    Ok(SpectralResult {
        radius,
        eigvec: None,
        residual: 0.0,
        iterations,
    })
}

/// Right singular vector of the smallest singular value, sign-fixed positive.
fn smallest_singular_vector(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    // v_t may be thin: it has min(rows, cols) rows.
    if a.nrows() < a.ncols() && idx >= v_t.nrows() {
        return None;
    }
    let mut v: Vec<f64> = v_t.row(idx).iter().copied().collect();
    let sum: f64 = v.iter().sum();
    if sum < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Some(v)
}

fn residual(m: &DMatrix<f64>, lambda: f64, x: &[f64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    (m * &xv - xv * lambda).amax()
}

/// Positive ℓ1-normalized Perron eigenvector of an irreducible matrix
/// (of its transpose when `transpose` is set).
pub fn pf_eigenvector(m: &DMatrix<f64>, transpose: bool) -> Result<SpectralResult> {
    validate(m)?;
    let m = if transpose { m.transpose() } else { m.clone() };
    if m.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let dec = ComponentDecomposition::new(&pattern(&m));
    if dec.len() != 1 {
        return Err(Error::Reducible);
    }
    let n = m.nrows();
    if n == 1 {
        return Ok(SpectralResult {
            radius: m[(0, 0)],
            eigvec: Some(vec![1.0]),
            residual: 0.0,
            iterations: 0,
        });
    }
    let (radius, mut x, iterations) = shifted_power_iteration(&m)?;
    let mut res = residual(&m, radius, &x);

    let shifted = &m - DMatrix::identity(n, n) * radius;
    if let Some(v) = smallest_singular_vector(&shifted) {
        if v.iter().all(|&t| t > 0.0) {
            let total: f64 = v.iter().sum();
            let v: Vec<f64> = v.into_iter().map(|t| t / total).collect();
            let r = residual(&m, radius, &v);
            if r < res {
                x = v;
                res = r;
            }
        }
    }
    Ok(SpectralResult {
        radius,
        eigvec: Some(x),
        residual: res,
        iterations,
    })
}

/// Orthonormal basis (as columns) of the approximate kernel of `a`.
pub(crate) fn nullspace(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    // Pad to square so the SVD returns a full V.
    let square = if a.nrows() < n {
        let mut s = DMatrix::zeros(n, n);
        s.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        s
    } else {
        a.clone()
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Extreme points of `{τ ≥ 0 : Gᵀτ = e^β τ, Στ = 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePolytope {
    pub beta: f64,
    pub extreme_points: Vec<Trace>,
    /// Number of extreme points minus one; −1 when empty.
    pub dimension: i64,
}

impl TracePolytope {
    pub fn is_empty(&self) -> bool {
        self.extreme_points.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "beta": self.beta,
            "extremes": self.extreme_points.iter().map(|t| t.weights().to_vec()).collect::<Vec<_>>(),
        })
    }
}

fn averaging_tolerance(scale: f64) -> f64 {
    1e-8 * scale.max(1.0)
}

fn for_each_combination(items: &[usize], k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(items: &[usize], k: usize, start: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if acc.len() == k {
            f(acc);
            return;
        }
        let need = k - acc.len();
        for i in start..=items.len().saturating_sub(need) {
            if items.len() < need {
                break;
            }
            acc.push(items[i]);
            go(items, k, i + 1, acc, f);
            acc.pop();
        }
    }
    let mut acc = Vec::with_capacity(k);
    go(items, k, 0, &mut acc, f);
}

/// Re-solves the kernel on a fixed support for full precision.
fn polish(m: &DMatrix<f64>, support: &[usize]) -> Option<Vec<f64>> {
    let n = m.nrows();
    let restricted = DMatrix::from_fn(n, support.len(), |i, j| m[(i, support[j])]);
    let v = smallest_singular_vector(&restricted)?;
    if v.iter().any(|&t| t <= 0.0) {
        return None;
    }
    let total: f64 = v.iter().sum();
    let mut out = vec![0.0; m.ncols()];
    for (k, &s) in support.iter().enumerate() {
        out[s] = v[k] / total;
    }
    Some(out)
}

/// Averaging traces at `beta`: basic feasible solutions of the eigen-system
/// enumerated in kernel coordinates.
pub fn avt_extreme_points(graph: &MultiGraph, beta: f64) -> Result<TracePolytope> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta {beta} must be finite and ≥ 0")));
    }
    let empty = TracePolytope {
        beta,
        extreme_points: Vec::new(),
        dimension: -1,
    };
    let n = graph.vertex_count();
    let scale = beta.exp();

    // A non-negative eigenvector sits at the Perron root of some component.
    let dec = ComponentDecomposition::new(graph);
    let mut any_root = false;
    for comp in dec.components() {
        let r = if comp.is_zero {
            0.0
        } else if comp.vertices.len() == 1 {
            graph.count(comp.vertices[0], comp.vertices[0]) as f64
        } else {
            spectral_radius(&graph.induced(&comp.vertices).to_dmatrix())?.radius
        };
        any_root |= radii_equal(r, scale);
    }
    if !any_root {
        return Ok(empty);
    }

    let m = graph.to_dmatrix().transpose() - DMatrix::identity(n, n) * scale;
    let mut basis = nullspace(&m, 1e-8 * scale.max(1.0));
    let d = basis.ncols();
    if d == 0 {
        return Ok(empty);
    }
    let mut live_rows = Vec::new();
    for i in 0..n {
        if basis.row(i).norm() < 1e-10 {
            basis.row_mut(i).fill(0.0);
        } else {
            live_rows.push(i);
        }
    }
    let sums: DVector<f64> = basis.row_sum().transpose();

    let mut found: Vec<Trace> = Vec::new();
    let mut consider = |y: &DVector<f64>| {
        let tau = &basis * y;
        if tau.min() < -1e-9 {
            return;
        }
        let support: Vec<usize> = (0..n).filter(|&i| tau[i] > 1e-12).collect();
        if support.is_empty() {
            return;
        }
        let weights = polish(&m, &support).unwrap_or_else(|| {
            let total: f64 = support.iter().map(|&i| tau[i]).sum();
            (0..n)
                .map(|i| if tau[i] > 1e-12 { tau[i] / total } else { 0.0 })
                .collect()
        });
        let Ok(t) = Trace::normalized(weights) else { return };
        if residual(&m, 0.0, t.weights()) > averaging_tolerance(scale) {
            return;
        }
        if found.iter().all(|f| f.distance(&t) > 1e-8) {
            found.push(t);
        }
    };

    if d == 1 {
        if sums[0].abs() > 1e-12 {
            consider(&DVector::from_element(1, 1.0 / sums[0]));
        }
    } else {
        for_each_combination(&live_rows, d - 1, &mut |active| {
            let mut system = DMatrix::zeros(d, d);
            for (r, &i) in active.iter().enumerate() {
                system.row_mut(r).copy_from(&basis.row(i));
            }
            system.row_mut(d - 1).copy_from(&sums.transpose());
            let mut rhs = DVector::zeros(d);
            rhs[d - 1] = 1.0;
            let lu = system.lu();
            if lu.determinant().abs() < 1e-12 {
                return;
            }
            if let Some(y) = lu.solve(&rhs) {
                consider(&y);
            }
        });
    }

    found.sort_by(|a, b| {
        let key = |t: &Trace| t.support();
        key(a).cmp(&key(b)).then_with(|| {
            a.weights()
                .iter()
                .zip(b.weights())
                .map(|(x, y)| y.total_cmp(x))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let dimension = found.len() as i64 - 1;
    Ok(TracePolytope {
        beta,
        extreme_points: found,
        dimension,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
    }

    #[test]
    fn golden_ratio_radius() {
        let r = spectral_radius(&mat(&[&[2.0, 2.0], &[2.0, 0.0]])).unwrap();
        assert!((r.radius - (1.0 + 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_is_exactly_zero() {
        assert_eq!(spectral_radius(&mat(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap().radius, 0.0);
        assert_eq!(spectral_radius(&mat(&[&[0.0]])).unwrap().radius, 0.0);
        assert_eq!(spectral_radius(&mat(&[&[7.0]])).unwrap().radius, 7.0);
    }

    #[test]
    fn negative_entries_rejected() {
        assert!(spectral_radius(&mat(&[&[1.0, -1.0], &[0.0, 1.0]])).is_err());
    }

    #[test]
    fn pf_vectors() {
        let one = pf_eigenvector(&mat(&[&[2.0]]), false).unwrap();
        assert_eq!(one.eigvec.unwrap(), vec![1.0]);

        let sym = pf_eigenvector(&mat(&[&[1.0, 1.0], &[1.0, 1.0]]), false).unwrap();
        assert!((sym.radius - 2.0).abs() < 1e-12);
        let v = sym.eigvec.unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);

        // Gᵀ x = γ x for G = [[2,2],[2,0]]: x ∝ (γ/2, 1).
        let g = mat(&[&[2.0, 2.0], &[2.0, 0.0]]);
        let r = pf_eigenvector(&g, true).unwrap();
        let gamma = 1.0 + 5f64.sqrt();
        let total = gamma / 2.0 + 1.0;
        let v = r.eigvec.unwrap();
        assert!((v[0] - gamma / 2.0 / total).abs() < 1e-12);
        assert!((v[1] - 1.0 / total).abs() < 1e-12);
        assert!(r.residual <= 1e-9);
    }

    #[test]
    fn pf_rejects_reducible_and_zero() {
        assert_eq!(
            pf_eigenvector(&mat(&[&[2.0, 1.0], &[0.0, 0.0]]), false).unwrap_err(),
            Error::Reducible
        );
        assert_eq!(pf_eigenvector(&mat(&[&[0.0]]), false).unwrap_err(), Error::ZeroMatrix);
    }

    #[test]
    fn two_vertex_averaging_trace() {
        let g = MultiGraph::from_matrix(&["v", "w"], &[&[2, 1], &[0, 0]]).unwrap();
        let p = avt_extreme_points(&g, 2f64.ln()).unwrap();
        assert_eq!(p.extreme_points.len(), 1);
        let t = &p.extreme_points[0];
        assert!((t.weight(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((t.weight(1) - 1.0 / 3.0).abs() < 1e-12);
        assert!(avt_extreme_points(&g, 1.0).unwrap().is_empty());
    }

    #[test]
    fn above_radius_is_empty() {
        let g = MultiGraph::from_matrix(&["a", "b"], &[&[1, 1], &[1, 1]]).unwrap();
        assert!(avt_extreme_points(&g, 3f64.ln()).unwrap().is_empty());
        assert_eq!(avt_extreme_points(&g, 2f64.ln()).unwrap().dimension, 0);
    }

    #[test]
    fn disjoint_equal_loops_give_all_diracs() {
        let g = MultiGraph::from_matrix(&["a", "b", "c"], &[&[2, 0, 0], &[0, 2, 0], &[0, 0, 2]])
            .unwrap();
        let p = avt_extreme_points(&g, 2f64.ln()).unwrap();
        assert_eq!(p.extreme_points.len(), 3);
        for (v, t) in p.extreme_points.iter().enumerate() {
            assert_eq!(t.support(), vec![v]);
        }
    }
}
