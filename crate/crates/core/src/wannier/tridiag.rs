//! Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
//! bisection followed by inverse iteration.

/// Number of eigenvalues strictly below `lambda`.
fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let prev = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - lambda - off[i - 1] * off[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The `k` smallest eigenvalues, ascending.
pub fn lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let (glo, ghi) = gershgorin(diag, off);
    (0..k)
        .map(|idx| {
            let (mut lo, mut hi) = (glo, ghi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(diag, off, mid) > idx {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Solves `(T - shift) x = b` by Gaussian elimination with partial pivoting.
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let tiny = f64::EPSILON * diag.iter().chain(off).fold(1.0f64, |m, v| m.max(v.abs()));
    let mut d: Vec<f64> = diag.iter().map(|x| x - shift).collect();
    let mut dl = off.to_vec();
    let mut du = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = b.to_vec();
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            let temp = x[i];
            x[i] = x[i + 1];
            x[i + 1] = temp - dl[i] * x[i];
        } else {
            x[i + 1] -= dl[i] * x[i];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        if i + 1 < n {
            acc -= du[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= du2[i] * x[i + 2];
        }
        x[i] = acc / d[i];
    }
    x
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// Eigenvectors (unit Euclidean norm) for the given eigenvalues.
pub fn eigenvectors(diag: &[f64], off: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    for &lambda in values {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (0.37 * i as f64 + 0.11).sin()).collect();
        normalize(&mut v);
        for _ in 0..4 {
            v = solve_shifted(diag, off, lambda, &v);
            for prev in &out {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, p) in v.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
            normalize(&mut v);
        }
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_laplacian_spectrum() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2cos(kπ/(n+1))
        let n = 50;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let vals = lowest_eigenvalues(&diag, &off, 4);
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
        let vecs = eigenvectors(&diag, &off, &vals);
        for (val, vec) in vals.iter().zip(&vecs) {
            for i in 0..n {
                let mut tv = diag[i] * vec[i];
                if i > 0 {
                    tv += off[i - 1] * vec[i - 1];
                }
                if i + 1 < n {
                    tv += off[i] * vec[i + 1];
                }
                assert!((tv - val * vec[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifted_solve_matches_dense() {
        let diag = [4.0, -1.0, 3.0, 0.5, 2.0];
        let off = [1.0, 2.0, -1.5, 0.7];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        let x = solve_shifted(&diag, &off, 0.3, &b);
        for i in 0..5 {
            let mut r = (diag[i] - 0.3) * x[i];
            if i > 0 {
                r += off[i - 1] * x[i - 1];
            }
            if i + 1 < 5 {
                r += off[i] * x[i + 1];
            }
            assert!((r - b[i]).abs() < 1e-12, "row {i}: {r} vs {}", b[i]);
        }
    }
}
