//! Reference computations that share no code with `arrowtile`. They are slow
//! on purpose: dense storage, textbook loops.

/// Unblocked Cholesky of a dense column-major SPD matrix. Returns the lower
/// factor with the strict upper triangle zeroed, or `None` at the first
/// non-positive pivot.
pub fn dense_cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    // Rows of L, so the inner products below run over contiguous memory.
    let mut r = vec![0.0; n * n];
    for j in 0..n {
        let (done, rest) = r.split_at_mut(j * n);
        let row_j = &mut rest[..n];
        for k in 0..j {
            let row_k = &done[k * n..k * n + k + 1];
            let s: f64 = row_k[..k].iter().zip(&row_j[..k]).map(|(x, y)| x * y).sum();
            row_j[k] = (a[j + k * n] - s) / row_k[k];
        }
        let d = a[j + j * n] - row_j[..j].iter().map(|x| x * x).sum::<f64>();
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        row_j[j] = d.sqrt();
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..=i {
            l[i + k * n] = r[i * n + k];
        }
    }
    Some(l)
}

/// `‖A − L Lᵀ‖_F / ‖A‖_F` for dense column-major `A` and lower `L`.
pub fn dense_residual(a: &[f64], l: &[f64], n: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let s: f64 = (0..=i.min(j)).map(|k| l[i + k * n] * l[j + k * n]).sum();
            let r = a[i + j * n] - s;
            num += r * r;
            den += a[i + j * n] * a[i + j * n];
        }
    }
    (num / den).sqrt()
}

/// Nonzeros in the lower triangle (diagonal included) of the Cholesky factor
/// of a symmetric pattern, by eliminating a boolean matrix. `edges` are
/// off-diagonal pairs in either orientation; `order[k]` is the vertex
/// eliminated k-th. The diagonal is assumed nonzero, and numerical
/// cancellation is ignored.
pub fn elimination_fill(n: usize, edges: &[(usize, usize)], order: &[usize]) -> usize {
    assert_eq!(order.len(), n);
    let mut pos = vec![usize::MAX; n];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let mut nz = vec![false; n * n];
    for &(u, v) in edges {
        let (a, b) = (pos[u], pos[v]);
        nz[a + b * n] = true;
        nz[b + a * n] = true;
    }
    for k in 0..n {
        let below: Vec<usize> = (k + 1..n).filter(|&i| nz[i + k * n]).collect();
        for &i in &below {
            for &j in &below {
                nz[i + j * n] = true;
            }
        }
    }
    (0..n).map(|j| 1 + (j + 1..n).filter(|&i| nz[i + j * n]).count()).sum()
}

/// Whether any stored entry joins the position ranges `p1` and `p2` after
/// relabelling vertex `v` to `new_of[v]`.
pub fn couples(
    edges: &[(usize, usize)],
    new_of: &[usize],
    p1: std::ops::Range<usize>,
    p2: std::ops::Range<usize>,
) -> bool {
    edges.iter().any(|&(u, v)| {
        let (a, b) = (new_of[u], new_of[v]);
        (p1.contains(&a) && p2.contains(&b)) || (p1.contains(&b) && p2.contains(&a))
    })
}
