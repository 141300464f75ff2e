use crate::error::{Error, Result};
use crate::image::Image;

/// Largest set size accepted by [`wasserstein_exact`].
pub const MAX_ASSIGNMENT: usize = 512;

/// Mean `‖aᵢ − bᵢ‖₂` over index-paired images, unit scale.
pub fn mean_paired_l2(a: &[Image], b: &[Image]) -> Result<f64> {
    check_sets(a, b)?;
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += x.l2_distance(y)?;
    }
    Ok(total / a.len() as f64)
}

/// Empirical 1-Wasserstein distance under ℓ2 between two equal-size image
/// sets: the minimum mean distance over all perfect matchings.
pub fn wasserstein_exact(a: &[Image], b: &[Image]) -> Result<f64> {
    check_sets(a, b)?;
    if a.len() > MAX_ASSIGNMENT {
        return Err(Error::param(
            "set size",
            format!("{} exceeds {MAX_ASSIGNMENT}", a.len()),
        ));
    }
    let n = a.len();
    let mut cost = vec![0.0; n * n];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            cost[i * n + j] = x.l2_distance(y)?;
        }
    }
    let assign = hungarian(&cost, n);
    Ok(assign
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum::<f64>()
        / n as f64)
}

fn check_sets(a: &[Image], b: &[Image]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} images",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty("image set"));
    }
    Ok(())
}

/// Minimum-cost perfect matching of a dense `n × n` cost matrix
/// (shortest augmenting paths with potentials, O(n³)). Returns the column
/// assigned to each row.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}
