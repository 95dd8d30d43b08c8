//! Comparison-counted reference sorts.
//!
//! The bottom-up merge sort is the benchmarking yardstick (about
//! n*log2(n) - n comparisons on scrambled input) and doubles as the
//! correctness fallback inside the sorters.

/// Bottom-up merge sort over indices, comparing values and counting every
/// value comparison. Ties keep the lower index first.
pub fn merge_sort_indices(values: &[f64]) -> (Vec<usize>, u64) {
    let n = values.len();
    let mut perm: Vec<usize> = (0..n).collect();
    if n < 2 {
        return (perm, 0);
    }
    let mut buf = vec![0usize; n];
    let mut comparisons = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            if mid < end {
                merge_into(
                    values,
                    &perm[start..mid],
                    &perm[mid..end],
                    &mut buf[start..end],
                    &mut comparisons,
                );
                perm[start..end].copy_from_slice(&buf[start..end]);
            }
            start = end;
        }
        width *= 2;
    }
    (perm, comparisons)
}

fn merge_into(
    values: &[f64],
    left: &[usize],
    right: &[usize],
    out: &mut [usize],
    comparisons: &mut u64,
) {
    let mut i = 0;
    let mut j = 0;
    let mut k = 0;
    while i < left.len() && j < right.len() {
        *comparisons += 1;
        if values[left[i]] <= values[right[j]] {
            out[k] = left[i];
            i += 1;
        } else {
            out[k] = right[j];
            j += 1;
        }
        k += 1;
    }
    while i < left.len() {
        out[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        out[k] = right[j];
        j += 1;
        k += 1;
    }
}

/// Oracle permutation: indices ordered by (value, index).
pub fn oracle_sort(values: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..values.len()).collect();
    perm.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    perm
}

/// True when `perm` is a permutation of 0..n whose value sequence is
/// non-decreasing.
pub fn is_sorting_permutation(values: &[f64], perm: &[usize]) -> bool {
    if perm.len() != values.len() {
        return false;
    }
    let mut seen = vec![false; values.len()];
    for &p in perm {
        if p >= values.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    perm.windows(2).all(|w| values[w[0]] <= values[w[1]])
}
