//! Exact max-min (bottleneck) assignment by threshold search over the
//! distinct matrix values with a bipartite matching feasibility test.

/// Finds an injective row-to-column assignment maximizing the smallest
/// selected value. `None` entries are forbidden edges. Returns `None` when
/// no complete assignment exists.
pub(crate) fn bottleneck(values: &[Vec<Option<f64>>], cols: usize) -> Option<(Vec<usize>, f64)> {
    let rows = values.len();
    if rows == 0 {
        return Some((Vec::new(), f64::INFINITY));
    }
    if rows > cols {
        return None;
    }
    let mut levels: Vec<f64> = values.iter().flatten().flatten().copied().collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    // Feasibility is monotone in the threshold: find the largest feasible level.
    let (mut lo, mut hi) = (0usize, levels.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(values, cols, levels[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let assignment = perfect_matching(values, cols, *levels.get(lo)?)?;
    let objective = assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| values[r][c].unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    Some((assignment, objective))
}

/// Kuhn's augmenting-path matching using only edges with value `>= level`.
/// Rows try columns in decreasing value order, lowest index first on ties.
fn perfect_matching(values: &[Vec<Option<f64>>], cols: usize, level: f64) -> Option<Vec<usize>> {
    let adjacency: Vec<Vec<usize>> = values
        .iter()
        .map(|row| {
            let mut cand: Vec<usize> = (0..cols)
                .filter(|&c| row.get(c).copied().flatten().is_some_and(|v| v >= level))
                .collect();
            cand.sort_by(|&a, &b| row[b].unwrap().total_cmp(&row[a].unwrap()).then(a.cmp(&b)));
            cand
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; cols];
    for r in 0..values.len() {
        let mut seen = vec![false; cols];
        if !augment(r, &adjacency, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut assignment = vec![0; values.len()];
    for (c, o) in owner.iter().enumerate() {
        if let Some(r) = o {
            assignment[*r] = c;
        }
    }
    Some(assignment)
}

fn augment(r: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &c in &adj[r] {
        if seen[c] {
            continue;
        }
        seen[c] = true;
        if owner[c].is_none() || augment(owner[c].unwrap(), adj, owner, seen) {
            owner[c] = Some(r);
            return true;
        }
    }
    false
}
