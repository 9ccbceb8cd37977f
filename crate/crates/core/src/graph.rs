//! Small graph helpers: augmenting-path bipartite matching.

/// Maximum bipartite matching by augmenting paths, trying left vertices in `order`.
///
/// Once a left vertex is matched it stays matched, so vertices listed first are
/// covered whenever any matching covers them together. Returns left-to-right matches.
pub fn bipartite_matching(adj: &[Vec<usize>], n_right: usize, order: &[usize]) -> Vec<Option<usize>> {
    let mut left = vec![None; adj.len()];
    let mut right: Vec<Option<usize>> = vec![None; n_right];
    for &u in order {
        let mut seen = vec![false; n_right];
        augment(u, adj, &mut left, &mut right, &mut seen);
    }
    left
}

pub(crate) fn augment(
    u: usize,
    adj: &[Vec<usize>],
    left: &mut [Option<usize>],
    right: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        let free = match right[v] {
            None => true,
            Some(w) => augment(w, adj, left, right, seen),
        };
        if free {
            left[u] = Some(v);
            right[v] = Some(u);
            return true;
        }
    }
    false
}

/// Size of a maximum matching restricted to the left vertices in `subset`.
pub fn matching_size(adj: &[Vec<usize>], n_right: usize, subset: &[usize]) -> usize {
    bipartite_matching(adj, n_right, subset).iter().filter(|m| m.is_some()).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augmenting_paths_find_maximum() {
        // 0-{0,1}, 1-{0}, 2-{1,2}
        let adj = vec![vec![0, 1], vec![0], vec![1, 2]];
        let m = bipartite_matching(&adj, 3, &[0, 1, 2]);
        assert_eq!(m.iter().filter(|x| x.is_some()).count(), 3);
        assert_eq!(m[1], Some(0));
    }

    #[test]
    fn early_vertices_stay_covered() {
        let adj = vec![vec![0], vec![0]];
        let m = bipartite_matching(&adj, 1, &[1, 0]);
        assert_eq!(m, vec![None, Some(0)]);
    }
}
