//! Non-dominated sorting and crowding distance.

use crate::types::dominates_unchecked;

/// Fronts of indices into `f`, best first; indices ascend within a front.
pub fn nondominated_fronts(f: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = f.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates_unchecked(&f[i], &f[j]) {
                dominated_by[i].push(j);
                count[j] += 1;
            } else if dominates_unchecked(&f[j], &f[i]) {
                dominated_by[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Rank (0 = best) of every point.
pub fn ranks_from_fronts(fronts: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut rank = vec![0; n];
    for (r, front) in fronts.iter().enumerate() {
        for &i in front {
            rank[i] = r;
        }
    }
    rank
}

/// Crowding distance of each member of `front` (same order). Extremes
/// of every objective get infinity.
pub fn crowding_distance(f: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = f[front[0]].len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| f[front[a]][k].total_cmp(&f[front[b]][k]).then(a.cmp(&b)));
        let lo = f[front[order[0]]][k];
        let hi = f[front[order[n - 1]]][k];
        d[order[0]] = f64::INFINITY;
        d[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let gap = f[front[order[w + 1]]][k] - f[front[order[w - 1]]][k];
            d[order[w]] += gap / span;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fronts_and_ranks() {
        let f = vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 3.0], vec![3.0, 1.0], vec![4.0, 4.0]];
        let fronts = nondominated_fronts(&f);
        assert_eq!(fronts, vec![vec![0, 1, 3], vec![2], vec![4]]);
        assert_eq!(ranks_from_fronts(&fronts, 5), vec![0, 0, 1, 0, 2]);
        assert!(nondominated_fronts(&[]).is_empty());
    }

    #[test]
    fn crowding_extremes_are_infinite() {
        let f = vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]];
        let d = crowding_distance(&f, &[0, 1, 2]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert_eq!(d[1], 2.0);
    }
}
