//! NSGA-II survival and mating selection.

use rand::Rng;

use super::sorting::{crowding_distance, nondominated_fronts};
use crate::rng::Stream;
use crate::types::{objectives_of, Individual, Population};

/// Indices kept by a survival step along with their rank and crowding.
#[derive(Debug, Clone, PartialEq)]
pub struct Survivors {
    pub indices: Vec<usize>,
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

/// Fills whole fronts, then the best-crowded members of the split front
/// (ties by index).
pub fn nsga2_select(f: &[Vec<f64>], n: usize) -> Survivors {
    let mut out = Survivors {
        indices: Vec::with_capacity(n),
        rank: Vec::with_capacity(n),
        crowding: Vec::with_capacity(n),
    };
    for (r, front) in nondominated_fronts(f).into_iter().enumerate() {
        let left = n - out.indices.len();
        if left == 0 {
            break;
        }
        let cd = crowding_distance(f, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        if front.len() > left {
            order.sort_by(|&a, &b| cd[b].total_cmp(&cd[a]).then(front[a].cmp(&front[b])));
            order.truncate(left);
        }
        for w in order {
            out.indices.push(front[w]);
            out.rank.push(r);
            out.crowding.push(cd[w]);
        }
    }
    out
}

/// The `n` survivors of an evaluated population.
pub fn nsga2_survival(union: &[Individual], n: usize) -> Population {
    let s = nsga2_select(&objectives_of(union), n);
    s.indices.iter().map(|&i| union[i].clone()).collect()
}

/// Binary tournament by rank, then crowding distance.
pub fn binary_tournament(rank: &[usize], crowding: &[f64], rng: &mut Stream) -> usize {
    let n = rank.len();
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    if rank[b] < rank[a] || (rank[b] == rank[a] && crowding[b] > crowding[a]) {
        b
    } else {
        a
    }
}
