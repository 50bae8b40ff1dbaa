//! Rank-sum test and medians used when comparing seed samples.

use serde::{Deserialize, Serialize};

/// Samples at or below this pooled size use the exact null distribution.
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alternative {
    TwoSided,
    /// `a` tends to be larger than `b`.
    Greater,
    /// `a` tends to be smaller than `b`.
    Less,
}

/// Two-sided Wilcoxon rank-sum p-value.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> f64 {
    wilcoxon_ranksum_with(a, b, Alternative::TwoSided)
}

/// Wilcoxon rank-sum p-value with mid-ranks for ties. Exact enumeration
/// when `|a| + |b| <= 16`, otherwise a normal approximation with tie
/// correction and a 0.5 continuity correction.
pub fn wilcoxon_ranksum_with(a: &[f64], b: &[f64], alternative: Alternative) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let n1 = a.len();
    let n = n1 + b.len();
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let doubled = doubled_midranks(&pooled);
    let w2: u64 = doubled[..n1].iter().sum();

    if n <= EXACT_LIMIT {
        let (mut ge, mut le, mut total) = (0u64, 0u64, 0u64);
        for_each_subset_sum(&doubled, n1, &mut |s| {
            total += 1;
            if s >= w2 {
                ge += 1;
            }
            if s <= w2 {
                le += 1;
            }
        });
        let p_greater = ge as f64 / total as f64;
        let p_less = le as f64 / total as f64;
        return match alternative {
            Alternative::Greater => p_greater,
            Alternative::Less => p_less,
            Alternative::TwoSided => (2.0 * p_greater.min(p_less)).min(1.0),
        };
    }

    let n1f = n1 as f64;
    let n2f = (n - n1) as f64;
    let nf = n as f64;
    let w = w2 as f64 / 2.0;
    let mean = n1f * (nf + 1.0) / 2.0;
    let tie_term: f64 = tie_groups(&pooled).iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    match alternative {
        Alternative::Greater => upper_tail(((w - mean) - 0.5) / sd),
        Alternative::Less => upper_tail(((mean - w) - 0.5) / sd),
        Alternative::TwoSided => (2.0 * upper_tail(((w - mean).abs() - 0.5).max(0.0) / sd)).min(1.0),
    }
}

fn upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Mid-ranks (1-based) times two, so ties stay integral.
fn doubled_midranks(v: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0u64; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, mean doubled = i + j + 2
        for &k in &idx[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

fn tie_groups(v: &[f64]) -> Vec<u64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        groups.push((j - i + 1) as u64);
        i = j + 1;
    }
    groups
}

fn for_each_subset_sum(values: &[u64], k: usize, f: &mut impl FnMut(u64)) {
    fn rec(values: &[u64], start: usize, k: usize, acc: u64, f: &mut impl FnMut(u64)) {
        if k == 0 {
            f(acc);
            return;
        }
        for i in start..=values.len() - k {
            rec(values, i + 1, k - 1, acc + values[i], f);
        }
    }
    rec(values, 0, k, 0, f);
}

/// Median that always picks an actual sample: the lower-middle element
/// for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Some(s[(s.len() - 1) / 2])
}
