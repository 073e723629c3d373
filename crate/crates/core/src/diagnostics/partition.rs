//! Partition summaries: similarity matrix, Binder point estimate, ARI.

use std::collections::HashMap;

use crate::exec::Execution;

/// Relabels by order of first appearance.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map: HashMap<usize, usize> = HashMap::new();
    labels
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

/// Distinct partitions (up to relabelling) with multiplicities, in order of
/// first appearance, plus the index of each sample's distinct partition.
pub fn distinct_partitions(partitions: &[Vec<usize>]) -> (Vec<(Vec<usize>, usize)>, Vec<usize>) {
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut out: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut which = Vec::with_capacity(partitions.len());
    for p in partitions {
        let c = canonical(p);
        let id = *index.entry(c.clone()).or_insert_with(|| {
            out.push((c, 0));
            out.len() - 1
        });
        out[id].1 += 1;
        which.push(id);
    }
    (out, which)
}

fn groups(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut g = vec![Vec::new(); k];
    for (i, &c) in labels.iter().enumerate() {
        g[c].push(i);
    }
    g
}

/// Posterior similarity matrix, row-major `n × n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    n: usize,
    values: Vec<f64>,
}

impl Similarity {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `Σ_{i<j} P_ij`.
    pub fn upper_sum(&self) -> f64 {
        (0..self.n).map(|i| self.row(i)[i + 1..].iter().sum::<f64>()).sum()
    }
}

/// Fraction of samples in which each pair is co-clustered.
pub fn posterior_similarity(partitions: &[Vec<usize>]) -> Similarity {
    assert!(!partitions.is_empty(), "need at least one partition");
    let n = partitions[0].len();
    assert!(partitions.iter().all(|p| p.len() == n), "partitions differ in length");
    let (distinct, _) = distinct_partitions(partitions);
    let members: Vec<(Vec<Vec<usize>>, &Vec<usize>, f64)> = distinct
        .iter()
        .map(|(p, w)| (groups(p), p, *w as f64))
        .collect();
    let total = partitions.len() as f64;
    let mut values = vec![0.0; n * n];
    let work = members.iter().map(|(g, _, _)| g.iter().map(|m| m.len() * m.len()).sum::<usize>()).sum();
    Execution::for_work(work).for_each_chunk(&mut values, n.max(1) * 16, |start, out| {
        let first = start / n.max(1);
        for (r, row) in out.chunks_mut(n).enumerate() {
            let i = first + r;
            for (g, labels, w) in &members {
                for &j in &g[labels[i]] {
                    row[j] += w;
                }
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
    });
    Similarity { n, values }
}

/// Binder loss with equal costs, directly from the definition.
pub fn binder_loss(labels: &[usize], psm: &Similarity) -> f64 {
    let n = labels.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let same = if labels[i] == labels[j] { 1.0 } else { 0.0 };
            acc += (same - psm.get(i, j)).abs();
        }
    }
    acc
}

/// Binder loss via `Σ P + #pairs(c) − 2 Σ_{same in c} P`, visiting only
/// co-clustered pairs.
fn binder_loss_grouped(labels: &[usize], psm: &Similarity, upper: f64) -> f64 {
    let mut pairs = 0.0;
    let mut shared = 0.0;
    for g in groups(labels) {
        let m = g.len() as f64;
        pairs += 0.5 * m * (m - 1.0);
        for (a, &i) in g.iter().enumerate() {
            let row = psm.row(i);
            shared += g[a + 1..].iter().map(|&j| row[j]).sum::<f64>();
        }
    }
    upper + pairs - 2.0 * shared
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinderEstimate {
    /// Index of the first sample attaining the minimum.
    pub sample: usize,
    pub labels: Vec<usize>,
    pub loss: f64,
}

/// Visited partition minimizing the Binder loss; ties go to the earliest
/// sample.
pub fn binder_partition(partitions: &[Vec<usize>]) -> BinderEstimate {
    let psm = posterior_similarity(partitions);
    binder_partition_with(partitions, &psm)
}

pub fn binder_partition_with(partitions: &[Vec<usize>], psm: &Similarity) -> BinderEstimate {
    let (distinct, which) = distinct_partitions(partitions);
    let upper = psm.upper_sum();
    let exec = Execution::for_work(distinct.len() * psm.n() * 8);
    let losses = exec.map(distinct.len(), |d| binder_loss_grouped(&distinct[d].0, psm, upper));
    let mut best = 0;
    for s in 1..partitions.len() {
        if losses[which[s]] < losses[which[best]] {
            best = s;
        }
    }
    BinderEstimate {
        sample: best,
        labels: distinct[which[best]].0.clone(),
        loss: losses[which[best]],
    }
}

fn choose2(x: usize) -> f64 {
    let x = x as f64;
    0.5 * x * (x - 1.0)
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let ca = canonical(a);
    let cb = canonical(b);
    let ka = ca.iter().max().map_or(0, |m| m + 1);
    let kb = cb.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0usize; ka * kb];
    for (x, y) in ca.iter().zip(&cb) {
        table[x * kb + y] += 1;
    }
    let sum_ij: f64 = table.iter().map(|&v| choose2(v)).sum();
    let sum_a: f64 = (0..ka).map(|x| choose2(table[x * kb..(x + 1) * kb].iter().sum())).sum();
    let sum_b: f64 = (0..kb).map(|y| choose2((0..ka).map(|x| table[x * kb + y]).sum())).sum();
    let total = choose2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // Both labelings are trivial in the same way.
        return if sum_ij == expected { 1.0 } else { 0.0 };
    }
    (sum_ij - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psm_examples() {
        let one = posterior_similarity(&[vec![0, 0, 1]]);
        assert_eq!(one.to_rows(), vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let two = posterior_similarity(&[vec![0, 0, 1], vec![0, 1, 1]]);
        assert_eq!(two.get(0, 1), 0.5);
        assert_eq!(two.get(1, 2), 0.5);
        assert_eq!(two.get(0, 2), 0.0);
    }

    #[test]
    fn binder_prefers_majority() {
        let mut samples = vec![vec![0, 0, 1]; 9];
        samples.push(vec![0, 0, 0]);
        let psm = posterior_similarity(&samples);
        // Against P_AB = 1, P_AC = P_BC = 0.1: AB|C loses 0.2, ABC loses 1.8.
        assert!((binder_loss(&[0, 0, 1], &psm) - 0.2).abs() < 1e-12);
        assert!((binder_loss(&[0, 0, 0], &psm) - 1.8).abs() < 1e-12);
        let est = binder_partition(&samples);
        assert_eq!(est.labels, vec![0, 0, 1]);
        assert_eq!(est.sample, 0);
    }

    #[test]
    fn binder_single_sample_and_relabelling() {
        let est = binder_partition(&[vec![3, 1, 3, 2]]);
        assert_eq!(est.labels, vec![0, 1, 0, 2]);
        let psm = posterior_similarity(&[vec![0, 1, 1, 0], vec![0, 0, 1, 1]]);
        assert_eq!(binder_loss(&[0, 1, 1, 0], &psm), binder_loss(&[5, 2, 2, 5], &psm));
    }

    #[test]
    fn ari_examples() {
        assert_eq!(adjusted_rand(&[0, 0, 1, 1, 2], &[4, 4, 0, 0, 1]), 1.0);
        assert_eq!(adjusted_rand(&[0, 0, 0, 0], &[0, 1, 2, 3]), 0.0);
        let a = [0, 0, 1, 1, 1, 2];
        let b = [1, 0, 0, 2, 2, 2];
        let perm_b = [7, 3, 3, 5, 5, 5];
        assert_eq!(adjusted_rand(&a, &b), adjusted_rand(&a, &perm_b));
        assert_eq!(adjusted_rand(&a, &b), adjusted_rand(&b, &a));
    }
}
