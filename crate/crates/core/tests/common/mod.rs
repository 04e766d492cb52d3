//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use dofsp_core::model::{Alphabet, Direction, FeasibleSet, Instance, Objective};
use rand::Rng;

pub fn instance(values: &[u32], direction: Direction, tau: u32, sets: &[Vec<usize>], dbs: &[usize], leader: usize) -> dofsp_core::error::Result<Instance> {
    let k = values.len();
    let objective = Objective::new(values.to_vec(), direction, tau)?;
    let sets = sets
        .iter()
        .map(|s| FeasibleSet::new(k, s.iter().copied()))
        .collect::<dofsp_core::error::Result<Vec<_>>>()?;
    Instance::new(Alphabet::numbered(k), sets, objective, dbs.to_vec(), leader)
}

pub fn better(direction: Direction, a: u32, b: u32) -> bool {
    match direction {
        Direction::Maximize => a > b,
        Direction::Minimize => a < b,
    }
}

/// Elements held by every entity.
pub fn brute_intersection(sets: &[Vec<usize>], k: usize) -> Vec<usize> {
    (0..k).filter(|u| sets.iter().all(|s| s.contains(u))).collect()
}

pub fn brute_solution(values: &[u32], direction: Direction, sets: &[Vec<usize>]) -> BTreeSet<usize> {
    let common = brute_intersection(sets, values.len());
    let mut best: Option<u32> = None;
    for &u in &common {
        if best.is_none_or(|b| better(direction, values[u], b)) {
            best = Some(values[u]);
        }
    }
    common.into_iter().filter(|&u| Some(values[u]) == best).collect()
}

/// Elements grouped by equal value, best value first.
pub fn brute_runs(values: &[u32], direction: Direction, elements: &[usize]) -> Vec<Vec<usize>> {
    let mut distinct: Vec<u32> = elements.iter().map(|&u| values[u]).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if direction == Direction::Maximize {
        distinct.reverse();
    }
    distinct
        .into_iter()
        .map(|v| elements.iter().copied().filter(|&u| values[u] == v).collect())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hit {
    Partial,
    Full,
    Forced,
}

/// Stopping round (1-based), its run size, and how it ended, for a run list.
pub fn brute_stop(runs: &[Vec<usize>], common: &[usize]) -> (usize, usize, Hit) {
    let last = runs.len();
    for (i, run) in runs.iter().enumerate() {
        let r = i + 1;
        if r == last && run.len() == 1 {
            return (r, 1, Hit::Forced);
        }
        let m = run.iter().filter(|u| common.contains(u)).count();
        if m == 0 {
            continue;
        }
        let hit = if m == run.len() { Hit::Full } else { Hit::Partial };
        return (r, run.len(), hit);
    }
    unreachable!("non-empty intersection")
}

fn ceil_div(a: usize, b: usize) -> usize {
    (a + b - 1) / b
}

/// Two-party download: one symbol per database per read, spread over N-1 reads per vector.
pub fn two_party_download(r: usize, alpha_r: usize, n2: usize, hit: Hit) -> usize {
    let reads = match hit {
        Hit::Partial => r + alpha_r - 1,
        Hit::Full => r,
        Hit::Forced => r - 1,
    };
    ceil_div(reads * n2, n2 - 1)
}

/// Ring total cost over global partitions `mu`.
pub fn ring_total(r: usize, mu: &[usize], n: usize, hit: Hit) -> usize {
    let counted = if hit == Hit::Forced { r - 1 } else { r };
    let mut c: usize = mu[..counted].iter().map(|&m| 2 * (n - 1) * m + 2).sum();
    if hit == Hit::Partial {
        if r < mu.len() {
            c += 2;
        }
        c += 2 * (mu[r - 1] - 1);
    }
    c
}

pub fn star_download(r: usize, alpha: &[usize], dbs: &[usize], hit: Hit) -> usize {
    let counted = if hit == Hit::Forced { r - 1 } else { r };
    let reads: usize = alpha[..counted].iter().sum();
    dbs.iter().map(|&n| ceil_div(reads * n, n - 1)).sum()
}

/// Every objective map of `k` elements into `1..=tau`, mixed-radix order.
pub fn objectives(k: usize, tau: u32) -> impl Iterator<Item = Vec<u32>> {
    let total = (tau as u64).pow(k as u32);
    (0..total).map(move |mut code| {
        (0..k)
            .map(|_| {
                let d = (code % tau as u64) as u32 + 1;
                code /= tau as u64;
                d
            })
            .collect()
    })
}

/// Every non-empty subset of `0..k`.
pub fn subsets(k: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << k)).map(|m| (0..k).filter(|&i| m >> i & 1 == 1).collect()).collect()
}

/// Random sets for `n` entities sharing at least one element.
pub fn random_sets(rng: &mut impl Rng, k: usize, n: usize) -> Vec<Vec<usize>> {
    let anchor = rng.gen_range(0..k);
    (0..n)
        .map(|_| (0..k).filter(|&u| u == anchor || rng.gen_bool(0.5)).collect())
        .collect()
}
