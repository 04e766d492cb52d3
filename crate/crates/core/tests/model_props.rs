mod common;

use common::*;
use dofsp_core::model::{
    intersection_oracle, nominal_leakage_index_set, nominal_round, solution_oracle, Direction, FeasibleSet,
    IncidenceVector,
};
use dofsp_core::Error;
use proptest::prelude::*;

#[test]
fn incidence_round_trips_every_subset() {
    for k in 1..=12usize {
        for mask in 0u32..(1 << k) {
            let members: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            if members.is_empty() {
                continue;
            }
            let set = FeasibleSet::new(k, members.iter().copied()).unwrap();
            let x = set.incidence();
            assert_eq!(x.bits().iter().enumerate().all(|(i, &b)| b == (mask >> i & 1 == 1)), true);
            assert_eq!(x.support().into_iter().collect::<Vec<_>>(), members);
        }
    }
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Minimize), Just(Direction::Maximize)]
}

/// Values in `1..=tau`, sets for `n` entities with a shared anchor element.
fn scenario() -> impl Strategy<Value = (Vec<u32>, u32, Direction, Vec<Vec<usize>>)> {
    (2usize..9, 1u32..5, 2usize..5, direction()).prop_flat_map(|(k, tau, n, d)| {
        (
            proptest::collection::vec(1..=tau, k),
            Just(tau),
            Just(d),
            0..k,
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), k), n),
        )
            .prop_map(|(v, tau, d, anchor, bits)| {
                let sets = bits
                    .into_iter()
                    .map(|b| (0..b.len()).filter(|&i| i == anchor || b[i]).collect())
                    .collect();
                (v, tau, d, sets)
            })
    })
}

proptest! {
    #[test]
    fn global_profile_concatenates_partitions((values, tau, d, sets) in scenario()) {
        let dbs = vec![2; sets.len()];
        let inst = instance(&values, d, tau, &sets, &dbs, 0).unwrap();
        let g = inst.global_profile();
        let all: Vec<usize> = (0..values.len()).collect();
        let runs = brute_runs(&values, d, &all);
        prop_assert_eq!(g.partitions().to_vec(), runs.clone());
        for i in 0..sets.len() {
            let x = inst.incidence(i);
            let concatenated: Vec<bool> = runs.iter().flatten().map(|&u| x.get(u)).collect();
            prop_assert_eq!(g.apply(&x).bits().to_vec(), concatenated);
            prop_assert_eq!(g.invert(&g.apply(&x)), x);
        }
        let mut offset = 0;
        for (r, part) in runs.iter().enumerate() {
            prop_assert_eq!(g.range(r + 1), offset..offset + part.len());
            offset += part.len();
        }
    }

    #[test]
    fn local_profile_partitions_the_leader_set((values, tau, d, sets) in scenario(), leader_pick in any::<prop::sample::Index>()) {
        let leader = leader_pick.index(sets.len());
        let dbs = vec![2; sets.len()];
        let inst = instance(&values, d, tau, &sets, &dbs, leader).unwrap();
        let p = inst.leader_profile();
        prop_assert_eq!(p.runs().to_vec(), brute_runs(&values, d, &sets[leader]));
        let mut covered: Vec<usize> = p.runs().iter().flatten().copied().collect();
        covered.sort_unstable();
        prop_assert_eq!(&covered, &sets[leader]);
        prop_assert_eq!(p.alpha(), p.runs().iter().map(Vec::len).collect::<Vec<_>>());
    }

    #[test]
    fn oracles_match_brute_force((values, tau, d, sets) in scenario()) {
        let dbs = vec![2; sets.len()];
        let inst = instance(&values, d, tau, &sets, &dbs, 0).unwrap();
        let common = brute_intersection(&sets, values.len());
        let (x, m) = intersection_oracle(&inst);
        prop_assert_eq!(m, common.len());
        prop_assert_eq!(x.support().into_iter().collect::<Vec<_>>(), common.clone());
        let p = solution_oracle(&inst);
        prop_assert_eq!(&p, &brute_solution(&values, d, &sets));
        let v = values[*p.iter().next().unwrap()];
        prop_assert!(p.iter().all(|&u| values[u] == v && common.contains(&u)));
        prop_assert!(common.iter().all(|&u| !better(d, values[u], v)));

        let runs = brute_runs(&values, d, &sets[0]);
        let first_hit = runs.iter().position(|r| r.iter().any(|u| common.contains(u))).unwrap() + 1;
        prop_assert_eq!(nominal_round(&inst), first_hit);
        let leak: Vec<usize> = {
            let mut l: Vec<usize> = runs[..first_hit].iter().flatten().copied().collect();
            l.sort_unstable();
            l
        };
        let got = nominal_leakage_index_set(&inst.leader_profile(), first_hit).unwrap();
        prop_assert_eq!(got.into_iter().collect::<Vec<_>>(), leak);
    }

    #[test]
    fn incidence_and_is_pointwise(a in proptest::collection::vec(any::<bool>(), 1..20), seed in any::<u64>()) {
        let b: Vec<bool> = a.iter().enumerate().map(|(i, _)| (seed >> (i % 64)) & 1 == 1).collect();
        let x = IncidenceVector::from_bits(a.clone()).and(&IncidenceVector::from_bits(b.clone())).unwrap();
        prop_assert_eq!(x.bits().to_vec(), a.iter().zip(&b).map(|(p, q)| *p && *q).collect::<Vec<_>>());
    }
}

#[test]
fn disjoint_sets_are_rejected() {
    let err = instance(&[1, 2, 3], Direction::Minimize, 3, &[vec![0], vec![1, 2]], &[1, 2], 0).unwrap_err();
    assert_eq!(err, Error::EmptyIntersection);
}
