mod common;

use common::*;
use dofsp_core::field::PrimeField;
use dofsp_core::model::Direction;
use dofsp_core::protocol::HitKind;
use dofsp_core::randomness::seeded;
use dofsp_core::star::{select_leader, StarRandomness};
use dofsp_core::transcript::{Event, RandomnessKind};
use dofsp_core::{run_protocol, ProtocolConfig, TapeRandomness, Topology};
use rand::Rng;

fn hit(h: HitKind) -> Hit {
    match h {
        HitKind::Partial => Hit::Partial,
        HitKind::Full => Hit::Full,
        HitKind::Forced => Hit::Forced,
    }
}

/// Z = sum_i c (x_i + t_hat_i) vanishes exactly when every x_i is 1, for
/// every multiplier and every correlated draw.
#[test]
fn zero_test_is_sound_for_every_draw() {
    for q in [3u32, 5, 7] {
        for n in 3..=4usize {
            if q as usize <= n - 1 {
                continue;
            }
            let f = PrimeField::new(q).unwrap();
            let servers = n - 1;
            let p1 = 2;
            let mut tape = TapeRandomness::new();
            let mut draws = 0u64;
            loop {
                tape.rewind();
                let mut s = StarRandomness::new(f, &vec![3; servers], p1);
                let c = s.multiplier(&mut tape).0;
                assert_ne!(c, 0);
                for l in 1..=p1 {
                    let t = s.correlated(&mut tape, l).0;
                    for pattern in 0u32..(1 << servers) {
                        let z = (0..servers).fold(0, |acc, i| {
                            let x = pattern >> i & 1;
                            f.add(acc, f.mul(c, f.add(x, t[i])))
                        });
                        assert_eq!(z == 0, pattern == (1 << servers) - 1, "q={q} N={n} c={c} t={t:?}");
                    }
                }
                draws += 1;
                if !tape.advance() {
                    break;
                }
            }
            let free = (n - 2) * p1;
            assert_eq!(draws, (q as u64 - 1) * (q as u64).pow(free as u32));
        }
    }
}

fn check(values: &[u32], d: Direction, tau: u32, sets: &[Vec<usize>], dbs: &[usize], seed: u64) {
    let n = sets.len();
    let inst = instance(values, d, tau, sets, dbs, 0).unwrap();
    let ctx = format!("f={values:?} sets={sets:?} dbs={dbs:?}");
    let out = run_protocol(Topology::Star, &inst, &ProtocolConfig::checked(), &mut seeded(seed)).unwrap();
    assert_eq!(out.solution, brute_solution(values, d, sets), "{ctx}");

    let runs = brute_runs(values, d, &sets[0]);
    let alpha: Vec<usize> = runs.iter().map(Vec::len).collect();
    let common = brute_intersection(sets, values.len());
    let (r, _, h) = brute_stop(&runs, &common);
    assert_eq!((out.stopping_round, out.hit.map(hit)), (r, Some(h)), "{ctx}");
    let server_dbs = &dbs[1..];
    let download = out.ledger.download();
    assert_eq!(download, star_download(r, &alpha, server_dbs, h), "{ctx}");

    // Aggregates are c (sum_i X_i(u) - (N - 1)).
    let f = out.field;
    let c = out
        .transcript
        .events
        .iter()
        .find_map(|e| match e {
            Event::Randomness(r) if r.kind == RandomnessKind::Multiplier => Some(r.values[0]),
            _ => None,
        });
    for round in &out.rounds {
        for &(u, z) in &round.aggregates {
            let holders = sets[1..].iter().filter(|s| s.contains(&u)).count() as i64;
            let expect = f.mul(c.unwrap(), f.reduce(holders - (n as i64 - 1)));
            assert_eq!(z, expect, "{ctx} u={u}");
        }
    }

    let p1 = sets[0].len();
    let naive: usize = server_dbs.iter().map(|&m| (p1 * m).div_ceil(m - 1)).sum();
    assert!(download <= naive, "{ctx}");
    let equality = alpha[..r].iter().sum::<usize>() == p1 && h != Hit::Forced;
    assert_eq!(download == naive, equality, "{ctx}");
}

#[test]
fn every_objective_map_decodes_correctly() {
    let mut rng = seeded(5);
    let mut seed = 0;
    for n in [3usize, 4] {
        for k in 1..=5usize {
            for tau in 1..=3u32 {
                for values in objectives(k, tau) {
                    for _ in 0..2 {
                        let sets = random_sets(&mut rng, k, n);
                        let mut dbs: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=4)).collect();
                        dbs[0] = 1;
                        seed += 1;
                        check(&values, Direction::Maximize, tau, &sets, &dbs, seed);
                    }
                }
            }
        }
    }
}

#[test]
fn more_databases_never_cost_more() {
    let mut rng = seeded(9);
    for _ in 0..300 {
        let k = rng.gen_range(2..=7);
        let tau = rng.gen_range(1..=4);
        let values: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=tau)).collect();
        let sets = random_sets(&mut rng, k, 3);
        let mut prev = usize::MAX;
        for m in 2..=6 {
            let inst = instance(&values, Direction::Minimize, tau, &sets, &[1, m, m], 0).unwrap();
            let out = run_protocol(Topology::Star, &inst, &ProtocolConfig::default(), &mut seeded(m as u64)).unwrap();
            let d = out.ledger.download();
            assert!(d <= prev, "N_i={m} f={values:?} sets={sets:?}");
            prev = d;
        }
    }
}

#[test]
fn leader_is_the_cheapest_entity() {
    let sets = [vec![0, 1, 2], vec![0, 2], vec![0, 1, 2, 3]];
    let inst = instance(&[1, 2, 3, 4], Direction::Minimize, 4, &sets, &[2, 2, 2], 0).unwrap();
    assert_eq!(select_leader(&inst), 1);
    let inst = inst.with_databases(vec![3, 3, 2]).unwrap();
    // Costs: leader 0 -> 5 + 6 = 11; leader 1 -> 3 + 4 = 7; leader 2 -> 6 + 6 = 12.
    assert_eq!(select_leader(&inst), 1);
}
