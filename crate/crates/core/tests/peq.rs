use dofsp_core::analysis::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn two_party_closed_form_matches_exhaustive_enumeration() {
    for n2 in [2, 3] {
        for p1 in 1..=6 {
            for m in 1..=p1 {
                for tau in 2..=4u32 {
                    let p = PeqParams::new(Setting::TwoParty, p1 + 1, p1, m, tau, vec![n2]).unwrap();
                    let (hits, maps) = peq_exhaustive(&p, 1 << 16).unwrap();
                    assert_eq!(
                        peq_two_party_count(p1, m, tau).unwrap(),
                        hits,
                        "P1={p1} M={m} tau={tau} N2={n2} maps={maps}"
                    );
                }
            }
        }
    }
}

#[test]
fn star_count_matches_exhaustive_enumeration() {
    for dbs in [vec![2, 2], vec![2, 3, 2]] {
        for p1 in 1..=6 {
            for m in 1..=p1 {
                for tau in 2..=4u32 {
                    let p = PeqParams::new(Setting::Star, p1 + 1, p1, m, tau, dbs.clone()).unwrap();
                    let (hits, _) = peq_exhaustive(&p, 1 << 16).unwrap();
                    assert_eq!(peq_star_count(p1, m, tau).unwrap(), hits, "P1={p1} M={m} tau={tau}");
                }
            }
        }
    }
}

#[test]
fn ring_count_matches_exhaustive_enumeration() {
    for dbs in [vec![2, 2], vec![3, 2, 4]] {
        for k in 1..=7 {
            for m in 1..=k {
                for tau in 2..=4u32 {
                    if (tau as u128).pow(k as u32) > 1 << 14 {
                        continue;
                    }
                    let p = PeqParams::new(Setting::Ring, k, k, m, tau, dbs.clone()).unwrap();
                    let (hits, _) = peq_exhaustive(&p, 1 << 16).unwrap();
                    assert_eq!(peq_ring_count(k, tau, m).unwrap(), hits, "K={k} M={m} tau={tau}");
                }
            }
        }
    }
}

#[test]
fn ring_closed_form_reproduces_published_table() {
    // K = 10; rows M = 1..4, columns tau = 2, 4, 6, 8, 10; three significant digits.
    let table: [[f64; 5]; 4] = [
        [2.93e-3, 1.43e-5, 1.04e-6, 2.37e-7, 1.02e-7],
        [2.93e-3, 1.43e-5, 1.04e-6, 2.37e-7, 1.02e-7],
        [2.93e-3, 1.43e-5, 1.04e-6, 2.37e-7, 1.01e-7],
        [2.93e-3, 1.43e-5, 1.04e-6, 2.37e-7, 9.67e-8],
    ];
    for (mi, row) in table.iter().enumerate() {
        for (ti, &want) in row.iter().enumerate() {
            let tau = 2 + 2 * ti as u32;
            let got = peq_ring_exact(10, tau, mi + 1).unwrap();
            assert!((got - want).abs() <= 0.005 * want, "M={} tau={tau}: {got:e} vs {want:e}", mi + 1);
        }
    }
    // The inner bound as printed (tau - 1) does not reproduce the table.
    assert!(!close(peq_ring_closed_form(10, 2, 1, 1).unwrap(), 2.93e-3));
}
