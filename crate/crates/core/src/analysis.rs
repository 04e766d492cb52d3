//! Probability that a protocol costs exactly as much as its naive baseline,
//! when every element's objective value is drawn uniformly from `[1, tau]`
//! and the feasible sets are fixed.
//!
//! Closed forms are given as exact counts of objective maps where possible,
//! checked against exhaustive enumeration and Monte Carlo over the simulators.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Alphabet, Direction, FeasibleSet, Instance, Objective};
use crate::protocol::{run_protocol, HitKind, Outcome, ProtocolConfig, Topology};
use crate::randomness::{derive_seed, seeded, Randomness};
use crate::{ring, star, two_party};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.576;

/// Trials per independently seeded Monte Carlo chunk.
pub const MC_CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Setting {
    TwoParty,
    Ring,
    Star,
}

impl Setting {
    pub fn topology(self) -> Topology {
        match self {
            Setting::TwoParty => Topology::TwoParty,
            Setting::Ring => Topology::Ring,
            Setting::Star => Topology::Star,
        }
    }

    pub fn naive_topology(self) -> Topology {
        match self {
            Setting::TwoParty => Topology::NaiveTwoParty,
            Setting::Ring => Topology::NaiveRing,
            Setting::Star => Topology::NaiveStar,
        }
    }
}

/// Fixed-set parameters. The leader holds elements `0..p1`, the intersection
/// is `0..m`, and every other entity holds the intersection plus all elements
/// outside the leader set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeqParams {
    pub setting: Setting,
    pub k: usize,
    pub p1: usize,
    pub m: usize,
    pub tau: u32,
    /// Database counts of the non-leader entities; `N = databases.len() + 1`.
    pub databases: Vec<usize>,
}

impl PeqParams {
    pub fn new(setting: Setting, k: usize, p1: usize, m: usize, tau: u32, databases: Vec<usize>) -> Result<Self> {
        let p = Self { setting, k, p1, m, tau, databases };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.m && self.m <= self.p1 && self.p1 <= self.k) {
            return Err(Error::InvalidParameters(format!(
                "need 1 <= M <= P1 <= K, got M={} P1={} K={}",
                self.m, self.p1, self.k
            )));
        }
        if self.tau < 1 {
            return Err(Error::InvalidParameters("tau must be positive".into()));
        }
        if self.databases.is_empty() || self.databases.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameters("every server needs at least two databases".into()));
        }
        if self.setting == Setting::TwoParty && self.databases.len() != 1 {
            return Err(Error::InvalidParameters("two-party setting has one server".into()));
        }
        Ok(())
    }

    pub fn entities(&self) -> usize {
        self.databases.len() + 1
    }

    /// `min(tau, P1 - M + 1)`.
    pub fn r_max(&self) -> usize {
        (self.tau as usize).min(self.p1 - self.m + 1)
    }

    /// `min(tau, K - max(2, M) + 1)`.
    pub fn t_max(&self) -> usize {
        (self.tau as usize).min((self.k + 1).saturating_sub(self.m.max(2)))
    }

    /// `min(tau, P1 - max(2, M) + 1)`.
    pub fn l_max(&self) -> usize {
        (self.tau as usize).min((self.p1 + 1).saturating_sub(self.m.max(2)))
    }

    /// Elements whose objective value influences the event.
    pub fn free_elements(&self) -> usize {
        match self.setting {
            Setting::Ring => self.k,
            _ => self.p1,
        }
    }

    /// The fixed instance with objective `values` (length K).
    pub fn instance(&self, values: Vec<u32>) -> Result<Instance> {
        let k = self.k;
        let alphabet = Alphabet::numbered(k);
        let leader = FeasibleSet::new(k, 0..self.p1)?;
        let other = FeasibleSet::new(k, (0..self.m).chain(self.p1..k))?;
        let mut sets = alloc::vec![leader];
        let mut dbs = alloc::vec![1];
        for &n in &self.databases {
            sets.push(other.clone());
            dbs.push(n);
        }
        let objective = Objective::new(values, Direction::Maximize, self.tau)?;
        Instance::new(alphabet, sets, objective, dbs, 0)
    }
}

fn binomial(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128).ok_or(Error::Overflow)? / (i as u128 + 1);
    }
    Ok(acc)
}

/// `n (n-1) ... (n-k+1)`.
fn falling(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    (0..k).try_fold(1u128, |acc, i| acc.checked_mul((n - i) as u128).ok_or(Error::Overflow))
}

fn factorial(n: usize) -> Result<u128> {
    falling(n, n)
}

/// Maps from `n` labeled elements onto `m` ordered non-empty boxes.
fn surjections(n: usize, m: usize) -> Result<u128> {
    // s[j] = surjections(i, j) for the current i.
    let mut s = alloc::vec![0u128; m + 1];
    s[0] = 1;
    for _ in 0..n {
        for j in (0..=m).rev() {
            s[j] = if j == 0 {
                0
            } else {
                (j as u128)
                    .checked_mul(s[j].checked_add(s[j - 1]).ok_or(Error::Overflow)?)
                    .ok_or(Error::Overflow)?
            };
        }
    }
    Ok(s[m])
}

fn ln_factorial(n: f64) -> f64 {
    libm::lgamma(n + 1.0)
}

fn ratio(count: u128, tau: u32, exponent: usize) -> f64 {
    let ln = libm::log(count as f64) - exponent as f64 * libm::log(tau as f64);
    if count == 0 {
        0.0
    } else {
        libm::exp(ln)
    }
}

/// Number of leader objective maps (out of `tau^P1`) where the two-party
/// download equals the naive download, term by term as
/// `tau` for `r = 1` and
/// `C(P1-M, r-1) (r-1)! sum_{j=r-1}^{tau-1} C(j-1, r-2)(tau-j)` for `r >= 2`,
/// each gated by `M < P1 - r + 1`.
pub fn peq_two_party_count(p1: usize, m: usize, tau: u32) -> Result<u128> {
    let tau_u = tau as usize;
    let r_max = tau_u.min(p1 - m + 1);
    let mut total: u128 = 0;
    for r in 1..=r_max {
        if m >= p1 + 1 - r {
            continue;
        }
        let term = if r == 1 {
            tau as u128
        } else {
            let mut bracket: u128 = 0;
            for j in (r - 1)..tau_u {
                if j == 0 {
                    continue;
                }
                bracket += binomial(j - 1, r - 2)? * (tau_u - j) as u128;
            }
            binomial(p1 - m, r - 1)?
                .checked_mul(factorial(r - 1)?)
                .and_then(|x| x.checked_mul(bracket))
                .ok_or(Error::Overflow)?
        };
        total = total.checked_add(term).ok_or(Error::Overflow)?;
    }
    Ok(total)
}

pub fn peq_two_party_exact(params: &PeqParams) -> Result<f64> {
    let c = peq_two_party_count(params.p1, params.m, params.tau)?;
    Ok(ratio(c, params.tau, params.p1))
}

/// The tabulated ring closed form,
/// `sum_{r=1}^{T_max} sum_{j=1}^{upper} C(tau-j, r-1) / tau^K`.
/// With `upper = tau` it reproduces the published table; the inner bound is
/// printed as `tau - 1`, which gives different values.
pub fn peq_ring_closed_form(k: usize, tau: u32, m: usize, upper: u32) -> Result<f64> {
    let t_max = (tau as usize).min((k + 1).saturating_sub(m.max(2)));
    let mut c: u128 = 0;
    for r in 1..=t_max {
        for j in 1..=upper as usize {
            if j > tau as usize {
                break;
            }
            c += binomial(tau as usize - j, r - 1)?;
        }
    }
    Ok(ratio(c, tau, k))
}

/// Closed form matching the published table (inner sum to `tau`).
pub fn peq_ring_exact(k: usize, tau: u32, m: usize) -> Result<f64> {
    peq_ring_closed_form(k, tau, m, tau)
}

/// Exact number of objective maps (out of `tau^K`) for which the ring costs
/// `2NK`: the first `T - 1` partitions are single elements outside the
/// intersection and the last partition holds the intersection plus at least
/// one more element.
pub fn peq_ring_count(k: usize, tau: u32, m: usize) -> Result<u128> {
    let r_max = (tau as usize).min(k - m);
    let mut c: u128 = 0;
    for r in 1..=r_max {
        let term = binomial(tau as usize, r)?
            .checked_mul(falling(k - m, r - 1)?)
            .ok_or(Error::Overflow)?;
        c = c.checked_add(term).ok_or(Error::Overflow)?;
    }
    Ok(c)
}

pub fn peq_ring_true(k: usize, tau: u32, m: usize) -> Result<f64> {
    Ok(ratio(peq_ring_count(k, tau, m)?, tau, k))
}

/// Star expression evaluated as printed:
/// `tau^-P1 sum_{r=1}^{L_max} sum_{j=1}^{tau-1} C(tau-j, r-1)
///  sum_{alpha} (P1-M-r)! / (alpha_1! ... alpha_{r-1}! (alpha_r - M)!)`
/// over `alpha_1..alpha_{r-1} >= 1`, `alpha_r >= max(M, 2)`, summing to `P1`.
/// The "multinomial" top does not match its bottom, so terms are real-valued
/// (zero when `P1 - M - r < 0`).
pub fn peq_star_printed(params: &PeqParams) -> f64 {
    let p1 = params.p1;
    let m = params.m;
    let tau = params.tau as usize;
    let mut total = 0.0;
    for r in 1..=params.l_max() {
        let mut outer = 0.0;
        for j in 1..tau {
            outer += binomial(tau - j, r - 1).map(|b| b as f64).unwrap_or(f64::INFINITY);
        }
        if p1 < m + r {
            continue;
        }
        let top = ln_factorial((p1 - m - r) as f64);
        let mut inner = 0.0;
        for_each_composition(p1, r, m.max(2), |alpha| {
            let mut ln = top;
            for &a in &alpha[..r - 1] {
                ln -= ln_factorial(a as f64);
            }
            ln -= ln_factorial((alpha[r - 1] - m) as f64);
            inner += libm::exp(ln);
        });
        total += outer * inner;
    }
    total * libm::pow(tau as f64, -(p1 as f64))
}

/// Calls `f` with every `alpha` of length `parts`, `alpha_i >= 1` for
/// `i < parts`, last part `>= last_min`, summing to `total`.
fn for_each_composition(total: usize, parts: usize, last_min: usize, mut f: impl FnMut(&[usize])) {
    fn rec(rest: usize, parts: usize, last_min: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if parts == 1 {
            if rest >= last_min {
                cur.push(rest);
                f(cur);
                cur.pop();
            }
            return;
        }
        let mut a = 1;
        while a + last_min + (parts - 2) <= rest {
            cur.push(a);
            rec(rest - a, parts - 1, last_min, cur, f);
            cur.pop();
            a += 1;
        }
    }
    let mut cur = Vec::with_capacity(parts);
    rec(total, parts, last_min, &mut cur, &mut f);
}

/// Exact number of leader objective maps (out of `tau^P1`) with
/// `sum_{r<=R} alpha_r = P1` and `alpha_L > 1`: choose the `L` realized
/// values, put the intersection and `e` further elements in the last run and
/// spread the rest over the first `L - 1` runs.
pub fn peq_star_count(p1: usize, m: usize, tau: u32) -> Result<u128> {
    let l_max = (tau as usize).min((p1 + 1).saturating_sub(m.max(2)));
    let others = p1 - m;
    let min_extra = 2usize.saturating_sub(m);
    let mut c: u128 = 0;
    for l in 1..=l_max {
        let mut ways: u128 = 0;
        for e in min_extra..=others {
            let rest = others - e;
            let spread = surjections(rest, l - 1)?;
            let w = binomial(others, e)?.checked_mul(spread).ok_or(Error::Overflow)?;
            ways = ways.checked_add(w).ok_or(Error::Overflow)?;
        }
        let term = binomial(tau as usize, l)?.checked_mul(ways).ok_or(Error::Overflow)?;
        c = c.checked_add(term).ok_or(Error::Overflow)?;
    }
    Ok(c)
}

pub fn peq_star_exact(params: &PeqParams) -> Result<f64> {
    Ok(ratio(peq_star_count(params.p1, params.m, params.tau)?, params.tau, params.p1))
}

/// Exact probability for the setting, using the count that matches the
/// simulated event.
pub fn peq_exact(params: &PeqParams) -> Result<f64> {
    match params.setting {
        Setting::TwoParty => peq_two_party_exact(params),
        Setting::Ring => peq_ring_true(params.k, params.tau, params.m),
        Setting::Star => peq_star_exact(params),
    }
}

/// The published closed form for the setting.
pub fn peq_published(params: &PeqParams) -> Result<f64> {
    match params.setting {
        Setting::TwoParty => peq_two_party_exact(params),
        Setting::Ring => peq_ring_exact(params.k, params.tau, params.m),
        Setting::Star => Ok(peq_star_printed(params)),
    }
}

/// Cost of the naive baseline for the outcome's instance, in the unit the
/// setting compares (download for two-party and star, total for ring).
pub fn naive_cost(setting: Setting, instance: &Instance) -> usize {
    let p1 = instance.set(instance.leader()).len();
    let dbs: Vec<usize> = instance.non_leaders().iter().map(|&i| instance.databases()[i]).collect();
    match setting {
        Setting::TwoParty => two_party::naive_cost(p1, dbs[0]),
        Setting::Ring => ring::naive_cost(instance.entities(), instance.k()),
        Setting::Star => star::naive_cost(p1, &dbs),
    }
}

pub fn compared_cost(setting: Setting, outcome: &Outcome) -> usize {
    match setting {
        Setting::Ring => outcome.ledger.total(),
        _ => outcome.ledger.download(),
    }
}

/// Whether the simulated run cost as much as the naive baseline.
pub fn cost_equals_naive(setting: Setting, instance: &Instance, outcome: &Outcome) -> bool {
    compared_cost(setting, outcome) == naive_cost(setting, instance)
}

/// Structural characterization of the equality event from the run's shape:
/// two-party `R + alpha_R = P1 + 1` with the membership step run; ring
/// `R = T`, `mu_r = 1` before `T`, `mu_T > 1`, membership step run; star
/// `R = L` without the forced shortcut.
pub fn equality_condition(setting: Setting, instance: &Instance, outcome: &Outcome) -> bool {
    let r = outcome.stopping_round;
    let hit = outcome.hit;
    match setting {
        Setting::TwoParty => {
            let p = instance.leader_profile();
            let p1 = instance.set(instance.leader()).len();
            hit == Some(HitKind::Partial) && r + p.run(r).len() == p1 + 1
        }
        Setting::Ring => {
            let mu = instance.global_profile().mu();
            let t = mu.len();
            hit == Some(HitKind::Partial) && r == t && mu[..t - 1].iter().all(|&x| x == 1) && mu[t - 1] > 1
        }
        Setting::Star => {
            let l = instance.leader_profile().rounds();
            r == l && hit != Some(HitKind::Forced)
        }
    }
}

/// Runs the setting's protocol on every objective map of the free elements
/// (mixed-radix order, the remaining elements valued 1) and counts runs whose
/// cost equals the naive cost. Returns `(hits, maps)`.
pub fn peq_exhaustive(params: &PeqParams, max_maps: u128) -> Result<(u128, u128)> {
    params.validate()?;
    let free = params.free_elements();
    let maps = (params.tau as u128)
        .checked_pow(free as u32)
        .ok_or(Error::Overflow)?;
    if maps > max_maps {
        return Err(Error::BudgetExceeded { budget: max_maps as u64 });
    }
    let config = ProtocolConfig::default();
    let mut rng = seeded(0);
    let mut values = alloc::vec![1u32; params.k];
    let mut hits = 0u128;
    loop {
        let inst = params.instance(values.clone())?;
        let out = run_protocol(params.setting.topology(), &inst, &config, &mut rng)?;
        if cost_equals_naive(params.setting, &inst, &out) {
            hits += 1;
        }
        // Odometer step over the first `free` values.
        let mut i = 0;
        loop {
            if i == free {
                return Ok((hits, maps));
            }
            if values[i] < params.tau {
                values[i] += 1;
                break;
            }
            values[i] = 1;
            i += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    /// 99% normal-approximation half-width.
    pub half_width: f64,
}

impl McEstimate {
    pub fn from_hits(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            hits,
            trials,
            estimate: p,
            half_width: Z99 * libm::sqrt(p * (1.0 - p) / trials as f64),
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.estimate - p).abs() <= self.half_width
    }
}

fn draw_objective<R: Randomness + ?Sized>(params: &PeqParams, rng: &mut R) -> Vec<u32> {
    (0..params.k).map(|_| rng.below(params.tau) + 1).collect()
}

/// Trials of chunk `chunk` (seeded from `(seed, chunk)`); returns the hit count.
pub fn monte_carlo_chunk(params: &PeqParams, seed: u64, chunk: u64, trials: u64) -> Result<u64> {
    let mut rng = seeded(derive_seed(seed, chunk));
    let config = ProtocolConfig::default();
    let mut hits = 0;
    for _ in 0..trials {
        let values = draw_objective(params, &mut rng);
        let inst = params.instance(values)?;
        let out = run_protocol(params.setting.topology(), &inst, &config, &mut rng)?;
        if cost_equals_naive(params.setting, &inst, &out) {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Chunk sizes for `trials`, `MC_CHUNK` each except possibly the last.
pub fn monte_carlo_chunks(trials: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut left = trials;
    while left > 0 {
        let n = left.min(MC_CHUNK);
        v.push(n);
        left -= n;
    }
    v
}

/// Sequential Monte Carlo estimate; chunked identically to the parallel
/// driver so both give the same result for the same seed.
pub fn peq_monte_carlo(params: &PeqParams, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameters("Monte Carlo needs at least one trial".into()));
    }
    params.validate()?;
    let mut hits = 0;
    for (c, n) in monte_carlo_chunks(trials).into_iter().enumerate() {
        hits += monte_carlo_chunk(params, seed, c as u64, n)?;
    }
    Ok(McEstimate::from_hits(hits, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_combinatorics() {
        assert_eq!(binomial(5, 2).unwrap(), 10);
        assert_eq!(binomial(2, 5).unwrap(), 0);
        assert_eq!(falling(5, 2).unwrap(), 20);
        assert_eq!(surjections(3, 2).unwrap(), 6);
        assert_eq!(surjections(0, 0).unwrap(), 1);
        assert_eq!(surjections(2, 0).unwrap(), 0);
        assert_eq!(surjections(4, 3).unwrap(), 36);
    }

    #[test]
    fn compositions_are_enumerated() {
        let mut seen = Vec::new();
        for_each_composition(5, 3, 2, |a| seen.push(a.to_vec()));
        assert_eq!(seen, [vec![1, 1, 3], vec![1, 2, 2], vec![2, 1, 2]]);
    }

    #[test]
    fn two_party_bracket_is_a_binomial() {
        // sum_{j=r-1}^{tau-1} C(j-1, r-2)(tau-j) = C(tau, r)
        for tau in 2..12usize {
            for r in 2..=tau {
                let mut s = 0u128;
                for j in (r - 1)..tau {
                    s += binomial(j - 1, r - 2).unwrap() * (tau - j) as u128;
                }
                assert_eq!(s, binomial(tau, r).unwrap(), "tau={tau} r={r}");
            }
        }
    }

    #[test]
    fn trials_must_be_positive() {
        let p = PeqParams::new(Setting::TwoParty, 5, 5, 1, 2, vec![2]).unwrap();
        assert!(peq_monte_carlo(&p, 0, 1).is_err());
    }

    #[test]
    fn half_width_formula() {
        let e = McEstimate::from_hits(25, 100);
        assert!((e.half_width - 2.576 * (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-12);
    }
}
