//! Cost-equality probability tables.
//!
//! A grid is `key=values` pairs separated by `;`, for example
//! `K=10;tau=2,4..10;M=1..4`. Values are comma lists of integers or inclusive
//! `a..b` ranges. Keys: `K`, `P1`, `M`, `tau`, `N` (entities) and `Ni`
//! (databases per non-leader). Missing keys take the setting's defaults; an
//! empty grid has no cells.

use dofsp_core::analysis::{self, McEstimate, PeqParams, Setting};
use dofsp_core::randomness::derive_seed;
use rayon::prelude::*;

use crate::error::{CliError, Result};

pub const HEADER: [&str; 10] = [
    "topology", "K", "P1", "M", "tau", "N", "exact", "corrected", "mc_estimate", "halfwidth",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub k: Vec<usize>,
    pub p1: Vec<usize>,
    pub m: Vec<usize>,
    pub tau: Vec<u32>,
    pub n: Vec<usize>,
    pub ni: Vec<usize>,
}

fn parse_values(key: &str, text: &str) -> Result<Vec<u64>> {
    let bad = || CliError::Usage(format!("bad grid values for {key}: {text:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

impl Grid {
    pub fn defaults(setting: Setting) -> Self {
        let k = if setting == Setting::Ring { 10 } else { 5 };
        Self {
            k: vec![k],
            p1: vec![5],
            m: (1..=4).collect(),
            tau: (2..=10).collect(),
            n: vec![if setting == Setting::TwoParty { 2 } else { 3 }],
            ni: vec![2],
        }
    }

    pub fn empty() -> Self {
        Self { k: vec![], p1: vec![], m: vec![], tau: vec![], n: vec![], ni: vec![] }
    }

    pub fn parse(text: &str, setting: Setting) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::empty());
        }
        let mut g = Self::defaults(setting);
        for pair in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, vals) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("grid entry {pair:?} is not key=values")))?;
            let key = key.trim();
            let v = parse_values(key, vals)?;
            let us = || v.iter().map(|&x| x as usize).collect::<Vec<_>>();
            match key {
                "K" => g.k = us(),
                "P1" => g.p1 = us(),
                "M" => g.m = us(),
                "tau" => g.tau = v.iter().map(|&x| x as u32).collect(),
                "N" => g.n = us(),
                "Ni" => g.ni = us(),
                _ => return Err(CliError::Usage(format!("unknown grid key {key:?}"))),
            }
        }
        // Ring probabilities do not depend on P1 beyond M <= P1 <= K.
        if setting == Setting::Ring && !text.contains("P1") {
            g.p1 = g.k.clone();
        }
        Ok(g)
    }

    /// Cells in row-major order over K, P1, M, tau, N, Ni.
    pub fn cells(&self, setting: Setting) -> Result<Vec<PeqParams>> {
        let mut out = Vec::new();
        for &k in &self.k {
            for &p1 in &self.p1 {
                for &m in &self.m {
                    for &tau in &self.tau {
                        for &n in &self.n {
                            for &ni in &self.ni {
                                if n < 2 {
                                    return Err(CliError::Usage("N must be at least 2".into()));
                                }
                                let dbs = vec![ni; n - 1];
                                out.push(PeqParams::new(setting, k, p1, m, tau, dbs)?);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub params: PeqParams,
    /// The published closed form.
    pub exact: f64,
    /// The count that matches the simulated event.
    pub corrected: f64,
    pub mc: Option<McEstimate>,
}

fn setting_name(s: Setting) -> &'static str {
    s.topology().name()
}

/// Monte Carlo for one cell, chunks spread over the thread pool.
pub fn monte_carlo_parallel(params: &PeqParams, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(dofsp_core::Error::InvalidParameters("Monte Carlo needs at least one trial".into()).into());
    }
    let chunks = analysis::monte_carlo_chunks(trials);
    let hits = chunks
        .par_iter()
        .enumerate()
        .map(|(c, &n)| analysis::monte_carlo_chunk(params, seed, c as u64, n))
        .collect::<dofsp_core::error::Result<Vec<u64>>>()?;
    Ok(McEstimate::from_hits(hits.iter().sum(), trials))
}

/// Evaluates every cell; cell `i` draws from `derive_seed(seed, i)`.
/// With `trials == 0` the Monte Carlo columns are left empty.
pub fn table(cells: &[PeqParams], trials: u64, seed: u64, parallel: bool) -> Result<Vec<Row>> {
    let row = |(i, p): (usize, &PeqParams)| -> Result<Row> {
        let cell_seed = derive_seed(seed, i as u64);
        let mc = match (trials, parallel) {
            (0, _) => None,
            (_, true) => Some(monte_carlo_parallel(p, trials, cell_seed)?),
            (_, false) => Some(analysis::peq_monte_carlo(p, trials, cell_seed)?),
        };
        Ok(Row {
            params: p.clone(),
            exact: analysis::peq_published(p)?,
            corrected: analysis::peq_exact(p)?,
            mc,
        })
    };
    if parallel {
        cells.par_iter().enumerate().map(row).collect()
    } else {
        cells.iter().enumerate().map(row).collect()
    }
}

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

pub fn to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for r in rows {
        let p = &r.params;
        let (est, hw) = match &r.mc {
            Some(m) => (sci(m.estimate), sci(m.half_width)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            setting_name(p.setting).to_string(),
            p.k.to_string(),
            p.p1.to_string(),
            p.m.to_string(),
            p.tau.to_string(),
            p.entities().to_string(),
            sci(r.exact),
            sci(r.corrected),
            est,
            hw,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        let g = Grid::parse("K=10; tau=2,4..6 ;M=1", Setting::Ring).unwrap();
        assert_eq!(g.tau, vec![2, 4, 5, 6]);
        assert_eq!(g.p1, vec![10]);
        assert_eq!(g.cells(Setting::Ring).unwrap().len(), 4);
    }

    #[test]
    fn empty_grid_has_no_cells() {
        let g = Grid::parse("", Setting::TwoParty).unwrap();
        assert!(g.cells(Setting::TwoParty).unwrap().is_empty());
        assert_eq!(to_csv(&[]).unwrap().lines().count(), 1);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Grid::parse("K=ten", Setting::Ring).is_err());
        assert!(Grid::parse("Q=1", Setting::Ring).is_err());
        assert!(Grid::parse("tau=5..2", Setting::Ring).is_err());
    }
}
