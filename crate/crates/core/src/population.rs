//! Fan-out of independent runs. Run `i` of a population uses stream id `i`
//! of the population seed, and results are collected in index order, so the
//! output does not depend on scheduling.

use crate::algorithms::{Runner, Trace};
use crate::error::Result;

pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

pub fn run_population(runner: &Runner, seed: u64, runs: usize) -> Result<Vec<Trace>> {
    par_map(runs, |i| runner.run(seed, i as u64))
        .into_iter()
        .collect()
}
