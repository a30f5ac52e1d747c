//! Data-parallel execution over independent work items.
//!
//! With the `parallel` feature, [`Execution::Parallel`] runs on a dedicated
//! rayon pool; without it every mode falls back to a sequential loop. Results
//! are always returned in index order, so outputs never depend on scheduling.

#[cfg_attr(not(feature = "parallel"), allow(unused_imports))]
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// `workers = None` uses rayon's default thread count.
    #[default]
    Parallel,
    Workers(usize),
}

impl Execution {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            Some(n) => Execution::Workers(n),
            None => Execution::Parallel,
        }
    }

    /// Applies `f` to `0..n` and collects in index order. The first error by
    /// index wins.
    pub fn map<T, F>(self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => par_map(n, &f),
            #[cfg(feature = "parallel")]
            Execution::Workers(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| Error::Pool(e.to_string()))?;
                pool.install(|| par_map(n, &f))
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel | Execution::Workers(_) => (0..n).map(f).collect(),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: &F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(f).collect();
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_every_mode() {
        for exec in [
            Execution::Sequential,
            Execution::Parallel,
            Execution::Workers(3),
        ] {
            let v = exec.map(100, |i| Ok(i * i)).unwrap();
            assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_by_index() {
        let r = Execution::Workers(4).map(50, |i| {
            if i % 10 == 7 {
                Err(Error::StepDiverged { step: i })
            } else {
                Ok(i)
            }
        });
        assert!(matches!(r, Err(Error::StepDiverged { step: 7 })));
    }
}
