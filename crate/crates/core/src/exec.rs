//! Sequential / rayon execution switch.

use serde::{Deserialize, Serialize};

/// How data-parallel loops are executed.
///
/// `Parallel` silently degrades to `Sequential` when the crate is built
/// without the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Ordered map: output `i` is `f(&items[i])` in either mode.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Ordered map over `0..n`.
    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Ordered map over fixed-size chunks. Chunk boundaries do not depend on
    /// the mode, so per-chunk partial results are identical in both.
    pub fn map_chunks<T, U, F>(self, items: &[T], chunk: usize, f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&[T]) -> U + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_chunks(chunk).map(f).collect();
        }
        items.chunks(chunk).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_on_order() {
        let v: Vec<u32> = (0..1000).collect();
        let a = Exec::Sequential.map(&v, |x| x * 3);
        let b = Exec::Parallel.map(&v, |x| x * 3);
        assert_eq!(a, b);
        let c = Exec::Parallel.map_chunks(&v, 7, |c| c.iter().sum::<u32>());
        let d = Exec::Sequential.map_chunks(&v, 7, |c| c.iter().sum::<u32>());
        assert_eq!(c, d);
        assert_eq!(c.len(), 143);
    }
}
