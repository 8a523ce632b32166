//! Data-parallel helpers.
//!
//! Everything that maps over a λ grid, a list of parts or a list of
//! parameters goes through [`map`] so that the `parallel` feature is the
//! single switch between rayon and a plain sequential loop.

/// How a batch of independent evaluations is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
}

impl Exec {
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            Exec::Parallel => parallel_map(items, f),
        }
    }

    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        let idx: Vec<usize> = (0..n).collect();
        self.map(&idx, |&i| f(i))
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Map with the default execution policy.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    Exec::default().map(items, f)
}

/// Collect a vector of results, keeping the index of the first failure.
pub fn collect_indexed<U>(results: Vec<crate::Result<U>>) -> crate::Result<Vec<U>> {
    let mut out = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                return Err(crate::Error::Batch {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = Exec::Sequential.map(&xs, |x| x * x + 1);
        let b = Exec::Parallel.map(&xs, |x| x * x + 1);
        assert_eq!(a, b);
    }

    #[test]
    fn first_failure_is_indexed() {
        let rs: Vec<crate::Result<i32>> = vec![
            Ok(1),
            Err(crate::Error::Invalid("x".into())),
            Err(crate::Error::Invalid("y".into())),
        ];
        match collect_indexed(rs) {
            Err(crate::Error::Batch { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
