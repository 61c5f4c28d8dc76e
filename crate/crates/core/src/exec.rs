//! Deterministic summation helpers shared by the quadrature and sampling
//! loops.
//!
//! Terms are accumulated sequentially inside fixed-size index blocks and the
//! block results are reduced in block order. Only the block evaluations move
//! across threads, so the floating-point result is bit-identical whether the
//! `parallel` feature is enabled or not, and independent of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Terms per block. Large enough to amortize scheduling, small enough to
/// spread typical node counts (a few million) over every core.
const BLOCK: usize = 1024;

fn block_ranges(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n.div_ceil(BLOCK)).map(move |b| (b * BLOCK, ((b + 1) * BLOCK).min(n)))
}

/// Sum of `term(i)` for `i` in `0..n`, in deterministic order.
#[cfg(feature = "parallel")]
pub fn block_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks: Vec<f64> = block_ranges(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(start, end)| (start..end).map(&term).sum())
        .collect();
    blocks.into_iter().sum()
}

/// Sum of `term(i)` for `i` in `0..n`, in deterministic order.
#[cfg(not(feature = "parallel"))]
pub fn block_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let mut total = 0.0;
    for (start, end) in block_ranges(n) {
        total += (start..end).map(&term).sum::<f64>();
    }
    total
}

/// Like [`block_sum`] for fallible pairwise accumulators: each term yields
/// `(value, value_squared)` or an error. The first error in index order wins.
#[cfg(feature = "parallel")]
pub fn try_block_sum_pair<F, E>(n: usize, term: F) -> Result<(f64, f64), E>
where
    F: Fn(usize) -> Result<(f64, f64), E> + Sync,
    E: Send,
{
    let blocks: Vec<Result<(f64, f64), E>> = block_ranges(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(start, end)| {
            let mut acc = (0.0, 0.0);
            for i in start..end {
                let (v, v2) = term(i)?;
                acc.0 += v;
                acc.1 += v2;
            }
            Ok(acc)
        })
        .collect();
    let mut total = (0.0, 0.0);
    for block in blocks {
        let (v, v2) = block?;
        total.0 += v;
        total.1 += v2;
    }
    Ok(total)
}

/// Like [`block_sum`] for fallible pairwise accumulators: each term yields
/// `(value, value_squared)` or an error. The first error in index order wins.
#[cfg(not(feature = "parallel"))]
pub fn try_block_sum_pair<F, E>(n: usize, term: F) -> Result<(f64, f64), E>
where
    F: Fn(usize) -> Result<(f64, f64), E> + Sync,
    E: Send,
{
    let mut total = (0.0, 0.0);
    for (start, end) in block_ranges(n) {
        let mut acc = (0.0, 0.0);
        for i in start..end {
            let (v, v2) = term(i)?;
            acc.0 += v;
            acc.1 += v2;
        }
        total.0 += acc.0;
        total.1 += acc.1;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sum_matches_plain_loop_structure() {
        // The reference repeats the exact blocked order, so equality is
        // bitwise, not approximate.
        let n = 10_000;
        let term = |i: usize| ((i as f64) * 0.1).sin() / (i as f64 + 1.0);
        let blocked = block_sum(n, term);
        let mut reference = 0.0;
        for (start, end) in block_ranges(n) {
            reference += (start..end).map(term).sum::<f64>();
        }
        assert_eq!(blocked.to_bits(), reference.to_bits());
    }

    #[test]
    fn pair_sum_propagates_first_error() {
        let res = try_block_sum_pair(5000, |i| {
            if i == 4321 {
                Err(i)
            } else {
                Ok((1.0, 1.0))
            }
        });
        assert_eq!(res.unwrap_err(), 4321);
    }
}
