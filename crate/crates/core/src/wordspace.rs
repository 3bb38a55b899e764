//! Words over the alphabet `{1,...,N}` and streaming enumeration of the
//! associated matrix products.
//!
//! The walker keeps a stack of prefix products so each tree edge costs one
//! matrix multiply, and shards the tree by fixed-length word prefixes with
//! a fixed merge order (ascending shard index), which makes parallel runs
//! bitwise reproducible for a given shard count.

use crate::error::{Error, Result};
use crate::linalg::{singular_values, Matrix};
use crate::scalar::{real, Real};
use serde::{Deserialize, Serialize};

/// A finite word `i_1 ... i_n` with 1-based symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(Vec<u8>);

impl Word {
    /// Validates every symbol against the tuple arity.
    pub fn new(symbols: Vec<u8>, arity: usize) -> Result<Self> {
        for &s in &symbols {
            if s == 0 || s as usize > arity {
                return Err(Error::Domain(format!(
                    "symbol {s} out of range 1..={arity}"
                )));
            }
        }
        Ok(Word(symbols))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.0.clone();
        s.extend_from_slice(&other.0);
        Word(s)
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.iter().all(|&s| s <= 9) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// The linearisation `(A_1,...,A_N)`: at least two invertible square
/// matrices of a common dimension. Per-map operator norms are cached at
/// construction so contraction checks are free.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixTuple<T> {
    dim: usize,
    maps: Vec<Matrix<T>>,
    opnorms: Vec<T>,
}

impl<T: Real> MatrixTuple<T> {
    pub fn new(maps: Vec<Matrix<T>>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::Precondition(format!(
                "a tuple needs at least 2 maps, got {}",
                maps.len()
            )));
        }
        let dim = maps[0].rows();
        for (i, m) in maps.iter().enumerate() {
            m.ensure_square_finite("matrix tuple")?;
            if m.rows() != dim {
                return Err(Error::Shape(format!(
                    "map {} is {}x{}, expected {dim}x{dim}",
                    i + 1,
                    m.rows(),
                    m.cols()
                )));
            }
            let det = m.det()?;
            if det.abs() <= real::<T>(1e-14) {
                return Err(Error::Precondition(format!(
                    "map {} is singular (|det| = {})",
                    i + 1,
                    det.abs()
                )));
            }
        }
        let opnorms = maps
            .iter()
            .map(|m| Ok(singular_values(m)?.values[0]))
            .collect::<Result<Vec<T>>>()?;
        Ok(MatrixTuple { dim, maps, opnorms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[Matrix<T>] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &Matrix<T> {
        &self.maps[i]
    }

    pub fn operator_norms(&self) -> &[T] {
        &self.opnorms
    }

    /// Largest operator norm among the maps.
    pub fn max_operator_norm(&self) -> T {
        self.opnorms.iter().copied().fold(T::zero(), T::max)
    }

    pub fn is_contracting(&self) -> bool {
        self.opnorms.iter().all(|&n| n < T::one())
    }

    /// Index (1-based) of the first non-contracting map, if any.
    pub fn first_non_contracting(&self) -> Option<usize> {
        self.opnorms
            .iter()
            .position(|&n| n >= T::one())
            .map(|i| i + 1)
    }

    pub fn scaled(&self, factor: T) -> Result<MatrixTuple<T>> {
        MatrixTuple::new(self.maps.iter().map(|m| m.scale(factor)).collect())
    }
}

/// Left-to-right product `A_{i_1} ... A_{i_n}` for a non-empty word.
pub fn word_product<T: Real>(maps: &[Matrix<T>], word: &Word) -> Result<Matrix<T>> {
    if word.is_empty() {
        return Err(Error::Domain("word product of the empty word".into()));
    }
    let mut acc: Option<Matrix<T>> = None;
    for &s in word.symbols() {
        let idx = s as usize;
        if idx == 0 || idx > maps.len() {
            return Err(Error::Domain(format!(
                "symbol {s} out of range 1..={}",
                maps.len()
            )));
        }
        let m = &maps[idx - 1];
        acc = Some(match acc {
            None => m.clone(),
            Some(p) => p.mul(m),
        });
    }
    Ok(acc.unwrap())
}

/// Enumeration controls: shard count for the parallel walk and the visit
/// budget guarding against accidental N^n explosions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisitOptions {
    pub shards: usize,
    pub budget: u64,
}

pub const DEFAULT_BUDGET: u64 = 100_000_000;

impl Default for VisitOptions {
    fn default() -> Self {
        VisitOptions {
            shards: 1,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitSummary {
    pub visits: u64,
    pub shards: usize,
    pub prefix_len: usize,
}

fn checked_visit_count(arity: usize, n: usize, all_levels: bool, budget: u64) -> Result<u64> {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..n {
        level = level.saturating_mul(arity as u128);
        if all_levels {
            total = total.saturating_add(level);
        }
    }
    if !all_levels {
        total = level;
    }
    if total > budget as u128 {
        return Err(Error::Budget(format!(
            "enumerating {total} words of length {}{n} over {arity} symbols exceeds \
             the budget of {budget}; raise it with --budget",
            if all_levels { "up to " } else { "" },
        )));
    }
    Ok(total as u64)
}

/// Invoke `visit` once per word of length exactly `n`, with the prefix
/// product maintained incrementally. Each shard owns a deterministic set of
/// fixed-length prefixes; shard accumulators are merged in ascending shard
/// index, so results are reproducible for a fixed shard count.
pub fn visit_level<T, A, I, V, M>(
    maps: &[Matrix<T>],
    n: usize,
    opts: &VisitOptions,
    init: I,
    visit: V,
    merge: M,
) -> Result<(A, VisitSummary)>
where
    T: Real,
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[u8], &Matrix<T>) + Sync,
    M: FnMut(&mut A, A),
{
    walk(maps, n, false, opts, init, visit, merge)
}

/// Invoke `visit` once per word of every length `1..=n`.
pub fn visit_words_up_to<T, A, I, V, M>(
    maps: &[Matrix<T>],
    n: usize,
    opts: &VisitOptions,
    init: I,
    visit: V,
    merge: M,
) -> Result<(A, VisitSummary)>
where
    T: Real,
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[u8], &Matrix<T>) + Sync,
    M: FnMut(&mut A, A),
{
    walk(maps, n, true, opts, init, visit, merge)
}

fn walk<T, A, I, V, M>(
    maps: &[Matrix<T>],
    n: usize,
    all_levels: bool,
    opts: &VisitOptions,
    init: I,
    visit: V,
    mut merge: M,
) -> Result<(A, VisitSummary)>
where
    T: Real,
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[u8], &Matrix<T>) + Sync,
    M: FnMut(&mut A, A),
{
    if maps.is_empty() {
        return Err(Error::Precondition("empty map tuple".into()));
    }
    if n == 0 {
        return Err(Error::Domain("word length must be >= 1".into()));
    }
    for m in maps {
        m.ensure_square_finite("word enumeration")?;
    }
    checked_visit_count(maps.len(), n, all_levels, opts.budget)?;

    let arity = maps.len();
    let shards = opts.shards.max(1);
    // prefix length: smallest p with arity^p >= shards, capped at n
    let mut prefix_len = 0usize;
    let mut reach = 1u64;
    while reach < shards as u64 && prefix_len < n {
        reach = reach.saturating_mul(arity as u64);
        prefix_len += 1;
    }
    let prefix_count = reach;

    let run_shard = |shard: usize| -> (A, u64) {
        let mut acc = init();
        let mut visits = 0u64;
        let mut word: Vec<u8> = Vec::with_capacity(n);
        let mut stack: Vec<Matrix<T>> = Vec::with_capacity(n);

        // words shorter than the prefix split belong to shard 0
        if shard == 0 && all_levels && prefix_len > 1 {
            dfs(
                maps,
                prefix_len - 1,
                true,
                &mut word,
                &mut stack,
                &mut acc,
                &visit,
                &mut visits,
            );
        }

        for pidx in 0..prefix_count {
            if pidx as usize % shards != shard {
                continue;
            }
            // decode the prefix in lexicographic order (most significant first)
            word.clear();
            stack.clear();
            let mut rem = pidx;
            let mut div = prefix_count / arity as u64;
            for _ in 0..prefix_len {
                let sym = (rem / div.max(1)) as usize % arity;
                rem %= div.max(1);
                div /= arity as u64;
                word.push(sym as u8 + 1);
                let next = match stack.last() {
                    None => maps[sym].clone(),
                    Some(p) => p.mul(&maps[sym]),
                };
                stack.push(next);
            }
            if !word.is_empty() && (all_levels || word.len() == n) {
                visit(&mut acc, &word, stack.last().unwrap());
                visits += 1;
            }
            if prefix_len < n {
                dfs_extend(
                    maps,
                    n,
                    all_levels,
                    &mut word,
                    &mut stack,
                    &mut acc,
                    &visit,
                    &mut visits,
                );
            }
        }
        (acc, visits)
    };

    let results: Vec<(A, u64)> = if shards == 1 || prefix_len == 0 {
        vec![run_shard(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..shards)
                .map(|s| scope.spawn(move || run_shard(s)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("shard thread panicked"))
                .collect()
        })
    };

    let mut visits = 0u64;
    let mut iter = results.into_iter();
    let (mut acc, v0) = iter.next().expect("at least one shard");
    visits += v0;
    for (a, v) in iter {
        merge(&mut acc, a);
        visits += v;
    }
    Ok((
        acc,
        VisitSummary {
            visits,
            shards,
            prefix_len,
        },
    ))
}

/// Depth-first over all words of length 1..=depth from the root.
#[allow(clippy::too_many_arguments)]
fn dfs<T, A, V>(
    maps: &[Matrix<T>],
    depth: usize,
    all_levels: bool,
    word: &mut Vec<u8>,
    stack: &mut Vec<Matrix<T>>,
    acc: &mut A,
    visit: &V,
    visits: &mut u64,
) where
    T: Real,
    V: Fn(&mut A, &[u8], &Matrix<T>),
{
    for (j, m) in maps.iter().enumerate() {
        let next = match stack.last() {
            None => m.clone(),
            Some(p) => p.mul(m),
        };
        word.push(j as u8 + 1);
        stack.push(next);
        if all_levels || word.len() == depth {
            visit(acc, word, stack.last().unwrap());
            *visits += 1;
        }
        if word.len() < depth {
            dfs(maps, depth, all_levels, word, stack, acc, visit, visits);
        }
        word.pop();
        stack.pop();
    }
}

/// Extend the current prefix (already on the stacks) down to depth `n`.
#[allow(clippy::too_many_arguments)]
fn dfs_extend<T, A, V>(
    maps: &[Matrix<T>],
    n: usize,
    all_levels: bool,
    word: &mut Vec<u8>,
    stack: &mut Vec<Matrix<T>>,
    acc: &mut A,
    visit: &V,
    visits: &mut u64,
) where
    T: Real,
    V: Fn(&mut A, &[u8], &Matrix<T>),
{
    for (j, m) in maps.iter().enumerate() {
        let next = stack.last().map(|p| p.mul(m)).unwrap_or_else(|| m.clone());
        word.push(j as u8 + 1);
        stack.push(next);
        if all_levels || word.len() == n {
            visit(acc, word, stack.last().unwrap());
            *visits += 1;
        }
        if word.len() < n {
            dfs_extend(maps, n, all_levels, word, stack, acc, visit, visits);
        }
        word.pop();
        stack.pop();
    }
}
