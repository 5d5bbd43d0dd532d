use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A sample pair and whether both samples share an identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub matched: bool,
}

impl Pair {
    pub fn new(i: usize, j: usize, matched: bool) -> Self {
        Self { i, j, matched }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    pairs: Vec<Pair>,
}

impl PairSet {
    pub fn new(pairs: Vec<Pair>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Pair> {
        self.pairs.iter()
    }

    pub fn as_slice(&self) -> &[Pair] {
        &self.pairs
    }

    /// `(matched, unmatched)` counts.
    pub fn counts(&self) -> (usize, usize) {
        let pos = self.pairs.iter().filter(|p| p.matched).count();
        (pos, self.pairs.len() - pos)
    }

    /// Checks indices against a sample count and rejects self-pairs.
    pub fn validate(&self, samples: usize) -> Result<()> {
        for (k, p) in self.pairs.iter().enumerate() {
            for index in [p.i, p.j] {
                if index >= samples {
                    return Err(Error::PairIndex {
                        pair: k,
                        index,
                        count: samples,
                    });
                }
            }
            if p.i == p.j {
                return Err(Error::InvalidArgument(format!(
                    "pair {k} pairs sample {} with itself",
                    p.i
                )));
            }
        }
        Ok(())
    }

    /// Fitting precondition: at least one matched and one unmatched pair.
    pub fn require_both_labels(&self) -> Result<()> {
        match self.counts() {
            (0, _) => Err(Error::InvalidArgument(
                "pair set has no matched pairs".into(),
            )),
            (_, 0) => Err(Error::InvalidArgument(
                "pair set has no unmatched pairs".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl FromIterator<Pair> for PairSet {
    fn from_iter<T: IntoIterator<Item = Pair>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a PairSet {
    type Item = &'a Pair;
    type IntoIter = std::slice::Iter<'a, Pair>;

    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}

/// Enumerates the unordered same-identity or cross-identity pairs of a
/// labelled sample set and decodes a flat pair index back into samples.
///
/// Samples are sorted by `(label, index)`; the pairs owned by sorted
/// position `p` are its partners further along the order, either inside its
/// identity block or past the block's end.
struct PairSpace<'a> {
    order: &'a [usize],
    block_end: &'a [usize],
    prefix: Vec<u64>,
    matched: bool,
}

impl<'a> PairSpace<'a> {
    fn new(order: &'a [usize], block_end: &'a [usize], matched: bool) -> Self {
        let n = order.len();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0u64);
        let mut acc = 0u64;
        for (p, &end) in block_end.iter().enumerate() {
            acc += if matched { end - p - 1 } else { n - end } as u64;
            prefix.push(acc);
        }
        Self {
            order,
            block_end,
            prefix,
            matched,
        }
    }

    fn total(&self) -> u64 {
        *self.prefix.last().unwrap()
    }

    fn decode(&self, k: u64) -> Pair {
        let p = self.prefix.partition_point(|&v| v <= k) - 1;
        let offset = (k - self.prefix[p]) as usize;
        let q = if self.matched {
            p + 1 + offset
        } else {
            self.block_end[p] + offset
        };
        Pair::new(self.order[p], self.order[q], self.matched)
    }
}

/// Draws `count` distinct unordered pairs, `round(count · pos_fraction)` of
/// them matched, uniformly without replacement within each class.
///
/// The result is shuffled and depends only on the inputs and `seed`.
pub fn sample_pairs(labels: &[u32], count: usize, pos_fraction: f64, seed: u64) -> Result<PairSet> {
    if !(0.0..=1.0).contains(&pos_fraction) {
        return Err(Error::InvalidArgument(format!(
            "pos_fraction must lie in [0, 1], got {pos_fraction}"
        )));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("pair count must be >= 1".into()));
    }
    let n_pos = ((count as f64) * pos_fraction).round() as usize;
    let n_neg = count - n_pos;

    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| (labels[i], i));
    let mut block_end = vec![0usize; order.len()];
    let mut start = 0;
    while start < order.len() {
        let label = labels[order[start]];
        let mut end = start;
        while end < order.len() && labels[order[end]] == label {
            end += 1;
        }
        block_end[start..end].fill(end);
        start = end;
    }

    let positives = PairSpace::new(&order, &block_end, true);
    let negatives = PairSpace::new(&order, &block_end, false);
    if n_pos as u64 > positives.total() {
        return Err(Error::InfeasiblePairs(format!(
            "requested {n_pos} matched pairs but only {} exist",
            positives.total()
        )));
    }
    if n_neg as u64 > negatives.total() {
        return Err(Error::InfeasiblePairs(format!(
            "requested {n_neg} unmatched pairs but only {} exist",
            negatives.total()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count);
    for (space, amount) in [(&positives, n_pos), (&negatives, n_neg)] {
        let total = usize::try_from(space.total())
            .map_err(|_| Error::InfeasiblePairs("pair space exceeds address range".into()))?;
        pairs.extend(
            index::sample(&mut rng, total, amount)
                .into_iter()
                .map(|k| space.decode(k as u64)),
        );
    }
    pairs.shuffle(&mut rng);
    Ok(PairSet::new(pairs))
}
