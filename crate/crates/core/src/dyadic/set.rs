use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_depth, max_depth, DyadicFunction};
use crate::error::{invalid, Error, Result};

/// A finite union of depth-`d` dyadic atoms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSet", into = "RawSet")]
pub struct DyadicSet {
    depth: u32,
    mask: Vec<bool>,
}

/// JSON form `{"depth": d, "mask": "<hex>"}`.
///
/// Atom `k` is bit `7 - (k % 8)` of byte `k / 8`, so the first atom is the most
/// significant bit of the first byte. Depths below 3 pad the single byte with
/// zero bits.
#[derive(Clone, Serialize, Deserialize)]
struct RawSet {
    depth: u32,
    mask: String,
}

impl TryFrom<RawSet> for DyadicSet {
    type Error = Error;

    fn try_from(raw: RawSet) -> Result<Self> {
        DyadicSet::from_hex(raw.depth, &raw.mask)
    }
}

impl From<DyadicSet> for RawSet {
    fn from(set: DyadicSet) -> Self {
        RawSet {
            depth: set.depth,
            mask: set.to_hex(),
        }
    }
}

impl DyadicSet {
    pub fn new(depth: u32, mask: Vec<bool>) -> Result<Self> {
        check_depth(depth)?;
        if mask.len() != 1usize << depth {
            return Err(Error::Format(format!(
                "depth {depth} needs {} mask bits, got {}",
                1usize << depth,
                mask.len()
            )));
        }
        Ok(Self { depth, mask })
    }

    pub(crate) fn from_mask_unchecked(depth: u32, mask: Vec<bool>) -> Self {
        debug_assert_eq!(mask.len(), 1usize << depth);
        Self { depth, mask }
    }

    pub fn full(depth: u32) -> Self {
        Self {
            depth,
            mask: vec![true; 1usize << depth],
        }
    }

    pub fn empty(depth: u32) -> Self {
        Self {
            depth,
            mask: vec![false; 1usize << depth],
        }
    }

    /// The set made of the listed atom indices (0-based).
    pub fn from_atoms(depth: u32, atoms: &[usize]) -> Result<Self> {
        let mut set = Self::empty(depth);
        for &k in atoms {
            if k >= set.mask.len() {
                return Err(invalid(
                    "atoms",
                    format!("atom {k} out of range at depth {depth}"),
                ));
            }
            set.mask[k] = true;
        }
        Ok(set)
    }

    /// The dyadic interval `I_m^k = [(k-1) 2^-m, k 2^-m)` (with `1 <= k <= 2^m`)
    /// expressed at depth `depth >= m`.
    pub fn interval(m: u32, k: usize, depth: u32) -> Result<Self> {
        if depth < m {
            return Err(Error::DepthInsufficient { needed: m, depth });
        }
        if k == 0 || k > 1usize << m {
            return Err(invalid("k", format!("position {k} outside 1..=2^{m}")));
        }
        let width = 1usize << (depth - m);
        let mut set = Self::empty(depth);
        set.mask[(k - 1) * width..k * width].fill(true);
        Ok(set)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Number of atoms in the set.
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Lebesgue measure, `count * 2^-depth`.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * (-(self.depth as f64)).exp2()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.mask.get(atom).copied().unwrap_or(false)
    }

    /// Indices of the atoms in the set, ascending.
    pub fn atoms(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .collect()
    }

    pub fn refine(&self, depth: u32) -> Result<Self> {
        if depth < self.depth {
            return Err(invalid(
                "depth",
                format!("cannot refine depth {} down to {depth}", self.depth),
            ));
        }
        check_depth(depth)?;
        let rep = 1usize << (depth - self.depth);
        let mut mask = Vec::with_capacity(self.mask.len() * rep);
        for &b in &self.mask {
            mask.extend(std::iter::repeat_n(b, rep));
        }
        Ok(Self { depth, mask })
    }

    /// Expresses the set at a coarser depth, if it is a union of atoms there.
    pub fn coarsen(&self, depth: u32) -> Option<Self> {
        if depth > self.depth {
            return None;
        }
        let width = 1usize << (self.depth - depth);
        let mut mask = Vec::with_capacity(1usize << depth);
        for block in self.mask.chunks(width) {
            let first = block[0];
            if block.iter().any(|&b| b != first) {
                return None;
            }
            mask.push(first);
        }
        Some(Self { depth, mask })
    }

    /// Coarsest depth at which the set is a union of atoms.
    pub fn natural_depth(&self) -> u32 {
        (0..=self.depth)
            .find(|&d| self.coarsen(d).is_some())
            .unwrap_or(self.depth)
    }

    fn combine(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        let depth = self.depth.max(other.depth);
        let a = self.refine(depth).expect("validated depth");
        let b = other.refine(depth).expect("validated depth");
        Self {
            depth,
            mask: a.mask.iter().zip(&b.mask).map(|(&x, &y)| f(x, y)).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Self {
        Self {
            depth: self.depth,
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    /// The indicator function `1_A`.
    pub fn indicator(&self) -> DyadicFunction {
        DyadicFunction::from_raw(
            self.depth,
            self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }

    pub fn to_hex(&self) -> String {
        let nbytes = self.mask.len().div_ceil(8);
        let mut bytes = vec![0u8; nbytes];
        for (k, &b) in self.mask.iter().enumerate() {
            if b {
                bytes[k / 8] |= 0x80 >> (k % 8);
            }
        }
        hex::encode(bytes)
    }

    pub fn from_hex(depth: u32, text: &str) -> Result<Self> {
        check_depth(depth)?;
        let bytes = hex::decode(text).map_err(|e| Error::Format(format!("mask hex: {e}")))?;
        let n = 1usize << depth;
        if bytes.len() != n.div_ceil(8) {
            return Err(Error::Format(format!(
                "mask for depth {depth} needs {} bytes, got {}",
                n.div_ceil(8),
                bytes.len()
            )));
        }
        let mask = (0..n).map(|k| bytes[k / 8] & (0x80 >> (k % 8)) != 0).collect();
        for k in n..bytes.len() * 8 {
            if bytes[k / 8] & (0x80 >> (k % 8)) != 0 {
                return Err(Error::Format("mask padding bits must be zero".into()));
            }
        }
        Ok(Self { depth, mask })
    }
}

/// Splits `set` into `n` pairwise disjoint pieces of equal measure.
///
/// The set is refined until its atom count is a multiple of `n` (at most to
/// [`max_depth`]); atoms are then shuffled with `rng` and dealt out in
/// consecutive chunks.
pub fn split_set<R: Rng + ?Sized>(set: &DyadicSet, n: usize, rng: &mut R) -> Result<Vec<DyadicSet>> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if set.is_empty() {
        return Err(Error::InvalidSet("cannot split an empty set".into()));
    }
    if n == 1 {
        return Ok(vec![set.clone()]);
    }
    let cap = max_depth();
    let mut working = set.clone();
    while !working.count().is_multiple_of(n) || working.count() < n {
        if working.depth >= cap {
            return Err(Error::ResolutionExhausted(format!(
                "{} atoms at depth {} cannot be split into {n} equal pieces",
                working.count(),
                working.depth
            )));
        }
        working = working.refine(working.depth + 1)?;
    }
    let mut atoms = working.atoms();
    atoms.shuffle(rng);
    let per = atoms.len() / n;
    Ok(atoms
        .chunks(per)
        .map(|chunk| {
            let mut piece = DyadicSet::empty(working.depth);
            for &k in chunk {
                piece.mask[k] = true;
            }
            piece
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn measure_and_algebra() {
        let a = DyadicSet::from_atoms(2, &[0, 3]).unwrap();
        assert_eq!(a.measure(), 0.5);
        let b = DyadicSet::interval(1, 1, 1).unwrap();
        let u = a.union(&b);
        assert_eq!(u.depth(), 2);
        assert_eq!(u.mask(), &[true, true, false, true]);
        assert_eq!(
            a.intersection(&b).measure() + a.difference(&b).measure(),
            a.measure()
        );
        assert_eq!(a.measure() + a.complement().measure(), 1.0);
    }

    #[test]
    fn split_full_depth_one_in_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let parts = split_set(&DyadicSet::full(1), 2, &mut rng).unwrap();
        assert_eq!(parts.len(), 2);
        let mut masks: Vec<_> = parts.iter().map(|p| p.mask().to_vec()).collect();
        masks.sort();
        assert_eq!(masks, vec![vec![false, true], vec![true, false]]);
    }

    #[test]
    fn split_identity() {
        let a = DyadicSet::from_atoms(3, &[1, 2, 6]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(split_set(&a, 1, &mut rng).unwrap(), vec![a]);
    }

    #[test]
    fn split_three_quarters_in_three() {
        // three atoms at depth 2: one atom per piece, no refinement needed
        let a = DyadicSet::from_atoms(2, &[0, 1, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let parts = split_set(&a, 3, &mut rng).unwrap();
        for p in &parts {
            assert_eq!(p.measure(), 0.25);
            assert_eq!(p.count(), 1);
        }
        let all = parts.iter().fold(DyadicSet::empty(2), |acc, p| acc.union(p));
        assert_eq!(all, a);
    }

    #[test]
    fn split_indivisible_exhausts_resolution() {
        let a = DyadicSet::from_atoms(1, &[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            split_set(&a, 3, &mut rng),
            Err(Error::ResolutionExhausted(_))
        ));
    }

    #[test]
    fn hex_layout() {
        let a = DyadicSet::from_atoms(2, &[0, 3]).unwrap();
        assert_eq!(a.to_hex(), "90");
        let b = DyadicSet::from_atoms(4, &[0, 15]).unwrap();
        assert_eq!(b.to_hex(), "8001");
        assert_eq!(DyadicSet::from_hex(4, "8001").unwrap(), b);
        assert!(DyadicSet::from_hex(2, "91").is_err());
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"depth":2,"mask":"90"}"#);
        assert_eq!(serde_json::from_str::<DyadicSet>(&json).unwrap(), a);
    }

    #[test]
    fn coarsen_detects_unions() {
        let a = DyadicSet::interval(1, 2, 4).unwrap();
        assert_eq!(a.natural_depth(), 1);
        assert_eq!(a.coarsen(1).unwrap().mask(), &[false, true]);
        let b = DyadicSet::from_atoms(3, &[1]).unwrap();
        assert!(b.coarsen(2).is_none());
    }
}
