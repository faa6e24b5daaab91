use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::bundles::ConditioningBundle;

/// Which n-grams to count and how to hash them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub orders: Vec<usize>,
    /// Hash space is `2^dim_log2`.
    pub dim_log2: u32,
    /// Hash precedent-region and current-facts n-grams into separate namespaces.
    pub segment_tagged: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            orders: vec![1, 2],
            dim_log2: 20,
            segment_tagged: true,
        }
    }
}

impl FeatureSpec {
    pub fn unigrams() -> Self {
        FeatureSpec {
            orders: vec![1],
            ..Self::default()
        }
    }

    pub fn dim(&self) -> u64 {
        1u64 << self.dim_log2
    }

    fn hash(&self, role: u8, gram: &[u32]) -> u32 {
        let mut h = FnvHasher::default();
        if self.segment_tagged {
            h.write_u8(role);
        }
        h.write_u8(gram.len() as u8);
        for &t in gram {
            h.write_u32(t);
        }
        (h.finish() & (self.dim() - 1)) as u32
    }
}

/// Sorted `(hashed index, value)` pairs with unique indices.
pub type SparseVec = Vec<(u32, f64)>;

const ROLE_PRECEDENT: u8 = 1;
const ROLE_CURRENT: u8 = 2;

/// Counts hashed n-grams in each region of the bundle. N-grams never span
/// the boundary between the precedent region and the current facts.
pub fn featurize(bundle: &ConditioningBundle, spec: &FeatureSpec) -> SparseVec {
    let split = bundle.precedent_len().min(bundle.tokens.len());
    let regions = [
        (ROLE_PRECEDENT, &bundle.tokens[..split]),
        (ROLE_CURRENT, &bundle.tokens[split..]),
    ];
    let mut idx: Vec<u32> = Vec::new();
    for (role, toks) in regions {
        for &n in &spec.orders {
            if n == 0 || n > toks.len() {
                continue;
            }
            idx.extend(toks.windows(n).map(|w| spec.hash(role, w)));
        }
    }
    idx.sort_unstable();
    let mut out: SparseVec = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some((j, c)) if *j == i => *c += 1.0,
            _ => out.push((i, 1.0)),
        }
    }
    out
}
