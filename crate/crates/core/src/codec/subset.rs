use crate::hashing::{Digest, HashFn};

use super::{decode_erasure, CodeParams, CodecError, CodedElement};

/// Default cap on the number of (f+1)-subsets a search may enumerate.
pub const DEFAULT_SUBSET_CAP: u128 = 1_000_000;

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Incremental search for a `k`-subset of collected elements whose erasure
/// decode hashes to a target digest. Each call to [`SubsetSearch::search`]
/// only tries subsets that contain at least one element added since the
/// previous call.
#[derive(Debug, Clone)]
pub struct SubsetSearch {
    params: CodeParams,
    target: Digest,
    hash: HashFn,
    cap: u128,
    elements: Vec<CodedElement>,
    searched: usize,
    tried: u128,
}

impl SubsetSearch {
    pub fn new(params: CodeParams, target: Digest, hash: HashFn) -> Self {
        SubsetSearch { params, target, hash, cap: DEFAULT_SUBSET_CAP, elements: Vec::new(), searched: 0, tried: 0 }
    }

    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    /// Adds an element; duplicates (same index) are ignored.
    pub fn push(&mut self, element: CodedElement) -> bool {
        if self.elements.iter().any(|e| e.index == element.index) {
            return false;
        }
        self.elements.push(element);
        true
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Number of subsets decoded so far.
    pub fn subsets_tried(&self) -> u128 {
        self.tried
    }

    pub fn search(&mut self) -> Result<Option<Vec<u8>>, CodecError> {
        let k = self.params.k();
        let total = binomial(self.elements.len(), k);
        if total > self.cap {
            return Err(CodecError::FaultBudgetTooLarge { subsets: total, cap: self.cap });
        }
        let mut found = None;
        for newest in self.searched..self.elements.len() {
            if newest + 1 < k {
                continue;
            }
            // subsets = {newest} plus a (k-1)-combination of 0..newest
            let mut combo: Vec<usize> = (0..k - 1).collect();
            loop {
                self.tried += 1;
                if let Some(m) = self.try_subset(&combo, newest) {
                    found = Some(m);
                    break;
                }
                if !next_combination(&mut combo, newest) {
                    break;
                }
            }
            if found.is_some() {
                break;
            }
        }
        // TODO: resume mid-element instead of marking everything searched once a match is found
        self.searched = self.elements.len();
        Ok(found)
    }

    fn try_subset(&self, combo: &[usize], newest: usize) -> Option<Vec<u8>> {
        let anchor = &self.elements[newest];
        let len = anchor.claimed_len as usize;
        if len == 0 {
            return None;
        }
        let subset: Vec<CodedElement> =
            combo.iter().map(|&i| &self.elements[i]).chain(std::iter::once(anchor)).cloned().collect();
        if subset.iter().any(|e| e.claimed_len != anchor.claimed_len) {
            return None;
        }
        let m = decode_erasure(&subset, self.params, len).ok()?;
        ((self.hash)(&m) == self.target).then_some(m)
    }
}

/// Advances `combo` (strictly increasing, values `< limit`) to the next
/// combination in lexicographic order.
fn next_combination(combo: &mut [usize], limit: usize) -> bool {
    let r = combo.len();
    if r == 0 {
        return false;
    }
    let mut i = r;
    while i > 0 {
        i -= 1;
        if combo[i] < limit - (r - i) {
            combo[i] += 1;
            for j in i + 1..r {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// One-shot search over `codeset` for a `(f+1)`-subset decoding to a payload
/// with digest `target`. `params.k()` must equal `f + 1`.
pub fn subset_search_decode(
    codeset: &[CodedElement],
    target: Digest,
    f: usize,
    params: CodeParams,
    hash: HashFn,
    cap: u128,
) -> Result<Option<Vec<u8>>, CodecError> {
    if params.k() != f + 1 {
        return Err(CodecError::InvalidParams {
            n: params.n(),
            k: params.k(),
            reason: "subset search requires k = f + 1",
        });
    }
    let mut search = SubsetSearch::new(params, target, hash).with_cap(cap);
    for e in codeset {
        search.push(e.clone());
    }
    search.search()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode;
    use crate::hashing::digest;

    #[test]
    fn combinations_enumerate_binomial() {
        for limit in 0..8 {
            for r in 1..=limit {
                let mut combo: Vec<usize> = (0..r).collect();
                let mut count = 1;
                while next_combination(&mut combo, limit) {
                    count += 1;
                }
                assert_eq!(count as u128, binomial(limit, r));
            }
        }
    }

    #[test]
    fn single_subset_of_correct_elements() {
        let p = CodeParams::new(7, 3).unwrap();
        let m = b"payload".to_vec();
        let els = encode(&m, p).unwrap();
        let got = subset_search_decode(&els[2..5], digest(&m), 2, p, digest, DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(got, Some(m));
    }

    #[test]
    fn unmatched_target_is_absent() {
        let p = CodeParams::new(7, 3).unwrap();
        let els = encode(b"payload", p).unwrap();
        let got = subset_search_decode(&els, digest(b"other"), 2, p, digest, DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(got, None);
    }

    #[test]
    fn cap_is_enforced() {
        let p = CodeParams::new(7, 3).unwrap();
        let els = encode(b"payload", p).unwrap();
        let err = subset_search_decode(&els, digest(b"x"), 2, p, digest, 10).unwrap_err();
        assert_eq!(err, CodecError::FaultBudgetTooLarge { subsets: 35, cap: 10 });
    }

    #[test]
    fn incremental_search_only_tries_new_subsets() {
        let p = CodeParams::new(7, 3).unwrap();
        let m = b"incremental".to_vec();
        let els = encode(&m, p).unwrap();
        let mut s = SubsetSearch::new(p, digest(b"never"), digest);
        for e in &els[..4] {
            s.push(e.clone());
        }
        s.search().unwrap();
        assert_eq!(s.subsets_tried(), 4); // C(4,3)
        s.push(els[4].clone());
        s.search().unwrap();
        assert_eq!(s.subsets_tried(), 4 + 6); // C(4,2) subsets containing the new element
    }
}
