use std::collections::BTreeSet;

use super::gf256::{self, mul, mul_add_slice};
use super::{CodeParams, CodecError, CodedElement};

#[inline]
fn point(index: usize) -> u8 {
    debug_assert!((1..=255).contains(&index));
    index as u8
}

/// Lagrange coefficients expressing `P(target)` in terms of `P(x_s)` for the
/// evaluation positions in `from` (1-based indices, pairwise distinct).
fn lagrange_row(from: &[usize], target: usize) -> Vec<u8> {
    let xt = point(target);
    from.iter()
        .map(|&s| {
            let xs = point(s);
            let mut num = 1u8;
            let mut den = 1u8;
            for &o in from {
                if o != s {
                    let xo = point(o);
                    num = mul(num, xt ^ xo);
                    den = mul(den, xs ^ xo);
                }
            }
            gf256::div(num, den)
        })
        .collect()
}

/// Evaluates the unique degree `< k` vector polynomial through `known`
/// (position, shard) pairs at every position in `targets`.
fn interpolate(known: &[(usize, &[u8])], targets: &[usize], shard_len: usize) -> Vec<Vec<u8>> {
    let from: Vec<usize> = known.iter().map(|(i, _)| *i).collect();
    targets
        .iter()
        .map(|&t| {
            if let Some((_, data)) = known.iter().find(|(i, _)| *i == t) {
                return data.to_vec();
            }
            let row = lagrange_row(&from, t);
            let mut out = vec![0u8; shard_len];
            for (c, (_, data)) in row.iter().zip(known) {
                mul_add_slice(&mut out, data, *c);
            }
            out
        })
        .collect()
}

/// Splits `m` into `k` zero-padded shards and returns all `n` elements.
pub fn encode(m: &[u8], params: CodeParams) -> Result<Vec<CodedElement>, CodecError> {
    if m.is_empty() {
        return Err(CodecError::EmptyPayload);
    }
    let k = params.k();
    let w = params.shard_len(m.len());
    let mut padded = m.to_vec();
    padded.resize(k * w, 0);
    let shards: Vec<&[u8]> = padded.chunks(w).collect();
    let known: Vec<(usize, &[u8])> = shards.iter().enumerate().map(|(j, s)| (j + 1, *s)).collect();
    let targets: Vec<usize> = (1..=params.n()).collect();
    let claimed = m.len() as u32;
    Ok(interpolate(&known, &targets, w)
        .into_iter()
        .enumerate()
        .map(|(i, data)| CodedElement::new((i + 1) as u8, data, claimed))
        .collect())
}

/// Encodes and returns only element `index` (1-based).
pub fn encode_element(m: &[u8], params: CodeParams, index: usize) -> Result<CodedElement, CodecError> {
    if index == 0 || index > params.n() {
        return Err(CodecError::InconsistentIndices(format!("element index {index} outside 1..={}", params.n())));
    }
    if m.is_empty() {
        return Err(CodecError::EmptyPayload);
    }
    let k = params.k();
    let w = params.shard_len(m.len());
    let mut padded = m.to_vec();
    padded.resize(k * w, 0);
    let known: Vec<(usize, &[u8])> = padded.chunks(w).enumerate().map(|(j, s)| (j + 1, s)).collect();
    let data = interpolate(&known, &[index], w).pop().unwrap();
    Ok(CodedElement::new(index as u8, data, m.len() as u32))
}

fn check_indices(elements: &[CodedElement], params: CodeParams) -> Result<(), CodecError> {
    let mut seen = BTreeSet::new();
    for e in elements {
        let i = e.index as usize;
        if i == 0 || i > params.n() {
            return Err(CodecError::InconsistentIndices(format!("element index {i} outside 1..={}", params.n())));
        }
        if !seen.insert(i) {
            return Err(CodecError::InconsistentIndices(format!("duplicate element index {i}")));
        }
    }
    Ok(())
}

fn reassemble(shards: Vec<Vec<u8>>, len: usize) -> Vec<u8> {
    let mut out: Vec<u8> = shards.into_iter().flatten().collect();
    out.truncate(len);
    out
}

/// Erasure-only decoding from any `k` (or more) correct elements. Uses the
/// `k` lowest indices and returns the first `len` bytes of the message.
pub fn decode_erasure(elements: &[CodedElement], params: CodeParams, len: usize) -> Result<Vec<u8>, CodecError> {
    let k = params.k();
    if elements.len() < k {
        return Err(CodecError::NotEnoughElements { needed: k, got: elements.len() });
    }
    check_indices(elements, params)?;
    let w = params.shard_len(len);
    if let Some(bad) = elements.iter().find(|e| e.data.len() != w) {
        return Err(CodecError::InconsistentIndices(format!(
            "element {} has {} bytes, expected {w}",
            bad.index,
            bad.data.len()
        )));
    }
    let mut sorted: Vec<&CodedElement> = elements.iter().collect();
    sorted.sort_by_key(|e| e.index);
    let known: Vec<(usize, &[u8])> = sorted[..k].iter().map(|e| (e.index as usize, &e.data[..])).collect();
    let targets: Vec<usize> = (1..=k).collect();
    Ok(reassemble(interpolate(&known, &targets, w), len))
}

/// Berlekamp-Welch on one column: finds the degree `< k` polynomial within
/// `t` errors of `(xs, ys)`, returned as ascending coefficients.
fn berlekamp_welch(xs: &[u8], ys: &[u8], k: usize, t: usize) -> Option<Vec<u8>> {
    let rows = xs.len();
    // unknowns: E_0..E_{t-1} (E monic of degree t), then Q_0..Q_{t+k-1}
    let cols = t + t + k;
    let mut a = Vec::with_capacity(rows);
    let mut b = Vec::with_capacity(rows);
    for (&x, &y) in xs.iter().zip(ys) {
        let mut row = vec![0u8; cols];
        let mut xp = 1u8;
        for cell in row.iter_mut().take(t) {
            *cell = mul(y, xp);
            xp = mul(xp, x);
        }
        // here xp == x^t
        b.push(mul(y, xp));
        let mut xq = 1u8;
        for cell in row.iter_mut().skip(t) {
            *cell = xq; // -Q term; subtraction is addition
            xq = mul(xq, x);
        }
        a.push(row);
    }
    let sol = gf256::solve(a, b, cols)?;
    let mut e = sol[..t].to_vec();
    e.push(1);
    let q = &sol[t..];
    let (p, rem) = gf256::poly_divmod(q, &e);
    if rem.iter().any(|&c| c != 0) {
        return None;
    }
    let mut p = p;
    p.resize(k.max(p.len()), 0);
    if p[k..].iter().any(|&c| c != 0) {
        return None;
    }
    p.truncate(k);
    Some(p)
}

/// Positions (indices into `xs`) where `poly` disagrees with `ys`.
fn column_errors(xs: &[u8], ys: &[u8], poly: &[u8]) -> Vec<usize> {
    xs.iter().zip(ys).enumerate().filter(|(_, (&x, &y))| gf256::poly_eval(poly, x) != y).map(|(i, _)| i).collect()
}

/// Error-correcting decode for `k = n - 3f`.
///
/// Elements whose length or `claimed_len` disagrees with `len` are treated as
/// erasures. With `N` usable elements the decoder accepts a codeword only if
/// it disagrees with at most `t = (N - k) / 2` of them, so it either returns
/// the unique codeword inside that radius or reports
/// [`CodecError::DetectedError`].
pub fn decode_correcting(
    elements: &[CodedElement],
    params: CodeParams,
    f: usize,
    len: usize,
) -> Result<Vec<u8>, CodecError> {
    let n = params.n();
    let k = params.k();
    if n < 3 * f + 1 || k != n - 3 * f {
        return Err(CodecError::InvalidParams { n, k, reason: "error-correcting decode requires k = n - 3f" });
    }
    if elements.len() < n - f {
        return Err(CodecError::NotEnoughElements { needed: n - f, got: elements.len() });
    }
    check_indices(elements, params)?;
    let w = params.shard_len(len);
    let mut usable: Vec<&CodedElement> =
        elements.iter().filter(|e| e.data.len() == w && e.claimed_len as usize == len).collect();
    usable.sort_by_key(|e| e.index);
    let big_n = usable.len();
    if big_n < k {
        return Err(CodecError::DetectedError);
    }
    let t = (big_n - k) / 2;
    let xs: Vec<u8> = usable.iter().map(|e| e.index).collect();

    let finish = |bad: &BTreeSet<usize>| -> Option<Vec<u8>> {
        if bad.len() > t {
            return None;
        }
        let known: Vec<(usize, &[u8])> = usable
            .iter()
            .enumerate()
            .filter(|(i, _)| !bad.contains(i))
            .take(k)
            .map(|(_, e)| (e.index as usize, &e.data[..]))
            .collect();
        let positions: Vec<usize> = usable.iter().map(|e| e.index as usize).collect();
        let recon = interpolate(&known, &positions, w);
        let mismatches = recon.iter().zip(&usable).filter(|(r, e)| r[..] != e.data[..]).count();
        if mismatches > t {
            return None;
        }
        let shards = interpolate(&known, &(1..=k).collect::<Vec<_>>(), w);
        Some(reassemble(shards, len))
    };

    // Fast path: locate errors on a pseudo-random linear combination of all
    // columns, then verify against the full vectors.
    let mut combo = vec![0u8; big_n];
    let mut coef = 0x53u8;
    for col in 0..w {
        coef = mul(coef, 0x8e) ^ 0x1b;
        let c = if coef == 0 { 1 } else { coef };
        for (slot, e) in combo.iter_mut().zip(&usable) {
            *slot ^= mul(c, e.data[col]);
        }
    }
    if let Some(p) = berlekamp_welch(&xs, &combo, k, t) {
        let bad: BTreeSet<usize> = column_errors(&xs, &combo, &p).into_iter().collect();
        if let Some(m) = finish(&bad) {
            return Ok(m);
        }
    }

    // Complete path: every column must decode; error positions are the union.
    let mut bad = BTreeSet::new();
    let mut ys = vec![0u8; big_n];
    for col in 0..w {
        for (slot, e) in ys.iter_mut().zip(&usable) {
            *slot = e.data[col];
        }
        let p = berlekamp_welch(&xs, &ys, k, t).ok_or(CodecError::DetectedError)?;
        bad.extend(column_errors(&xs, &ys, &p));
        if bad.len() > t {
            return Err(CodecError::DetectedError);
        }
    }
    finish(&bad).ok_or(CodecError::DetectedError)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, k: usize) -> CodeParams {
        CodeParams::new(n, k).unwrap()
    }

    #[test]
    fn repetition_code_for_k1() {
        let els = encode(&[0x41], params(3, 1)).unwrap();
        assert_eq!(els.len(), 3);
        for (i, e) in els.iter().enumerate() {
            assert_eq!(e.index as usize, i + 1);
            assert_eq!(&e.data[..], &[0x41]);
        }
    }

    #[test]
    fn systematic_prefix() {
        let m: Vec<u8> = (0..37).collect();
        let els = encode(&m, params(9, 4)).unwrap();
        let prefix: Vec<u8> = els[..4].iter().flat_map(|e| e.data.to_vec()).collect();
        assert_eq!(&prefix[..m.len()], &m[..]);
        assert!(prefix[m.len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn encode_element_matches_full_encode() {
        let m = b"hello erasure coded world";
        let p = params(11, 3);
        let all = encode(m, p).unwrap();
        for i in 1..=11 {
            assert_eq!(encode_element(m, p, i).unwrap(), all[i - 1]);
        }
    }

    #[test]
    fn erasure_threshold_boundary() {
        let p = params(5, 3);
        let els = encode(b"abcdef", p).unwrap();
        let err = decode_erasure(&els[..2], p, 6).unwrap_err();
        assert_eq!(err, CodecError::NotEnoughElements { needed: 3, got: 2 });
        assert_eq!(decode_erasure(&els[2..], p, 6).unwrap(), b"abcdef");
    }

    #[test]
    fn duplicate_indices_rejected() {
        let p = params(5, 2);
        let els = encode(b"xy", p).unwrap();
        let dup = vec![els[0].clone(), els[0].clone()];
        assert!(matches!(decode_erasure(&dup, p, 2), Err(CodecError::InconsistentIndices(_))));
    }

    #[test]
    fn invalid_params() {
        assert!(CodeParams::new(3, 4).is_err());
        assert!(CodeParams::new(256, 4).is_err());
        assert!(CodeParams::new(3, 0).is_err());
        assert!(CodeParams::new(255, 255).is_ok());
    }

    #[test]
    fn empty_payload_rejected() {
        assert_eq!(encode(&[], params(4, 2)).unwrap_err(), CodecError::EmptyPayload);
    }

    #[test]
    fn correcting_requires_k_n_minus_3f() {
        let p = params(13, 5);
        let els = encode(b"abcd", p).unwrap();
        assert!(matches!(decode_correcting(&els, p, 3, 4), Err(CodecError::InvalidParams { .. })));
    }

    #[test]
    fn correcting_needs_n_minus_f_inputs() {
        let p = params(13, 4);
        let els = encode(b"abcdefgh", p).unwrap();
        assert_eq!(
            decode_correcting(&els[..9], p, 3, 8).unwrap_err(),
            CodecError::NotEnoughElements { needed: 10, got: 9 }
        );
    }

    #[test]
    fn correcting_fixes_f_errors_among_n_minus_f() {
        let p = params(13, 4);
        let m = b"the quick brown fox jumps".to_vec();
        let mut els = encode(&m, p).unwrap();
        els.truncate(10);
        for e in els.iter_mut().take(3) {
            let mut d = e.data.to_vec();
            d[0] ^= 0xff;
            e.data = d.into();
        }
        assert_eq!(decode_correcting(&els, p, 3, m.len()).unwrap(), m);
    }

    #[test]
    fn wrong_length_elements_count_as_erasures() {
        let p = params(13, 4);
        let m = vec![9u8; 40];
        let mut els = encode(&m, p).unwrap();
        els[5].data = vec![1u8; 3].into();
        assert_eq!(decode_correcting(&els, p, 3, 40).unwrap(), m);
    }
}
