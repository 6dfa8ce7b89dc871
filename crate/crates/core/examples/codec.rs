//! Reed-Solomon coding over GF(2^8): erasure decoding from any k elements,
//! error-correcting decoding with k = n - 3f, and the (f+1)-subset search
//! used when elements cannot be trusted.

use rblab::codec::{decode_correcting, decode_erasure, encode, subset_search_decode, CodeParams, CodedElement};
use rblab::hashing::digest;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = b"reliable broadcast needs only a small coded element per node".to_vec();

    let params = CodeParams::new(7, 3)?;
    let code = encode(&m, params)?;
    println!("[7,3] code: {} elements of {} bytes, distance {}", code.len(), code[0].data.len(), params.distance());
    let any_three = [code[6].clone(), code[2].clone(), code[4].clone()];
    assert_eq!(decode_erasure(&any_three, params, m.len())?, m);
    println!("erasure decode from elements 7, 3, 5: ok");

    let (n, f) = (13, 3);
    let params = CodeParams::new(n, n - 3 * f)?;
    let mut code = encode(&m, params)?;
    code.truncate(n - f);
    for e in code.iter_mut().take(f) {
        let garbage: Vec<u8> = e.data.iter().map(|b| b ^ 0x5a).collect();
        *e = CodedElement::new(e.index, garbage, e.claimed_len);
    }
    assert_eq!(decode_correcting(&code, params, f, m.len())?, m);
    println!("correcting decode: n={n}, f={f}, {} elements with {f} corrupted: ok", n - f);

    let f = 2;
    let params = CodeParams::new(7, f + 1)?;
    let mut code = encode(&m, params)?;
    code[0] = CodedElement::new(code[0].index, vec![0; code[0].data.len()], code[0].claimed_len);
    let found = subset_search_decode(&code, digest(&m), f, params, digest, 1_000)?;
    assert_eq!(found.as_deref(), Some(m.as_slice()));
    println!("subset search over 7 elements with one corrupted: found m");
    Ok(())
}
