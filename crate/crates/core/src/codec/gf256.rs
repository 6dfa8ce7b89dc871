//! Arithmetic in GF(2^8) with the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11d).
//!
//! Addition is XOR. Multiplication goes through log/exp tables; a full
//! 256x256 product table is built lazily for the bulk slice kernels.

use std::sync::OnceLock;

pub const POLY: u16 = 0x11d;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
}

const fn build_tables() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY;
        }
        i += 1;
    }
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    Tables { exp, log }
}

static TABLES: Tables = build_tables();

#[inline]
pub fn add(a: u8, b: u8) -> u8 {
    a ^ b
}

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    TABLES.exp[TABLES.log[a as usize] as usize + TABLES.log[b as usize] as usize]
}

/// Multiplicative inverse. Panics on zero.
#[inline]
pub fn inv(a: u8) -> u8 {
    assert!(a != 0, "inverse of zero in GF(256)");
    TABLES.exp[255 - TABLES.log[a as usize] as usize]
}

#[inline]
pub fn div(a: u8, b: u8) -> u8 {
    mul(a, inv(b))
}

pub fn pow(a: u8, e: usize) -> u8 {
    if e == 0 {
        return 1;
    }
    if a == 0 {
        return 0;
    }
    TABLES.exp[(TABLES.log[a as usize] as usize * e) % 255]
}

fn mul_table() -> &'static [[u8; 256]; 256] {
    static TABLE: OnceLock<Box<[[u8; 256]; 256]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[0u8; 256]; 256]);
        for a in 0..256 {
            for b in 0..256 {
                t[a][b] = mul(a as u8, b as u8);
            }
        }
        t
    })
}

/// `dst[i] ^= c * src[i]` for every byte.
pub fn mul_add_slice(dst: &mut [u8], src: &[u8], c: u8) {
    debug_assert_eq!(dst.len(), src.len());
    match c {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let row = &mul_table()[c as usize];
            dst.iter_mut().zip(src).for_each(|(d, &s)| *d ^= row[s as usize]);
        }
    }
}

/// Evaluates a polynomial given by ascending coefficients at `x`.
pub fn poly_eval(coeffs: &[u8], x: u8) -> u8 {
    coeffs.iter().rev().fold(0u8, |acc, &c| add(mul(acc, x), c))
}

/// Solves `a * x = b` by Gauss-Jordan elimination. `a` is row-major with
/// `rows` rows and `cols` columns. Free variables are set to zero. Returns
/// `None` when the system is inconsistent.
pub fn solve(mut a: Vec<Vec<u8>>, mut b: Vec<u8>, cols: usize) -> Option<Vec<u8>> {
    let rows = a.len();
    let mut pivot_cols = Vec::with_capacity(cols);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, p);
        b.swap(r, p);
        let scale = inv(a[r][c]);
        for v in a[r].iter_mut() {
            *v = mul(*v, scale);
        }
        b[r] = mul(b[r], scale);
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let factor = a[i][c];
                for j in 0..cols {
                    let t = mul(factor, a[r][j]);
                    a[i][j] ^= t;
                }
                b[i] ^= mul(factor, b[r]);
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    if b[r..].iter().any(|&v| v != 0) {
        return None;
    }
    let mut x = vec![0u8; cols];
    for (row, &c) in pivot_cols.iter().enumerate() {
        x[c] = b[row];
    }
    Some(x)
}

/// Polynomial long division over GF(256), ascending coefficients.
/// Returns (quotient, remainder).
pub fn poly_divmod(num: &[u8], den: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let den_deg = den.iter().rposition(|&c| c != 0).expect("division by zero polynomial");
    let mut rem = num.to_vec();
    if num.len() <= den_deg {
        return (vec![0], rem);
    }
    let mut quot = vec![0u8; num.len() - den_deg];
    let lead_inv = inv(den[den_deg]);
    for i in (den_deg..num.len()).rev() {
        let coef = mul(rem[i], lead_inv);
        if coef == 0 {
            continue;
        }
        quot[i - den_deg] = coef;
        for (j, &d) in den[..=den_deg].iter().enumerate() {
            rem[i - den_deg + j] ^= mul(coef, d);
        }
    }
    rem.truncate(den_deg);
    (quot, rem)
}
