//! Hexadecimal float encoding for snapshots.
//!
//! Snapshot documents store every `f64` as a C99-style hex float
//! (`-0x1.5bf0a8b145769p+1`). Formatting and parsing are implemented with
//! integer arithmetic only, so a format/parse round trip reproduces the exact
//! bit pattern of the original value.

use crate::error::{Error, Result};

const FRAC_BITS: u32 = 52;
const FRAC_MASK: u64 = (1u64 << FRAC_BITS) - 1;

/// Formats a finite or non-finite `f64` as a hex-float token.
pub fn format_hex(x: f64) -> String {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_field = ((bits >> FRAC_BITS) & 0x7ff) as i32;
    let frac = bits & FRAC_MASK;

    if exp_field == 0x7ff {
        return if frac != 0 {
            "nan".to_string()
        } else {
            format!("{sign}inf")
        };
    }
    if exp_field == 0 {
        if frac == 0 {
            return format!("{sign}0x0p+0");
        }
        // Subnormal: value = frac * 2^-1074; renormalize so bit 52 is set.
        let top = 63 - frac.leading_zeros(); // position of highest set bit
        let mant = frac << (FRAC_BITS - top);
        return render(sign, mant & FRAC_MASK, top as i32 - 1074);
    }
    render(sign, frac, exp_field - 1023)
}

fn render(sign: &str, frac: u64, exp: i32) -> String {
    let hex = format!("{frac:013x}");
    let trimmed = hex.trim_end_matches('0');
    if trimmed.is_empty() {
        format!("{sign}0x1p{exp:+}")
    } else {
        format!("{sign}0x1.{trimmed}p{exp:+}")
    }
}

/// Parses a hex-float token back to `f64`.
///
/// Accepts any C99 hex float (arbitrary digit counts, with round-to-nearest-
/// even applied when the significand exceeds 53 bits) plus the tokens `inf`,
/// `-inf` and `nan`.
pub fn parse_hex(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        "nan" => return Ok(f64::NAN),
        _ => {}
    }

    let bad = || Error::Snapshot(format!("malformed hex float `{s}`"));

    let (neg, rest) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let rest = rest
        .strip_prefix("0x")
        .or_else(|| rest.strip_prefix("0X"))
        .ok_or_else(bad)?;
    let p = rest.find(['p', 'P']).ok_or_else(bad)?;
    let (mant_str, exp_str) = (&rest[..p], &rest[p + 1..]);
    let exp: i64 = exp_str.parse().map_err(|_| bad())?;

    let mut mant: u128 = 0;
    let mut frac_digits: i64 = 0;
    let mut dropped_int_digits: i64 = 0;
    let mut sticky = false;
    let mut seen_dot = false;
    let mut seen_digit = false;
    for ch in mant_str.chars() {
        if ch == '.' {
            if seen_dot {
                return Err(bad());
            }
            seen_dot = true;
            continue;
        }
        let d = ch.to_digit(16).ok_or_else(bad)? as u128;
        seen_digit = true;
        if mant <= (u128::MAX - 15) / 16 {
            mant = mant * 16 + d;
            if seen_dot {
                frac_digits += 1;
            }
        } else if seen_dot {
            sticky |= d != 0;
        } else {
            dropped_int_digits += 1;
        }
    }
    if !seen_digit {
        return Err(bad());
    }

    let sign_bit = (neg as u64) << 63;
    if mant == 0 {
        return Ok(f64::from_bits(sign_bit));
    }

    // value = mant * 2^e2 (+ sticky ulps below the retained digits)
    let mut e2 = exp - 4 * frac_digits + 4 * dropped_int_digits;
    let nbits = 128 - mant.leading_zeros() as i64;

    // Normalize the significand to exactly 53 bits with round-to-nearest-even.
    if nbits > 53 {
        let shift = (nbits - 53) as u32;
        let round = (mant >> (shift - 1)) & 1 == 1;
        let lower = if shift > 1 {
            mant & ((1u128 << (shift - 1)) - 1) != 0
        } else {
            false
        };
        mant >>= shift;
        e2 += shift as i64;
        if round && (lower || sticky || mant & 1 == 1) {
            mant += 1;
            if mant == 1 << 53 {
                mant >>= 1;
                e2 += 1;
            }
        }
    } else if nbits < 53 {
        mant <<= (53 - nbits) as u32;
        e2 -= 53 - nbits;
    }

    // mant in [2^52, 2^53); value = mant * 2^e2 = 1.F * 2^(e2 + 52)
    let ue = e2 + 52;
    if ue > 1023 {
        return Err(Error::Snapshot(format!("hex float `{s}` overflows f64")));
    }
    let bits = if ue < -1022 {
        let shift = -1022 - ue;
        if shift > 53 {
            0 // underflows past the smallest subnormal
        } else {
            let shift = shift as u32;
            let round = (mant >> (shift - 1)) & 1 == 1;
            let lower = if shift > 1 {
                mant & ((1u128 << (shift - 1)) - 1) != 0
            } else {
                false
            };
            let mut f = (mant >> shift) as u64;
            if round && (lower || sticky || f & 1 == 1) {
                // May carry into the exponent field; that yields the smallest
                // normal, which is exactly the right result.
                f += 1;
            }
            f
        }
    } else {
        ((ue + 1023) as u64) << FRAC_BITS | (mant as u64 & FRAC_MASK)
    };
    Ok(f64::from_bits(bits | sign_bit))
}
