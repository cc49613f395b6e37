//! Exact-integer 8x8 DCT pair.
//!
//! Both directions accumulate products of the integer basis in `i64`
//! without intermediate rounding and round once at the end, so the
//! separable evaluation equals the direct double sum bit for bit.

use super::tables::{BASIS_BITS, DCT_BASIS};

// Two basis factors plus the 1/4 normalization.
const SHIFT: u32 = 2 * BASIS_BITS + 2;

/// Forward DCT of level-shifted samples followed by quantization with
/// round-half-away-from-zero. `quant` is in natural order.
pub fn forward_quantize(block: &[i32; 64], quant: &[u16; 64]) -> [i32; 64] {
    let mut rows = [[0i64; 8]; 8];
    for y in 0..8 {
        for u in 0..8 {
            rows[y][u] = (0..8)
                .map(|x| DCT_BASIS[x][u] * i64::from(block[y * 8 + x]))
                .sum();
        }
    }
    let mut out = [0i32; 64];
    for v in 0..8 {
        for u in 0..8 {
            let sum: i64 = (0..8).map(|y| DCT_BASIS[y][v] * rows[y][u]).sum();
            let div = i64::from(quant[v * 8 + u]) << SHIFT;
            let mag = (sum.abs() + div / 2) / div;
            out[v * 8 + u] = (sum.signum() * mag) as i32;
        }
    }
    out
}

/// Inverse DCT of dequantized coefficients (natural order) to 8-bit
/// samples, including the +128 level shift and clamping.
pub fn inverse(coef: &[i32; 64]) -> [u8; 64] {
    let mut cols = [[0i64; 8]; 8];
    for v in 0..8 {
        for x in 0..8 {
            cols[v][x] = (0..8)
                .map(|u| DCT_BASIS[x][u] * i64::from(coef[v * 8 + u]))
                .sum();
        }
    }
    let mut out = [0u8; 64];
    for y in 0..8 {
        for x in 0..8 {
            let sum: i64 = (0..8).map(|v| DCT_BASIS[y][v] * cols[v][x]).sum();
            let value = ((sum + (1 << (SHIFT - 1))) >> SHIFT) + 128;
            out[y * 8 + x] = value.clamp(0, 255) as u8;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Direct quadruple sum with a single rounding: the defining formula.
    fn inverse_direct(coef: &[i32; 64]) -> [u8; 64] {
        let mut out = [0u8; 64];
        for y in 0..8 {
            for x in 0..8 {
                let mut sum = 0i64;
                for v in 0..8 {
                    for u in 0..8 {
                        sum += DCT_BASIS[x][u] * DCT_BASIS[y][v] * i64::from(coef[v * 8 + u]);
                    }
                }
                let value = ((sum + (1 << 27)) >> 28) + 128;
                out[y * 8 + x] = value.clamp(0, 255) as u8;
            }
        }
        out
    }

    #[test]
    fn separable_inverse_equals_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let mut coef = [0i32; 64];
            for c in coef.iter_mut() {
                if rng.random_bool(0.3) {
                    *c = rng.random_range(-1200..1200);
                }
            }
            assert_eq!(inverse(&coef), inverse_direct(&coef));
        }
    }

    #[test]
    fn flat_block_is_dc_only() {
        let block = [0i32; 64];
        let q = forward_quantize(&block, &[1; 64]);
        assert!(q.iter().all(|&c| c == 0));

        let block = [37i32; 64];
        let q = forward_quantize(&block, &[1; 64]);
        assert_eq!(q[0], 8 * 37);
        assert!(q[1..].iter().all(|&c| c == 0));
        assert_eq!(inverse(&q), [165u8; 64]);
    }

    #[test]
    fn near_identity_at_unit_quantizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut block = [0i32; 64];
            for s in block.iter_mut() {
                *s = rng.random_range(-128..128);
            }
            let rec = inverse(&forward_quantize(&block, &[1; 64]));
            for (r, s) in rec.iter().zip(block.iter()) {
                assert!((i32::from(*r) - 128 - s).abs() <= 1);
            }
        }
    }
}
