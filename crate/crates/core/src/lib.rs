//! Contamination-aware model validation.
//!
//! The crate is `no_std` and only needs `alloc`. It provides
//!
//! * [`rng`]: lineage-derived random streams and the samplers the generators use,
//! * [`datagen`]: ideal regression/classification data and the two contamination schemes,
//! * [`estimators`]: OLS, FAST-LTS, Lasso, sparse LTS, logistic and trimmed logistic fits,
//! * [`losses`]: pointwise losses, robust aggregation, U-statistics and ranking errors,
//! * [`trimming`]: leave-one-out, test-instance and batch trimming,
//! * [`bdp`]: consistency probes and breakdown-point calculators.
//!
//! File formats, the experiment runners and the command line live in the
//! `robust-elicit` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bdp;
pub mod datagen;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod losses;
pub mod rng;
pub mod trimming;

pub use error::{Error, Result};

/// `⌊count·frac⌋`, tolerant to representation error in `frac` (0.05·100 is 5, not 4).
pub fn floor_count(count: usize, frac: f64) -> usize {
    let v = count as f64 * frac;
    let r = libm::round(v);
    if (v - r).abs() < 1e-9 {
        r as usize
    } else {
        libm::floor(v) as usize
    }
}

/// `⌈count·frac⌉` with the same tolerance as [`floor_count`].
pub fn ceil_count(count: usize, frac: f64) -> usize {
    let v = count as f64 * frac;
    let r = libm::round(v);
    if (v - r).abs() < 1e-9 {
        r as usize
    } else {
        libm::ceil(v) as usize
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Calls `f` on every k-combination of `0..n` in lexicographic order.
pub(crate) fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut c: alloc::vec::Vec<usize> = (0..k).collect();
    loop {
        f(&c);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_absorb_float_noise() {
        assert_eq!(floor_count(100, 0.05), 5);
        assert_eq!(ceil_count(100, 0.05), 5);
        assert_eq!(floor_count(250, 0.25), 62);
        assert_eq!(ceil_count(250, 0.25), 63);
        assert_eq!(ceil_count(10, 0.1 + 0.2), 3);
        assert_eq!(floor_count(7, 0.0), 0);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(100, 2), 4950);
        assert_eq!(binomial(10, 5), 252);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(12, 6), 924);
    }
}
