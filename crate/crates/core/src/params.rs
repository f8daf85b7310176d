//! Bloom filter parameter analysis.
//!
//! Evaluates the false-positive rate and entropy-bound compressed size of a
//! filter with m bits, k hashes and n insertions, and sweeps power-of-two m
//! to find the configurations that compress best under an FPR bound.
//!
//! All powers of (1 - 1/m) go through `ln_1p`/`exp_m1`, which keeps full
//! relative precision where 1 - p is tiny. Boundary values such as n = 1028
//! vs 1029 at m = 2^18, k = 2 differ from the bound by less than 0.2%.

/// log(1 - 1/m) * k * n, i.e. ln p with p = (1 - 1/m)^(kn).
fn ln_zero_prob(m: f64, k: u32, n: u64) -> f64 {
    (-1.0 / m).ln_1p() * f64::from(k) * n as f64
}

/// Probability that a query for an absent item hits all k set bits.
pub fn fpr(m: f64, k: u32, n: u64) -> f64 {
    let one_prob = -ln_zero_prob(m, k, n).exp_m1();
    one_prob.powi(k as i32)
}

/// Compressed size in bytes predicted by the binary entropy of bit density.
pub fn entropy_size_bytes(m: f64, k: u32, n: u64) -> u64 {
    let ln_p = ln_zero_prob(m, k, n);
    let p = ln_p.exp();
    let q = -ln_p.exp_m1();
    let h = if q <= 0.0 || p <= 0.0 {
        0.0
    } else {
        -(p * ln_p + q * q.ln()) / std::f64::consts::LN_2
    };
    (m * h / 8.0 + 0.5).floor() as u64
}

/// 1 - (1 - f)^q for q filters each with rate f.
pub fn cumulative_fpr(f: f64, q: u32) -> f64 {
    if q == 1 {
        return f;
    }
    -(f64::from(q) * (-f).ln_1p()).exp_m1()
}

/// Largest n with `fpr(m, k, n) <= f_bound`, or 0 if n = 1 already exceeds it.
pub fn max_n(m: f64, k: u32, f_bound: f64) -> u64 {
    if fpr(m, k, 1) > f_bound {
        return 0;
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while fpr(m, k, hi) <= f_bound {
        lo = hi;
        hi = match hi.checked_mul(2) {
            Some(h) => h,
            None => return lo,
        };
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fpr(m, k, mid) <= f_bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub m_log2: u32,
    pub k: u32,
    pub n_max: u64,
    pub f: f64,
    pub z_bytes: u64,
    pub bytes_per_item: f64,
}

impl ParamPoint {
    pub fn m(&self) -> u64 {
        1 << self.m_log2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBounds {
    pub max_log2_m: u32,
    pub max_k: u32,
    pub min_n: u64,
    pub f_bound: f64,
}

impl Default for SweepBounds {
    fn default() -> Self {
        SweepBounds {
            max_log2_m: 24,
            max_k: 6,
            min_n: 1000,
            f_bound: 1.0 / 16384.0,
        }
    }
}

/// Every (m = 2^j, k) meeting the bounds, sorted by z then m then k.
pub fn sweep(bounds: &SweepBounds) -> Vec<ParamPoint> {
    let mut points = Vec::new();
    for m_log2 in 1..=bounds.max_log2_m {
        let m = (m_log2 as f64).exp2();
        for k in 1..=bounds.max_k {
            let n_max = max_n(m, k, bounds.f_bound);
            if n_max == 0 || n_max < bounds.min_n {
                continue;
            }
            let z_bytes = entropy_size_bytes(m, k, n_max);
            points.push(ParamPoint {
                m_log2,
                k,
                n_max,
                f: fpr(m, k, n_max),
                z_bytes,
                bytes_per_item: z_bytes as f64 / n_max as f64,
            });
        }
    }
    points.sort_by_key(|p| (p.z_bytes, p.m_log2, p.k));
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    const M18: f64 = 262_144.0;
    const F14: f64 = 1.0 / 16384.0;

    // Expected values below were evaluated with mpmath at 40-50 digits.
    #[test]
    fn fpr_values() {
        assert_eq!(fpr(M18, 2, 0), 0.0);
        let f1028 = fpr(M18, 2, 1028);
        assert!((f1028 - 6.103_290_953_177_567e-5).abs() < 1e-16);
        assert!(f1028 <= F14);
        assert!(fpr(M18, 2, 1029) > F14);
        assert!((fpr(M18, 2, 1029) - 6.115_124_241_487_683e-5).abs() < 1e-16);
    }

    #[test]
    fn fpr_monotone_in_n() {
        for (m, k) in [(M18, 2), (32768.0, 5), (1024.0, 1)] {
            let mut prev = 0.0;
            for n in 1..3000 {
                let f = fpr(m, k, n);
                assert!(f > prev);
                prev = f;
            }
        }
    }

    #[test]
    fn entropy_sizes_reference_values() {
        assert_eq!(entropy_size_bytes(M18, 2, 1028), 2160);
        assert_eq!(entropy_size_bytes(16_777_216.0, 1, 1024), 1977);
        assert_eq!(entropy_size_bytes(32768.0, 6, 1207), 2943);
        assert_eq!(entropy_size_bytes(32768.0, 5, 1015), 2430);
        assert_eq!(entropy_size_bytes(65536.0, 4, 1516), 3531);
    }

    #[test]
    fn cumulative_values() {
        assert_eq!(cumulative_fpr(0.25, 1), 0.25);
        assert_eq!(cumulative_fpr(0.0, 9), 0.0);
        // 1 - (1 - 2^-14)^2 = 1.220665872097015e-4
        assert!((cumulative_fpr(F14, 2) - 1.220_665_872_097_015e-4).abs() < 1e-17);
        // 1 - (1 - 6.1033e-5)^4 with f at n = 1028: 2.441092889402076e-4
        assert!((cumulative_fpr(fpr(M18, 2, 1028), 4) - 2.441_092_889_402_076e-4).abs() < 1e-16);
    }

    #[test]
    fn max_n_values() {
        assert_eq!(max_n(M18, 2, F14), 1028);
        assert_eq!(max_n(16_777_216.0, 1, F14), 1024);
        assert_eq!(max_n(32768.0, 5, F14), 1015);
        assert_eq!(max_n(2.0, 1, F14), 0);
        for (m, k) in [
            (M18, 2),
            (32768.0, 6),
            (65536.0, 4),
            ((1u64 << 20) as f64, 3),
        ] {
            let n = max_n(m, k, F14);
            assert!(fpr(m, k, n) <= F14 && fpr(m, k, n + 1) > F14);
        }
    }

    #[test]
    fn sweep_top_rows() {
        let rows = sweep(&SweepBounds::default());
        let top: Vec<_> = rows[..5]
            .iter()
            .map(|p| (p.z_bytes, p.m_log2, p.n_max, p.k))
            .collect();
        assert_eq!(
            top,
            vec![
                (1977, 24, 1024, 1),
                (2160, 18, 1028, 2),
                (2430, 15, 1015, 5),
                (2943, 15, 1207, 6),
                (3531, 16, 1516, 4),
            ]
        );
        assert_eq!(rows.len(), 45);
    }

    #[test]
    fn sweep_bounds_filter() {
        let none = sweep(&SweepBounds {
            min_n: 1_000_000_000,
            ..SweepBounds::default()
        });
        assert!(none.is_empty());
        let k1 = sweep(&SweepBounds {
            max_k: 1,
            ..SweepBounds::default()
        });
        assert!(!k1.is_empty() && k1.iter().all(|p| p.k == 1));
        let wide = sweep(&SweepBounds {
            max_k: 8,
            ..SweepBounds::default()
        });
        assert_eq!(wide.len(), 65);
        assert_eq!((wide[4].z_bytes, wide[4].k), (3322, 7));
    }
}
