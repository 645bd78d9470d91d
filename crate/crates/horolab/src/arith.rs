//! Number-theoretic kernels: divisor counts, distances to the integer
//! lattice, Kloosterman sums, and the complete quadratic exponential sum
//! `S(q, v)` attached to `Q(x) = x₁x₄ − x₂x₃ − 1`.

use crate::error::{domain, validation, Error, Result};
use crate::numeric::KahanSumC;
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::OnceLock;

const SIEVE_LIMIT: usize = 1_000_000;

fn sieve() -> &'static [u32] {
    static TAU_TABLE: OnceLock<Vec<u32>> = OnceLock::new();
    TAU_TABLE.get_or_init(|| {
        let mut t = vec![0u32; SIEVE_LIMIT + 1];
        for i in 1..=SIEVE_LIMIT {
            for j in (i..=SIEVE_LIMIT).step_by(i) {
                t[j] += 1;
            }
        }
        t
    })
}

/// The number of positive divisors `τ(d)`.
pub fn divisor_count(d: u64) -> Result<u64> {
    if d == 0 {
        return Err(domain("τ(d) needs d ≥ 1"));
    }
    Ok(tau(d))
}

/// `τ(d)` for `d ≥ 1`, without the domain check.
#[inline]
pub(crate) fn tau(d: u64) -> u64 {
    if (d as usize) <= SIEVE_LIMIT {
        return sieve()[d as usize] as u64;
    }
    let mut n = d;
    let mut count = 1;
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        count *= e + 1;
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        count *= 2;
    }
    count
}

/// Euler's totient.
pub fn totient(q: u64) -> u64 {
    let mut n = q;
    let mut out = q;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// Euclidean distance from `v` to the nearest point of `ℤⁿ`.
pub fn dist_to_z(v: &[f64]) -> f64 {
    v.iter()
        .map(|x| {
            let r = x - x.round();
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// The inverse of `a` modulo `q`, returned in `[1, q]`.
pub fn mod_inverse(a: i64, q: u64) -> Result<u64> {
    if q == 0 {
        return Err(domain("modulus must be positive"));
    }
    let qi = q as i128;
    let (mut r0, mut r1) = ((a as i128).rem_euclid(qi), qi);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    if r0 != 1 && q != 1 {
        return Err(domain(format!("{a} is not invertible modulo {q}")));
    }
    let inv = s0.rem_euclid(qi);
    Ok(if inv == 0 { q } else { inv as u64 })
}

fn character_table(modulus: u64) -> Vec<Complex64> {
    (0..modulus)
        .map(|j| {
            let (s, c) = (TAU * j as f64 / modulus as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

/// Kloosterman sum `K(m, n; q) = Σ_{a mod q, (a,q)=1} e((ma + n·ā)/q)`.
///
/// The value is real; it is returned as a complex number so that callers can
/// check the imaginary part.
pub fn kloosterman(m: i64, n: i64, q: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(domain("Kloosterman modulus must be positive"));
    }
    let table = character_table(q);
    Ok(kloosterman_with(m, n, q, &table))
}

fn kloosterman_with(m: i64, n: i64, q: u64, table: &[Complex64]) -> Complex64 {
    let qi = q as i128;
    let mut acc = KahanSumC::new();
    for a in 0..q {
        if gcd(a as i64, q as i64) != 1 {
            continue;
        }
        let inv = mod_inverse(a as i64, q).expect("coprime residue") as i128;
        let k = (m as i128 * a as i128 + n as i128 * inv).rem_euclid(qi);
        acc.add(table[k as usize]);
    }
    acc.value()
}

/// `N⁴ τ(q) q^{5/2}`, the Weil-type bound for `|S(q, v)|`.
pub fn weil_bound(q: u64, n: u64) -> f64 {
    (n as f64).powi(4) * tau(q) as f64 * (q as f64).powf(2.5)
}

/// Data of the quadratic exponential sum: the modulus `q`, the level `N`, the
/// residue class `r` (a matrix `(r₁ r₂; r₃ r₄)` of determinant `1 mod N`) and
/// the frequency `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongruenceData {
    pub q: u64,
    pub n: u64,
    pub r: [i64; 4],
    pub v: [i64; 4],
}

impl CongruenceData {
    pub fn new(q: u64, n: u64, r: [i64; 4], v: [i64; 4]) -> Result<Self> {
        if q == 0 || n == 0 {
            return Err(validation("q and N must be positive"));
        }
        let ni = n as i64;
        if r.iter().any(|&x| x < 0 || x >= ni) {
            return Err(validation(format!("r = {r:?} is not reduced modulo {n}")));
        }
        if (r[0] * r[3] - r[1] * r[2] - 1).rem_euclid(ni) != 0 {
            return Err(validation(format!("r = {r:?} has determinant ≢ 1 mod {n}")));
        }
        Ok(Self { q, n, r, v })
    }

    fn quadratic(x: &[i128; 4]) -> i128 {
        x[0] * x[3] - x[1] * x[2] - 1
    }
}

/// Work limit `(qN)⁴·q` for [`quad_expsum_bruteforce`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e8;

/// `S(q, v) = Σ*_{a mod q} Σ_{x mod qN, x ≡ r mod N} e((aN·Q(x) + v·x)/(qN))`,
/// summed term by term.
pub fn quad_expsum_bruteforce(cd: &CongruenceData) -> Result<Complex64> {
    let (q, n) = (cd.q, cd.n);
    let modulus = q * n;
    let work = (modulus as f64).powi(4) * q as f64;
    if work > BRUTE_FORCE_LIMIT {
        return Err(Error::ResourceGuard {
            what: "brute-force quadratic exponential sum".into(),
            needed: work,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mi = modulus as i128;
    let ni = n as i128;
    let table = character_table(modulus);
    let units: Vec<i128> = (0..q)
        .filter(|&a| gcd(a as i64, q as i64) == 1)
        .map(|a| a as i128)
        .collect();
    let mut acc = KahanSumC::new();
    let qs = q as i128;
    for t0 in 0..qs {
        for t1 in 0..qs {
            for t2 in 0..qs {
                for t3 in 0..qs {
                    let x = [
                        cd.r[0] as i128 + ni * t0,
                        cd.r[1] as i128 + ni * t1,
                        cd.r[2] as i128 + ni * t2,
                        cd.r[3] as i128 + ni * t3,
                    ];
                    let qx = CongruenceData::quadratic(&x);
                    let vx: i128 = (0..4).map(|i| cd.v[i] as i128 * x[i]).sum();
                    for &a in &units {
                        let k = (a * ni * qx + vx).rem_euclid(mi);
                        acc.add(table[k as usize]);
                    }
                }
            }
        }
    }
    Ok(acc.value())
}

/// Closed form of `S(q, v)`:
/// `q² Σ_{c ∈ [0,N)⁴, qc ≡ v (N)} e(r·c/N) · K(−1, −(w₁w₄ − w₂w₃); q)` with
/// `w = (v − qc)/N`.
pub fn quad_expsum_closed(cd: &CongruenceData) -> Result<Complex64> {
    let (q, n) = (cd.q, cd.n);
    let ni = n as i64;
    let qi = q as i64;
    let table = character_table(q);
    let mut acc = KahanSumC::new();
    for c0 in 0..ni {
        for c1 in 0..ni {
            for c2 in 0..ni {
                for c3 in 0..ni {
                    let c = [c0, c1, c2, c3];
                    if (0..4).any(|i| (qi * c[i] - cd.v[i]).rem_euclid(ni) != 0) {
                        continue;
                    }
                    let w: Vec<i64> = (0..4).map(|i| (cd.v[i] - qi * c[i]) / ni).collect();
                    let det = (w[0] as i128 * w[3] as i128 - w[1] as i128 * w[2] as i128)
                        .rem_euclid(q as i128) as i64;
                    let k = kloosterman_with(-1, -det, q, &table);
                    let rc: i64 = (0..4).map(|i| cd.r[i] * c[i]).sum();
                    let phase = crate::numeric::e(rc.rem_euclid(ni) as f64 / n as f64);
                    acc.add(phase * k);
                }
            }
        }
    }
    Ok(acc.value() * (q * q) as f64)
}

/// A real number carried as an unevaluated sum `hi + lo` of two doubles.
///
/// Used where `‖n·x‖_ℤ` must be resolved for `n` up to about `10⁸`, which is
/// below the resolution of a single double near `n·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreciseReal {
    pub hi: f64,
    pub lo: f64,
}

impl From<f64> for PreciseReal {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }
}

impl PreciseReal {
    /// `√n` to roughly 32 significant digits.
    pub fn sqrt(n: f64) -> Self {
        let hi = n.sqrt();
        let residual = (-hi).mul_add(hi, n);
        Self {
            hi,
            lo: residual / (2.0 * hi),
        }
    }

    /// The golden ratio `(1 + √5)/2`.
    pub fn golden_ratio() -> Self {
        // 1 + √5 lies in [2, 4) like √5 itself, so the sum and the halving are exact.
        let s = Self::sqrt(5.0);
        Self {
            hi: 0.5 * (1.0 + s.hi),
            lo: 0.5 * s.lo,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Signed distance from `n·self` to the nearest integer, for `|n| < 2⁵³`.
    pub fn frac_centered(self, n: i64) -> f64 {
        let nf = n as f64;
        let p = nf * self.hi;
        let err = nf.mul_add(self.hi, -p);
        let r = (p - p.round()) + err + nf * self.lo;
        r - r.round()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn divisor_examples() {
        assert_eq!(divisor_count(1).unwrap(), 1);
        assert_eq!(divisor_count(6).unwrap(), 4);
        assert_eq!(divisor_count(12).unwrap(), 6);
        assert!(divisor_count(0).is_err());
        // Beyond the sieve: 2^4 · 3^2 · 1000003.
        assert_eq!(divisor_count(144 * 1_000_003).unwrap(), 30);
    }

    #[test]
    fn sieve_agrees_with_trial_division() {
        for d in [1u64, 2, 720_720, 999_983, 1_000_000] {
            let brute = (1..=d).filter(|k| d % k == 0).count() as u64;
            assert_eq!(tau(d), brute);
        }
    }

    #[test]
    fn divisor_sum_bracket() {
        for x in [100u64, 1000, 10_000] {
            let s: u64 = (1..=x).map(tau).sum();
            let xf = x as f64;
            assert!(s as f64 >= xf * xf.ln() - xf);
            assert!(s as f64 <= xf * xf.ln() + 2.0 * xf);
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(dist_to_z(&[1.0, 2.0]), 0.0);
        assert_eq!(dist_to_z(&[0.5]), 0.5);
        assert!((dist_to_z(&[0.4, 0.7]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(mod_inverse(1, 5).unwrap(), 1);
        assert_eq!(mod_inverse(2, 5).unwrap(), 3);
        assert_eq!(mod_inverse(7, 26).unwrap(), 15);
        assert_eq!(mod_inverse(-3, 7).unwrap(), 2);
        assert!(mod_inverse(4, 6).is_err());
    }

    #[test]
    fn kloosterman_examples() {
        assert!((kloosterman(0, 0, 6).unwrap() - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((kloosterman(1, 1, 2).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((kloosterman(1, 1, 3).unwrap() - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((kloosterman(5, 3, 1).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kloosterman_symmetry_and_weil() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let q = rng.gen_range(1..300u64);
            let m = rng.gen_range(-1000..1000i64);
            let n = rng.gen_range(-1000..1000i64);
            let a = kloosterman(m, n, q).unwrap();
            let b = kloosterman(n, m, q).unwrap();
            assert!((a - b).norm() < 1e-9);
            assert!(a.im.abs() < 1e-9);
        }
        for q in 1..=500u64 {
            for (m, n) in [(1, 1), (-1, 3), (q as i64, 7), (6, 10)] {
                let k = kloosterman(m, n, q).unwrap().norm();
                let g = gcd(gcd(m, n), q as i64) as f64;
                assert!(k <= tau(q) as f64 * g.sqrt() * (q as f64).sqrt() + 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_sum_examples() {
        let cd = CongruenceData::new(2, 1, [0; 4], [0; 4]).unwrap();
        let s = quad_expsum_bruteforce(&cd).unwrap();
        assert!((s - Complex64::new(-4.0, 0.0)).norm() < 1e-12);
        assert!((quad_expsum_closed(&cd).unwrap() - s).norm() < 1e-12);

        let cd = CongruenceData::new(1, 1, [0; 4], [3, -2, 5, 1]).unwrap();
        assert!((quad_expsum_bruteforce(&cd).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        let r = [1, 2, 0, 1];
        let v = [1, 1, 2, 0];
        let cd = CongruenceData::new(1, 3, r, v).unwrap();
        let expected = crate::numeric::e((1 + 2) as f64 / 3.0);
        assert!((quad_expsum_bruteforce(&cd).unwrap() - expected).norm() < 1e-12);
        assert!((quad_expsum_closed(&cd).unwrap() - expected).norm() < 1e-12);
    }

    #[test]
    fn level_one_specialisation() {
        for q in 1..=5u64 {
            let v = [1, -2, 3, 1];
            let cd = CongruenceData::new(q, 1, [0; 4], v).unwrap();
            let k = kloosterman(-1, -(v[0] * v[3] - v[1] * v[2]), q).unwrap();
            let expected = k * (q * q) as f64;
            assert!((quad_expsum_bruteforce(&cd).unwrap() - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn validation_and_guard() {
        assert!(CongruenceData::new(2, 3, [1, 0, 0, 2], [0; 4]).is_err());
        assert!(CongruenceData::new(2, 3, [4, 0, 0, 1], [0; 4]).is_err());
        let big = CongruenceData::new(40, 3, [1, 0, 0, 1], [0; 4]).unwrap();
        assert!(matches!(quad_expsum_bruteforce(&big), Err(Error::ResourceGuard { .. })));
    }

    #[test]
    fn precise_constants() {
        let s = PreciseReal::sqrt(2.0);
        // √2 = 1.41421356237309504880168872420969807...
        assert!((s.hi - 1.4142135623730951).abs() < 1e-16);
        assert!((s.lo - (-9.667_293_313_452_913e-17)).abs() < 1e-30);
        let g = PreciseReal::golden_ratio();
        // φ² = φ + 1 evaluated in double-double arithmetic.
        let sq_hi = g.hi * g.hi;
        let sq_err = g.hi.mul_add(g.hi, -sq_hi) + 2.0 * g.hi * g.lo;
        let lhs = (sq_hi - g.hi - 1.0) + sq_err - g.lo;
        assert!(lhs.abs() < 1e-30);
    }

    #[test]
    fn precise_fraction_of_large_multiples() {
        // 470832 is a Pell denominator, ‖470832·√2‖ ≈ 1/(2√2·470832).
        let s = PreciseReal::sqrt(2.0);
        let d = s.frac_centered(470_832).abs();
        assert!((d * 470_832.0 * 2.0 * 2f64.sqrt() - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn inverse_is_inverse(a in -10_000i64..10_000, q in 1u64..5000) {
            prop_assume!(gcd(a, q as i64) == 1);
            let inv = mod_inverse(a, q).unwrap();
            prop_assert!(inv >= 1 && inv <= q);
            prop_assert_eq!((a as i128 * inv as i128).rem_euclid(q as i128), 1 % q as i128);
        }

        #[test]
        fn distance_is_minimal(v in proptest::collection::vec(-50.0f64..50.0, 1..4)) {
            let d = dist_to_z(&v);
            prop_assert!(d <= 0.5 * (v.len() as f64).sqrt() + 1e-12);
            let shifted: Vec<f64> = v.iter().map(|x| x + 3.0).collect();
            prop_assert!((dist_to_z(&shifted) - d).abs() < 1e-9);
        }
    }
}
