//! Integer-order Bessel functions of the first kind and their zeros.
//!
//! Self-contained oracle support: ascending power series for x <= 12,
//! downward (Miller) recurrence with magnitude guards beyond, bisection for
//! zeros. Independent of the PDE code paths it validates. Accuracy target
//! 1e-13 relative on [0, 40].

const SERIES_SWITCH: f64 = 12.0;

/// J_n(x) for integer n >= 0 and x >= 0.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_j needs x >= 0");
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_SWITCH {
        series(n, x)
    } else {
        miller(n, x)
    }
}

/// Ascending series: J_n(x) = sum_m (-1)^m (x/2)^(n+2m) / (m! (n+m)!).
fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = 1.0f64;
    for k in 1..=n as u64 {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut m = 1u64;
    loop {
        term *= q / (m as f64 * (m + n as u64) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-30) || m > 300 {
            return sum;
        }
        m += 1;
    }
}

/// Downward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalized through
/// J_0 + 2 J_2 + 2 J_4 + ... = 1.
fn miller(n: u32, x: f64) -> f64 {
    // start well above both the order and the turning point; the surplus
    // buys the digits the normalized recurrence delivers
    let m_start = ((n as f64).max(x) + 36.0 + 1.5 * x.sqrt()) as usize;
    let m_start = m_start + (m_start & 1); // even
    let mut f_up = 0.0f64; // f_{k+1}
    let mut f_k = 1e-300f64; // f_k, starting at k = m_start
    let mut norm = 2.0 * f_k; // m_start is even
    let mut out = if n as usize == m_start { f_k } else { 0.0 };
    let mut k = m_start;
    while k > 0 {
        let f_dn = (2.0 * k as f64 / x) * f_k - f_up;
        f_up = f_k;
        f_k = f_dn;
        k -= 1;
        if k % 2 == 0 {
            norm += 2.0 * f_k;
        }
        if k == n as usize {
            out = f_k;
        }
        // magnitude guard: rescale before overflow
        if f_k.abs() > 1e250 {
            let s = 1e-250;
            f_k *= s;
            f_up *= s;
            norm *= s;
            out *= s;
        }
    }
    norm -= f_k; // k = 0 enters the sum once, not twice
    out / norm
}

/// k-th positive zero of J_order (k >= 1), bisected to ~1e-13 absolute.
pub fn bessel_zero(order: u32, k: u32) -> f64 {
    assert!(k >= 1, "zero index starts at 1");
    // J_n > 0 on (0, j_{n,1}) and j_{n,1} > n; scan for sign changes
    let mut x = order as f64 + 1e-3;
    let mut fx = bessel_j(order, x);
    let step = 0.2;
    let mut found = 0;
    loop {
        let x2 = x + step;
        let f2 = bessel_j(order, x2);
        if fx == 0.0 {
            found += 1;
            if found == k {
                return x;
            }
        } else if fx.signum() != f2.signum() {
            found += 1;
            if found == k {
                return bisect(order, x, x2, fx);
            }
        }
        x = x2;
        fx = f2;
        assert!(x < 1e4, "zero scan ran away");
    }
}

fn bisect(order: u32, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let mut flo = flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-14 * mid.max(1.0) {
            return mid;
        }
        let fm = bessel_j(order, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values_small_argument() {
        assert!((bessel_j(0, 1.0) - 0.7651976865579666).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.4400505857449335).abs() < 1e-14);
        assert!((bessel_j(0, 2.0) - 0.2238907791412357).abs() < 1e-14);
        assert!((bessel_j(1, 2.0) - 0.5767248077568734).abs() < 1e-14);
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn known_values_recurrence_regime() {
        assert!((bessel_j(0, 15.0) - (-0.014224472826780773)).abs() < 1e-14);
        assert!((bessel_j(1, 15.0) - 0.20510403861352276).abs() < 1e-14);
        assert!((bessel_j(0, 25.0) - 0.09626678327595812).abs() < 1e-14);
        assert!((bessel_j(1, 25.0) - (-0.1253502495802899)).abs() < 1e-14);
        assert!((bessel_j(2, 30.0) - 0.07845124607326535).abs() < 1e-14);
        assert!((bessel_j(0, 40.0) - 0.0073668905842372896).abs() < 1e-13);
        assert!((bessel_j(1, 40.0) - 0.126038318037585).abs() < 1e-13);
        assert!((bessel_j(5, 20.0) - 0.15116976798239497).abs() < 1e-14);
    }

    #[test]
    fn sum_rule_normalization() {
        // J_0(x)^2 + 2 sum_{k>=1} J_k(x)^2 = 1, an identity independent of
        // how the values were produced
        for &x in &[0.5, 3.0, 8.0, 11.9, 12.1, 20.0, 33.0, 40.0] {
            let mut s = bessel_j(0, x).powi(2);
            for k in 1..(x as u32 + 40) {
                s += 2.0 * bessel_j(k, x).powi(2);
            }
            assert!((s - 1.0).abs() < 1e-12, "sum rule at x={x}: {s}");
        }
    }

    #[test]
    fn three_term_recurrence_consistency() {
        for &x in &[1.7, 6.3, 12.5, 27.0] {
            for n in 1..6u32 {
                let lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x);
                let rhs = 2.0 * n as f64 / x * bessel_j(n, x);
                assert!((lhs - rhs).abs() < 1e-12, "recurrence at n={n}, x={x}");
            }
        }
    }

    #[test]
    fn first_zero_of_j1_near_3_83() {
        // the one the disc physics leans on
        let a = bessel_zero(1, 1);
        assert!((a - 3.831705970207512).abs() < 1e-12);
        assert!((a - 3.83).abs() < 0.01);
    }

    #[test]
    fn first_zero_of_j0_cross_checked_by_sign_change() {
        let z = bessel_zero(0, 1);
        assert!((z - 2.404825557695773).abs() < 1e-12);
        // independent cross-check: the series flips sign across [2.4, 2.5]
        assert!(bessel_j(0, 2.4) > 0.0);
        assert!(bessel_j(0, 2.5) < 0.0);
        assert!(z > 2.4 && z < 2.5);
    }

    #[test]
    fn second_zero_of_j1() {
        let z = bessel_zero(1, 2);
        assert!((z - 7.015586669815619).abs() < 1e-12);
    }

    #[test]
    fn more_zeros() {
        assert!((bessel_zero(0, 2) - 5.520078110286311).abs() < 1e-12);
        assert!((bessel_zero(2, 1) - 5.135622301840683).abs() < 1e-12);
        assert!((bessel_zero(3, 1) - 6.380161895923984).abs() < 1e-12);
        assert!((bessel_zero(0, 3) - 8.653727912911012).abs() < 1e-12);
        assert!((bessel_zero(1, 3) - 10.173468135062722).abs() < 1e-12);
    }

    #[test]
    fn zeros_are_actual_roots() {
        for (n, k) in [(0u32, 1u32), (1, 1), (1, 2), (2, 3), (4, 2)] {
            let z = bessel_zero(n, k);
            assert!(bessel_j(n, z).abs() < 1e-12, "J_{n}({z}) not ~ 0");
        }
    }
}
