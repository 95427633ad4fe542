//! Bessel `J_0, J_1, J_2`, Struve `H_0, H_1` and the dispersion kernel
//! `H~(z) = pi/2 [J_1 H_0 - J_0 H_1] - J_2`, by ascending series.
//!
//! The alternating series lose roughly `log10(e^x)` digits to cancellation,
//! so terms are accumulated in double-double arithmetic; this keeps the
//! results accurate to near machine precision up to `x ~ 40` and usable up to
//! the default `max_arg = 60`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    pub rel_tol: f64,
    pub max_terms: usize,
    pub max_arg: f64,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_terms: 200,
            max_arg: 60.0,
        }
    }
}

/// Below this argument `h_tilde` uses its Taylor polynomial.
pub const TAYLOR_SWITCH: f64 = 0.05;

// 1/pi as an unevaluated sum hi + lo
const INV_PI: Dd = Dd {
    hi: 0.318_309_886_183_790_7,
    lo: -1.967_867_667_518_248_6e-17,
};

/// Double-double number `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let e = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: e }
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd {
            hi: s,
            lo: b - (s - a),
        }
    }

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let u = Dd::quick_two_sum(s.hi, s.lo + t.hi);
        Dd::quick_two_sum(u.hi, u.lo + t.lo)
    }

    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        Dd::quick_two_sum(p, e)
    }

    #[inline]
    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        // remainder self - q1*d, exactly via fma
        let p = q1 * d;
        let pe = q1.mul_add(d, -p);
        let r = Dd::two_sum(self.hi, -p);
        let r_lo = r.lo - pe + self.lo;
        let q2 = (r.hi + r_lo) / d;
        Dd::quick_two_sum(q1, q2)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn check(x: f64, policy: &SeriesPolicy) -> Result<()> {
    if !(x >= 0.0 && x <= policy.max_arg) {
        return Err(Error::Range {
            x,
            max_arg: policy.max_arg,
        });
    }
    Ok(())
}

/// Sum `t_0 + t_1 + ...` with `t_{m+1} = t_m * ratio(m)`, stopping once the
/// terms are past their peak and below `rel_tol * |sum|`.
fn sum_series(first: Dd, q: Dd, denom: impl Fn(usize) -> f64, policy: &SeriesPolicy, x: f64) -> Result<f64> {
    let mut term = first;
    let mut sum = first;
    let peak = (x / 2.0).ceil() as usize + 1;
    for m in 0..policy.max_terms {
        term = term.mul(q).div_f64(denom(m));
        sum = sum.add(term);
        if m >= peak && term.hi.abs() <= policy.rel_tol * sum.hi.abs() * 1e-3 {
            return Ok(sum.to_f64());
        }
        if term.hi == 0.0 {
            return Ok(sum.to_f64());
        }
    }
    Err(Error::Range {
        x,
        max_arg: policy.max_arg,
    })
}

/// `J_order(x)` for `order` in {0, 1, 2}.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    bessel_j_with(order, x, &SeriesPolicy::default())
}

pub fn bessel_j_with(order: u32, x: f64, policy: &SeriesPolicy) -> Result<f64> {
    if order > 2 {
        return Err(Error::Domain(format!("bessel_j order {order} not in {{0, 1, 2}}")));
    }
    check(x, policy)?;
    if x == 0.0 {
        return Ok(if order == 0 { 1.0 } else { 0.0 });
    }
    let h = Dd::from(0.5 * x);
    let q = h.mul(h).neg();
    let n = order as f64;
    // (x/2)^n / n!
    let first = match order {
        0 => Dd::from(1.0),
        1 => h,
        _ => h.mul(h).div_f64(2.0),
    };
    sum_series(first, q, |m| (m as f64 + 1.0) * (m as f64 + 1.0 + n), policy, x)
}

/// `H_order(x)` for `order` in {0, 1}.
pub fn struve_h(order: u32, x: f64) -> Result<f64> {
    struve_h_with(order, x, &SeriesPolicy::default())
}

pub fn struve_h_with(order: u32, x: f64, policy: &SeriesPolicy) -> Result<f64> {
    if order > 1 {
        return Err(Error::Domain(format!("struve_h order {order} not in {{0, 1}}")));
    }
    check(x, policy)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let h = Dd::from(0.5 * x);
    let q = h.mul(h).neg();
    // Gamma(3/2) Gamma(3/2 + n) = pi/4 (n = 0) or 3 pi/8 (n = 1)
    let first = match order {
        0 => h.mul(INV_PI).mul(Dd::from(4.0)),
        _ => h.mul(h).mul(INV_PI).mul(Dd::from(8.0)).div_f64(3.0),
    };
    let two_n = 2.0 * order as f64;
    // (m + 3/2)(m + 3/2 + n) = (2m+3)(2m+3+2n)/4
    sum_series(
        first,
        q,
        |m| {
            let a = 2.0 * m as f64 + 3.0;
            a * (a + two_n) / 4.0
        },
        policy,
        x,
    )
}

/// Taylor polynomial of `H~` about 0 (error `O(z^10)`).
pub fn h_tilde_taylor(z: f64) -> f64 {
    let z2 = z * z;
    z2 * (1.0 / 24.0 + z2 * (-1.0 / 480.0 + z2 * (1.0 / 21504.0 - z2 / 1_658_880.0)))
}

/// Dispersion kernel `H~(z) = pi/2 [J_1(z) H_0(z) - J_0(z) H_1(z)] - J_2(z)`.
pub fn h_tilde(z: f64) -> Result<f64> {
    h_tilde_with(z, &SeriesPolicy::default())
}

pub fn h_tilde_with(z: f64, policy: &SeriesPolicy) -> Result<f64> {
    check(z, policy)?;
    if z < TAYLOR_SWITCH {
        return Ok(h_tilde_taylor(z));
    }
    h_tilde_series(z, policy)
}

/// `H~` from the special-function series, without the small-z branch.
pub fn h_tilde_series(z: f64, policy: &SeriesPolicy) -> Result<f64> {
    let j0 = bessel_j_with(0, z, policy)?;
    let j1 = bessel_j_with(1, z, policy)?;
    let j2 = bessel_j_with(2, z, policy)?;
    let h0 = struve_h_with(0, z, policy)?;
    let h1 = struve_h_with(1, z, policy)?;
    Ok(0.5 * PI * (j1 * h0 - j0 * h1) - j2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Independent oracles: integral representations by composite Simpson.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn j_oracle(n: u32, x: f64) -> f64 {
        simpson(|t| (n as f64 * t - x * t.sin()).cos(), 0.0, PI, 20_000) / PI
    }

    fn h0_oracle(x: f64) -> f64 {
        2.0 / PI * simpson(|t| (x * t.cos()).sin(), 0.0, PI / 2.0, 20_000)
    }

    fn h1_oracle(x: f64) -> f64 {
        2.0 * x / PI * simpson(|t| t.sin().powi(2) * (x * t.cos()).sin(), 0.0, PI / 2.0, 20_000)
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(2, 0.0).unwrap(), 0.0);
        assert_eq!(struve_h(0, 0.0).unwrap(), 0.0);
        assert_eq!(struve_h(1, 0.0).unwrap(), 0.0);
        assert_eq!(h_tilde(0.0).unwrap(), 0.0);
    }

    #[test]
    fn first_zero_of_j0() {
        // bisection on the quadrature oracle
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if j_oracle(0, lo) * j_oracle(0, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - 2.404_825_56).abs() < 1e-7);
        assert!(bessel_j(0, root).unwrap().abs() < 1e-7);
        assert!(bessel_j(0, 2.404_825_56).unwrap().abs() < 1e-7);
    }

    #[test]
    fn against_quadrature_oracles() {
        for &x in &[0.3, 1.0, 2.5, 7.0, 15.0, 30.0] {
            for n in 0..3 {
                let v = bessel_j(n, x).unwrap();
                assert!((v - j_oracle(n, x)).abs() < 1e-10, "J{n}({x}) = {v}");
            }
            assert!((struve_h(0, x).unwrap() - h0_oracle(x)).abs() < 1e-10);
            assert!((struve_h(1, x).unwrap() - h1_oracle(x)).abs() < 1e-10);
        }
        assert!((struve_h(0, 1.0).unwrap() - 0.568_66).abs() < 1e-5);
    }

    #[test]
    fn h_tilde_at_one() {
        let oracle = 0.5 * PI * (j_oracle(1, 1.0) * h0_oracle(1.0) - j_oracle(0, 1.0) * h1_oracle(1.0))
            - j_oracle(2, 1.0);
        let v = h_tilde(1.0).unwrap();
        assert!((v - oracle).abs() < 1e-10);
        assert!((v - 0.0397).abs() < 1e-4);
    }

    #[test]
    fn h_tilde_small_argument() {
        let v = h_tilde(0.01).unwrap();
        assert_relative_eq!(v, 1e-4 / 24.0, max_relative = 1e-3);
        for i in 1..=500 {
            let z = TAYLOR_SWITCH * i as f64 / 500.0;
            let q = z * z / 24.0;
            assert!((h_tilde(z).unwrap() - q).abs() <= 0.05 * q);
        }
    }

    #[test]
    fn branch_continuity() {
        let p = SeriesPolicy::default();
        let z = TAYLOR_SWITCH;
        assert!((h_tilde_taylor(z) - h_tilde_series(z, &p).unwrap()).abs() < 1e-9);
        let below = h_tilde(z * (1.0 - 1e-12)).unwrap();
        let at = h_tilde(z).unwrap();
        assert!((below - at).abs() < 1e-9);
    }

    #[test]
    fn positive_on_unit_window() {
        for i in 1..=1000 {
            let z = 3.0 * i as f64 / 1000.0;
            assert!(h_tilde(z).unwrap() > 0.0, "z = {z}");
        }
    }

    #[test]
    fn bessel_recurrence() {
        for i in 0..=300 {
            let x = 0.1 + (30.0 - 0.1) * i as f64 / 300.0;
            let j0 = bessel_j(0, x).unwrap();
            let j1 = bessel_j(1, x).unwrap();
            let j2 = bessel_j(2, x).unwrap();
            let lhs = j0 + j2;
            let rhs = 2.0 / x * j1;
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-3), "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn large_argument_reference() {
        // reference values from 40-digit arithmetic
        assert!((bessel_j(0, 30.0).unwrap() + 0.086_367_983_581_040_21).abs() < 1e-13);
        assert!((bessel_j(2, 30.0).unwrap() - 0.078_451_246_073_265_35).abs() < 1e-13);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(bessel_j(0, 61.0), Err(Error::Range { .. })));
        assert!(matches!(struve_h(1, -1.0), Err(Error::Range { .. })));
        assert!(matches!(h_tilde(100.0), Err(Error::Range { .. })));
        assert!(bessel_j(3, 1.0).is_err());
        assert!(struve_h(2, 1.0).is_err());
    }
}
