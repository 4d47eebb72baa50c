use proptest::prelude::*;
use uepq::exponents::{
    jml_lb_exponent, lsbs_sc_exponent, msbs_sc_exponent, random_coding_exponent,
    spc_operating_point,
};
use uepq::numerics::{c2, capacity, e0_half, r_crit};

#[test]
fn msb_exponent_dominates_the_joint_bound() {
    let mut not_strict = Vec::new();
    for eps in [0.45, 0.49] {
        for i in 1..=9 {
            let alpha = 0.05 * i as f64;
            let r2 = c2(alpha, eps);
            let span = capacity(eps) - r2;
            for j in 0..50 {
                let r1 = span * j as f64 / 50.0;
                let sc = msbs_sc_exponent(r1, alpha, eps).unwrap();
                let jml = jml_lb_exponent(r1, r2, eps).unwrap();
                assert!(
                    sc >= jml - 1e-15,
                    "eps {eps}, alpha {alpha}, r1 {r1}: {sc} < {jml}"
                );
                if sc - jml <= 1e-6 {
                    not_strict.push((eps, alpha, r1));
                }
            }
        }
    }
    if !not_strict.is_empty() {
        eprintln!(
            "{} grid points where the gap is at most 1e-6",
            not_strict.len()
        );
    }
}

#[test]
fn lsb_exponent_positive_exactly_below_c2() {
    for (alpha, eps) in [(0.1, 0.3), (0.11, 0.45), (0.3, 0.2)] {
        let cap2 = c2(alpha, eps);
        for j in 0..=60 {
            let r2 = cap2 * j as f64 / 50.0;
            let v = lsbs_sc_exponent(r2, alpha, eps);
            if r2 < cap2 - 1e-8 {
                assert!(v > 0.0, "alpha {alpha}, eps {eps}, r2 {r2}");
            } else if r2 > cap2 + 1e-8 {
                assert!(v < 1e-12, "alpha {alpha}, eps {eps}, r2 {r2}: {v}");
            }
        }
    }
}

proptest! {
    #[test]
    fn random_coding_is_decreasing_and_convex(eps in 0.01f64..0.49, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let cap = capacity(eps);
        let (lo, hi) = if a < b { (a * cap, b * cap) } else { (b * cap, a * cap) };
        let (elo, ehi) = (random_coding_exponent(lo, eps).unwrap(), random_coding_exponent(hi, eps).unwrap());
        prop_assert!(ehi <= elo + 1e-15);
        let mid = random_coding_exponent(0.5 * (lo + hi), eps).unwrap();
        prop_assert!(mid <= 0.5 * (elo + ehi) + 1e-12);
        prop_assert!(elo <= e0_half(eps) + 1e-15);
    }

    #[test]
    fn straight_line_below_critical_rate(eps in 0.01f64..0.49, u in 0.0f64..1.0) {
        let r = u * r_crit(eps);
        let v = random_coding_exponent(r, eps).unwrap();
        prop_assert!((v - (e0_half(eps) - r)).abs() < 1e-12);
    }

    #[test]
    fn spc_operating_point_balances(eps in 0.3f64..0.49, u in 0.02f64..0.98) {
        let (lo, hi) = (e0_half(eps) / 3.0, capacity(eps));
        let r = lo + u * (hi - lo);
        let op = spc_operating_point(r, eps).unwrap();
        prop_assert!(op.alpha > 0.0 && op.alpha < 0.5);
        prop_assert!((op.r1 + op.r2 - r).abs() < 1e-12);
        prop_assert!((op.exponent - 2.0 * op.r1).abs() < 1e-9);
    }
}
