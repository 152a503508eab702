//! Literal, uncancelled restatement of the Φ expressions, checked against the
//! library's simplified forms away from their removable singularities.

use aoi_mec::analytic::{avg_aoi_edge, avg_aoi_local, avg_aoi_partial, correlation_targets};
use aoi_mec::{Scheme, SystemConfig};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
struct R {
    l: f64,
    ln: f64,
    lo: f64,
    b: f64,
    d: f64,
    u: f64,
}

fn phi_bjd(r: &R) -> f64 {
    let R { l, ln, lo, b, d, .. } = *r;
    let s = b + d - l - lo;
    ln * (b + d - l) / (b * (d - l) * s * s)
        + ln * (b - l) * (b - lo) * (1.0 / (d - lo).powi(2) - 1.0 / (b - lo).powi(2))
            / ((b - d) * (d - l) * s)
        + ln * lo * (b - l) * (b - lo) * (2.0 / (d - lo).powi(3) - 2.0 / (b - lo).powi(3))
            / (d * (b - d) * s)
        + 2.0 * ln * lo * (d + b - l) / (b * d * s.powi(3))
}

fn phi_ljd(r: &R) -> f64 {
    let R { l, ln, lo, b, d, .. } = *r;
    let s = b + d - l - lo;
    lo / (d * (d - lo))
        * (1.0 / ln
            - ln * (b + d - l) / (b * s * s)
            - ln * (b - l) * (1.0 / (b - lo) - (b - lo) / (d - lo).powi(2)) / ((d - b) * s))
}

fn phi_bju(r: &R) -> f64 {
    let R { l, ln, lo, b, d, u } = *r;
    let s = b + d - l - lo;
    let quad = (d + u) * b - l * d + (d - b) * ln;
    let big = (b + d - l) * (d + u - ln) * (b - lo)
        + lo * (d * d + (2.0 * u - 2.0 * ln - l) * d + (b - 2.0 * l) * (u - ln));
    ln * (b - l) * (b - lo) * (d + u - ln)
        / (d * (d - l + u).powi(2) * (u - ln) * (b - d) * s)
        - ln * d * (b - l) * (b - lo) * (d + u - ln) / ((u - ln) * (b - d) * s * quad * quad)
        + ln * b * d * ((d + u - ln) * (b + d - l) / (u - ln)) / (big * big)
}

fn phi_lju(r: &R) -> f64 {
    let R { l, ln, lo, b, d, u } = *r;
    let s = b + d - l - lo;
    let common = (u - ln) * (d - u - lo) * (d + u - l);
    ln * (d - l) * (d - lo) / (b * common)
        * ((b + u - ln) / (b + u - l).powi(2) - (b + d - l) / (s * s))
        + ln * (b - l) * (b - lo) * (d - l) * (d - lo) * (1.0 / (u * u) - 1.0 / (b - lo).powi(2))
            / (common * (b + u - l) * (b - u - lo))
        // The third term carries (d + u − l) through `common`, which keeps it
        // homogeneous of degree −2 like the rest of the expression.
        - ln * (b - l) * (b - lo) * (d - l) * (d - lo)
            * (1.0 / (d - lo).powi(2) - 1.0 / (b - lo).powi(2))
            / (common * (b - d) * s)
}

fn first_queue(ln: f64, lo: f64, mu: f64) -> f64 {
    let l = ln + lo;
    lo / (mu * (mu - lo)) + ln * ln * lo / (mu * (mu - lo).powi(3)) + ln * ln / ((mu - l) * (mu - lo).powi(2))
}

fn delta_partial(r: &R) -> f64 {
    1.0 / r.ln + 1.0 / r.b + 1.0 / r.d + 1.0 / r.u
        + first_queue(r.ln, r.lo, r.b)
        + r.ln * (phi_bjd(r) + phi_ljd(r) + phi_bju(r) + phi_lju(r))
}

fn delta_local(ln: f64, lo: f64, d: f64, u: f64) -> f64 {
    let l = ln + lo;
    1.0 / ln + 1.0 / d + 1.0 / u + first_queue(ln, lo, d)
        + ln * ln * (d + u - ln) / (d * (u - ln) * (d + u - l).powi(2))
        + ln * ln * (d - l) * (d + u - lo) / (u * u * (d - lo) * (u - ln) * (d + u - l))
}

fn delta_edge(r: &R) -> f64 {
    1.0 / r.ln + 1.0 / r.b + 1.0 / r.d + first_queue(r.ln, r.lo, r.b) + r.ln * (phi_bjd(r) + phi_ljd(r))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn far_from_singular(r: &R) -> bool {
    let gap = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    gap(r.b, r.d) > 0.05 && gap(r.b, r.u + r.lo) > 0.05 && gap(r.d, r.u + r.lo) > 0.05
}

/// Stable partial-scheme configuration with N homogeneous UEs.
fn partial_config() -> impl Strategy<Value = (SystemConfig, R)> {
    (1usize..8, 0.01f64..0.3, 0.5f64..4.0, 0.5f64..4.0, 0.1f64..2.0, 0.05f64..0.95)
        .prop_filter_map("unstable or near singular", |(n, lh, mb, md, mh, p)| {
            let cfg = SystemConfig::homogeneous(n, lh, mb, md, mh, Scheme::Partial(p)).ok()?;
            let l = n as f64 * lh;
            let r = R {
                l,
                ln: lh,
                lo: l - lh,
                b: mb / p,
                d: md,
                u: mh / (1.0 - p),
            };
            let stable = l < 0.97 * r.b && l < 0.97 * r.d && lh < 0.97 * r.u;
            (stable && far_from_singular(&r)).then_some((cfg, r))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partial_terms_match_literal_form((cfg, r) in partial_config()) {
        let split = correlation_targets(&cfg, 0).unwrap().split.unwrap();
        for (got, want) in split.as_array().into_iter().zip([phi_bjd(&r), phi_ljd(&r), phi_bju(&r), phi_lju(&r)]) {
            prop_assert!(rel(got, want) < 1e-8 || (got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let aoi = avg_aoi_partial(&cfg, 0).unwrap();
        prop_assert!(rel(aoi, delta_partial(&r)) < 1e-10);
    }

    #[test]
    fn local_matches_literal_form(n in 1usize..8, lh in 0.01f64..0.3, md in 0.5f64..4.0, mh in 0.1f64..2.0) {
        let l = n as f64 * lh;
        prop_assume!(l < 0.97 * md && lh < 0.97 * mh);
        let cfg = SystemConfig::homogeneous(n, lh, 1.0, md, mh, Scheme::Local).unwrap();
        prop_assert!(rel(avg_aoi_local(&cfg, 0).unwrap(), delta_local(lh, l - lh, md, mh)) < 1e-10);
    }

    #[test]
    fn edge_matches_literal_form(n in 1usize..8, lh in 0.01f64..0.3, mb in 0.5f64..4.0, md in 0.5f64..4.0) {
        let l = n as f64 * lh;
        prop_assume!(l < 0.97 * mb && l < 0.97 * md && (mb - md).abs() > 0.05 * mb.max(md));
        let cfg = SystemConfig::homogeneous(n, lh, mb, md, 1.0, Scheme::Edge).unwrap();
        let r = R { l, ln: lh, lo: l - lh, b: mb, d: md, u: f64::INFINITY };
        prop_assert!(rel(avg_aoi_edge(&cfg, 0).unwrap(), delta_edge(&r)) < 1e-10);
    }
}

fn local_stage_terms(ln: f64, lo: f64, d: f64, u: f64) -> f64 {
    delta_local(ln, lo, d, u) - 1.0 / ln - 1.0 / d - 1.0 / u - first_queue(ln, lo, d)
}

#[test]
fn literal_local_terms_are_fast_edge_limit() {
    // With μ_B' → ∞ the local-stage terms must collapse onto the local-scheme
    // ones evaluated at μ_n'.
    let (ln, lo, d, u) = (0.1, 0.4, 1.8, 0.5);
    let r = R { l: ln + lo, ln, lo, b: 1e7, d, u };
    let got = ln * (phi_bju(&r) + phi_lju(&r));
    assert!(rel(got, local_stage_terms(ln, lo, d, u)) < 1e-5);
}

#[test]
fn printed_third_term_breaks_fast_edge_limit() {
    // Dropping the (d + u − l) factor from the third term misses the limit.
    let (ln, lo, d, u) = (0.1, 0.4, 1.8, 0.5);
    let r = R { l: ln + lo, ln, lo, b: 1e7, d, u };
    let w = d + u - r.l;
    let third = {
        let R { l, ln, lo, b, d, u } = r;
        -ln * (b - l) * (b - lo) * (d - l) * (d - lo) * (1.0 / (d - lo).powi(2) - 1.0 / (b - lo).powi(2))
            / ((u - ln) * (d - u - lo) * (b - d) * (b + d - l - lo) * w)
    };
    let printed = ln * (phi_bju(&r) + phi_lju(&r) - third + third * w);
    assert!(rel(printed, local_stage_terms(ln, lo, d, u)) > 1e-2);
}

#[test]
fn library_matches_literal_at_worked_point() {
    let cfg = SystemConfig::homogeneous(6, 0.1, 1.5, 1.8, 0.25, Scheme::Partial(0.5)).unwrap();
    let r = R { l: 0.6, ln: 0.1, lo: 0.5, b: 3.0, d: 1.8, u: 0.5 };
    assert!(rel(avg_aoi_partial(&cfg, 0).unwrap(), delta_partial(&r)) < 1e-12);
}
