//! Closed-form correlation terms E[Y_j W_{j,·}] for one UE.
//!
//! All functions take finite rates; infinite-rate stages are dispatched to
//! the local / edge forms by the caller. Difference quotients of the shape
//! `(f(a) - f(b)) / (a - b)` are cancelled inside each term; the remaining
//! removable singularities are handled by [`resolve_singularities`].

use crate::error::{Error, Result};

/// Rates seen by one UE, all finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct UeRates {
    /// λ_n
    pub own: f64,
    /// λ
    pub total: f64,
    /// λ_{-n}
    pub others: f64,
    /// μ_B'
    pub edge: f64,
    /// μ_D
    pub tx: f64,
    /// μ_n'
    pub local: f64,
}

/// λ_n E[Y_j W_j] for the first shared FCFS queue of rate `mu` fed by
/// Poisson arrivals (own rate `own`, others `others`).
pub(crate) fn first_queue_terms(own: f64, total: f64, others: f64, mu: f64) -> f64 {
    let x = mu - others;
    others / (mu * x) + own * own * others / (mu * x.powi(3)) + own * own / ((mu - total) * x * x)
}

/// λ_n E[Y_j W_{j,U}] when the local queue directly follows the
/// transmission queue (local scheme).
pub(crate) fn local_queue_terms_after_tx(own: f64, total: f64, others: f64, tx: f64, local: f64) -> f64 {
    let (l, ln, lo, d, u) = (total, own, others, tx, local);
    ln * ln * (d + u - ln) / (d * (u - ln) * (d + u - l).powi(2))
        + ln * ln * (d - l) * (d + u - lo) / (u * u * (d - lo) * (u - ln) * (d + u - l))
}

/// E[Y_j W_{j,D}; transmission arrival before the previous packet left it].
pub(crate) fn phi_tx_before(r: &UeRates) -> f64 {
    let (l, ln, lo, b, d) = (r.total, r.own, r.others, r.edge, r.tx);
    let x = b - lo;
    let y = d - lo;
    let s = b + d - l - lo;
    let t1 = ln * (b + d - l) / (b * (d - l) * s * s);
    // (1/y² − 1/x²) / (b − d) = (x + y) / (x² y²)
    let t2 = ln * (b - l) * (x + y) / (x * y * y * (d - l) * s);
    // (2/y³ − 2/x³) / (b − d) = 2 (x² + xy + y²) / (x³ y³)
    let t3 = 2.0 * ln * lo * (b - l) * (x * x + x * y + y * y) / (x * x * y.powi(3) * d * s);
    let t4 = 2.0 * ln * lo * (d + b - l) / (b * d * s.powi(3));
    t1 + t2 + t3 + t4
}

/// E[Y_j W_{j,D}; transmission arrival after the previous packet left it].
pub(crate) fn phi_tx_after(r: &UeRates) -> f64 {
    let (l, ln, lo, b, d) = (r.total, r.own, r.others, r.edge, r.tx);
    if lo == 0.0 {
        return 0.0;
    }
    let x = b - lo;
    let y = d - lo;
    let s = b + d - l - lo;
    // (1/x − x/y²) / (d − b) = (x + y) / (x y²)
    lo / (d * y)
        * (1.0 / ln - ln * (b + d - l) / (b * s * s) - ln * (b - l) * (x + y) / (x * y * y * s))
}

/// E[Y_j W_{j,U}; transmission arrival before the previous packet left it].
pub(crate) fn phi_local_before(r: &UeRates) -> f64 {
    let (l, ln, lo, b, d, u) = (r.total, r.own, r.others, r.edge, r.tx, r.local);
    let x = b - lo;
    let s = b + d - l - lo;
    let v = u - ln;
    let g = d + u - ln;
    let t1 = ln * (b - l) * x * g / (d * (d - l + u).powi(2) * v * (b - d) * s);
    let t2 = -ln * d * (b - l) * x * g / (v * (b - d) * s * (d * x + b * v).powi(2));
    let den = (b + d - l) * g * x + lo * (d * d + (2.0 * u - 2.0 * ln - l) * d + (b - 2.0 * l) * v);
    let t3 = ln * b * d * (g * (b + d - l) / v) / (den * den);
    t1 + t2 + t3
}

/// E[Y_j W_{j,U}; transmission arrival after the previous packet left it].
///
/// The last term carries a `(μ_D + μ_n' − λ)` denominator factor: without it
/// the term is not homogeneous of degree −2 in the rates, and with it the
/// `μ_B' → ∞` limit reproduces the local-scheme expression.
pub(crate) fn phi_local_after(r: &UeRates) -> f64 {
    let (l, ln, lo, b, d, u) = (r.total, r.own, r.others, r.edge, r.tx, r.local);
    let x = b - lo;
    let y = d - lo;
    let s = b + d - l - lo;
    let v = u - ln;
    let c = d - u - lo;
    let w = d + u - l;
    let t1 = ln * (d - l) * y / (b * v * c * w)
        * ((b + u - ln) / (b + u - l).powi(2) - (b + d - l) / (s * s));
    // (1/u² − 1/x²) / (b − u − λ_{-n}) = (x + u) / (u² x²)
    let t2 = ln * (b - l) * (d - l) * y * (x + u) / (x * u * u * v * c * w * (b + u - l));
    // (1/y² − 1/x²) / (b − d) = (x + y) / (x² y²)
    let t3 = -ln * (b - l) * (d - l) * (x + y) / (x * y * v * c * w * s);
    t1 + t2 + t3
}

/// Relative magnitude below which a removable singularity is perturbed around.
pub const SINGULAR_REL: f64 = 1e-9;
/// Relative size of the symmetric perturbation.
pub const PERTURB_REL: f64 = 1e-6;
/// Maximum relative disagreement between the two perturbed evaluations.
pub const PERTURB_AGREE_REL: f64 = 1e-3;

fn near_zero(diff: f64, scale: f64) -> bool {
    diff.abs() < SINGULAR_REL * scale.abs()
}

/// True when any of μ_B' − μ_D, μ_B' − μ_n' − λ_{-n}, μ_D − μ_n' − λ_{-n}
/// is negligible relative to its larger operand. `local` may be infinite.
pub(crate) fn is_near_singular(r: &UeRates) -> bool {
    if near_zero(r.edge - r.tx, r.edge.max(r.tx)) {
        return true;
    }
    if r.local.is_finite() {
        let ul = r.local + r.others;
        near_zero(r.edge - ul, r.edge.max(ul)) || near_zero(r.tx - ul, r.tx.max(ul))
    } else {
        false
    }
}

/// Evaluate `f` at `r`, or at two symmetric perturbations of (μ_B', μ_D)
/// when `r` sits on a removable singularity, returning the mean.
///
/// The perturbation moves μ_B' and μ_D in opposite directions, which
/// displaces all three singular denominators at once.
pub(crate) fn resolve_singularities<const K: usize>(
    r: &UeRates,
    term: &'static str,
    f: impl Fn(&UeRates) -> [f64; K],
) -> Result<[f64; K]> {
    if !is_near_singular(r) {
        return Ok(f(r));
    }
    let shifted = |sign: f64| UeRates {
        edge: r.edge * (1.0 - sign * PERTURB_REL),
        tx: r.tx * (1.0 + sign * PERTURB_REL),
        ..*r
    };
    let lo = f(&shifted(1.0));
    let hi = f(&shifted(-1.0));
    let (sum_lo, sum_hi): (f64, f64) = (lo.iter().sum(), hi.iter().sum());
    let scale = sum_lo.abs().max(sum_hi.abs());
    if !(sum_lo.is_finite() && sum_hi.is_finite())
        || (sum_lo - sum_hi).abs() > PERTURB_AGREE_REL * scale
    {
        return Err(Error::SingularityUnresolved {
            term,
            lower: sum_lo,
            upper: sum_hi,
        });
    }
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = 0.5 * (lo[k] + hi[k]);
    }
    Ok(out)
}
