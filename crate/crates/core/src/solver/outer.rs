//! One-dimensional maximization of the concave dual objective.

use crate::error::{Error, Result};

use super::SolverOptions;

const MAX_DOUBLINGS: usize = 60;
const MAX_GOLDEN_ITERS: usize = 500;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Where the dual multiplier may live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaDomain {
    /// Two-sided (equality) constraint.
    Real,
    /// One-sided `E[phi] <= 0` constraint.
    NonNegative,
}

#[derive(Debug, Clone)]
pub struct OuterResult {
    pub gamma_star: f64,
    pub value: f64,
    pub iters: usize,
    /// Every `(gamma, g(gamma))` evaluated, in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
}

impl OuterResult {
    /// Number of evaluated points that sit below the chord of their sorted
    /// neighbours by more than `rel_tol * (1 + max |g|)`.
    pub fn concavity_violations(&self, rel_tol: f64) -> usize {
        let mut pts = self.evaluations.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        // -inf marks points outside the effective domain
        pts.retain(|p| p.1.is_finite());
        let scale = 1.0 + pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        pts.windows(3)
            .filter(|w| {
                let (x0, g0) = w[0];
                let (x1, g1) = w[1];
                let (x2, g2) = w[2];
                let t = (x2 - x1) / (x2 - x0);
                let chord = t * g0 + (1.0 - t) * g2;
                g1 < chord - rel_tol * scale
            })
            .count()
    }
}

struct Tracked<F> {
    g: F,
    evaluations: Vec<(f64, f64)>,
}

impl<F: FnMut(f64) -> Result<f64>> Tracked<F> {
    fn eval(&mut self, gamma: f64) -> Result<f64> {
        let v = (self.g)(gamma)?;
        if v.is_nan() {
            return Err(Error::NonFinite("dual objective".into()));
        }
        self.evaluations.push((gamma, v));
        Ok(v)
    }
}

/// Maximizes a concave `g` by symmetric bracket doubling from
/// `±outer_bracket_init` followed by golden-section search.
///
/// The reported maximizer is never worse than `gamma = 0`.
pub fn outer_maximize<F>(g: F, opts: &SolverOptions, domain: GammaDomain) -> Result<OuterResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut t = Tracked {
        g,
        evaluations: Vec::new(),
    };
    let g0 = t.eval(0.0)?;
    let b = opts.outer_bracket_init;
    let gp = t.eval(b)?;
    let gm = match domain {
        GammaDomain::Real => t.eval(-b)?,
        GammaDomain::NonNegative => f64::NEG_INFINITY,
    };

    let (lo, hi) = if gp <= g0 && gm <= g0 {
        match domain {
            GammaDomain::Real => (-b, b),
            GammaDomain::NonNegative => (0.0, b),
        }
    } else if gp >= gm {
        march(&mut t, b, gp, 1.0)?
    } else {
        march(&mut t, b, gm, -1.0)?
    };

    let (mut a, mut c) = (lo, hi);
    let mut x1 = c - INV_PHI * (c - a);
    let mut x2 = a + INV_PHI * (c - a);
    let mut f1 = t.eval(x1)?;
    let mut f2 = t.eval(x2)?;
    let mut iters = 0;
    while iters < MAX_GOLDEN_ITERS {
        let mid = 0.5 * (a + c);
        if c - a <= opts.outer_tol * mid.abs().max(1.0) {
            break;
        }
        iters += 1;
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (c - a);
            f2 = t.eval(x2)?;
        } else {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - INV_PHI * (c - a);
            f1 = t.eval(x1)?;
        }
    }

    let (mut gamma_star, mut value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if g0 >= value {
        gamma_star = 0.0;
        value = g0;
    }
    Ok(OuterResult {
        gamma_star,
        value,
        iters,
        evaluations: t.evaluations,
    })
}

/// Walks `0, b, 2b, 4b, ...` in direction `sign` until `g` stops increasing.
fn march<F: FnMut(f64) -> Result<f64>>(
    t: &mut Tracked<F>,
    b: f64,
    g_b: f64,
    sign: f64,
) -> Result<(f64, f64)> {
    let (mut prev, mut mid, mut g_mid) = (0.0, b, g_b);
    for _ in 0..MAX_DOUBLINGS {
        let next = 2.0 * mid;
        let g_next = t.eval(sign * next)?;
        if g_next <= g_mid {
            let (lo, hi) = (prev, next);
            return Ok(if sign > 0.0 { (lo, hi) } else { (-hi, -lo) });
        }
        prev = mid;
        mid = next;
        g_mid = g_next;
    }
    Err(Error::BracketFailure {
        doublings: MAX_DOUBLINGS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn shifted_quadratic() {
        let r = outer_maximize(|g| Ok(-(g - 3.0) * (g - 3.0)), &opts(), GammaDomain::Real).unwrap();
        assert!((r.gamma_star - 3.0).abs() < 1e-8, "{}", r.gamma_star);
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn absolute_value_peak() {
        let r = outer_maximize(|g| Ok(-g.abs()), &opts(), GammaDomain::Real).unwrap();
        assert_eq!(r.gamma_star, 0.0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn four_point_dual_objective() {
        // sum_i -1/4 g^2 lambda_i^2 + g lambda_i x_i with lambda = (2,2,-2,-2), x = 1..4
        let g = |gamma: f64| Ok(-4.0 * gamma * gamma - 8.0 * gamma);
        let r = outer_maximize(g, &opts(), GammaDomain::Real).unwrap();
        // a smooth maximizer is only resolvable to ~sqrt(machine eps)
        assert!((r.gamma_star + 1.0).abs() < 1e-6, "{}", r.gamma_star);
        assert!((r.value - 4.0).abs() < 1e-12);
        assert_eq!(r.concavity_violations(1e-8), 0);
    }

    #[test]
    fn far_maximizer_needs_doublings() {
        let r = outer_maximize(|g| Ok(-(g + 1e6).powi(2)), &opts(), GammaDomain::Real).unwrap();
        assert!((r.gamma_star + 1e6).abs() < 1e-3, "{}", r.gamma_star);
    }

    #[test]
    fn nonnegative_domain_clamps() {
        let r = outer_maximize(|g| Ok(-(g + 2.0).powi(2) + 4.0), &opts(), GammaDomain::NonNegative)
            .unwrap();
        assert_eq!(r.gamma_star, 0.0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn unbounded_is_bracket_failure() {
        let r = outer_maximize(|g| Ok(g), &opts(), GammaDomain::Real);
        assert!(matches!(r, Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn counts_convex_kinks() {
        let res = OuterResult {
            gamma_star: 0.0,
            value: 0.0,
            iters: 0,
            evaluations: vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)],
        };
        assert_eq!(res.concavity_violations(1e-8), 1);
    }
}
