//! Dense BFGS with Armijo backtracking.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Values below this are reported as `Unbounded`.
    pub unbounded_below: f64,
}

impl BfgsConfig {
    pub fn new(max_iters: usize, grad_tol: f64) -> Self {
        Self {
            max_iters,
            grad_tol,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 64,
            unbounded_below: -1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub iters: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f` from `x0`. `f` returns the value and gradient.
///
/// Converges when the gradient norm drops below `grad_tol * max(1, |g0|)`.
/// A line search that cannot decrease the objective any further, or a step
/// whose decrease is at roundoff level, ends the run at the current point;
/// this is where non-smooth objectives stop.
pub(crate) fn minimize<F>(mut f: F, x0: &[f64], cfg: &BfgsConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return Err(Error::NonFinite("inner objective".into()));
    }
    let tol = cfg.grad_tol * norm(&g).max(1.0);
    // inverse Hessian, row-major
    let mut h = identity(n);
    let mut scaled = false;

    for iter in 0..cfg.max_iters {
        let gnorm = norm(&g);
        if gnorm <= tol {
            return Ok(Minimum {
                x,
                iters: iter,
            });
        }

        let mut p = mat_vec(&h, &g, n);
        p.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &p);
        if slope >= 0.0 || !slope.is_finite() {
            h = identity(n);
            p = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let xt: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + t * pi).collect();
            let (ft, gt) = f(&xt);
            if ft.is_finite() && ft <= fx + cfg.armijo * t * slope {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= cfg.backtrack;
        }
        let Some((xn, fnew, gn)) = accepted else {
            return Ok(Minimum {
                x,
                iters: iter,
            });
        };
        if fnew < cfg.unbounded_below {
            return Err(Error::Unbounded { value: fnew });
        }
        // decrease at roundoff level: no further progress is representable
        if fx - fnew <= f64::EPSILON * fx.abs().max(1.0) {
            return Ok(Minimum { x: xn, iters: iter + 1 });
        }

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-14 * norm(&s) * norm(&yv) && sy > 0.0 {
            if !scaled {
                let gamma = sy / dot(&yv, &yv);
                h.iter_mut().for_each(|v| *v *= gamma);
                scaled = true;
            }
            bfgs_update(&mut h, &s, &yv, sy, n);
        }

        x = xn;
        fx = fnew;
        g = gn;
    }

    let gnorm = norm(&g);
    if gnorm <= tol {
        Ok(Minimum {
            x,
            iters: cfg.max_iters,
        })
    } else {
        Err(Error::MaxIters {
            iters: cfg.max_iters,
            grad_norm: gnorm,
        })
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec(h: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&h[i * n..(i + 1) * n], v)).collect()
}

/// `H <- (I - r s y^T) H (I - r y s^T) + r s s^T` with `r = 1 / s^T y`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let r = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += (1.0 + r * yhy) * r * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
