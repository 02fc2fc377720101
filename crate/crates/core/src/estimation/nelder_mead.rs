use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NelderMeadOptions {
    /// Stop when `f_worst - f_best <= reltol * (|f_best| + reltol)`.
    pub reltol: f64,
    /// Iteration budget over all restarts; `None` means `500 * dim`.
    pub max_iter: Option<usize>,
    /// Per-coordinate offsets of the initial simplex. Empty uses 10% of the
    /// largest starting coordinate, or 0.1 at the origin.
    pub initial_step: Vec<f64>,
    /// Fresh simplices built around the incumbent after convergence, kept
    /// only while they improve on it. Successive restarts flip the direction
    /// of the initial offsets.
    pub restarts: usize,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            reltol: 1e-8,
            max_iter: None,
            initial_step: Vec::new(),
            restarts: 0,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NlsResult {
    pub beta: Vec<f64>,
    /// Sum of squared errors at `beta`.
    pub objective: f64,
    pub initial_objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective)
        }
    }
}

fn initial_steps(x0: &[f64], opts: &NelderMeadOptions) -> Result<Vec<f64>> {
    if opts.initial_step.is_empty() {
        let largest = x0.iter().fold(0.0_f64, |m, x| m.max(libm::fabs(*x)));
        let step = if largest > 0.0 { 0.1 * largest } else { 0.1 };
        return Ok(vec![step; x0.len()]);
    }
    if opts.initial_step.len() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            got: opts.initial_step.len(),
        });
    }
    Ok(opts
        .initial_step
        .iter()
        .map(|&s| if s != 0.0 && s.is_finite() { s } else { 0.1 })
        .collect())
}

/// Minimizes `objective` with the Nelder-Mead simplex method.
///
/// The returned point is the best vertex seen, so its objective never
/// exceeds the objective at `beta0`.
pub fn nls_fit<F>(objective: F, beta0: &[f64], opts: &NelderMeadOptions) -> Result<NlsResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut f = Counted { f: objective, evaluations: 0 };
    let dim = beta0.len();
    let f0 = f.eval(beta0)?;
    let steps = initial_steps(beta0, opts)?;
    let budget = opts.max_iter.unwrap_or(500 * dim.max(1));

    let mut best = beta0.to_vec();
    let mut best_f = f0;
    let mut iterations = 0;
    let mut converged = dim == 0;

    if dim > 0 {
        let mut scaled = steps.clone();
        for round in 0..=opts.restarts {
            if round > 0 {
                scaled.iter_mut().for_each(|s| *s = -*s);
            }
            let (x, fx, done) = simplex_search(&mut f, &best, best_f, &scaled, opts, budget - iterations, &mut iterations)?;
            let improved = fx < best_f - opts.reltol * (libm::fabs(best_f) + opts.reltol);
            if fx < best_f {
                best = x;
                best_f = fx;
            }
            converged = done;
            if !done || iterations >= budget || (round > 0 && !improved) {
                break;
            }
        }
    }

    Ok(NlsResult {
        beta: best,
        objective: best_f,
        initial_objective: f0,
        converged,
        iterations,
        evaluations: f.evaluations,
    })
}

#[allow(clippy::too_many_arguments)]
fn simplex_search<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    start: &[f64],
    f_start: f64,
    steps: &[f64],
    opts: &NelderMeadOptions,
    budget: usize,
    iterations: &mut usize,
) -> Result<(Vec<f64>, f64, bool)> {
    let n = start.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    vals.push(f_start);
    for (i, s) in steps.iter().enumerate() {
        let mut p = start.to_vec();
        p[i] += s;
        vals.push(f.eval(&p)?);
        pts.push(p);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut used = 0;
    loop {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (lo, hi, next) = (order[0], order[n], order[n - 1]);
        let (f_lo, f_hi) = (vals[lo], vals[hi]);
        if f_hi - f_lo <= opts.reltol * (libm::fabs(f_lo) + opts.reltol) {
            return Ok((pts[lo].clone(), f_lo, true));
        }
        if used >= budget {
            return Ok((pts[lo].clone(), f_lo, false));
        }
        used += 1;
        *iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            centroid.iter_mut().zip(&pts[i]).for_each(|(c, x)| *c += x);
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);
        let toward = |from: &[f64], coef: f64| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, x)| c + coef * (x - c)).collect()
        };

        let xr = toward(&pts[hi], -opts.reflection);
        let fr = f.eval(&xr)?;
        if fr < f_lo {
            let xe = toward(&xr, opts.expansion);
            let fe = f.eval(&xe)?;
            if fe < fr {
                pts[hi] = xe;
                vals[hi] = fe;
            } else {
                pts[hi] = xr;
                vals[hi] = fr;
            }
            continue;
        }
        if fr < vals[next] {
            pts[hi] = xr;
            vals[hi] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < f_hi {
            let xc = toward(&xr, opts.contraction);
            let fc = f.eval(&xc)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = toward(&pts[hi], opts.contraction);
            let fc = f.eval(&xc)?;
            (xc, fc, fc < f_hi)
        };
        if accept {
            pts[hi] = xc;
            vals[hi] = fc;
            continue;
        }
        let anchor = pts[lo].clone();
        for &i in &order[1..] {
            let p: Vec<f64> = anchor.iter().zip(&pts[i]).map(|(a, x)| a + opts.shrink * (x - a)).collect();
            vals[i] = f.eval(&p)?;
            pts[i] = p;
        }
    }
}
