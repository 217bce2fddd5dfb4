//! Derivative-free maximisers: golden-section refinement behind a coarse
//! pre-scan, and Nelder–Mead.

use crate::error::{Error, Result};
use crate::par;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation of a unimodal `f` on `[a, b]`, stopping when
/// the bracket is narrower than `rel_tol` times its midpoint.
/// Returns the best point seen and its value.
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, max_iter: usize) -> (f64, f64) {
    let res: Result<_> = golden_core(|x| Ok((f(x), ())), a, b, rel_tol, max_iter);
    let best = res.expect("infallible objective").best;
    (best.0, best.1)
}

struct GoldenRun<T> {
    best: (f64, f64, T),
    evaluations: Vec<(f64, f64)>,
}

fn better(v: f64, x: f64, best_v: f64, best_x: f64) -> bool {
    v > best_v || (v == best_v && x < best_x)
}

fn golden_core<T>(
    mut f: impl FnMut(f64) -> Result<(f64, T)>,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<GoldenRun<T>> {
    let mut evaluations = Vec::new();
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (fc, tc) = f(c)?;
    let (fd, td) = f(d)?;
    evaluations.push((c, fc));
    evaluations.push((d, fd));
    let mut best = if better(fd, d, fc, c) { (d, fd, td) } else { (c, fc, tc) };
    let (mut fc, mut fd) = (fc, fd);
    for _ in 0..max_iter {
        if (b - a).abs() <= rel_tol * ((a + b) / 2.0).abs() {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            let (v, t) = f(c)?;
            evaluations.push((c, v));
            fc = v;
            if better(v, c, best.1, best.0) {
                best = (c, v, t);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            let (v, t) = f(d)?;
            evaluations.push((d, v));
            fd = v;
            if better(v, d, best.1, best.0) {
                best = (d, v, t);
            }
        }
    }
    Ok(GoldenRun { best, evaluations })
}

/// Outcome of [`maximize_in_bracket`].
#[derive(Debug, Clone)]
pub struct BracketMax<T> {
    pub x: f64,
    pub value: f64,
    pub payload: T,
    /// Every `(x, f(x))` evaluated, pre-scan first.
    pub evaluations: Vec<(f64, f64)>,
}

/// Number of points in the coarse pre-scan.
pub const PRESCAN_POINTS: usize = 9;

/// Maximise `f` over `[lo, hi]`: a 9-point pre-scan (evaluated in parallel)
/// must find an interior maximum, which golden-section search then refines
/// between its neighbours. Ties go to the smaller abscissa.
pub fn maximize_in_bracket<T, F>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<BracketMax<T>>
where
    T: Send,
    F: Fn(f64) -> Result<(f64, T)> + Sync + Send,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("bracket", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let xs: Vec<f64> = (0..PRESCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (PRESCAN_POINTS - 1) as f64)
        .collect();
    let scan = par::map_ordered(&xs, |&x| f(x));
    let mut scan: Vec<(f64, f64, T)> = xs
        .iter()
        .zip(scan)
        .map(|(&x, r)| r.map(|(v, t)| (x, v, t)))
        .collect::<Result<_>>()?;
    let mut evaluations: Vec<(f64, f64)> = scan.iter().map(|(x, v, _)| (*x, *v)).collect();
    let mut imax = 0;
    for i in 1..scan.len() {
        if scan[i].1 > scan[imax].1 {
            imax = i;
        }
    }
    if imax == 0 || imax == PRESCAN_POINTS - 1 {
        return Err(Error::NoInteriorMaximum { lo, hi });
    }
    let (a, b) = (xs[imax - 1], xs[imax + 1]);
    let run = golden_core(&f, a, b, rel_tol, 200)?;
    evaluations.extend(run.evaluations);
    let (sx, sv, st) = scan.swap_remove(imax);
    let (x, value, payload) = if better(run.best.1, run.best.0, sv, sx) {
        run.best
    } else {
        (sx, sv, st)
    };
    Ok(BracketMax {
        x,
        value,
        payload,
        evaluations,
    })
}

/// One Nelder–Mead iteration as recorded in the trace.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimplexStep {
    pub iteration: usize,
    /// Best vertex of the current simplex.
    pub x: Vec<f64>,
    pub value: f64,
    /// Best value seen so far (non-decreasing).
    pub best_value: f64,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub trace: Vec<SimplexStep>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead maximisation from `x0` with per-axis initial `steps`.
/// Converged when the spread of objective values across the simplex drops
/// below `f_tol`. Initial and shrink evaluations run in parallel.
pub fn nelder_mead_max<F>(f: F, x0: &[f64], steps: &[f64], f_tol: f64, max_iters: usize) -> SimplexResult
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let dim = x0.len();
    assert_eq!(steps.len(), dim);
    let mut verts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        verts.push(v);
    }
    let vals = par::map_ordered(&verts, |v| f(v));
    let mut simplex: Vec<(Vec<f64>, f64)> = verts.into_iter().zip(vals).collect();
    let mut evaluations = simplex.len();
    let mut best: (Vec<f64>, f64) = simplex[0].clone();
    for s in &simplex {
        if s.1 > best.1 {
            best = s.clone();
        }
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        // descending by value; stable so ties keep insertion order
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[0].1 - simplex[dim].1;
        if spread.abs() < f_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let along = |t: f64| -> Vec<f64> { (0..dim).map(|j| centroid[j] + t * (worst.0[j] - centroid[j])).collect() };

        let xr = along(-1.0);
        let fr = f(&xr);
        evaluations += 1;
        if fr > simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evaluations += 1;
            simplex[dim] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let outside = fr > worst.1;
            let xc = along(if outside { -0.5 } else { 0.5 });
            let fc = f(&xc);
            evaluations += 1;
            let accept = if outside { fc >= fr } else { fc > worst.1 };
            if accept {
                simplex[dim] = (xc, fc);
            } else {
                let top = simplex[0].0.clone();
                let shrunk: Vec<Vec<f64>> = simplex[1..]
                    .iter()
                    .map(|(v, _)| (0..dim).map(|j| top[j] + 0.5 * (v[j] - top[j])).collect())
                    .collect();
                let vals = par::map_ordered(&shrunk, |v| f(v));
                evaluations += shrunk.len();
                for (slot, (v, fv)) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(vals)) {
                    *slot = (v, fv);
                }
            }
        }
        for s in &simplex {
            if s.1 > best.1 {
                best = s.clone();
            }
        }
        let top = simplex
            .iter()
            .fold(&simplex[0], |a, b| if b.1 > a.1 { b } else { a });
        trace.push(SimplexStep {
            iteration: iterations,
            x: top.0.clone(),
            value: top.1,
            best_value: best.1,
        });
    }
    SimplexResult {
        x: best.0,
        value: best.1,
        trace,
        iterations,
        evaluations,
        converged,
    }
}
