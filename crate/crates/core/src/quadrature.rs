//! Adaptive Simpson integration.

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 16;

/// Integrates `f` over `[a, b]` to roughly `rel_tol` relative accuracy.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let h = (b - a) / INITIAL_PANELS as f64;
    let panels: Vec<(f64, f64, f64, f64, f64, f64)> = (0..INITIAL_PANELS)
        .map(|p| {
            let lo = a + h * p as f64;
            let hi = if p + 1 == INITIAL_PANELS { b } else { lo + h };
            let (flo, fhi) = (f(lo), f(hi));
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            (lo, hi, flo, fm, fhi, simpson(lo, hi, flo, fm, fhi))
        })
        .collect();
    let coarse: f64 = panels.iter().map(|p| p.5).sum();
    let scale = panels
        .iter()
        .map(|p| p.5.abs())
        .sum::<f64>()
        .max(coarse.abs())
        .max(f64::MIN_POSITIVE);
    let eps = rel_tol * scale / INITIAL_PANELS as f64;
    panels
        .into_iter()
        .map(|(lo, hi, flo, fm, fhi, whole)| {
            refine(&f, lo, hi, flo, fm, fhi, whole, eps, MAX_DEPTH)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * eps {
        return left + right + diff / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}
