#![allow(dead_code)]

use maxent_control::math::total_variation;
use maxent_control::policy::{state_marginals, Policy};
use maxent_control::TabularMdp;

pub fn max_abs_diff<'a>(
    a: impl IntoIterator<Item = &'a f64>,
    b: impl IntoIterator<Item = &'a f64>,
) -> f64 {
    a.into_iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn flat3(t: &[Vec<Vec<f64>>]) -> impl Iterator<Item = &f64> {
    t.iter().flatten().flatten()
}

/// Largest row TV over the `(t, s)` pairs that `reference` reaches.
pub fn reachable_row_tv(mdp: &TabularMdp, learned: &Policy, reference: &Policy) -> f64 {
    let mu = state_marginals(mdp, reference, mdp.initial_dist());
    let mut worst: f64 = 0.0;
    for t in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            if mu[t][s] > 0.0 {
                worst = worst.max(total_variation(learned.row(t, s), reference.row(t, s)));
            }
        }
    }
    worst
}

/// Central differences of `f` at every coordinate of `x`.
pub fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let x0 = x[i];
            x[i] = x0 + h;
            let up = f(&x);
            x[i] = x0 - h;
            let down = f(&x);
            x[i] = x0;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖g − fd‖∞ / max(‖fd‖∞, floor)`.
pub fn relative_error(g: &[f64], fd: &[f64], floor: f64) -> f64 {
    let scale = fd.iter().fold(floor, |m, x| m.max(x.abs()));
    max_abs_diff(g, fd) / scale
}

pub fn reshape3(flat: &[f64], t: usize, s: usize, a: usize) -> Vec<Vec<Vec<f64>>> {
    assert_eq!(flat.len(), t * s * a);
    flat.chunks(s * a)
        .map(|step| step.chunks(a).map(<[f64]>::to_vec).collect())
        .collect()
}
