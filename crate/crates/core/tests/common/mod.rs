//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls into the channel evaluation code of the crate; only the
//! plain data types are shared.

#![allow(dead_code)]

use mazo::channel::{ChannelRealization, Position};
use num_complex::Complex64;

/// `h(r)` by direct summation with Neumaier-compensated accumulation and the
/// phase formed through fused multiply-adds.
pub fn direct_response(channel: &ChannelRealization, p: Position) -> Complex64 {
    let k = std::f64::consts::TAU / channel.wavelength();
    let (mut re, mut re_c) = (0.0f64, 0.0f64);
    let (mut im, mut im_c) = (0.0f64, 0.0f64);
    for path in channel.paths() {
        let rho = p.x.mul_add(
            path.elevation.cos() * path.azimuth.sin(),
            p.y * path.elevation.sin(),
        );
        let (s, c) = (-k * rho).sin_cos();
        let term_re = path.gain.re * c - path.gain.im * s;
        let term_im = path.gain.re * s + path.gain.im * c;
        neumaier(&mut re, &mut re_c, term_re);
        neumaier(&mut im, &mut im_c, term_im);
    }
    Complex64::new(re + re_c, im + im_c)
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

/// Gradient of `|h(r)|²` from term-by-term differentiation of the pairwise
/// cosine expansion:
/// `∂/∂x Σ α_m α_n cos(k(ρ_m − ρ_n) + δ_n − δ_m)
///   = −Σ α_m α_n sin(·) · k (∂ρ_m/∂x − ∂ρ_n/∂x)`.
pub fn analytic_power_gradient(channel: &ChannelRealization, p: Position) -> [f64; 2] {
    let k = std::f64::consts::TAU / channel.wavelength();
    let paths: Vec<(f64, f64, f64, f64)> = channel
        .paths()
        .iter()
        .map(|path| {
            let dx = path.elevation.cos() * path.azimuth.sin();
            let dy = path.elevation.sin();
            (path.gain.norm(), path.gain.arg(), dx, dy)
        })
        .collect();
    let mut g = [0.0; 2];
    for &(am, dm, xm, ym) in &paths {
        for &(an, dn, xn, yn) in &paths {
            let arg = k * ((xm - xn) * p.x + (ym - yn) * p.y) + dn - dm;
            let s = arg.sin();
            g[0] -= am * an * s * k * (xm - xn);
            g[1] -= am * an * s * k * (ym - yn);
        }
    }
    g
}

/// Central finite difference of `|h|²` (from [`direct_response`]).
pub fn finite_difference_gradient(channel: &ChannelRealization, p: Position, h: f64) -> [f64; 2] {
    let f = |q: Position| direct_response(channel, q).norm_sqr();
    [
        (f(Position::new(p.x + h, p.y)) - f(Position::new(p.x - h, p.y))) / (2.0 * h),
        (f(Position::new(p.x, p.y + h)) - f(Position::new(p.x, p.y - h))) / (2.0 * h),
    ]
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn vec_rel_err(est: [f64; 2], truth: [f64; 2]) -> f64 {
    let num = (est[0] - truth[0]).hypot(est[1] - truth[1]);
    num / truth[0].hypot(truth[1])
}
