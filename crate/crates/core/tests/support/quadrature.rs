#![allow(clippy::excessive_precision)]

//! Numerical marginal likelihood of a Gaussian mean observed through
//! Gaussian noise, integrated directly over the mean.

use std::f64::consts::PI;

fn log_integrand(mu: f64, mu_a: f64, sigma_a: f64, obs: &[(f64, f64)]) -> f64 {
    let mut g = -0.5 * (2.0 * PI * sigma_a * sigma_a).ln() - (mu - mu_a).powi(2) / (2.0 * sigma_a * sigma_a);
    for &(x, s) in obs {
        g += -0.5 * (2.0 * PI * s * s).ln() - (x - mu).powi(2) / (2.0 * s * s);
    }
    g
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Distance from `mode` (in direction `dir`) at which `f` has dropped by `drop`.
fn drop_point(f: &dyn Fn(f64) -> f64, mode: f64, dir: f64, drop: f64) -> f64 {
    let top = f(mode);
    let mut step = 1e-6;
    while top - f(mode + dir * step) < drop {
        step *= 2.0;
    }
    let (mut lo, mut hi) = (0.0, step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if top - f(mode + dir * mid) < drop {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mode + dir * hi
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Composite Gauss-Kronrod rule on `panels` equal pieces.
fn composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| gk15(f, a + i as f64 * h, a + (i + 1) as f64 * h).0).sum()
}

/// −ln ∫ N(μ; μ_a, σ_a) Π_l N(x_l; μ, σ_l) dμ, by quadrature.
pub fn numeric_cost(mu_a: f64, sigma_a: f64, obs: &[(f64, f64)]) -> f64 {
    let g = |mu: f64| log_integrand(mu, mu_a, sigma_a, obs);
    let lo = obs.iter().map(|o| o.0).fold(mu_a, f64::min) - 10.0 * sigma_a;
    let hi = obs.iter().map(|o| o.0).fold(mu_a, f64::max) + 10.0 * sigma_a;
    let mode = golden_max(&g, lo, hi);
    let top = g(mode);
    let a = drop_point(&g, mode, -1.0, 60.0);
    let b = drop_point(&g, mode, 1.0, 60.0);
    let scaled = |mu: f64| (g(mu) - top).exp();
    let integral = composite(&scaled, a, b, 64);
    -(top + integral.ln())
}
