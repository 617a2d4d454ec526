//! Shared fixtures and independent oracles for the integration tests.
//!
//! Nothing here calls into the code under test except to load tables.
#![allow(dead_code)]

use metaudit_core::{derive_tests, parse_table, Scale, TestedStudy};

pub const GORI_LUIK: &str = include_str!("../../../../data/gori_luik_ets.csv");
pub const VAN_DALEN: &str = include_str!("../../../../data/van_dalen_apathy.tsv");

/// Published derived columns: (label, SE, Z, p, −log10 p, rank).
pub const GORI_LUIK_PUBLISHED: [(&str, f64, f64, f64, f64, usize); 11] = [
    ("Brownson", 1.307, 0.398, 0.691, 0.1607, 10),
    ("Buffler", 0.386, -0.492, 0.623, 0.2058, 8),
    ("Butler", 2.456, 0.415, 0.678, 0.1688, 9),
    ("Correa", 1.088, 0.983, 0.325, 0.4875, 3),
    ("Fontham", 0.179, 1.617, 0.106, 0.9753, 1),
    ("Garfinkel1", 0.231, 0.736, 0.462, 0.3356, 5),
    ("Garfinkel2", 0.280, 1.109, 0.268, 0.5725, 2),
    ("Humble", 1.398, 0.858, 0.391, 0.4081, 4),
    ("Janerich", 0.219, -0.640, 0.522, 0.2820, 6),
    ("Kabat1", 0.529, -0.397, 0.691, 0.1603, 11),
    ("Wu", 0.766, 0.535, 0.592, 0.2273, 7),
];

/// Published derived columns: (label, SE, Z, p, rank).
pub const VAN_DALEN_PUBLISHED: [(&str, f64, f64, f64, usize); 11] = [
    ("Pink", 0.2372, 1.5596, 0.1189, 5),
    ("Robert", 0.3724, 1.5304, 0.1259, 6),
    ("Somme", 0.3265, 0.3981, 0.6905, 9),
    ("Sobow", 2.1327, 2.4852, 0.0129, 2),
    ("Peters", 0.3138, -0.2868, 0.7742, 10),
    ("Chilovi", 0.7321, 1.5298, 0.1261, 7),
    ("Palmer", 2.3189, 1.6517, 0.0986, 4),
    ("Teng", 1.6173, 1.1871, 0.2352, 8),
    ("Chan", 0.2704, -2.2928, 0.0219, 3),
    ("Brodyty", 5.9490, 0.0790, 0.9370, 11),
    ("Burke", 0.1199, 8.3404, 0.0000, 1),
];

pub fn gori_luik() -> Vec<TestedStudy> {
    let t = parse_table(GORI_LUIK.as_bytes(), 0.90, 1.0, "gori_luik_ets.csv").unwrap();
    derive_tests(&t, Scale::Linear).unwrap()
}

pub fn van_dalen() -> Vec<TestedStudy> {
    let t = parse_table(VAN_DALEN.as_bytes(), 0.95, 1.0, "van_dalen_apathy.tsv").unwrap();
    derive_tests(&t, Scale::Linear).unwrap()
}

pub fn ranked_p(tests: &[TestedStudy]) -> Vec<f64> {
    let mut p: Vec<f64> = tests.iter().map(|t| t.result.p).collect();
    p.sort_by(f64::total_cmp);
    p
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---- special-function oracles -------------------------------------------

/// erf by its Maclaurin series; accurate to ~1e-13 for |x| ≤ 3.5.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..400 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

/// erfc for x > 0 by its continued fraction, evaluated bottom-up.
pub fn erfc_cf(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=400).rev() {
        t = x + (k as f64 / 2.0) / t;
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * t)
}

/// Φ(x) from the oracles above.
pub fn phi_oracle(x: f64) -> f64 {
    let u = x / std::f64::consts::SQRT_2;
    if u.abs() <= 3.0 {
        0.5 * (1.0 + erf_series(u))
    } else if u > 0.0 {
        1.0 - 0.5 * erfc_cf(u)
    } else {
        0.5 * erfc_cf(-u)
    }
}

/// Quantile by bisection on `cdf`.
pub fn bisect_quantile(cdf: impl Fn(f64) -> f64, q: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// P(|T| > a) for Student t(df), by quadrature of the unnormalized density
/// on [0, ∞) mapped to [0, 1).
pub fn t_two_sided_oracle(a: f64, df: f64) -> f64 {
    let g = |t: f64| (1.0 + t * t / df).powf(-(df + 1.0) / 2.0);
    let mapped = |u: f64| {
        if u >= 1.0 {
            // Limit of the integrand as t → ∞: nonzero only for df = 1.
            if df == 1.0 {
                1.0
            } else {
                0.0
            }
        } else {
            let t = u / (1.0 - u);
            g(t) / ((1.0 - u) * (1.0 - u))
        }
    };
    let ua = a.abs() / (1.0 + a.abs());
    let total = simpson(mapped, 0.0, 1.0, 400_000);
    let tail = simpson(mapped, ua, 1.0, 400_000);
    tail / total
}

/// P(F(1, d) > f) via F(1, d) = t(d)².
pub fn f1_sf_oracle(f: f64, d: f64) -> f64 {
    t_two_sided_oracle(f.sqrt(), d)
}

// ---- regression and summation oracles ------------------------------------

/// Polynomial least squares by explicit normal equations and Gaussian
/// elimination with partial pivoting. Returns (coefficients, sse).
#[allow(clippy::needless_range_loop)]
pub fn normal_equations_polyfit(x: &[f64], y: &[f64], degree: usize) -> (Vec<f64>, f64) {
    let p = degree + 1;
    let mut a = vec![vec![0.0; p + 1]; p];
    for (xi, yi) in x.iter().zip(y) {
        for r in 0..p {
            for c in 0..p {
                a[r][c] += xi.powi((r + c) as i32);
            }
            a[r][p] += xi.powi(r as i32) * yi;
        }
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
    let sse = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let fit: f64 = beta.iter().enumerate().map(|(k, b)| b * xi.powi(k as i32)).sum();
            (yi - fit).powi(2)
        })
        .sum();
    (beta, sse)
}

/// KS distance to Uniform(0,1) by counting: at every sample point compare
/// the ECDF just before and at the point with the uniform CDF.
pub fn ks_brute(ps: &[f64]) -> f64 {
    let n = ps.len() as f64;
    let mut d: f64 = 0.0;
    for &x in ps {
        let at = ps.iter().filter(|&&v| v <= x).count() as f64 / n;
        let before = ps.iter().filter(|&&v| v < x).count() as f64 / n;
        d = d.max((at - x).abs()).max((x - before).abs());
    }
    d
}

/// Simple regression y = a + b·x with the classical textbook formulas.
/// Returns (a, b, se(a)).
pub fn simple_regression(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let s2 = sse / (n - 2.0);
    (a, b, (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
}
