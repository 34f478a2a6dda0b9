//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths being checked.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

/// Adaptive Gauss–Kronrod (7/15) quadrature to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (k, err) = gk15(f, a, b);
        // below ~100 ulps of the segment value the error estimate is roundoff
        if err <= tol.max(1e-14 * k.abs()) || depth > 40 {
            return k;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, tol / 2.0, depth + 1) + rec(f, m, b, tol / 2.0, depth + 1)
    }
    if b <= a {
        return 0.0;
    }
    rec(f, a, b, tol, 0)
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> f64 {
    breaks.windows(2).map(|w| integrate(f, w[0], w[1], tol)).sum()
}

/// P(k, x) = ∫₀ˣ t^{k-1}e^{-t}dt / ∫₀^∞ t^{k-1}e^{-t}dt, both by quadrature,
/// so no Gamma function evaluation is needed.
pub fn incomplete_gamma_by_quadrature(k: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if k < 1.0 {
        // u = t^k removes the singularity at the origin
        let f = |u: f64| (-u.powf(1.0 / k)).exp();
        let top = 800f64.powf(k);
        let upper = x.powf(k).min(top);
        let num = integrate(&f, 0.0, upper, 1e-16);
        let den = integrate(&f, 0.0, top, 1e-16);
        return num / den;
    }
    let m = k - 1.0;
    let sd = k.sqrt();
    // integrand scaled by its peak value at t = m
    let g = |t: f64| {
        if t <= 0.0 {
            return if m == 0.0 { (m - t).exp() } else { 0.0 };
        }
        if m == 0.0 {
            return (-t).exp();
        }
        (m * ((t - m) / m).ln_1p() - (t - m)).exp()
    };
    let end = m + 60.0 * sd + 60.0;
    let mut breaks: Vec<f64> = [0.0, m - 10.0 * sd, m - 4.0 * sd, m - sd, m, m + sd, m + 4.0 * sd, m + 10.0 * sd, end]
        .into_iter()
        .filter(|&b| b >= 0.0)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let den = integrate_pieces(&g, &breaks, 1e-15 * sd);
    let mut num_breaks: Vec<f64> = breaks.iter().copied().filter(|&b| b < x).collect();
    num_breaks.push(x.min(end));
    let num = integrate_pieces(&g, &num_breaks, 1e-15 * sd);
    (num / den).min(1.0)
}

/// Connected components by brute-force transitive closure of the
/// reachability relation.
pub fn components_by_closure(nodes: &[String], edges: &[(String, String)]) -> Vec<BTreeSet<String>> {
    let idx: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let n = nodes.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
    }
    for (a, b) in edges {
        let (i, j) = (idx[a.as_str()], idx[b.as_str()]);
        reach[i][j] = true;
        reach[j][i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out: Vec<BTreeSet<String>> = Vec::new();
    for i in 0..n {
        let comp: BTreeSet<String> = (0..n).filter(|&j| reach[i][j]).map(|j| nodes[j].clone()).collect();
        if !out.contains(&comp) {
            out.push(comp);
        }
    }
    out
}

/// Poisson pmf by the multiplicative recurrence.
pub fn poisson_pmf_table(lambda: f64, max_k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_k + 1);
    // start in log space to avoid underflow of e^{-λ} for large λ
    let mut ln_p = -lambda;
    for k in 0..=max_k {
        if k > 0 {
            ln_p += lambda.ln() - (k as f64).ln();
        }
        out.push(ln_p.exp());
    }
    out
}

/// Skellam pmf on `lo..=hi` by explicit convolution of two Poisson tables.
pub fn skellam_by_tables(mu1: f64, mu2: f64, lo: i64, hi: i64) -> Vec<f64> {
    let span = (mu1 + mu2 + 20.0 * (mu1 + mu2).sqrt() + 60.0) as usize;
    let p1 = poisson_pmf_table(mu1, span + hi.unsigned_abs() as usize);
    let p2 = poisson_pmf_table(mu2, span + lo.unsigned_abs() as usize);
    (lo..=hi)
        .map(|k| {
            (0..p2.len())
                .filter_map(|j| {
                    let i = j as i64 + k;
                    (i >= 0 && (i as usize) < p1.len()).then(|| p1[i as usize] * p2[j])
                })
                .sum()
        })
        .collect()
}
