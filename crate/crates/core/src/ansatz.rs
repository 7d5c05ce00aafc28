//! Quadratic alpha-dependent logical error ansatz.
//!
//! `p_L(p, alpha) = p^(d'/2) exp(c0(alpha) + c1(alpha) p + c2(alpha) p^2)` with
//! `c_j(alpha) = c_j + u_j (alpha - 1) + v_j (alpha - 1)^2`. Taking logs makes
//! the model linear in the nine unknowns, which are fitted jointly by weighted
//! least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams<T> {
    pub d_circ_prime: T,
    pub base: [T; 3],
    pub linear: [T; 3],
    pub quadratic: [T; 3],
}

impl<T: Real> AnsatzParams<T> {
    /// Parameters with no alpha dependence.
    pub fn baseline(d_circ_prime: T, base: [T; 3]) -> Self {
        Self { d_circ_prime, base, linear: [T::zero(); 3], quadratic: [T::zero(); 3] }
    }

    /// Exact quadratic through three `(alpha, [c0, c1, c2])` samples.
    pub fn from_alpha_samples(d_circ_prime: T, samples: &[(T, [T; 3]); 3]) -> Result<Self> {
        let rows: Vec<Vec<T>> = samples
            .iter()
            .map(|(a, _)| {
                let s = *a - T::one();
                vec![T::one(), s, s * s]
            })
            .collect();
        let mut out = Self::baseline(d_circ_prime, [T::zero(); 3]);
        for j in 0..3 {
            let rhs: Vec<T> = samples.iter().map(|(_, c)| c[j]).collect();
            let sol = least_squares(&rows, &rhs)?;
            out.base[j] = sol[0];
            out.linear[j] = sol[1];
            out.quadratic[j] = sol[2];
        }
        Ok(out)
    }

    pub fn coefficients(&self, alpha: T) -> [T; 3] {
        let s = alpha - T::one();
        let mut c = [T::zero(); 3];
        for j in 0..3 {
            c[j] = self.base[j] + self.linear[j] * s + self.quadratic[j] * s * s;
        }
        c
    }

    pub fn eval(&self, p: T, alpha: T) -> T {
        eval_ansatz(self, p, alpha)
    }
}

pub fn eval_ansatz<T: Real>(params: &AnsatzParams<T>, p: T, alpha: T) -> T {
    let [c0, c1, c2] = params.coefficients(alpha);
    let half = params.d_circ_prime / T::lit(2.0);
    p.powf(half) * (c0 + c1 * p + c2 * p * p).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint<T> {
    pub p: T,
    pub alpha: T,
    pub p_l: T,
    /// Least-squares weight of `log p_L`.
    pub weight: T,
    /// False for points shown only as extrapolation checks.
    pub in_fit: bool,
}

impl<T: Real> DataPoint<T> {
    pub fn new(p: T, alpha: T, p_l: T) -> Self {
        Self { p, alpha, p_l, weight: T::one(), in_fit: true }
    }

    /// Point from Monte Carlo counts, weighted by the inverse squared relative
    /// standard error of the per-cycle rate. Zero-failure points are kept out
    /// of the fit.
    pub fn from_counts(p: T, alpha: T, n_cycles: usize, trials: u64, failures: u64) -> Self {
        let n = trials as f64;
        let block = failures as f64 / n;
        let nc = n_cycles as f64;
        let p_l = 1.0 - (1.0 - block).powf(1.0 / nc);
        let usable = failures > 0 && failures < trials;
        let weight = if usable {
            let se_block = (block * (1.0 - block) / n).sqrt();
            let se = se_block * (1.0 - block).powf(1.0 / nc - 1.0) / nc;
            let rel = se / p_l;
            1.0 / (rel * rel)
        } else {
            0.0
        };
        Self { p, alpha, p_l: T::lit(p_l), weight: T::lit(weight), in_fit: usable }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    InverseVariance,
    Unweighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary<T> {
    pub alpha: T,
    pub coefficients: [T; 3],
    /// `None` when no break-even exists in the search bracket.
    pub p0: Option<T>,
    pub log_rmse: T,
    pub log_r2: T,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub params: AnsatzParams<T>,
    pub k: T,
    pub per_alpha: Vec<AlphaSummary<T>>,
}

impl<T: Real> FitResult<T> {
    /// Coefficient and threshold table, one row per alpha.
    pub fn table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "c0", "c1", "c2", "p0", "log_rmse", "log_r2", "n_points"])?;
        for s in &self.per_alpha {
            w.write_record([
                s.alpha.to_string(),
                s.coefficients[0].to_string(),
                s.coefficients[1].to_string(),
                s.coefficients[2].to_string(),
                s.p0.map(|v| v.to_string()).unwrap_or_else(|| "nan".into()),
                s.log_rmse.to_string(),
                s.log_r2.to_string(),
                s.n_points.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Householder least squares `min |A x - b|`, columns scaled to unit max
/// norm first. Fails when the scaled design is numerically rank deficient.
fn least_squares<T: Real>(rows: &[Vec<T>], rhs: &[T]) -> Result<Vec<T>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 {
        return Err(Error::RankDeficient);
    }
    let mut scale = vec![T::zero(); n];
    for row in rows {
        for (s, &v) in scale.iter_mut().zip(row) {
            *s = s.max(v.abs());
        }
    }
    if scale.iter().any(|&s| s == T::zero()) {
        return Err(Error::RankDeficient);
    }
    let mut a: Vec<Vec<T>> = rows.iter().map(|r| r.iter().zip(&scale).map(|(&v, &s)| v / s).collect()).collect();
    let mut b = rhs.to_vec();
    let mut diag = vec![T::zero(); n];
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(Error::RankDeficient);
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| a[i][k]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().map(|&x| x * x).sum::<T>();
        if vnorm2 > T::zero() {
            for j in k..n {
                let dot = (k..m).map(|i| v[i - k] * a[i][j]).sum::<T>();
                let f = T::lit(2.0) * dot / vnorm2;
                for i in k..m {
                    a[i][j] = a[i][j] - f * v[i - k];
                }
            }
            let dot = (k..m).map(|i| v[i - k] * b[i]).sum::<T>();
            let f = T::lit(2.0) * dot / vnorm2;
            for i in k..m {
                b[i] = b[i] - f * v[i - k];
            }
        }
        diag[k] = a[k][k];
    }
    let dmax = diag.iter().fold(T::zero(), |acc, d| acc.max(d.abs()));
    let tol = dmax * T::epsilon().sqrt() * T::lit(1e-2);
    if diag.iter().any(|d| d.abs() <= tol) {
        return Err(Error::RankDeficient);
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s = s - a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Ok(x.iter().zip(&scale).map(|(&v, &s)| v / s).collect())
}

fn design_row<T: Real>(p: T, alpha: T) -> Vec<T> {
    let s = alpha - T::one();
    let base = [T::one(), p, p * p];
    let mut row = Vec::with_capacity(9);
    for f in [T::one(), s, s * s] {
        row.extend(base.iter().map(|&b| b * f));
    }
    row
}

fn target<T: Real>(d: &DataPoint<T>, d_circ_prime: T) -> T {
    d.p_l.ln() - d_circ_prime / T::lit(2.0) * d.p.ln()
}

fn distinct<T: Real>(values: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for v in values {
        if !out.iter().any(|&u| (u - v).abs() <= T::epsilon() * (u.abs() + v.abs())) {
            out.push(v);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out
}

fn fit_points<T: Real>(data: &[DataPoint<T>]) -> Vec<DataPoint<T>> {
    data.iter().copied().filter(|d| d.in_fit && d.p_l > T::zero() && d.p > T::zero()).collect()
}

fn row_weight<T: Real>(d: &DataPoint<T>, weighting: Weighting) -> T {
    match weighting {
        Weighting::InverseVariance => d.weight.max(T::zero()).sqrt(),
        Weighting::Unweighted => T::one(),
    }
}

/// Joint nine-parameter fit across all alpha values.
pub fn fit_quadratic_alpha<T: Real>(
    data: &[DataPoint<T>],
    d_circ_prime: T,
    k: T,
    weighting: Weighting,
) -> Result<FitResult<T>> {
    let pts = fit_points(data);
    let alphas = distinct(pts.iter().map(|d| d.alpha));
    let ps = distinct(pts.iter().map(|d| d.p));
    if pts.len() < 9 || alphas.len() < 3 || ps.len() < 3 {
        return Err(Error::InsufficientCoverage(format!(
            "{} points over {} alpha and {} p values",
            pts.len(),
            alphas.len(),
            ps.len()
        )));
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for d in &pts {
        let w = row_weight(d, weighting);
        if w == T::zero() {
            continue;
        }
        rows.push(design_row(d.p, d.alpha).into_iter().map(|v| v * w).collect::<Vec<_>>());
        rhs.push(target(d, d_circ_prime) * w);
    }
    let x = least_squares(&rows, &rhs).map_err(|_| Error::InsufficientCoverage("rank-deficient design".into()))?;
    let params = AnsatzParams {
        d_circ_prime,
        base: [x[0], x[1], x[2]],
        linear: [x[3], x[4], x[5]],
        quadratic: [x[6], x[7], x[8]],
    };
    Ok(summarize(params, k, data, &alphas))
}

/// Three-parameter fit of a single alpha slice.
pub fn fit_baseline<T: Real>(data: &[DataPoint<T>], d_circ_prime: T, weighting: Weighting) -> Result<[T; 3]> {
    let pts = fit_points(data);
    if distinct(pts.iter().map(|d| d.p)).len() < 3 {
        return Err(Error::InsufficientCoverage(format!("{} distinct p values", pts.len())));
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for d in &pts {
        let w = row_weight(d, weighting);
        rows.push(vec![w, d.p * w, d.p * d.p * w]);
        rhs.push(target(d, d_circ_prime) * w);
    }
    let x = least_squares(&rows, &rhs).map_err(|_| Error::InsufficientCoverage("rank-deficient design".into()))?;
    Ok([x[0], x[1], x[2]])
}

/// Independent per-alpha fits, reported in the same shape as the joint fit.
/// The returned parameters interpolate the per-alpha coefficients at the
/// first three alpha values and serve display only.
pub fn fit_per_alpha<T: Real>(
    data: &[DataPoint<T>],
    d_circ_prime: T,
    k: T,
    weighting: Weighting,
) -> Result<Vec<AlphaSummary<T>>> {
    let alphas = distinct(fit_points(data).iter().map(|d| d.alpha));
    let mut out = Vec::new();
    for a in alphas {
        let slice: Vec<DataPoint<T>> = data.iter().copied().filter(|d| d.alpha == a).collect();
        let c = fit_baseline(&slice, d_circ_prime, weighting)?;
        let params = AnsatzParams::baseline(d_circ_prime, c);
        let (log_rmse, log_r2, n_points) = metrics_for(&slice, &params, a);
        out.push(AlphaSummary {
            alpha: a,
            coefficients: c,
            p0: pseudo_threshold(&params, a, k).ok(),
            log_rmse,
            log_r2,
            n_points,
        });
    }
    Ok(out)
}

fn summarize<T: Real>(params: AnsatzParams<T>, k: T, data: &[DataPoint<T>], alphas: &[T]) -> FitResult<T> {
    let per_alpha = alphas
        .iter()
        .map(|&a| {
            let (log_rmse, log_r2, n_points) = metrics_for(data, &params, a);
            AlphaSummary {
                alpha: a,
                coefficients: params.coefficients(a),
                p0: pseudo_threshold(&params, a, k).ok(),
                log_rmse,
                log_r2,
                n_points,
            }
        })
        .collect();
    FitResult { params, k, per_alpha }
}

fn metrics_for<T: Real>(data: &[DataPoint<T>], params: &AnsatzParams<T>, alpha: T) -> (T, T, usize) {
    let pts: Vec<DataPoint<T>> = fit_points(data).into_iter().filter(|d| d.alpha == alpha).collect();
    let n = pts.len();
    if n == 0 {
        return (T::nan(), T::nan(), 0);
    }
    let nt = T::lit(n as f64);
    let logs: Vec<T> = pts.iter().map(|d| d.p_l.ln()).collect();
    let mean = logs.iter().copied().sum::<T>() / nt;
    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    for (d, &y) in pts.iter().zip(&logs) {
        let r = y - eval_ansatz(params, d.p, alpha).ln();
        ss_res = ss_res + r * r;
        ss_tot = ss_tot + (y - mean) * (y - mean);
    }
    let rmse = (ss_res / nt).sqrt();
    let r2 = if ss_tot > T::zero() { T::one() - ss_res / ss_tot } else { T::nan() };
    (rmse, r2, n)
}

/// `(alpha, log_rmse, log_r2)` per alpha over fitting-region points.
pub fn fit_metrics<T: Real>(data: &[DataPoint<T>], params: &AnsatzParams<T>) -> Vec<(T, T, T)> {
    distinct(fit_points(data).iter().map(|d| d.alpha))
        .into_iter()
        .map(|a| {
            let (rmse, r2, _) = metrics_for(data, params, a);
            (a, rmse, r2)
        })
        .collect()
}

/// Smallest `p` in `[1e-5, 1e-1]` with `p_L(p, alpha) = k p`.
pub fn pseudo_threshold<T: Real>(params: &AnsatzParams<T>, alpha: T, k: T) -> Result<T> {
    let (lo, hi) = (1e-5f64, 1e-1f64);
    if k < T::one() {
        return Err(Error::InvalidInput(format!("break-even multiplier {k} below 1")));
    }
    let f = |p: T| eval_ansatz(params, p, alpha) - k * p;
    let steps = 4000;
    let mut prev_p = T::lit(lo);
    let mut prev_f = f(prev_p);
    for i in 1..=steps {
        let p = T::lit(lo * (hi / lo).powf(i as f64 / steps as f64));
        let fp = f(p);
        if fp == T::zero() {
            return Ok(p);
        }
        if (prev_f < T::zero()) != (fp < T::zero()) {
            return Ok(bisect(&f, prev_p, p, k));
        }
        prev_p = p;
        prev_f = fp;
    }
    Err(Error::NoBreakEven { lo, hi })
}

fn bisect<T: Real>(f: &impl Fn(T) -> T, mut a: T, mut b: T, k: T) -> T {
    let fa_neg = f(a) < T::zero();
    let tol = T::lit(1e-6).min(T::epsilon() * T::lit(64.0));
    let mut mid = (a + b) / T::lit(2.0);
    for _ in 0..200 {
        mid = (a + b) / T::lit(2.0);
        let fm = f(mid);
        if fm == T::zero() || (fm / (k * mid)).abs() < tol {
            break;
        }
        if (fm < T::zero()) == fa_neg {
            a = mid;
        } else {
            b = mid;
        }
    }
    mid
}
