//! Gaussian mixtures over gray levels and RGB colours, fitted by EM.
//!
//! The colour model drives background reconstruction: the heaviest
//! component is taken as the paper, the darkest as ink, and the background
//! component is resampled and smoothed to synthesize a clean page.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::{luma, ColorImage, GaussianBlur};

/// Lower bound on a 1-D component standard deviation (gray units).
pub const SIGMA_FLOOR: f64 = 1e-4;
/// Lower bound on every covariance eigenvalue of a colour component.
pub const LAMBDA_FLOOR: f64 = 1e-6;
pub const MAX_COMPONENTS: usize = 8;
/// Components whose mean luma exceeds this are scanner margin, not paper.
pub const SCANNER_WHITE_LUMA: f64 = 0.92;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Clone, Debug, PartialEq)]
pub struct EmConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the change of mean per-sample log-likelihood.
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { k: 4, seed: 0, max_iter: 200, tol: 1e-6 }
    }
}

/// Record of an EM run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmTrace {
    /// Number of M-steps performed.
    pub iterations: usize,
    /// Mean per-sample log-likelihood of the initial model and after every M-step.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    /// Set when some component hit the variance floor.
    pub floored: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component1 {
    pub prior: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gmm1D {
    pub components: Vec<Component1>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component3 {
    pub prior: f64,
    pub mean: [f64; 3],
    pub cov: [[f64; 3]; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gmm3D {
    pub components: Vec<Component3>,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_COMPONENTS {
        return Err(Error::Gmm(format!("component count must be in 1..={MAX_COMPONENTS}, got {k}")));
    }
    Ok(())
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Fill `resp` (n x k, row-major) with normalized responsibilities from
/// per-component log joint densities; returns the mean log-likelihood.
fn normalize_responsibilities(resp: &mut [f64], k: usize) -> f64 {
    let n = resp.len() / k;
    let mut total = 0.0;
    for row in resp.chunks_exact_mut(k) {
        let lse = log_sum_exp(row);
        total += lse;
        row.iter_mut().for_each(|r| *r = (*r - lse).exp());
    }
    total / n as f64
}

/// Sample indices for k-means++ seeding over points with a squared distance.
fn kmeanspp<P: Copy>(points: &[P], k: usize, rng: &mut ChaCha8Rng, d2: impl Fn(P, P) -> f64) -> Vec<P> {
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut dist: Vec<f64> = points.iter().map(|&p| d2(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            while dist[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[next];
        centers.push(c);
        for (d, &p) in dist.iter_mut().zip(points) {
            *d = d.min(d2(p, c));
        }
    }
    centers
}

fn distinct_count_at_least(mut keys: Vec<[u64; 3]>, k: usize) -> bool {
    keys.sort_unstable();
    keys.dedup();
    keys.len() >= k
}

impl Gmm1D {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    fn log_joint(&self, x: f64, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            let z = (x - c.mean) / c.std;
            *o = c.prior.ln() - 0.5 * LN_2PI - c.std.ln() - 0.5 * z * z;
        }
    }

    /// Mixture density `p(v)`.
    pub fn density(&self, x: f64) -> f64 {
        let mut lj = vec![0.0; self.k()];
        self.log_joint(x, &mut lj);
        log_sum_exp(&lj).exp()
    }

    /// Posterior component probabilities of one sample.
    pub fn responsibilities(&self, x: f64) -> Vec<f64> {
        let mut lj = vec![0.0; self.k()];
        self.log_joint(x, &mut lj);
        normalize_responsibilities(&mut lj, self.k());
        lj
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("gmm1d 1\nk {}\n", self.k());
        for c in &self.components {
            s.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", c.prior, c.mean, c.std));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        expect_header(lines.next(), "gmm1d")?;
        let k = parse_k(lines.next())?;
        let components = (0..k)
            .map(|i| {
                let v = parse_reals(lines.next(), 3, &format!("component {i}"))?;
                Ok(Component1 { prior: v[0], mean: v[1], std: v[2] })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }
}

/// Fit a univariate mixture to gray values in `[0, 1]`.
pub fn fit_em_1d(samples: &[f64], cfg: &EmConfig) -> Result<(Gmm1D, EmTrace)> {
    check_k(cfg.k)?;
    if samples.is_empty() {
        return Err(Error::Gmm("no samples".into()));
    }
    if let Some(bad) = samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Gmm(format!("sample {bad} outside [0,1]")));
    }
    let keys = samples.iter().map(|v| [v.to_bits(), 0, 0]).collect();
    if !distinct_count_at_least(keys, cfg.k) {
        return Err(Error::Gmm(format!("fewer distinct samples than components ({})", cfg.k)));
    }
    let n = samples.len();
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let means = kmeanspp(samples, k, &mut rng, |a, b| (a - b) * (a - b));
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let mut trace = EmTrace::default();
    let init_std = var.sqrt().max(SIGMA_FLOOR);
    trace.floored |= var.sqrt() < SIGMA_FLOOR;
    let mut model = Gmm1D {
        components: means
            .into_iter()
            .map(|m| Component1 { prior: 1.0 / k as f64, mean: m, std: init_std })
            .collect(),
    };

    let mut resp = vec![0.0; n * k];
    let e_step = |model: &Gmm1D, resp: &mut [f64]| {
        for (row, &x) in resp.chunks_exact_mut(k).zip(samples) {
            model.log_joint(x, row);
        }
        normalize_responsibilities(resp, k)
    };
    let mut ll = e_step(&model, &mut resp);
    trace.log_likelihood.push(ll);
    for _ in 0..cfg.max_iter {
        for (j, comp) in model.components.iter_mut().enumerate() {
            let nk: f64 = resp.iter().skip(j).step_by(k).sum();
            if nk <= f64::MIN_POSITIVE {
                comp.prior = 0.0;
                continue;
            }
            let mu = resp.iter().skip(j).step_by(k).zip(samples).map(|(r, x)| r * x).sum::<f64>() / nk;
            let var = resp
                .iter()
                .skip(j)
                .step_by(k)
                .zip(samples)
                .map(|(r, x)| r * (x - mu) * (x - mu))
                .sum::<f64>()
                / nk;
            let std = var.sqrt();
            if std < SIGMA_FLOOR {
                trace.floored = true;
            }
            *comp = Component1 { prior: nk / n as f64, mean: mu, std: std.max(SIGMA_FLOOR) };
        }
        trace.iterations += 1;
        let next = e_step(&model, &mut resp);
        trace.log_likelihood.push(next);
        if (next - ll).abs() < cfg.tol {
            trace.converged = true;
            break;
        }
        ll = next;
    }
    Ok((model, trace))
}

// ---------------------------------------------------------------------------
// 3x3 symmetric helpers

type Mat3 = [[f64; 3]; 3];

fn cholesky3(a: &Mat3) -> Option<Mat3> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 || !d.is_finite() {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Raise every eigenvalue below `LAMBDA_FLOOR` to the floor, keeping the
/// eigenvectors. This is the covariance maximizing the likelihood among those
/// with the floor as a lower spectral bound. Returns true when any eigenvalue
/// was raised.
fn regularize(cov: &mut Mat3) -> bool {
    let m = Matrix3::from_fn(|r, c| cov[r][c]);
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.min() >= LAMBDA_FLOOR && cholesky3(cov).is_some() {
        return false;
    }
    let clipped = eig.eigenvalues.map(|v| v.max(LAMBDA_FLOOR));
    let fixed = eig.eigenvectors * Matrix3::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    for r in 0..3 {
        for c in 0..3 {
            cov[r][c] = 0.5 * (fixed[(r, c)] + fixed[(c, r)]);
        }
    }
    true
}

#[derive(Clone, Debug)]
struct Prepared {
    log_norm: f64,
    chol: Mat3,
}

impl Component3 {
    fn prepare(&self) -> Prepared {
        let chol = cholesky3(&self.cov).expect("component covariance is positive definite");
        let log_det = 2.0 * (0..3).map(|i| chol[i][i].ln()).sum::<f64>();
        Prepared { log_norm: self.prior.ln() - 1.5 * LN_2PI - 0.5 * log_det, chol }
    }
}

fn mahalanobis2(p: &Prepared, mean: &[f64; 3], x: [f64; 3]) -> f64 {
    let l = &p.chol;
    let d = [x[0] - mean[0], x[1] - mean[1], x[2] - mean[2]];
    let z0 = d[0] / l[0][0];
    let z1 = (d[1] - l[1][0] * z0) / l[1][1];
    let z2 = (d[2] - l[2][0] * z0 - l[2][1] * z1) / l[2][2];
    z0 * z0 + z1 * z1 + z2 * z2
}

impl Gmm3D {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    fn prepared(&self) -> Vec<Prepared> {
        self.components.iter().map(Component3::prepare).collect()
    }

    fn log_joint(&self, prep: &[Prepared], x: [f64; 3], out: &mut [f64]) {
        for ((o, c), p) in out.iter_mut().zip(&self.components).zip(prep) {
            *o = p.log_norm - 0.5 * mahalanobis2(p, &c.mean, x);
        }
    }

    pub fn responsibilities(&self, x: [f64; 3]) -> Vec<f64> {
        let prep = self.prepared();
        let mut lj = vec![0.0; self.k()];
        self.log_joint(&prep, x, &mut lj);
        normalize_responsibilities(&mut lj, self.k());
        lj
    }

    /// Mean per-sample log-likelihood.
    pub fn mean_log_likelihood(&self, samples: &[[f64; 3]]) -> f64 {
        let prep = self.prepared();
        let mut lj = vec![0.0; self.k()];
        samples
            .iter()
            .map(|&x| {
                self.log_joint(&prep, x, &mut lj);
                log_sum_exp(&lj)
            })
            .sum::<f64>()
            / samples.len() as f64
    }

    /// Versioned plain-text form with 17 significant digits per value.
    pub fn to_text(&self) -> String {
        let mut s = format!("gmm3d 1\nk {}\n", self.k());
        for c in &self.components {
            let cov: Vec<String> = c.cov.iter().flatten().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&format!(
                "{:.16e} {:.16e} {:.16e} {:.16e} {}\n",
                c.prior,
                c.mean[0],
                c.mean[1],
                c.mean[2],
                cov.join(" ")
            ));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        expect_header(lines.next(), "gmm3d")?;
        let k = parse_k(lines.next())?;
        let components = (0..k)
            .map(|i| {
                let v = parse_reals(lines.next(), 13, &format!("component {i}"))?;
                let mut cov = [[0.0; 3]; 3];
                for r in 0..3 {
                    for c in 0..3 {
                        cov[r][c] = v[4 + 3 * r + c];
                    }
                }
                Ok(Component3 { prior: v[0], mean: [v[1], v[2], v[3]], cov })
            })
            .collect::<Result<Vec<_>>>()?;
        for c in &components {
            if cholesky3(&c.cov).is_none() {
                return Err(Error::Parse("covariance is not positive definite".into()));
            }
        }
        Ok(Self { components })
    }
}

fn expect_header(line: Option<&str>, kind: &str) -> Result<()> {
    match line.map(str::split_whitespace).map(|mut t| (t.next(), t.next())) {
        Some((Some(k), Some("1"))) if k == kind => Ok(()),
        _ => Err(Error::Parse(format!("expected header `{kind} 1`"))),
    }
}

fn parse_k(line: Option<&str>) -> Result<usize> {
    let k = line
        .and_then(|l| l.strip_prefix("k "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse("expected `k <count>`".into()))?;
    check_k(k)?;
    Ok(k)
}

fn parse_reals(line: Option<&str>, n: usize, what: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    let v = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{what}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != n {
        return Err(Error::Parse(format!("{what}: expected {n} values, found {}", v.len())));
    }
    Ok(v)
}

/// Fit a trivariate mixture to RGB samples in `[0, 1]^3`.
pub fn fit_em_3d(samples: &[[f64; 3]], cfg: &EmConfig) -> Result<(Gmm3D, EmTrace)> {
    check_k(cfg.k)?;
    if samples.is_empty() {
        return Err(Error::Gmm("no samples".into()));
    }
    if let Some(bad) = samples.iter().find(|p| p.iter().any(|v| !(0.0..=1.0).contains(v))) {
        return Err(Error::Gmm(format!("sample {bad:?} outside [0,1]^3")));
    }
    let keys = samples.iter().map(|p| p.map(f64::to_bits)).collect();
    if !distinct_count_at_least(keys, cfg.k) {
        return Err(Error::Gmm(format!("fewer distinct samples than components ({})", cfg.k)));
    }
    let n = samples.len();
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let means = kmeanspp(samples, k, &mut rng, |a, b| {
        (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
    });
    let mut trace = EmTrace::default();
    let mut mean = [0.0; 3];
    for p in samples {
        (0..3).for_each(|i| mean[i] += p[i]);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = scatter(samples.iter().map(|&p| (1.0, p)), mean, n as f64);
    trace.floored |= regularize(&mut cov);
    let mut model = Gmm3D {
        components: means
            .into_iter()
            .map(|m| Component3 { prior: 1.0 / k as f64, mean: m, cov })
            .collect(),
    };

    let mut resp = vec![0.0; n * k];
    let e_step = |model: &Gmm3D, resp: &mut [f64]| {
        let prep = model.prepared();
        for (row, &x) in resp.chunks_exact_mut(k).zip(samples) {
            model.log_joint(&prep, x, row);
        }
        normalize_responsibilities(resp, k)
    };
    let mut ll = e_step(&model, &mut resp);
    trace.log_likelihood.push(ll);
    for _ in 0..cfg.max_iter {
        for (j, comp) in model.components.iter_mut().enumerate() {
            let weights = || resp.iter().skip(j).step_by(k).copied();
            let nk: f64 = weights().sum();
            if nk <= f64::MIN_POSITIVE {
                comp.prior = 0.0;
                continue;
            }
            let mut mu = [0.0; 3];
            for (r, p) in weights().zip(samples) {
                (0..3).for_each(|i| mu[i] += r * p[i]);
            }
            mu.iter_mut().for_each(|m| *m /= nk);
            let mut cov = scatter(weights().zip(samples.iter().copied()), mu, nk);
            trace.floored |= regularize(&mut cov);
            *comp = Component3 { prior: nk / n as f64, mean: mu, cov };
        }
        trace.iterations += 1;
        let next = e_step(&model, &mut resp);
        trace.log_likelihood.push(next);
        if (next - ll).abs() < cfg.tol {
            trace.converged = true;
            break;
        }
        ll = next;
    }
    Ok((model, trace))
}

fn scatter(points: impl Iterator<Item = (f64, [f64; 3])>, mean: [f64; 3], norm: f64) -> Mat3 {
    let mut s = [[0.0; 3]; 3];
    for (w, p) in points {
        let d = [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]];
        for r in 0..3 {
            for c in r..3 {
                s[r][c] += w * d[r] * d[c];
            }
        }
    }
    for r in 0..3 {
        for c in r..3 {
            s[r][c] /= norm;
            s[c][r] = s[r][c];
        }
    }
    s
}

/// Uniform subsample without replacement, returned in original order.
pub fn subsample<T: Copy>(samples: &[T], cap: usize, seed: u64) -> Vec<T> {
    if samples.len() <= cap {
        return samples.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, samples.len(), cap).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| samples[i]).collect()
}

/// Label every pixel with its maximum posterior component (lowest index on ties).
pub fn assign_clusters(model: &Gmm3D, img: &ColorImage) -> Vec<usize> {
    let prep = model.prepared();
    let mut lj = vec![0.0; model.k()];
    img.pixels()
        .map(|p| {
            model.log_joint(&prep, p, &mut lj);
            let mut best = 0;
            for (i, &v) in lj.iter().enumerate() {
                if v > lj[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Semantic role of each colour component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterRoles {
    pub background: usize,
    pub text: usize,
    pub scanner_white: Option<usize>,
    pub noise: Vec<usize>,
}

/// Background is the heaviest component, text the darkest; a bright
/// non-background component is scanner margin; the rest is noise
/// (bleed-through and stains).
pub fn identify_roles(model: &Gmm3D) -> Result<ClusterRoles> {
    let k = model.k();
    if k < 2 {
        return Err(Error::Roles(format!("need at least 2 components, model has {k}")));
    }
    let lumas: Vec<f64> = model.components.iter().map(|c| luma(c.mean)).collect();
    let mut background = 0;
    let mut text = 0;
    for i in 1..k {
        if model.components[i].prior > model.components[background].prior {
            background = i;
        }
        if lumas[i] < lumas[text] {
            text = i;
        }
    }
    if background == text {
        return Err(Error::Roles(format!(
            "component {background} is both the most frequent and the darkest"
        )));
    }
    let scanner_white = (0..k)
        .filter(|&i| i != background && i != text && lumas[i] > SCANNER_WHITE_LUMA)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if lumas[b] >= lumas[i] => Some(b),
            _ => Some(i),
        });
    let noise = (0..k)
        .filter(|&i| i != background && i != text && Some(i) != scanner_white)
        .collect();
    Ok(ClusterRoles { background, text, scanner_white, noise })
}

/// Draw every pixel from the background component, clamp to the unit cube
/// and optionally smooth.
pub fn synthesize_background(
    model: &Gmm3D,
    roles: &ClusterRoles,
    width: usize,
    height: usize,
    seed: u64,
    blur_sigma: Option<f64>,
) -> Result<ColorImage> {
    let bg = model
        .components
        .get(roles.background)
        .ok_or_else(|| Error::Roles(format!("background index {} out of range", roles.background)))?;
    let l = cholesky3(&bg.cov).ok_or_else(|| Error::Gmm("background covariance not SPD".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(width * height * 3);
    for _ in 0..width * height {
        let z: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        for r in 0..3 {
            let v = bg.mean[r] + (0..=r).map(|c| l[r][c] * z[c]).sum::<f64>();
            data.push(v.clamp(0.0, 1.0));
        }
    }
    let img = ColorImage::new(width, height, data)?;
    match blur_sigma {
        Some(s) => img.gaussian_blur(s),
        None => Ok(img),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(prior: f64, mean: [f64; 3], var: f64) -> Component3 {
        Component3 { prior, mean, cov: [[var, 0.0, 0.0], [0.0, var, 0.0], [0.0, 0.0, var]] }
    }

    fn gray_model(priors: &[f64], lumas: &[f64]) -> Gmm3D {
        Gmm3D {
            components: priors
                .iter()
                .zip(lumas)
                .map(|(&p, &l)| iso(p, [l / 0.99; 3], 1e-3))
                .collect(),
        }
    }

    #[test]
    fn single_component_closed_form_1d() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 60.0).collect();
        let (m, trace) = fit_em_1d(&xs, &EmConfig { k: 1, ..Default::default() }).unwrap();
        let mean = xs.iter().sum::<f64>() / 50.0;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 50.0).sqrt();
        assert_eq!(m.k(), 1);
        assert!((m.components[0].prior - 1.0).abs() < 1e-12);
        assert!((m.components[0].mean - mean).abs() < 1e-12);
        assert!((m.components[0].std - std).abs() < 1e-12);
        assert!(trace.converged);
    }

    #[test]
    fn single_component_closed_form_3d() {
        let xs: Vec<[f64; 3]> = (0..40)
            .map(|i| [i as f64 / 40.0, ((i * 7) % 40) as f64 / 40.0, ((i * 13) % 40) as f64 / 50.0])
            .collect();
        let (m, _) = fit_em_3d(&xs, &EmConfig { k: 1, ..Default::default() }).unwrap();
        let mut mean = [0.0; 3];
        for p in &xs {
            (0..3).for_each(|i| mean[i] += p[i] / 40.0);
        }
        let c = &m.components[0];
        for i in 0..3 {
            assert!((c.mean[i] - mean[i]).abs() < 1e-12);
            for j in 0..3 {
                let s: f64 = xs.iter().map(|p| (p[i] - mean[i]) * (p[j] - mean[j])).sum::<f64>() / 40.0;
                assert!((c.cov[i][j] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn too_many_components_for_distinct_values() {
        let xs = vec![0.5; 100];
        assert!(fit_em_1d(&xs, &EmConfig { k: 2, ..Default::default() }).is_err());
        assert!(fit_em_1d(&[], &EmConfig::default()).is_err());
        assert!(fit_em_1d(&[0.1, 1.5], &EmConfig { k: 1, ..Default::default() }).is_err());
        assert!(fit_em_1d(&[0.1, 0.2], &EmConfig { k: 9, ..Default::default() }).is_err());
    }

    #[test]
    fn degenerate_component_is_floored_and_flagged() {
        let mut xs = vec![0.25; 60];
        xs.extend((0..40).map(|i| 0.6 + i as f64 / 200.0));
        let (m, trace) = fit_em_1d(&xs, &EmConfig { k: 2, seed: 3, ..Default::default() }).unwrap();
        assert!(trace.floored);
        assert!(m.components.iter().all(|c| c.std >= SIGMA_FLOOR));
    }

    #[test]
    fn roles_four_component_layout() {
        let m = gray_model(&[0.05, 0.55, 0.25, 0.15], &[0.95, 0.70, 0.15, 0.45]);
        let roles = identify_roles(&m).unwrap();
        assert_eq!(
            roles,
            ClusterRoles { background: 1, text: 2, scanner_white: Some(0), noise: vec![3] }
        );
    }

    #[test]
    fn roles_two_components_and_errors() {
        let m = gray_model(&[0.7, 0.3], &[0.8, 0.2]);
        let roles = identify_roles(&m).unwrap();
        assert_eq!((roles.background, roles.text), (0, 1));
        assert_eq!(roles.scanner_white, None);
        assert!(roles.noise.is_empty());
        let one = gray_model(&[1.0], &[0.5]);
        let err = identify_roles(&one).unwrap_err().to_string();
        assert!(err.contains("cannot separate text from background"), "{err}");
    }

    #[test]
    fn roles_stable_under_prior_rescaling() {
        let m = gray_model(&[0.05, 0.55, 0.25, 0.15], &[0.95, 0.70, 0.15, 0.45]);
        let mut scaled = m.clone();
        let total: f64 = scaled.components.iter().map(|c| c.prior * 3.7).sum();
        scaled.components.iter_mut().for_each(|c| c.prior = c.prior * 3.7 / total);
        assert_eq!(identify_roles(&m).unwrap(), identify_roles(&scaled).unwrap());
    }

    #[test]
    fn pixel_at_dominant_mean_gets_its_label() {
        let m = Gmm3D {
            components: vec![iso(0.3, [0.1, 0.1, 0.1], 1e-3), iso(0.7, [0.8, 0.7, 0.6], 1e-3)],
        };
        let img = ColorImage::from_fn(2, 1, |x, _| if x == 0 { [0.8, 0.7, 0.6] } else { [0.1, 0.1, 0.1] })
            .unwrap();
        assert_eq!(assign_clusters(&m, &img), vec![1, 0]);
        let single = Gmm3D { components: vec![iso(1.0, [0.5; 3], 1e-2)] };
        assert!(assign_clusters(&single, &img).iter().all(|&l| l == 0));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = Gmm3D {
            components: vec![
                Component3 {
                    prior: 0.1 + 0.2,
                    mean: [1.0 / 3.0, 0.7, 2f64.sqrt() / 2.0],
                    cov: [[0.02, 0.001, 0.0], [0.001, 0.03, 1e-5], [0.0, 1e-5, 0.01]],
                },
                iso(0.7, [0.9, 0.8, 0.7], 1.0 / 7.0),
            ],
        };
        assert_eq!(Gmm3D::from_text(&m.to_text()).unwrap(), m);
        let g = Gmm1D {
            components: vec![Component1 { prior: 1.0, mean: 0.1 + 0.2, std: 1.0 / 3.0 }],
        };
        assert_eq!(Gmm1D::from_text(&g.to_text()).unwrap(), g);
        assert!(Gmm3D::from_text("gmm3d 2\nk 1\n").is_err());
    }

    #[test]
    fn near_degenerate_background_is_nearly_constant() {
        let m = Gmm3D { components: vec![iso(0.6, [0.8, 0.7, 0.5], 2e-6), iso(0.4, [0.1; 3], 1e-3)] };
        let roles = ClusterRoles { background: 0, text: 1, scanner_white: None, noise: vec![] };
        let img = synthesize_background(&m, &roles, 16, 16, 1, None).unwrap();
        for p in img.pixels() {
            for c in 0..3 {
                assert!((p[c] - [0.8, 0.7, 0.5][c]).abs() < 0.01);
            }
        }
    }

    #[test]
    fn floor_clips_only_small_eigenvalues() {
        let mut c = [[2.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.0]];
        assert!(regularize(&mut c));
        assert_eq!(c[0][0], 2.0);
        assert_eq!(c[1][1], 0.5);
        assert!((c[2][2] - LAMBDA_FLOOR).abs() < 1e-15);
        let mut ok = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let before = ok;
        assert!(!regularize(&mut ok));
        assert_eq!(ok, before);
    }
}
