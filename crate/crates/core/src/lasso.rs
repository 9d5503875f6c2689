//! L1-penalized least squares by cyclic coordinate descent.
//!
//! The solver works on sufficient statistics. Features are standardized
//! within each fitting sample (population variance), the intercept is left
//! unpenalized, and the problem
//!
//! ```text
//! min_{b}  (1/2n) |y - ybar - Z b|^2 + lambda |b|_1
//! ```
//!
//! is solved with covariance updates: the gradient `g = c - C b` is kept
//! current, so a coordinate step costs one row of the correlation matrix.
//! Reported weights are mapped back to the original feature scale.
//!
//! Row sums are accumulated as prefix sums with periodic checkpoints, which
//! makes the many nested samples of cross-validation and expanding windows
//! cheap: any contiguous block of rows is a difference of two prefixes.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::calendar::Window;
use crate::error::{Error, Result};

/// How the final penalty is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum PenaltyRule {
    /// Cross-validated penalty plus a fixed increment.
    CvPlus { extra: f64 },
    /// Cross-validated penalty as is.
    Cv,
    /// Fixed penalty, no cross-validation.
    Fixed { lambda: f64 },
}

impl Default for PenaltyRule {
    fn default() -> Self {
        PenaltyRule::CvPlus { extra: 1e-5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoConfig {
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    pub folds: usize,
    pub penalty: PenaltyRule,
    /// Convergence threshold on the largest coordinate change in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    pub min_obs: usize,
    /// Cross-validation stops after this many consecutive penalties without a
    /// new minimum of the mean validation error; 0 evaluates the whole grid.
    pub cv_patience: usize,
    /// Convergence threshold for the cross-validation path fits.
    pub cv_tol: f64,
    /// Keep the objective value after every sweep of the final fit.
    pub record_objective: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            n_lambda: 100,
            lambda_min_ratio: 1e-4,
            folds: 5,
            penalty: PenaltyRule::default(),
            tol: 1e-9,
            max_sweeps: 10_000,
            min_obs: 24,
            cv_patience: 10,
            cv_tol: 1e-6,
            record_objective: false,
        }
    }
}

impl LassoConfig {
    pub fn fixed(lambda: f64) -> Self {
        LassoConfig {
            penalty: PenaltyRule::Fixed { lambda },
            ..Default::default()
        }
    }
}

/// Result of one lasso fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    /// Weights on the original feature scale; zero for dropped features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Cross-validated penalty before any increment, when CV ran.
    pub lambda_cv: Option<f64>,
    /// Indices with nonzero weight.
    pub selected: Vec<usize>,
    /// Constant features left out of the fit.
    pub dropped: Vec<usize>,
    pub window: Option<Window>,
    pub n_obs: usize,
    /// Per-feature sample mean and standard deviation used for scaling.
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    #[serde(skip)]
    pub objective_history: Vec<f64>,
}

impl LassoFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut acc = self.intercept;
        for (w, v) in self.weights.iter().zip(x) {
            acc += w * v;
        }
        acc
    }

    pub fn n_positive(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    pub fn n_negative(&self) -> usize {
        self.weights.iter().filter(|w| **w < 0.0).count()
    }

    /// Largest violation of the optimality conditions on the given data, in
    /// standardized units.
    pub fn kkt_violation(&self, x: &[f64], p: usize, y: &[f64]) -> f64 {
        let n = y.len();
        let resid: Vec<f64> = (0..n).map(|i| y[i] - self.predict(&x[i * p..(i + 1) * p])).collect();
        let mut worst: f64 = 0.0;
        for j in 0..p {
            if self.dropped.contains(&j) {
                continue;
            }
            let grad = (0..n)
                .map(|i| (x[i * p + j] - self.means[j]) / self.scales[j] * resid[i])
                .sum::<f64>()
                / n as f64;
            let b = self.weights[j] * self.scales[j];
            let v = if b == 0.0 {
                (grad.abs() - self.lambda).max(0.0)
            } else {
                (grad - self.lambda * b.signum()).abs()
            };
            worst = worst.max(v);
        }
        worst
    }
}

fn tri_offset(i: usize, p: usize) -> usize {
    i * p - i * i.saturating_sub(1) / 2
}

/// Shifted row sums over a block of rows.
#[derive(Debug, Clone, PartialEq)]
struct Moments {
    n: usize,
    sx: Vec<f64>,
    sy: f64,
    /// Upper triangle, row-major.
    sxx: Vec<f64>,
    sxy: Vec<f64>,
    syy: f64,
}

impl Moments {
    fn zeros(p: usize) -> Self {
        Moments {
            n: 0,
            sx: vec![0.0; p],
            sy: 0.0,
            sxx: vec![0.0; p * (p + 1) / 2],
            sxy: vec![0.0; p],
            syy: 0.0,
        }
    }

    fn add_row(&mut self, v: &[f64], u: f64) {
        let p = v.len();
        self.n += 1;
        self.sy += u;
        self.syy += u * u;
        let mut off = 0;
        for i in 0..p {
            let vi = v[i];
            self.sx[i] += vi;
            self.sxy[i] += vi * u;
            let row = &mut self.sxx[off..off + p - i];
            for (s, vj) in row.iter_mut().zip(&v[i..]) {
                *s += vi * vj;
            }
            off += p - i;
        }
    }

    fn sub(&self, other: &Moments) -> Moments {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Moments {
            n: self.n - other.n,
            sx: d(&self.sx, &other.sx),
            sy: self.sy - other.sy,
            sxx: d(&self.sxx, &other.sxx),
            sxy: d(&self.sxy, &other.sxy),
            syy: self.syy - other.syy,
        }
    }

    fn add_assign(&mut self, other: &Moments) {
        self.n += other.n;
        self.sy += other.sy;
        self.syy += other.syy;
        for (a, b) in self.sx.iter_mut().zip(&other.sx) {
            *a += b;
        }
        for (a, b) in self.sxx.iter_mut().zip(&other.sxx) {
            *a += b;
        }
        for (a, b) in self.sxy.iter_mut().zip(&other.sxy) {
            *a += b;
        }
    }
}

/// Design matrix with prefix sums for fast block statistics.
///
/// Sums are shifted by the first row, so statistics of rows `0..r` depend
/// only on those rows.
#[derive(Debug, Clone)]
pub struct LassoDesign {
    x: Vec<f64>,
    y: Vec<f64>,
    p: usize,
    shift_x: Vec<f64>,
    shift_y: f64,
    every: usize,
    checkpoints: Vec<Moments>,
}

const CHECKPOINT_EVERY: usize = 8;

impl LassoDesign {
    /// `x` is row-major `n x p`.
    pub fn new(x: Vec<f64>, p: usize, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if x.len() != n * p {
            return Err(Error::Validation(format!("design has {} cells, expected {n}x{p}", x.len())));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature value at row {}", i / p.max(1))));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("target value at row {i}")));
        }
        let (shift_x, shift_y) = if n > 0 { (x[..p].to_vec(), y[0]) } else { (vec![0.0; p], 0.0) };
        let mut checkpoints = vec![Moments::zeros(p)];
        let mut acc = Moments::zeros(p);
        let mut v = vec![0.0; p];
        for i in 0..n {
            for j in 0..p {
                v[j] = x[i * p + j] - shift_x[j];
            }
            acc.add_row(&v, y[i] - shift_y);
            if (i + 1) % CHECKPOINT_EVERY == 0 {
                checkpoints.push(acc.clone());
            }
        }
        Ok(LassoDesign {
            x,
            y,
            p,
            shift_x,
            shift_y,
            every: CHECKPOINT_EVERY,
            checkpoints,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    fn prefix(&self, r: usize) -> Moments {
        let c = r / self.every;
        let mut m = self.checkpoints[c].clone();
        let mut tail = Moments::zeros(self.p);
        let mut v = vec![0.0; self.p];
        for i in c * self.every..r {
            for j in 0..self.p {
                v[j] = self.x[i * self.p + j] - self.shift_x[j];
            }
            tail.add_row(&v, self.y[i] - self.shift_y);
        }
        m.add_assign(&tail);
        m
    }

    fn range(&self, a: usize, b: usize) -> Moments {
        if a == 0 {
            self.prefix(b)
        } else {
            self.prefix(b).sub(&self.prefix(a))
        }
    }

    /// Fits on the first `n` rows.
    pub fn fit_first(&self, n: usize, cfg: &LassoConfig) -> Result<LassoFit> {
        self.fit_warm(n, cfg, None)
    }

    /// Fits on the first `counts[0]`, `counts[1]`, ... rows in turn, starting
    /// each fit from the solutions of the previous one.
    pub fn fit_sequence(&self, counts: &[usize], cfg: &LassoConfig) -> Result<Vec<LassoFit>> {
        let mut warm = WarmStart::default();
        counts.iter().map(|&n| self.fit_warm(n, cfg, Some(&mut warm))).collect()
    }

    fn fit_warm(&self, n: usize, cfg: &LassoConfig, mut warm: Option<&mut WarmStart>) -> Result<LassoFit> {
        if n > self.n_rows() {
            return Err(Error::Validation(format!("asked for {n} rows of {}", self.n_rows())));
        }
        if n < cfg.min_obs.max(2) {
            return Err(Error::InsufficientData {
                what: "lasso fit".into(),
                needed: cfg.min_obs.max(2),
                got: n,
            });
        }
        let total = self.prefix(n);
        let full = Problem::new(&total, &self.shift_x, self.shift_y);
        let grid = lambda_grid(full.lambda_max(), cfg);

        let (lambda, lambda_cv) = match cfg.penalty {
            PenaltyRule::Fixed { lambda } => (lambda, None),
            PenaltyRule::Cv | PenaltyRule::CvPlus { .. } => {
                let cv = self.cross_validate(n, &total, &grid, cfg, warm.as_deref_mut())?;
                let extra = match cfg.penalty {
                    PenaltyRule::CvPlus { extra } => extra,
                    _ => 0.0,
                };
                (cv + extra, Some(cv))
            }
        };
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Validation(format!("invalid penalty {lambda}")));
        }

        let mut sweeps = 0;
        let mut state = match warm.as_deref().and_then(|w| w.full.as_deref()) {
            Some(b) => full.state_from(b),
            None => {
                let mut state = full.start();
                for &l in grid.iter().filter(|&&l| l > lambda) {
                    sweeps += full.solve(l, &mut state, cfg, None).0;
                }
                state
            }
        };
        let mut history = Vec::new();
        let (s, converged) = full.solve(lambda, &mut state, cfg, cfg.record_objective.then_some(&mut history));
        sweeps += s;
        if let Some(w) = warm {
            w.full = Some(full.to_full(&state.b));
        }
        if !converged {
            warn!("lasso did not converge in {} sweeps at lambda {lambda:e}", cfg.max_sweeps);
        }
        let (weights, intercept) = full.original_scale(&state.b);
        let mut scales = vec![0.0; self.p];
        for (k, &j) in full.idx.iter().enumerate() {
            scales[j] = full.sd[k];
        }
        let dropped: Vec<usize> = (0..self.p).filter(|j| !full.idx.contains(j)).collect();
        if !dropped.is_empty() {
            warn!("{} constant feature(s) dropped from lasso fit", dropped.len());
        }
        Ok(LassoFit {
            selected: (0..self.p).filter(|&j| weights[j] != 0.0).collect(),
            weights,
            intercept,
            lambda,
            lambda_cv,
            dropped,
            window: None,
            n_obs: n,
            means: full.mean_x.clone(),
            scales,
            sweeps,
            converged,
            objective_history: history,
        })
    }

    /// Contiguous-block cross-validation over the first `n` rows. Returns the
    /// penalty with the smallest mean validation error; ties go to the larger
    /// penalty.
    ///
    /// Folds walk the grid together. A fold whose training fit has saturated
    /// keeps its last solution for the remaining penalties, and the walk ends
    /// once `cv_patience` penalties pass without a new minimum.
    fn cross_validate(
        &self,
        n: usize,
        total: &Moments,
        grid: &[f64],
        cfg: &LassoConfig,
        mut warm: Option<&mut WarmStart>,
    ) -> Result<f64> {
        let k = cfg.folds;
        if k < 2 || n < 2 * k {
            return Err(Error::InsufficientData {
                what: format!("{k}-fold cross-validation"),
                needed: 2 * k.max(2),
                got: n,
            });
        }
        struct Fold {
            block: Moments,
            prob: Problem,
            state: State,
            prev_ratio: f64,
            last: f64,
            done: bool,
        }
        let mut folds: Vec<Fold> = (0..k)
            .map(|f| {
                let block = self.range(f * n / k, (f + 1) * n / k);
                let prob = Problem::new(&total.sub(&block), &self.shift_x, self.shift_y);
                let state = prob.start();
                Fold {
                    block,
                    prob,
                    state,
                    prev_ratio: 0.0,
                    last: f64::NAN,
                    done: false,
                }
            })
            .collect();
        if let Some(w) = warm.as_deref_mut() {
            w.folds.resize(k, Vec::new());
        }
        let cv_cfg = LassoConfig { tol: cfg.cv_tol, ..*cfg };
        let mut best = (0, f64::INFINITY);
        for (i, &l) in grid.iter().enumerate() {
            let mut mse = 0.0;
            for (f, fold) in folds.iter_mut().enumerate() {
                if !fold.done && i > 0 && fold.prob.saturated(&fold.state, fold.prev_ratio) {
                    fold.done = true;
                }
                if !fold.done {
                    fold.prev_ratio = fold.prob.deviance_ratio(&fold.state);
                    if let Some(b) = warm.as_deref().and_then(|w| w.folds[f].get(i)) {
                        fold.state = fold.prob.state_from(b);
                    }
                    fold.prob.solve(l, &mut fold.state, &cv_cfg, None);
                    if let Some(w) = warm.as_deref_mut() {
                        if w.folds[f].len() <= i {
                            w.folds[f].push(Vec::new());
                        }
                        fold.prob.write_full(&fold.state.b, &mut w.folds[f][i]);
                    }
                    let (w, alpha) = fold.prob.original_scale(&fold.state.b);
                    fold.last = block_sse(&fold.block, &w, alpha, &self.shift_x, self.shift_y) / fold.block.n as f64;
                }
                mse += fold.last / k as f64;
            }
            if mse < best.1 {
                best = (i, mse);
            } else if cfg.cv_patience > 0 && i - best.0 >= cfg.cv_patience {
                break;
            }
        }
        Ok(grid[best.0])
    }
}

/// Solutions kept between nested fits, in original feature order.
#[derive(Debug, Clone, Default)]
struct WarmStart {
    /// Per fold, the standardized solution at each grid index.
    folds: Vec<Vec<Vec<f64>>>,
    full: Option<Vec<f64>>,
}

/// Fits on all rows of a row-major design.
pub fn fit_lasso(x: &[f64], p: usize, y: &[f64], cfg: &LassoConfig) -> Result<LassoFit> {
    let d = LassoDesign::new(x.to_vec(), p, y.to_vec())?;
    d.fit_first(y.len(), cfg)
}

/// `n_lambda` log-spaced penalties from `lambda_max` down.
pub fn lambda_grid(lambda_max: f64, cfg: &LassoConfig) -> Vec<f64> {
    let n = cfg.n_lambda.max(1);
    if lambda_max <= 0.0 {
        return vec![0.0];
    }
    if n == 1 {
        return vec![lambda_max];
    }
    let lr = cfg.lambda_min_ratio.ln();
    (0..n)
        .map(|i| lambda_max * (lr * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Sum of squared prediction errors over a block, from its moments.
fn block_sse(block: &Moments, w: &[f64], alpha: f64, shift_x: &[f64], shift_y: f64) -> f64 {
    let p = w.len();
    let active: Vec<usize> = (0..p).filter(|&j| w[j] != 0.0).collect();
    let a = alpha + active.iter().map(|&j| w[j] * shift_x[j]).sum::<f64>() - shift_y;
    let wsv: f64 = active.iter().map(|&j| w[j] * block.sx[j]).sum();
    let wsvu: f64 = active.iter().map(|&j| w[j] * block.sxy[j]).sum();
    let mut quad = 0.0;
    for (ai, &i) in active.iter().enumerate() {
        let off = tri_offset(i, p);
        quad += w[i] * w[i] * block.sxx[off];
        for &j in &active[ai + 1..] {
            quad += 2.0 * w[i] * w[j] * block.sxx[off + j - i];
        }
    }
    let n = block.n as f64;
    (n * a * a + 2.0 * a * (wsv - block.sy) + quad - 2.0 * wsvu + block.syy).max(0.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower Cholesky factor of a symmetric positive definite matrix, stored
/// row-major with a fixed stride so rows and columns can be removed in place.
struct Cholesky {
    l: Vec<f64>,
    stride: usize,
    n: usize,
}

impl Cholesky {
    /// Loads the lower triangle of an `n x n` matrix.
    fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut l = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..=r {
                l[r * n + c] = f(r, c);
            }
        }
        Cholesky { l, stride: n, n }
    }

    fn factor(&mut self) -> bool {
        let s = self.stride;
        for j in 0..self.n {
            let (head, tail) = self.l.split_at_mut((j + 1) * s);
            let rj = &mut head[j * s..j * s + j + 1];
            let d = rj[j] - dot(&rj[..j], &rj[..j]);
            if !(d > 1e-12) {
                return false;
            }
            let d = d.sqrt();
            rj[j] = d;
            for ri in tail.chunks_exact_mut(s).take(self.n - j - 1) {
                ri[j] = (ri[j] - dot(&ri[..j], &rj[..j])) / d;
            }
        }
        true
    }

    /// Overwrites `rhs` with the solution of `L L' x = rhs`.
    fn solve(&self, rhs: &mut [f64]) -> bool {
        let (s, n) = (self.stride, self.n);
        for i in 0..n {
            let row = &self.l[i * s..i * s + i + 1];
            rhs[i] = (rhs[i] - dot(&row[..i], &rhs[..i])) / row[i];
        }
        for i in (0..n).rev() {
            let row = &self.l[i * s..i * s + i + 1];
            rhs[i] /= row[i];
            let v = rhs[i];
            for (r, l) in rhs[..i].iter_mut().zip(&row[..i]) {
                *r -= l * v;
            }
        }
        rhs[..n].iter().all(|v| v.is_finite())
    }

    /// Updates the factor after deleting row and column `r` of the matrix.
    fn remove(&mut self, r: usize) {
        let (s, l) = (self.stride, &mut self.l);
        for i in r..self.n - 1 {
            for q in 0..=i + 1 {
                l[i * s + q] = l[(i + 1) * s + q];
            }
        }
        self.n -= 1;
        let n = self.n;
        for j in r..n {
            let (a, b) = (l[j * s + j], l[j * s + j + 1]);
            let h = a.hypot(b);
            let (c, sn) = (a / h, b / h);
            for i in j..n {
                let (x, y) = (l[i * s + j], l[i * s + j + 1]);
                l[i * s + j] = c * x + sn * y;
                l[i * s + j + 1] = c * y - sn * x;
            }
        }
    }
}

/// Standardized problem built from moments.
struct Problem {
    /// Indices of non-constant features.
    idx: Vec<usize>,
    mean_x: Vec<f64>,
    mean_y: f64,
    sd: Vec<f64>,
    var_y: f64,
    c: Vec<f64>,
    /// Dense `m x m` correlation matrix.
    corr: Vec<f64>,
}

struct State {
    b: Vec<f64>,
    g: Vec<f64>,
}

fn soft(z: f64, l: f64) -> f64 {
    if z > l {
        z - l
    } else if z < -l {
        z + l
    } else {
        0.0
    }
}

impl Problem {
    fn new(m: &Moments, shift_x: &[f64], shift_y: f64) -> Self {
        let p = shift_x.len();
        let n = m.n as f64;
        let mx: Vec<f64> = m.sx.iter().map(|s| s / n).collect();
        let my = m.sy / n;
        let var = |j: usize| m.sxx[tri_offset(j, p)] / n - mx[j] * mx[j];
        let mean_x: Vec<f64> = (0..p).map(|j| shift_x[j] + mx[j]).collect();
        let idx: Vec<usize> = (0..p)
            .filter(|&j| {
                let v = var(j);
                v > 1e-13 * mean_x[j] * mean_x[j] && v > 1e-300
            })
            .collect();
        let sd: Vec<f64> = idx.iter().map(|&j| var(j).sqrt()).collect();
        let var_y = (m.syy / n - my * my).max(0.0);
        let c: Vec<f64> = idx
            .iter()
            .zip(&sd)
            .map(|(&j, s)| (m.sxy[j] / n - mx[j] * my) / s)
            .collect();
        let k = idx.len();
        let mut corr = vec![0.0; k * k];
        for a in 0..k {
            corr[a * k + a] = 1.0;
            let i = idx[a];
            let off = tri_offset(i, p);
            for b in a + 1..k {
                let j = idx[b];
                let v = (m.sxx[off + j - i] / n - mx[i] * mx[j]) / (sd[a] * sd[b]);
                corr[a * k + b] = v;
                corr[b * k + a] = v;
            }
        }
        Problem {
            idx,
            mean_x,
            mean_y: shift_y + my,
            sd,
            var_y,
            c,
            corr,
        }
    }

    fn lambda_max(&self) -> f64 {
        self.c.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn state_from(&self, b_full: &[f64]) -> State {
        let mut st = State {
            b: self.idx.iter().map(|&j| b_full[j]).collect(),
            g: vec![0.0; self.idx.len()],
        };
        self.refresh_gradient(&mut st);
        st
    }

    fn to_full(&self, b: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        self.write_full(b, &mut out);
        out
    }

    fn write_full(&self, b: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.mean_x.len(), 0.0);
        for (a, &j) in self.idx.iter().enumerate() {
            out[j] = b[a];
        }
    }

    fn start(&self) -> State {
        State {
            b: vec![0.0; self.idx.len()],
            g: self.c.clone(),
        }
    }

    fn objective(&self, b: &[f64], lambda: f64) -> f64 {
        let k = b.len();
        let mut quad = 0.0;
        let mut lin = 0.0;
        let mut l1 = 0.0;
        for a in 0..k {
            if b[a] == 0.0 {
                continue;
            }
            lin += b[a] * self.c[a];
            l1 += b[a].abs();
            let row = &self.corr[a * k..(a + 1) * k];
            quad += b[a] * row.iter().zip(b).map(|(r, v)| r * v).sum::<f64>();
        }
        0.5 * (self.var_y - 2.0 * lin + quad) + lambda * l1
    }

    /// Fraction of target variance explained, from the cached gradient.
    fn deviance_ratio(&self, st: &State) -> f64 {
        if self.var_y <= 0.0 {
            return 1.0;
        }
        let fit: f64 = st.b.iter().zip(self.c.iter().zip(&st.g)).map(|(b, (c, g))| b * (c + g)).sum();
        fit / self.var_y
    }

    /// Path stopping rule: near-perfect fit, or explained variance that grew
    /// by a relative 1e-5 or less since the previous penalty.
    fn saturated(&self, st: &State, prev_ratio: f64) -> bool {
        let r = self.deviance_ratio(st);
        r > 0.999 || (r > 0.0 && r - prev_ratio < 1e-5 * r)
    }

    fn refresh_gradient(&self, st: &mut State) {
        let k = st.b.len();
        st.g.copy_from_slice(&self.c);
        for (a, &b) in st.b.iter().enumerate() {
            if b != 0.0 {
                let row = &self.corr[a * k..(a + 1) * k];
                for (g, r) in st.g.iter_mut().zip(row) {
                    *g -= r * b;
                }
            }
        }
    }

    fn kkt(&self, st: &State, lambda: f64) -> f64 {
        st.b.iter()
            .zip(&st.g)
            .map(|(b, g)| {
                if *b == 0.0 {
                    (g.abs() - lambda).max(0.0)
                } else {
                    (g - lambda * b.signum()).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    fn update(&self, st: &mut State, a: usize, lambda: f64) -> f64 {
        let k = st.b.len();
        let old = st.b[a];
        let new = soft(st.g[a] + old, lambda);
        if new == old {
            return 0.0;
        }
        let delta = new - old;
        st.b[a] = new;
        let row = &self.corr[a * k..(a + 1) * k];
        for (g, r) in st.g.iter_mut().zip(row) {
            *g -= r * delta;
        }
        delta.abs()
    }

    /// Coordinate descent at one penalty, warm-started from `st`.
    fn solve(&self, lambda: f64, st: &mut State, cfg: &LassoConfig, mut history: Option<&mut Vec<f64>>) -> (usize, bool) {
        // Active-set sweeps before trying the exact step.
        const EXACT_AFTER: usize = 1;
        let kkt_tol = 1e-2 * cfg.tol;
        let k = st.b.len();
        if let Some(h) = history.as_deref_mut() {
            h.push(self.objective(&st.b, lambda));
        }
        let mut sweeps = 0;
        'outer: loop {
            let mut d: f64 = 0.0;
            for a in 0..k {
                d = d.max(self.update(st, a, lambda));
            }
            sweeps += 1;
            if let Some(h) = history.as_deref_mut() {
                h.push(self.objective(&st.b, lambda));
            }
            if d < cfg.tol {
                self.refresh_gradient(st);
                if d == 0.0 || self.kkt(st, lambda) <= kkt_tol {
                    return (sweeps, true);
                }
                if sweeps >= cfg.max_sweeps {
                    return (sweeps, false);
                }
                continue;
            }
            if sweeps >= cfg.max_sweeps {
                return (sweeps, false);
            }
            let active: Vec<usize> = (0..k).filter(|&a| st.b[a] != 0.0).collect();
            let mut inner = 0;
            loop {
                let mut d: f64 = 0.0;
                for &a in &active {
                    d = d.max(self.update(st, a, lambda));
                }
                sweeps += 1;
                inner += 1;
                if let Some(h) = history.as_deref_mut() {
                    h.push(self.objective(&st.b, lambda));
                }
                if d < cfg.tol || sweeps >= cfg.max_sweeps {
                    break;
                }
                if inner == EXACT_AFTER {
                    let exact = self.solve_active(st, &active, lambda);
                    if let Some(h) = history.as_deref_mut() {
                        h.push(self.objective(&st.b, lambda));
                    }
                    if exact {
                        if self.kkt(st, lambda) <= kkt_tol {
                            return (sweeps, true);
                        }
                        continue 'outer;
                    }
                }
            }
            if sweeps >= cfg.max_sweeps {
                return (sweeps, false);
            }
        }
    }

    /// Active-set step: solves the stationarity equations on `active` with
    /// the current signs held fixed. When a coefficient would change sign the
    /// iterate moves toward the solution only up to the first zero crossing,
    /// that coordinate leaves the set, and the system is solved again. The
    /// objective never increases. Returns false if the system is not positive
    /// definite, leaving `st` at the last accepted point.
    fn solve_active(&self, st: &mut State, active: &[usize], lambda: f64) -> bool {
        let k = st.b.len();
        let mut act = active.to_vec();
        if act.is_empty() {
            return false;
        }
        let mut chol = Cholesky::from_fn(act.len(), |r, c| self.corr[act[r] * k + act[c]]);
        if !chol.factor() {
            return false;
        }
        let mut x = Vec::with_capacity(act.len());
        let accepted = loop {
            if act.is_empty() {
                break true;
            }
            x.clear();
            x.extend(act.iter().map(|&a| self.c[a] - lambda * st.b[a].signum()));
            if !chol.solve(&mut x) {
                break false;
            }
            let crossing = |b: f64, v: f64| (v == 0.0 || v.signum() != b.signum()).then(|| b / (b - v));
            let t = act
                .iter()
                .zip(&x)
                .filter_map(|(&a, &v)| crossing(st.b[a], v))
                .fold(1.0, f64::min);
            if t >= 1.0 {
                for (&a, &v) in act.iter().zip(&x) {
                    st.b[a] = v;
                }
                break true;
            }
            let mut drop = Vec::new();
            for (r, (&a, &v)) in act.iter().zip(&x).enumerate() {
                let b = st.b[a];
                if crossing(b, v).is_some_and(|tc| tc <= t) {
                    st.b[a] = 0.0;
                    drop.push(r);
                } else {
                    st.b[a] = b + t * (v - b);
                }
            }
            for &r in drop.iter().rev() {
                act.remove(r);
                chol.remove(r);
            }
        };
        self.refresh_gradient(st);
        accepted
    }

    /// Weights and intercept on the original scale.
    fn original_scale(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let p = self.mean_x.len();
        let mut w = vec![0.0; p];
        let mut alpha = self.mean_y;
        for (a, &j) in self.idx.iter().enumerate() {
            if b[a] != 0.0 {
                w[j] = b[a] / self.sd[a];
                alpha -= w[j] * self.mean_x[j];
            }
        }
        (w, alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_design(seed: u64, n: usize, p: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 * x[i * p] - 1.5 * x[i * p + 1] + 0.3 * rng.gen_range(-1.0..1.0) + 4.0)
            .collect();
        (x, y)
    }

    fn spd(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn cholesky_remove_matches_refactor() {
        let n = 7;
        let a = spd(11, n);
        for r in 0..n {
            let mut down = Cholesky::from_fn(n, |i, j| a[i * n + j]);
            assert!(down.factor());
            down.remove(r);
            let keep: Vec<usize> = (0..n).filter(|&i| i != r).collect();
            let mut fresh = Cholesky::from_fn(n - 1, |i, j| a[keep[i] * n + keep[j]]);
            assert!(fresh.factor());
            let rhs: Vec<f64> = (0..n - 1).map(|i| 1.0 + i as f64).collect();
            let (mut x1, mut x2) = (rhs.clone(), rhs);
            assert!(down.solve(&mut x1) && fresh.solve(&mut x2));
            for (u, v) in x1.iter().zip(&x2) {
                assert!((u - v).abs() < 1e-10 * v.abs().max(1.0), "r={r}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let mut c = Cholesky::from_fn(2, |_, _| 1.0);
        assert!(!c.factor());
    }

    #[test]
    fn offsets() {
        let p = 4;
        let mut expected = 0;
        for i in 0..p {
            assert_eq!(tri_offset(i, p), expected);
            expected += p - i;
        }
    }

    #[test]
    fn full_shrinkage_above_lambda_max() {
        let (x, y) = random_design(1, 60, 5);
        let fit = fit_lasso(&x, 5, &y, &LassoConfig::fixed(1e6)).unwrap();
        assert!(fit.selected.is_empty());
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        assert!((fit.intercept - ybar).abs() < 1e-12);
    }

    #[test]
    fn ols_limit_single_feature() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 3.0 * v + 0.1 * (i as f64).cos()).collect();
        let fit = fit_lasso(&x, 1, &y, &LassoConfig::fixed(0.0)).unwrap();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let var: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        assert!((fit.weights[0] - cov / var).abs() < 1e-10);
    }

    #[test]
    fn kkt_and_monotone_objective() {
        let (x, y) = random_design(7, 80, 12);
        for lambda in [0.5, 0.1, 0.01, 0.0] {
            let cfg = LassoConfig {
                record_objective: true,
                ..LassoConfig::fixed(lambda)
            };
            let fit = fit_lasso(&x, 12, &y, &cfg).unwrap();
            assert!(fit.converged);
            assert!(fit.kkt_violation(&x, 12, &y) < 1e-8, "lambda {lambda}");
            let h = &fit.objective_history;
            assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-15 * w[0].abs().max(1.0)), "{h:?}");
        }
    }

    #[test]
    fn cross_validation_keeps_signal() {
        let (x, y) = random_design(3, 120, 10);
        let fit = fit_lasso(&x, 10, &y, &LassoConfig::default()).unwrap();
        assert!(fit.selected.contains(&0) && fit.selected.contains(&1));
        assert!(fit.weights[0] > 0.0 && fit.weights[1] < 0.0);
        assert_eq!(fit.lambda, fit.lambda_cv.unwrap() + 1e-5);
        assert!(fit.kkt_violation(&x, 10, &y) < 1e-8);
    }

    #[test]
    fn constant_feature_dropped() {
        let (mut x, y) = random_design(5, 40, 3);
        for i in 0..40 {
            x[i * 3 + 2] = 0.25;
        }
        let fit = fit_lasso(&x, 3, &y, &LassoConfig::fixed(0.01)).unwrap();
        assert_eq!(fit.dropped, vec![2]);
        assert_eq!(fit.weights[2], 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        let (mut x, y) = random_design(5, 40, 3);
        x[7] = f64::NAN;
        assert!(matches!(fit_lasso(&x, 3, &y, &LassoConfig::default()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn too_few_rows() {
        let (x, y) = random_design(5, 10, 3);
        assert!(matches!(
            fit_lasso(&x, 3, &y, &LassoConfig::default()),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn prefix_matches_direct_sums() {
        let (x, y) = random_design(11, 37, 4);
        let d = LassoDesign::new(x.clone(), 4, y.clone()).unwrap();
        let direct = LassoDesign::new(x[..29 * 4].to_vec(), 4, y[..29].to_vec()).unwrap();
        let a = d.fit_first(29, &LassoConfig::fixed(0.05)).unwrap();
        let b = direct.fit_first(29, &LassoConfig::fixed(0.05)).unwrap();
        for (u, v) in a.weights.iter().zip(&b.weights) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn block_sse_matches_direct() {
        let (x, y) = random_design(13, 30, 3);
        let d = LassoDesign::new(x.clone(), 3, y.clone()).unwrap();
        let block = d.range(10, 22);
        let w = [0.7, 0.0, -1.2];
        let alpha = 0.4;
        let direct: f64 = (10..22)
            .map(|i| {
                let pred = alpha + (0..3).map(|j| w[j] * x[i * 3 + j]).sum::<f64>();
                (pred - y[i]).powi(2)
            })
            .sum();
        let got = block_sse(&block, &w, alpha, &d.shift_x, d.shift_y);
        assert!((got - direct).abs() < 1e-10 * direct.max(1.0));
    }
}
