//! Exact evaluation of distribution transforms from a sample.
//!
//! Every transform needed by the dominance criteria has a closed form over the
//! empirical measure, so no quadrature is involved anywhere:
//!
//! ```text
//! F¹(x)   = (1/n) #{x_i ≤ x}                    (marginal CDF of changes)
//! F²(z)   = (1/n) #{z_i ≤ z}                    (marginal CDF of levels)
//! F(x,z)  = (1/n) #{x_i ≤ x, z_i ≤ z}           (joint CDF)
//! K(x,z)  = F¹(x) + F²(z) − F(x,z)              (union probability)
//! H¹(x)   = (1/n) Σ (x − x_i)₊                  (∫ F¹ below x)
//! S¹(x)   = (1/n) Σ (x_i − x)₊                  (∫ 1 − F¹ above x)
//! H²(z)   = (1/n) Σ (z − z_i)₊                  (∫ F² below z)
//! H(x,z)  = (1/n) Σ (x − x_i)₊ (z − z_i)₊       (∫∫ F over the corner)
//! L(x,z)  = (z−z₀)H¹(x) + (x−x₀)H²(z) − H(x,z)  (∫∫ K over the corner)
//! ```
//!
//! `(x₀, z₀)` are the pooled support minima; the lower integration limits are
//! inert there because every CDF vanishes below the pooled minimum, and using
//! pooled origins for both arms keeps the `L` difference comparable across
//! arms.
//!
//! [`EdfSummary`] answers point queries in O(log n) (marginal transforms via
//! sorted prefix sums) or O(n) (joint transforms). The bootstrap instead
//! evaluates whole grids at once through [`TransformTables`]: observations are
//! bucketed against the query lattice once, and each resample is reduced to
//! four 2-D prefix-sum tables from which every transform above is O(1) per
//! grid point.

use crate::data_model::{EvaluationGrid, PolicySample, SupportBox};
use crate::error::{Error, Result};

/// Immutable per-sample summary supporting exact transform evaluation at any
/// point. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct EdfSummary {
    pairs: Vec<(f64, f64)>,
    xs_sorted: Vec<f64>,
    zs_sorted: Vec<f64>,
    /// xs_prefix[k] = sum of the k smallest x values; length n + 1.
    xs_prefix: Vec<f64>,
    zs_prefix: Vec<f64>,
    origin_x: f64,
    origin_z: f64,
}

impl EdfSummary {
    /// Summarizes a sample against the pooled support box providing the
    /// integration origins.
    pub fn new(sample: &PolicySample, support: &SupportBox) -> Result<Self> {
        if let Some(o) = sample.observations().iter().find(|o| !support.contains(o)) {
            return Err(Error::GridMismatch(format!(
                "observation ({}, {}) lies outside the support box",
                o.x, o.z
            )));
        }
        let pairs: Vec<(f64, f64)> = sample.observations().iter().map(|o| (o.x, o.z)).collect();
        let mut xs_sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut zs_sorted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        xs_sorted.sort_unstable_by(f64::total_cmp);
        zs_sorted.sort_unstable_by(f64::total_cmp);
        let prefix = |v: &[f64]| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(v.len() + 1);
            out.push(0.0);
            for &t in v {
                acc += t;
                out.push(acc);
            }
            out
        };
        Ok(Self {
            xs_prefix: prefix(&xs_sorted),
            zs_prefix: prefix(&zs_sorted),
            pairs,
            xs_sorted,
            zs_sorted,
            origin_x: support.x_min,
            origin_z: support.z_min,
        })
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn origin_x(&self) -> f64 {
        self.origin_x
    }

    pub fn origin_z(&self) -> f64 {
        self.origin_z
    }

    fn count_le_x(&self, x: f64) -> usize {
        self.xs_sorted.partition_point(|&v| v <= x)
    }

    fn count_le_z(&self, z: f64) -> usize {
        self.zs_sorted.partition_point(|&v| v <= z)
    }

    /// Marginal CDF of changes.
    pub fn cdf1(&self, x: f64) -> f64 {
        self.count_le_x(x) as f64 / self.n() as f64
    }

    /// Marginal CDF of levels.
    pub fn cdf2(&self, z: f64) -> f64 {
        self.count_le_z(z) as f64 / self.n() as f64
    }

    /// Joint CDF.
    pub fn joint_cdf(&self, x: f64, z: f64) -> f64 {
        let count = self
            .pairs
            .iter()
            .filter(|&&(xi, zi)| xi <= x && zi <= z)
            .count();
        count as f64 / self.n() as f64
    }

    /// `K(x,z) = F¹(x) + F²(z) − F(x,z)`, the probability of falling below x
    /// or below z; equivalently one minus the survival beyond `(x, z)`.
    pub fn k_fn(&self, x: f64, z: f64) -> f64 {
        self.cdf1(x) + self.cdf2(z) - self.joint_cdf(x, z)
    }

    /// `H¹(x) = ∫ F¹` below x.
    pub fn h1(&self, x: f64) -> f64 {
        let k = self.count_le_x(x);
        (k as f64 * x - self.xs_prefix[k]) / self.n() as f64
    }

    /// `S¹(x) = ∫ (1 − F¹)` above x, computed from suffix sums so the
    /// integration-by-parts identity `S¹(x) − H¹(x) = mean − x` is a genuine
    /// cross-check rather than a definition.
    pub fn s1(&self, x: f64) -> f64 {
        let n = self.n();
        let k = self.count_le_x(x);
        let tail_sum = self.xs_prefix[n] - self.xs_prefix[k];
        (tail_sum - (n - k) as f64 * x) / n as f64
    }

    /// `H²(z) = ∫ F²` below z.
    pub fn h2(&self, z: f64) -> f64 {
        let k = self.count_le_z(z);
        (k as f64 * z - self.zs_prefix[k]) / self.n() as f64
    }

    /// `H(x,z) = ∫∫ F` over the lower-left corner.
    pub fn h_joint(&self, x: f64, z: f64) -> f64 {
        let sum: f64 = self
            .pairs
            .iter()
            .map(|&(xi, zi)| (x - xi).max(0.0) * (z - zi).max(0.0))
            .sum();
        sum / self.n() as f64
    }

    /// `L(x,z) = ∫∫ K` over the lower-left corner, anchored at the pooled
    /// support origins.
    pub fn l_joint(&self, x: f64, z: f64) -> f64 {
        (z - self.origin_z) * self.h1(x) + (x - self.origin_x) * self.h2(z)
            - self.h_joint(x, z)
    }
}

/// The signed query lattice shared by both arms of a test.
///
/// `xq` merges the negated and plain magnitude grids into one ascending list
/// `[−m_max, …, −m_1, 0, m_1, …, m_max]`; `neg_idx`/`pos_idx` map a magnitude
/// index to its signed positions in `xq`.
#[derive(Debug, Clone)]
pub struct GridQueries {
    pub xq: Vec<f64>,
    pub zq: Vec<f64>,
    pub neg_idx: Vec<usize>,
    pub pos_idx: Vec<usize>,
    pub origin_x: f64,
    pub origin_z: f64,
}

impl GridQueries {
    pub fn new(grid: &EvaluationGrid, origin_x: f64, origin_z: f64) -> Self {
        let g_x = grid.x_pos_points.len();
        let mut xq = Vec::with_capacity(2 * g_x - 1);
        for &m in grid.x_pos_points.iter().skip(1).rev() {
            xq.push(-m);
        }
        xq.push(0.0);
        xq.extend(grid.x_pos_points.iter().skip(1).copied());
        let neg_idx = (0..g_x).map(|i| g_x - 1 - i).collect();
        let pos_idx = (0..g_x).map(|i| g_x - 1 + i).collect();
        Self {
            xq,
            zq: grid.z_points.clone(),
            neg_idx,
            pos_idx,
            origin_x,
            origin_z,
        }
    }

    pub fn n_xq(&self) -> usize {
        self.xq.len()
    }

    pub fn n_zq(&self) -> usize {
        self.zq.len()
    }
}

/// One arm's observations bucketed against a query lattice.
///
/// Buckets are computed once per test; each bootstrap resample then reduces to
/// histogram accumulation over precomputed bucket indices, with no per-replicate
/// sorting or searching.
#[derive(Debug, Clone)]
pub struct BucketedSample {
    bx: Vec<u32>,
    bz: Vec<u32>,
    xs: Vec<f64>,
    zs: Vec<f64>,
}

impl BucketedSample {
    pub fn new(q: &GridQueries, pairs: &[(f64, f64)]) -> Self {
        let bucket = |grid: &[f64], v: f64| grid.partition_point(|&g| g < v) as u32;
        Self {
            bx: pairs.iter().map(|p| bucket(&q.xq, p.0)).collect(),
            bz: pairs.iter().map(|p| bucket(&q.zq, p.1)).collect(),
            xs: pairs.iter().map(|p| p.0).collect(),
            zs: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Prefix-sum tables giving every distribution transform of one (re)sampled
/// arm in O(1) per query-lattice point.
///
/// Four moments are accumulated per cell — count, Σx, Σz, Σxz — because the
/// corner integrals expand as
/// `n·H(x,z) = Σ_{x_i≤x, z_i≤z} (x·z − x·z_i − z·x_i + x_i z_i)`.
#[derive(Debug, Clone)]
pub struct TransformTables {
    rows: usize,
    cols: usize,
    n: f64,
    cnt: Vec<f64>,
    sx: Vec<f64>,
    sz: Vec<f64>,
    sxz: Vec<f64>,
}

impl TransformTables {
    pub fn new(q: &GridQueries) -> Self {
        // One overflow row/column catches observations beyond the last query.
        let rows = q.n_xq() + 1;
        let cols = q.n_zq() + 1;
        let cells = rows * cols;
        Self {
            rows,
            cols,
            n: 0.0,
            cnt: vec![0.0; cells],
            sx: vec![0.0; cells],
            sz: vec![0.0; cells],
            sxz: vec![0.0; cells],
        }
    }

    /// Rebuilds the tables from the observations selected by `indices`
    /// (a with-replacement resample).
    pub fn fill(&mut self, sample: &BucketedSample, indices: &[u32]) {
        self.reset();
        for &i in indices {
            self.add(sample, i as usize);
        }
        self.n = indices.len() as f64;
        self.prefix();
    }

    /// Rebuilds the tables from the full sample (the identity resample).
    pub fn fill_identity(&mut self, sample: &BucketedSample) {
        self.reset();
        for i in 0..sample.len() {
            self.add(sample, i);
        }
        self.n = sample.len() as f64;
        self.prefix();
    }

    fn reset(&mut self) {
        self.cnt.fill(0.0);
        self.sx.fill(0.0);
        self.sz.fill(0.0);
        self.sxz.fill(0.0);
    }

    #[inline]
    fn add(&mut self, sample: &BucketedSample, i: usize) {
        let cell = sample.bx[i] as usize * self.cols + sample.bz[i] as usize;
        let (x, z) = (sample.xs[i], sample.zs[i]);
        self.cnt[cell] += 1.0;
        self.sx[cell] += x;
        self.sz[cell] += z;
        self.sxz[cell] += x * z;
    }

    fn prefix(&mut self) {
        for table in [&mut self.cnt, &mut self.sx, &mut self.sz, &mut self.sxz] {
            for r in 0..self.rows {
                let base = r * self.cols;
                for c in 1..self.cols {
                    table[base + c] += table[base + c - 1];
                }
            }
            for r in 1..self.rows {
                let (prev, cur) = table.split_at_mut(r * self.cols);
                let prev = &prev[(r - 1) * self.cols..];
                for c in 0..self.cols {
                    cur[c] += prev[c];
                }
            }
        }
    }

    #[inline]
    fn at(&self, table: &[f64], j: usize, k: usize) -> f64 {
        table[j * self.cols + k]
    }

    fn last_row(&self) -> usize {
        self.rows - 1
    }

    fn last_col(&self) -> usize {
        self.cols - 1
    }

    /// `F¹` at query point `xq[j]`.
    #[inline]
    pub fn f1(&self, j: usize) -> f64 {
        self.at(&self.cnt, j, self.last_col()) / self.n
    }

    /// `F²` at query point `zq[k]`.
    #[inline]
    pub fn f2(&self, k: usize) -> f64 {
        self.at(&self.cnt, self.last_row(), k) / self.n
    }

    /// Joint `F` at `(xq[j], zq[k])`.
    #[inline]
    pub fn f(&self, j: usize, k: usize) -> f64 {
        self.at(&self.cnt, j, k) / self.n
    }

    /// `K` at `(xq[j], zq[k])`.
    #[inline]
    pub fn k_fn(&self, j: usize, k: usize) -> f64 {
        self.f1(j) + self.f2(k) - self.f(j, k)
    }

    /// `H¹` at `xq[j]`.
    #[inline]
    pub fn h1(&self, q: &GridQueries, j: usize) -> f64 {
        let c = self.last_col();
        (q.xq[j] * self.at(&self.cnt, j, c) - self.at(&self.sx, j, c)) / self.n
    }

    /// `S¹` at `xq[j]`, via suffix sums.
    #[inline]
    pub fn s1(&self, q: &GridQueries, j: usize) -> f64 {
        let (r, c) = (self.last_row(), self.last_col());
        let tail_sum = self.at(&self.sx, r, c) - self.at(&self.sx, j, c);
        let tail_cnt = self.at(&self.cnt, r, c) - self.at(&self.cnt, j, c);
        (tail_sum - q.xq[j] * tail_cnt) / self.n
    }

    /// `H²` at `zq[k]`.
    #[inline]
    pub fn h2(&self, q: &GridQueries, k: usize) -> f64 {
        let r = self.last_row();
        (q.zq[k] * self.at(&self.cnt, r, k) - self.at(&self.sz, r, k)) / self.n
    }

    /// Joint `H` at `(xq[j], zq[k])`.
    #[inline]
    pub fn h(&self, q: &GridQueries, j: usize, k: usize) -> f64 {
        let (x, z) = (q.xq[j], q.zq[k]);
        (x * z * self.at(&self.cnt, j, k) - x * self.at(&self.sz, j, k)
            - z * self.at(&self.sx, j, k)
            + self.at(&self.sxz, j, k))
            / self.n
    }

    /// Joint `L` at `(xq[j], zq[k])`, anchored at the pooled origins.
    #[inline]
    pub fn l(&self, q: &GridQueries, j: usize, k: usize) -> f64 {
        (q.zq[k] - q.origin_z) * self.h1(q, j) + (q.xq[j] - q.origin_x) * self.h2(q, k)
            - self.h(q, j, k)
    }
}
