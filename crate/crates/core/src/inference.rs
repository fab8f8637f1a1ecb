//! Positive-part L2 statistic, contact-set estimation and the two-sample
//! bootstrap.
//!
//! A test of `H₀: first arm dominates second` proceeds in four steps:
//!
//! 1. evaluate the plug-in test function `ĝ` and the statistic
//!    `T_n = ‖[ĝ]₊‖`, a measure-weighted L2 norm of the violations;
//! 2. estimate the contact set — grid points where `|ĝ| ≤ c_n`, with
//!    `c_n = 4·log(log n)/√n` by default on the pooled `n = n_A + n_B`;
//! 3. for each bootstrap replicate, resample both arms independently with
//!    replacement at their original sizes, rebuild the test function `g*` on
//!    the same pooled grid and origins, and compute
//!    `T*_r = ‖[(g*_r − ĝ)·χ]₊‖` where masked-out points contribute zero;
//! 4. report `p = (1/R) Σ I(T*_r + η > T_n)`. The small `η` breaks ties when
//!    the reference distribution is degenerate at zero, so equal samples give
//!    p = 1 instead of a spurious rejection.
//!
//! Replicate `r`'s randomness is a pure function of `(seed, direction, r)`:
//! each replicate owns a ChaCha stream selected by counter, so results are
//! bit-identical across thread counts and identical whether criteria are run
//! one at a time or batched. All criteria of one direction share the same
//! resamples, which is also what makes batched runs cheap: the transform
//! tables are built once per replicate and reused across criteria.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, ArmEval, ArmView, CoordinateField, Criterion};
use crate::data_model::{
    build_grid, pooled_support, Direction, DirectionChoice, EvaluationGrid, PolicySample,
    RunConfig,
};
use crate::edf::{BucketedSample, EdfSummary, GridQueries, TransformTables};
use crate::error::{Error, Result};

/// The scalar statistic together with its per-coordinate decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatisticValue {
    /// `T = sqrt(Σ_c Σ_p ([v]₊)²·w_c)`.
    pub t: f64,
    /// Weighted sum of squared violations per coordinate; `t` is the square
    /// root of their total.
    pub per_coordinate: Vec<CoordinateContribution>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordinateContribution {
    pub name: String,
    pub contribution: f64,
}

/// Reduces a test function to the positive-part L2 statistic.
pub fn statistic(fields: &[CoordinateField]) -> StatisticValue {
    let mut total = 0.0;
    let per_coordinate = fields
        .iter()
        .map(|f| {
            debug_assert!(f.values.iter().all(|v| v.is_finite()), "{}", f.name);
            let ss: f64 = f
                .values
                .iter()
                .map(|&v| {
                    let p = v.max(0.0);
                    p * p
                })
                .sum();
            let contribution = ss * f.cell_weight;
            total += contribution;
            CoordinateContribution {
                name: f.name.to_string(),
                contribution,
            }
        })
        .collect();
    StatisticValue {
        t: total.sqrt(),
        per_coordinate,
    }
}

/// Boolean masks flagging grid points close enough to the contact set.
#[derive(Debug, Clone)]
pub struct ContactMask {
    /// One mask per coordinate, aligned with the field's flattened values.
    pub masks: Vec<Vec<bool>>,
    pub c_n: f64,
    pub fraction_active: f64,
}

/// Estimates the contact set: points where `|ĝ| ≤ c_n`.
pub fn contact_set(fields: &[CoordinateField], n: usize, cfg: &RunConfig) -> Result<ContactMask> {
    let c_n = cfg.contact_rule.threshold(n)?;
    let mut active = 0usize;
    let mut total = 0usize;
    let masks: Vec<Vec<bool>> = fields
        .iter()
        .map(|f| {
            f.values
                .iter()
                .map(|&v| {
                    total += 1;
                    let on = v.abs() <= c_n;
                    active += on as usize;
                    on
                })
                .collect()
        })
        .collect();
    Ok(ContactMask {
        masks,
        c_n,
        fraction_active: active as f64 / total as f64,
    })
}

/// Bootstrap reference-distribution quantiles reported with each test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapQuantiles {
    pub q90: f64,
    pub q95: f64,
    pub q99: f64,
}

/// Outcome of one criterion in one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub criterion: Criterion,
    pub direction: Direction,
    pub n_a: usize,
    pub n_b: usize,
    pub n: usize,
    pub t_n: f64,
    /// `√n · T_n`, the scale in which the statistic has a limit distribution;
    /// reported for diagnostics only, the p-value uses the unscaled
    /// comparison in which the common factor cancels.
    pub sqrt_n_t_n: f64,
    pub p_value: f64,
    pub replicates: usize,
    pub seed: u64,
    pub c_n: f64,
    pub eta: f64,
    pub contact_fraction: f64,
    pub bootstrap_quantiles: BootstrapQuantiles,
}

impl TestResult {
    /// Rejection decision at the given nominal level.
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// p-value from a fixed reference distribution: `(1/R) Σ I(T* + η > T_n)`.
pub fn pvalue_from_reference(t_n: f64, t_stars: &[f64], eta: f64) -> f64 {
    let hits = t_stars.iter().filter(|&&t| t + eta > t_n).count();
    hits as f64 / t_stars.len() as f64
}

fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let r = sorted.len();
    let idx = ((level * r as f64).ceil() as usize).clamp(1, r) - 1;
    sorted[idx]
}

/// Mixes a salt into a base seed (splitmix64 finalizer). Used to derive
/// independent seeds for nested randomized procedures.
pub(crate) fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut h = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

/// RNG for one bootstrap replicate: a pure function of (seed, direction, r).
fn replicate_rng(seed: u64, direction: Direction, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((r as u64) << 1) | direction.stream_tag());
    rng
}

/// Everything a replicate needs, shared read-only across workers.
struct ReplicateCtx<'a> {
    q: &'a GridQueries,
    grid: &'a EvaluationGrid,
    bucketed_a: &'a BucketedSample,
    bucketed_b: &'a BucketedSample,
    kinds: &'a [Criterion],
    hat: &'a [Vec<CoordinateField>],
    masks: &'a [ContactMask],
    seed: u64,
    direction: Direction,
}

struct ReplicateScratch {
    tables_a: TransformTables,
    tables_b: TransformTables,
    idx: Vec<u32>,
}

impl ReplicateScratch {
    fn new(q: &GridQueries) -> Self {
        Self {
            tables_a: TransformTables::new(q),
            tables_b: TransformTables::new(q),
            idx: Vec::new(),
        }
    }
}

fn one_replicate(scratch: &mut ReplicateScratch, ctx: &ReplicateCtx<'_>, r: usize) -> Vec<f64> {
    let mut rng = replicate_rng(ctx.seed, ctx.direction, r);
    // Arm A is always drawn before arm B so the streams do not depend on the
    // evaluation order or the criteria being tested.
    let n_a = ctx.bucketed_a.len();
    scratch.idx.clear();
    scratch
        .idx
        .extend((0..n_a).map(|_| rng.random_range(0..n_a as u32)));
    scratch.tables_a.fill(ctx.bucketed_a, &scratch.idx);
    let n_b = ctx.bucketed_b.len();
    scratch.idx.clear();
    scratch
        .idx
        .extend((0..n_b).map(|_| rng.random_range(0..n_b as u32)));
    scratch.tables_b.fill(ctx.bucketed_b, &scratch.idx);

    let view_a = ArmView::new(&scratch.tables_a, ctx.q);
    let view_b = ArmView::new(&scratch.tables_b, ctx.q);
    let (ft, fv, st, sv) = match ctx.direction {
        Direction::AOverB => (&scratch.tables_a, &view_a, &scratch.tables_b, &view_b),
        Direction::BOverA => (&scratch.tables_b, &view_b, &scratch.tables_a, &view_a),
    };

    ctx.kinds
        .iter()
        .enumerate()
        .map(|(ki, &kind)| {
            let hat = &ctx.hat[ki];
            let mask = &ctx.masks[ki];
            let mut acc = 0.0;
            criteria::for_each_value(
                kind,
                ArmEval {
                    tables: ft,
                    view: fv,
                },
                ArmEval {
                    tables: st,
                    view: sv,
                },
                ctx.q,
                ctx.grid.g_x(),
                ctx.grid.g_z(),
                |c, i, v| {
                    if mask.masks[c][i] {
                        let d = v - hat[c].values[i];
                        if d > 0.0 {
                            acc += hat[c].cell_weight * d * d;
                        }
                    }
                },
            );
            acc.sqrt()
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn collect_replicates(ctx: &ReplicateCtx<'_>, replicates: usize, parallel: bool) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    if parallel {
        (0..replicates)
            .into_par_iter()
            .map_init(
                || ReplicateScratch::new(ctx.q),
                |scratch, r| one_replicate(scratch, ctx, r),
            )
            .collect()
    } else {
        collect_replicates_seq(ctx, replicates)
    }
}

#[cfg(not(feature = "parallel"))]
fn collect_replicates(ctx: &ReplicateCtx<'_>, replicates: usize, _parallel: bool) -> Vec<Vec<f64>> {
    collect_replicates_seq(ctx, replicates)
}

fn collect_replicates_seq(ctx: &ReplicateCtx<'_>, replicates: usize) -> Vec<Vec<f64>> {
    let mut scratch = ReplicateScratch::new(ctx.q);
    (0..replicates)
        .map(|r| one_replicate(&mut scratch, ctx, r))
        .collect()
}

/// Runs `kinds × directions` on already-summarized samples, sharing bootstrap
/// resamples across criteria within each direction.
fn run_directions(
    edf_a: &EdfSummary,
    edf_b: &EdfSummary,
    grid: &EvaluationGrid,
    cfg: &RunConfig,
    kinds: &[Criterion],
    directions: &[Direction],
    parallel: bool,
) -> Result<Vec<TestResult>> {
    cfg.validate()?;
    let (n_a, n_b) = (edf_a.n(), edf_b.n());
    let n = n_a + n_b;
    let q = GridQueries::new(grid, edf_a.origin_x(), edf_a.origin_z());
    if edf_a.origin_x() != edf_b.origin_x() || edf_a.origin_z() != edf_b.origin_z() {
        return Err(Error::GridMismatch(
            "samples were summarized against different support boxes".into(),
        ));
    }
    let bucketed_a = BucketedSample::new(&q, edf_a.pairs());
    let bucketed_b = BucketedSample::new(&q, edf_b.pairs());
    let mut full_a = TransformTables::new(&q);
    full_a.fill_identity(&bucketed_a);
    let mut full_b = TransformTables::new(&q);
    full_b.fill_identity(&bucketed_b);
    let view_a = ArmView::new(&full_a, &q);
    let view_b = ArmView::new(&full_b, &q);

    // criterion-major output: results[kind][direction] flattened.
    let mut slots: Vec<Vec<TestResult>> = vec![Vec::new(); kinds.len()];
    for &direction in directions {
        let (ft, fv, st, sv) = match direction {
            Direction::AOverB => (&full_a, &view_a, &full_b, &view_b),
            Direction::BOverA => (&full_b, &view_b, &full_a, &view_a),
        };
        let mut hat: Vec<Vec<CoordinateField>> = Vec::with_capacity(kinds.len());
        let mut masks: Vec<ContactMask> = Vec::with_capacity(kinds.len());
        let mut stats: Vec<StatisticValue> = Vec::with_capacity(kinds.len());
        for &kind in kinds {
            let fields = criteria::materialize_fields(
                kind,
                ArmEval {
                    tables: ft,
                    view: fv,
                },
                ArmEval {
                    tables: st,
                    view: sv,
                },
                &q,
                grid,
            );
            stats.push(statistic(&fields));
            masks.push(contact_set(&fields, n, cfg)?);
            hat.push(fields);
        }

        let ctx = ReplicateCtx {
            q: &q,
            grid,
            bucketed_a: &bucketed_a,
            bucketed_b: &bucketed_b,
            kinds,
            hat: &hat,
            masks: &masks,
            seed: cfg.seed,
            direction,
        };
        let t_stars = collect_replicates(&ctx, cfg.replicates, parallel);

        for (ki, &kind) in kinds.iter().enumerate() {
            let column: Vec<f64> = t_stars.iter().map(|row| row[ki]).collect();
            let t_n = stats[ki].t;
            let p_value = pvalue_from_reference(t_n, &column, cfg.eta);
            let mut sorted = column;
            sorted.sort_unstable_by(f64::total_cmp);
            slots[ki].push(TestResult {
                criterion: kind,
                direction,
                n_a,
                n_b,
                n,
                t_n,
                sqrt_n_t_n: (n as f64).sqrt() * t_n,
                p_value,
                replicates: cfg.replicates,
                seed: cfg.seed,
                c_n: masks[ki].c_n,
                eta: cfg.eta,
                contact_fraction: masks[ki].fraction_active,
                bootstrap_quantiles: BootstrapQuantiles {
                    q90: quantile_sorted(&sorted, 0.90),
                    q95: quantile_sorted(&sorted, 0.95),
                    q99: quantile_sorted(&sorted, 0.99),
                },
            });
        }
    }
    Ok(slots.into_iter().flatten().collect())
}

/// Bootstrap test of one criterion in one direction on pre-built summaries.
pub fn bootstrap_pvalue(
    edf_a: &EdfSummary,
    edf_b: &EdfSummary,
    kind: Criterion,
    grid: &EvaluationGrid,
    cfg: &RunConfig,
    direction: Direction,
) -> Result<TestResult> {
    let mut results = run_directions(edf_a, edf_b, grid, cfg, &[kind], &[direction], true)?;
    Ok(results.pop().expect("one result"))
}

fn prepare(
    a: &PolicySample,
    b: &PolicySample,
    cfg: &RunConfig,
) -> Result<(EdfSummary, EdfSummary, EvaluationGrid)> {
    let support = pooled_support(a, b);
    let grid = build_grid(&support, cfg.grid_x, cfg.grid_z)?;
    Ok((
        EdfSummary::new(a, &support)?,
        EdfSummary::new(b, &support)?,
        grid,
    ))
}

/// Tests one criterion in the configured direction(s) on raw samples.
pub fn run_test(
    a: &PolicySample,
    b: &PolicySample,
    kind: Criterion,
    direction: DirectionChoice,
    cfg: &RunConfig,
) -> Result<Vec<TestResult>> {
    let (edf_a, edf_b, grid) = prepare(a, b, cfg)?;
    run_directions(
        &edf_a,
        &edf_b,
        &grid,
        cfg,
        &[kind],
        &direction.directions(),
        true,
    )
}

/// Runs every configured criterion in the configured direction(s), sharing
/// the pooled grid and the per-direction bootstrap resamples.
pub fn run_suite(a: &PolicySample, b: &PolicySample, cfg: &RunConfig) -> Result<Vec<TestResult>> {
    let (edf_a, edf_b, grid) = prepare(a, b, cfg)?;
    run_directions(
        &edf_a,
        &edf_b,
        &grid,
        cfg,
        &cfg.criteria,
        &cfg.direction.directions(),
        true,
    )
}

/// Single-threaded [`run_suite`]: same results, no rayon. Useful when the
/// caller already parallelizes at an outer level (e.g. Monte Carlo studies).
pub fn run_suite_seq(
    a: &PolicySample,
    b: &PolicySample,
    cfg: &RunConfig,
) -> Result<Vec<TestResult>> {
    let (edf_a, edf_b, grid) = prepare(a, b, cfg)?;
    run_directions(
        &edf_a,
        &edf_b,
        &grid,
        cfg,
        &cfg.criteria,
        &cfg.direction.directions(),
        false,
    )
}
