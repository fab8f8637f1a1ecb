//! Test-function assembly for the dominance criteria.
//!
//! Each criterion maps a distribution to a short vector of transform
//! coordinates; the test function is the coordinatewise difference
//! `g = gᵏ(F_A) − gᵏ(F_B)`, which is everywhere nonpositive under the null
//! hypothesis that A dominates B. Coordinates are evaluated only over the
//! arguments they genuinely depend on — marginal coordinates on one axis,
//! joint coordinates on the (magnitude, level) plane, the gain/loss balance
//! coordinate on the magnitude quadrant — so the L2 norm does not silently
//! weight any coordinate by the measure of arguments it ignores.
//!
//! Gain/loss coordinates take a nonnegative magnitude `m` and read the
//! transforms at `+m` and `−m`. Where a signed point falls outside one
//! sample's range the step functions are constant, so no extrapolation is
//! involved. Joint-plane coordinates drop the topmost magnitude and level
//! grid points (the dominance conditions exempt the upper support boundary).

use serde::{Deserialize, Serialize};

use crate::data_model::EvaluationGrid;
use crate::edf::{BucketedSample, EdfSummary, GridQueries, TransformTables};
use crate::error::{Error, Result};

/// The implemented dominance criteria.
///
/// The first six pair a "favors negative association" notion with its
/// "favors positive association" counterpart at first order (`Lasbd`,
/// `Lasbd2`), second order (`Iasd`, `Iasd2`) and mixed order (`Liasd`,
/// `Liasd2`). `KrAdditive` is the additive-value special case that needs only
/// the marginal conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Lasbd,
    Lasbd2,
    Iasd,
    Iasd2,
    Liasd,
    Liasd2,
    KrAdditive,
}

impl Criterion {
    /// The six main criteria.
    pub const SIX: [Criterion; 6] = [
        Criterion::Lasbd,
        Criterion::Lasbd2,
        Criterion::Iasd,
        Criterion::Iasd2,
        Criterion::Liasd,
        Criterion::Liasd2,
    ];

    /// All criteria, including the optional additive one.
    pub const ALL: [Criterion; 7] = [
        Criterion::Lasbd,
        Criterion::Lasbd2,
        Criterion::Iasd,
        Criterion::Iasd2,
        Criterion::Liasd,
        Criterion::Liasd2,
        Criterion::KrAdditive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Lasbd => "LASBD",
            Criterion::Lasbd2 => "LASBD2",
            Criterion::Iasd => "IASD",
            Criterion::Iasd2 => "IASD2",
            Criterion::Liasd => "LIASD",
            Criterion::Liasd2 => "LIASD2",
            Criterion::KrAdditive => "KR_ADDITIVE",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasbd" => Ok(Criterion::Lasbd),
            "lasbd2" => Ok(Criterion::Lasbd2),
            "iasd" => Ok(Criterion::Iasd),
            "iasd2" => Ok(Criterion::Iasd2),
            "liasd" => Ok(Criterion::Liasd),
            "liasd2" => Ok(Criterion::Liasd2),
            "kr" | "kr_additive" => Ok(Criterion::KrAdditive),
            other => Err(Error::InvalidConfig(format!(
                "unknown criterion '{other}' (expected lasbd, lasbd2, iasd, iasd2, liasd, liasd2 or kr)"
            ))),
        }
    }
}

/// The argument domain a coordinate is evaluated over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Level axis, all `G_z` points.
    ZAxis,
    /// Magnitude axis read at `−m`, all `G_x` magnitudes.
    NegXAxis,
    /// Magnitude axis read at `+m` (or at both signs combined), `G_x` points.
    PosXAxis,
    /// (magnitude, level) plane read at `(−m, z)`; top points excluded.
    XzPlaneNegX,
    /// (magnitude, level) plane read at `(+m, z)`; top points excluded.
    XzPlanePosX,
    /// (magnitude, magnitude) quadrant, `G_x × G_x`.
    X1X2Quadrant,
}

impl Domain {
    /// (rows, cols) of the value array for grid sizes `(g_x, g_z)`.
    pub fn shape(self, g_x: usize, g_z: usize) -> (usize, usize) {
        match self {
            Domain::ZAxis => (g_z, 1),
            Domain::NegXAxis | Domain::PosXAxis => (g_x, 1),
            Domain::XzPlaneNegX | Domain::XzPlanePosX => (g_x - 1, g_z - 1),
            Domain::X1X2Quadrant => (g_x, g_x),
        }
    }

    /// Integration weight of one cell of this domain.
    pub fn cell_weight(self, grid: &EvaluationGrid) -> f64 {
        match self {
            Domain::ZAxis => grid.z_spacing,
            Domain::NegXAxis | Domain::PosXAxis => grid.x_pos_spacing,
            Domain::XzPlaneNegX | Domain::XzPlanePosX => grid.x_pos_spacing * grid.z_spacing,
            Domain::X1X2Quadrant => grid.x_pos_spacing * grid.x_pos_spacing,
        }
    }
}

/// Which transform difference a coordinate reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CoordOp {
    F2,
    FNeg,
    FPos,
    KNeg,
    KPos,
    H2,
    HNeg,
    HPos,
    LNeg,
    LPos,
    F1Neg,
    F1Sym,
    GainLossBalance,
}

/// Static description of one coordinate of a criterion's test function.
#[derive(Debug, Clone, Copy)]
pub struct CoordinateSpec {
    pub name: &'static str,
    /// Filesystem-safe short name, used for emitted grid files.
    pub slug: &'static str,
    pub domain: Domain,
    pub(crate) op: CoordOp,
}

const fn coord(
    name: &'static str,
    slug: &'static str,
    domain: Domain,
    op: CoordOp,
) -> CoordinateSpec {
    CoordinateSpec {
        name,
        slug,
        domain,
        op,
    }
}

const F2: CoordinateSpec = coord("F2(z)", "f2", Domain::ZAxis, CoordOp::F2);
const F_NEG: CoordinateSpec = coord("F(-x,z)", "f_neg", Domain::XzPlaneNegX, CoordOp::FNeg);
const F_POS: CoordinateSpec = coord("F(x,z)", "f_pos", Domain::XzPlanePosX, CoordOp::FPos);
const K_NEG: CoordinateSpec = coord("K(-x,z)", "k_neg", Domain::XzPlaneNegX, CoordOp::KNeg);
const K_POS: CoordinateSpec = coord("K(x,z)", "k_pos", Domain::XzPlanePosX, CoordOp::KPos);
const H2_: CoordinateSpec = coord("H2(z)", "h2", Domain::ZAxis, CoordOp::H2);
const H_NEG: CoordinateSpec = coord("H(-x,z)", "h_neg", Domain::XzPlaneNegX, CoordOp::HNeg);
const H_POS: CoordinateSpec = coord("H(x,z)", "h_pos", Domain::XzPlanePosX, CoordOp::HPos);
const L_NEG: CoordinateSpec = coord("L(-x,z)", "l_neg", Domain::XzPlaneNegX, CoordOp::LNeg);
const L_POS: CoordinateSpec = coord("L(x,z)", "l_pos", Domain::XzPlanePosX, CoordOp::LPos);
const F1_NEG: CoordinateSpec = coord("F1(-x)", "f1_neg", Domain::NegXAxis, CoordOp::F1Neg);
const F1_SYM: CoordinateSpec = coord(
    "F1(x)+F1(-x)",
    "f1_sym",
    Domain::PosXAxis,
    CoordOp::F1Sym,
);
const S1H1: CoordinateSpec = coord(
    "S1-H1-centered",
    "s1h1",
    Domain::X1X2Quadrant,
    CoordOp::GainLossBalance,
);

/// The fixed coordinate list of a criterion.
pub fn coordinate_domains(kind: Criterion) -> &'static [CoordinateSpec] {
    match kind {
        Criterion::Lasbd => &[F2, F_NEG, F_POS, F1_NEG, F1_SYM],
        Criterion::Lasbd2 => &[F2, K_NEG, K_POS, F1_NEG, F1_SYM],
        Criterion::Iasd => &[H2_, H_NEG, H_POS, S1H1],
        Criterion::Iasd2 => &[H2_, L_NEG, L_POS, S1H1],
        Criterion::Liasd => &[H2_, H_NEG, H_POS, F1_NEG, F1_SYM],
        Criterion::Liasd2 => &[H2_, L_NEG, L_POS, F1_NEG, F1_SYM],
        Criterion::KrAdditive => &[F2, F1_NEG, F1_SYM],
    }
}

/// One coordinate of an evaluated test function.
#[derive(Debug, Clone)]
pub struct CoordinateField {
    pub name: &'static str,
    pub slug: &'static str,
    pub domain: Domain,
    /// (rows, cols) of `values`; row-major flattening.
    pub shape: (usize, usize),
    pub values: Vec<f64>,
    /// Integration weight of each cell.
    pub cell_weight: f64,
}

impl CoordinateField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Axis-wise transform values of one arm, read off its tables once so the
/// coordinate loops touch plain arrays.
#[derive(Debug, Clone)]
pub(crate) struct ArmView {
    /// F¹(−mᵢ), F¹(+mᵢ) by magnitude index.
    f1n: Vec<f64>,
    f1p: Vec<f64>,
    /// S¹(+mᵢ) − S¹(0) and H¹(−mᵢ) − H¹(0); exactly zero at index 0 by
    /// construction, which pins the quadrant coordinate to 0 at the origin.
    s1c: Vec<f64>,
    h1c: Vec<f64>,
    f2: Vec<f64>,
    h2: Vec<f64>,
}

impl ArmView {
    pub(crate) fn new(t: &TransformTables, q: &GridQueries) -> Self {
        let g_x = q.pos_idx.len();
        let s1_at_zero = t.s1(q, q.pos_idx[0]);
        let h1_at_zero = t.h1(q, q.neg_idx[0]);
        Self {
            f1n: (0..g_x).map(|i| t.f1(q.neg_idx[i])).collect(),
            f1p: (0..g_x).map(|i| t.f1(q.pos_idx[i])).collect(),
            s1c: (0..g_x)
                .map(|i| t.s1(q, q.pos_idx[i]) - s1_at_zero)
                .collect(),
            h1c: (0..g_x)
                .map(|i| t.h1(q, q.neg_idx[i]) - h1_at_zero)
                .collect(),
            f2: (0..q.n_zq()).map(|k| t.f2(k)).collect(),
            h2: (0..q.n_zq()).map(|k| t.h2(q, k)).collect(),
        }
    }
}

pub(crate) struct ArmEval<'a> {
    pub tables: &'a TransformTables,
    pub view: &'a ArmView,
}

/// Streams every (coordinate, point, value) of `g = gᵏ(A) − gᵏ(B)` in a fixed
/// order. Single source of truth for both plug-in and bootstrap evaluation.
pub(crate) fn for_each_value(
    kind: Criterion,
    a: ArmEval<'_>,
    b: ArmEval<'_>,
    q: &GridQueries,
    g_x: usize,
    g_z: usize,
    mut emit: impl FnMut(usize, usize, f64),
) {
    for (c, spec) in coordinate_domains(kind).iter().enumerate() {
        match spec.op {
            CoordOp::F2 => {
                for k in 0..g_z {
                    emit(c, k, a.view.f2[k] - b.view.f2[k]);
                }
            }
            CoordOp::H2 => {
                for k in 0..g_z {
                    emit(c, k, a.view.h2[k] - b.view.h2[k]);
                }
            }
            CoordOp::F1Neg => {
                for i in 0..g_x {
                    emit(c, i, a.view.f1n[i] - b.view.f1n[i]);
                }
            }
            CoordOp::F1Sym => {
                for i in 0..g_x {
                    let va = a.view.f1p[i] + a.view.f1n[i];
                    let vb = b.view.f1p[i] + b.view.f1n[i];
                    emit(c, i, va - vb);
                }
            }
            CoordOp::GainLossBalance => {
                for i1 in 0..g_x {
                    let base = i1 * g_x;
                    let sa = a.view.s1c[i1];
                    let sb = b.view.s1c[i1];
                    for i2 in 0..g_x {
                        emit(c, base + i2, (sa - a.view.h1c[i2]) - (sb - b.view.h1c[i2]));
                    }
                }
            }
            CoordOp::FNeg | CoordOp::FPos => {
                let signed = plane_indices(spec.op, q);
                for (i, &j) in signed.iter().take(g_x - 1).enumerate() {
                    let base = i * (g_z - 1);
                    for k in 0..g_z - 1 {
                        emit(c, base + k, a.tables.f(j, k) - b.tables.f(j, k));
                    }
                }
            }
            CoordOp::KNeg | CoordOp::KPos => {
                let signed = plane_indices(spec.op, q);
                for (i, &j) in signed.iter().take(g_x - 1).enumerate() {
                    let base = i * (g_z - 1);
                    for k in 0..g_z - 1 {
                        emit(c, base + k, a.tables.k_fn(j, k) - b.tables.k_fn(j, k));
                    }
                }
            }
            CoordOp::HNeg | CoordOp::HPos => {
                let signed = plane_indices(spec.op, q);
                for (i, &j) in signed.iter().take(g_x - 1).enumerate() {
                    let base = i * (g_z - 1);
                    for k in 0..g_z - 1 {
                        emit(c, base + k, a.tables.h(q, j, k) - b.tables.h(q, j, k));
                    }
                }
            }
            CoordOp::LNeg | CoordOp::LPos => {
                let signed = plane_indices(spec.op, q);
                for (i, &j) in signed.iter().take(g_x - 1).enumerate() {
                    let base = i * (g_z - 1);
                    // H¹ and the (x − x₀) factor are constant along a row.
                    let ha = a.tables.h1(q, j);
                    let hb = b.tables.h1(q, j);
                    let dx = q.xq[j] - q.origin_x;
                    for k in 0..g_z - 1 {
                        let dz = q.zq[k] - q.origin_z;
                        let la = dz * ha + dx * a.view.h2[k] - a.tables.h(q, j, k);
                        let lb = dz * hb + dx * b.view.h2[k] - b.tables.h(q, j, k);
                        emit(c, base + k, la - lb);
                    }
                }
            }
        }
    }
}

fn plane_indices(op: CoordOp, q: &GridQueries) -> &[usize] {
    match op {
        CoordOp::FNeg | CoordOp::KNeg | CoordOp::HNeg | CoordOp::LNeg => &q.neg_idx,
        _ => &q.pos_idx,
    }
}

/// Materializes all coordinates of `g = gᵏ(first) − gᵏ(second)` from
/// already-built tables.
pub(crate) fn materialize_fields(
    kind: Criterion,
    a: ArmEval<'_>,
    b: ArmEval<'_>,
    q: &GridQueries,
    grid: &EvaluationGrid,
) -> Vec<CoordinateField> {
    let (g_x, g_z) = (grid.g_x(), grid.g_z());
    let mut fields: Vec<CoordinateField> = coordinate_domains(kind)
        .iter()
        .map(|spec| {
            let shape = spec.domain.shape(g_x, g_z);
            CoordinateField {
                name: spec.name,
                slug: spec.slug,
                domain: spec.domain,
                shape,
                values: vec![0.0; shape.0 * shape.1],
                cell_weight: spec.domain.cell_weight(grid),
            }
        })
        .collect();
    for_each_value(kind, a, b, q, g_x, g_z, |c, i, v| fields[c].values[i] = v);
    fields
}

/// Evaluates the test function `g = gᵏ(F_A) − gᵏ(F_B)` on the grid.
///
/// Both summaries must have been built against the same pooled support box.
pub fn evaluate_g(
    kind: Criterion,
    edf_a: &EdfSummary,
    edf_b: &EdfSummary,
    grid: &EvaluationGrid,
) -> Result<Vec<CoordinateField>> {
    if edf_a.origin_x() != edf_b.origin_x() || edf_a.origin_z() != edf_b.origin_z() {
        return Err(Error::GridMismatch(
            "samples were summarized against different support boxes".into(),
        ));
    }
    if grid.z_points.first().copied() != Some(edf_a.origin_z()) {
        return Err(Error::GridMismatch(
            "grid does not start at the pooled support origin".into(),
        ));
    }
    let q = GridQueries::new(grid, edf_a.origin_x(), edf_a.origin_z());
    let tables_of = |edf: &EdfSummary| {
        let bucketed = BucketedSample::new(&q, edf.pairs());
        let mut tables = TransformTables::new(&q);
        tables.fill_identity(&bucketed);
        tables
    };
    let ta = tables_of(edf_a);
    let tb = tables_of(edf_b);
    let va = ArmView::new(&ta, &q);
    let vb = ArmView::new(&tb, &q);
    Ok(materialize_fields(
        kind,
        ArmEval {
            tables: &ta,
            view: &va,
        },
        ArmEval {
            tables: &tb,
            view: &vb,
        },
        &q,
        grid,
    ))
}
