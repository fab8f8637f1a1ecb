//! Synthetic data generators and a Monte Carlo harness for size and power
//! studies of the full testing pipeline.
//!
//! Arms are drawn from a bivariate Gaussian with a controllable correlation,
//! truncated to nonnegative levels. The correlation knob matters because the
//! joint-distribution coordinates (`F`, `K`, `H`, `L`) are exactly what
//! marginal tests cannot see; association scenarios exercise them directly.
//!
//! Every generator is deterministic given `(spec, seed)`, and each Monte Carlo
//! replication derives its own data and bootstrap seeds from the replication
//! index, so outer parallelism cannot change any result. The inner bootstrap
//! runs single-threaded per replication; the outer loop parallelizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::criteria::Criterion;
use crate::data_model::{Direction, DirectionChoice, Observation, PolicySample, RunConfig};
use crate::error::{Error, Result};
use crate::inference::{mix_seed, run_suite_seq};

/// Synthetic scenario family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Both arms i.i.d. from one distribution: the null boundary.
    NullIdentical,
    /// Arm B's changes are shifted by `shift` (positive favors B).
    XLocationShift,
    /// Arm B's levels are shifted by `shift`.
    ZLocationShift,
    /// Arm B's change/level correlation is negated.
    AssociationFlip,
    /// Arm A first-order dominates in changes while the level CDFs cross
    /// slightly; mimics the qualitative shape of the welfare-reform data.
    Figure1Replica,
}

/// A Monte Carlo scenario: generator, parameters, and the inner test setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub generator: GeneratorKind,
    /// Location shift in the units of the shifted axis.
    #[serde(default)]
    pub shift: f64,
    /// Gaussian copula correlation for both arms (negated for one arm by
    /// `AssociationFlip`).
    #[serde(default = "defaults::correlation")]
    pub correlation: f64,
    /// Marginal standard deviation of changes.
    #[serde(default = "defaults::x_sd")]
    pub x_sd: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub mc_replications: usize,
    #[serde(default = "defaults::bootstrap_reps")]
    pub bootstrap_reps: usize,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::criteria")]
    pub criteria: Vec<Criterion>,
    #[serde(default = "defaults::direction")]
    pub direction: DirectionChoice,
    #[serde(default = "defaults::grid_x")]
    pub grid_x: usize,
    #[serde(default = "defaults::grid_z")]
    pub grid_z: usize,
}

mod defaults {
    use super::*;

    pub fn correlation() -> f64 {
        0.3
    }

    pub fn x_sd() -> f64 {
        1.0
    }

    pub fn bootstrap_reps() -> usize {
        199
    }

    pub fn alpha() -> f64 {
        0.05
    }

    pub fn criteria() -> Vec<Criterion> {
        Criterion::SIX.to_vec()
    }

    pub fn direction() -> DirectionChoice {
        DirectionChoice::Both
    }

    pub fn grid_x() -> usize {
        100
    }

    pub fn grid_z() -> usize {
        50
    }
}

impl ScenarioSpec {
    pub fn new(generator: GeneratorKind, n: usize, mc_replications: usize) -> Self {
        Self {
            generator,
            shift: 0.0,
            correlation: defaults::correlation(),
            x_sd: defaults::x_sd(),
            n_a: n,
            n_b: n,
            mc_replications,
            bootstrap_reps: defaults::bootstrap_reps(),
            alpha: defaults::alpha(),
            criteria: defaults::criteria(),
            direction: defaults::direction(),
            grid_x: defaults::grid_x(),
            grid_z: defaults::grid_z(),
        }
    }

    /// The null boundary scenario used for size studies.
    pub fn null_identical(n: usize, mc_replications: usize) -> Self {
        Self::new(GeneratorKind::NullIdentical, n, mc_replications)
    }

    /// A change-location violation of `H₀: A ≿ B` of size `shift`.
    pub fn x_location_shift(shift: f64, n: usize, mc_replications: usize) -> Self {
        Self {
            shift,
            direction: DirectionChoice::AOverB,
            ..Self::new(GeneratorKind::XLocationShift, n, mc_replications)
        }
    }

    /// The two-arm shape of the welfare-reform illustration.
    pub fn figure1_replica(n: usize) -> Self {
        Self {
            shift: 0.18,
            correlation: 0.35,
            ..Self::new(GeneratorKind::Figure1Replica, n, 1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.shift.is_finite() {
            return Err(Error::InvalidConfig("shift must be finite".into()));
        }
        if !(self.correlation > -1.0 && self.correlation < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "correlation must lie in (-1, 1), got {}",
                self.correlation
            )));
        }
        if !(self.x_sd > 0.0) {
            return Err(Error::InvalidConfig("x_sd must be positive".into()));
        }
        if self.n_a < 4 || self.n_b < 4 {
            return Err(Error::InvalidConfig(
                "scenario sample sizes must be at least 4".into(),
            ));
        }
        if self.mc_replications < 1 {
            return Err(Error::InvalidConfig("mc_replications must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if self.criteria.is_empty() {
            return Err(Error::InvalidConfig("no criteria selected".into()));
        }
        Ok(())
    }

    fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig {
            criteria: self.criteria.clone(),
            direction: self.direction,
            replicates: self.bootstrap_reps,
            seed,
            grid_x: self.grid_x,
            grid_z: self.grid_z,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ArmParams {
    x_mean: f64,
    x_sd: f64,
    z_mean: f64,
    z_sd: f64,
    rho: f64,
}

const BASE_Z_MEAN: f64 = 7.0;
const BASE_Z_SD: f64 = 1.0;

fn arm_params(spec: &ScenarioSpec) -> (ArmParams, ArmParams) {
    let base = ArmParams {
        x_mean: 0.0,
        x_sd: spec.x_sd,
        z_mean: BASE_Z_MEAN,
        z_sd: BASE_Z_SD,
        rho: spec.correlation,
    };
    match spec.generator {
        GeneratorKind::NullIdentical => (base, base),
        GeneratorKind::XLocationShift => (
            base,
            ArmParams {
                x_mean: base.x_mean + spec.shift,
                ..base
            },
        ),
        GeneratorKind::ZLocationShift => (
            base,
            ArmParams {
                z_mean: base.z_mean + spec.shift,
                ..base
            },
        ),
        GeneratorKind::AssociationFlip => (
            base,
            ArmParams {
                rho: -base.rho,
                ..base
            },
        ),
        GeneratorKind::Figure1Replica => (
            // Arm A dominates in changes; its level CDF is slightly better in
            // the middle but crosses arm B's high in the right tail.
            ArmParams {
                x_mean: spec.shift,
                x_sd: 0.45,
                z_mean: 7.0,
                z_sd: 1.0,
                rho: spec.correlation,
            },
            ArmParams {
                x_mean: 0.0,
                x_sd: 0.45,
                z_mean: 6.95,
                z_sd: 1.03,
                rho: spec.correlation,
            },
        ),
    }
}

fn draw_arm(rng: &mut ChaCha8Rng, n: usize, p: ArmParams) -> Vec<Observation> {
    let tail = (1.0 - p.rho * p.rho).sqrt();
    (0..n)
        .map(|_| loop {
            let u: f64 = rng.sample(StandardNormal);
            let w: f64 = rng.sample(StandardNormal);
            let x = p.x_mean + p.x_sd * u;
            let z = p.z_mean + p.z_sd * (p.rho * u + tail * w);
            // Levels live on the nonnegative half-line; reject the rare
            // excursion below zero.
            if z >= 0.0 {
                break Observation { x, z };
            }
        })
        .collect()
}

/// Draws the two arms of a scenario. Deterministic given `(spec, seed)`.
pub fn generate(spec: &ScenarioSpec, seed: u64) -> Result<(PolicySample, PolicySample)> {
    spec.validate()?;
    let (pa, pb) = arm_params(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = PolicySample::new("A", draw_arm(&mut rng, spec.n_a, pa))?;
    let b = PolicySample::new("B", draw_arm(&mut rng, spec.n_b, pb))?;
    Ok((a, b))
}

/// Rejection rate of one criterion/direction across Monte Carlo replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOutcome {
    pub criterion: Criterion,
    pub direction: Direction,
    /// Pooled sample size per replication.
    pub n: usize,
    pub rejection_rate: f64,
    /// Binomial standard error of the rate estimate.
    pub mc_se: f64,
    pub rejections: usize,
    pub replications: usize,
}

fn mc_run(spec: &ScenarioSpec, seed: u64) -> Result<Vec<McOutcome>> {
    spec.validate()?;
    let one = |j: usize| -> Result<Vec<(Criterion, Direction, bool)>> {
        let data_seed = mix_seed(seed, j as u64 + 1);
        let (a, b) = generate(spec, data_seed)?;
        let cfg = spec.run_config(mix_seed(data_seed, 0xB00B_5EED_0000_0001));
        let results = run_suite_seq(&a, &b, &cfg)?;
        Ok(results
            .into_iter()
            .map(|r| (r.criterion, r.direction, r.p_value <= spec.alpha))
            .collect())
    };
    let rows = run_replications(spec.mc_replications, one)?;

    let mut outcomes: Vec<McOutcome> = rows[0]
        .iter()
        .map(|&(criterion, direction, _)| McOutcome {
            criterion,
            direction,
            n: spec.n_a + spec.n_b,
            rejection_rate: 0.0,
            mc_se: 0.0,
            rejections: 0,
            replications: spec.mc_replications,
        })
        .collect();
    for row in &rows {
        for (slot, &(c, d, reject)) in outcomes.iter_mut().zip(row) {
            debug_assert!(slot.criterion == c && slot.direction == d);
            slot.rejections += reject as usize;
        }
    }
    let m = spec.mc_replications as f64;
    for o in &mut outcomes {
        o.rejection_rate = o.rejections as f64 / m;
        o.mc_se = (o.rejection_rate * (1.0 - o.rejection_rate) / m).sqrt();
    }
    Ok(outcomes)
}

#[cfg(feature = "parallel")]
fn run_replications<T: Send>(
    count: usize,
    one: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(one).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_replications<T>(count: usize, one: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..count).map(one).collect()
}

/// Empirical size study: rejection rate per criterion/direction under the
/// null boundary.
pub fn mc_size(spec: &ScenarioSpec, seed: u64) -> Result<Vec<McOutcome>> {
    if spec.generator != GeneratorKind::NullIdentical {
        return Err(Error::InvalidConfig(
            "mc_size requires the null_identical generator".into(),
        ));
    }
    mc_run(spec, seed)
}

/// Empirical power study under a fixed violation.
pub fn mc_power(spec: &ScenarioSpec, seed: u64) -> Result<Vec<McOutcome>> {
    if spec.generator == GeneratorKind::NullIdentical {
        return Err(Error::InvalidConfig(
            "mc_power requires a generator that violates the null".into(),
        ));
    }
    mc_run(spec, seed)
}

/// Writes outcomes as `criterion,direction,n,rejection_rate,mc_se` CSV.
pub fn write_mc_csv(outcomes: &[McOutcome], writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["criterion", "direction", "n", "rejection_rate", "mc_se"])?;
    for o in outcomes {
        w.write_record([
            o.criterion.to_string(),
            o.direction.to_string(),
            o.n.to_string(),
            o.rejection_rate.to_string(),
            o.mc_se.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: std::path::PathBuf::from("<writer>"),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edf::EdfSummary;

    #[test]
    fn generators_deterministic() {
        for kind in [
            GeneratorKind::NullIdentical,
            GeneratorKind::XLocationShift,
            GeneratorKind::ZLocationShift,
            GeneratorKind::AssociationFlip,
            GeneratorKind::Figure1Replica,
        ] {
            let spec = ScenarioSpec {
                shift: 0.4,
                ..ScenarioSpec::new(kind, 50, 1)
            };
            let (a1, b1) = generate(&spec, 77).unwrap();
            let (a2, b2) = generate(&spec, 77).unwrap();
            assert_eq!(a1, a2);
            assert_eq!(b1, b2);
            assert_eq!(a1.n(), 50);
            assert!(a1.observations().iter().all(|o| o.z >= 0.0));
        }
    }

    #[test]
    fn x_shift_moves_the_mean() {
        let spec = ScenarioSpec::x_location_shift(0.5, 2000, 1);
        let (a, b) = generate(&spec, 5).unwrap();
        let mean = |s: &PolicySample| {
            s.observations().iter().map(|o| o.x).sum::<f64>() / s.n() as f64
        };
        let diff = mean(&b) - mean(&a);
        // 3 standard errors of the mean difference at x_sd = 1.
        let tol = 3.0 * (2.0f64 / 2000.0).sqrt();
        assert!((diff - 0.5).abs() < tol, "diff = {diff}");
    }

    #[test]
    fn figure1_changes_dominance_and_level_crossing() {
        let spec = ScenarioSpec::figure1_replica(5000);
        let (a, b) = generate(&spec, 9).unwrap();
        let support = crate::data_model::pooled_support(&a, &b);
        let ea = EdfSummary::new(&a, &support).unwrap();
        let eb = EdfSummary::new(&b, &support).unwrap();
        // Arm A first-order dominates in changes: its change ECDF is weakly
        // below arm B's everywhere on a fine grid.
        let mut x = support.x_min;
        while x <= support.x_max {
            assert!(ea.cdf1(x) <= eb.cdf1(x) + 1e-12, "at x = {x}");
            x += (support.x_max - support.x_min) / 400.0;
        }
        // Levels are not strongly ordered: arm A is clearly better at the
        // bottom of the level distribution, while near the top the CDFs all
        // but coincide (the population curves cross high in the tail).
        let low = 6.0;
        let high = 9.5;
        assert!(ea.cdf2(low) + 5e-3 < eb.cdf2(low));
        assert!((ea.cdf2(high) - eb.cdf2(high)).abs() < 0.01);
    }

    #[test]
    fn association_flip_flips_sample_correlation() {
        let spec = ScenarioSpec {
            correlation: 0.6,
            ..ScenarioSpec::new(GeneratorKind::AssociationFlip, 3000, 1)
        };
        let (a, b) = generate(&spec, 13).unwrap();
        let corr = |s: &PolicySample| {
            let n = s.n() as f64;
            let mx = s.observations().iter().map(|o| o.x).sum::<f64>() / n;
            let mz = s.observations().iter().map(|o| o.z).sum::<f64>() / n;
            let mut sxz = 0.0;
            let mut sxx = 0.0;
            let mut szz = 0.0;
            for o in s.observations() {
                sxz += (o.x - mx) * (o.z - mz);
                sxx += (o.x - mx) * (o.x - mx);
                szz += (o.z - mz) * (o.z - mz);
            }
            sxz / (sxx * szz).sqrt()
        };
        assert!(corr(&a) > 0.5);
        assert!(corr(&b) < -0.5);
    }

    #[test]
    fn mc_smoke_run() {
        let spec = ScenarioSpec {
            bootstrap_reps: 49,
            grid_x: 10,
            grid_z: 7,
            criteria: vec![Criterion::Lasbd],
            ..ScenarioSpec::null_identical(40, 8)
        };
        let out = mc_size(&spec, 123).unwrap();
        assert_eq!(out.len(), 2);
        for o in &out {
            assert!((0.0..=1.0).contains(&o.rejection_rate));
            assert_eq!(o.replications, 8);
            assert_eq!(o.n, 80);
        }
        // Deterministic.
        assert_eq!(out, mc_size(&spec, 123).unwrap());
    }

    #[test]
    fn mc_size_rejects_wrong_generator() {
        let spec = ScenarioSpec::x_location_shift(1.0, 40, 2);
        assert!(mc_size(&spec, 1).is_err());
        assert!(mc_power(&spec, 1).is_ok());
        let null = ScenarioSpec {
            bootstrap_reps: 19,
            grid_x: 6,
            grid_z: 5,
            criteria: vec![Criterion::KrAdditive],
            mc_replications: 2,
            ..ScenarioSpec::null_identical(20, 2)
        };
        assert!(mc_power(&null, 1).is_err());
        assert!(mc_size(&null, 1).is_ok());
    }

    #[test]
    fn alpha_zero_never_rejects() {
        let spec = ScenarioSpec {
            alpha: 0.0,
            bootstrap_reps: 49,
            grid_x: 8,
            grid_z: 6,
            criteria: vec![Criterion::Lasbd, Criterion::Iasd],
            ..ScenarioSpec::null_identical(60, 6)
        };
        for o in mc_size(&spec, 2024).unwrap() {
            assert_eq!(o.rejection_rate, 0.0, "{} {}", o.criterion, o.direction);
        }
    }

    #[test]
    fn mc_csv_shape() {
        let out = vec![McOutcome {
            criterion: Criterion::Lasbd,
            direction: Direction::AOverB,
            n: 400,
            rejection_rate: 0.05,
            mc_se: 0.015,
            rejections: 10,
            replications: 200,
        }];
        let mut buf = Vec::new();
        write_mc_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "criterion,direction,n,rejection_rate,mc_se"
        );
        assert!(lines.next().unwrap().starts_with("LASBD,A_over_B,400,0.05,"));
    }
}
