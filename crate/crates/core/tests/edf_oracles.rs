//! Numeric-integration oracles for the closed-form transforms.
//!
//! The integral transforms are implemented as exact closed forms over the
//! empirical measure. These tests check them against brute-force trapezoidal
//! integration of the underlying step functions, which shares no code with
//! the implementation path.

use domtest_core::data_model::{pooled_support, Observation, PolicySample, SupportBox};
use domtest_core::EdfSummary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MESH_1D: usize = 100_000;
const MESH_2D: usize = 500;
const TOL_1D: f64 = 1e-6;
const TOL_2D: f64 = 1e-4;

/// Composite trapezoid rule on `points` mesh nodes over [lo, hi].
fn trapezoid_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let h = (hi - lo) / (points - 1) as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..points - 1 {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

/// Composite 2-D trapezoid rule on a `points × points` node lattice.
fn trapezoid_2d(
    f: impl Fn(f64, f64) -> f64,
    lo: (f64, f64),
    hi: (f64, f64),
    points: usize,
) -> f64 {
    if hi.0 <= lo.0 || hi.1 <= lo.1 {
        return 0.0;
    }
    let hx = (hi.0 - lo.0) / (points - 1) as f64;
    let hz = (hi.1 - lo.1) / (points - 1) as f64;
    let mut acc = 0.0;
    for i in 0..points {
        let wx = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
        let x = lo.0 + i as f64 * hx;
        for k in 0..points {
            let wz = if k == 0 || k == points - 1 { 0.5 } else { 1.0 };
            acc += wx * wz * f(x, lo.1 + k as f64 * hz);
        }
    }
    acc * hx * hz
}

fn random_summary(seed: u64, n: usize) -> (EdfSummary, SupportBox) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Unit-free scale; a compact box keeps the fixed-mesh oracle error well
    // below the comparison tolerances.
    let obs: Vec<Observation> = (0..n)
        .map(|_| Observation {
            x: rng.random_range(-0.3..0.3),
            z: rng.random_range(0.0..0.6),
        })
        .collect();
    let sample = PolicySample::new("T", obs).unwrap();
    let support = pooled_support(&sample, &sample);
    (EdfSummary::new(&sample, &support).unwrap(), support)
}

#[test]
fn marginal_integrals_match_trapezoid() {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (s, b) = random_summary(seed, 50);
        let queries = [
            b.x_min,
            b.x_min + 0.3 * (b.x_max - b.x_min),
            0.0,
            b.x_min + 0.8 * (b.x_max - b.x_min),
            b.x_max,
        ];
        for &x in &queries {
            let h1_num = trapezoid_1d(|t| s.cdf1(t), b.x_min, x, MESH_1D);
            let s1_num = trapezoid_1d(|t| 1.0 - s.cdf1(t), x, b.x_max, MESH_1D);
            worst = worst.max((s.h1(x) - h1_num).abs());
            worst = worst.max((s.s1(x) - s1_num).abs());
            assert!(
                (s.h1(x) - h1_num).abs() < TOL_1D,
                "h1 seed {seed} x {x}: {} vs {}",
                s.h1(x),
                h1_num
            );
            assert!(
                (s.s1(x) - s1_num).abs() < TOL_1D,
                "s1 seed {seed} x {x}: {} vs {}",
                s.s1(x),
                s1_num
            );
        }
        for frac in [0.2, 0.55, 1.0] {
            let z = b.z_min + frac * (b.z_max - b.z_min);
            let h2_num = trapezoid_1d(|t| s.cdf2(t), b.z_min, z, MESH_1D);
            worst = worst.max((s.h2(z) - h2_num).abs());
            assert!(
                (s.h2(z) - h2_num).abs() < TOL_1D,
                "h2 seed {seed} z {z}: {} vs {}",
                s.h2(z),
                h2_num
            );
        }
    }
    println!("max 1-D deviation from trapezoid oracle: {worst:.3e}");
}

#[test]
fn corner_integrals_match_trapezoid() {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (s, b) = random_summary(seed, 50);
        let corners = [
            (b.x_max, b.z_max),
            (b.x_min + 0.6 * (b.x_max - b.x_min), b.z_min + 0.7 * (b.z_max - b.z_min)),
            (b.x_min + 0.25 * (b.x_max - b.x_min), b.z_max),
        ];
        for &(x, z) in &corners {
            let h_num = trapezoid_2d(
                |t, u| s.joint_cdf(t, u),
                (b.x_min, b.z_min),
                (x, z),
                MESH_2D,
            );
            let l_num = trapezoid_2d(|t, u| s.k_fn(t, u), (b.x_min, b.z_min), (x, z), MESH_2D);
            worst = worst.max((s.h_joint(x, z) - h_num).abs());
            worst = worst.max((s.l_joint(x, z) - l_num).abs());
            assert!(
                (s.h_joint(x, z) - h_num).abs() < TOL_2D,
                "h_joint seed {seed} at ({x}, {z}): {} vs {}",
                s.h_joint(x, z),
                h_num
            );
            assert!(
                (s.l_joint(x, z) - l_num).abs() < TOL_2D,
                "l_joint seed {seed} at ({x}, {z}): {} vs {}",
                s.l_joint(x, z),
                l_num
            );
        }
    }
    println!("max 2-D deviation from trapezoid oracle: {worst:.3e}");
}
