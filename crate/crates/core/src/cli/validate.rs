//! Randomized oracle suite behind `d2dsim validate`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::{admissible, optimal_power, point_a, reuse_candidates, sinr_cu, sinr_d2d};
use crate::experiment::derive_seed;
use crate::matching::{brute_force_match, build_weights, hungarian_match, BRUTE_FORCE_MAX_D2D};
use crate::oracle::{
    grid_feasible, grid_max_sum_rate, random_gain_table, random_pair, random_pair_where,
};
use crate::qos::{sinr_threshold, QosSpec};

/// Deliberate defects for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negate every rate increment before the Hungarian solve.
    DeltaSignFlip,
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub instances: usize,
    pub seed: u64,
    pub max_cu: usize,
    pub max_d2d: usize,
    pub fault: Option<Fault>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            instances: 100,
            seed: 1,
            max_cu: 8,
            max_d2d: 6,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub instance: usize,
    pub seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub checked: usize,
    /// First failing instance, if any.
    pub failure: Option<Failure>,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

type Check = fn(&mut ChaCha8Rng, &ValidateOptions) -> Result<(), String>;

/// Default control-traffic threshold against its frozen high-precision value.
fn check_threshold() -> Result<(), String> {
    const EXPECTED: f64 = 2.886_307_345_997_158;
    let eps = sinr_threshold(0.02, 15_360.0, 15_360.0, 400e3).map_err(|e| e.to_string())?;
    if ((eps - EXPECTED) / EXPECTED).abs() > 1e-6 {
        return Err(format!("threshold {eps}, expected {EXPECTED}"));
    }
    Ok(())
}

fn check_point_a(rng: &mut ChaCha8Rng, _: &ValidateOptions) -> Result<(), String> {
    let (g, qos, limits) = random_pair_where(rng, |g, q, l| admissible(g, q, l).is_some())
        .ok_or("no admissible pair drawn")?;
    let a = point_a(&g, &qos, &limits).ok_or("admissible pair without point A")?;
    let sc = sinr_cu(&g, a.p_cu_a_mw, a.p_d2d_a_mw, limits.noise_mw);
    let sd = sinr_d2d(&g, a.p_cu_a_mw, a.p_d2d_a_mw, limits.noise_mw);
    let rel_c = ((sc - qos.sinr_min_cu) / qos.sinr_min_cu).abs();
    let rel_d = ((sd - qos.sinr_min_d2d) / qos.sinr_min_d2d).abs();
    if rel_c > 1e-9 || rel_d > 1e-9 {
        return Err(format!(
            "SINR at A off by {rel_c:e} / {rel_d:e} ({g:?}, {qos:?})"
        ));
    }
    Ok(())
}

fn check_admission(rng: &mut ChaCha8Rng, _: &ValidateOptions) -> Result<(), String> {
    let (g, qos, limits) = random_pair(rng);
    let ours = admissible(&g, &qos, &limits).is_some();
    let grid = grid_feasible(&g, &qos, &limits, 101, 8);
    if ours != grid {
        return Err(format!(
            "admissible = {ours}, grid feasible = {grid} ({g:?}, {qos:?})"
        ));
    }
    Ok(())
}

fn check_power(rng: &mut ChaCha8Rng, _: &ValidateOptions) -> Result<(), String> {
    let (g, qos, limits) = random_pair_where(rng, |g, q, l| admissible(g, q, l).is_some())
        .ok_or("no admissible pair drawn")?;
    let best = optimal_power(&g, &qos, &limits).map_err(|e| e.to_string())?;
    if !best.satisfies(&qos, &limits, 1e-9) {
        return Err(format!("optimum violates a constraint: {best:?}"));
    }
    let at_max = (best.p_cu_mw / limits.p_max_cu_mw).max(best.p_d2d_mw / limits.p_max_d2d_mw);
    if (at_max - 1.0).abs() > 1e-9 {
        return Err(format!("no power at its maximum: {best:?}"));
    }
    if let Some((grid_f, pc, pd)) = grid_max_sum_rate(&g, &qos, &limits, 201) {
        if best.sum_rate_bpshz < grid_f - 1e-3 {
            return Err(format!(
                "sum rate {} below grid optimum {grid_f} at ({pc}, {pd})",
                best.sum_rate_bpshz
            ));
        }
    }
    Ok(())
}

fn check_matching(rng: &mut ChaCha8Rng, opts: &ValidateOptions) -> Result<(), String> {
    let n_cu = rng.random_range(1..=opts.max_cu.max(1));
    let n_d2d = rng.random_range(0..=opts.max_d2d.min(n_cu).min(BRUTE_FORCE_MAX_D2D));
    let gains = random_gain_table(rng, n_cu, n_d2d).map_err(|e| e.to_string())?;
    let eps = rng.random_range(0.5..20.0);
    let qos = QosSpec::with_thresholds(eps, eps);
    let limits = Default::default();
    let candidates = reuse_candidates(&gains, &qos, &limits).map_err(|e| e.to_string())?;
    let weights = build_weights(&candidates, &gains, &limits, true);
    let solved = match opts.fault {
        Some(Fault::DeltaSignFlip) => hungarian_match(&weights.sign_flipped()),
        None => hungarian_match(&weights),
    };
    let oracle = brute_force_match(&weights).map_err(|e| e.to_string())?;
    if (solved.total_weight_bpshz - oracle.total_weight_bpshz).abs() > 1e-9 {
        return Err(format!(
            "Hungarian weight {} vs exhaustive {} (N = {n_cu}, M = {n_d2d})",
            solved.total_weight_bpshz, oracle.total_weight_bpshz
        ));
    }
    if solved.d2d_to_cu != oracle.d2d_to_cu {
        return Err(format!(
            "assignments differ: {:?} vs {:?}",
            solved.d2d_to_cu, oracle.d2d_to_cu
        ));
    }
    Ok(())
}

const PROPERTIES: [(&str, Check); 4] = [
    ("point-a-exactness", check_point_a),
    ("admission-vs-grid", check_admission),
    ("power-vs-grid", check_power),
    ("matching-vs-exhaustive", check_matching),
];

/// Runs every property on `opts.instances` random instances, reporting one
/// line per property to `out`.
pub fn run_validation(opts: &ValidateOptions, out: &mut dyn Write) -> Vec<PropertyOutcome> {
    let mut outcomes = vec![PropertyOutcome {
        name: "threshold-closed-form",
        checked: 1,
        failure: check_threshold().err().map(|detail| Failure {
            instance: 0,
            seed: 0,
            detail,
        }),
    }];
    for (stream, (name, check)) in PROPERTIES.iter().enumerate() {
        let mut outcome = PropertyOutcome {
            name,
            checked: 0,
            failure: None,
        };
        for k in 0..opts.instances {
            let seed = derive_seed(opts.seed, stream as u64, k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            outcome.checked += 1;
            if let Err(detail) = check(&mut rng, opts) {
                outcome.failure = Some(Failure {
                    instance: k,
                    seed,
                    detail,
                });
                break;
            }
        }
        outcomes.push(outcome);
    }
    for o in &outcomes {
        let _ = match &o.failure {
            None => writeln!(out, "PASS {:<24} {} instance(s)", o.name, o.checked),
            Some(f) => writeln!(
                out,
                "FAIL {:<24} instance {} seed {}: {}",
                o.name, f.instance, f.seed, f.detail
            ),
        };
    }
    outcomes
}
