//! Independent reference checks for the allocation and matching code.
//!
//! Nothing here calls into [`crate::allocation`]: SINRs are re-derived from
//! the raw gains, feasibility and optimality come from dense grids. Used by
//! `d2dsim validate` and the test suites.

use rand::Rng;

use crate::allocation::PowerLimits;
use crate::channel::{compute_gains, generate_topology, CellLayout, GainTable, PairGains};
use crate::channel::{PathlossModel, TopologyRequest};
use crate::error::Result;
use crate::qos::QosSpec;

#[derive(Debug, Clone, Copy)]
struct Link {
    g: PairGains,
    eps_cu: f64,
    eps_d2d: f64,
    noise: f64,
}

impl Link {
    fn sinrs(&self, p_cu: f64, p_d2d: f64) -> (f64, f64) {
        let g = &self.g;
        (
            p_cu * g.g_cu_bs / (self.noise + p_d2d * g.h_d2d_bs),
            p_d2d * g.g_d2d / (self.noise + p_cu * g.h_cu_d2d),
        )
    }

    /// `min(sinr_cu / eps_cu, sinr_d2d / eps_d2d)`; feasible iff >= 1.
    fn margin(&self, p_cu: f64, p_d2d: f64) -> f64 {
        if p_cu <= 0.0 || p_d2d <= 0.0 {
            return 0.0;
        }
        let (sc, sd) = self.sinrs(p_cu, p_d2d);
        let ratio = |s: f64, e: f64| if e > 0.0 { s / e } else { f64::INFINITY };
        ratio(sc, self.eps_cu).min(ratio(sd, self.eps_d2d))
    }

    fn sum_rate(&self, p_cu: f64, p_d2d: f64) -> f64 {
        let (sc, sd) = self.sinrs(p_cu, p_d2d);
        (1.0 + sc).log2() + (1.0 + sd).log2()
    }
}

fn link(g: &PairGains, qos: &QosSpec, limits: &PowerLimits) -> Link {
    Link {
        g: *g,
        eps_cu: qos.sinr_min_cu,
        eps_d2d: qos.sinr_min_d2d,
        noise: limits.noise_mw,
    }
}

/// Best sum rate over a `steps x steps` grid on `[0, P_d2d_max] x [0, P_cu_max]`
/// restricted to points meeting both SINR floors. `None` if no grid point is
/// feasible.
pub fn grid_max_sum_rate(
    g: &PairGains,
    qos: &QosSpec,
    limits: &PowerLimits,
    steps: usize,
) -> Option<(f64, f64, f64)> {
    assert!(steps >= 2);
    let l = link(g, qos, limits);
    let mut best: Option<(f64, f64, f64)> = None;
    for a in 0..steps {
        let p_cu = limits.p_max_cu_mw * a as f64 / (steps - 1) as f64;
        for b in 0..steps {
            let p_d2d = limits.p_max_d2d_mw * b as f64 / (steps - 1) as f64;
            if l.margin(p_cu, p_d2d) < 1.0 {
                continue;
            }
            let f = l.sum_rate(p_cu, p_d2d);
            if best.is_none_or(|(bf, _, _)| f > bf) {
                best = Some((f, p_cu, p_d2d));
            }
        }
    }
    best
}

/// Whether some point of the power box meets both SINR floors.
///
/// Scans the CU power axis on a `steps`-point grid. At each CU power the two
/// floors bound the D2D power from below and above; the slack between those
/// bounds is concave in CU power, so each of the `zooms` refinement rounds
/// narrows the scan around the best grid point without losing the maximum.
pub fn grid_feasible(
    g: &PairGains,
    qos: &QosSpec,
    limits: &PowerLimits,
    steps: usize,
    zooms: usize,
) -> bool {
    assert!(steps >= 3);
    let l = link(g, qos, limits);
    let p_d_max = limits.p_max_d2d_mw;
    // Largest D2D power the CU floor tolerates at `p_cu`, capped at the limit.
    let upper = |p_cu: f64| {
        let budget = if l.eps_cu > 0.0 {
            p_cu * l.g.g_cu_bs / l.eps_cu - l.noise
        } else {
            f64::INFINITY
        };
        if budget < 0.0 {
            f64::NEG_INFINITY
        } else if l.g.h_d2d_bs > 0.0 {
            (budget / l.g.h_d2d_bs).min(p_d_max)
        } else {
            p_d_max
        }
    };
    let lower = |p_cu: f64| l.eps_d2d * (l.noise + p_cu * l.g.h_cu_d2d) / l.g.g_d2d;
    let slack = |p_cu: f64| upper(p_cu) - lower(p_cu);
    let tol = -1e-12 * p_d_max;

    let (mut lo, mut hi) = (0.0, limits.p_max_cu_mw);
    for _ in 0..=zooms {
        let step = (hi - lo) / (steps - 1) as f64;
        let mut best = (f64::NEG_INFINITY, lo);
        for a in 0..steps {
            let p_cu = if a + 1 == steps {
                hi
            } else {
                lo + step * a as f64
            };
            let s = slack(p_cu);
            if s >= tol && p_cu > 0.0 {
                return true;
            }
            if s > best.0 {
                best = (s, p_cu);
            }
        }
        lo = (best.1 - step).max(0.0);
        hi = (best.1 + step).min(limits.p_max_cu_mw);
    }
    false
}

/// Random single-pair instance spanning all three feasible-region shapes.
/// Gains are drawn as SNR/INR values in dB at maximum power over the default
/// noise floor.
pub fn random_pair<R: Rng>(rng: &mut R) -> (PairGains, QosSpec, PowerLimits) {
    let limits = PowerLimits::default();
    let db = |rng: &mut R, lo: f64, hi: f64| 10f64.powf(rng.random_range(lo..hi) / 10.0);
    let per_cu = limits.noise_mw / limits.p_max_cu_mw;
    let per_d2d = limits.noise_mw / limits.p_max_d2d_mw;
    let g = PairGains {
        g_cu_bs: db(rng, 0.0, 45.0) * per_cu,
        g_d2d: db(rng, 5.0, 60.0) * per_d2d,
        h_cu_d2d: db(rng, -25.0, 35.0) * per_cu,
        h_d2d_bs: db(rng, -25.0, 40.0) * per_d2d,
    };
    let qos = QosSpec::with_thresholds(rng.random_range(0.3..20.0), rng.random_range(0.3..20.0));
    (g, qos, limits)
}

/// Random pair instance that passes `accept`; gives up after 10 000 draws.
pub fn random_pair_where<R: Rng>(
    rng: &mut R,
    mut accept: impl FnMut(&PairGains, &QosSpec, &PowerLimits) -> bool,
) -> Option<(PairGains, QosSpec, PowerLimits)> {
    (0..10_000).find_map(|_| {
        let inst = random_pair(rng);
        accept(&inst.0, &inst.1, &inst.2).then_some(inst)
    })
}

/// Gain table of a random drop with the default cell and channel models.
pub fn random_gain_table<R: Rng>(rng: &mut R, n_cu: usize, n_d2d: usize) -> Result<GainTable> {
    let layout = CellLayout::default();
    let request = TopologyRequest::new(n_cu, n_d2d);
    let topo = generate_topology(&layout, &request, rng.random())?;
    compute_gains(&layout, &topo, &PathlossModel::default(), rng.random())
}
