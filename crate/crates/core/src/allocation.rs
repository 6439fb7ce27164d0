//! Reuse admission and transmit-power selection for a single (CU, D2D) pair.
//!
//! In the `(P_d2d, P_cu)` plane each minimum-SINR constraint is a half-plane
//! bounded by a line with positive slope. The two lines cross at point A.
//! When the D2D line is steeper the feasible set is the wedge above A, and the
//! pair can share a channel iff A lies inside the max-power box.
//!
//! Scaling both powers up raises both SINRs, so the sum-rate optimum sits on
//! one of the two max-power edges of the box. Along each edge the sum rate
//! has at most one stationary point, so the optimum is among the edge
//! endpoints clipped to the feasible wedge and those stationary points.

use crate::channel::GainTable;
pub use crate::channel::PairGains;
use crate::error::{Error, Result};
use crate::qos::QosSpec;
use crate::units::{dbm_to_mw, spectral_efficiency};

/// Relative slack when checking candidates that sit exactly on a constraint.
const FEASIBILITY_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLimits {
    pub p_max_cu_mw: f64,
    pub p_max_d2d_mw: f64,
    /// Noise power per channel.
    pub noise_mw: f64,
}

impl PowerLimits {
    pub fn from_dbm(p_max_cu_dbm: f64, p_max_d2d_dbm: f64, noise_dbm: f64) -> Self {
        PowerLimits {
            p_max_cu_mw: dbm_to_mw(p_max_cu_dbm),
            p_max_d2d_mw: dbm_to_mw(p_max_d2d_dbm),
            noise_mw: dbm_to_mw(noise_dbm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_max_cu", self.p_max_cu_mw),
            ("p_max_d2d", self.p_max_d2d_mw),
            ("noise", self.noise_mw),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("must be positive, got {v} mW"),
                ));
            }
        }
        Ok(())
    }

    /// Uplink rate of a CU alone on its channel at full power.
    pub fn solo_cu_rate(&self, g_cu_bs: f64) -> f64 {
        spectral_efficiency(self.p_max_cu_mw * g_cu_bs / self.noise_mw)
    }
}

impl Default for PowerLimits {
    /// 23 dBm for both device classes, -114 dBm noise.
    fn default() -> Self {
        PowerLimits::from_dbm(23.0, 23.0, -114.0)
    }
}

/// SINR of the CU at the BS while the D2D pair transmits on its channel.
#[inline]
pub fn sinr_cu(g: &PairGains, p_cu: f64, p_d2d: f64, noise: f64) -> f64 {
    p_cu * g.g_cu_bs / (noise + p_d2d * g.h_d2d_bs)
}

/// SINR at the D2D receiver while the CU transmits.
#[inline]
pub fn sinr_d2d(g: &PairGains, p_cu: f64, p_d2d: f64, noise: f64) -> f64 {
    p_d2d * g.g_d2d / (noise + p_cu * g.h_cu_d2d)
}

/// An operating point of a reusing pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPair {
    pub p_cu_mw: f64,
    pub p_d2d_mw: f64,
    pub sinr_cu: f64,
    pub sinr_d2d: f64,
    /// `log2(1 + sinr_cu) + log2(1 + sinr_d2d)`.
    pub sum_rate_bpshz: f64,
}

impl PowerPair {
    pub fn evaluate(g: &PairGains, p_cu_mw: f64, p_d2d_mw: f64, noise_mw: f64) -> Self {
        let sinr_cu = sinr_cu(g, p_cu_mw, p_d2d_mw, noise_mw);
        let sinr_d2d = sinr_d2d(g, p_cu_mw, p_d2d_mw, noise_mw);
        PowerPair {
            p_cu_mw,
            p_d2d_mw,
            sinr_cu,
            sinr_d2d,
            sum_rate_bpshz: spectral_efficiency(sinr_cu) + spectral_efficiency(sinr_d2d),
        }
    }

    /// Whether both SINR floors and both power caps hold, up to `rtol`.
    pub fn satisfies(&self, qos: &QosSpec, limits: &PowerLimits, rtol: f64) -> bool {
        self.p_cu_mw > 0.0
            && self.p_d2d_mw > 0.0
            && self.p_cu_mw <= limits.p_max_cu_mw * (1.0 + rtol)
            && self.p_d2d_mw <= limits.p_max_d2d_mw * (1.0 + rtol)
            && self.sinr_cu >= qos.sinr_min_cu * (1.0 - rtol)
            && self.sinr_d2d >= qos.sinr_min_d2d * (1.0 - rtol)
    }
}

/// Intersection of the two minimum-SINR lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasiblePoint {
    pub p_cu_a_mw: f64,
    pub p_d2d_a_mw: f64,
}

impl FeasiblePoint {
    pub fn within(&self, limits: &PowerLimits) -> bool {
        self.p_cu_a_mw > 0.0
            && self.p_cu_a_mw <= limits.p_max_cu_mw
            && self.p_d2d_a_mw > 0.0
            && self.p_d2d_a_mw <= limits.p_max_d2d_mw
    }
}

/// Axis intercepts of the two lines: the powers each link needs with no
/// interference at all, `(P_cu_min, P_d2d_min)`.
pub fn min_power_intercepts(g: &PairGains, qos: &QosSpec, noise_mw: f64) -> (f64, f64) {
    (
        qos.sinr_min_cu * noise_mw / g.g_cu_bs,
        qos.sinr_min_d2d * noise_mw / g.g_d2d,
    )
}

fn intersection_denominator(g: &PairGains, qos: &QosSpec) -> f64 {
    g.g_d2d * g.g_cu_bs - qos.sinr_min_cu * qos.sinr_min_d2d * g.h_cu_d2d * g.h_d2d_bs
}

/// Necessary condition for reuse: the D2D constraint line is steeper than the
/// CU line, so the two meet in the positive quadrant.
pub fn slope_condition(g: &PairGains, qos: &QosSpec) -> bool {
    intersection_denominator(g, qos) > 0.0
}

/// Point A, or `None` when the lines do not meet in the positive quadrant.
/// The pair is admissible iff the result is [`FeasiblePoint::within`] the
/// power limits.
pub fn point_a(g: &PairGains, qos: &QosSpec, limits: &PowerLimits) -> Option<FeasiblePoint> {
    let den = intersection_denominator(g, qos);
    if !(den > 0.0) {
        return None;
    }
    let (ec, ed) = (qos.sinr_min_cu, qos.sinr_min_d2d);
    let noise = limits.noise_mw;
    let p_cu = (g.g_d2d * ec + g.h_d2d_bs * ec * ed) * noise / den;
    let p_d2d = (g.g_cu_bs * ed + g.h_cu_d2d * ec * ed) * noise / den;
    Some(FeasiblePoint {
        p_cu_a_mw: p_cu,
        p_d2d_a_mw: p_d2d,
    })
}

/// Point A if the pair may share a channel.
pub fn admissible(g: &PairGains, qos: &QosSpec, limits: &PowerLimits) -> Option<FeasiblePoint> {
    point_a(g, qos, limits).filter(|a| a.within(limits))
}

/// Largest power `x` of a transmitter such that a victim with received signal
/// `victim_signal` keeps SINR `eps` while `x * h` interferes:
/// `victim_signal / (noise + x h) >= eps`.
fn interference_cap(victim_signal: f64, eps: f64, noise: f64, h: f64) -> f64 {
    if eps <= 0.0 {
        return f64::INFINITY;
    }
    let headroom = victim_signal / eps - noise;
    if h <= 0.0 {
        if headroom >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        headroom / h
    }
}

/// Stationary point along a max-power edge. The moving transmitter has power
/// `x`, the fixed one delivers `fixed_signal` at its receiver and suffers
/// `x * h_fixed_victim`; the moving link sees gain `own_gain / own_noise`.
fn edge_stationary_point(
    fixed_signal: f64,
    h: f64,
    own_gain_over_noise: f64,
    noise: f64,
) -> Option<f64> {
    if h <= 0.0 || own_gain_over_noise <= 0.0 {
        return None;
    }
    let u2 = fixed_signal * h / own_gain_over_noise - fixed_signal * noise;
    if !(u2 > 0.0) {
        return None;
    }
    Some((u2.sqrt() - noise) / h)
}

/// Candidate operating points: both feasible endpoints of each max-power edge
/// plus the stationary point of the sum rate inside each edge.
pub fn candidate_points(g: &PairGains, qos: &QosSpec, limits: &PowerLimits) -> Vec<(f64, f64)> {
    let (ec, ed) = (qos.sinr_min_cu, qos.sinr_min_d2d);
    let noise = limits.noise_mw;
    let (pc_max, pd_max) = (limits.p_max_cu_mw, limits.p_max_d2d_mw);
    let mut out = Vec::with_capacity(6);

    // CU at full power, D2D power varies.
    let pd_lo = ed * (noise + pc_max * g.h_cu_d2d) / g.g_d2d;
    let pd_hi = pd_max.min(interference_cap(pc_max * g.g_cu_bs, ec, noise, g.h_d2d_bs));
    if pd_lo <= pd_hi {
        out.push((pc_max, pd_lo));
        out.push((pc_max, pd_hi));
        let own = g.g_d2d / (noise + pc_max * g.h_cu_d2d);
        if let Some(x) = edge_stationary_point(pc_max * g.g_cu_bs, g.h_d2d_bs, own, noise) {
            if x > pd_lo && x < pd_hi {
                out.push((pc_max, x));
            }
        }
    }

    // D2D at full power, CU power varies.
    let pc_lo = ec * (noise + pd_max * g.h_d2d_bs) / g.g_cu_bs;
    let pc_hi = pc_max.min(interference_cap(pd_max * g.g_d2d, ed, noise, g.h_cu_d2d));
    if pc_lo <= pc_hi {
        out.push((pc_lo, pd_max));
        out.push((pc_hi, pd_max));
        let own = g.g_cu_bs / (noise + pd_max * g.h_d2d_bs);
        if let Some(y) = edge_stationary_point(pd_max * g.g_d2d, g.h_cu_d2d, own, noise) {
            if y > pc_lo && y < pc_hi {
                out.push((y, pd_max));
            }
        }
    }
    out
}

/// Sum-rate maximizing powers of an admissible pair.
///
/// Ties go to the candidate with the larger CU power.
pub fn optimal_power(g: &PairGains, qos: &QosSpec, limits: &PowerLimits) -> Result<PowerPair> {
    let mut best: Option<PowerPair> = None;
    for (pc, pd) in candidate_points(g, qos, limits) {
        let pc = pc.min(limits.p_max_cu_mw);
        let pd = pd.min(limits.p_max_d2d_mw);
        let cand = PowerPair::evaluate(g, pc, pd, limits.noise_mw);
        if !cand.satisfies(qos, limits, FEASIBILITY_RTOL) {
            continue;
        }
        best = match best {
            Some(b)
                if b.sum_rate_bpshz > cand.sum_rate_bpshz
                    || (b.sum_rate_bpshz == cand.sum_rate_bpshz && b.p_cu_mw >= cand.p_cu_mw) =>
            {
                Some(b)
            }
            _ => Some(cand),
        };
    }
    best.ok_or_else(|| {
        Error::Internal(format!(
            "no feasible power candidate for an admissible pair: {g:?}, {qos:?}, {limits:?}"
        ))
    })
}

/// An admissible CU for some D2D pair, with its optimal powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReuseCandidate {
    pub cu: usize,
    pub power: PowerPair,
    pub point_a: FeasiblePoint,
}

/// Candidate reuse partners, indexed by D2D pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReuseCandidates {
    pub per_d2d: Vec<Vec<ReuseCandidate>>,
}

impl ReuseCandidates {
    pub fn n_d2d(&self) -> usize {
        self.per_d2d.len()
    }

    pub fn get(&self, cu: usize, d2d: usize) -> Option<&ReuseCandidate> {
        self.per_d2d.get(d2d)?.iter().find(|c| c.cu == cu)
    }

    /// D2D pairs with no admissible CU.
    pub fn stranded(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_d2d
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(j, _)| j)
    }
}

/// Runs admission and power optimization over every (CU, D2D) pair.
pub fn reuse_candidates(
    gains: &GainTable,
    qos: &QosSpec,
    limits: &PowerLimits,
) -> Result<ReuseCandidates> {
    let per_d2d = (0..gains.n_d2d())
        .map(|j| {
            let mut list = Vec::new();
            for i in 0..gains.n_cu() {
                let g = gains.pair(i, j);
                if let Some(a) = admissible(&g, qos, limits) {
                    list.push(ReuseCandidate {
                        cu: i,
                        power: optimal_power(&g, qos, limits)?,
                        point_a: a,
                    });
                }
            }
            Ok(list)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReuseCandidates { per_d2d })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(g_cu_bs: f64, g_d2d: f64, h_cu_d2d: f64, h_d2d_bs: f64) -> PairGains {
        PairGains {
            g_cu_bs,
            g_d2d,
            h_cu_d2d,
            h_d2d_bs,
        }
    }

    fn limits(pc: f64, pd: f64, noise: f64) -> PowerLimits {
        PowerLimits {
            p_max_cu_mw: pc,
            p_max_d2d_mw: pd,
            noise_mw: noise,
        }
    }

    #[test]
    fn slope_condition_cases() {
        let q = QosSpec::with_thresholds(2.0, 2.0);
        assert!(slope_condition(
            &pair(1e-9, 1e-6, f64::MIN_POSITIVE, f64::MIN_POSITIVE),
            &q
        ));
        // 1*1 - 2*2*1*1 < 0
        assert!(!slope_condition(&pair(1.0, 1.0, 1.0, 1.0), &q));
        // exact boundary: g_j g_iB = eps_c eps_d h h
        assert!(!slope_condition(&pair(2.0, 2.0, 1.0, 1.0), &q));
        assert!(point_a(&pair(2.0, 2.0, 1.0, 1.0), &q, &limits(1.0, 1.0, 1.0)).is_none());
    }

    #[test]
    fn point_a_hand_evaluation() {
        let q = QosSpec::with_thresholds(1.0, 1.0);
        let a = point_a(&pair(4.0, 4.0, 1.0, 1.0), &q, &limits(1.0, 1.0, 1.0)).unwrap();
        assert!((a.p_cu_a_mw - 1.0 / 3.0).abs() < 1e-15);
        assert!((a.p_d2d_a_mw - 1.0 / 3.0).abs() < 1e-15);
        assert!(a.within(&limits(1.0, 1.0, 1.0)));
        assert!(!a.within(&limits(0.3, 1.0, 1.0)));
    }

    #[test]
    fn point_a_without_interference_is_the_intercepts() {
        let q = QosSpec::with_thresholds(3.0, 5.0);
        let g = pair(2.0, 7.0, 0.0, 0.0);
        let l = limits(10.0, 10.0, 0.5);
        let a = point_a(&g, &q, &l).unwrap();
        let (pc, pd) = min_power_intercepts(&g, &q, l.noise_mw);
        assert!((a.p_cu_a_mw - pc).abs() < 1e-15);
        assert!((a.p_d2d_a_mw - pd).abs() < 1e-15);
        assert!((pc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn point_a_meets_both_thresholds() {
        let q = QosSpec::with_thresholds(2.5, 1.7);
        let g = pair(3e-10, 2e-8, 4e-12, 7e-12);
        let l = PowerLimits::default();
        let a = point_a(&g, &q, &l).unwrap();
        let sc = sinr_cu(&g, a.p_cu_a_mw, a.p_d2d_a_mw, l.noise_mw);
        let sd = sinr_d2d(&g, a.p_cu_a_mw, a.p_d2d_a_mw, l.noise_mw);
        assert!((sc - 2.5).abs() / 2.5 < 1e-12);
        assert!((sd - 1.7).abs() / 1.7 < 1e-12);
    }

    #[test]
    fn interference_free_optimum_is_full_power() {
        let q = QosSpec::with_thresholds(2.0, 2.0);
        let g = pair(1e-9, 1e-8, 0.0, 0.0);
        let l = PowerLimits::default();
        let p = optimal_power(&g, &q, &l).unwrap();
        assert_eq!(p.p_cu_mw, l.p_max_cu_mw);
        assert_eq!(p.p_d2d_mw, l.p_max_d2d_mw);
        let expect = (1.0 + l.p_max_cu_mw * 1e-9 / l.noise_mw).log2()
            + (1.0 + l.p_max_d2d_mw * 1e-8 / l.noise_mw).log2();
        assert!((p.sum_rate_bpshz - expect).abs() < 1e-12);
    }

    #[test]
    fn cu_limited_case_uses_the_cu_constraint_crossing() {
        // Full power for both breaks the CU floor, the D2D link is strong:
        // the best point keeps the CU at max and raises the D2D power until
        // the CU SINR touches its floor.
        let q = QosSpec::with_thresholds(1.0, 1.0);
        let g = pair(1.0, 100.0, 0.01, 0.5);
        let l = limits(10.0, 10.0, 1.0);
        let p = optimal_power(&g, &q, &l).unwrap();
        assert_eq!(p.p_cu_mw, 10.0);
        // cap: 10 / (1 + 0.5 x) = 1 -> x = 18 > 10, so the box corner is feasible
        assert_eq!(p.p_d2d_mw, 10.0);

        let g = pair(1.0, 100.0, 0.01, 5.0);
        let p = optimal_power(&g, &q, &l).unwrap();
        assert_eq!(p.p_cu_mw, 10.0);
        // 10 / (1 + 5 x) = 1 -> x = 1.8
        assert!((p.p_d2d_mw - 1.8).abs() < 1e-12);
        assert!((p.sinr_cu - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_candidate_set_is_an_internal_error() {
        let q = QosSpec::with_thresholds(100.0, 100.0);
        let g = pair(1.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            optimal_power(&g, &q, &limits(1.0, 1.0, 1.0)),
            Err(Error::Internal(_))
        ));
    }

    #[test]
    fn reuse_candidate_lists() {
        let q = QosSpec::with_thresholds(2.0, 2.0);
        let l = PowerLimits::default();
        let empty = GainTable::new(vec![1e-10, 2e-10], vec![], vec![], vec![]).unwrap();
        assert!(reuse_candidates(&empty, &q, &l).unwrap().per_d2d.is_empty());

        let one = GainTable::new(vec![1e-10], vec![1e-8], vec![1e-300], vec![1e-300]).unwrap();
        let r = reuse_candidates(&one, &q, &l).unwrap();
        assert_eq!(r.per_d2d.len(), 1);
        assert_eq!(r.per_d2d[0].len(), 1);
        assert_eq!(r.per_d2d[0][0].cu, 0);
        assert!(r.get(0, 0).is_some());
        assert_eq!(r.stranded().count(), 0);

        let hopeless = GainTable::new(vec![1e-16], vec![1e-8], vec![1e-9], vec![1e-9]).unwrap();
        let r = reuse_candidates(&hopeless, &q, &l).unwrap();
        assert_eq!(r.stranded().collect::<Vec<_>>(), vec![0]);
    }
}
