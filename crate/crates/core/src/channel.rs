//! Cell geometry, random drops and link gains.
//!
//! Gains are dimensionless received/transmitted power ratios with antenna
//! gains, receiver noise figure, shadowing and (optionally) fast fading folded
//! in, so the noise power stays a plain constant downstream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Links shorter than this are evaluated at this distance.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

const MAX_RX_PLACEMENT_ATTEMPTS: usize = 100_000;

const CU_STREAM: u64 = 0;
const D2D_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Static description of the cell and its radios.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    pub radius_m: f64,
    pub bs_position: Point,
    pub bs_antenna_height_m: f64,
    pub ue_antenna_height_m: f64,
    pub bs_antenna_gain_db: f64,
    pub ue_antenna_gain_db: f64,
    pub bs_noise_figure_db: f64,
    pub ue_noise_figure_db: f64,
    pub carrier_frequency_hz: f64,
}

impl Default for CellLayout {
    /// 500 m cell at 2 GHz, 25 m / 8 dBi / 5 dB NF base station and
    /// 1.5 m / 3 dBi / 9 dB NF user equipment.
    fn default() -> Self {
        CellLayout {
            radius_m: 500.0,
            bs_position: Point::default(),
            bs_antenna_height_m: 25.0,
            ue_antenna_height_m: 1.5,
            bs_antenna_gain_db: 8.0,
            ue_antenna_gain_db: 3.0,
            bs_noise_figure_db: 5.0,
            ue_noise_figure_db: 9.0,
            carrier_frequency_hz: 2e9,
        }
    }
}

impl CellLayout {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return Err(Error::invalid("radius_m", "must be positive and finite"));
        }
        if !(self.bs_antenna_height_m > 0.0 && self.ue_antenna_height_m > 0.0) {
            return Err(Error::invalid("antenna_height_m", "heights must be > 0"));
        }
        if !(self.carrier_frequency_hz > 0.0) {
            return Err(Error::invalid("carrier_frequency_hz", "must be > 0"));
        }
        let finite = [
            self.bs_position.x,
            self.bs_position.y,
            self.bs_antenna_gain_db,
            self.ue_antenna_gain_db,
            self.bs_noise_figure_db,
            self.ue_noise_figure_db,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "cell layout",
                "positions, antenna gains and noise figures must be finite",
            ));
        }
        Ok(())
    }
}

/// Log-distance pathloss, `PL_dB = intercept + coeff * log10(d_km)`, with
/// log-normal shadowing and optional unit-mean exponential fading.
#[derive(Debug, Clone, PartialEq)]
pub struct PathlossModel {
    pub cellular_pl_intercept_db: f64,
    pub cellular_pl_exponent_coeff: f64,
    pub d2d_pl_intercept_db: f64,
    pub d2d_pl_exponent_coeff: f64,
    pub cellular_shadowing_std_db: f64,
    pub d2d_shadowing_std_db: f64,
    pub fast_fading_enabled: bool,
}

impl Default for PathlossModel {
    /// Urban macro defaults: 128.1 + 37.6 log10(d) towards the BS,
    /// 148 + 40 log10(d) between devices, 8 / 10 dB shadowing, no fading.
    fn default() -> Self {
        PathlossModel {
            cellular_pl_intercept_db: 128.1,
            cellular_pl_exponent_coeff: 37.6,
            d2d_pl_intercept_db: 148.0,
            d2d_pl_exponent_coeff: 40.0,
            cellular_shadowing_std_db: 8.0,
            d2d_shadowing_std_db: 10.0,
            fast_fading_enabled: false,
        }
    }
}

impl PathlossModel {
    /// Deterministic pathloss only.
    pub fn without_randomness(self) -> Self {
        PathlossModel {
            cellular_shadowing_std_db: 0.0,
            d2d_shadowing_std_db: 0.0,
            fast_fading_enabled: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cellular_pl_exponent_coeff > 0.0 && self.d2d_pl_exponent_coeff > 0.0) {
            return Err(Error::invalid("pl_exponent_coeff", "must be > 0"));
        }
        if !(self.cellular_pl_intercept_db.is_finite() && self.d2d_pl_intercept_db.is_finite()) {
            return Err(Error::invalid("pl_intercept_db", "must be finite"));
        }
        if !(self.cellular_shadowing_std_db >= 0.0
            && self.d2d_shadowing_std_db >= 0.0
            && self.cellular_shadowing_std_db.is_finite()
            && self.d2d_shadowing_std_db.is_finite())
        {
            return Err(Error::invalid(
                "shadowing_std_db",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    fn pathloss_db(&self, class: LinkClass, distance_m: f64) -> f64 {
        let d_km = distance_m.max(MIN_LINK_DISTANCE_M) / 1000.0;
        let (intercept, coeff) = match class {
            LinkClass::Cellular => (
                self.cellular_pl_intercept_db,
                self.cellular_pl_exponent_coeff,
            ),
            LinkClass::Direct => (self.d2d_pl_intercept_db, self.d2d_pl_exponent_coeff),
        };
        intercept + coeff * d_km.log10()
    }

    fn shadowing_std_db(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::Cellular => self.cellular_shadowing_std_db,
            LinkClass::Direct => self.d2d_shadowing_std_db,
        }
    }
}

/// One drop: CU positions and D2D transmitter/receiver positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub cu_positions: Vec<Point>,
    pub d2d_tx_positions: Vec<Point>,
    pub d2d_rx_positions: Vec<Point>,
    pub rng_seed: u64,
}

impl Topology {
    pub fn n_cu(&self) -> usize {
        self.cu_positions.len()
    }

    pub fn n_d2d(&self) -> usize {
        self.d2d_tx_positions.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyRequest {
    pub n_cu: usize,
    pub n_d2d: usize,
    pub d2d_pair_min_m: f64,
    pub d2d_pair_max_m: f64,
    /// Admit `n_d2d == n_cu`, the extreme case where every channel is reused.
    pub full_reuse: bool,
}

impl TopologyRequest {
    pub fn new(n_cu: usize, n_d2d: usize) -> Self {
        TopologyRequest {
            n_cu,
            n_d2d,
            d2d_pair_min_m: 10.0,
            d2d_pair_max_m: 50.0,
            full_reuse: true,
        }
    }

    pub fn validate(&self, layout: &CellLayout) -> Result<()> {
        if self.n_cu == 0 {
            return Err(Error::invalid("n_cu", "at least one CU is required"));
        }
        let limit_ok = if self.full_reuse {
            self.n_d2d <= self.n_cu
        } else {
            self.n_d2d < self.n_cu
        };
        if !limit_ok {
            return Err(Error::TooManyD2d {
                n_d2d: self.n_d2d,
                n_cu: self.n_cu,
            });
        }
        let (lo, hi) = (self.d2d_pair_min_m, self.d2d_pair_max_m);
        if !(lo > 0.0 && lo <= hi && hi < layout.radius_m) {
            return Err(Error::invalid(
                "d2d_pair_distance",
                format!("need 0 < min <= max < radius, got [{lo}, {hi}]"),
            ));
        }
        Ok(())
    }
}

fn uniform_in_disk<R: Rng>(rng: &mut R, center: Point, radius: f64) -> Point {
    // inverse CDF of the radial density 2r/R^2
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

/// Drops CUs and D2D pairs uniformly over the cell.
///
/// CUs and D2D pairs come from independent streams of the seeded generator,
/// and pairs are drawn in order, so the first `k` pairs of a drop do not
/// depend on how many pairs were requested. Sweeps over the D2D count rely on
/// this to keep the CU layout and earlier pairs fixed.
pub fn generate_topology(
    layout: &CellLayout,
    request: &TopologyRequest,
    seed: u64,
) -> Result<Topology> {
    layout.validate()?;
    request.validate(layout)?;
    let center = layout.bs_position;
    let radius = layout.radius_m;

    let mut cu_rng = ChaCha8Rng::seed_from_u64(seed);
    cu_rng.set_stream(CU_STREAM);
    let cu_positions = (0..request.n_cu)
        .map(|_| uniform_in_disk(&mut cu_rng, center, radius))
        .collect();

    let mut d2d_rng = ChaCha8Rng::seed_from_u64(seed);
    d2d_rng.set_stream(D2D_STREAM);
    let mut tx = Vec::with_capacity(request.n_d2d);
    let mut rx = Vec::with_capacity(request.n_d2d);
    for index in 0..request.n_d2d {
        let t = uniform_in_disk(&mut d2d_rng, center, radius);
        let mut placed = None;
        for _ in 0..MAX_RX_PLACEMENT_ATTEMPTS {
            let d = d2d_rng.random_range(request.d2d_pair_min_m..=request.d2d_pair_max_m);
            let theta = std::f64::consts::TAU * d2d_rng.random::<f64>();
            let r = Point::new(t.x + d * theta.cos(), t.y + d * theta.sin());
            if r.distance(&center) <= radius {
                placed = Some(r);
                break;
            }
        }
        let r = placed.ok_or(Error::Placement {
            index,
            attempts: MAX_RX_PLACEMENT_ATTEMPTS,
        })?;
        tx.push(t);
        rx.push(r);
    }

    Ok(Topology {
        cu_positions,
        d2d_tx_positions: tx,
        d2d_rx_positions: rx,
        rng_seed: seed,
    })
}

/// Gains of the four links that matter when D2D `j` reuses CU `i`'s channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGains {
    /// CU `i` to the BS.
    pub g_cu_bs: f64,
    /// D2D `j` transmitter to its receiver.
    pub g_d2d: f64,
    /// CU `i` to D2D `j`'s receiver (interference).
    pub h_cu_d2d: f64,
    /// D2D `j` transmitter to the BS (interference).
    pub h_d2d_bs: f64,
}

/// All link gains of one drop, linear.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    n_cu: usize,
    n_d2d: usize,
    pub g_cu_bs: Vec<f64>,
    pub g_d2d: Vec<f64>,
    /// Row-major `n_cu x n_d2d`.
    pub h_cu_d2d: Vec<f64>,
    pub h_d2d_bs: Vec<f64>,
}

impl GainTable {
    pub fn new(
        g_cu_bs: Vec<f64>,
        g_d2d: Vec<f64>,
        h_cu_d2d: Vec<f64>,
        h_d2d_bs: Vec<f64>,
    ) -> Result<Self> {
        let n_cu = g_cu_bs.len();
        let n_d2d = g_d2d.len();
        if h_d2d_bs.len() != n_d2d || h_cu_d2d.len() != n_cu * n_d2d {
            return Err(Error::invalid(
                "gain table",
                format!(
                    "shape mismatch: {} CUs, {} D2Ds, {} cross gains, {} D2D->BS gains",
                    n_cu,
                    n_d2d,
                    h_cu_d2d.len(),
                    h_d2d_bs.len()
                ),
            ));
        }
        let table = GainTable {
            n_cu,
            n_d2d,
            g_cu_bs,
            g_d2d,
            h_cu_d2d,
            h_d2d_bs,
        };
        table.check_entries()?;
        Ok(table)
    }

    fn check_entries(&self) -> Result<()> {
        let check = |value: f64, link: &dyn Fn() -> String| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::BadGain {
                    link: link(),
                    value,
                })
            }
        };
        for (i, &g) in self.g_cu_bs.iter().enumerate() {
            check(g, &|| format!("CU {i} -> BS"))?;
        }
        for (j, &g) in self.g_d2d.iter().enumerate() {
            check(g, &|| format!("D2D {j} tx -> rx"))?;
        }
        for (j, &g) in self.h_d2d_bs.iter().enumerate() {
            check(g, &|| format!("D2D {j} tx -> BS"))?;
        }
        for i in 0..self.n_cu {
            for j in 0..self.n_d2d {
                check(self.h_cu_d2d(i, j), &|| format!("CU {i} -> D2D {j} rx"))?;
            }
        }
        Ok(())
    }

    pub fn n_cu(&self) -> usize {
        self.n_cu
    }

    pub fn n_d2d(&self) -> usize {
        self.n_d2d
    }

    pub fn h_cu_d2d(&self, cu: usize, d2d: usize) -> f64 {
        self.h_cu_d2d[cu * self.n_d2d + d2d]
    }

    pub fn pair(&self, cu: usize, d2d: usize) -> PairGains {
        PairGains {
            g_cu_bs: self.g_cu_bs[cu],
            g_d2d: self.g_d2d[d2d],
            h_cu_d2d: self.h_cu_d2d(cu, d2d),
            h_d2d_bs: self.h_d2d_bs[d2d],
        }
    }

    /// Copy with the CU rows reordered: row `k` of the result is row
    /// `order[k]` of `self`.
    pub fn permute_cus(&self, order: &[usize]) -> GainTable {
        assert_eq!(order.len(), self.n_cu);
        let mut h = Vec::with_capacity(self.h_cu_d2d.len());
        for &i in order {
            h.extend_from_slice(&self.h_cu_d2d[i * self.n_d2d..(i + 1) * self.n_d2d]);
        }
        GainTable {
            n_cu: self.n_cu,
            n_d2d: self.n_d2d,
            g_cu_bs: order.iter().map(|&i| self.g_cu_bs[i]).collect(),
            g_d2d: self.g_d2d.clone(),
            h_cu_d2d: h,
            h_d2d_bs: self.h_d2d_bs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LinkClass {
    /// Device to base station.
    Cellular,
    /// Device to device.
    Direct,
}

#[derive(Debug, Clone, Copy)]
enum LinkKind {
    CuToBs = 0,
    D2d = 1,
    CuToD2dRx = 2,
    D2dToBs = 3,
}

/// Per-link stream id, so each link's random draws do not depend on how many
/// other links exist in the drop.
fn link_stream(kind: LinkKind, a: usize, b: usize) -> u64 {
    ((kind as u64) << 62) | ((a as u64 & 0x7fff_ffff) << 31) | (b as u64 & 0x7fff_ffff)
}

struct LinkEvaluator<'a> {
    layout: &'a CellLayout,
    model: &'a PathlossModel,
    seed: u64,
}

impl LinkEvaluator<'_> {
    fn gain(
        &self,
        kind: LinkKind,
        a: usize,
        b: usize,
        from: Point,
        to: Point,
        name: impl FnOnce() -> String,
    ) -> Result<f64> {
        let (class, rx_gain, rx_nf) = match kind {
            LinkKind::CuToBs | LinkKind::D2dToBs => (
                LinkClass::Cellular,
                self.layout.bs_antenna_gain_db,
                self.layout.bs_noise_figure_db,
            ),
            LinkKind::D2d | LinkKind::CuToD2dRx => (
                LinkClass::Direct,
                self.layout.ue_antenna_gain_db,
                self.layout.ue_noise_figure_db,
            ),
        };
        let std = self.model.shadowing_std_db(class);
        let needs_rng = std > 0.0 || self.model.fast_fading_enabled;
        let mut rng = needs_rng.then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(link_stream(kind, a, b));
            rng
        });

        let shadowing_db = match rng.as_mut() {
            Some(rng) if std > 0.0 => {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            }
            _ => 0.0,
        };
        let pl_db = self.model.pathloss_db(class, from.distance(&to));
        let gain_db = -pl_db - shadowing_db + self.layout.ue_antenna_gain_db + rx_gain - rx_nf;
        let mut gain = 10f64.powf(gain_db / 10.0);
        if self.model.fast_fading_enabled {
            if let Some(rng) = rng.as_mut() {
                let fade: f64 = Exp1.sample(rng);
                gain *= fade;
            }
        }
        if gain.is_finite() && gain > 0.0 {
            Ok(gain)
        } else {
            Err(Error::BadGain {
                link: name(),
                value: gain,
            })
        }
    }
}

/// Evaluates every link gain of `topo`. Shadowing and fading draws are keyed
/// by `(seed, link)`.
pub fn compute_gains(
    layout: &CellLayout,
    topo: &Topology,
    model: &PathlossModel,
    seed: u64,
) -> Result<GainTable> {
    layout.validate()?;
    model.validate()?;
    if topo.d2d_tx_positions.len() != topo.d2d_rx_positions.len() {
        return Err(Error::invalid(
            "topology",
            "D2D transmitter and receiver lists differ in length",
        ));
    }
    let eval = LinkEvaluator {
        layout,
        model,
        seed,
    };
    let bs = layout.bs_position;
    let n_cu = topo.n_cu();
    let n_d2d = topo.n_d2d();

    let g_cu_bs = topo
        .cu_positions
        .iter()
        .enumerate()
        .map(|(i, &p)| eval.gain(LinkKind::CuToBs, i, 0, p, bs, || format!("CU {i} -> BS")))
        .collect::<Result<Vec<_>>>()?;
    let g_d2d = topo
        .d2d_tx_positions
        .iter()
        .zip(&topo.d2d_rx_positions)
        .enumerate()
        .map(|(j, (&t, &r))| eval.gain(LinkKind::D2d, j, 0, t, r, || format!("D2D {j} tx -> rx")))
        .collect::<Result<Vec<_>>>()?;
    let h_d2d_bs = topo
        .d2d_tx_positions
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            eval.gain(LinkKind::D2dToBs, j, 0, t, bs, || {
                format!("D2D {j} tx -> BS")
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut h_cu_d2d = Vec::with_capacity(n_cu * n_d2d);
    for (i, &c) in topo.cu_positions.iter().enumerate() {
        for (j, &r) in topo.d2d_rx_positions.iter().enumerate() {
            h_cu_d2d.push(eval.gain(LinkKind::CuToD2dRx, i, j, c, r, || {
                format!("CU {i} -> D2D {j} rx")
            })?);
        }
    }

    Ok(GainTable {
        n_cu,
        n_d2d,
        g_cu_bs,
        g_d2d,
        h_cu_d2d,
        h_d2d_bs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare_layout() -> CellLayout {
        CellLayout {
            bs_antenna_gain_db: 0.0,
            ue_antenna_gain_db: 0.0,
            bs_noise_figure_db: 0.0,
            ue_noise_figure_db: 0.0,
            radius_m: 5000.0,
            ..CellLayout::default()
        }
    }

    fn single_cu_at(d: f64) -> Topology {
        Topology {
            cu_positions: vec![Point::new(d, 0.0)],
            d2d_tx_positions: vec![],
            d2d_rx_positions: vec![],
            rng_seed: 0,
        }
    }

    #[test]
    fn standard_drop() {
        let layout = CellLayout::default();
        let topo = generate_topology(&layout, &TopologyRequest::new(10, 10), 42).unwrap();
        assert_eq!(topo.n_cu(), 10);
        assert_eq!(topo.n_d2d(), 10);
        assert_eq!(topo.d2d_rx_positions.len(), 10);
        let origin = Point::default();
        let all = topo
            .cu_positions
            .iter()
            .chain(&topo.d2d_tx_positions)
            .chain(&topo.d2d_rx_positions);
        for p in all {
            assert!(p.distance(&origin) <= 500.0);
        }
        for (t, r) in topo.d2d_tx_positions.iter().zip(&topo.d2d_rx_positions) {
            let d = t.distance(r);
            assert!(
                (10.0 - 1e-9..=50.0 + 1e-9).contains(&d),
                "pair distance {d}"
            );
        }
    }

    #[test]
    fn single_cu_no_d2d() {
        let topo =
            generate_topology(&CellLayout::default(), &TopologyRequest::new(1, 0), 7).unwrap();
        assert_eq!(topo.n_cu(), 1);
        assert!(topo.d2d_tx_positions.is_empty());
        assert!(topo.d2d_rx_positions.is_empty());
    }

    #[test]
    fn seed_determinism_and_nesting() {
        let layout = CellLayout::default();
        let a = generate_topology(&layout, &TopologyRequest::new(10, 6), 99).unwrap();
        let b = generate_topology(&layout, &TopologyRequest::new(10, 6), 99).unwrap();
        assert_eq!(a, b);
        let c = generate_topology(&layout, &TopologyRequest::new(10, 9), 99).unwrap();
        assert_eq!(a.cu_positions, c.cu_positions);
        assert_eq!(a.d2d_tx_positions[..], c.d2d_tx_positions[..6]);
        assert_eq!(a.d2d_rx_positions[..], c.d2d_rx_positions[..6]);
        let d = generate_topology(&layout, &TopologyRequest::new(10, 6), 100).unwrap();
        assert_ne!(a.cu_positions, d.cu_positions);
    }

    #[test]
    fn rejects_more_d2d_than_cu() {
        let layout = CellLayout::default();
        let err = generate_topology(&layout, &TopologyRequest::new(4, 5), 1).unwrap_err();
        assert!(matches!(err, Error::TooManyD2d { n_d2d: 5, n_cu: 4 }));
        let strict = TopologyRequest {
            full_reuse: false,
            ..TopologyRequest::new(4, 4)
        };
        assert!(matches!(
            generate_topology(&layout, &strict, 1),
            Err(Error::TooManyD2d { .. })
        ));
        let ok = TopologyRequest {
            full_reuse: false,
            ..TopologyRequest::new(4, 3)
        };
        assert!(generate_topology(&layout, &ok, 1).is_ok());
    }

    #[test]
    fn rejects_bad_requests() {
        let layout = CellLayout::default();
        assert!(generate_topology(&layout, &TopologyRequest::new(0, 0), 1).is_err());
        let bad_range = TopologyRequest {
            d2d_pair_min_m: 60.0,
            d2d_pair_max_m: 50.0,
            ..TopologyRequest::new(3, 1)
        };
        assert!(generate_topology(&layout, &bad_range, 1).is_err());
        let too_far = TopologyRequest {
            d2d_pair_max_m: 500.0,
            ..TopologyRequest::new(3, 1)
        };
        assert!(generate_topology(&layout, &too_far, 1).is_err());
    }

    #[test]
    fn log_distance_at_one_km() {
        let model = PathlossModel::default().without_randomness();
        let g = compute_gains(&bare_layout(), &single_cu_at(1000.0), &model, 0).unwrap();
        let expect = 10f64.powf(-12.81);
        assert!((g.g_cu_bs[0] - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn doubling_distance_with_coeff_40() {
        let model = PathlossModel {
            cellular_pl_intercept_db: 0.0,
            cellular_pl_exponent_coeff: 40.0,
            ..PathlossModel::default().without_randomness()
        };
        let near = compute_gains(&bare_layout(), &single_cu_at(300.0), &model, 0).unwrap();
        let far = compute_gains(&bare_layout(), &single_cu_at(600.0), &model, 0).unwrap();
        let ratio = far.g_cu_bs[0] / near.g_cu_bs[0];
        assert!((ratio - 2f64.powi(-4)).abs() < 1e-12);
    }

    #[test]
    fn no_randomness_means_seed_independent() {
        let layout = CellLayout::default();
        let topo = generate_topology(&layout, &TopologyRequest::new(6, 4), 3).unwrap();
        let model = PathlossModel::default().without_randomness();
        let a = compute_gains(&layout, &topo, &model, 1).unwrap();
        let b = compute_gains(&layout, &topo, &model, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shadowing_is_seeded_and_nested() {
        let layout = CellLayout::default();
        let model = PathlossModel {
            fast_fading_enabled: true,
            ..PathlossModel::default()
        };
        let small = generate_topology(&layout, &TopologyRequest::new(6, 2), 3).unwrap();
        let big = generate_topology(&layout, &TopologyRequest::new(6, 5), 3).unwrap();
        let a = compute_gains(&layout, &small, &model, 11).unwrap();
        let b = compute_gains(&layout, &big, &model, 11).unwrap();
        assert_eq!(a.g_cu_bs, b.g_cu_bs);
        assert_eq!(a.g_d2d[..], b.g_d2d[..2]);
        assert_eq!(a.h_d2d_bs[..], b.h_d2d_bs[..2]);
        for i in 0..6 {
            for j in 0..2 {
                assert_eq!(a.h_cu_d2d(i, j), b.h_cu_d2d(i, j));
            }
        }
        let c = compute_gains(&layout, &small, &model, 12).unwrap();
        assert_ne!(a.g_cu_bs, c.g_cu_bs);
    }

    #[test]
    fn monotone_in_distance_without_randomness() {
        let model = PathlossModel::default().without_randomness();
        let layout = bare_layout();
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let g = compute_gains(&layout, &single_cu_at(k as f64 * 20.0), &model, 0).unwrap();
            assert!(g.g_cu_bs[0] < last);
            last = g.g_cu_bs[0];
        }
    }

    #[test]
    fn distance_floor_at_one_metre() {
        let model = PathlossModel::default().without_randomness();
        let layout = bare_layout();
        let at_zero = compute_gains(&layout, &single_cu_at(0.0), &model, 0).unwrap();
        let at_one = compute_gains(&layout, &single_cu_at(1.0), &model, 0).unwrap();
        assert_eq!(at_zero.g_cu_bs, at_one.g_cu_bs);
        assert!(at_zero.g_cu_bs[0].is_finite());
    }

    #[test]
    fn non_finite_gain_names_the_link() {
        let model = PathlossModel {
            cellular_pl_intercept_db: 5000.0,
            ..PathlossModel::default().without_randomness()
        };
        let err = compute_gains(&bare_layout(), &single_cu_at(10.0), &model, 0).unwrap_err();
        match err {
            Error::BadGain { link, .. } => assert_eq!(link, "CU 0 -> BS"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gain_table_rejects_bad_entries() {
        assert!(GainTable::new(vec![1.0], vec![1.0], vec![0.0], vec![1.0]).is_err());
        assert!(GainTable::new(vec![1.0], vec![1.0], vec![1.0, 1.0], vec![1.0]).is_err());
        assert!(GainTable::new(vec![1.0], vec![f64::NAN], vec![1.0], vec![1.0]).is_err());
        let t = GainTable::new(vec![1.0, 2.0], vec![3.0], vec![4.0, 5.0], vec![6.0]).unwrap();
        assert_eq!(t.pair(1, 0).h_cu_d2d, 5.0);
        let p = t.permute_cus(&[1, 0]);
        assert_eq!(p.g_cu_bs, vec![2.0, 1.0]);
        assert_eq!(p.h_cu_d2d, vec![5.0, 4.0]);
    }
}
