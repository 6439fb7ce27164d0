//! Minimum SINR thresholds from token-bucket shaped control traffic.
//!
//! A flow shaped by a token bucket with rate `phi` bits/s and depth `omega`
//! bits delivers every message within `tau` seconds if the link sustains
//! `(omega + phi * tau) / tau` bits/s. On a channel of bandwidth `W` that
//! fixes the Shannon-rate SINR floor `2^((omega + phi*tau) / (W*tau)) - 1`.

use crate::error::{Error, Result};

/// Bits per byte.
pub const BITS_PER_BYTE: f64 = 8.0;

/// Token-bucket traffic description and latency budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficSpec {
    pub tau_s: f64,
    pub phi_bps: f64,
    pub omega_bits: f64,
}

impl TrafficSpec {
    /// Builds the spec from packet-denominated bucket parameters.
    pub fn from_packets(
        bucket_packets: f64,
        rate_packets_per_s: f64,
        packet_bytes: f64,
        tau_s: f64,
    ) -> Self {
        let packet_bits = packet_bytes * BITS_PER_BYTE;
        TrafficSpec {
            tau_s,
            phi_bps: rate_packets_per_s * packet_bits,
            omega_bits: bucket_packets * packet_bits,
        }
    }

    /// Token-bucket parameters of the default control traffic:
    /// 32-byte packets, 60-packet bucket, 60 packets/s, 20 ms budget.
    pub fn control_default() -> Self {
        Self::from_packets(60.0, 60.0, 32.0, 0.020)
    }
}

/// Traffic spec bound to a channel bandwidth, with the derived thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosSpec {
    pub tau_s: f64,
    pub phi_bps: f64,
    pub omega_bits: f64,
    pub channel_bandwidth_hz: f64,
    pub sinr_min_cu: f64,
    pub sinr_min_d2d: f64,
}

impl QosSpec {
    pub fn new(traffic: TrafficSpec, channel_bandwidth_hz: f64) -> Result<Self> {
        let eps = sinr_threshold(
            traffic.tau_s,
            traffic.phi_bps,
            traffic.omega_bits,
            channel_bandwidth_hz,
        )?;
        Ok(QosSpec {
            tau_s: traffic.tau_s,
            phi_bps: traffic.phi_bps,
            omega_bits: traffic.omega_bits,
            channel_bandwidth_hz,
            sinr_min_cu: eps,
            sinr_min_d2d: eps,
        })
    }

    /// Thresholds set directly, bypassing the traffic model. Used for
    /// synthetic instances.
    pub fn with_thresholds(sinr_min_cu: f64, sinr_min_d2d: f64) -> Self {
        QosSpec {
            tau_s: f64::NAN,
            phi_bps: f64::NAN,
            omega_bits: f64::NAN,
            channel_bandwidth_hz: f64::NAN,
            sinr_min_cu,
            sinr_min_d2d,
        }
    }
}

/// Linear SINR floor that lets a `(phi, omega)` token-bucket flow meet the
/// latency budget `tau` on a channel of bandwidth `W`.
pub fn sinr_threshold(
    tau_s: f64,
    phi_bps: f64,
    omega_bits: f64,
    channel_bandwidth_hz: f64,
) -> Result<f64> {
    if !(tau_s > 0.0 && tau_s.is_finite()) {
        return Err(Error::invalid("tau_s", format!("must be > 0, got {tau_s}")));
    }
    if !(channel_bandwidth_hz > 0.0 && channel_bandwidth_hz.is_finite()) {
        return Err(Error::invalid(
            "channel_bandwidth_hz",
            format!("must be > 0, got {channel_bandwidth_hz}"),
        ));
    }
    if !(phi_bps >= 0.0 && phi_bps.is_finite()) {
        return Err(Error::invalid(
            "phi_bps",
            format!("must be >= 0, got {phi_bps}"),
        ));
    }
    if !(omega_bits >= 0.0 && omega_bits.is_finite()) {
        return Err(Error::invalid(
            "omega_bits",
            format!("must be >= 0, got {omega_bits}"),
        ));
    }
    let exponent = (omega_bits + phi_bps * tau_s) / (channel_bandwidth_hz * tau_s);
    // exp_m1 keeps precision for tiny exponents
    Ok((exponent * std::f64::consts::LN_2).exp_m1())
}
