//! dB / linear conversions used at configuration and report boundaries.

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to milliwatts.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Shannon spectral efficiency in bps/Hz.
#[inline]
pub fn spectral_efficiency(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}
