//! dBm conversions. Only I/O layers should need these.

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// `10^(dbm/10)` milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// `10 log10(mw)`; zero maps to negative infinity.
pub fn mw_to_dbm(mw: f64) -> f64 {
    if mw <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * mw.log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        assert!((dbm_to_mw(40.0) - 1e4).abs() < 1e-8);
        assert!((dbm_to_mw(-80.0) - 1e-8).abs() < 1e-20);
        assert!((mw_to_dbm(dbm_to_mw(-73.5)) + 73.5).abs() < 1e-12);
        assert_eq!(mw_to_dbm(0.0), f64::NEG_INFINITY);
    }
}
