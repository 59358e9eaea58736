//! Radio physics: pathloss laws, SINR, Shannon and finite-blocklength rates.
//!
//! Rates are in bit/s (base-2 logarithms). The finite-blocklength rate uses
//! the normal approximation with the bandwidth scaling the whole
//! per-channel-use expression.

use alloc::format;

use crate::error::{invalid, Error, Result};

const PATHLOSS_SLOPE_DB: f64 = 37.6;
const EMBB_INTERCEPT_DB: f64 = 35.3;
const URLLC_INTERCEPT_DB: f64 = 16.62;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}

/// Converts a pathloss in dB to a linear channel gain.
pub fn pathloss_to_gain(pathloss_db: f64) -> f64 {
    libm::pow(10.0, -pathloss_db / 10.0)
}

fn check_distance(d: f64) -> Result<()> {
    if d.is_nan() || d < 1.0 {
        return Err(Error::Domain(format!(
            "pathloss law requires distance >= 1 m, got {d}"
        )));
    }
    Ok(())
}

/// eMBB macro-cell pathloss, `35.3 + 37.6 log10(d)` dB.
pub fn pathloss_embb(d: f64) -> Result<f64> {
    check_distance(d)?;
    Ok(EMBB_INTERCEPT_DB + PATHLOSS_SLOPE_DB * libm::log10(d))
}

/// URLLC pathloss, `16.62 + 37.6 log10(d)` dB.
pub fn pathloss_urllc(d: f64) -> Result<f64> {
    check_distance(d)?;
    Ok(URLLC_INTERCEPT_DB + PATHLOSS_SLOPE_DB * libm::log10(d))
}

/// Which pathloss law a link follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathlossLaw {
    Embb,
    Urllc,
}

impl PathlossLaw {
    pub fn pathloss_db(self, d: f64) -> Result<f64> {
        match self {
            PathlossLaw::Embb => pathloss_embb(d),
            PathlossLaw::Urllc => pathloss_urllc(d),
        }
    }
}

/// Large-scale state of one BS-user link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub pathloss_db: f64,
    /// Linear gain, `10^(-pathloss_db / 10)`.
    pub gain: f64,
    pub distance: f64,
}

impl LinkState {
    pub fn new(law: PathlossLaw, distance: f64) -> Result<Self> {
        let pathloss_db = law.pathloss_db(distance)?;
        Ok(LinkState {
            pathloss_db,
            gain: pathloss_to_gain(pathloss_db),
            distance,
        })
    }
}

/// How the URLLC layer disturbs the eMBB receiver during superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferenceModel {
    /// URLLC power received over the eMBB user's own channel, `p_u * g_e`.
    #[default]
    ReceiverGain,
    /// URLLC power weighted by the URLLC user's gain, `p_u * g_u`.
    UrllcGain,
    /// The eMBB receiver cancels the URLLC layer completely.
    PerfectSic,
}

/// Radio parameters shared by every link in the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Receiver noise power, W.
    pub noise_power: f64,
    /// Resource-block bandwidth, Hz.
    pub rb_bandwidth: f64,
    /// Carrier frequency, Hz. Informational only.
    pub carrier: f64,
    /// eMBB transmit power per RB, W.
    pub embb_tx_power: f64,
    /// Cap on URLLC transmit power, W.
    pub urllc_max_power: f64,
    /// Target decoding-error probability.
    pub error_target: f64,
    /// URLLC packet size, bits.
    pub urllc_packet_bits: u32,
    /// Codeword length in channel uses for the finite-blocklength penalty.
    pub blocklength: f64,
    pub interference: InterferenceModel,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            noise_power: dbm_to_watts(-97.5),
            rb_bandwidth: 5.0e6,
            carrier: 2.0e9,
            embb_tx_power: 1.0e-5,
            urllc_max_power: 5.0,
            error_target: 1.0e-5,
            urllc_packet_bits: 800,
            blocklength: 800.0,
            interference: InterferenceModel::ReceiverGain,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("noise_power", self.noise_power),
            ("rb_bandwidth", self.rb_bandwidth),
            ("carrier", self.carrier),
            ("embb_tx_power", self.embb_tx_power),
            ("urllc_max_power", self.urllc_max_power),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.error_target > 0.0 && self.error_target < 0.5) {
            return Err(invalid(
                "error_target",
                format!("must lie in (0, 0.5), got {}", self.error_target),
            ));
        }
        if self.urllc_packet_bits == 0 {
            return Err(invalid("urllc_packet_bits", "must be >= 1"));
        }
        if !(self.blocklength.is_finite() && self.blocklength >= 1.0) {
            return Err(invalid(
                "blocklength",
                format!("must be >= 1, got {}", self.blocklength),
            ));
        }
        Ok(())
    }

    /// Finite-blocklength rate evaluator with `Q^{-1}(error_target)` precomputed.
    pub fn fbl_model(&self) -> Result<FblModel> {
        FblModel::new(self.blocklength, self.error_target, self.rb_bandwidth)
    }
}

/// `signal_power * gain / (interference + noise)`.
pub fn sinr(signal_power: f64, gain: f64, interference: f64, noise: f64) -> Result<f64> {
    if noise.is_nan() || noise <= 0.0 {
        return Err(Error::Domain(format!("noise must be > 0, got {noise}")));
    }
    if signal_power < 0.0 || gain < 0.0 || interference < 0.0 {
        return Err(Error::Domain(format!(
            "negative input to sinr: p={signal_power} g={gain} i={interference}"
        )));
    }
    Ok(signal_power * gain / (interference + noise))
}

/// Shannon rate `W log2(1 + sinr)` in bit/s.
pub fn shannon_rate(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * libm::log2(1.0 + sinr)
}

/// Standard normal tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

/// Inverse of [`q_function`]: returns `x` with `Q(x) = p`.
///
/// Safeguarded Newton iteration inside a shrinking bisection bracket; each
/// Newton step that would leave the bracket is replaced by a bisection step.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("q_inverse needs 0 < p < 1, got {p}")));
    }
    // Q(38) underflows below the smallest normal f64, so the root is inside.
    let (mut lo, mut hi) = (-38.0_f64, 38.0_f64);
    let mut x = 0.0_f64;
    for _ in 0..200 {
        let residual = q_function(x) - p;
        if residual == 0.0 {
            return Ok(x);
        }
        // Q is decreasing: a positive residual means the root lies to the right.
        if residual > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = normal_pdf(x);
        let newton = if pdf > 0.0 { x + residual / pdf } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-14 * x.abs().max(1.0) || hi - lo <= 1e-13 {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Finite-blocklength (normal approximation) rate evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblModel {
    pub blocklength: f64,
    pub error_target: f64,
    pub bandwidth: f64,
    q_inv: f64,
}

impl FblModel {
    pub fn new(blocklength: f64, error_target: f64, bandwidth: f64) -> Result<Self> {
        if !(blocklength >= 1.0) {
            return Err(Error::Domain(format!("blocklength must be >= 1, got {blocklength}")));
        }
        if !(error_target > 0.0 && error_target < 0.5) {
            return Err(Error::Domain(format!(
                "error target must lie in (0, 0.5), got {error_target}"
            )));
        }
        Ok(FblModel {
            blocklength,
            error_target,
            bandwidth,
            q_inv: q_inverse(error_target)?,
        })
    }

    pub fn q_inverse(&self) -> f64 {
        self.q_inv
    }

    /// Achievable rate in bit/s at the given SINR, floored at zero.
    pub fn rate(&self, sinr: f64) -> f64 {
        if !(sinr > 0.0) {
            return 0.0;
        }
        let inv = 1.0 / (1.0 + sinr);
        let dispersion = 1.0 - inv * inv;
        let per_use = libm::log2(1.0 + sinr)
            - libm::sqrt(dispersion / self.blocklength) * self.q_inv
                / core::f64::consts::LN_2;
        self.bandwidth * per_use.max(0.0)
    }
}

/// Finite-blocklength achievable rate in bit/s.
pub fn fbl_rate(sinr: f64, blocklength: f64, error_target: f64, bandwidth: f64) -> Result<f64> {
    Ok(FblModel::new(blocklength, error_target, bandwidth)?.rate(sinr))
}

/// SINR of the eMBB user while a URLLC layer of power `p_u` is superposed.
pub fn embb_superposed_sinr(
    embb: &LinkState,
    urllc: &LinkState,
    p_e: f64,
    p_u: f64,
    params: &RadioParams,
) -> Result<f64> {
    let interference = match params.interference {
        InterferenceModel::ReceiverGain => p_u * embb.gain,
        InterferenceModel::UrllcGain => p_u * urllc.gain,
        InterferenceModel::PerfectSic => 0.0,
    };
    sinr(p_e, embb.gain, interference, params.noise_power)
}

/// SINR of the eMBB layer observed at the URLLC receiver, the URLLC layer
/// counted as interference. This is what the URLLC user must decode before
/// cancelling the eMBB layer.
pub fn embb_layer_sinr_at_urllc(
    urllc: &LinkState,
    p_e: f64,
    p_u: f64,
    params: &RadioParams,
) -> Result<f64> {
    sinr(p_e, urllc.gain, p_u * urllc.gain, params.noise_power)
}

/// eMBB and URLLC rates (bit/s) for one superposed pair.
///
/// The URLLC user cancels the eMBB layer before decoding, so its rate is
/// interference free; the eMBB user sees the URLLC layer as interference
/// according to `params.interference`.
pub fn superposed_pair_rates(
    embb: &LinkState,
    urllc: &LinkState,
    p_e: f64,
    p_u: f64,
    params: &RadioParams,
) -> Result<(f64, f64)> {
    if p_e < 0.0 || p_u < 0.0 {
        return Err(Error::Domain(format!("negative power p_e={p_e} p_u={p_u}")));
    }
    let embb_rate = shannon_rate(
        embb_superposed_sinr(embb, urllc, p_e, p_u, params)?,
        params.rb_bandwidth,
    );
    let urllc_sinr = sinr(p_u, urllc.gain, 0.0, params.noise_power)?;
    let urllc_rate = params.fbl_model()?.rate(urllc_sinr);
    Ok((embb_rate, urllc_rate))
}

/// eMBB rate without any URLLC overlay (also the puncturing-scheme SINR).
pub fn embb_clean_rate(embb: &LinkState, params: &RadioParams) -> Result<f64> {
    Ok(shannon_rate(
        sinr(params.embb_tx_power, embb.gain, 0.0, params.noise_power)?,
        params.rb_bandwidth,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn pathloss_values() {
        assert_eq!(pathloss_embb(1.0).unwrap(), 35.3);
        assert!(close(pathloss_embb(10.0).unwrap(), 72.9, 1e-12));
        assert!(close(pathloss_embb(100.0).unwrap(), 110.5, 1e-12));
        assert_eq!(pathloss_urllc(1.0).unwrap(), 16.62);
        assert!(close(pathloss_urllc(10.0).unwrap(), 54.22, 1e-12));
        assert!(close(pathloss_urllc(1000.0).unwrap(), 129.42, 1e-12));
    }

    #[test]
    fn pathloss_rejects_sub_metre() {
        assert!(matches!(pathloss_embb(0.5), Err(Error::Domain(_))));
        assert!(matches!(pathloss_urllc(0.0), Err(Error::Domain(_))));
        assert!(pathloss_urllc(f64::NAN).is_err());
    }

    #[test]
    fn noise_conversion() {
        assert!(close(dbm_to_watts(-97.5), 1.778_279_410_038_922_7e-13, 1e-12));
    }

    #[test]
    fn sinr_examples() {
        let s = sinr(1e-5, 5.1286e-8, 0.0, 1.7783e-13).unwrap();
        assert!((s - 2.884).abs() < 1e-3);
        assert_eq!(sinr(0.0, 0.3, 0.0, 1e-13).unwrap(), 0.0);
        let p = 1e-5;
        let g = 1e-8;
        assert!(sinr(p, g, p * g, 1e-13).unwrap() < 1.0);
        assert!(sinr(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_rate(1.0, 5e6), 5e6);
        assert_eq!(shannon_rate(0.0, 5e6), 0.0);
        assert!(close(shannon_rate(2.884, 5e6), 9.787_716e6, 1e-6));
    }

    #[test]
    fn q_inverse_examples() {
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
        // mpmath, 40 digits
        assert!((q_inverse(1e-5).unwrap() - 4.264_890_793_922_825).abs() < 1e-10);
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(1.0).is_err());
        assert!(q_inverse(-0.1).is_err());
        assert!((q_inverse(0.975).unwrap() + 1.959_963_984_540_054).abs() < 1e-10);
    }

    #[test]
    fn fbl_examples() {
        assert_eq!(fbl_rate(0.0, 800.0, 1e-5, 5e6).unwrap(), 0.0);
        // hand evaluation with the 40-digit Q^{-1}(1e-5)
        assert!(close(fbl_rate(3.0, 800.0, 1e-5, 5e6).unwrap(), 8_946_843.037_704_23, 1e-9));
        assert!(fbl_rate(3.0, 800.0, 0.6, 5e6).is_err());
        assert!(fbl_rate(3.0, 0.5, 1e-3, 5e6).is_err());
    }

    #[test]
    fn fbl_clamps_negative() {
        // tiny SINR with a short block: penalty dominates
        assert_eq!(fbl_rate(1e-4, 10.0, 1e-9, 5e6).unwrap(), 0.0);
    }

    #[test]
    fn pair_rates_degenerate_superposition() {
        let params = RadioParams::default();
        let e = LinkState::new(PathlossLaw::Embb, 200.0).unwrap();
        let u = LinkState::new(PathlossLaw::Urllc, 50.0).unwrap();
        let (re, ru) = superposed_pair_rates(&e, &u, 1e-5, 0.0, &params).unwrap();
        assert_eq!(re, embb_clean_rate(&e, &params).unwrap());
        assert_eq!(ru, 0.0);
        assert!(superposed_pair_rates(&e, &u, -1.0, 0.0, &params).is_err());
    }

    #[test]
    fn pair_rates_table1_chain() {
        // Frozen from an independent scipy/mpmath evaluation.
        let mut params = RadioParams::default();
        let e = LinkState::new(PathlossLaw::Embb, 200.0).unwrap();
        let u = LinkState::new(PathlossLaw::Urllc, 50.0).unwrap();
        let (re, ru) = superposed_pair_rates(&e, &u, 1e-5, 1e-6, &params).unwrap();
        assert!(close(re, 266.846_874_293_305_1, 1e-9), "{re}");
        assert!(close(ru, 20_690.898_731_437_966, 1e-9), "{ru}");
        params.interference = InterferenceModel::UrllcGain;
        let (re, _) = superposed_pair_rates(&e, &u, 1e-5, 1e-6, &params).unwrap();
        assert!(close(re, 254.115_864_380_696_05, 1e-9), "{re}");
        params.interference = InterferenceModel::PerfectSic;
        let (re, _) = superposed_pair_rates(&e, &u, 1e-5, 1e-6, &params).unwrap();
        assert_eq!(re, embb_clean_rate(&e, &params).unwrap());
    }

    #[test]
    fn symmetric_gains_interference_dominates() {
        let params = RadioParams {
            interference: InterferenceModel::UrllcGain,
            ..RadioParams::default()
        };
        let link = LinkState::new(PathlossLaw::Embb, 5.0).unwrap();
        let s = embb_superposed_sinr(&link, &link, 1e-5, 1e-5, &params).unwrap();
        assert!(s < 1.0);
    }

    #[test]
    fn params_validation() {
        assert!(RadioParams::default().validate().is_ok());
        let bad = RadioParams {
            error_target: 0.5,
            ..RadioParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = RadioParams {
            noise_power: 0.0,
            ..RadioParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = RadioParams {
            urllc_packet_bits: 0,
            ..RadioParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
