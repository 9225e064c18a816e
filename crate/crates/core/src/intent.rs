//! Arrival-time features, the linear intent boundary and its image in
//! arrival-time space.
//!
//! A sample is classified by `margin = w1*x1 + w2*x2 + b` with
//! `x1 = T_self^2` and `x2 = 2*(d_int - v_int*T_self)`. A positive margin
//! means the ego agent is expected to pass the conflict point first; a
//! margin within `1e-12` of zero is treated as yielding.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

const TIE_EPS: f64 = 1e-12;

/// Speeds (m/s) at which the boundary discriminant is checked.
pub const DISCRIMINANT_SPEEDS: [f64; 6] = [0.5, 1.0, 2.0, 5.0, 10.0, 15.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntentError {
    #[error("ego arrival time must be finite and positive, got {0}")]
    BadTime(f64),
    #[error("interactor speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
    #[error("boundary undefined for interactor speed {0} m/s")]
    StoppedInteractor(f64),
}

/// Whose arrival time is the ego time in the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perspective {
    /// Pedestrian is the ego agent, the AV the interactor.
    PedVsAv,
    /// AV is the ego agent, the pedestrian the interactor.
    AvVsPed,
}

impl Perspective {
    pub fn as_str(self) -> &'static str {
        match self {
            Perspective::PedVsAv => "ped_vs_av",
            Perspective::AvVsPed => "av_vs_ped",
        }
    }
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub x1: f64,
    pub x2: f64,
}

pub fn features(t_self: f64, d_int: f64, v_int: f64) -> Result<FeatureVector, IntentError> {
    if !t_self.is_finite() || t_self <= 0.0 || !d_int.is_finite() {
        return Err(IntentError::BadTime(t_self));
    }
    if !(v_int >= 0.0) {
        return Err(IntentError::NegativeSpeed(v_int));
    }
    Ok(FeatureVector { x1: t_self * t_self, x2: 2.0 * (d_int - v_int * t_self) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub w1: f64,
    pub w2: f64,
    pub b: f64,
    pub perspective: Perspective,
}

impl BoundaryParams {
    /// Calibrated pedestrian-perspective boundary fitted on inD drone recordings.
    pub const PED_VS_AV: BoundaryParams =
        BoundaryParams { w1: -0.0032, w2: 0.0469, b: 0.2503, perspective: Perspective::PedVsAv };
    /// Calibrated AV-perspective boundary fitted on inD drone recordings.
    pub const AV_VS_PED: BoundaryParams =
        BoundaryParams { w1: -0.0288, w2: 0.1769, b: 0.7601, perspective: Perspective::AvVsPed };

    pub fn new(w1: f64, w2: f64, b: f64, perspective: Perspective) -> Self {
        Self { w1, w2, b, perspective }
    }

    pub fn margin(&self, f: FeatureVector) -> f64 {
        self.w1 * f.x1 + self.w2 * f.x2 + self.b
    }

    /// `1 - w1*b / (w2*v)^2`; positive means a single positive crossing.
    pub fn discriminant(&self, v_int: f64) -> f64 {
        1.0 - self.w1 * self.b / (self.w2 * v_int).powi(2)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { w1: self.w1 * c, w2: self.w2 * c, b: self.b * c, perspective: self.perspective }
    }

    pub fn flipped(&self) -> Self {
        self.scaled(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    SelfFirst,
    SelfYields,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentLabel {
    pub value: Intent,
    pub margin: f64,
}

pub fn classify(params: &BoundaryParams, f: FeatureVector) -> IntentLabel {
    let margin = params.margin(f);
    let value = if margin > TIE_EPS { Intent::SelfFirst } else { Intent::SelfYields };
    IntentLabel { value, margin }
}

/// Interactor arrival time on the boundary given the ego arrival time
/// `t_other`, assuming the interactor keeps speed `v_int`.
pub fn tau_boundary(params: &BoundaryParams, t_other: f64, v_int: f64) -> Result<f64, IntentError> {
    if !t_other.is_finite() || t_other <= 0.0 {
        return Err(IntentError::BadTime(t_other));
    }
    if !(v_int > 0.0) {
        return Err(IntentError::StoppedInteractor(v_int));
    }
    Ok(t_other - (params.w1 * t_other * t_other + params.b) / (2.0 * params.w2 * v_int))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<BoundaryCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

pub fn validate_boundary(params: &BoundaryParams) -> ValidationReport {
    let mut checks = vec![
        BoundaryCheck { name: "w1<0".into(), passed: params.w1 < 0.0 },
        BoundaryCheck { name: "b>0".into(), passed: params.b > 0.0 },
        BoundaryCheck { name: "w2>0".into(), passed: params.w2 > 0.0 },
    ];
    for v in DISCRIMINANT_SPEEDS {
        let d = params.discriminant(v);
        checks.push(BoundaryCheck { name: format!("discriminant>0@{v}m/s"), passed: d > 0.0 });
    }
    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PED: BoundaryParams = BoundaryParams::PED_VS_AV;

    #[test]
    fn feature_examples() {
        assert_eq!(features(2.0, 10.0, 1.0).unwrap(), FeatureVector { x1: 4.0, x2: 16.0 });
        assert_eq!(features(2.0, 14.0, 7.0).unwrap(), FeatureVector { x1: 4.0, x2: 0.0 });
        assert_eq!(features(3.0, 0.0, 2.0).unwrap(), FeatureVector { x1: 9.0, x2: -12.0 });
        assert!(features(f64::INFINITY, 1.0, 1.0).is_err());
        assert!(features(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn classify_margins() {
        // hand arithmetic on the tabulated parameters
        let m = |x1, x2| classify(&PED, FeatureVector { x1, x2 });
        assert!((m(4.0, 16.0).margin - 0.9879).abs() < 1e-9);
        assert!((m(4.0, 0.0).margin - 0.2375).abs() < 1e-9);
        assert!((m(100.0, 0.0).margin + 0.0697).abs() < 1e-9);
        assert_eq!(m(4.0, 16.0).value, Intent::SelfFirst);
        assert_eq!(m(100.0, 0.0).value, Intent::SelfYields);
    }

    #[test]
    fn tie_goes_to_yield() {
        let p = BoundaryParams::new(0.0, 1.0, 0.0, Perspective::PedVsAv);
        assert_eq!(classify(&p, FeatureVector { x1: 1.0, x2: 0.0 }).value, Intent::SelfYields);
    }

    #[test]
    fn tau_examples() {
        let tau = tau_boundary(&PED, 2.0, 7.0).unwrap();
        assert!((tau - 1.638288151081328).abs() < 1e-12);
        assert!((tau - 1.6383).abs() < 5e-5);
        let fixed = (PED.b / -PED.w1).sqrt();
        assert!((fixed - 8.844136).abs() < 1e-6);
        assert!((tau_boundary(&PED, fixed, 7.0).unwrap() - fixed).abs() < 1e-12);
        assert_eq!(tau_boundary(&PED, 2.0, 0.0), Err(IntentError::StoppedInteractor(0.0)));
    }

    #[test]
    fn table_rows_validate() {
        assert!(validate_boundary(&BoundaryParams::PED_VS_AV).passed());
        assert!(validate_boundary(&BoundaryParams::AV_VS_PED).passed());
        let bad = validate_boundary(&BoundaryParams::new(0.1, 0.1, -1.0, Perspective::PedVsAv));
        assert!(!bad.passed());
        assert_eq!(bad.failures(), vec!["w1<0", "b>0"]);
    }

    fn params() -> impl Strategy<Value = BoundaryParams> {
        (-0.1..-1e-4f64, 1e-3..0.5f64, 1e-3..2.0f64)
            .prop_map(|(w1, w2, b)| BoundaryParams::new(w1, w2, b, Perspective::PedVsAv))
    }

    proptest! {
        #[test]
        fn label_is_scale_invariant(p in params(), c in 1e-3..1e3f64,
                                    x1 in 0.0..100.0f64, x2 in -50.0..50.0f64) {
            let f = FeatureVector { x1, x2 };
            let a = classify(&p, f);
            prop_assume!(a.margin.abs() > 1e-9);
            prop_assert_eq!(a.value, classify(&p.scaled(c), f).value);
        }

        #[test]
        fn tau_lies_on_boundary(p in params(), t in 0.1..15.0f64, v in 0.1..15.0f64) {
            let tau = tau_boundary(&p, t, v).unwrap();
            let f = features(t, v * tau, v).unwrap();
            prop_assert!(p.margin(f).abs() < 1e-9);
        }

        #[test]
        fn tau_opens_upward(p in params(), t in 1.0..15.0f64, h in 0.01..0.5f64, v in 0.1..15.0f64) {
            let f = |x| tau_boundary(&p, x, v).unwrap();
            let second = f(t + h) - 2.0 * f(t) + f(t - h);
            let exact = -p.w1 / (p.w2 * v) * h * h;
            prop_assert!(second > 0.0);
            prop_assert!((second - exact).abs() < 1e-9 * (1.0 + exact));
        }

        #[test]
        fn discriminant_positive_when_signs_hold(p in params(), v in 0.01..30.0f64) {
            prop_assert!(p.discriminant(v) > 0.0);
        }
    }
}
