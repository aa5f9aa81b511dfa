//! The three-mode repetition code for x-displacement errors.
//!
//! The signal is spread over three modes with two x-squeezed ancillas and a
//! tritter. After transmission the tritter is inverted, the ancilla
//! x-quadratures are measured, and the signal mode is displaced by a
//! feedforward amount read off the measured syndrome.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channels::{apply_independent, branch_table, ErrorPattern, StochasticChannel};
use crate::mixture::{Component, GaussianMixture};
use crate::phase_space::{GaussianState, SymplecticTransform, VACUUM_VARIANCE};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeParams {
    /// Ancilla squeezing parameter.
    pub r: f64,
    /// Known channel displacement, positive by convention.
    pub xbar2: f64,
    /// Per-channel error probability.
    pub gamma: f64,
}

impl CodeParams {
    pub fn new(r: f64, xbar2: f64, gamma: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::domain(format!("squeezing {r} is not finite")));
        }
        if !(xbar2.is_finite() && xbar2 > 0.0) {
            return Err(Error::domain(format!("displacement {xbar2} must be positive")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::domain(format!("error probability {gamma} outside [0, 1]")));
        }
        Ok(Self { r, xbar2, gamma })
    }

    /// Variance of each decoded ancilla x-quadrature, `e^{-2r}/4`.
    pub fn syndrome_variance(&self) -> f64 {
        VACUUM_VARIANCE * (-2.0 * self.r).exp()
    }
}

/// Which channels the decoder believes were hit. The triple error is
/// indistinguishable from no error and is reported as `NoError`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyndromeClass {
    NoError,
    E1,
    E2,
    E3,
    E12,
    E13,
    E23,
}

impl SyndromeClass {
    pub const ALL: [SyndromeClass; 7] = [
        SyndromeClass::NoError,
        SyndromeClass::E1,
        SyndromeClass::E2,
        SyndromeClass::E3,
        SyndromeClass::E12,
        SyndromeClass::E13,
        SyndromeClass::E23,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_pattern(p: ErrorPattern) -> Self {
        match p.bits() {
            0b001 => SyndromeClass::E1,
            0b010 => SyndromeClass::E2,
            0b100 => SyndromeClass::E3,
            0b011 => SyndromeClass::E12,
            0b101 => SyndromeClass::E13,
            0b110 => SyndromeClass::E23,
            _ => SyndromeClass::NoError,
        }
    }

    /// Feedforward x-displacement of the signal mode for syndrome `(x2, x3)`.
    pub fn feedforward(self, x2: f64, x3: f64) -> f64 {
        let s2 = 2f64.sqrt();
        let s23 = (2.0f64 / 3.0).sqrt();
        match self {
            SyndromeClass::NoError => 0.0,
            SyndromeClass::E1 => -x2 / s2,
            SyndromeClass::E2 => -s23 * x3,
            SyndromeClass::E3 => s23 * x3,
            SyndromeClass::E12 => -2.0 * s23 * x3,
            SyndromeClass::E13 => 2.0 * s23 * x3,
            SyndromeClass::E23 => s2 * x2,
        }
    }

    /// Magnitude of the syndrome coefficient in the feedforward, which sets
    /// the excess noise `gain^2 e^{-2r}/4` of a correctly handled branch.
    pub fn gain(self) -> f64 {
        let s23 = (2.0f64 / 3.0).sqrt();
        match self {
            SyndromeClass::NoError => 0.0,
            SyndromeClass::E1 => 1.0 / 2f64.sqrt(),
            SyndromeClass::E2 | SyndromeClass::E3 => s23,
            SyndromeClass::E12 | SyndromeClass::E13 => 2.0 * s23,
            SyndromeClass::E23 => 2f64.sqrt(),
        }
    }
}

impl fmt::Display for SyndromeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SyndromeClass::NoError => "none",
            SyndromeClass::E1 => "E1",
            SyndromeClass::E2 => "E2",
            SyndromeClass::E3 => "E3",
            SyndromeClass::E12 => "E12",
            SyndromeClass::E13 => "E13",
            SyndromeClass::E23 => "E23",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Zero,
    Plus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Minus => "-",
            Sign::Zero => "0",
            Sign::Plus => "+",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignPair {
    pub s2: Sign,
    pub s3: Sign,
}

impl fmt::Display for SignPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.s2, self.s3)
    }
}

/// Decision thresholds on the two syndrome axes: half the smallest nonzero
/// hypothesis mean, `xbar2/(2 sqrt 6)` and `xbar2/(2 sqrt 2)`.
pub fn thresholds(xbar2: f64) -> (f64, f64) {
    (xbar2 / (2.0 * 6f64.sqrt()), xbar2 / (2.0 * 2f64.sqrt()))
}

pub fn sign_pair(x2: f64, x3: f64, xbar2: f64) -> SignPair {
    let (t2, t3) = thresholds(xbar2);
    let sign = |x: f64, t: f64| {
        if x > t {
            Sign::Plus
        } else if x < -t {
            Sign::Minus
        } else {
            Sign::Zero
        }
    };
    SignPair {
        s2: sign(x2, t2),
        s3: sign(x3, t3),
    }
}

/// Class assigned to a sign pair by the syndrome table, if the pair is in it.
pub fn table_class(pair: SignPair) -> Option<SyndromeClass> {
    use Sign::*;
    match (pair.s2, pair.s3) {
        (Zero, Zero) => Some(SyndromeClass::NoError),
        (Plus, Zero) => Some(SyndromeClass::E1),
        (Minus, Plus) => Some(SyndromeClass::E2),
        (Minus, Minus) => Some(SyndromeClass::E3),
        (Plus, Plus) => Some(SyndromeClass::E12),
        (Plus, Minus) => Some(SyndromeClass::E13),
        (Minus, Zero) => Some(SyndromeClass::E23),
        _ => None,
    }
}

/// Sign pair produced by each of the eight error patterns, in
/// [`ErrorPattern::THREE_MODE`] order, with the class it decodes to.
pub fn syndrome_table() -> Vec<(ErrorPattern, SignPair, SyndromeClass)> {
    // any xbar2 > 0 gives the same signs
    branch_table(0.5, 1.0)
        .into_iter()
        .map(|b| {
            let pair = sign_pair(b.ancilla_shifts[0], b.ancilla_shifts[1], 1.0);
            let cls = table_class(pair).expect("noiseless syndromes are always in the table");
            (b.pattern, pair, cls)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Sign table, with out-of-table pairs resolved by maximum posterior.
    #[default]
    ThresholdSign,
    /// Maximum posterior over the eight error patterns.
    MapLikelihood,
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(Policy::ThresholdSign),
            "map" => Ok(Policy::MapLikelihood),
            other => Err(Error::domain(format!("unknown policy {other:?}"))),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::ThresholdSign => "threshold",
            Policy::MapLikelihood => "map",
        })
    }
}

/// Log prior plus Gaussian log likelihood (up to a shared constant) of each
/// error pattern given the syndrome.
pub(crate) fn pattern_scores(x2: f64, x3: f64, p: &CodeParams) -> [f64; 8] {
    let var = p.syndrome_variance();
    let mut out = [0.0; 8];
    for (slot, b) in out.iter_mut().zip(branch_table(p.gamma, p.xbar2)) {
        let d2 = x2 - b.ancilla_shifts[0];
        let d3 = x3 - b.ancilla_shifts[1];
        *slot = b.weight.ln() - (d2 * d2 + d3 * d3) / (2.0 * var);
    }
    out
}

fn map_class(x2: f64, x3: f64, p: &CodeParams) -> SyndromeClass {
    let scores = pattern_scores(x2, x3, p);
    let mut best = 0;
    for i in 1..8 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    SyndromeClass::from_pattern(ErrorPattern::THREE_MODE[best])
}

/// Total prior probability of the patterns that decode to `cls`.
pub fn class_prior(cls: SyndromeClass, gamma: f64) -> f64 {
    ErrorPattern::THREE_MODE
        .iter()
        .filter(|&&pat| SyndromeClass::from_pattern(pat) == cls)
        .map(|pat| pat.probability(gamma, 3))
        .sum()
}

/// Decide the error class from the measured syndrome.
///
/// Under `ThresholdSign`, a table entry whose class has zero prior
/// probability (only possible at `gamma` of 0 or 1) is also resolved by
/// maximum posterior.
pub fn classify(x2: f64, x3: f64, p: &CodeParams, policy: Policy) -> SyndromeClass {
    match policy {
        Policy::ThresholdSign => match table_class(sign_pair(x2, x3, p.xbar2)) {
            Some(cls) if class_prior(cls, p.gamma) > 0.0 => cls,
            _ => map_class(x2, x3, p),
        },
        Policy::MapLikelihood => map_class(x2, x3, p),
    }
}

/// Apply the feedforward displacement for `cls` to the signal mode.
pub fn recover(
    mode1: &GaussianMixture,
    cls: SyndromeClass,
    x2: f64,
    x3: f64,
) -> Result<GaussianMixture> {
    if mode1.modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: mode1.modes(),
        });
    }
    let d = cls.feedforward(x2, x3);
    if d == 0.0 {
        return Ok(mode1.clone());
    }
    mode1.displace(0, d, 0.0)
}

/// Tensor the single-mode signal with two `r`-squeezed ancillas and apply
/// the tritter.
pub fn encode(signal: &GaussianMixture, r: f64) -> Result<GaussianMixture> {
    if signal.modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: signal.modes(),
        });
    }
    let anc = GaussianState::squeezed_vacuum(r);
    let tritter = SymplecticTransform::tritter();
    signal.map_states(|s| s.tensor(&anc).tensor(&anc).apply(&tritter))
}

/// Invert the tritter.
pub fn decode(m: &GaussianMixture) -> Result<GaussianMixture> {
    if m.modes() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: m.modes(),
        });
    }
    m.apply(&SymplecticTransform::tritter().transpose())
}

/// Signal-mode output in the infinite-squeezing limit: every pattern but the
/// triple error is corrected exactly.
pub fn ideal_output(signal: &GaussianState, gamma: f64, xbar2: f64) -> Result<GaussianMixture> {
    if signal.modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: signal.modes(),
        });
    }
    let g3 = gamma.powi(3);
    let clean = GaussianMixture::pure(signal.clone());
    let shifted = GaussianMixture::pure(signal.displace(0, 3f64.sqrt() * xbar2, 0.0)?);
    GaussianMixture::mix(&[(1.0 - g3, &clean), (g3, &shifted)])
}

/// One simulated round of the code.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub x2: f64,
    pub x3: f64,
    pub class: SyndromeClass,
    /// Recovered signal-mode mixture, conditioned on the syndrome.
    pub output: GaussianMixture,
    /// Fidelity of `output` to the input signal.
    pub fidelity: f64,
    /// Error pattern that actually occurred in this run.
    pub true_pattern: Option<ErrorPattern>,
}

impl ProtocolRun {
    /// Output component belonging to the pattern that actually occurred.
    pub fn true_component(&self) -> Option<&Component> {
        let label = self.true_pattern?;
        self.output.components().iter().find(|c| c.label == Some(label))
    }
}

/// Encoded, transmitted and decoded state for fixed parameters; runs only
/// differ in their measurement randomness.
#[derive(Clone, Debug)]
pub struct Protocol {
    params: CodeParams,
    policy: Policy,
    signal: GaussianState,
    decoded: GaussianMixture,
}

impl Protocol {
    pub fn new(signal: GaussianState, params: CodeParams, policy: Policy) -> Result<Self> {
        if signal.modes() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: signal.modes(),
            });
        }
        if !signal.is_pure(1e-9) {
            return Err(Error::domain("signal state must be pure"));
        }
        let encoded = encode(&GaussianMixture::pure(signal.clone()), params.r)?;
        let channel = StochasticChannel::x_displacement(params.gamma, params.xbar2)?;
        let transmitted = apply_independent(&encoded, &[channel.clone(), channel.clone(), channel])?;
        let decoded = decode(&transmitted)?;
        Ok(Self {
            params,
            policy,
            signal,
            decoded,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn signal(&self) -> &GaussianState {
        &self.signal
    }

    /// Three-mode mixture after decoding, one labelled component per pattern.
    pub fn decoded(&self) -> &GaussianMixture {
        &self.decoded
    }

    /// Measure mode 2 then mode 3, classify, recover, and score the output.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProtocolRun> {
        let first = self.decoded.sample_homodyne(1, rng)?;
        // mode 3 is index 1 once mode 2 has been removed
        let second = first.conditioned.sample_homodyne(1, rng)?;
        let (x2, x3) = (first.outcome, second.outcome);
        let signal_mode = second.conditioned;
        let true_pattern = signal_mode.components()[second.component].label;
        let class = classify(x2, x3, &self.params, self.policy);
        let output = recover(&signal_mode, class, x2, x3)?;
        let fidelity = output.fidelity_to_pure(&self.signal)?;
        Ok(ProtocolRun {
            x2,
            x3,
            class,
            output,
            fidelity,
            true_pattern,
        })
    }
}

pub fn run_protocol<R: Rng + ?Sized>(
    signal: &GaussianState,
    params: &CodeParams,
    policy: Policy,
    rng: &mut R,
) -> Result<ProtocolRun> {
    Protocol::new(signal.clone(), *params, policy)?.run(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn params(r: f64, xbar2: f64, gamma: f64) -> CodeParams {
        CodeParams::new(r, xbar2, gamma).unwrap()
    }

    #[test]
    fn params_domain() {
        assert!(CodeParams::new(1.0, 0.0, 0.1).is_err());
        assert!(CodeParams::new(1.0, -1.0, 0.1).is_err());
        assert!(CodeParams::new(1.0, 1.0, 1.5).is_err());
        assert!(CodeParams::new(f64::NAN, 1.0, 0.5).is_err());
    }

    #[test]
    fn encoded_symmetric_mode_carries_signal() {
        let (x1, p1) = (0.8, -0.3);
        for r in [0.0, 0.5, 1.5] {
            let enc = encode(&GaussianMixture::pure(GaussianState::coherent(x1, p1)), r).unwrap();
            let s = &enc.components()[0].state;
            let sx: f64 = (0..3).map(|k| s.x_mean(k)).sum::<f64>() / 3f64.sqrt();
            let sp: f64 = (0..3).map(|k| s.p_mean(k)).sum::<f64>() / 3f64.sqrt();
            assert_abs_diff_eq!(sx, x1, epsilon = 1e-14);
            assert_abs_diff_eq!(sp, p1, epsilon = 1e-14);
        }
    }

    #[test]
    fn unsqueezed_encoding_is_vacuum_covariance() {
        let enc = encode(&GaussianMixture::pure(GaussianState::coherent(1.0, 0.0)), 0.0).unwrap();
        let cov = enc.components()[0].state.cov();
        assert!((cov - DMatrix::identity(6, 6) * 0.25).abs().max() < 1e-15);
    }

    /// Var(x1 - x2) from the covariance, against the inverse of the
    /// encoded precision matrix written out from its quadratic form.
    #[test]
    fn encoded_difference_variance() {
        let r = 0.9;
        let enc = encode(&GaussianMixture::pure(GaussianState::coherent(0.0, 0.0)), r).unwrap();
        let cov = enc.components()[0].state.cov();
        let v = cov[(0, 0)] + cov[(2, 2)] - 2.0 * cov[(0, 2)];
        assert_abs_diff_eq!(v, (-2.0 * r).exp() / 2.0, epsilon = 1e-14);

        // x-block precision: exponent -2[(x1+x2+x3)/sqrt3]^2 - (2/3)e^{2r} sum (xi-xj)^2
        // = -(1/2) x^T P x
        let e = (2.0 * r).exp();
        let mut p = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let sum_term = 4.0 / 3.0;
                let diff_term = if i == j { 2.0 * (4.0 / 3.0) * e } else { -(4.0 / 3.0) * e };
                p[(i, j)] = sum_term + diff_term;
            }
        }
        let c = p.try_inverse().unwrap();
        assert_abs_diff_eq!(c[(0, 0)] + c[(1, 1)] - 2.0 * c[(0, 1)], v, epsilon = 1e-13);
    }

    #[test]
    fn decode_inverts_encode() {
        let r = 0.6;
        let sig = GaussianState::coherent(0.4, 1.2);
        let dec = decode(&encode(&GaussianMixture::pure(sig.clone()), r).unwrap()).unwrap();
        let want = sig
            .tensor(&GaussianState::squeezed_vacuum(r))
            .tensor(&GaussianState::squeezed_vacuum(r));
        assert!(dec.components()[0].state.max_abs_diff(&want) < 1e-12);
        assert!(decode(&GaussianMixture::pure(sig)).is_err());
    }

    #[test]
    fn decoded_mixture_matches_branch_table() {
        let p = params(0.5, 3.0, 0.2);
        let sig = GaussianState::coherent(0.3, 0.7);
        let proto = Protocol::new(sig.clone(), p, Policy::ThresholdSign).unwrap();
        let dec = proto.decoded();
        assert_eq!(dec.len(), 8);
        for rec in branch_table(p.gamma, p.xbar2) {
            let c = dec.components().iter().find(|c| c.label == Some(rec.pattern)).unwrap();
            assert_abs_diff_eq!(c.weight, rec.weight, epsilon = 1e-12);
            let s = &c.state;
            assert_abs_diff_eq!(s.x_mean(0) - 0.3, rec.mode1_x_shift, epsilon = 1e-12);
            assert_abs_diff_eq!(s.x_mean(1), rec.ancilla_shifts[0], epsilon = 1e-12);
            assert_abs_diff_eq!(s.x_mean(2), rec.ancilla_shifts[1], epsilon = 1e-12);
            assert_abs_diff_eq!(s.p_mean(0), 0.7, epsilon = 1e-12);
            assert_abs_diff_eq!(s.p_mean(1), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.p_mean(2), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn syndrome_sign_table() {
        use Sign::*;
        let rows = syndrome_table();
        let pairs: Vec<(Sign, Sign)> = rows.iter().map(|(_, sp, _)| (sp.s2, sp.s3)).collect();
        assert_eq!(
            pairs,
            [
                (Zero, Zero),
                (Plus, Zero),
                (Minus, Plus),
                (Minus, Minus),
                (Plus, Plus),
                (Plus, Minus),
                (Minus, Zero),
                (Zero, Zero)
            ]
        );
        assert_eq!(rows[7].2, SyndromeClass::NoError);
        for (pat, _, cls) in &rows[..7] {
            assert_eq!(*cls, SyndromeClass::from_pattern(*pat));
        }
    }

    #[test]
    fn classify_nominal_syndromes() {
        let p = params(1.0, 2.0, 0.1);
        let x = p.xbar2;
        let s6 = 6f64.sqrt();
        let s2 = 2f64.sqrt();
        for policy in [Policy::ThresholdSign, Policy::MapLikelihood] {
            assert_eq!(classify((2.0f64 / 3.0).sqrt() * x, 0.0, &p, policy), SyndromeClass::E1);
            assert_eq!(classify(-x / s6, x / s2, &p, policy), SyndromeClass::E2);
            assert_eq!(classify(-x / s6, -x / s2, &p, policy), SyndromeClass::E3);
            assert_eq!(classify(x / s6, x / s2, &p, policy), SyndromeClass::E12);
            assert_eq!(classify(x / s6, -x / s2, &p, policy), SyndromeClass::E13);
            assert_eq!(classify(-(2.0f64 / 3.0).sqrt() * x, 0.0, &p, policy), SyndromeClass::E23);
            assert_eq!(classify(0.0, 0.0, &p, policy), SyndromeClass::NoError);
        }
    }

    #[test]
    fn out_of_table_pairs_use_posterior() {
        let p = params(1.0, 2.0, 0.1);
        let (_, t3) = thresholds(p.xbar2);
        // (0,+) close to the E2 hypothesis side
        let x2 = -0.05;
        let x3 = 2.0 * t3;
        let cls = classify(x2, x3, &p, Policy::ThresholdSign);
        assert_eq!(cls, map_class(x2, x3, &p));
        assert!(matches!(cls, SyndromeClass::E2 | SyndromeClass::E12 | SyndromeClass::NoError));
    }

    #[test]
    fn zero_prior_classes_are_never_chosen() {
        let p0 = params(0.0, 3.0, 0.0);
        let p1 = params(0.0, 3.0, 1.0);
        for x2 in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            for x3 in [-2.0, 0.0, 2.0] {
                assert_eq!(classify(x2, x3, &p0, Policy::ThresholdSign), SyndromeClass::NoError);
                assert_eq!(classify(x2, x3, &p1, Policy::ThresholdSign), SyndromeClass::NoError);
            }
        }
    }

    #[test]
    fn feedforward_cancels_nominal_shifts() {
        let x = 1.7;
        let s3 = 3f64.sqrt();
        for rec in branch_table(0.3, x).into_iter().take(7) {
            let cls = SyndromeClass::from_pattern(rec.pattern);
            let d = cls.feedforward(rec.ancilla_shifts[0], rec.ancilla_shifts[1]);
            assert_abs_diff_eq!(rec.mode1_x_shift + d, 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(SyndromeClass::E1.feedforward((2.0f64 / 3.0).sqrt() * x, 0.0), -x / s3, epsilon = 1e-15);
        assert_abs_diff_eq!(
            SyndromeClass::E23.feedforward(-(2.0f64 / 3.0).sqrt() * x, 0.0),
            -2.0 * x / s3,
            epsilon = 1e-15
        );
        let m = GaussianMixture::pure(GaussianState::coherent(0.1, 0.2));
        assert_eq!(recover(&m, SyndromeClass::NoError, 4.0, 5.0).unwrap(), m);
        assert!(recover(&GaussianMixture::pure(GaussianState::vacuum(2)), SyndromeClass::E1, 0.0, 0.0).is_err());
    }

    #[test]
    fn noiseless_channel_gives_unit_fidelity() {
        let sig = GaussianState::coherent(0.5, -1.0);
        for (r, seed) in [(0.0, 1), (0.7, 2), (3.0, 3)] {
            let p = params(r, 2.0, 0.0);
            for policy in [Policy::ThresholdSign, Policy::MapLikelihood] {
                let mut s = rng::stream(seed, 0, 0);
                for _ in 0..50 {
                    let run = run_protocol(&sig, &p, policy, &mut s).unwrap();
                    assert_abs_diff_eq!(run.fidelity, 1.0, epsilon = 1e-10);
                    assert_eq!(run.class, SyndromeClass::NoError);
                }
            }
        }
    }

    #[test]
    fn certain_errors_leave_triple_shift() {
        let sig = GaussianState::coherent(0.5, -1.0);
        let xbar2 = 0.4;
        for r in [0.0, 1.0] {
            let p = params(r, xbar2, 1.0);
            let mut s = rng::stream(9, 0, 0);
            for _ in 0..50 {
                let run = run_protocol(&sig, &p, Policy::ThresholdSign, &mut s).unwrap();
                assert_eq!(run.class, SyndromeClass::NoError);
                assert_eq!(run.true_pattern, Some(ErrorPattern::THREE_MODE[7]));
                assert_abs_diff_eq!(run.fidelity, (-3.0 * xbar2 * xbar2).exp(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn measurement_order_is_irrelevant() {
        let p = params(0.4, 1.0, 0.3);
        let proto = Protocol::new(GaussianState::coherent(0.2, 0.1), p, Policy::ThresholdSign).unwrap();
        let (x2, x3) = (0.31, -0.52);
        let a = proto.decoded().condition(1, x2).unwrap().condition(1, x3).unwrap();
        let b = proto.decoded().condition(2, x3).unwrap().condition(1, x2).unwrap();
        for (ca, cb) in a.components().iter().zip(b.components()) {
            assert_eq!(ca.label, cb.label);
            assert_abs_diff_eq!(ca.weight, cb.weight, epsilon = 1e-12);
            assert!(ca.state.max_abs_diff(&cb.state) < 1e-12);
        }
    }

    #[test]
    fn p_quadrature_untouched() {
        let sig = GaussianState::coherent(0.3, 0.9);
        let p = params(0.5, 1.5, 0.4);
        let proto = Protocol::new(sig.clone(), p, Policy::ThresholdSign).unwrap();
        let mut s = rng::stream(2, 0, 0);
        for _ in 0..200 {
            let run = proto.run(&mut s).unwrap();
            for c in run.output.components() {
                assert_abs_diff_eq!(c.state.p_mean(0), sig.p_mean(0), epsilon = 1e-10);
                assert_abs_diff_eq!(c.state.p_var(0), sig.p_var(0), epsilon = 1e-10);
            }
            assert!((0.0..=1.0).contains(&run.fidelity));
        }
    }

    #[test]
    fn ideal_output_fidelity() {
        let sig = GaussianState::coherent(1.0, 0.0);
        let (gamma, xbar2) = (0.3, 0.5);
        let out = ideal_output(&sig, gamma, xbar2).unwrap();
        let want = (1.0 - gamma.powi(3)) + gamma.powi(3) * (-3.0 * xbar2 * xbar2).exp();
        assert_abs_diff_eq!(out.fidelity_to_pure(&sig).unwrap(), want, epsilon = 1e-15);
        assert_eq!(ideal_output(&sig, 0.0, xbar2).unwrap(), GaussianMixture::pure(sig.clone()));
        let big = ideal_output(&sig, 0.1, 20.0).unwrap();
        assert_abs_diff_eq!(big.fidelity_to_pure(&sig).unwrap(), 0.999, epsilon = 1e-12);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("threshold".parse::<Policy>().unwrap(), Policy::ThresholdSign);
        assert_eq!("map".parse::<Policy>().unwrap(), Policy::MapLikelihood);
        assert!("ml".parse::<Policy>().is_err());
    }
}
