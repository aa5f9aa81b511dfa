//! Stochastic error channels: with probability `gamma` an error branch acts
//! on the mode, otherwise the state passes unchanged.

use std::fmt;

use crate::mixture::{Component, GaussianMixture};
use crate::{Error, Result};

/// Set of modes on which a channel error occurred, as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErrorPattern(u8);

impl ErrorPattern {
    pub const NONE: ErrorPattern = ErrorPattern(0);

    /// The eight patterns on three modes, in the order none, 1, 2, 3, 12,
    /// 13, 23, 123 (1-based channel numbers).
    pub const THREE_MODE: [ErrorPattern; 8] = [
        ErrorPattern(0b000),
        ErrorPattern(0b001),
        ErrorPattern(0b010),
        ErrorPattern(0b100),
        ErrorPattern(0b011),
        ErrorPattern(0b101),
        ErrorPattern(0b110),
        ErrorPattern(0b111),
    ];

    pub fn from_bits(bits: u8) -> Self {
        ErrorPattern(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Pattern with the (0-based) `mode` added.
    pub fn with(self, mode: usize) -> Self {
        ErrorPattern(self.0 | (1 << mode))
    }

    pub fn contains(self, mode: usize) -> bool {
        self.0 & (1 << mode) != 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Prior probability of this pattern on `modes` channels, each failing
    /// independently with probability `gamma`.
    pub fn probability(self, gamma: f64, modes: usize) -> f64 {
        let k = self.count() as i32;
        gamma.powi(k) * (1.0 - gamma).powi(modes as i32 - k)
    }
}

impl fmt::Display for ErrorPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return f.write_str("none");
        }
        for mode in 0..8 {
            if self.contains(mode) {
                write!(f, "{}", mode + 1)?;
            }
        }
        Ok(())
    }
}

/// What happens to a mode when its channel fires.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorBranch {
    XDisplacement(f64),
    GeneralDisplacement { dx: f64, dp: f64 },
    /// The mode is swapped for a fixed single-mode state (erasure-style).
    Replacement(GaussianMixture),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StochasticChannel {
    gamma: f64,
    branch: ErrorBranch,
}

impl StochasticChannel {
    pub fn new(gamma: f64, branch: ErrorBranch) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::domain(format!("error probability {gamma} outside [0, 1]")));
        }
        if let ErrorBranch::Replacement(m) = &branch {
            if m.modes() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: m.modes(),
                });
            }
        }
        Ok(Self { gamma, branch })
    }

    pub fn x_displacement(gamma: f64, shift: f64) -> Result<Self> {
        Self::new(gamma, ErrorBranch::XDisplacement(shift))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn branch(&self) -> &ErrorBranch {
        &self.branch
    }

    fn error_branch(&self, m: &GaussianMixture, mode: usize) -> Result<GaussianMixture> {
        let mark = |c: &mut Component| c.label = Some(c.label.unwrap_or_default().with(mode));
        let mut out = match &self.branch {
            ErrorBranch::XDisplacement(dx) => m.displace(mode, *dx, 0.0)?,
            ErrorBranch::GeneralDisplacement { dx, dp } => m.displace(mode, *dx, *dp)?,
            ErrorBranch::Replacement(rep) => {
                let mut comps = Vec::with_capacity(m.len() * rep.len());
                for c in m.components() {
                    for rc in rep.components() {
                        comps.push(Component {
                            weight: c.weight * rc.weight,
                            state: c.state.replace_mode(mode, &rc.state)?,
                            label: c.label,
                        });
                    }
                }
                GaussianMixture::new(comps)?
            }
        };
        let comps = out
            .components()
            .iter()
            .cloned()
            .map(|mut c| {
                mark(&mut c);
                c
            })
            .collect();
        out = GaussianMixture::new(comps)?;
        Ok(out)
    }
}

/// Act with `channel` on `mode` of every component.
///
/// Components that pass untouched keep their label (or get the empty
/// pattern); error components get `mode` added to their label.
pub fn apply_channel(
    m: &GaussianMixture,
    channel: &StochasticChannel,
    mode: usize,
) -> Result<GaussianMixture> {
    if mode >= m.modes() {
        return Err(Error::ModeOutOfRange {
            index: mode,
            modes: m.modes(),
        });
    }
    let gamma = channel.gamma;
    if gamma == 0.0 {
        return Ok(m.clone());
    }
    let error = channel.error_branch(m, mode)?;
    if gamma == 1.0 {
        return Ok(error);
    }
    let mut clean = m.clone();
    let comps = clean
        .components()
        .iter()
        .cloned()
        .map(|mut c| {
            c.label = Some(c.label.unwrap_or_default());
            c
        })
        .collect();
    clean = GaussianMixture::new(comps)?;
    GaussianMixture::mix(&[(1.0 - gamma, &clean), (gamma, &error)])
}

/// One independent channel per mode, applied in mode order.
pub fn apply_independent(
    m: &GaussianMixture,
    channels: &[StochasticChannel],
) -> Result<GaussianMixture> {
    if channels.len() != m.modes() {
        return Err(Error::DimensionMismatch {
            expected: m.modes(),
            found: channels.len(),
        });
    }
    channels
        .iter()
        .enumerate()
        .try_fold(m.clone(), |acc, (mode, c)| apply_channel(&acc, c, mode))
}

/// Weight and decoded shifts of one error pattern of the three-mode code.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchRecord {
    pub pattern: ErrorPattern,
    pub weight: f64,
    /// x-shift of the signal mode after decoding.
    pub mode1_x_shift: f64,
    /// x-shifts of the two ancilla modes after decoding.
    pub ancilla_shifts: [f64; 2],
}

/// The eight error patterns of three identical x-displacement channels
/// with their probabilities and decoded shifts.
pub fn branch_table(gamma: f64, xbar2: f64) -> Vec<BranchRecord> {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let s2 = 2f64.sqrt();
    let s23 = (2.0f64 / 3.0).sqrt();
    let shifts: [(f64, [f64; 2]); 8] = [
        (0.0, [0.0, 0.0]),
        (xbar2 / s3, [s23 * xbar2, 0.0]),
        (xbar2 / s3, [-xbar2 / s6, xbar2 / s2]),
        (xbar2 / s3, [-xbar2 / s6, -xbar2 / s2]),
        (2.0 * xbar2 / s3, [xbar2 / s6, xbar2 / s2]),
        (2.0 * xbar2 / s3, [xbar2 / s6, -xbar2 / s2]),
        (2.0 * xbar2 / s3, [-s23 * xbar2, 0.0]),
        (s3 * xbar2, [0.0, 0.0]),
    ];
    ErrorPattern::THREE_MODE
        .iter()
        .zip(shifts)
        .map(|(&pattern, (mode1_x_shift, ancilla_shifts))| BranchRecord {
            pattern,
            weight: pattern.probability(gamma, 3),
            mode1_x_shift,
            ancilla_shifts,
        })
        .collect()
}
