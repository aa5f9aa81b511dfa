//! Finite convex mixtures of Gaussian states.
//!
//! Stochastic channels map a Gaussian input to a discrete mixture of
//! Gaussians, which is no longer Gaussian. Every operation here acts
//! component-wise and keeps the weights normalized.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::ErrorPattern;
use crate::phase_space::{GaussianState, SymplecticTransform};
use crate::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Pruning threshold used when callers have no better choice.
pub const DEFAULT_PRUNE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub state: GaussianState,
    /// Which channels fired to produce this component, when known.
    pub label: Option<ErrorPattern>,
}

impl Component {
    pub fn new(weight: f64, state: GaussianState) -> Self {
        Self {
            weight,
            state,
            label: None,
        }
    }

    pub fn labelled(weight: f64, state: GaussianState, label: ErrorPattern) -> Self {
        Self {
            weight,
            state,
            label: Some(label),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    modes: usize,
    components: Vec<Component>,
}

/// Result of sampling one homodyne outcome.
#[derive(Clone, Debug)]
pub struct HomodyneSample {
    pub outcome: f64,
    /// Index of the component the outcome was drawn from. Component order is
    /// preserved by conditioning, so this also indexes `conditioned`.
    pub component: usize,
    pub conditioned: GaussianMixture,
}

impl GaussianMixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::domain("mixture needs at least one component"))?;
        let modes = first.state.modes();
        for c in &components {
            if c.state.modes() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: c.state.modes(),
                });
            }
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(Error::domain(format!("weight {} outside [0, 1]", c.weight)));
            }
        }
        let m = Self { modes, components };
        let sum = m.weight_sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::ProbabilitySum(sum));
        }
        Ok(m)
    }

    pub fn pure(state: GaussianState) -> Self {
        Self {
            modes: state.modes(),
            components: vec![Component::new(1.0, state)],
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Attach the same label to every component.
    pub fn with_label(mut self, label: ErrorPattern) -> Self {
        for c in &mut self.components {
            c.label = Some(label);
        }
        self
    }

    /// Convex combination `sum_k p_k m_k`. Branches with probability exactly
    /// zero contribute no components.
    pub fn mix(branches: &[(f64, &GaussianMixture)]) -> Result<Self> {
        let first = branches
            .first()
            .ok_or_else(|| Error::domain("mix needs at least one branch"))?;
        let modes = first.1.modes;
        let mut total = 0.0;
        let mut components = Vec::new();
        for &(p, m) in branches {
            if m.modes != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: m.modes,
                });
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(format!("branch probability {p} outside [0, 1]")));
            }
            total += p;
            if p == 0.0 {
                continue;
            }
            components.extend(m.components.iter().map(|c| Component {
                weight: p * c.weight,
                ..c.clone()
            }));
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::ProbabilitySum(total));
        }
        Ok(Self { modes, components })
    }

    /// Apply `f` to every component state; weights and labels are kept.
    pub fn map_states<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&GaussianState) -> Result<GaussianState>,
    {
        let components = self
            .components
            .iter()
            .map(|c| {
                Ok(Component {
                    state: f(&c.state)?,
                    ..c.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let modes = components[0].state.modes();
        Ok(Self { modes, components })
    }

    pub fn apply(&self, transform: &SymplecticTransform) -> Result<Self> {
        self.map_states(|s| s.apply(transform))
    }

    pub fn displace(&self, mode: usize, dx: f64, dp: f64) -> Result<Self> {
        self.map_states(|s| s.displace(mode, dx, dp))
    }

    pub fn trace_out(&self, mode: usize) -> Result<Self> {
        self.map_states(|s| s.trace_out(mode))
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(Error::ModeOutOfRange {
                index: mode,
                modes: self.modes,
            });
        }
        Ok(())
    }

    /// Density of the x-quadrature of `mode` at `x`.
    pub fn homodyne_density(&self, mode: usize, x: f64) -> Result<f64> {
        self.check_mode(mode)?;
        self.components.iter().try_fold(0.0, |acc, c| {
            Ok(acc + c.weight * c.state.x_marginal(mode)?.pdf(x))
        })
    }

    /// Bayesian update on an x-homodyne outcome of `mode`. The measured mode
    /// is removed; component order and labels are preserved.
    pub fn condition(&self, mode: usize, x: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut ln_weights = Vec::with_capacity(self.len());
        let mut states = Vec::with_capacity(self.len());
        for c in &self.components {
            let (ln_density, rest) = c.state.condition_on_x_ln(mode, x)?;
            ln_weights.push(c.weight.ln() + ln_density);
            states.push(rest);
        }
        let max = ln_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::ZeroDensity);
        }
        let norm: f64 = ln_weights.iter().map(|l| (l - max).exp()).sum();
        let ln_norm = max + norm.ln();
        let components = self
            .components
            .iter()
            .zip(states)
            .zip(ln_weights)
            .map(|((c, state), l)| Component {
                weight: (l - ln_norm).exp(),
                state,
                label: c.label,
            })
            .collect();
        Ok(Self {
            modes: self.modes - 1,
            components,
        })
    }

    /// Draw a component index with probability equal to its weight.
    pub fn sample_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.weight_sum();
        let mut acc = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                return i;
            }
        }
        // u landed on the rounding gap at the top; take the last nonzero weight
        self.components
            .iter()
            .rposition(|c| c.weight > 0.0)
            .unwrap_or(self.len() - 1)
    }

    /// Sample an x-homodyne outcome of `mode` from the exact mixture
    /// marginal and condition on it.
    pub fn sample_homodyne<R: Rng + ?Sized>(&self, mode: usize, rng: &mut R) -> Result<HomodyneSample> {
        self.check_mode(mode)?;
        let component = self.sample_component(rng);
        let marginal = self.components[component].state.x_marginal(mode)?;
        let z: f64 = rng.sample(StandardNormal);
        let outcome = marginal.mean + marginal.std_dev() * z;
        let conditioned = self.condition(mode, outcome)?;
        Ok(HomodyneSample {
            outcome,
            component,
            conditioned,
        })
    }

    /// `sum_i w_i <target|rho_i|target>` for a pure Gaussian target.
    pub fn fidelity_to_pure(&self, target: &GaussianState) -> Result<f64> {
        if target.modes() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: target.modes(),
            });
        }
        let f = self.components.iter().try_fold(0.0, |acc, c| {
            Ok::<_, Error>(acc + c.weight * c.state.overlap_pure(target)?)
        })?;
        Ok(f.clamp(0.0, 1.0))
    }

    /// Drop components lighter than `eps` and renormalize. The heaviest
    /// component always survives.
    pub fn prune(&self, eps: f64) -> Self {
        let mut kept: Vec<Component> = self
            .components
            .iter()
            .filter(|c| c.weight >= eps)
            .cloned()
            .collect();
        if kept.is_empty() {
            let heaviest = self
                .components
                .iter()
                .max_by(|a, b| a.weight.total_cmp(&b.weight))
                .expect("mixtures are nonempty");
            kept.push(heaviest.clone());
        }
        let total: f64 = kept.iter().map(|c| c.weight).sum();
        for c in &mut kept {
            c.weight /= total;
        }
        Self {
            modes: self.modes,
            components: kept,
        }
    }
}
