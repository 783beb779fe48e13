//! Matched disturbance models, all bounded by `|d(t)|_inf <= d_bar`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::Vec2;
use crate::real::{lit, Real};

use super::SimError;

#[derive(Clone, Debug, PartialEq)]
pub enum DisturbanceKind<T> {
    None,
    /// `d_i(t) = amp_i * sin(freq_i * t + phase_i)` with `freq` in rad/s.
    Sinusoidal {
        amp: Vec2<T>,
        freq: Vec2<T>,
        phase: Vec2<T>,
    },
    /// Uniform samples in `[-amp, amp]` per component, held constant over
    /// each control period, drawn from a dedicated seeded stream.
    UniformRandom {
        amp: T,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceSpec<T> {
    /// Declared bound `d_bar`; the controller's robust margins use this even
    /// when the realized disturbance is smaller or absent.
    pub d_bar: T,
    pub kind: DisturbanceKind<T>,
}

impl<T: Real> DisturbanceSpec<T> {
    pub fn none(d_bar: T) -> Self {
        Self {
            d_bar,
            kind: DisturbanceKind::None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.d_bar.is_finite() || self.d_bar < T::zero() {
            return Err(SimError::InvalidScenario(
                "d_bar must be finite and >= 0".into(),
            ));
        }
        match &self.kind {
            DisturbanceKind::None => {}
            DisturbanceKind::Sinusoidal { amp, freq, phase } => {
                if !(amp.is_finite() && freq.is_finite() && phase.is_finite()) {
                    return Err(SimError::InvalidScenario(
                        "non-finite sinusoidal disturbance".into(),
                    ));
                }
                if amp.x.abs().max(amp.y.abs()) > self.d_bar {
                    return Err(SimError::InvalidScenario(
                        "sinusoidal amplitude exceeds declared d_bar".into(),
                    ));
                }
            }
            DisturbanceKind::UniformRandom { amp, .. } => {
                if !amp.is_finite() || *amp < T::zero() || *amp > self.d_bar {
                    return Err(SimError::InvalidScenario(
                        "uniform disturbance amplitude must lie in [0, d_bar]".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Mutable part of the disturbance evaluation: the random stream and the
/// sample currently held for this control period.
#[derive(Clone, Debug)]
pub struct DisturbanceState<T> {
    rng: Option<ChaCha8Rng>,
    held: Vec2<T>,
}

impl<T: Real> DisturbanceState<T> {
    /// The stream mixes the disturbance's own seed with the run seed, so a
    /// scenario pins its realization while seed overrides still vary it.
    pub fn new(spec: &DisturbanceSpec<T>, run_seed: u64) -> Self {
        match spec.kind {
            DisturbanceKind::UniformRandom { seed, .. } => Self {
                rng: Some(ChaCha8Rng::seed_from_u64(
                    seed ^ run_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15),
                )),
                held: Vec2::zero(),
            },
            _ => Self {
                rng: None,
                held: Vec2::zero(),
            },
        }
    }

    /// Draw the sample held for the upcoming control period. Call once per
    /// control step, before integrating; a no-op for analytic kinds.
    pub fn advance_period(&mut self, spec: &DisturbanceSpec<T>) {
        if let (DisturbanceKind::UniformRandom { amp, .. }, Some(rng)) =
            (&spec.kind, self.rng.as_mut())
        {
            let x: f64 = rng.random_range(-1.0..=1.0);
            let y: f64 = rng.random_range(-1.0..=1.0);
            self.held = Vec2::new(lit::<T>(x) * *amp, lit::<T>(y) * *amp);
        }
    }
}

/// Disturbance applied at time `t`.
pub fn disturbance<T: Real>(
    spec: &DisturbanceSpec<T>,
    t: T,
    state: &DisturbanceState<T>,
) -> Vec2<T> {
    match &spec.kind {
        DisturbanceKind::None => Vec2::zero(),
        DisturbanceKind::Sinusoidal { amp, freq, phase } => Vec2::new(
            amp.x * (freq.x * t + phase.x).sin(),
            amp.y * (freq.y * t + phase.y).sin(),
        ),
        DisturbanceKind::UniformRandom { .. } => state.held,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn none_is_zero() {
        let spec = DisturbanceSpec::none(0.2);
        let st = DisturbanceState::new(&spec, 0);
        assert_eq!(disturbance(&spec, 3.7, &st), Vec2::zero());
    }

    #[test]
    fn sinusoidal_touches_bound_at_crest() {
        let spec = DisturbanceSpec {
            d_bar: 0.2,
            kind: DisturbanceKind::Sinusoidal {
                amp: Vec2::new(0.2, 0.2),
                freq: Vec2::new(1.0, 1.0),
                phase: Vec2::new(0.0, 0.0),
            },
        };
        spec.validate().unwrap();
        let st = DisturbanceState::new(&spec, 0);
        let d = disturbance(&spec, std::f64::consts::FRAC_PI_2, &st);
        assert!((d.x - 0.2).abs() < 1e-12);
        assert!(d.norm_inf() <= 0.2);
    }

    #[test]
    fn uniform_stream_is_deterministic_and_bounded() {
        let spec = DisturbanceSpec {
            d_bar: 0.1,
            kind: DisturbanceKind::UniformRandom { amp: 0.1, seed: 42 },
        };
        spec.validate().unwrap();
        let mut a = DisturbanceState::new(&spec, 0);
        let mut b = DisturbanceState::new(&spec, 0);
        for _ in 0..1000 {
            a.advance_period(&spec);
            b.advance_period(&spec);
            let da = disturbance(&spec, 0.0, &a);
            let db = disturbance(&spec, 0.0, &b);
            assert_eq!(da, db);
            assert!(da.norm_inf() <= 0.1);
        }
    }

    #[test]
    fn run_seed_varies_the_stream() {
        let spec = DisturbanceSpec {
            d_bar: 0.1,
            kind: DisturbanceKind::UniformRandom { amp: 0.1, seed: 42 },
        };
        let mut a = DisturbanceState::new(&spec, 1);
        let mut b = DisturbanceState::new(&spec, 2);
        a.advance_period(&spec);
        b.advance_period(&spec);
        assert_ne!(disturbance(&spec, 0.0, &a), disturbance(&spec, 0.0, &b));
    }

    #[test]
    fn amplitude_above_bound_rejected() {
        let spec = DisturbanceSpec {
            d_bar: 0.1,
            kind: DisturbanceKind::Sinusoidal {
                amp: Vec2::new(0.2, 0.0),
                freq: Vec2::new(1.0, 1.0),
                phase: Vec2::zero(),
            },
        };
        assert!(spec.validate().is_err());
    }
}
