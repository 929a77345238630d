use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::SensorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Displacement,
    Load,
}

/// Seeded generator for one record's sensor noise.
pub fn sensor_rng(spec: &SensorSpec) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(spec.rng_seed)
}

/// Adds Gaussian noise (when the channel has any) and quantizes to the
/// channel resolution, rounding half to even.
pub fn sensor_read<R: Rng + ?Sized>(true_value: f64, spec: &SensorSpec, channel: Channel, rng: &mut R) -> f64 {
    let (resolution, std) = match channel {
        Channel::Displacement => (spec.disp_resolution, spec.disp_noise_std),
        Channel::Load => (spec.load_resolution, spec.load_noise_std),
    };
    let noisy = if std > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        true_value + std * z
    } else {
        true_value
    };
    quantize(noisy, resolution)
}

pub fn quantize(value: f64, resolution: f64) -> f64 {
    let q = (value / resolution).round_ties_even() * resolution;
    // keep -0.0 out of the records
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantizes_to_resolution() {
        let spec = SensorSpec::default();
        let mut rng = sensor_rng(&spec);
        let v = sensor_read(0.123456e-9, &spec, Channel::Displacement, &mut rng);
        assert_relative_eq!(v, 0.12e-9, max_relative = 1e-12);
        assert_eq!(sensor_read(0.0, &spec, Channel::Load, &mut rng), 0.0);
        assert_eq!(sensor_read(0.0, &spec, Channel::Displacement, &mut rng), 0.0);
    }

    #[test]
    fn ties_go_to_even() {
        assert_relative_eq!(quantize(2.5, 1.0), 2.0);
        assert_relative_eq!(quantize(3.5, 1.0), 4.0);
        assert_eq!(quantize(-0.4, 1.0).to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn seeded_noise_repeats() {
        let spec = SensorSpec {
            disp_noise_std: 1e-9,
            rng_seed: 7,
            ..SensorSpec::default()
        };
        let draw = || {
            let mut rng = sensor_rng(&spec);
            (0..100)
                .map(|i| sensor_read(i as f64 * 1e-8, &spec, Channel::Displacement, &mut rng))
                .collect::<Vec<_>>()
        };
        let a = draw();
        assert_eq!(a, draw());
        assert!(a.iter().enumerate().any(|(i, &v)| v != quantize(i as f64 * 1e-8, 1e-11)));
    }
}
