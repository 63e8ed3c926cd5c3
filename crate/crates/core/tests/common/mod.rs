#![allow(dead_code)]

use std::f64::consts::PI;

use kerrcav::{
    choose_truncation, AmplitudeSet, CellAmplitudes, CoherentWeights, Deformation, FockTruncation, ModelParams, C64,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_alpha(rng: &mut ChaCha8Rng, max_abs: f64) -> C64 {
    C64::from_polar(max_abs * rng.gen::<f64>().sqrt(), rng.gen_range(-PI..PI))
}

fn random_c64(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Normalized atomic weights with `gamma2 = gamma3`.
pub fn random_gamma(rng: &mut ChaCha8Rng) -> [C64; 4] {
    let (g1, g2, g4) = (random_c64(rng), random_c64(rng), random_c64(rng));
    let norm = (g1.norm_sqr() + 2.0 * g2.norm_sqr() + g4.norm_sqr()).sqrt();
    [g1 / norm, g2 / norm, g2 / norm, g4 / norm]
}

/// Physical parameters with `|alpha| <= 2` and every rate within `[-30, 30]`.
pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams {
        lambda: rng.gen_range(0.05..3.0),
        epsilon: rng.gen_range(-5.0..5.0),
        phi: rng.gen_range(-PI..PI),
        delta: rng.gen_range(-30.0..30.0),
        beta1: rng.gen_range(-2.0..2.0),
        beta2: rng.gen_range(-2.0..2.0),
        chi1: rng.gen_range(-1.0..1.0),
        chi2: rng.gen_range(-1.0..1.0),
        chi12: rng.gen_range(-1.0..1.0),
        alpha1: random_alpha(rng, 2.0),
        alpha2: random_alpha(rng, 2.0),
        gamma: random_gamma(rng),
        deformation: if rng.gen_bool(0.5) { Deformation::Linear } else { Deformation::Sqrt },
        t4_convention: Default::default(),
    }
}

pub fn truncation(params: &ModelParams) -> FockTruncation {
    choose_truncation(params.alpha1, params.alpha2, 1e-12).unwrap()
}

/// Arbitrary amplitudes, normalized against the coherent weights of `params`.
pub fn random_amplitudes(rng: &mut ChaCha8Rng, params: &ModelParams, n_max: usize) -> (AmplitudeSet, CoherentWeights) {
    let trunc = FockTruncation { n_max, tail_eps: 0.0 };
    let weights = CoherentWeights::new(params, &trunc);
    let side = n_max + 1;
    let cells = (0..side * side)
        .map(|_| CellAmplitudes { a1: random_c64(rng), a2: random_c64(rng), a4: random_c64(rng) })
        .collect();
    let raw = AmplitudeSet::new(0.0, n_max, cells);
    let scale = 1.0 / raw.norm(&weights).sqrt();
    let cells = raw
        .iter_cells()
        .map(|(_, c)| CellAmplitudes { a1: c.a1 * scale, a2: c.a2 * scale, a4: c.a4 * scale })
        .collect();
    (AmplitudeSet::new(0.0, n_max, cells), weights)
}
