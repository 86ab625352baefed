//! Seeded music-like test signals: decaying harmonic notes plus noise
//! bursts, with a wide dynamic range so that every profile sees both
//! above- and below-threshold passages.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::clip::AudioClip;

fn db_to_amp(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Generates one clip of `secs` seconds at `sample_rate_hz`.
pub fn desk_clip(seed: u64, secs: f64, sample_rate_hz: u32) -> AudioClip {
    let fs = sample_rate_hz as f64;
    let len = (secs * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0f64; len];

    // notes
    let mut t = rng.random_range(0.0..0.05);
    while t < secs {
        let onset = (t * fs) as usize;
        let f0: f64 = 80.0 * 2f64.powf(rng.random_range(0.0..4.0));
        let harmonics = rng.random_range(1..=4);
        let amp = db_to_amp(rng.random_range(-36.0..-4.0));
        let decay_s: f64 = rng.random_range(0.05..0.6);
        let attack_s = rng.random_range(0.002..0.02);
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let end = len.min(onset + (5.0 * decay_s * fs) as usize);
        for (i, s) in out[onset..end].iter_mut().enumerate() {
            let tt = i as f64 / fs;
            let env = (tt / attack_s).min(1.0) * (-tt / decay_s).exp();
            let mut v = 0.0;
            for k in 1..=harmonics {
                let fk = f0 * k as f64;
                if fk < fs / 2.0 {
                    v += (2.0 * PI * fk * tt + phase * k as f64).sin() / k as f64;
                }
            }
            *s += amp * env * v;
        }
        t += rng.random_range(0.06..0.35);
    }

    // noise bursts
    let bursts = (secs * rng.random_range(1.0..5.0)).ceil() as usize;
    for _ in 0..bursts {
        let start = rng.random_range(0..len.max(1));
        let dur = (rng.random_range(0.01..0.08) * fs) as usize;
        let amp = db_to_amp(rng.random_range(-30.0..-8.0));
        let end = len.min(start + dur);
        let n = (end - start).max(1) as f64;
        for (i, s) in out[start..end].iter_mut().enumerate() {
            // raised-cosine window
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos();
            let g: f64 = StandardNormal.sample(&mut rng);
            *s += amp * w * g;
        }
    }

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let target = rng.random_range(0.35..0.95);
        out.iter_mut().for_each(|s| *s *= target / peak);
    }
    AudioClip::new(out, sample_rate_hz).expect("finite synthetic samples")
}

/// `count` clips seeded `base_seed, base_seed + 1, ...`.
pub fn desk_corpus(count: usize, base_seed: u64, secs: f64, sample_rate_hz: u32) -> Vec<AudioClip> {
    (0..count as u64)
        .map(|i| desk_clip(base_seed + i, secs, sample_rate_hz))
        .collect()
}
