//! Distance roll-off, constant-power panning and block mixing.

use super::env::{SpeakerState, UtteranceDrawer};
use crate::Result;

/// Linear roll-off: `max(0, 1 - d / d_max)`.
pub fn attenuation(d: f64, d_max: f64) -> f64 {
    if d_max <= 0.0 {
        return 0.0;
    }
    (1.0 - d / d_max).clamp(0.0, 1.0)
}

/// Constant-power stereo gains for a listener facing +y.
///
/// The azimuth is `atan2(dx, dy)` of the source offset, the pan position is
/// its sine, and `g_left² + g_right² = 1`.
pub fn pan_gains(agent: [f64; 2], source: [f64; 2]) -> (f64, f64) {
    let dx = source[0] - agent[0];
    let dy = source[1] - agent[1];
    let p = if dx == 0.0 && dy == 0.0 { 0.0 } else { dx.atan2(dy).sin() };
    (((1.0 - p) / 2.0).sqrt(), ((1.0 + p) / 2.0).sqrt())
}

pub fn soft_clip(x: f64) -> f32 {
    x.tanh() as f32
}

/// Mixes `n` samples of every speaker into (left, right) before soft
/// clipping. Gains are fixed at the block-start geometry; playheads advance
/// and wrap to a freshly drawn utterance at clip end.
pub fn mix_block(
    agent: [f64; 2],
    speakers: &mut [SpeakerState],
    d_max: f64,
    n: usize,
    drawer: &mut UtteranceDrawer,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    for sp in speakers.iter_mut() {
        let d = (sp.position[0] - agent[0]).hypot(sp.position[1] - agent[1]);
        let gain = attenuation(d, d_max);
        let (pl, pr) = pan_gains(agent, sp.position);
        let (gl, gr) = (gain * pl, gain * pr);
        let mut i = 0;
        while i < n {
            let samples = sp.clip.samples();
            let take = (samples.len() - sp.playhead).min(n - i);
            for (k, &s) in samples[sp.playhead..sp.playhead + take].iter().enumerate() {
                let s = f64::from(s);
                left[i + k] += gl * s;
                right[i + k] += gr * s;
            }
            i += take;
            sp.playhead += take;
            if sp.playhead == samples.len() {
                sp.clip = drawer.draw(&sp.pool)?;
                sp.playhead = 0;
            }
        }
    }
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn attenuation_endpoints() {
        assert_eq!(attenuation(0.0, 15.0), 1.0);
        assert_eq!(attenuation(15.0, 15.0), 0.0);
        assert_eq!(attenuation(7.5, 15.0), 0.5);
        assert_eq!(attenuation(40.0, 15.0), 0.0);
    }

    #[test]
    fn pan_reference_geometries() {
        let (l, r) = pan_gains([0.0, 0.0], [0.0, 5.0]);
        assert!((l - FRAC_1_SQRT_2).abs() < 1e-12 && (r - FRAC_1_SQRT_2).abs() < 1e-12);
        let (l, r) = pan_gains([0.0, 0.0], [5.0, 0.0]);
        assert!(l.abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
        let (l, r) = pan_gains([0.0, 0.0], [-3.0, 3.0]);
        assert!((l - 0.923_88).abs() < 1e-5 && (r - 0.382_68).abs() < 1e-5);
        let (l, r) = pan_gains([1.0, 1.0], [1.0, 1.0]);
        assert_eq!((l, r), pan_gains([0.0, 0.0], [0.0, 1.0]));
    }

    proptest! {
        #[test]
        fn pan_is_constant_power_and_mirror_symmetric(
            ax in -10.0f64..10.0, ay in -10.0f64..10.0, dx in -10.0f64..10.0, dy in -10.0f64..10.0,
        ) {
            let (l, r) = pan_gains([ax, ay], [ax + dx, ay + dy]);
            prop_assert!((l * l + r * r - 1.0).abs() <= 1e-9);
            let (ml, mr) = pan_gains([0.0, 0.0], [-dx, dy]);
            let (ol, or) = pan_gains([0.0, 0.0], [dx, dy]);
            prop_assert_eq!((ml, mr), (or, ol));
        }

        #[test]
        fn attenuation_is_monotone(a in 0.0f64..30.0, b in 0.0f64..30.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(attenuation(lo, 15.0) >= attenuation(hi, 15.0));
        }
    }
}
