use fxsearcher::audio::AudioBuffer;
use fxsearcher::fx::*;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = FxParams> {
    (
        prop::array::uniform15(-12.0f64..=12.0),
        (0.0f64..=30.0, 4.0f64..=16.0, -12.0f64..=12.0, 0.05f64..=1.0),
        (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0),
        prop::array::uniform4(any::<bool>()),
    )
        .prop_map(|(eq, (drive, depth, pitch, delay), (room, damp, wet), flags)| FxParams {
            eq_gain_db: eq,
            distortion_drive_db: drive,
            bitcrush_bit_depth: depth,
            pitch_shift_semitones: pitch,
            delay_seconds: delay,
            reverb_room_size: room,
            reverb_damping: damp,
            reverb_wet_level: wet,
            enable_distortion: flags[0],
            enable_bitcrush: flags[1],
            enable_pitch_shift: flags[2],
            enable_delay: flags[3],
        })
}

fn noise(seed: u64, channels: usize, len: usize, rate: u32) -> AudioBuffer<f64> {
    // xorshift keeps the buffers independent of any RNG crate version
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let chans = (0..channels).map(|_| (0..len).map(|_| 0.5 * next()).collect()).collect();
    AudioBuffer::new(chans, rate).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_round_trip(p in params()) {
        let back = FxParams::decode(&p.encode());
        for (a, b) in back.eq_gain_db.iter().zip(&p.eq_gain_db) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((back.distortion_drive_db - p.distortion_drive_db).abs() < 1e-12);
        prop_assert!((back.bitcrush_bit_depth - p.bitcrush_bit_depth).abs() < 1e-12);
        prop_assert!((back.pitch_shift_semitones - p.pitch_shift_semitones).abs() < 1e-12);
        prop_assert!((back.delay_seconds - p.delay_seconds).abs() < 1e-12);
        prop_assert!((back.reverb_room_size - p.reverb_room_size).abs() < 1e-12);
        prop_assert!((back.reverb_damping - p.reverb_damping).abs() < 1e-12);
        prop_assert!((back.reverb_wet_level - p.reverb_wet_level).abs() < 1e-12);
        prop_assert_eq!(
            [back.enable_distortion, back.enable_bitcrush, back.enable_pitch_shift, back.enable_delay],
            [p.enable_distortion, p.enable_bitcrush, p.enable_pitch_shift, p.enable_delay]
        );
    }

    #[test]
    fn params_file_round_trip(p in params()) {
        prop_assert_eq!(FxParams::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn decoded_params_are_valid(coords in prop::array::uniform26(0.0f64..=1.0)) {
        let p = FxParams::decode(&UnitVector::new(coords).unwrap());
        prop_assert!(p.validate().is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn chain_is_the_fixed_stage_composition(p in params(), seed in any::<u64>()) {
        let x = noise(seed, 2, 4096, 22_050);
        let mut manual = apply_equalizer(&x, &p.eq_gain_db);
        if p.enable_distortion {
            manual = apply_distortion(&manual, p.distortion_drive_db);
        }
        if p.enable_bitcrush {
            manual = apply_bitcrush(&manual, p.bitcrush_bit_depth);
        }
        if p.enable_pitch_shift {
            manual = apply_pitch_shift(&manual, p.pitch_shift_semitones);
        }
        if p.enable_delay {
            manual = apply_delay(&manual, p.delay_seconds);
        }
        manual = apply_reverb(&manual, p.reverb_room_size, p.reverb_damping, p.reverb_wet_level);
        prop_assert_eq!(apply_chain(&x, &p, StageSet::all()), manual);
    }

    #[test]
    fn disabled_effect_parameters_have_no_effect(p in params(), alt in params(), seed in any::<u64>()) {
        let x = noise(seed, 1, 4096, 22_050);
        let mut off = p.clone();
        off.enable_distortion = false;
        off.enable_bitcrush = false;
        off.enable_pitch_shift = false;
        off.enable_delay = false;
        let mut varied = off.clone();
        varied.distortion_drive_db = alt.distortion_drive_db;
        varied.bitcrush_bit_depth = alt.bitcrush_bit_depth;
        varied.pitch_shift_semitones = alt.pitch_shift_semitones;
        varied.delay_seconds = alt.delay_seconds;
        prop_assert_eq!(apply_chain(&x, &off, StageSet::all()), apply_chain(&x, &varied, StageSet::all()));
    }

    #[test]
    fn restricted_chain_ignores_excluded_stages(p in params(), alt in params(), seed in any::<u64>()) {
        let x = noise(seed, 1, 4096, 22_050);
        let stages = StageSet::parse_list("equalizer,reverb").unwrap();
        let mut varied = alt.clone();
        varied.eq_gain_db = p.eq_gain_db;
        varied.reverb_room_size = p.reverb_room_size;
        varied.reverb_damping = p.reverb_damping;
        varied.reverb_wet_level = p.reverb_wet_level;
        prop_assert_eq!(apply_chain(&x, &p, stages), apply_chain(&x, &varied, stages));
    }

    #[test]
    fn chain_output_is_finite(p in params(), seed in any::<u64>()) {
        let x = noise(seed, 2, 11_025, 22_050);
        let y = apply_chain(&x, &p, StageSet::all());
        prop_assert!(y.channels().iter().flatten().all(|s| s.is_finite()));
        prop_assert_eq!(y.num_channels(), 2);
    }
}
