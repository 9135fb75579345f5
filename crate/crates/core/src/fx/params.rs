use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of graphic-EQ bands.
pub const EQ_BANDS: usize = 15;
/// Scalar effect settings: 15 EQ gains, drive, bit depth, pitch, delay, 3 reverb.
pub const SCALAR_PARAMS: usize = 22;
/// Activation flags for distortion, bitcrush, pitch shift and delay.
pub const ACTIVATION_FLAGS: usize = 4;
/// Dimension of the search space.
pub const PARAM_COUNT: usize = SCALAR_PARAMS + ACTIVATION_FLAGS;

/// Version tag written into serialized parameter files.
pub const PARAMS_SCHEMA_VERSION: u32 = 1;

/// Activation coordinates at or above this value switch the effect on.
pub const ACTIVATION_THRESHOLD: f64 = 0.5;

pub const EQ_GAIN_RANGE_DB: (f64, f64) = (-12.0, 12.0);
pub const DRIVE_RANGE_DB: (f64, f64) = (0.0, 30.0);
pub const BIT_DEPTH_RANGE: (f64, f64) = (4.0, 16.0);
pub const PITCH_RANGE_SEMITONES: (f64, f64) = (-12.0, 12.0);
pub const DELAY_RANGE_SECONDS: (f64, f64) = (0.05, 1.0);
pub const UNIT_RANGE: (f64, f64) = (0.0, 1.0);

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{field} = {value} is outside [{lo}, {hi}]")]
    OutOfRange { field: String, value: f64, lo: f64, hi: f64 },
    #[error("unit coordinate {index} = {value} is outside [0, 1]")]
    BadCoordinate { index: usize, value: f64 },
    #[error("expected {expected} coordinates, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("unsupported params schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("unknown stage '{0}' (expected one of equalizer, distortion, bitcrush, pitch_shift, delay, reverb)")]
    UnknownStage(String),
    #[error("stage list is empty")]
    NoStages,
}

/// A point in the normalized search space `[0, 1]^26`.
///
/// Layout: 15 EQ gains, distortion drive, bitcrush depth, pitch shift,
/// delay time, reverb room size, damping, wet level, then the activation
/// coordinates for distortion, bitcrush, pitch shift and delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector([f64; PARAM_COUNT]);

impl UnitVector {
    pub fn new(coords: [f64; PARAM_COUNT]) -> Result<Self, ParamError> {
        if let Some((index, &value)) = coords
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ParamError::BadCoordinate { index, value });
        }
        Ok(Self(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self, ParamError> {
        let arr: [f64; PARAM_COUNT] = coords.try_into().map_err(|_| ParamError::WrongLength {
            expected: PARAM_COUNT,
            actual: coords.len(),
        })?;
        Self::new(arr)
    }

    pub fn splat(v: f64) -> Result<Self, ParamError> {
        Self::new([v; PARAM_COUNT])
    }

    pub fn coords(&self) -> &[f64; PARAM_COUNT] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = ParamError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_slice(&v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Self {
        u.0.to_vec()
    }
}

/// Concrete settings for the six-effect chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxParams {
    pub eq_gain_db: [f64; EQ_BANDS],
    pub distortion_drive_db: f64,
    pub bitcrush_bit_depth: f64,
    pub pitch_shift_semitones: f64,
    pub delay_seconds: f64,
    pub reverb_room_size: f64,
    pub reverb_damping: f64,
    pub reverb_wet_level: f64,
    pub enable_distortion: bool,
    pub enable_bitcrush: bool,
    pub enable_pitch_shift: bool,
    pub enable_delay: bool,
}

fn lerp((lo, hi): (f64, f64), u: f64) -> f64 {
    lo + u * (hi - lo)
}

fn unlerp((lo, hi): (f64, f64), v: f64) -> f64 {
    (v - lo) / (hi - lo)
}

impl FxParams {
    /// The do-nothing configuration: flat EQ, dry reverb, optional effects off.
    pub fn neutral() -> Self {
        Self {
            eq_gain_db: [0.0; EQ_BANDS],
            distortion_drive_db: 0.0,
            bitcrush_bit_depth: BIT_DEPTH_RANGE.1,
            pitch_shift_semitones: 0.0,
            delay_seconds: DELAY_RANGE_SECONDS.0,
            reverb_room_size: 0.5,
            reverb_damping: 0.5,
            reverb_wet_level: 0.0,
            enable_distortion: false,
            enable_bitcrush: false,
            enable_pitch_shift: false,
            enable_delay: false,
        }
    }

    /// Maps a unit vector onto effect settings: scalars affinely, activation
    /// coordinates by the inclusive 0.5 threshold.
    pub fn decode(u: &UnitVector) -> Self {
        let c = u.coords();
        let mut eq_gain_db = [0.0; EQ_BANDS];
        for (g, &x) in eq_gain_db.iter_mut().zip(&c[..EQ_BANDS]) {
            *g = lerp(EQ_GAIN_RANGE_DB, x);
        }
        let on = |x: f64| x >= ACTIVATION_THRESHOLD;
        Self {
            eq_gain_db,
            distortion_drive_db: lerp(DRIVE_RANGE_DB, c[15]),
            bitcrush_bit_depth: lerp(BIT_DEPTH_RANGE, c[16]),
            pitch_shift_semitones: lerp(PITCH_RANGE_SEMITONES, c[17]),
            delay_seconds: lerp(DELAY_RANGE_SECONDS, c[18]),
            reverb_room_size: lerp(UNIT_RANGE, c[19]),
            reverb_damping: lerp(UNIT_RANGE, c[20]),
            reverb_wet_level: lerp(UNIT_RANGE, c[21]),
            enable_distortion: on(c[22]),
            enable_bitcrush: on(c[23]),
            enable_pitch_shift: on(c[24]),
            enable_delay: on(c[25]),
        }
    }

    /// Inverse of [`FxParams::decode`]; flags encode as 0.0 / 1.0.
    pub fn encode(&self) -> UnitVector {
        let mut c = [0.0; PARAM_COUNT];
        for (x, &g) in c.iter_mut().zip(&self.eq_gain_db) {
            *x = unlerp(EQ_GAIN_RANGE_DB, g);
        }
        c[15] = unlerp(DRIVE_RANGE_DB, self.distortion_drive_db);
        c[16] = unlerp(BIT_DEPTH_RANGE, self.bitcrush_bit_depth);
        c[17] = unlerp(PITCH_RANGE_SEMITONES, self.pitch_shift_semitones);
        c[18] = unlerp(DELAY_RANGE_SECONDS, self.delay_seconds);
        c[19] = unlerp(UNIT_RANGE, self.reverb_room_size);
        c[20] = unlerp(UNIT_RANGE, self.reverb_damping);
        c[21] = unlerp(UNIT_RANGE, self.reverb_wet_level);
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        c[22] = flag(self.enable_distortion);
        c[23] = flag(self.enable_bitcrush);
        c[24] = flag(self.enable_pitch_shift);
        c[25] = flag(self.enable_delay);
        for x in &mut c {
            *x = x.clamp(0.0, 1.0);
        }
        UnitVector(c)
    }

    /// Checks every scalar against its range; the error names the first
    /// offending field.
    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |field: String, value: f64, (lo, hi): (f64, f64)| {
            if value.is_finite() && (lo..=hi).contains(&value) {
                Ok(())
            } else {
                Err(ParamError::OutOfRange { field, value, lo, hi })
            }
        };
        for (i, &g) in self.eq_gain_db.iter().enumerate() {
            check(format!("eq_gain_db[{i}]"), g, EQ_GAIN_RANGE_DB)?;
        }
        check("distortion_drive_db".into(), self.distortion_drive_db, DRIVE_RANGE_DB)?;
        check("bitcrush_bit_depth".into(), self.bitcrush_bit_depth, BIT_DEPTH_RANGE)?;
        check("pitch_shift_semitones".into(), self.pitch_shift_semitones, PITCH_RANGE_SEMITONES)?;
        check("delay_seconds".into(), self.delay_seconds, DELAY_RANGE_SECONDS)?;
        check("reverb_room_size".into(), self.reverb_room_size, UNIT_RANGE)?;
        check("reverb_damping".into(), self.reverb_damping, UNIT_RANGE)?;
        check("reverb_wet_level".into(), self.reverb_wet_level, UNIT_RANGE)
    }

    /// Serializes to the parameter-file JSON (flat object plus
    /// `schema_version`).
    pub fn to_json(&self) -> String {
        let file = ParamsFile { schema_version: PARAMS_SCHEMA_VERSION, params: self.clone() };
        serde_json::to_string_pretty(&file).expect("params serialize")
    }

    /// Parses and validates a parameter file.
    pub fn from_json(text: &str) -> Result<Self, ParamsFileError> {
        let file: ParamsFile = serde_json::from_str(text)?;
        if file.schema_version != PARAMS_SCHEMA_VERSION {
            return Err(ParamError::SchemaVersion {
                found: file.schema_version,
                expected: PARAMS_SCHEMA_VERSION,
            }
            .into());
        }
        file.params.validate()?;
        Ok(file.params)
    }
}

#[derive(Debug, Error)]
pub enum ParamsFileError {
    #[error("malformed params file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ParamError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    schema_version: u32,
    #[serde(flatten)]
    params: FxParams,
}

/// One processing stage of the chain, in chain order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Equalizer,
    Distortion,
    Bitcrush,
    PitchShift,
    Delay,
    Reverb,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Equalizer,
        Stage::Distortion,
        Stage::Bitcrush,
        Stage::PitchShift,
        Stage::Delay,
        Stage::Reverb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Equalizer => "equalizer",
            Stage::Distortion => "distortion",
            Stage::Bitcrush => "bitcrush",
            Stage::PitchShift => "pitch_shift",
            Stage::Delay => "delay",
            Stage::Reverb => "reverb",
        }
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        match norm.as_str() {
            "equalizer" | "eq" => Ok(Stage::Equalizer),
            "distortion" => Ok(Stage::Distortion),
            "bitcrush" | "bit_crush" => Ok(Stage::Bitcrush),
            "pitch_shift" | "pitchshift" | "pitch" => Ok(Stage::PitchShift),
            "delay" => Ok(Stage::Delay),
            "reverb" => Ok(Stage::Reverb),
            _ => Err(ParamError::UnknownStage(s.to_string())),
        }
    }
}

/// Subset of the six stages that a chain is allowed to run.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StageSet(u8);

impl StageSet {
    pub fn all() -> Self {
        Self(0b11_1111)
    }

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn with(mut self, stage: Stage) -> Self {
        self.0 |= stage.bit();
        self
    }

    pub fn contains(self, stage: Stage) -> bool {
        self.0 & stage.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Stage> {
        Stage::ALL.into_iter().filter(move |s| self.contains(*s))
    }

    /// Parses a comma-separated list such as `equalizer,reverb`.
    pub fn parse_list(list: &str) -> Result<Self, ParamError> {
        let set = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .try_fold(Self::empty(), |acc, s: Result<Stage, _>| s.map(|s| acc.with(s)))?;
        if set.is_empty() {
            return Err(ParamError::NoStages);
        }
        Ok(set)
    }

    pub fn names(self) -> Vec<&'static str> {
        self.iter().map(Stage::name).collect()
    }
}

impl Default for StageSet {
    fn default() -> Self {
        Self::all()
    }
}

impl FromIterator<Stage> for StageSet {
    fn from_iter<I: IntoIterator<Item = Stage>>(iter: I) -> Self {
        iter.into_iter().fold(Self::empty(), Self::with)
    }
}

impl fmt::Debug for StageSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for StageSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join(","))
    }
}
