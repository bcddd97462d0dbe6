//! Bus topic names used by the standard wiring.

pub const SENSOR_DATA: &str = "sensor_data";
pub const STATUS: &str = "status";
pub const EVENT: &str = "event";
pub const ENERGY_STATUS: &str = "energy_status";
pub const UNCERTAINTY_NOISE: &str = "uncertainty_noise";
/// Enactor -> effector.
pub const ADAPTATION_COMMAND: &str = "adaptation_command";
/// Effector -> managed components.
pub const ACTUATION: &str = "actuation";
pub const STRATEGY: &str = "strategy";
pub const EXCEPTION: &str = "exception";

pub const ALL: [&str; 9] = [
    SENSOR_DATA,
    STATUS,
    EVENT,
    ENERGY_STATUS,
    UNCERTAINTY_NOISE,
    ADAPTATION_COMMAND,
    ACTUATION,
    STRATEGY,
    EXCEPTION,
];
