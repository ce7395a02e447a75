//! Built-in systems, compiled from the files under `systems/`.
//!
//! These are the worked examples the test suite and the CLI demos lean on;
//! loading one gives the same [`SystemSpec`] a user file would.

use crate::spec::{SpecError, SystemSpec};

pub const OSCILLATOR: &str = include_str!("../systems/oscillator.toml");
pub const TWO_OSCILLATORS: &str = include_str!("../systems/two_oscillators.toml");
pub const FREE_PARTICLE: &str = include_str!("../systems/free_particle.toml");
pub const CYLINDER: &str = include_str!("../systems/cylinder.toml");
pub const CENTRAL_FIELD: &str = include_str!("../systems/central_field.toml");

pub const NAMES: [&str; 5] = [
    "oscillator",
    "two_oscillators",
    "free_particle",
    "cylinder",
    "central_field",
];

pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "oscillator" => Some(OSCILLATOR),
        "two_oscillators" => Some(TWO_OSCILLATORS),
        "free_particle" => Some(FREE_PARTICLE),
        "cylinder" => Some(CYLINDER),
        "central_field" => Some(CENTRAL_FIELD),
        _ => None,
    }
}

pub fn load(name: &str) -> Option<Result<SystemSpec, SpecError>> {
    source(name).map(SystemSpec::parse)
}

fn compiled(source: &str) -> SystemSpec {
    SystemSpec::parse(source).expect("catalog file must compile")
}

pub fn oscillator() -> SystemSpec {
    compiled(OSCILLATOR)
}

pub fn two_oscillators() -> SystemSpec {
    compiled(TWO_OSCILLATORS)
}

pub fn free_particle() -> SystemSpec {
    compiled(FREE_PARTICLE)
}

pub fn cylinder() -> SystemSpec {
    compiled(CYLINDER)
}

pub fn central_field() -> SystemSpec {
    compiled(CENTRAL_FIELD)
}
