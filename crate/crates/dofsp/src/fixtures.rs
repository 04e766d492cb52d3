//! Worked examples bundled with the binary.

pub const EXAMPLE1: &str = include_str!("../fixtures/example1.json");
pub const EXAMPLE2: &str = include_str!("../fixtures/example2.json");
pub const EXAMPLE3: &str = include_str!("../fixtures/example3.json");

pub const ALL: [(&str, &str); 3] = [("example1", EXAMPLE1), ("example2", EXAMPLE2), ("example3", EXAMPLE3)];

/// Fixture text by name, with or without the `.json` suffix.
pub fn get(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".json").unwrap_or(name);
    ALL.iter().find(|(n, _)| *n == stem).map(|(_, t)| *t)
}
