use super::config::Scenario;
use crate::error::{Error, Result};

const BUNDLED: &[(&str, &str)] = &[
    ("remark41_alpha2", include_str!("bundled/remark41_alpha2.toml")),
    ("heat_baseline", include_str!("bundled/heat_baseline.toml")),
    ("singular_alpha15", include_str!("bundled/singular_alpha15.toml")),
    ("composite_barrier", include_str!("bundled/composite_barrier.toml")),
    ("negative_c_rescaled", include_str!("bundled/negative_c_rescaled.toml")),
    ("random_bony", include_str!("bundled/random_bony.toml")),
    ("anisotropic_mixed", include_str!("bundled/anisotropic_mixed.toml")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// A scenario shipped with the library.
pub fn bundled(name: &str) -> Result<Scenario> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            Error::config(
                "scenario",
                format!("no bundled scenario `{name}`; known: {}", bundled_names().join(", ")),
            )
        })?;
    Scenario::from_toml_str(text)
}
