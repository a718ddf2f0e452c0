//! Flag/file resolution. A command's inputs come from its flags, an
//! optional TOML file, and built-in defaults, in that order of precedence;
//! the result is one serializable config that fully determines the run.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::CliError;

/// Inclusive linear grid "a:b:steps" with steps >= 2, or a single value
/// "a:a:1".
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("grid '{text}' must look like a:b:steps with a < b"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !a.is_finite() || !b.is_finite() || steps == 0 {
        return Err(bad());
    }
    if steps == 1 {
        if a != b {
            return Err(bad());
        }
        return Ok(vec![a]);
    }
    if !(a < b) {
        return Err(bad());
    }
    Ok((0..steps)
        .map(|i| a + (b - a) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Load the optional TOML side of a command's configuration.
pub fn load_file<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))
}

pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::parse_grid;

    #[test]
    fn grids_parse_inclusively() {
        let g = parse_grid("0:4:5").unwrap();
        assert_eq!(g, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse_grid("1.5:1.5:1").unwrap(), vec![1.5]);
    }

    #[test]
    fn malformed_grids_are_rejected() {
        for text in ["", "1:2", "2:1:5", "a:b:c", "0:4:0", "1:1:3"] {
            assert!(parse_grid(text).is_err(), "accepted '{text}'");
        }
    }
}
