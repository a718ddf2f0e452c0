pub mod coarea;
pub mod convexity;
pub mod cube;
pub mod profile;
pub mod validate;

use crate::{CliError, Command};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Profile(args) => profile::run(args),
        Command::Coarea(args) => coarea::run(args),
        Command::Cube(args) => cube::run(args),
        Command::Convexity(args) => convexity::run(args),
        Command::Validate(args) => validate::run(args),
    }
}
