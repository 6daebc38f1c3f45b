//! Batch front-end for the anisotropy analysis chain.
//!
//! The library half holds everything the `anisar` binary does —
//! configuration, the end-to-end pipeline, and the extraction commands
//! that read a finished run directory — so integration tests can drive
//! the exact code paths the binary runs without spawning processes.
//!
//! Exit-code contract (shared by every subcommand):
//!
//! * `0` — success
//! * `2` — configuration or argument error (bad flag values, malformed
//!   config file, parameters outside their domain)
//! * `3` — input error (missing/unreadable/corrupt files, invalid data)
//! * `4` — numerical degeneracy that prevents producing any result

pub mod config;
pub mod pipeline;
pub mod quadrant;
pub mod scatter;
pub mod transect;

use anisar_core::CoreError;

/// Maps a library error onto the process exit code documented above.
pub fn exit_code(err: &CoreError) -> i32 {
    match err {
        CoreError::Argument(_) => 2,
        CoreError::Degenerate(_) => 4,
        CoreError::Format(_)
        | CoreError::Corrupt(_)
        | CoreError::Validation(_)
        | CoreError::Io(_)
        | CoreError::Json(_) => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_documented_contract() {
        assert_eq!(exit_code(&CoreError::Argument("x".into())), 2);
        assert_eq!(exit_code(&CoreError::Degenerate("x".into())), 4);
        assert_eq!(exit_code(&CoreError::Format("x".into())), 3);
        assert_eq!(exit_code(&CoreError::Corrupt("x".into())), 3);
        assert_eq!(exit_code(&CoreError::Validation("x".into())), 3);
        assert_eq!(
            exit_code(&CoreError::Io(std::io::Error::other("x"))),
            3
        );
    }
}
