//! Library surface of the `cscf` command-line tool: the problem-file
//! loader, the versioned output formats, desk analyses over front files and
//! the subcommand implementations. The binary in `main.rs` is a thin clap
//! wrapper over [`commands`].

pub mod analysis;
pub mod commands;
pub mod front_io;
pub mod problem_file;
