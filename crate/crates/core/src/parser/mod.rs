//! Surface syntax: `.tc` declaration files, `.car` carrier files and goals.

mod carrier;
mod decl;
mod lexer;
mod print;

pub use carrier::parse_carrier;
pub use decl::{parse_file, parse_goal, parse_term, Decl, FORMAT_VERSION};
pub use lexer::{ParseError, SourceSpan};
pub use print::print_file;
