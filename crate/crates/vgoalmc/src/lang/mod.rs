//! Front end for the `.vg` specification language: syntax tree, parser,
//! canonical printer, validation and grounding.

pub mod ast;
pub mod ground;
pub mod parser;
pub mod printer;
pub mod validate;

pub use ast::*;
pub use ground::{ground_action_def, ground_event_rule, ground_rule, ground_send_rule, GroundError};
pub use parser::{parse_spec, ParseError};
pub use printer::{parse_prob, print_prob, print_spec};
pub use validate::{has_errors, validate, Diagnostic, Severity};
