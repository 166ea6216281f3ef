use super::{content_lines, ParseError};
use crate::vfg::Context;

/// One context per line, `factor=value` pairs separated by spaces.
pub fn parse_contexts(text: &str) -> Result<Vec<Context>, ParseError> {
    content_lines(text)
        .map(|(n, line)| line.parse::<Context>().map_err(|e| ParseError::new(n, e)))
        .collect()
}

pub fn write_contexts(contexts: &[Context]) -> String {
    contexts.iter().map(|c| format!("{c}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Value;

    #[test]
    fn round_trip() {
        let cs = vec![
            Context::new().with("blinking", Value::Bool(true)),
            Context::new().with("blinking", Value::Bool(false)).with("gap", Value::Real(12.5)),
        ];
        assert_eq!(parse_contexts(&write_contexts(&cs)).unwrap(), cs);
    }

    #[test]
    fn reports_line() {
        let err = parse_contexts("# header\nblinking=true\nblinking\n").unwrap_err();
        assert_eq!(err.line, 3);
    }
}
