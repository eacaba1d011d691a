use std::io::IsTerminal;

/// ANSI styling for terminal output; off when stdout is not a terminal or
/// `LIGFORGE_COLOR=0`.
#[derive(Clone, Copy)]
pub struct Style {
    on: bool,
}

impl Style {
    pub fn detect() -> Self {
        let disabled = std::env::var("LIGFORGE_COLOR").is_ok_and(|v| v == "0");
        Style {
            on: !disabled && std::io::stdout().is_terminal(),
        }
    }

    fn paint(&self, code: &str, s: &str) -> String {
        if self.on {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    pub fn heading(&self, s: &str) -> String {
        self.paint("1", s)
    }

    pub fn good(&self, s: &str) -> String {
        self.paint("32", s)
    }

    pub fn bad(&self, s: &str) -> String {
        self.paint("31", s)
    }
}
