//! Line-level lexical scan of Python-like code: string literals, comments
//! and bracket nesting. Enough to find statement boundaries and flag
//! unbalanced brackets or quotes; it is not a parser.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxIssue {
    Unclosed { open: char, line: usize },
    Unexpected { close: char, line: usize },
    Mismatched { open: char, close: char, line: usize },
    UnterminatedString { line: usize },
}

impl fmt::Display for SyntaxIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // lines are reported 1-based
        match self {
            SyntaxIssue::Unclosed { open, line } => {
                write!(f, "unclosed `{open}` opened on line {}", line + 1)
            }
            SyntaxIssue::Unexpected { close, line } => {
                write!(f, "unexpected `{close}` on line {}", line + 1)
            }
            SyntaxIssue::Mismatched { open, close, line } => {
                write!(f, "`{close}` on line {} does not match `{open}`", line + 1)
            }
            SyntaxIssue::UnterminatedString { line } => {
                write!(f, "unterminated string literal starting on line {}", line + 1)
            }
        }
    }
}

/// A character outside strings and comments.
#[derive(Debug, Clone, Copy)]
pub struct CodeChar {
    pub offset: usize,
    pub ch: char,
    /// Bracket depth before this character.
    pub depth: usize,
    pub line: usize,
}

#[derive(Debug, Default)]
pub struct Scan {
    pub code: Vec<CodeChar>,
    /// Per line: true if the line starts a new logical statement.
    pub statement_starts: Vec<bool>,
    pub issue: Option<SyntaxIssue>,
}

fn closer(open: char) -> char {
    match open {
        '(' => ')',
        '[' => ']',
        _ => '}',
    }
}

pub fn scan(text: &str) -> Scan {
    let mut out = Scan::default();
    let mut stack: Vec<(char, usize)> = Vec::new();
    // (quote char, triple, start line)
    let mut string: Option<(char, bool, usize)> = None;
    let mut in_comment = false;
    let mut continued = false;
    let mut line = 0usize;
    out.statement_starts.push(true);

    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (offset, ch) = chars[i];
        if ch == '\n' {
            in_comment = false;
            if let Some((_, false, start)) = string {
                out.issue.get_or_insert(SyntaxIssue::UnterminatedString { line: start });
                string = None;
            }
            line += 1;
            out.statement_starts
                .push(string.is_none() && stack.is_empty() && !continued);
            continued = false;
            i += 1;
            continue;
        }
        if in_comment {
            i += 1;
            continue;
        }
        if let Some((quote, triple, _)) = string {
            if ch == '\\' {
                // skip the escaped char, but keep line accounting for `\<newline>`
                if chars.get(i + 1).map(|c| c.1) == Some('\n') {
                    i += 1;
                    continue;
                }
                i += 2;
                continue;
            }
            if ch == quote {
                if !triple {
                    string = None;
                } else if chars.get(i + 1).map(|c| c.1) == Some(quote)
                    && chars.get(i + 2).map(|c| c.1) == Some(quote)
                {
                    string = None;
                    i += 3;
                    continue;
                }
            }
            i += 1;
            continue;
        }
        continued = false;
        match ch {
            '#' => in_comment = true,
            '\\' if chars.get(i + 1).map(|c| c.1) == Some('\n') => continued = true,
            '"' | '\'' => {
                let triple = chars.get(i + 1).map(|c| c.1) == Some(ch)
                    && chars.get(i + 2).map(|c| c.1) == Some(ch);
                string = Some((ch, triple, line));
                i += if triple { 3 } else { 1 };
                continue;
            }
            _ => {
                out.code.push(CodeChar {
                    offset,
                    ch,
                    depth: stack.len(),
                    line,
                });
                match ch {
                    '(' | '[' | '{' => stack.push((ch, line)),
                    ')' | ']' | '}' => match stack.pop() {
                        None => {
                            out.issue.get_or_insert(SyntaxIssue::Unexpected { close: ch, line });
                        }
                        Some((open, _)) if closer(open) != ch => {
                            out.issue
                                .get_or_insert(SyntaxIssue::Mismatched { open, close: ch, line });
                        }
                        Some(_) => {}
                    },
                    _ => {}
                }
            }
        }
        i += 1;
    }
    if let Some((_, _, start)) = string {
        out.issue.get_or_insert(SyntaxIssue::UnterminatedString { line: start });
    }
    if let Some(&(open, line)) = stack.first() {
        out.issue.get_or_insert(SyntaxIssue::Unclosed { open, line });
    }
    out
}

/// First lexical problem in `text`, if any.
pub fn check_balance(text: &str) -> Option<SyntaxIssue> {
    scan(text).issue
}
