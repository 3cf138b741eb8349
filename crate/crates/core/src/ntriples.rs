//! Line-oriented N-Triples reader.
//!
//! Each statement line is parsed independently, which keeps memory flat on
//! web-scale dumps and lets lenient mode skip a broken line without losing
//! the rest of the file.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::error::ParseError;

/// A node in subject or object position that is not a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Resource {
    Iri(String),
    /// Blank node label without the `_:` prefix.
    Blank(String),
}

impl Resource {
    /// Key used for interning. Blank nodes keep their `_:` prefix, which can
    /// never begin an absolute IRI because schemes start with a letter.
    pub fn key(&self) -> String {
        match self {
            Resource::Iri(iri) => iri.clone(),
            Resource::Blank(label) => format!("_:{label}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Option<String>,
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Object {
    Resource(Resource),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Resource,
    pub predicate: String,
    pub object: Object,
}

impl Triple {
    pub fn new(subject: Resource, predicate: impl Into<String>, object: Object) -> Self {
        Triple { subject, predicate: predicate.into(), object }
    }

    /// Shorthand for an all-IRI statement.
    pub fn iris(s: &str, p: &str, o: &str) -> Self {
        Triple::new(
            Resource::Iri(s.to_owned()),
            p,
            Object::Resource(Resource::Iri(o.to_owned())),
        )
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Iri(iri) => write!(f, "<{}>", escape_iri(iri)),
            Resource::Blank(label) => write!(f, "_:{label}"),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", escape_literal(&self.lexical))?;
        if let Some(lang) = &self.language {
            write!(f, "@{lang}")
        } else if let Some(dt) = &self.datatype {
            write!(f, "^^<{}>", escape_iri(dt))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object::Resource(r) => r.fmt(f),
            Object::Literal(l) => l.fmt(f),
        }
    }
}

/// Canonical N-Triples serialization, terminated by ` .` without a newline.
impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} <{}> {} .",
            self.subject,
            escape_iri(&self.predicate),
            self.object
        )
    }
}

/// Escapes the characters that may not appear verbatim inside an IRIREF.
/// The result contains no whitespace, so it is also safe as a corpus token.
pub fn escape_iri(iri: &str) -> String {
    let mut out = String::with_capacity(iri.len());
    for c in iri.chars() {
        match c {
            '\u{0}'..='\u{20}' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                out.push_str(&format!("\\u{:04X}", c as u32))
            }
            _ => out.push(c),
        }
    }
    out
}

pub fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

/// Whether malformed lines abort the parse or are skipped and counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    Strict,
    #[default]
    Lenient,
}

/// Parses a single line. Returns `Ok(None)` for blank and comment lines.
pub fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut cur = Cursor { s: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = cur.resource()?;
    cur.skip_ws();
    let predicate = cur.iri()?;
    cur.skip_ws();
    let object = match cur.peek() {
        Some('"') => Object::Literal(cur.literal()?),
        Some(_) => Object::Resource(cur.resource()?),
        None => return Err("missing object".into()),
    };
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err("expected '.' terminating the statement".into());
    }
    cur.pos += 1;
    cur.skip_ws();
    match cur.peek() {
        None | Some('#') => Ok(Some(Triple { subject, predicate, object })),
        Some(c) => Err(format!("unexpected '{c}' after statement")),
    }
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn rest(&self) -> &str {
        &self.s[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r' | '\n')) {
            self.pos += 1;
        }
    }

    fn resource(&mut self) -> Result<Resource, String> {
        match self.peek() {
            Some('<') => self.iri().map(Resource::Iri),
            Some('_') => self.blank().map(Resource::Blank),
            Some(c) => Err(format!("expected IRI or blank node, found '{c}'")),
            None => Err("unexpected end of line".into()),
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        if self.bump() != Some('<') {
            return Err("expected '<'".into());
        }
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated IRI".into()),
                Some('>') => break,
                Some('\\') => out.push(self.uchar()?),
                Some(c @ ('\u{0}'..='\u{20}' | '<' | '"' | '{' | '}' | '|' | '^' | '`')) => {
                    return Err(format!("illegal character {c:?} in IRI"))
                }
                Some(c) => out.push(c),
            }
        }
        if !has_scheme(&out) {
            return Err(format!("IRI <{out}> is not absolute"));
        }
        Ok(out)
    }

    /// `\uXXXX` or `\UXXXXXXXX`, the backslash already consumed.
    fn uchar(&mut self) -> Result<char, String> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err("invalid escape in IRI".into()),
        };
        self.hex(width)
    }

    fn hex(&mut self, width: usize) -> Result<char, String> {
        let rest = self.rest();
        let digits = rest.get(..width).ok_or("truncated unicode escape")?;
        let code = u32::from_str_radix(digits, 16).map_err(|_| "invalid unicode escape")?;
        self.pos += width;
        char::from_u32(code).ok_or_else(|| format!("invalid code point U+{code:X}"))
    }

    fn blank(&mut self) -> Result<String, String> {
        if !self.rest().starts_with("_:") {
            return Err("expected '_:'".into());
        }
        self.pos += 2;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, '<' | '"' | '#') {
                break;
            }
            self.pos += c.len_utf8();
        }
        // A label may contain '.' but not end with one; that dot is the terminator.
        while self.pos > start && self.s.as_bytes()[self.pos - 1] == b'.' {
            self.pos -= 1;
        }
        let label = &self.s[start..self.pos];
        if label.is_empty() {
            return Err("empty blank node label".into());
        }
        Ok(label.to_owned())
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.bump();
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated string literal".into()),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex(4)?,
                        Some('U') => self.hex(8)?,
                        _ => return Err("invalid escape in literal".into()),
                    };
                    lexical.push(c);
                }
                Some('\n' | '\r') => return Err("line break inside literal".into()),
                Some(c) => lexical.push(c),
            }
        }
        let mut lit = Literal { lexical, datatype: None, language: None };
        if self.rest().starts_with("^^") {
            self.pos += 2;
            lit.datatype = Some(self.iri()?);
        } else if self.peek() == Some('@') {
            self.pos += 1;
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                self.pos += 1;
            }
            let tag = &self.s[start..self.pos];
            let valid = !tag.is_empty()
                && tag.split('-').all(|part| !part.is_empty())
                && tag.split('-').next().is_some_and(|p| p.chars().all(|c| c.is_ascii_alphabetic()));
            if !valid {
                return Err(format!("invalid language tag '@{tag}'"));
            }
            lit.language = Some(tag.to_owned());
        }
        Ok(lit)
    }
}

fn has_scheme(iri: &str) -> bool {
    let Some(colon) = iri.find(':') else { return false };
    let scheme = &iri[..colon];
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

/// Streaming statement reader over any buffered source.
pub struct NTriplesReader<R> {
    input: R,
    strictness: Strictness,
    line_no: usize,
    skipped: usize,
    buf: Vec<u8>,
    failed: bool,
}

impl<R: BufRead> NTriplesReader<R> {
    pub fn new(input: R, strictness: Strictness) -> Self {
        NTriplesReader { input, strictness, line_no: 0, skipped: 0, buf: Vec::new(), failed: false }
    }

    /// Malformed lines skipped so far in lenient mode.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn lines_read(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for NTriplesReader<R> {
    type Item = Result<Triple, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            match self.input.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(ParseError::Io(e)));
                }
            }
            self.line_no += 1;
            let parsed = match std::str::from_utf8(&self.buf) {
                Ok(line) => parse_line(line),
                Err(_) => Err("invalid UTF-8".to_owned()),
            };
            match parsed {
                Ok(Some(triple)) => return Some(Ok(triple)),
                Ok(None) => continue,
                Err(message) => match self.strictness {
                    Strictness::Lenient => self.skipped += 1,
                    Strictness::Strict => {
                        self.failed = true;
                        return Some(Err(ParseError::Malformed { line: self.line_no, message }));
                    }
                },
            }
        }
    }
}

/// Opens an N-Triples file, transparently decompressing `.gz` inputs.
pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    let gz = path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("gz"));
    Ok(if gz {
        Box::new(BufReader::with_capacity(1 << 20, MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::with_capacity(1 << 20, file))
    })
}
