//! A streaming pull parser for the XML subset the engine ingests.
//!
//! The reader keeps a fixed-size window over its byte source and hands out
//! one event at a time, so memory use does not depend on document size.
//! Adjacent character data, CDATA sections and references are merged into a
//! single text event; comments and processing instructions end a text run.

use std::io::Read;
use std::sync::Arc;

use rustc_hash::FxHashMap;

const WINDOW: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlError {
    pub offset: u64,
    pub message: String,
}

pub type XmlResult<T> = Result<T, XmlError>;

#[derive(Debug, PartialEq)]
pub enum Event<'a> {
    Start {
        name: &'a Arc<str>,
        attrs: &'a [(Arc<str>, String)],
    },
    End,
    Text(&'a str),
    Comment(&'a str),
    Pi {
        target: &'a Arc<str>,
        data: &'a str,
    },
    Eof,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Encoding {
    Utf8,
    Latin1,
}

pub struct XmlReader<R> {
    src: R,
    buf: Box<[u8]>,
    pos: usize,
    len: usize,
    /// Stream offset of `buf[0]`.
    base: u64,
    eof: bool,
    encoding: Encoding,
    started: bool,
    open: Vec<Arc<str>>,
    seen_root: bool,
    pending_end: bool,
    names: FxHashMap<Vec<u8>, Arc<str>>,
    raw: Vec<u8>,
    text: String,
    pi_target: Option<Arc<str>>,
    attrs: Vec<(Arc<str>, String)>,
    elem_name: Option<Arc<str>>,
}

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r')
}

fn is_name_byte(b: u8) -> bool {
    !(is_space(b)
        || matches!(
            b,
            b'<' | b'>' | b'/' | b'=' | b'"' | b'\'' | b'!' | b'?' | b'&' | b';' | b'[' | b']'
        ))
}

impl<R: Read> XmlReader<R> {
    pub fn new(src: R) -> Self {
        XmlReader {
            src,
            buf: vec![0u8; WINDOW].into_boxed_slice(),
            pos: 0,
            len: 0,
            base: 0,
            eof: false,
            encoding: Encoding::Utf8,
            started: false,
            open: Vec::new(),
            seen_root: false,
            pending_end: false,
            names: FxHashMap::default(),
            raw: Vec::new(),
            text: String::new(),
            pi_target: None,
            attrs: Vec::new(),
            elem_name: None,
        }
    }

    /// Stream offset of the next unread byte.
    pub fn offset(&self) -> u64 {
        self.base + self.pos as u64
    }

    fn err<T>(&self, message: impl Into<String>) -> XmlResult<T> {
        Err(XmlError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    /// Ensures at least `n` unread bytes are buffered unless the source is
    /// exhausted. Returns whether they are.
    fn ensure(&mut self, n: usize) -> XmlResult<bool> {
        debug_assert!(n <= WINDOW);
        while self.len - self.pos < n && !self.eof {
            if self.pos > 0 {
                self.buf.copy_within(self.pos..self.len, 0);
                self.base += self.pos as u64;
                self.len -= self.pos;
                self.pos = 0;
            }
            match self.src.read(&mut self.buf[self.len..]) {
                Ok(0) => self.eof = true,
                Ok(k) => self.len += k,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return self.err(format!("read failed: {}", e)),
            }
        }
        Ok(self.len - self.pos >= n)
    }

    fn peek(&mut self) -> XmlResult<Option<u8>> {
        if self.pos < self.len || self.ensure(1)? {
            Ok(Some(self.buf[self.pos]))
        } else {
            Ok(None)
        }
    }

    fn starts_with(&mut self, lit: &[u8]) -> XmlResult<bool> {
        if !self.ensure(lit.len())? {
            return Ok(false);
        }
        Ok(&self.buf[self.pos..self.pos + lit.len()] == lit)
    }

    fn expect(&mut self, lit: &[u8]) -> XmlResult<()> {
        if self.starts_with(lit)? {
            self.pos += lit.len();
            Ok(())
        } else {
            self.err(format!("expected {:?}", String::from_utf8_lossy(lit)))
        }
    }

    fn skip_space(&mut self) -> XmlResult<bool> {
        let mut any = false;
        while let Some(b) = self.peek()? {
            if !is_space(b) {
                break;
            }
            self.pos += 1;
            any = true;
        }
        Ok(any)
    }

    /// Appends source bytes to `raw`, transcoding Latin-1 on the way.
    fn push_raw(raw: &mut Vec<u8>, encoding: Encoding, bytes: &[u8]) {
        match encoding {
            Encoding::Utf8 => raw.extend_from_slice(bytes),
            Encoding::Latin1 => {
                for &b in bytes {
                    if b < 0x80 {
                        raw.push(b);
                    } else {
                        raw.push(0xC0 | (b >> 6));
                        raw.push(0x80 | (b & 0x3F));
                    }
                }
            }
        }
    }

    /// Moves `raw` into `self.text`, validating UTF-8.
    fn take_text(&mut self, start_offset: u64) -> XmlResult<()> {
        self.text.clear();
        match std::str::from_utf8(&self.raw) {
            Ok(s) => {
                self.text.push_str(s);
                Ok(())
            }
            Err(e) => Err(XmlError {
                offset: start_offset,
                message: format!("invalid UTF-8 in character data: {}", e),
            }),
        }
    }

    fn read_name(&mut self) -> XmlResult<Arc<str>> {
        let start = self.offset();
        let mut bytes: Vec<u8> = Vec::new();
        loop {
            if self.pos >= self.len && !self.ensure(1)? {
                break;
            }
            let window = &self.buf[self.pos..self.len];
            let n = window.iter().position(|&b| !is_name_byte(b)).unwrap_or(window.len());
            bytes.extend_from_slice(&window[..n]);
            self.pos += n;
            if n < window.len() {
                break;
            }
        }
        if bytes.is_empty() {
            return Err(XmlError {
                offset: start,
                message: "expected a name".into(),
            });
        }
        if bytes[0].is_ascii_digit() || bytes[0] == b'-' || bytes[0] == b'.' {
            return Err(XmlError {
                offset: start,
                message: "names may not start with a digit, '-' or '.'".into(),
            });
        }
        if let Some(name) = self.names.get(&bytes) {
            return Ok(name.clone());
        }
        let mut utf8 = Vec::with_capacity(bytes.len());
        Self::push_raw(&mut utf8, self.encoding, &bytes);
        let s = String::from_utf8(utf8).map_err(|_| XmlError {
            offset: start,
            message: "invalid UTF-8 in name".into(),
        })?;
        let name: Arc<str> = Arc::from(s);
        self.names.insert(bytes, name.clone());
        Ok(name)
    }

    /// Parses a reference after the `&`, appending the replacement text.
    fn read_reference(&mut self, out: &mut Vec<u8>) -> XmlResult<()> {
        let start = self.offset();
        let mut body = Vec::new();
        loop {
            match self.peek()? {
                Some(b';') => {
                    self.pos += 1;
                    break;
                }
                Some(b) if body.len() < 12 && !is_space(b) && b != b'<' && b != b'&' => {
                    body.push(b);
                    self.pos += 1;
                }
                _ => {
                    return Err(XmlError {
                        offset: start,
                        message: "unterminated reference".into(),
                    })
                }
            }
        }
        let fail = |m: &str| {
            Err(XmlError {
                offset: start,
                message: m.to_string(),
            })
        };
        match &body[..] {
            b"lt" => out.push(b'<'),
            b"gt" => out.push(b'>'),
            b"amp" => out.push(b'&'),
            b"quot" => out.push(b'"'),
            b"apos" => out.push(b'\''),
            [b'#', rest @ ..] => {
                let code = match rest {
                    [b'x', hex @ ..] => std::str::from_utf8(hex)
                        .ok()
                        .and_then(|h| u32::from_str_radix(h, 16).ok()),
                    dec => std::str::from_utf8(dec).ok().and_then(|d| d.parse().ok()),
                };
                let c = match code.and_then(char::from_u32) {
                    Some(c) if c != '\0' => c,
                    _ => return fail("invalid character reference"),
                };
                let mut tmp = [0u8; 4];
                out.extend_from_slice(c.encode_utf8(&mut tmp).as_bytes());
            }
            other => {
                return fail(&format!(
                    "undeclared entity &{};",
                    String::from_utf8_lossy(other)
                ))
            }
        }
        Ok(())
    }

    /// Reads up to the closing quote of an attribute value into `out`,
    /// expanding references and normalizing whitespace.
    fn read_attr_value(&mut self, out: &mut Vec<u8>) -> XmlResult<()> {
        let quote = match self.peek()? {
            Some(q @ (b'"' | b'\'')) => q,
            _ => return self.err("expected a quoted attribute value"),
        };
        self.pos += 1;
        loop {
            let b = match self.peek()? {
                Some(b) => b,
                None => return self.err("unterminated attribute value"),
            };
            self.pos += 1;
            match b {
                _ if b == quote => return Ok(()),
                b'<' => return self.err("'<' in attribute value"),
                b'&' => self.read_reference(out)?,
                b'\r' => {
                    if self.peek()? == Some(b'\n') {
                        self.pos += 1;
                    }
                    out.push(b' ');
                }
                b'\n' | b'\t' => out.push(b' '),
                _ => Self::push_raw(out, self.encoding, &[b]),
            }
        }
    }

    fn read_declaration(&mut self) -> XmlResult<()> {
        // `<?xml` has been matched.
        let mut encoding: Option<String> = None;
        loop {
            let had_space = self.skip_space()?;
            if self.starts_with(b"?>")? {
                self.pos += 2;
                break;
            }
            if !had_space {
                return self.err("malformed XML declaration");
            }
            let name = self.read_name()?;
            self.skip_space()?;
            self.expect(b"=")?;
            self.skip_space()?;
            let mut v = Vec::new();
            self.read_attr_value(&mut v)?;
            if &*name == "encoding" {
                encoding = Some(String::from_utf8_lossy(&v).into_owned());
            }
        }
        if let Some(enc) = encoding {
            match enc.to_ascii_uppercase().as_str() {
                "UTF-8" | "UTF8" => self.encoding = Encoding::Utf8,
                "ISO-8859-1" | "LATIN1" | "ISO_8859-1" => self.encoding = Encoding::Latin1,
                other => return self.err(format!("unsupported encoding {}", other)),
            }
        }
        Ok(())
    }

    fn read_doctype(&mut self) -> XmlResult<()> {
        // `<!DOCTYPE` has been matched.
        if !self.skip_space()? {
            return self.err("malformed DOCTYPE");
        }
        self.read_name()?;
        self.skip_space()?;
        if self.starts_with(b"SYSTEM")? || self.starts_with(b"PUBLIC")? {
            return self.err("external DTD references are not supported");
        }
        if self.peek()? == Some(b'[') {
            self.pos += 1;
            let mut quote: Option<u8> = None;
            loop {
                let b = match self.peek()? {
                    Some(b) => b,
                    None => return self.err("unterminated DOCTYPE internal subset"),
                };
                self.pos += 1;
                match (quote, b) {
                    (Some(q), _) if b == q => quote = None,
                    (Some(_), _) => {}
                    (None, b'"' | b'\'') => quote = Some(b),
                    (None, b']') => break,
                    (None, b'<') if self.starts_with(b"!ENTITY")? => {
                        return self.err("entity declarations are not supported")
                    }
                    _ => {}
                }
            }
            self.skip_space()?;
        }
        self.expect(b">")
    }

    fn read_comment(&mut self) -> XmlResult<()> {
        // `<!--` has been matched.
        let start = self.offset();
        self.raw.clear();
        loop {
            if self.starts_with(b"--")? {
                self.pos += 2;
                if self.peek()? == Some(b'>') {
                    self.pos += 1;
                    break;
                }
                return self.err("'--' inside comment");
            }
            match self.peek()? {
                Some(b'\r') => {
                    self.pos += 1;
                    if self.peek()? == Some(b'\n') {
                        self.pos += 1;
                    }
                    self.raw.push(b'\n');
                }
                Some(b) => {
                    self.pos += 1;
                    Self::push_raw(&mut self.raw, self.encoding, &[b]);
                }
                None => {
                    return Err(XmlError {
                        offset: start,
                        message: "unterminated comment".into(),
                    })
                }
            }
        }
        self.take_text(start)
    }

    fn read_pi(&mut self) -> XmlResult<()> {
        // `<?` has been matched.
        let start = self.offset();
        let target = self.read_name()?;
        if target.eq_ignore_ascii_case("xml") {
            return self.err("XML declaration is only allowed at the start");
        }
        self.raw.clear();
        let spaced = self.skip_space()?;
        loop {
            if self.starts_with(b"?>")? {
                self.pos += 2;
                break;
            }
            if !spaced {
                return self.err("expected whitespace after PI target");
            }
            match self.peek()? {
                Some(b) => {
                    self.pos += 1;
                    Self::push_raw(&mut self.raw, self.encoding, &[b]);
                }
                None => {
                    return Err(XmlError {
                        offset: start,
                        message: "unterminated processing instruction".into(),
                    })
                }
            }
        }
        self.take_text(start)?;
        self.pi_target = Some(target);
        Ok(())
    }

    fn read_cdata_into_raw(&mut self) -> XmlResult<()> {
        // `<![CDATA[` has been matched.
        let start = self.offset();
        loop {
            if self.pos >= self.len && !self.ensure(1)? {
                return Err(XmlError {
                    offset: start,
                    message: "unterminated CDATA section".into(),
                });
            }
            if self.starts_with(b"]]>")? {
                self.pos += 3;
                return Ok(());
            }
            let b = self.buf[self.pos];
            self.pos += 1;
            if b == b'\r' {
                if self.peek()? == Some(b'\n') {
                    self.pos += 1;
                }
                self.raw.push(b'\n');
            } else {
                Self::push_raw(&mut self.raw, self.encoding, &[b]);
            }
        }
    }

    /// Accumulates character data up to the next markup that ends a text
    /// run. Returns true if any text was read.
    fn read_text(&mut self) -> XmlResult<bool> {
        let start = self.offset();
        self.raw.clear();
        let mut any = false;
        loop {
            if self.pos >= self.len && !self.ensure(1)? {
                break;
            }
            let window = &self.buf[self.pos..self.len];
            match memchr::memchr3(b'<', b'&', b'\r', window) {
                None => {
                    let n = window.len();
                    Self::push_raw(&mut self.raw, self.encoding, &self.buf[self.pos..self.pos + n]);
                    self.pos += n;
                    any = true;
                }
                Some(i) => {
                    if i > 0 {
                        Self::push_raw(&mut self.raw, self.encoding, &self.buf[self.pos..self.pos + i]);
                        any = true;
                    }
                    self.pos += i;
                    match self.buf[self.pos] {
                        b'&' => {
                            self.pos += 1;
                            let mut tmp = Vec::new();
                            self.read_reference(&mut tmp)?;
                            self.raw.extend_from_slice(&tmp);
                            any = true;
                        }
                        b'\r' => {
                            self.pos += 1;
                            if self.peek()? == Some(b'\n') {
                                self.pos += 1;
                            }
                            self.raw.push(b'\n');
                            any = true;
                        }
                        _ => {
                            if self.starts_with(b"<![CDATA[")? {
                                self.pos += 9;
                                self.read_cdata_into_raw()?;
                                any = true;
                            } else {
                                break;
                            }
                        }
                    }
                }
            }
        }
        if any {
            self.take_text(start)?;
        }
        Ok(any)
    }

    fn read_start_tag(&mut self) -> XmlResult<bool> {
        // `<` has been matched and a name follows.
        let name = self.read_name()?;
        self.attrs.clear();
        let empty;
        loop {
            let spaced = self.skip_space()?;
            match self.peek()? {
                Some(b'>') => {
                    self.pos += 1;
                    empty = false;
                    break;
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.expect(b">")?;
                    empty = true;
                    break;
                }
                Some(_) if spaced => {
                    let attr_offset = self.offset();
                    let an = self.read_name()?;
                    self.skip_space()?;
                    self.expect(b"=")?;
                    self.skip_space()?;
                    let mut v = Vec::new();
                    self.read_attr_value(&mut v)?;
                    if self.attrs.iter().any(|(n, _)| *n == an) {
                        return Err(XmlError {
                            offset: attr_offset,
                            message: format!("duplicate attribute {}", an),
                        });
                    }
                    let value = String::from_utf8(v).map_err(|_| XmlError {
                        offset: attr_offset,
                        message: "invalid UTF-8 in attribute value".into(),
                    })?;
                    self.attrs.push((an, value));
                }
                Some(_) => return self.err("expected whitespace, '>' or '/>'"),
                None => return self.err("unexpected end of input in start tag"),
            }
        }
        self.elem_name = Some(name.clone());
        self.open.push(name);
        self.seen_root = true;
        Ok(empty)
    }

    fn read_end_tag(&mut self) -> XmlResult<()> {
        // `</` has been matched.
        let offset = self.offset();
        let name = self.read_name()?;
        self.skip_space()?;
        self.expect(b">")?;
        match self.open.pop() {
            Some(open) if open == name => Ok(()),
            Some(open) => Err(XmlError {
                offset,
                message: format!("end tag </{}> does not match <{}>", name, open),
            }),
            None => Err(XmlError {
                offset,
                message: format!("unexpected end tag </{}>", name),
            }),
        }
    }

    fn start(&mut self) -> XmlResult<()> {
        self.started = true;
        self.ensure(4)?;
        let head = &self.buf[self.pos..self.len.min(self.pos + 4)];
        if head.starts_with(&[0xEF, 0xBB, 0xBF]) {
            self.pos += 3;
        } else if [[0xFE, 0xFF], [0xFF, 0xFE], [0, 0x3C], [0x3C, 0]].iter().any(|m| head.starts_with(m)) {
            // Byte-order marks, or `<` as a 16-bit unit.
            return self.err("unsupported encoding UTF-16");
        }
        if self.starts_with(b"<?xml")? {
            let after = self.ensure(6)? && is_space(self.buf[self.pos + 5]);
            if after {
                self.pos += 5;
                self.read_declaration()?;
            }
        }
        Ok(())
    }

    /// Returns the next event. Text outside the root element must be
    /// whitespace and produces no event.
    pub fn next_event(&mut self) -> XmlResult<Event<'_>> {
        if !self.started {
            self.start()?;
        }
        if self.pending_end {
            self.pending_end = false;
            self.open.pop();
            return Ok(Event::End);
        }
        loop {
            let inside = !self.open.is_empty();
            match self.peek()? {
                None => {
                    if inside {
                        return self.err(format!("unclosed element <{}>", self.open.last().unwrap()));
                    }
                    if !self.seen_root {
                        return self.err("document has no root element");
                    }
                    return Ok(Event::Eof);
                }
                Some(b'<') => {}
                Some(_) => {
                    if inside {
                        if self.read_text()? {
                            return Ok(Event::Text(&self.text));
                        }
                        continue;
                    }
                    if !self.skip_space()? {
                        return self.err("character data outside the root element");
                    }
                    continue;
                }
            }
            // At '<'.
            if self.starts_with(b"<!--")? {
                self.pos += 4;
                self.read_comment()?;
                return Ok(Event::Comment(&self.text));
            }
            if self.starts_with(b"<![CDATA[")? {
                if !inside {
                    return self.err("CDATA outside the root element");
                }
                if self.read_text()? {
                    return Ok(Event::Text(&self.text));
                }
                continue;
            }
            if self.starts_with(b"<!DOCTYPE")? {
                if self.seen_root {
                    return self.err("DOCTYPE after the root element");
                }
                self.pos += 9;
                self.read_doctype()?;
                continue;
            }
            if self.starts_with(b"<?")? {
                self.pos += 2;
                self.read_pi()?;
                return Ok(Event::Pi {
                    target: self.pi_target.as_ref().unwrap(),
                    data: &self.text,
                });
            }
            if self.starts_with(b"</")? {
                self.pos += 2;
                self.read_end_tag()?;
                return Ok(Event::End);
            }
            self.pos += 1;
            if !inside && self.seen_root {
                return self.err("content after the root element");
            }
            let empty = self.read_start_tag()?;
            self.pending_end = empty;
            return Ok(Event::Start {
                name: self.elem_name.as_ref().unwrap(),
                attrs: &self.attrs,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events(xml: &[u8]) -> XmlResult<Vec<String>> {
        let mut r = XmlReader::new(xml);
        let mut out = Vec::new();
        loop {
            let e = r.next_event()?;
            let s = match e {
                Event::Start { name, attrs } => {
                    let a: Vec<String> = attrs.iter().map(|(n, v)| format!("{}={}", n, v)).collect();
                    format!("<{} {}>", name, a.join(","))
                }
                Event::End => "/".into(),
                Event::Text(t) => format!("T{:?}", t),
                Event::Comment(c) => format!("C{:?}", c),
                Event::Pi { target, data } => format!("P{}:{}", target, data),
                Event::Eof => break,
            };
            out.push(s);
        }
        Ok(out)
    }

    #[test]
    fn basic_events() {
        let got = events(b"<?xml version=\"1.0\"?><a x='1'>hi<b/><!--c--><?p d?></a>").unwrap();
        assert_eq!(
            got,
            vec!["<a x=1>", "T\"hi\"", "<b >", "/", "C\"c\"", "Pp:d", "/"]
        );
    }

    #[test]
    fn merges_cdata_and_references() {
        let got = events(b"<a>x &amp; <![CDATA[<y>]]>&#65;&#x42;\r\nz</a>").unwrap();
        assert_eq!(got[1], "T\"x & <y>AB\\nz\"");
    }

    #[test]
    fn latin1_is_transcoded() {
        let mut doc = b"<?xml version=\"1.0\" encoding=\"ISO-8859-1\"?><a>caf".to_vec();
        doc.push(0xE9);
        doc.extend_from_slice(b"</a>");
        assert_eq!(events(&doc).unwrap()[1], "T\"caf\u{e9}\"");
    }

    #[test]
    fn rejects_malformed_input_with_offsets() {
        let e = events(b"<a><b></a>").unwrap_err();
        assert_eq!(e.offset, 8);
        assert!(events(b"<a>&nbsp;</a>").is_err());
        assert!(events(b"<a/><b/>").is_err());
        assert!(events(b"<?xml version=\"1.0\" encoding=\"Shift_JIS\"?><a/>").is_err());
        assert!(events(b"<!DOCTYPE a SYSTEM \"x.dtd\"><a/>").is_err());
        assert!(events(b"<a x='1' x='2'/>").is_err());
        assert!(events(b"").is_err());
        assert!(events(b"<a>").is_err());
        assert!(events(b"\xFF\xFE<\x00a\x00/\x00>\x00").is_err());
    }

    #[test]
    fn internal_doctype_subset_is_skipped() {
        let got = events(b"<!DOCTYPE a [ <!ELEMENT a ANY> ]><a/>").unwrap();
        assert_eq!(got, vec!["<a >", "/"]);
    }

    #[test]
    fn small_reads_produce_same_events() {
        struct Trickle<'a>(&'a [u8]);
        impl Read for Trickle<'_> {
            fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
                if self.0.is_empty() || buf.is_empty() {
                    return Ok(0);
                }
                buf[0] = self.0[0];
                self.0 = &self.0[1..];
                Ok(1)
            }
        }
        let doc = b"<r a=\"1&lt;2\"><x>one</x><!--c--><![CDATA[q]]></r>";
        let mut whole = XmlReader::new(&doc[..]);
        let mut trickle = XmlReader::new(Trickle(doc));
        loop {
            let a = format!("{:?}", whole.next_event().unwrap());
            let b = format!("{:?}", trickle.next_event().unwrap());
            assert_eq!(a, b);
            if a == "Eof" {
                break;
            }
        }
    }
}
