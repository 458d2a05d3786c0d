//! Maps a path such as `mapping.pieces[1].vertices[0]` back to a line and column of the source
//! text, so that validation errors point at the offending value.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Seg {
    Key(String),
    Index(usize),
}

/// Dotted rendering, e.g. `cone.rows[2]`.
pub fn render(path: &[Seg]) -> String {
    let mut out = String::new();
    for seg in path {
        match seg {
            Seg::Key(k) => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(k);
            }
            Seg::Index(i) => out.push_str(&format!("[{i}]")),
        }
    }
    out
}

/// 1-based line and column where the value at `path` starts. Falls back to the deepest prefix
/// that can be found.
pub fn locate(text: &str, path: &[Seg]) -> Option<(usize, usize)> {
    let mut c = Cursor { s: text.as_bytes(), i: 0 };
    c.ws();
    let mut found = c.i;
    for seg in path {
        if !c.descend(seg) {
            break;
        }
        found = c.i;
    }
    Some(line_col(text, found))
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.i += 1;
        }
    }

    fn string(&mut self) -> Option<String> {
        if self.peek() != Some(b'"') {
            return None;
        }
        let start = self.i;
        self.i += 1;
        while let Some(b) = self.peek() {
            self.i += 1;
            match b {
                b'\\' => self.i += 1,
                b'"' => {
                    let raw = std::str::from_utf8(&self.s[start..self.i]).ok()?;
                    return serde_json::from_str(raw).ok();
                }
                _ => {}
            }
        }
        None
    }

    fn skip_value(&mut self) -> Option<()> {
        match self.peek()? {
            b'"' => self.string().map(|_| ()),
            b'{' | b'[' => {
                let mut depth = 0usize;
                loop {
                    match self.peek()? {
                        b'"' => {
                            self.string()?;
                            continue;
                        }
                        b'{' | b'[' => depth += 1,
                        b'}' | b']' => {
                            depth -= 1;
                            if depth == 0 {
                                self.i += 1;
                                return Some(());
                            }
                        }
                        _ => {}
                    }
                    self.i += 1;
                }
            }
            _ => {
                while !matches!(self.peek(), None | Some(b',' | b'}' | b']' | b' ' | b'\t' | b'\n' | b'\r')) {
                    self.i += 1;
                }
                Some(())
            }
        }
    }

    /// Moves to the start of the child value; on failure the position is unspecified.
    fn descend(&mut self, seg: &Seg) -> bool {
        self.try_descend(seg).is_some()
    }

    fn try_descend(&mut self, seg: &Seg) -> Option<()> {
        match seg {
            Seg::Key(key) => {
                if self.peek()? != b'{' {
                    return None;
                }
                self.i += 1;
                loop {
                    self.ws();
                    if self.peek()? == b'}' {
                        return None;
                    }
                    let k = self.string()?;
                    self.ws();
                    if self.peek()? != b':' {
                        return None;
                    }
                    self.i += 1;
                    self.ws();
                    if &k == key {
                        return Some(());
                    }
                    self.skip_value()?;
                    self.ws();
                    if self.peek()? == b',' {
                        self.i += 1;
                    }
                }
            }
            Seg::Index(target) => {
                if self.peek()? != b'[' {
                    return None;
                }
                self.i += 1;
                let mut k = 0;
                loop {
                    self.ws();
                    if self.peek()? == b']' {
                        return None;
                    }
                    if k == *target {
                        return Some(());
                    }
                    self.skip_value()?;
                    self.ws();
                    if self.peek()? == b',' {
                        self.i += 1;
                    }
                    k += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_nested_values() {
        let text = "{\n  \"a\": {\"b\": [1, [2, 3], \"x]\"]},\n  \"c\": [\n    [0, 1],\n    [2]\n  ]\n}";
        let path = [Seg::Key("c".into()), Seg::Index(1)];
        assert_eq!(locate(text, &path), Some((5, 5)));
        let path = [Seg::Key("a".into()), Seg::Key("b".into()), Seg::Index(2)];
        assert_eq!(locate(text, &path), Some((2, 26)));
        assert_eq!(render(&path), "a.b[2]");
        // missing key falls back to the parent
        let path = [Seg::Key("a".into()), Seg::Key("zz".into())];
        assert_eq!(locate(text, &path).unwrap().0, 2);
    }
}
