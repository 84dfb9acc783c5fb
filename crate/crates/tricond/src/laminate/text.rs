//! Nested text form of a laminate tree.
//!
//! ```text
//! node  := "M" digit | "L" axis "(" layer ("," layer)* ")"
//! layer := number ":" node
//! axis  := "x1" | "x2"
//! ```
//!
//! Fractions are written with the shortest representation that parses back to the
//! same `f64`, so the round trip is bit-exact. Whitespace is insignificant.

use super::{Axis, LaminateNode, Layer};
use crate::error::{Error, Result};
use crate::field::Material;

pub fn to_text(node: &LaminateNode) -> String {
    let mut out = String::new();
    write_node(node, 0, &mut out);
    out
}

fn write_node(node: &LaminateNode, indent: usize, out: &mut String) {
    match node {
        LaminateNode::Leaf { material } => out.push_str(&format!("M{}", material.index() + 1)),
        LaminateNode::Layering { normal, children } => {
            out.push_str(&format!("L{normal} (\n"));
            for (i, c) in children.iter().enumerate() {
                out.push_str(&"  ".repeat(indent + 1));
                out.push_str(&format!("{:?} : ", c.fraction));
                write_node(&c.node, indent + 1, out);
                if i + 1 < children.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&"  ".repeat(indent));
            out.push(')');
        }
    }
}

pub fn parse_text(s: &str) -> Result<LaminateNode> {
    let mut p = Parser {
        src: s.as_bytes(),
        pos: 0,
    };
    let node = p.node()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    node.validate()?;
    Ok(node)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn node(&mut self) -> Result<LaminateNode> {
        match self.peek() {
            Some(b'M') => {
                self.pos += 1;
                let m = match self.peek() {
                    Some(b'1') => Material::One,
                    Some(b'2') => Material::Two,
                    Some(b'3') => Material::Three,
                    _ => return Err(self.error("expected material 1, 2 or 3")),
                };
                self.pos += 1;
                Ok(LaminateNode::Leaf { material: m })
            }
            Some(b'L') => {
                self.pos += 1;
                self.expect(b'x')?;
                let normal = match self.src.get(self.pos) {
                    Some(b'1') => Axis::X1,
                    Some(b'2') => Axis::X2,
                    _ => return Err(self.error("expected axis x1 or x2")),
                };
                self.pos += 1;
                self.expect(b'(')?;
                let mut children = vec![self.layer()?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    children.push(self.layer()?);
                }
                self.expect(b')')?;
                Ok(LaminateNode::Layering { normal, children })
            }
            _ => Err(self.error("expected 'M' or 'L'")),
        }
    }

    fn layer(&mut self) -> Result<Layer> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && matches!(
                self.src[self.pos],
                b'0'..=b'9' | b'.' | b'e' | b'E' | b'+' | b'-'
            )
        {
            self.pos += 1;
        }
        let tok = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let fraction: f64 = tok
            .parse()
            .map_err(|_| Error::Parse(format!("bad fraction '{tok}' at byte {start}")))?;
        self.expect(b':')?;
        Ok(Layer {
            fraction,
            node: self.node()?,
        })
    }
}
