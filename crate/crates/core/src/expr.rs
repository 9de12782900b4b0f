//! Parser for the warping and metric expression grammar.
//!
//! ```text
//! warping := "euclidean" | "sphere(" num ")" | "hyperbolic(" num ")"
//!          | "poly(" num ("," num)* ")"
//! metric  := "example1" | "radial(" warping ")" | "perturbed(" num "," int ")"
//! ```
//!
//! `sphere(b)` has curvature b > 0, `hyperbolic(b)` curvature -b < 0, and
//! `poly(c1, …)` is ω = r + Σ c_j r^{2j+1}. Errors carry the byte offset of
//! the offending token.

use crate::error::{Error, Result};
use crate::model::WarpingProfile;
use crate::surface::PolarMetric2D;

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        offset,
        message: message.into(),
    })
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(d) => err(self.pos, format!("expected '{c}', found '{d}'")),
            None => err(self.pos, format!("expected '{c}', found end of input")),
        }
    }

    fn ident(&mut self) -> Result<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self.text[start..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.text.len() - start);
        if len == 0 {
            return match self.text[start..].chars().next() {
                Some(c) => err(start, format!("expected a name, found '{c}'")),
                None => err(start, "expected a name, found end of input"),
            };
        }
        self.pos += len;
        Ok((start, &self.text[start..start + len]))
    }

    fn number(&mut self) -> Result<(usize, f64)> {
        self.skip_ws();
        let start = self.pos;
        let len = self.text[start..]
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(self.text.len() - start);
        let token = &self.text[start..start + len];
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok((start, v))
            }
            _ if token.is_empty() => err(start, "expected a number"),
            _ => err(start, format!("invalid number '{token}'")),
        }
    }

    fn finish(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => err(self.pos, format!("unexpected trailing input starting with '{c}'")),
        }
    }

    fn warping(&mut self) -> Result<(usize, WarpingProfile)> {
        let (start, name) = self.ident()?;
        let profile = match name {
            "euclidean" => WarpingProfile::euclidean(),
            "sphere" | "hyperbolic" => {
                self.expect('(')?;
                let (at, b) = self.number()?;
                self.expect(')')?;
                if !(b > 0.0) {
                    return err(at, format!("{name} curvature parameter must be positive, got {b}"));
                }
                WarpingProfile::space_form(if name == "sphere" { b } else { -b })
            }
            "poly" => {
                self.expect('(')?;
                let mut coefficients = vec![self.number()?.1];
                while self.peek() == Some(',') {
                    self.pos += 1;
                    coefficients.push(self.number()?.1);
                }
                self.expect(')')?;
                WarpingProfile::odd_polynomial(coefficients)?
            }
            other => {
                return err(
                    start,
                    format!("unknown warping '{other}' (expected euclidean, sphere, hyperbolic or poly)"),
                )
            }
        };
        Ok((start, profile))
    }

    fn metric(&mut self) -> Result<PolarMetric2D> {
        let (start, name) = self.ident()?;
        match name {
            "example1" => Ok(PolarMetric2D::example()),
            "radial" => {
                self.expect('(')?;
                let (_, w) = self.warping()?;
                self.expect(')')?;
                PolarMetric2D::radial(w)
            }
            "perturbed" => {
                self.expect('(')?;
                let (_, eps) = self.number()?;
                self.expect(',')?;
                let (at, mode) = self.number()?;
                self.expect(')')?;
                if !(mode >= 1.0 && mode.fract() == 0.0 && mode <= u32::MAX as f64) {
                    return err(at, format!("mode must be a positive integer, got {mode}"));
                }
                PolarMetric2D::perturbed(eps, mode as u32).or_else(|e| err(start, e.to_string()))
            }
            other => err(
                start,
                format!("unknown metric '{other}' (expected example1, radial or perturbed)"),
            ),
        }
    }
}

/// Parses a warping expression and checks ω > 0 on (0, r_probe].
pub fn parse_warping_expr(text: &str, r_probe: f64) -> Result<WarpingProfile> {
    let mut p = Parser::new(text);
    let (start, w) = p.warping()?;
    p.finish()?;
    if r_probe >= w.r_max() {
        return err(
            start,
            format!(
                "{w} vanishes at r = {} inside the probed interval (0, {r_probe}]",
                w.r_max()
            ),
        );
    }
    Ok(w)
}

pub fn parse_metric_expr(text: &str) -> Result<PolarMetric2D> {
    let mut p = Parser::new(text);
    let m = p.metric()?;
    p.finish()?;
    Ok(m)
}
