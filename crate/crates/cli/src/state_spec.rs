//! Single-mode state descriptions for `eval`, e.g.
//! `squeezed(nu=1.2, z=0.5) > add > add` or `gaussian(t=0.5, z=0.4, alpha=1, alpha_im=0.5) > sub(2)`.
//!
//! Families: `vacuum`, `thermal`, `coherent`, `squeezed`, `gaussian`.
//! Keys: `nu` or `t` (temperature), `z`, `phi`, `alpha`, `alpha_im`.
//! Ladder operations after `>` are applied left to right.

use std::fmt;

use bosonic_snr::gaussian::{nu_from_temperature, NuConvention, ThermalSpec};
use bosonic_snr::wick::LadderFactor;

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    /// The input with a caret under the offending column.
    pub fn render(&self, input: &str) -> String {
        let column = input[..self.position.min(input.len())].chars().count();
        format!("{input}\n{}^ {}", " ".repeat(column), self.message)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at position {}: {}", self.position, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateSpec {
    pub family: String,
    pub nu: f64,
    pub z: f64,
    pub phi: f64,
    pub alpha: [f64; 2],
    pub ops: Vec<LadderFactor>,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().map_or(0, char::len_utf8);
        }
    }

    fn err<T>(&self, at: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: at,
            message: message.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(self.pos, format!("expected '{c}'"))
        }
    }

    fn ident(&mut self) -> Result<(usize, &'a str), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let len = self.src[start..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.src.len() - start);
        if len == 0 {
            return self.err(start, "expected a name");
        }
        self.pos += len;
        Ok((start, &self.src[start..start + len]))
    }

    fn number(&mut self) -> Result<(usize, f64), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let len = self.src[start..]
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(self.src.len() - start);
        let text = &self.src[start..start + len];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok((start, v))
            }
            _ => self.err(start, "expected a finite number"),
        }
    }
}

const FAMILIES: [(&str, &[&str]); 5] = [
    ("vacuum", &[]),
    ("thermal", &["nu", "t"]),
    ("coherent", &["nu", "t", "alpha", "alpha_im"]),
    ("squeezed", &["nu", "t", "z", "phi"]),
    ("gaussian", &["nu", "t", "z", "phi", "alpha", "alpha_im"]),
];

pub fn parse(input: &str, convention: NuConvention) -> Result<StateSpec, ParseError> {
    let mut c = Cursor { src: input, pos: 0 };
    let (at, family) = c.ident()?;
    let Some((_, keys)) = FAMILIES.iter().find(|(f, _)| *f == family) else {
        return c.err(at, format!("unknown family '{family}' (vacuum, thermal, coherent, squeezed, gaussian)"));
    };
    let mut spec = StateSpec {
        family: family.to_string(),
        nu: 1.0,
        z: 1.0,
        phi: 0.0,
        alpha: [0.0, 0.0],
        ops: Vec::new(),
    };
    let mut seen: Vec<&str> = Vec::new();
    if c.eat('(') && !c.eat(')') {
        loop {
            let (kat, key) = c.ident()?;
            if !keys.contains(&key) {
                return c.err(kat, format!("'{family}' does not take '{key}'"));
            }
            if seen.contains(&key) || (key == "t" && seen.contains(&"nu")) || (key == "nu" && seen.contains(&"t")) {
                return c.err(kat, format!("'{key}' given twice"));
            }
            seen.push(key);
            c.expect('=')?;
            let (vat, v) = c.number()?;
            match key {
                "nu" if v < 1.0 => return c.err(vat, "nu must be >= 1"),
                "nu" => spec.nu = v,
                "t" => {
                    spec.nu = nu_from_temperature(ThermalSpec::Temperature {
                        temperature: v,
                        convention,
                    })
                    .or_else(|e| c.err(vat, e.to_string()))?
                }
                "z" if !(v > 0.0 && v <= 1.0) => return c.err(vat, "z must lie in (0, 1]"),
                "z" => spec.z = v,
                "phi" => spec.phi = v,
                "alpha" => spec.alpha[0] = v,
                _ => spec.alpha[1] = v,
            }
            if c.eat(')') {
                break;
            }
            c.expect(',')?;
        }
    }
    while c.eat('>') {
        let (oat, op) = c.ident()?;
        let factor = match op {
            "add" => LadderFactor::create(0),
            "sub" => LadderFactor::annihilate(0),
            _ => return c.err(oat, format!("unknown operation '{op}' (add, sub)")),
        };
        let mut count = 1;
        if c.eat('(') {
            let (nat, n) = c.number()?;
            if n < 1.0 || n.fract() != 0.0 || n > 8.0 {
                return c.err(nat, "repeat count must be an integer in 1..=8");
            }
            count = n as usize;
            c.expect(')')?;
        }
        spec.ops.extend(std::iter::repeat_n(factor, count));
    }
    c.skip_ws();
    if c.pos != input.len() {
        return c.err(c.pos, "unexpected trailing input");
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_families_and_ops() {
        let s = parse("squeezed(nu=1.2, z=0.5) > add > sub(2)", NuConvention::CothHalf).unwrap();
        assert_eq!((s.nu, s.z), (1.2, 0.5));
        assert_eq!(
            s.ops,
            vec![LadderFactor::create(0), LadderFactor::annihilate(0), LadderFactor::annihilate(0)]
        );
        let v = parse("vacuum", NuConvention::CothHalf).unwrap();
        assert_eq!((v.nu, v.z, v.alpha), (1.0, 1.0, [0.0, 0.0]));
        let c = parse("coherent(alpha=2, alpha_im=-1)", NuConvention::CothHalf).unwrap();
        assert_eq!(c.alpha, [2.0, -1.0]);
    }

    #[test]
    fn temperature_uses_convention() {
        let half = parse("thermal(t=0.5)", NuConvention::CothHalf).unwrap().nu;
        let full = parse("thermal(t=0.5)", NuConvention::CothFull).unwrap().nu;
        assert!((half - 1.0f64.tanh().recip()).abs() < 1e-15);
        assert!((full - 2.0f64.tanh().recip()).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("squeezed(nu=1.2, q=3)", NuConvention::CothHalf).unwrap_err();
        assert_eq!(e.position, 17);
        let e = parse("squeezd", NuConvention::CothHalf).unwrap_err();
        assert_eq!(e.position, 0);
        let e = parse("thermal(nu=0.5)", NuConvention::CothHalf).unwrap_err();
        assert_eq!(e.position, 11);
        let e = parse("thermal(nu=1.5) > add(x)", NuConvention::CothHalf).unwrap_err();
        assert_eq!(e.position, 22);
        let e = parse("thermal(nu=1.5) junk", NuConvention::CothHalf).unwrap_err();
        assert_eq!(e.position, 16);
        assert!(e.render("thermal(nu=1.5) junk").ends_with("^ unexpected trailing input"));
        assert!(parse("thermal(nu=1.5, t=1)", NuConvention::CothHalf).is_err());
    }
}
