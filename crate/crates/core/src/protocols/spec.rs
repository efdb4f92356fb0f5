//! Textual protocol specs: `id` or `id(key=value, ...)`, nesting allowed for
//! the hybrid's sub-protocols, e.g.
//! `hybrid(p=11/16,a=biased-shared(l=4),b=three-biased)`.

use std::fmt;

use super::{Protocol, Selector};
use crate::error::{Error, Result};
use crate::scalar::{consts, Real};

/// Exact ratio of two integers as typed by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub numerator: i64,
    pub denominator: u64,
}

impl Ratio {
    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// `Some(bits)` when the denominator is `2^bits`.
    pub fn dyadic_bits(self) -> Option<u32> {
        self.denominator
            .is_power_of_two()
            .then(|| self.denominator.trailing_zeros())
    }
}

fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// Parses `a/b` or a bare integer.
pub fn parse_ratio(s: &str) -> Option<Ratio> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let numerator = n.parse::<i64>().ok()?;
    let denominator = d.parse::<u64>().ok().filter(|&d| d > 0)?;
    Some(Ratio {
        numerator,
        denominator,
    })
}

/// Parses a number written as a fraction (`1/3`), a decimal (`0.25`),
/// `inf`, or one of the named constants `phi`, `phi-1`, `2-phi`.
///
/// Integer fractions are divided once in floating point, so boundary values
/// such as `1/2` or `3/8` are exact.
pub fn parse_number(s: &str) -> Result<f64> {
    let t = s.trim();
    let phi: f64 = consts::phi();
    match t {
        "phi" => return Ok(phi),
        "phi-1" => return Ok(phi - 1.0),
        "2-phi" => return Ok(2.0 - phi),
        "inf" | "infinity" => return Ok(f64::INFINITY),
        _ => {}
    }
    if let Some(r) = parse_ratio(t) {
        return Ok(r.to_f64());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: f64 = n
            .trim()
            .parse()
            .map_err(|_| parse_err(s, "bad numerator"))?;
        let d: f64 = d
            .trim()
            .parse()
            .map_err(|_| parse_err(s, "bad denominator"))?;
        if d == 0.0 {
            return Err(parse_err(s, "zero denominator"));
        }
        return Ok(n / d);
    }
    let v: f64 = t.parse().map_err(|_| parse_err(s, "not a number"))?;
    if v.is_nan() {
        return Err(parse_err(s, "not a number"));
    }
    Ok(v)
}

/// Parsed but not yet validated protocol description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolSpec {
    pub id: String,
    pub params: Vec<(String, String)>,
}

impl ProtocolSpec {
    pub fn parse(input: &str) -> Result<Self> {
        let s = input.trim();
        let (id, rest) = match s.find('(') {
            Some(i) => {
                if !s.ends_with(')') {
                    return Err(parse_err(input, "missing closing parenthesis"));
                }
                (&s[..i], Some(&s[i + 1..s.len() - 1]))
            }
            None => (s, None),
        };
        let id = id.trim();
        if id.is_empty() || id.contains([')', ',', '=']) {
            return Err(parse_err(input, "missing protocol id"));
        }
        let mut params = Vec::new();
        if let Some(body) = rest {
            for item in split_top_level(body).map_err(|r| parse_err(input, r))? {
                if item.trim().is_empty() {
                    continue;
                }
                params.push(parse_pair(item).map_err(|r| parse_err(input, r))?);
            }
        }
        Ok(ProtocolSpec {
            id: id.to_string(),
            params,
        })
    }

    pub fn with_params<I, K, V>(mut self, extra: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        for (k, v) in extra {
            let k = k.into();
            self.params.retain(|(existing, _)| *existing != k);
            self.params.push((k, v.into()));
        }
        self
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.params {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::InvalidParameter {
                    protocol: self.id.clone(),
                    reason: format!("unknown parameter `{k}`"),
                });
            }
        }
        Ok(())
    }

    fn bits(&self, key: &str) -> Result<Option<u32>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse::<u32>()
                .map(Some)
                .map_err(|_| Error::InvalidParameter {
                    protocol: self.id.clone(),
                    reason: format!("`{key}` must be a non-negative integer, got `{v}`"),
                }),
        }
    }

    fn required_bits(&self, key: &str) -> Result<u32> {
        self.bits(key)?.ok_or_else(|| Error::InvalidParameter {
            protocol: self.id.clone(),
            reason: format!("missing parameter `{key}`"),
        })
    }

    fn real<T: Real>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| parse_number(v).map(T::lit))
            .transpose()
    }

    /// Validates the parameters and builds the protocol.
    pub fn build<T: Real>(&self) -> Result<Protocol<T>> {
        match self.id.as_str() {
            "rr" => self
                .check_keys(&[])
                .map(|_| Protocol::randomized_rounding()),
            "dr" => self
                .check_keys(&[])
                .map(|_| Protocol::deterministic_rounding()),
            "dither" => self
                .check_keys(&[])
                .map(|_| Protocol::subtractive_dithering()),
            "three-unbiased" => self
                .check_keys(&[])
                .map(|_| Protocol::three_point_unbiased()),
            "three-biased" => self.check_keys(&[]).map(|_| Protocol::three_point_biased()),
            "shared-unbiased" => {
                self.check_keys(&["l"])?;
                Protocol::shared_unbiased(self.required_bits("l")?)
            }
            "biased-shared" => {
                self.check_keys(&["l"])?;
                Protocol::biased_shared(self.required_bits("l")?)
            }
            "trunc-dither" => {
                self.check_keys(&["z"])?;
                match self.real::<T>("z")? {
                    Some(z) => Protocol::truncated_dithering(z),
                    None => Ok(Protocol::truncated_dithering_optimal()),
                }
            }
            "convex-dither" => {
                self.check_keys(&["alpha"])?;
                match self.real::<T>("alpha")? {
                    Some(a) => Protocol::convex_dithered_biased(a),
                    None => Ok(Protocol::convex_dithered_optimal()),
                }
            }
            "limit-biased" => {
                self.check_keys(&["alpha"])?;
                match self.real::<T>("alpha")? {
                    Some(a) => Protocol::limit_biased_with(a),
                    None => Ok(Protocol::limit_biased()),
                }
            }
            "kbit" => {
                self.check_keys(&["k", "l"])?;
                let k = self.required_bits("k")?;
                let bits = match self.get("l").map(str::trim) {
                    None | Some("inf") | Some("infinity") => None,
                    Some(_) => self.bits("l")?,
                };
                Protocol::kbit_unbiased(k, bits)
            }
            "hybrid" => self.build_hybrid(),
            other => Err(Error::UnknownProtocol(other.to_string())),
        }
    }

    fn build_hybrid<T: Real>(&self) -> Result<Protocol<T>> {
        self.check_keys(&["p", "a", "b", "mode"])?;
        if self.params.is_empty() {
            return Ok(Protocol::hybrid_limit());
        }
        let sub = |key: &str, default: &str| -> Result<Protocol<T>> {
            ProtocolSpec::parse(self.get(key).unwrap_or(default))?.build()
        };
        let a = sub("a", "limit-biased")?;
        let b = sub("b", "three-biased")?;
        let p_text = self.get("p").unwrap_or("phi-1");
        let force_real = match self.get("mode") {
            None | Some("auto") => false,
            Some("real") => true,
            Some(other) => {
                return Err(Error::InvalidParameter {
                    protocol: "hybrid".into(),
                    reason: format!("mode must be `auto` or `real`, got `{other}`"),
                })
            }
        };
        let selector = match parse_ratio(p_text).and_then(|r| r.dyadic_bits().map(|b| (r, b))) {
            Some((r, bits)) if !force_real && r.numerator >= 0 => Selector::Dyadic {
                bits,
                numerator: r.numerator as u64,
            },
            _ => Selector::Real(T::lit(parse_number(p_text)?)),
        };
        Protocol::hybrid(selector, a, b)
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)?;
        if !self.params.is_empty() {
            let body: Vec<String> = self
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            write!(f, "({})", body.join(","))?;
        }
        Ok(())
    }
}

fn split_top_level(body: &str) -> std::result::Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in body.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced parentheses".into());
                }
            }
            ',' if depth == 0 => {
                out.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    out.push(&body[start..]);
    Ok(out)
}

fn parse_pair(item: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = item
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{}`", item.trim()))?;
    let k = k.trim();
    if k.is_empty() {
        return Err("empty parameter name".into());
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// Parses `key=value` as given on the command line.
pub(crate) fn parse_cli_param(item: &str) -> Result<(String, String)> {
    parse_pair(item).map_err(|r| parse_err(item, r))
}

impl std::str::FromStr for ProtocolSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolSpec::parse(s)
    }
}

impl ProtocolSpec {
    /// Builds from an id plus `key=value` strings, as the CLI receives them.
    pub fn from_cli(protocol: &str, params: &[String]) -> Result<Self> {
        let base = ProtocolSpec::parse(protocol)?;
        let extra = params
            .iter()
            .map(|p| parse_cli_param(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(base.with_params(extra))
    }
}
