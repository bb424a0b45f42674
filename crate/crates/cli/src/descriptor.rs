//! Landscape descriptors and angle tokens given on the command line.
//!
//! A descriptor is either `l1`, `m` or `mfull` (reduced landscapes), or a
//! chart such as `conv=zyz,yzy freeze=a1:0,g1:pi/2 measured=1 target=2`.
//! Both forms accept `pin=name:value,...`, holding coordinates fixed during
//! a critical-point search while keeping the full gradient. Charts also take
//! `identity=1` or `identity=2` to make that factor the identity.

use std::f64::consts::PI;

use kinscape::critana::ExtremeValues;
use kinscape::landscape::{Chart, Landscape, Reduced};
use kinscape::quantum::Level;
use kinscape::su2rep::Convention;

use crate::CliError;

/// Parses radians: a decimal number, or `[-][k*]pi[/n]` such as `pi/2`,
/// `-pi`, `3*pi/4`.
pub fn parse_angle(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Usage(format!("bad angle {s:?}; use radians or tokens like pi, pi/2, 3*pi/4"));
    let t = s.trim();
    if !t.contains("pi") {
        return t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    }
    let (sign, rest) = match t.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, t),
    };
    let (head, den) = match rest.split_once('/') {
        Some((h, d)) => (h, d.parse::<f64>().ok().filter(|d| *d != 0.0 && d.is_finite()).ok_or_else(bad)?),
        None => (rest, 1.0),
    };
    let coeff = match head.strip_suffix("pi").ok_or_else(bad)? {
        "" => 1.0,
        k => k.strip_suffix('*').and_then(|k| k.parse::<f64>().ok()).ok_or_else(bad)?,
    };
    Ok(sign * coeff * PI / den)
}

fn parse_assignments(s: &str) -> Result<Vec<(String, f64)>, CliError> {
    s.split(',')
        .map(|item| {
            let (name, value) = item
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("expected name:value, got {item:?}")))?;
            Ok((name.to_string(), parse_angle(value)?))
        })
        .collect()
}

fn parse_level(s: &str) -> Result<Level, CliError> {
    s.parse::<u8>()
        .ok()
        .and_then(|n| Level::from_number(n).ok())
        .ok_or_else(|| CliError::Usage(format!("bad level {s:?}; expected 1, 2 or 3")))
}

fn parse_convention(s: &str) -> Result<Convention, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "zyz" => Ok(Convention::Zyz),
        "yzy" => Ok(Convention::Yzy),
        _ => Err(CliError::Usage(format!("bad convention {s:?}; expected zyz or yzy"))),
    }
}

/// A parsed descriptor.
pub struct LandscapeSpec {
    pub landscape: Box<dyn Landscape + Send>,
    /// Indices into the landscape coordinates, with their fixed values.
    pub pins: Vec<(usize, f64)>,
    /// Exact extremes when known in closed form.
    pub extremes: Option<ExtremeValues>,
}

impl LandscapeSpec {
    pub fn describe(&self) -> String {
        let names = self.landscape.names();
        let mut s = self.landscape.describe();
        if !self.pins.is_empty() {
            let pins: Vec<String> = self.pins.iter().map(|(i, v)| format!("{}:{}", names[*i], v)).collect();
            s.push_str(&format!(" pin={}", pins.join(",")));
        }
        s
    }
}

pub fn parse_descriptor(s: &str) -> Result<LandscapeSpec, CliError> {
    let mut tokens = s.split_whitespace();
    let first = tokens.next().ok_or_else(|| CliError::Usage("empty landscape descriptor".into()))?;
    let reduced = match first {
        "l1" => Some(Reduced::L1),
        "m" => Some(Reduced::M),
        "mfull" => Some(Reduced::MFull),
        _ => None,
    };
    let rest: Vec<&str> = if reduced.is_some() { tokens.collect() } else { s.split_whitespace().collect() };

    let mut conv = None;
    let mut freeze = Vec::new();
    let mut pins = Vec::new();
    let mut identity = None;
    let mut measured = Level::One;
    let mut target = Level::Two;
    for tok in rest {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value in descriptor, got {tok:?}")))?;
        let chart_only = reduced.is_some() && key != "pin";
        if chart_only {
            return Err(CliError::Usage(format!("{key}= does not apply to reduced landscape {first}")));
        }
        match key {
            "conv" => {
                let (a, b) = value
                    .split_once(',')
                    .ok_or_else(|| CliError::Usage(format!("conv expects two conventions, got {value:?}")))?;
                conv = Some((parse_convention(a)?, parse_convention(b)?));
            }
            "freeze" => freeze = parse_assignments(value)?,
            "pin" => pins = parse_assignments(value)?,
            "identity" => {
                identity = Some(match value {
                    "1" => 0,
                    "2" => 1,
                    _ => return Err(CliError::Usage(format!("identity expects 1 or 2, got {value:?}"))),
                })
            }
            "measured" => measured = parse_level(value)?,
            "target" => target = parse_level(value)?,
            _ => return Err(CliError::Usage(format!("unknown descriptor key {key:?}"))),
        }
    }

    let (landscape, extremes): (Box<dyn Landscape + Send>, _) = match reduced {
        Some(r) => (Box::new(r), Some(ExtremeValues::for_reduced(r))),
        None => {
            let (a, b) = conv.ok_or_else(|| CliError::Usage("chart descriptor needs conv=..,..".into()))?;
            let mut chart = Chart::new(a, b, measured, target)?;
            if let Some(f) = identity {
                chart = chart.identity_factor(f)?;
            }
            for (name, v) in &freeze {
                chart = chart.freeze(name, *v)?;
            }
            (Box::new(chart), ExtremeValues::known(measured, target))
        }
    };
    let names = landscape.names();
    let pins = pins
        .into_iter()
        .map(|(name, v)| {
            let i = names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| CliError::Usage(format!("cannot pin {name:?}; free coordinates are {}", names.join(","))))?;
            Ok((i, v))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(LandscapeSpec { landscape, pins, extremes })
}
