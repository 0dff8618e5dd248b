//! Plain-text scenario and allocation files.
//!
//! ```text
//! # tapc scenario v1
//! # units: gains linear, noise_density W/Hz, bandwidth Hz, power_limits W, demands bit/s
//! cells = 2
//! users = 3
//! noise_density = 3.981071705534969e-21
//! bandwidth = 1.8e7
//! power_limits = 1e1 1e1
//! serving = 0 0 1
//! demands = 1e6 1e6 1e6
//! gains:
//! 1e-9 2e-9 3e-12
//! 4e-12 5e-12 6e-10
//! ```
//!
//! One gains row per cell, one column per user. Floats are written in
//! shortest round-trip exponent form so a write/parse cycle is bit-exact.
//! Lines starting with `#` and blank lines are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Allocation, NetworkScenario};
use crate::error::ModelError;

fn join(values: &[f64]) -> String {
    let mut out = String::new();
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{v:e}").unwrap();
    }
    out
}

pub fn write_scenario(sc: &NetworkScenario) -> String {
    let mut s = String::new();
    s.push_str("# tapc scenario v1\n");
    s.push_str(
        "# units: gains linear, noise_density W/Hz, bandwidth Hz, power_limits W, demands bit/s\n",
    );
    writeln!(s, "cells = {}", sc.cell_count()).unwrap();
    writeln!(s, "users = {}", sc.user_count()).unwrap();
    writeln!(s, "noise_density = {:e}", sc.noise_density()).unwrap();
    writeln!(s, "bandwidth = {:e}", sc.bandwidth()).unwrap();
    writeln!(s, "power_limits = {}", join(sc.power_limits())).unwrap();
    let serving: Vec<String> = sc.serving().iter().map(usize::to_string).collect();
    writeln!(s, "serving = {}", serving.join(" ")).unwrap();
    writeln!(s, "demands = {}", join(sc.demands())).unwrap();
    s.push_str("gains:\n");
    for row in sc.gains() {
        writeln!(s, "{}", join(row)).unwrap();
    }
    s
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_floats(line: usize, text: &str) -> Result<Vec<f64>, ModelError> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| ModelError::parse(line, format!("not a number: {tok:?}")))
        })
        .collect()
}

struct KeyValues<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
    last_line: usize,
}

impl<'a> KeyValues<'a> {
    fn get(&self, key: &str) -> Result<(usize, &'a str), ModelError> {
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| ModelError::parse(self.last_line, format!("missing key `{key}`")))
    }

    fn count(&self, key: &str) -> Result<usize, ModelError> {
        let (line, v) = self.get(key)?;
        v.parse()
            .map_err(|_| ModelError::parse(line, format!("`{key}` is not a count: {v:?}")))
    }

    fn float(&self, key: &str) -> Result<f64, ModelError> {
        let (line, v) = self.get(key)?;
        v.parse()
            .map_err(|_| ModelError::parse(line, format!("`{key}` is not a number: {v:?}")))
    }

    fn floats(&self, key: &str, len: usize) -> Result<Vec<f64>, ModelError> {
        let (line, v) = self.get(key)?;
        let out = parse_floats(line, v)?;
        if out.len() != len {
            return Err(ModelError::parse(
                line,
                format!("`{key}` has {} values, expected {len}", out.len()),
            ));
        }
        Ok(out)
    }
}

/// Reads `key = value` lines until `stop` (exclusive). Returns the map and the
/// remaining lines.
fn read_header<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
    stop: Option<&str>,
) -> Result<KeyValues<'a>, ModelError> {
    let mut map = HashMap::new();
    let mut last_line = 0;
    while let Some(&(line, text)) = lines.peek() {
        if Some(text) == stop {
            break;
        }
        lines.next();
        last_line = line;
        let (key, value) = text.split_once('=').ok_or_else(|| {
            ModelError::parse(line, format!("expected `key = value`, got {text:?}"))
        })?;
        if map.insert(key.trim(), (line, value.trim())).is_some() {
            return Err(ModelError::parse(
                line,
                format!("duplicate key `{}`", key.trim()),
            ));
        }
    }
    Ok(KeyValues { map, last_line })
}

pub fn parse_scenario(text: &str) -> Result<NetworkScenario, ModelError> {
    let mut lines = content_lines(text).peekable();
    let kv = read_header(&mut lines, Some("gains:"))?;
    let cells = kv.count("cells")?;
    let users = kv.count("users")?;
    let noise = kv.float("noise_density")?;
    let bandwidth = kv.float("bandwidth")?;
    let limits = kv.floats("power_limits", cells)?;
    let demands = kv.floats("demands", users)?;
    let (serving_line, serving_text) = kv.get("serving")?;
    let serving: Vec<usize> = serving_text
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| ModelError::parse(serving_line, format!("not a cell index: {t:?}")))
        })
        .collect::<Result<_, _>>()?;
    if serving.len() != users {
        return Err(ModelError::parse(
            serving_line,
            format!("`serving` has {} entries, expected {users}", serving.len()),
        ));
    }
    let gains_line = match lines.next() {
        Some((line, _)) => line,
        None => return Err(ModelError::parse(kv.last_line, "missing `gains:` section")),
    };
    let mut gains = Vec::with_capacity(cells);
    let mut last = gains_line;
    for (line, text) in lines {
        last = line;
        if gains.len() == cells {
            return Err(ModelError::parse(line, "more gain rows than cells"));
        }
        let row = parse_floats(line, text)?;
        if row.len() != users {
            return Err(ModelError::parse(
                line,
                format!("gain row has {} values, expected {users}", row.len()),
            ));
        }
        if let Some(bad) = row.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(ModelError::parse(
                line,
                format!("gain must be positive, got {bad:e}"),
            ));
        }
        gains.push(row);
    }
    if gains.len() != cells {
        return Err(ModelError::parse(
            last,
            format!("{} gain rows, expected {cells}", gains.len()),
        ));
    }
    NetworkScenario::new(gains, serving, demands, limits, noise, bandwidth)
}

pub fn write_allocation(alloc: &Allocation) -> String {
    let mut s = String::new();
    s.push_str("# tapc allocation v1\n");
    s.push_str("# units: loads fraction, avg_power (load x power density) W/Hz, rates bit/s\n");
    writeln!(s, "users = {}", alloc.user_count()).unwrap();
    writeln!(s, "loads = {}", join(&alloc.load)).unwrap();
    writeln!(s, "avg_power = {}", join(&alloc.avg_power)).unwrap();
    writeln!(s, "rates = {}", join(&alloc.rate)).unwrap();
    s
}

pub fn parse_allocation(text: &str) -> Result<Allocation, ModelError> {
    let mut lines = content_lines(text).peekable();
    let kv = read_header(&mut lines, None)?;
    let users = kv.count("users")?;
    Ok(Allocation {
        load: kv.floats("loads", users)?,
        avg_power: kv.floats("avg_power", users)?,
        rate: kv.floats("rates", users)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_scenario, ScenarioGenConfig};

    #[test]
    fn scenario_round_trip_is_exact() {
        let sc = generate_scenario(&ScenarioGenConfig {
            sites: 2,
            users_per_cell: 3,
            ..ScenarioGenConfig::default()
        })
        .unwrap();
        let text = write_scenario(&sc);
        let back = parse_scenario(&text).unwrap();
        assert_eq!(sc, back);
        assert_eq!(text, write_scenario(&back));
    }

    #[test]
    fn allocation_round_trip_is_exact() {
        let alloc = Allocation {
            load: vec![0.1, 0.2 + 1e-17, 1.0 / 3.0],
            avg_power: vec![1e-13, 0.0, 7.123456789e-12],
            rate: vec![1e6, 0.0, 1.5e6],
        };
        assert_eq!(parse_allocation(&write_allocation(&alloc)).unwrap(), alloc);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let good = write_scenario(
            &NetworkScenario::single_cell(vec![1e-9, 2e-9], vec![1e6, 1e6], 1.0, 4e-21, 1e6)
                .unwrap(),
        );
        let bad = good.replace("2e-9", "-2e-9");
        let line = bad.lines().position(|l| l.contains("-2e-9")).unwrap() + 1;
        assert_eq!(
            parse_scenario(&bad).unwrap_err(),
            ModelError::parse(line, "gain must be positive, got -2e-9")
        );

        let bad = good.replace("bandwidth = 1e6", "bandwidth = wide");
        match parse_scenario(&bad) {
            Err(ModelError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }

        let truncated: String = good.lines().take(9).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            parse_scenario(&truncated),
            Err(ModelError::Parse { .. })
        ));
    }
}
