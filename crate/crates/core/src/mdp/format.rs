//! Line-oriented text format for tabular MDPs.
//!
//! ```text
//! ermtree-mdp 1
//! states 4
//! actions 2
//! gamma 0.9
//! horizon 100
//! initial 0
//! bound 20
//! [transitions]
//! # action state next_state probability; omitted entries are 0
//! 0 0 2 0.9
//! ...
//! [costs]
//! # state action cost; every pair is required
//! 0 0 0
//! ...
//! [terminal]
//! # state cost; every state is required
//! 0 0
//! ...
//! [end]
//! ```
//!
//! `#` starts a comment. Floats are written with Rust's shortest round-trip
//! formatting, so save followed by load reproduces the model bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::TabularMdp;
use crate::error::{Error, Result};

pub const FORMAT_HEADER: &str = "ermtree-mdp 1";

pub fn write_mdp(mdp: &TabularMdp) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER}");
    let _ = writeln!(out, "states {}", mdp.num_states);
    let _ = writeln!(out, "actions {}", mdp.num_actions);
    let _ = writeln!(out, "gamma {}", mdp.gamma);
    let _ = writeln!(out, "horizon {}", mdp.horizon);
    let _ = writeln!(out, "initial {}", mdp.initial_state);
    let _ = writeln!(out, "bound {}", mdp.cost_bound);
    out.push_str("[transitions]\n");
    for (a, matrix) in mdp.transition.iter().enumerate() {
        for (s, row) in matrix.iter().enumerate() {
            for (t, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    let _ = writeln!(out, "{a} {s} {t} {p}");
                }
            }
        }
    }
    out.push_str("[costs]\n");
    for (s, row) in mdp.stage_cost.iter().enumerate() {
        for (a, &c) in row.iter().enumerate() {
            let _ = writeln!(out, "{s} {a} {c}");
        }
    }
    out.push_str("[terminal]\n");
    for (s, &c) in mdp.terminal_cost.iter().enumerate() {
        let _ = writeln!(out, "{s} {c}");
    }
    out.push_str("[end]\n");
    out
}

pub fn save_mdp(mdp: &TabularMdp, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mdp(mdp))?;
    Ok(())
}

/// Parses and validates.
pub fn load_mdp(path: impl AsRef<Path>) -> Result<TabularMdp> {
    parse_mdp(&fs::read_to_string(path)?)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Transitions,
    Costs,
    Terminal,
    End,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} '{tok}'")))
}

fn index(tok: Option<&str>, line: usize, what: &str, size: usize) -> Result<usize> {
    let i: usize = field(tok, line, what)?;
    if i >= size {
        return Err(parse_err(line, format!("{what} {i} out of range (size {size})")));
    }
    Ok(i)
}

/// Parses the text format and validates the result; structural problems are
/// [`Error::Parse`], semantic ones [`Error::InvalidMdp`].
pub fn parse_mdp(text: &str) -> Result<TabularMdp> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, l)) if l == FORMAT_HEADER => {}
        Some((n, l)) => return Err(parse_err(n, format!("expected '{FORMAT_HEADER}', got '{l}'"))),
        None => return Err(parse_err(0, "empty input")),
    }

    let mut states = None;
    let mut actions = None;
    let mut gamma = None;
    let mut horizon = None;
    let mut initial = None;
    let mut bound = None;
    let mut section = Section::Header;
    let mut mdp: Option<TabularMdp> = None;
    let mut cost_seen: Vec<Vec<bool>> = Vec::new();
    let mut terminal_seen: Vec<bool> = Vec::new();
    let mut last_line = 0;

    for (n, line) in lines {
        last_line = n;
        if section == Section::End {
            return Err(parse_err(n, "content after [end]"));
        }
        if line.starts_with('[') {
            let next = match line {
                "[transitions]" => Section::Transitions,
                "[costs]" => Section::Costs,
                "[terminal]" => Section::Terminal,
                "[end]" => Section::End,
                _ => return Err(parse_err(n, format!("unknown section '{line}'"))),
            };
            let order = |s: Section| s as u8;
            if order(next) <= order(section) {
                return Err(parse_err(n, format!("section '{line}' out of order")));
            }
            if mdp.is_none() {
                let ns: usize = states.ok_or_else(|| parse_err(n, "missing 'states'"))?;
                let na: usize = actions.ok_or_else(|| parse_err(n, "missing 'actions'"))?;
                if ns == 0 || na == 0 {
                    return Err(parse_err(n, "states and actions must be >= 1"));
                }
                mdp = Some(TabularMdp {
                    num_states: ns,
                    num_actions: na,
                    transition: vec![vec![vec![0.0; ns]; ns]; na],
                    stage_cost: vec![vec![0.0; na]; ns],
                    terminal_cost: vec![0.0; ns],
                    gamma: gamma.ok_or_else(|| parse_err(n, "missing 'gamma'"))?,
                    horizon: horizon.ok_or_else(|| parse_err(n, "missing 'horizon'"))?,
                    initial_state: initial.ok_or_else(|| parse_err(n, "missing 'initial'"))?,
                    cost_bound: bound.ok_or_else(|| parse_err(n, "missing 'bound'"))?,
                });
                cost_seen = vec![vec![false; na]; ns];
                terminal_seen = vec![false; ns];
            }
            section = next;
            continue;
        }

        let mut toks = line.split_whitespace();
        match section {
            Section::Header => {
                let key = toks.next().unwrap_or("");
                let value = toks.next();
                match key {
                    "states" => states = Some(field(value, n, "states")?),
                    "actions" => actions = Some(field(value, n, "actions")?),
                    "gamma" => gamma = Some(field(value, n, "gamma")?),
                    "horizon" => horizon = Some(field(value, n, "horizon")?),
                    "initial" => initial = Some(field(value, n, "initial")?),
                    "bound" => bound = Some(field(value, n, "bound")?),
                    _ => return Err(parse_err(n, format!("unknown key '{key}'"))),
                }
            }
            Section::Transitions => {
                let m = mdp.as_mut().expect("model allocated at first section");
                let a = index(toks.next(), n, "action", m.num_actions)?;
                let s = index(toks.next(), n, "state", m.num_states)?;
                let t = index(toks.next(), n, "next state", m.num_states)?;
                m.transition[a][s][t] = field(toks.next(), n, "probability")?;
            }
            Section::Costs => {
                let m = mdp.as_mut().expect("model allocated at first section");
                let s = index(toks.next(), n, "state", m.num_states)?;
                let a = index(toks.next(), n, "action", m.num_actions)?;
                m.stage_cost[s][a] = field(toks.next(), n, "cost")?;
                cost_seen[s][a] = true;
            }
            Section::Terminal => {
                let m = mdp.as_mut().expect("model allocated at first section");
                let s = index(toks.next(), n, "state", m.num_states)?;
                m.terminal_cost[s] = field(toks.next(), n, "cost")?;
                terminal_seen[s] = true;
            }
            Section::End => unreachable!(),
        }
        if toks.next().is_some() {
            return Err(parse_err(n, "trailing tokens"));
        }
    }

    if section != Section::End {
        return Err(parse_err(last_line, "truncated input: missing [end]"));
    }
    let mdp = mdp.expect("reached [end] so the model exists");
    for (s, row) in cost_seen.iter().enumerate() {
        if let Some(a) = row.iter().position(|&seen| !seen) {
            return Err(parse_err(last_line, format!("missing cost for state {s} action {a}")));
        }
    }
    if let Some(s) = terminal_seen.iter().position(|&seen| !seen) {
        return Err(parse_err(last_line, format!("missing terminal cost for state {s}")));
    }
    mdp.validate()?;
    Ok(mdp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{mdp4, random_mdp, MdpViolation};

    #[test]
    fn round_trip_mdp4() {
        let m = mdp4(0.1, 0.1).unwrap();
        assert_eq!(parse_mdp(&write_mdp(&m)).unwrap(), m);
    }

    #[test]
    fn round_trip_random() {
        for seed in 0..20 {
            let m = random_mdp(5, 3, 4, 0.93, 7.5, seed).unwrap();
            assert_eq!(parse_mdp(&write_mdp(&m)).unwrap(), m);
        }
    }

    #[test]
    fn truncated_file() {
        let text = write_mdp(&mdp4(0.1, 0.1).unwrap());
        let cut = &text[..text.find("[terminal]").unwrap()];
        let err = parse_mdp(cut).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(err.to_string().contains("missing [end]"));
    }

    #[test]
    fn negative_probability_is_reported() {
        let text = write_mdp(&mdp4(0.1, 0.1).unwrap()).replace("0 0 2 0.9", "0 0 2 -0.9");
        match parse_mdp(&text).unwrap_err() {
            Error::InvalidMdp(v) => assert!(v.iter().any(|x| matches!(
                x,
                MdpViolation::NegativeProbability { action: 0, state: 0, next_state: 2, .. }
            ))),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn structural_errors_carry_line_numbers() {
        let text = write_mdp(&mdp4(0.1, 0.1).unwrap());
        let bad = text.replace("horizon 100", "horizon x");
        assert!(matches!(parse_mdp(&bad), Err(Error::Parse { line: 5, .. })));
        assert!(parse_mdp("nope").is_err());
        assert!(parse_mdp("").is_err());
        let oob = text.replace("[costs]\n", "[costs]\n9 0 1\n");
        assert!(matches!(parse_mdp(&oob), Err(Error::Parse { .. })));
        let missing = text.replace("3 1 20\n", "");
        assert!(parse_mdp(&missing).unwrap_err().to_string().contains("state 3 action 1"));
        let extra = format!("{text}0 0\n");
        assert!(parse_mdp(&extra).is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = write_mdp(&mdp4(0.1, 0.1).unwrap())
            .replace("[costs]\n", "\n# stage costs\n[costs]   # trailing\n");
        assert_eq!(parse_mdp(&text).unwrap(), mdp4(0.1, 0.1).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = random_mdp(3, 2, 3, 0.9, 2.0, 7).unwrap();
        save_mdp(&m, &path).unwrap();
        assert_eq!(load_mdp(&path).unwrap(), m);
        assert!(matches!(load_mdp(dir.path().join("missing")), Err(Error::Io(_))));
    }
}
