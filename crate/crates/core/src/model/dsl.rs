//! Line-oriented reaction DSL.
//!
//! ```text
//! # comment
//! species: X Y
//! 1.0 : -> X
//! 1.0 : 2 X + Y -> 3 X
//! ```
//!
//! Each side is a `+`-separated list of `[coefficient] species` terms or
//! empty. Coefficients default to 1 and may be written attached (`2X`).

use std::fmt::Write as _;

use thiserror::Error;

use super::{ModelError, Reaction, ReactionNetwork};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown species `{name}`")]
    UnknownSpecies {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("line {line}, column {column}: coefficient `{text}` is not a nonnegative integer")]
    NonIntegerCoefficient {
        line: usize,
        column: usize,
        text: String,
    },
    #[error("line {line}, column {column}: rate constant {rate} must be positive")]
    NonPositiveRate { line: usize, column: usize, rate: f64 },
    #[error("empty network source")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct RawReaction {
    rate: f64,
    lhs: Vec<(String, u32)>,
    rhs: Vec<(String, u32)>,
}

/// Parse reaction-DSL source into a network of system size `omega`.
///
/// Species are ordered by the `species:` line when present, otherwise by
/// first appearance.
pub fn parse_network(text: &str, omega: f64) -> Result<ReactionNetwork, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut declared: Option<Vec<String>> = None;
    let mut order: Vec<String> = Vec::new();
    let mut raws = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.trim_start().strip_prefix("species:") {
            if declared.is_some() {
                return Err(syntax(line_no, 1, "duplicate species declaration"));
            }
            let offset = line.len() - rest.len();
            let mut names = Vec::new();
            for (col, tok) in tokens(rest) {
                if !is_identifier(tok) {
                    return Err(syntax(line_no, offset + col + 1, format!("invalid species name `{tok}`")));
                }
                if names.iter().any(|n| n == tok) {
                    return Err(ModelError::DuplicateSpecies(tok.to_string()).into());
                }
                names.push(tok.to_string());
            }
            if names.is_empty() {
                return Err(syntax(line_no, offset + 1, "species declaration lists no species"));
            }
            declared = Some(names);
            continue;
        }
        let r = parse_reaction(line, line_no)?;
        for (name, _) in r.lhs.iter().chain(&r.rhs) {
            if !order.contains(name) {
                order.push(name.clone());
            }
        }
        raws.push((line_no, line.to_string(), r));
    }

    if raws.is_empty() {
        return Err(ParseError::Empty);
    }

    let species = match declared {
        Some(decl) => {
            for (line_no, line, r) in &raws {
                for (name, _) in r.lhs.iter().chain(&r.rhs) {
                    if !decl.contains(name) {
                        let column = find_token(line, name).map_or(1, |c| c + 1);
                        return Err(ParseError::UnknownSpecies {
                            line: *line_no,
                            column,
                            name: name.clone(),
                        });
                    }
                }
            }
            decl
        }
        None => order,
    };

    let k = species.len();
    let index = |name: &str| species.iter().position(|s| s == name).expect("species resolved");
    let reactions = raws
        .into_iter()
        .map(|(_, _, r)| {
            let mut s = vec![0u32; k];
            let mut p = vec![0u32; k];
            for (name, c) in &r.lhs {
                s[index(name)] += c;
            }
            for (name, c) in &r.rhs {
                p[index(name)] += c;
            }
            Reaction {
                rate_constant: r.rate,
                reactant_coeffs: s,
                product_coeffs: p,
            }
        })
        .collect();

    Ok(ReactionNetwork::new(species, reactions, omega)?)
}

fn parse_reaction(line: &str, line_no: usize) -> Result<RawReaction, ParseError> {
    let colon = line
        .find(':')
        .ok_or_else(|| syntax(line_no, 1, "expected `<rate> : <lhs> -> <rhs>`"))?;
    let rate_text = line[..colon].trim();
    let rate_col = line[..colon].find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1;
    let rate: f64 = rate_text
        .parse()
        .map_err(|_| syntax(line_no, rate_col, format!("invalid rate constant `{rate_text}`")))?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(ParseError::NonPositiveRate {
            line: line_no,
            column: rate_col,
            rate,
        });
    }
    let body = &line[colon + 1..];
    let arrow = body
        .find("->")
        .ok_or_else(|| syntax(line_no, colon + 2, "missing `->`"))?;
    if body[arrow + 2..].contains("->") {
        return Err(syntax(line_no, colon + 2 + arrow + 2, "more than one `->`"));
    }
    let lhs = parse_side(&body[..arrow], line_no, colon + 1)?;
    let rhs = parse_side(&body[arrow + 2..], line_no, colon + 1 + arrow + 2)?;
    if lhs.is_empty() && rhs.is_empty() {
        return Err(syntax(line_no, colon + 2, "reaction has no reactants and no products"));
    }
    Ok(RawReaction { rate, lhs, rhs })
}

/// `offset` is the byte position of `side` within the line.
fn parse_side(side: &str, line_no: usize, offset: usize) -> Result<Vec<(String, u32)>, ParseError> {
    let trimmed = side.trim();
    if trimmed.is_empty() || trimmed == "∅" || trimmed == "0" {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    let mut pos = 0;
    for part in side.split('+') {
        let col = offset + pos + part.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1;
        pos += part.len() + 1;
        let t = part.trim();
        if t.is_empty() {
            return Err(syntax(line_no, col, "empty term"));
        }
        terms.push(parse_term(t, line_no, col)?);
    }
    Ok(terms)
}

fn parse_term(t: &str, line_no: usize, col: usize) -> Result<(String, u32), ParseError> {
    let split = t
        .find(|c: char| c.is_alphabetic() || c == '_')
        .ok_or_else(|| syntax(line_no, col, format!("term `{t}` names no species")))?;
    let (coef_text, name) = (t[..split].trim(), t[split..].trim());
    let coef = if coef_text.is_empty() {
        1
    } else {
        coef_text
            .parse::<u32>()
            .map_err(|_| ParseError::NonIntegerCoefficient {
                line: line_no,
                column: col,
                text: coef_text.to_string(),
            })?
    };
    if !is_identifier(name) {
        return Err(syntax(line_no, col + split, format!("invalid species name `{name}`")));
    }
    Ok((name.to_string(), coef))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn tokens(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split_whitespace().map(move |tok| {
        let col = tok.as_ptr() as usize - s.as_ptr() as usize;
        (col, tok)
    })
}

fn find_token(line: &str, name: &str) -> Option<usize> {
    line.match_indices(name).map(|(i, _)| i).find(|&i| {
        let before = line[..i].chars().next_back();
        let after = line[i + name.len()..].chars().next();
        !before.is_some_and(|c| c.is_alphabetic() || c == '_')
            && !after.is_some_and(|c| c.is_alphanumeric() || c == '_')
    })
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

pub(super) fn serialize(net: &ReactionNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "species: {}", net.species().join(" "));
    let side = |coeffs: &[u32]| {
        coeffs
            .iter()
            .zip(net.species())
            .filter(|(c, _)| **c > 0)
            .map(|(c, s)| if *c == 1 { s.clone() } else { format!("{c} {s}") })
            .collect::<Vec<_>>()
            .join(" + ")
    };
    for r in net.reactions() {
        // `{:?}` keeps a round-trippable representation of the rate
        let _ = writeln!(
            out,
            "{:?} : {} -> {}",
            r.rate_constant,
            side(&r.reactant_coeffs),
            side(&r.product_coeffs)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BRUSSELATOR: &str = "species: X Y\n1.0 : -> X\n2.5 : X -> Y\n1.0 : 2 X + Y -> 3 X\n1.0 : X -> \n";

    #[test]
    fn pure_birth() {
        let net = parse_network("1.0 : -> X", 100.0).unwrap();
        assert_eq!(net.num_species(), 1);
        assert_eq!(net.num_reactions(), 1);
        assert_eq!(net.stoichiometric_matrix(), vec![vec![1]]);
        assert_eq!(net.omega(), 100.0);
    }

    #[test]
    fn brusselator_stoichiometry() {
        let net = parse_network(BRUSSELATOR, 3000.0).unwrap();
        assert_eq!(net.species(), ["X", "Y"]);
        assert_eq!(
            net.stoichiometric_matrix(),
            vec![vec![1, -1, 1, -1], vec![0, 1, -1, 0]]
        );
    }

    #[test]
    fn attached_coefficients() {
        let net = parse_network("1.0 : 2X + Y -> 3X", 1.0).unwrap();
        assert_eq!(net.stoichiometric_matrix(), vec![vec![1], vec![-1]]);
        assert_eq!(net.reactions()[0].reactant_coeffs, vec![2, 1]);
    }

    #[test]
    fn first_appearance_order_without_declaration() {
        let net = parse_network("1 : B -> A\n1 : C -> ", 1.0).unwrap();
        assert_eq!(net.species(), ["B", "A", "C"]);
    }

    #[test]
    fn catalyst_has_zero_column() {
        let net = parse_network("1 : E + S -> E + P", 1.0).unwrap();
        assert_eq!(net.stoich(0, 0), 0);
        assert_eq!(net.propensities(&[2.0, 3.0, 0.0])[0], 6.0);
    }

    #[test]
    fn errors_carry_locations() {
        match parse_network("1.0 : X => Y", 1.0) {
            Err(ParseError::Syntax { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_network("species: X\n1.0 : X -> Z", 1.0) {
            Err(ParseError::UnknownSpecies { line: 2, column: 12, name }) => assert_eq!(name, "Z"),
            other => panic!("{other:?}"),
        }
        match parse_network("1.0 : 1.5 X -> ", 1.0) {
            Err(ParseError::NonIntegerCoefficient { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_network("# c\n-2 : X -> ", 1.0) {
            Err(ParseError::NonPositiveRate { line: 2, column: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_network("  \n", 1.0).unwrap_err(), ParseError::Empty);
        assert!(matches!(
            parse_network("1 : -> ", 1.0),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn serialize_round_trip() {
        let net = parse_network(BRUSSELATOR, 3000.0).unwrap();
        let again = parse_network(&net.to_dsl(), 3000.0).unwrap();
        assert_eq!(net, again);
    }
}
