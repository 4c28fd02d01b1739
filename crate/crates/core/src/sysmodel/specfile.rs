//! Line-oriented system spec files.
//!
//! ```text
//! # comment
//! kind: difference            # or delta, ode
//! vars: x y
//! param a = 1/2
//! param b                     # symbolic
//! fn psi inverse=psi_inv deriv=2*u def=u^2 arg=u nonvanishing
//! A = [1, -1, 0.5]            # periodic coefficient A(n)
//! eq x = a*x + y
//! eq y = psi(x)
//! guard x - 1 != 0
//! ```

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;

use super::{System, SystemError, SystemKind};
use crate::expr::{parse_expr_with, parse_rational, Expr, ExprError, FnRegistry, FnSymbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ExprError },
    #[error(transparent)]
    System(#[from] SystemError),
}

fn line_err(line: usize, message: impl Into<String>) -> SpecError {
    SpecError::Line {
        line,
        message: message.into(),
    }
}

struct FnDecl {
    line: usize,
    name: String,
    options: BTreeMap<String, String>,
    nonvanishing: bool,
}

const FN_KEYS: [&str; 4] = ["inverse", "deriv", "def", "arg"];

fn parse_fn_line(line: usize, rest: &str) -> Result<FnDecl, SpecError> {
    let mut words = rest.split_whitespace();
    let name = words
        .next()
        .ok_or_else(|| line_err(line, "fn declaration needs a name"))?
        .to_string();
    let mut options: BTreeMap<String, String> = BTreeMap::new();
    let mut nonvanishing = false;
    let mut current: Option<String> = None;
    for w in words {
        if w == "nonvanishing" {
            nonvanishing = true;
            current = None;
            continue;
        }
        match w.split_once('=') {
            Some((key, value)) if FN_KEYS.contains(&key) => {
                options.insert(key.to_string(), value.to_string());
                current = Some(key.to_string());
            }
            _ => match &current {
                // Values may contain spaces; continue the previous one.
                Some(key) => {
                    let v = options.get_mut(key).unwrap();
                    v.push(' ');
                    v.push_str(w);
                }
                None => return Err(line_err(line, format!("unexpected `{w}` in fn declaration"))),
            },
        }
    }
    Ok(FnDecl {
        line,
        name,
        options,
        nonvanishing,
    })
}

fn parse_list(line: usize, text: &str) -> Result<Vec<BigRational>, SpecError> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| line_err(line, "periodic list must be written [a0, a1, ...]"))?;
    let values = inner
        .split(',')
        .map(|v| parse_rational(v).map_err(|source| SpecError::Expr { line, source }))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() || values.len() > 64 {
        return Err(line_err(line, "periodic list must have between 1 and 64 entries"));
    }
    Ok(values)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn build_registry(fn_decls: &[FnDecl], tables: &[(usize, String, Vec<BigRational>)]) -> Result<FnRegistry, SpecError> {
    // Register every name first so declarations may refer to each other.
    let mut fns = FnRegistry::new();
    for d in fn_decls {
        fns.declare(FnSymbol::opaque(&d.name));
        if let Some(inv) = d.options.get("inverse") {
            fns.declare(FnSymbol::opaque(inv));
        }
    }
    for (_, name, table) in tables {
        fns.declare(FnSymbol::periodic(name, table.clone()));
    }
    for d in fn_decls {
        let mut sym = fns.get(&d.name).cloned().unwrap();
        if let Some(arg) = d.options.get("arg") {
            sym.arg = arg.trim().to_string();
        }
        let parse = |key: &str| -> Result<Option<Expr>, SpecError> {
            d.options
                .get(key)
                .map(|t| parse_expr_with(t, &fns).map_err(|source| SpecError::Expr { line: d.line, source }))
                .transpose()
        };
        sym.derivative = parse("deriv")?;
        sym.definition = parse("def")?;
        sym.nonvanishing = d.nonvanishing;
        fns.declare(sym);
        if let Some(inv) = d.options.get("inverse") {
            fns.declare_inverse_pair(&d.name, inv);
        }
    }
    Ok(fns)
}

/// Builds a registry from declarations in `fn` line syntax, without the
/// leading keyword (`psi def=u^2`).
pub fn parse_fn_decls<S: AsRef<str>>(decls: &[S]) -> Result<FnRegistry, SpecError> {
    let parsed = decls
        .iter()
        .enumerate()
        .map(|(i, d)| parse_fn_line(i + 1, d.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    build_registry(&parsed, &[])
}

/// Parses a system spec.
pub fn parse_spec(text: &str) -> Result<System, SpecError> {
    let mut kind = None;
    let mut vars: Vec<String> = Vec::new();
    let mut params = BTreeMap::new();
    let mut symbolic = BTreeSet::new();
    let mut fn_decls = Vec::new();
    let mut tables = Vec::new();
    let mut eqs: Vec<(usize, String, String)> = Vec::new();
    let mut guards: Vec<(usize, String)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("kind:") {
            kind = Some(match rest.trim() {
                "difference" | "recursive" => SystemKind::Recursive,
                "delta" => SystemKind::Delta,
                "ode" => SystemKind::Ode,
                other => return Err(line_err(line, format!("unknown kind `{other}`"))),
            });
        } else if let Some(rest) = content.strip_prefix("vars:") {
            vars = rest.split_whitespace().map(str::to_string).collect();
            if let Some(bad) = vars.iter().find(|v| !is_identifier(v)) {
                return Err(line_err(line, format!("invalid variable name `{bad}`")));
            }
        } else if let Some(rest) = content.strip_prefix("param ") {
            match rest.split_once('=') {
                Some((name, value)) => {
                    let value = parse_rational(value).map_err(|source| SpecError::Expr { line, source })?;
                    params.insert(name.trim().to_string(), value);
                }
                None => {
                    symbolic.insert(rest.trim().to_string());
                }
            }
        } else if let Some(rest) = content.strip_prefix("fn ") {
            fn_decls.push(parse_fn_line(line, rest)?);
        } else if let Some(rest) = content.strip_prefix("eq ") {
            let (var, rhs) = rest
                .split_once('=')
                .ok_or_else(|| line_err(line, "expected `eq VAR = EXPR`"))?;
            eqs.push((line, var.trim().to_string(), rhs.trim().to_string()));
        } else if let Some(rest) = content.strip_prefix("guard ") {
            let expr = rest
                .trim()
                .strip_suffix("!= 0")
                .ok_or_else(|| line_err(line, "guards must read `guard EXPR != 0`"))?;
            guards.push((line, expr.to_string()));
        } else if let Some((name, list)) = content.split_once('=') {
            let name = name.trim();
            if !is_identifier(name) || !list.trim_start().starts_with('[') {
                return Err(line_err(line, format!("cannot parse `{content}`")));
            }
            tables.push((line, name.to_string(), parse_list(line, list)?));
        } else {
            return Err(line_err(line, format!("cannot parse `{content}`")));
        }
    }

    let kind = kind.ok_or_else(|| line_err(1, "missing `kind:` line"))?;
    if vars.is_empty() {
        return Err(line_err(1, "missing `vars:` line"));
    }

    let fns = build_registry(&fn_decls, &tables)?;

    let mut rhs = Vec::new();
    for v in &vars {
        let (line, _, text) = eqs
            .iter()
            .find(|(_, name, _)| name == v)
            .ok_or_else(|| line_err(1, format!("no equation for variable `{v}`")))?;
        rhs.push(parse_expr_with(text, &fns).map_err(|source| SpecError::Expr { line: *line, source })?);
    }
    if let Some((line, name, _)) = eqs.iter().find(|(_, name, _)| !vars.contains(name)) {
        return Err(line_err(*line, format!("`{name}` is not listed in vars")));
    }
    let mut sys = System::new(kind, vars, rhs, params, symbolic, fns)?;
    for (line, text) in guards {
        let g = parse_expr_with(&text, &sys.fns).map_err(|source| SpecError::Expr { line, source })?;
        sys = sys.with_guard(g);
    }
    sys.check_names()?;
    Ok(sys)
}

fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Writes a system back out in spec syntax.
pub fn to_spec_text(sys: &System) -> String {
    let mut out = String::new();
    out.push_str(&format!("kind: {}\n", sys.kind));
    out.push_str(&format!("vars: {}\n", sys.vars.join(" ")));
    for (name, v) in &sys.params {
        out.push_str(&format!("param {name} = {}\n", format_rational(v)));
    }
    for name in &sys.symbolic {
        out.push_str(&format!("param {name}\n"));
    }
    let mut written = BTreeSet::new();
    for sym in sys.fns.iter() {
        if let Some(table) = &sym.table {
            let items: Vec<String> = table.iter().map(format_rational).collect();
            out.push_str(&format!("{} = [{}]\n", sym.name, items.join(", ")));
            continue;
        }
        // An inverse partner is declared through its primary symbol.
        if sym.inverse.as_ref().is_some_and(|inv| written.contains(inv))
            && sym.derivative.is_none() && sym.definition.is_none() && !sym.nonvanishing {
                continue;
            }
        let mut line = format!("fn {}", sym.name);
        if let Some(inv) = &sym.inverse {
            if !written.contains(inv) {
                line.push_str(&format!(" inverse={inv}"));
            }
        }
        if sym.arg != "u" {
            line.push_str(&format!(" arg={}", sym.arg));
        }
        if let Some(d) = &sym.derivative {
            line.push_str(&format!(" deriv={d}"));
        }
        if let Some(d) = &sym.definition {
            line.push_str(&format!(" def={d}"));
        }
        if sym.nonvanishing {
            line.push_str(" nonvanishing");
        }
        out.push_str(&line);
        out.push('\n');
        written.insert(sym.name.clone());
    }
    for (v, e) in sys.vars.iter().zip(&sys.rhs) {
        out.push_str(&format!("eq {v} = {e}\n"));
    }
    for g in &sys.extra_guards {
        out.push_str(&format!("guard {g} != 0\n"));
    }
    out
}
