use std::collections::BTreeMap;

use num_rational::BigRational;

use super::{Expr, ExprError};

/// Functions the parser always accepts. Their derivatives and numeric values
/// are built in.
pub const BUILTIN_FUNCTIONS: [&str; 3] = ["sin", "cos", "exp"];

/// A declared unary function symbol.
///
/// `derivative` and `definition` are expressions in the formal argument
/// `arg`. A symbol with a `table` is a periodic sequence: its value at an
/// integer `m` is `table[m mod p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FnSymbol {
    pub name: String,
    pub arg: String,
    pub inverse: Option<String>,
    pub derivative: Option<Expr>,
    pub definition: Option<Expr>,
    pub table: Option<Vec<BigRational>>,
    pub nonvanishing: bool,
}

impl FnSymbol {
    /// An opaque symbol with no extra information.
    pub fn opaque(name: &str) -> FnSymbol {
        FnSymbol {
            name: name.to_string(),
            arg: "u".to_string(),
            inverse: None,
            derivative: None,
            definition: None,
            table: None,
            nonvanishing: false,
        }
    }

    pub fn with_inverse(mut self, inverse: &str) -> FnSymbol {
        self.inverse = Some(inverse.to_string());
        self
    }

    pub fn with_derivative(mut self, derivative: Expr) -> FnSymbol {
        self.derivative = Some(derivative);
        self
    }

    pub fn with_definition(mut self, definition: Expr) -> FnSymbol {
        self.definition = Some(definition);
        self
    }

    pub fn with_arg(mut self, arg: &str) -> FnSymbol {
        self.arg = arg.to_string();
        self
    }

    pub fn nonvanishing(mut self) -> FnSymbol {
        self.nonvanishing = true;
        self
    }

    /// A periodic table indexed by `n`.
    pub fn periodic(name: &str, table: Vec<BigRational>) -> FnSymbol {
        FnSymbol {
            table: Some(table),
            ..FnSymbol::opaque(name)
        }
    }

    /// `derivative` with the formal argument replaced by `at`.
    pub fn derivative_at(&self, at: &Expr) -> Option<Expr> {
        self.derivative.as_ref().map(|d| self.instantiate(d, at))
    }

    pub fn instantiate(&self, body: &Expr, at: &Expr) -> Expr {
        let bindings = [(self.arg.clone(), at.clone())].into_iter().collect();
        body.substitute(&bindings)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FnRegistry {
    symbols: BTreeMap<String, FnSymbol>,
}

impl FnRegistry {
    pub fn new() -> FnRegistry {
        FnRegistry::default()
    }

    pub fn declare(&mut self, symbol: FnSymbol) {
        self.symbols.insert(symbol.name.clone(), symbol);
    }

    /// Declares `f` and `finv` as mutually inverse, keeping any information
    /// already registered under either name.
    pub fn declare_inverse_pair(&mut self, f: &str, finv: &str) {
        for (a, b) in [(f, finv), (finv, f)] {
            let mut sym = self
                .symbols
                .remove(a)
                .unwrap_or_else(|| FnSymbol::opaque(a));
            sym.inverse = Some(b.to_string());
            self.symbols.insert(a.to_string(), sym);
        }
    }

    pub fn get(&self, name: &str) -> Option<&FnSymbol> {
        self.symbols.get(name)
    }

    pub fn is_known(&self, name: &str) -> bool {
        BUILTIN_FUNCTIONS.contains(&name) || self.symbols.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FnSymbol> {
        self.symbols.values()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Adds every symbol of `other` not already present.
    pub fn merge(&mut self, other: &FnRegistry) {
        for sym in other.iter() {
            self.symbols
                .entry(sym.name.clone())
                .or_insert_with(|| sym.clone());
        }
    }

    /// Checks that inverse links point at declared symbols and agree in both
    /// directions.
    pub fn validate(&self) -> Result<(), ExprError> {
        for sym in self.symbols.values() {
            if let Some(inv) = &sym.inverse {
                let back = self.symbols.get(inv).and_then(|s| s.inverse.as_deref());
                if back != Some(sym.name.as_str()) {
                    return Err(ExprError::UnknownSymbol {
                        name: inv.clone(),
                        offset: 0,
                    });
                }
            }
        }
        Ok(())
    }
}
