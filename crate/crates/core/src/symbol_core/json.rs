//! JSON form of a classical symbol.
//!
//! ```json
//! {"order": -2, "dimension": 2, "lengths": [1, 1],
//!  "components": [{"j": 0, "terms": [{"monomial": [0, 0], "radial_power": -2,
//!                                     "coeff": {"constant": 1}}]}]}
//! ```
//! `lengths` defaults to 2π per axis; `finite` (default false) marks symbols
//! whose omitted components vanish. Complex scalars are `[re, im]` pairs.

use super::{ClassicalSymbol, HomTerm, MultiIndex};
use crate::field::{CoefficientField, Domain, PeriodicGrid};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    fn value(self) -> Complex64 {
        match self {
            Self::Real(x) => Complex64::from(x),
            Self::Complex([re, im]) => Complex64::new(re, im),
        }
    }

    fn from_value(z: Complex64) -> Self {
        if z.im == 0.0 {
            Self::Real(z.re)
        } else {
            Self::Complex([z.re, z.im])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CoeffJson {
    Constant(Scalar),
    Grid {
        #[serde(rename = "N")]
        n: usize,
        values: Vec<Scalar>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub monomial: Vec<u32>,
    pub radial_power: f64,
    pub coeff: CoeffJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentJson {
    pub j: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolJson {
    pub order: f64,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    #[serde(default)]
    pub finite: bool,
    pub components: Vec<ComponentJson>,
}

impl SymbolJson {
    pub fn to_symbol(&self) -> Result<ClassicalSymbol> {
        let lengths = self.lengths.clone().unwrap_or_else(|| vec![2.0 * std::f64::consts::PI; self.dimension]);
        if lengths.len() != self.dimension {
            return Err(Error::Dimension(format!("{} lengths for dimension {}", lengths.len(), self.dimension)));
        }
        let domain = Domain::new(lengths)?;
        let depth = self.components.iter().map(|c| c.j).max().unwrap_or(0);
        let mut components: Vec<Vec<HomTerm>> = vec![Vec::new(); depth + 1];
        let mut grid: Option<Arc<PeriodicGrid>> = None;
        for comp in &self.components {
            for t in &comp.terms {
                let coeff = match &t.coeff {
                    CoeffJson::Constant(c) => CoefficientField::Constant(c.value()),
                    CoeffJson::Grid { n, values } => {
                        let g = match &grid {
                            Some(g) if g.n == *n => g.clone(),
                            Some(_) => return Err(Error::IncompatibleGrids),
                            None => {
                                let g = Arc::new(PeriodicGrid::new(domain.clone(), *n));
                                grid = Some(g.clone());
                                g
                            }
                        };
                        if values.len() != g.len() {
                            return Err(Error::InvalidSymbol(format!(
                                "grid coefficient has {} values, expected {}",
                                values.len(),
                                g.len()
                            )));
                        }
                        CoefficientField::from_complex(&g, values.iter().map(|v| v.value()).collect())
                    }
                };
                let monomial = MultiIndex::new(&t.monomial)?;
                if monomial.dim() != self.dimension {
                    return Err(Error::Dimension("monomial length differs from dimension".into()));
                }
                components[comp.j].push(HomTerm::new(coeff, monomial, t.radial_power));
            }
        }
        ClassicalSymbol::new(self.order, domain, components, self.finite)
    }

    pub fn from_symbol(sym: &ClassicalSymbol) -> Self {
        let components = sym
            .components
            .iter()
            .enumerate()
            .map(|(j, terms)| ComponentJson {
                j,
                terms: terms
                    .iter()
                    .map(|t| TermJson {
                        monomial: t.monomial.entries().to_vec(),
                        radial_power: t.radial_power,
                        coeff: match &t.coeff {
                            CoefficientField::Constant(c) => CoeffJson::Constant(Scalar::from_value(*c)),
                            CoefficientField::Grid { grid, values } => CoeffJson::Grid {
                                n: grid.n,
                                values: values.iter().map(|v| Scalar::from_value(*v)).collect(),
                            },
                        },
                    })
                    .collect(),
            })
            .collect();
        Self {
            order: sym.order,
            dimension: sym.dim(),
            lengths: Some(sym.domain.lengths.clone()),
            finite: sym.finite,
            components,
        }
    }
}
