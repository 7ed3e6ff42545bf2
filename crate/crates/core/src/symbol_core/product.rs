use super::{merge_terms, ClassicalSymbol, HomTerm, MultiIndex};
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;

/// (−i)^k
pub(crate) fn minus_i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// ∂^γ of a term list, given a single-axis derivative.
pub(crate) fn derivative_table(
    terms: &[HomTerm],
    dim: usize,
    max_degree: u32,
    d: impl Fn(&HomTerm, usize) -> Vec<HomTerm>,
) -> Result<HashMap<MultiIndex, Vec<HomTerm>>> {
    let mut table = HashMap::new();
    table.insert(MultiIndex::zero(dim), terms.to_vec());
    for deg in 1..=max_degree {
        for gamma in MultiIndex::of_degree(dim, deg) {
            // peel one derivative off the first nonzero axis
            let axis = (0..dim).find(|&a| gamma.get(a) > 0).expect("nonzero degree");
            let mut prev = gamma.entries().to_vec();
            prev[axis] -= 1;
            let prev = MultiIndex::new(&prev)?;
            let base = &table[&prev];
            let next: Vec<HomTerm> = base.iter().flat_map(|t| d(t, axis)).collect();
            table.insert(gamma, merge_terms(next)?);
        }
    }
    Ok(table)
}

/// Asymptotic product `σ(AB) ∼ Σ_γ ((−i)^{|γ|}/γ!) ∂_ξ^γ σ_A ∂_x^γ σ_B`, truncated at depth `depth`.
pub fn symbol_product(a: &ClassicalSymbol, b: &ClassicalSymbol, depth: usize) -> Result<ClassicalSymbol> {
    if a.domain != b.domain {
        if a.dim() != b.dim() {
            return Err(Error::Dimension(format!("symbols of dimension {} and {}", a.dim(), b.dim())));
        }
        return Err(Error::IncompatibleGrids);
    }
    if let (Some(ga), Some(gb)) = (a.grid(), b.grid()) {
        if ga != gb {
            return Err(Error::IncompatibleGrids);
        }
    }
    let dim = a.dim();
    let mut a_tables = Vec::with_capacity(depth + 1);
    let mut b_tables = Vec::with_capacity(depth + 1);
    for j in 0..=depth {
        let max = (depth - j) as u32;
        a_tables.push(derivative_table(a.component(j)?, dim, max, |t, ax| t.d_xi(ax))?);
        b_tables.push(derivative_table(b.component(j)?, dim, max, |t, ax| vec![t.d_x(ax)])?);
    }
    let mut components = Vec::with_capacity(depth + 1);
    for j in 0..=depth {
        let mut terms = Vec::new();
        for g in 0..=j as u32 {
            for gamma in MultiIndex::of_degree(dim, g) {
                let weight = minus_i_pow(g) / gamma.factorial();
                for ja in 0..=(j - g as usize) {
                    let jb = j - g as usize - ja;
                    let da = &a_tables[ja][&gamma];
                    let db = &b_tables[jb][&gamma];
                    for ta in da {
                        for tb in db {
                            terms.push(ta.mul(tb)?.scale(weight));
                        }
                    }
                }
            }
        }
        components.push(terms);
    }
    let extent = match (a.finite, b.finite) {
        (true, true) => {
            if let Some(d) = a.polynomial_degree() {
                Some(a.depth() + b.depth() + d as usize)
            } else if b.is_constant_coefficient() {
                Some(a.depth() + b.depth())
            } else {
                None
            }
        }
        _ => None,
    };
    let finite = extent.is_some_and(|e| depth >= e);
    ClassicalSymbol::new(a.order + b.order, a.domain.clone(), components, finite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{CoefficientField, Domain, FourierField, PeriodicGrid};
    use std::sync::Arc;

    fn lap(domain: &Domain, c: CoefficientField) -> ClassicalSymbol {
        let dim = domain.dim();
        ClassicalSymbol::homogeneous(domain.clone(), HomTerm::new(c, MultiIndex::zero(dim), 2.0)).unwrap()
    }

    #[test]
    fn constant_symbols_multiply_pointwise() {
        let d = Domain::torus(1.0, 1.0);
        let a = lap(&d, CoefficientField::constant(1.0));
        let b = ClassicalSymbol::homogeneous(d.clone(), HomTerm::constant(1.0, MultiIndex::zero(2), -2.0)).unwrap();
        let p = symbol_product(&a, &b, 3).unwrap();
        assert!(p.max_gap(&ClassicalSymbol::identity(d), 3).unwrap() < 1e-15);
    }

    /// Kohn–Nirenberg quantization on a band-limited test function:
    /// (Op σ u)(x) = Σ_k σ(x, ξ_k) û_k e^{i ξ_k x}.
    fn apply(sym: &ClassicalSymbol, grid: &PeriodicGrid, u_hat: &[(Vec<i32>, Complex64)]) -> Vec<Complex64> {
        let l = &grid.domain.lengths;
        (0..grid.len())
            .map(|idx| {
                let x = grid.point(idx);
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, c) in u_hat {
                    let xi: Vec<f64> =
                        k.iter().zip(l).map(|(&k, &l)| 2.0 * std::f64::consts::PI * k as f64 / l).collect();
                    let phase: f64 = xi.iter().zip(&x).map(|(a, b)| a * b).sum();
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..=sym.depth() {
                        s += sym.eval_component(j, idx, &xi).unwrap();
                    }
                    acc += s * c * Complex64::new(0.0, phase).exp();
                }
                acc
            })
            .collect()
    }

    #[test]
    fn product_matches_direct_composition_on_torus() {
        let domain = Domain::torus(1.0, 1.0);
        let grid = Arc::new(PeriodicGrid::new(domain.clone(), 16));
        let f_field = FourierField::random(domain.clone(), 5, 2, 0.5, 1.0);
        let f = f_field.to_coefficient(&grid);
        let fa = ClassicalSymbol::multiplication(domain.clone(), f.clone()).unwrap();
        let l = lap(&domain, CoefficientField::constant(1.0));
        let u_hat = vec![
            (vec![1, 0], Complex64::new(0.3, 0.1)),
            (vec![-1, 2], Complex64::new(-0.2, 0.4)),
            (vec![0, -1], Complex64::new(0.5, 0.0)),
        ];
        // |ξ|² ∘ f  ↔  −Δ(f u)
        let p = symbol_product(&l, &fa, 2).unwrap();
        assert!(p.finite);
        let lhs = apply(&p, &grid, &u_hat);
        let fu: Vec<Complex64> = {
            let ones = ClassicalSymbol::identity(domain.clone());
            let u = apply(&ones, &grid, &u_hat);
            u.iter().enumerate().map(|(i, v)| v * f.value(i)).collect()
        };
        let fu_field = CoefficientField::from_complex(&grid, fu);
        let lap_fu = fu_field.derivative(0).derivative(0).add(&fu_field.derivative(1).derivative(1)).unwrap();
        for (i, v) in lhs.iter().enumerate() {
            assert!((v + lap_fu.value(i)).norm() < 1e-8, "idx {i}");
        }
        // f ∘ |ξ|²  ↔  −f Δu: a single component
        let q = symbol_product(&fa, &l, 2).unwrap();
        assert!(q.component(1).unwrap().is_empty() && q.component(2).unwrap().is_empty());
        // component j=1 of |ξ|² ∘ f is −i Σ_k 2ξ_k ∂_k f
        let xi = [0.6, 0.8];
        let expected = Complex64::new(0.0, -2.0) * (xi[0] * f.derivative(0).value(7) + xi[1] * f.derivative(1).value(7));
        assert!((p.eval_component(1, 7, &xi).unwrap() - expected).norm() < 1e-10);
    }

    #[test]
    fn depth_beyond_input_is_refused() {
        let d = Domain::circle(1.0);
        let a = ClassicalSymbol::new(-1.0, d.clone(), vec![vec![HomTerm::constant(1.0, MultiIndex::zero(1), -1.0)]], false)
            .unwrap();
        assert!(matches!(symbol_product(&a, &a, 2), Err(Error::DepthExceeded { .. })));
    }
}
