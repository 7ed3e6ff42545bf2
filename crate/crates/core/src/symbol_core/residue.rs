use super::{ClassicalSymbol, MultiIndex, DEGREE_TOL};
use crate::field::CoefficientField;
use crate::special::gamma;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// ∫_{S^{n−1}} ξ^m dσ(ξ).
pub fn sphere_moment(m: &MultiIndex, n: usize) -> Result<f64> {
    if m.dim() != n || !(1..=2).contains(&n) {
        return Err(Error::Dimension(format!("multi-index of dimension {} with n = {n}", m.dim())));
    }
    if m.entries().iter().any(|e| e % 2 == 1) {
        return Ok(0.0);
    }
    let num: f64 = m.entries().iter().map(|&e| gamma((e as f64 + 1.0) / 2.0)).product();
    Ok(2.0 * num / gamma((m.degree() as f64 + n as f64) / 2.0))
}

/// Index `j` of the degree −n component, if α + n is a nonnegative integer.
fn residue_component(sym: &ClassicalSymbol) -> Option<usize> {
    let j = sym.order + sym.dim() as f64;
    if j < -DEGREE_TOL || (j - j.round()).abs() > DEGREE_TOL {
        return None;
    }
    Some(j.round() as usize)
}

/// res_x(A) = ∫_{|ξ|=1} σ_{−n}(x, ξ) dξ as a coordinate density.
pub fn residue_density(sym: &ClassicalSymbol) -> Result<CoefficientField> {
    let n = sym.dim();
    let Some(j) = residue_component(sym) else {
        return Ok(CoefficientField::zero());
    };
    let mut acc = CoefficientField::zero();
    for t in sym.component(j)? {
        let mom = sphere_moment(&t.monomial, n)?;
        if mom != 0.0 {
            acc = acc.add(&t.coeff.scale(Complex64::from(mom)))?;
        }
    }
    Ok(acc)
}

/// res(A) = (2π)^{−n} ∫_M res_x(A) dx, complex-valued.
pub fn wodzicki_residue_complex(sym: &ClassicalSymbol) -> Result<Complex64> {
    let density = residue_density(sym)?;
    Ok(density.integrate(&sym.domain) / (2.0 * PI).powi(sym.dim() as i32))
}

/// Real part of [`wodzicki_residue_complex`].
pub fn wodzicki_residue(sym: &ClassicalSymbol) -> Result<f64> {
    Ok(wodzicki_residue_complex(sym)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Domain;
    use crate::quad;
    use crate::symbol_core::HomTerm;

    #[test]
    fn moments_match_quadrature() {
        for a in 0..5u32 {
            for b in 0..5u32 {
                let m = MultiIndex::new(&[a, b]).unwrap();
                let q: f64 = quad::uniform(0.0, 2.0 * PI, 16, |t| t.cos().powi(a as i32) * t.sin().powi(b as i32));
                assert!((sphere_moment(&m, 2).unwrap() - q).abs() < 1e-13, "{a} {b}");
            }
        }
        assert_eq!(sphere_moment(&MultiIndex::new(&[0]).unwrap(), 1).unwrap(), 2.0);
        assert_eq!(sphere_moment(&MultiIndex::new(&[3]).unwrap(), 1).unwrap(), 0.0);
        assert!((sphere_moment(&MultiIndex::new(&[2, 0]).unwrap(), 2).unwrap() - PI).abs() < 1e-14);
        assert!(sphere_moment(&MultiIndex::new(&[2]).unwrap(), 2).is_err());
    }

    #[test]
    fn residue_of_inverse_laplacian_unit_torus() {
        let d = Domain::torus(1.0, 1.0);
        let s = ClassicalSymbol::homogeneous(d, HomTerm::constant(1.0, MultiIndex::zero(2), -2.0)).unwrap();
        assert!((wodzicki_residue(&s).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn residue_of_half_inverse_on_circle() {
        let d = Domain::circle(2.0 * PI);
        let s = ClassicalSymbol::homogeneous(d, HomTerm::constant(1.0, MultiIndex::zero(1), -1.0)).unwrap();
        assert!((wodzicki_residue(&s).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn residue_of_noninteger_order_is_zero() {
        let d = Domain::circle(1.0);
        let s = ClassicalSymbol::homogeneous(d, HomTerm::constant(1.0, MultiIndex::zero(1), -0.5)).unwrap();
        assert_eq!(wodzicki_residue(&s).unwrap(), 0.0);
    }
}
