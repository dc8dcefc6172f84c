//! Arithmetic over GF(2^p) for 2 <= p <= 16.
//!
//! A field is described by a primitive polynomial of degree p. Elements are
//! polynomial residues packed into integers, addition is XOR, and
//! multiplication runs through log/antilog tables based at the generator
//! x = 2. Construction fails if x does not generate the whole multiplicative
//! group, so every nonzero element is a power of every root of the defining
//! polynomial.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::sync::Arc;

/// Smallest supported extension degree.
pub const MIN_DEGREE: u32 = 2;
/// Largest supported extension degree. Tables stay u16-indexed.
pub const MAX_DEGREE: u32 = 16;

/// Default primitive polynomials indexed by degree p = 2..=16.
///
/// Each entry is the full polynomial with the leading x^p bit set, e.g.
/// 0b111 = x^2 + x + 1 for p = 2 and 0x11D = x^8 + x^4 + x^3 + x^2 + 1
/// for p = 8.
pub const DEFAULT_POLYS: [(u32, u32); 15] = [
    (2, 0b111),
    (3, 0b1011),
    (4, 0b10011),
    (5, 0b100101),
    (6, 0b1000011),
    (7, 0b10001001),
    (8, 0x11D),
    (9, 0x211),
    (10, 0x409),
    (11, 0x805),
    (12, 0x1053),
    (13, 0x201B),
    (14, 0x4443),
    (15, 0x8003),
    (16, 0x1100B),
];

/// Looks up the default polynomial for degree `p`, if one is tabled.
pub fn default_poly(p: u32) -> Option<u32> {
    DEFAULT_POLYS
        .iter()
        .find(|&&(deg, _)| deg == p)
        .map(|&(_, poly)| poly)
}

/// A single element of GF(2^p), stored as the packed coefficient vector.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(pub u16);

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// Addition in characteristic 2 is XOR and needs no field context.
impl BitXor for FieldElement {
    type Output = FieldElement;
    fn bitxor(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

impl BitXorAssign for FieldElement {
    fn bitxor_assign(&mut self, rhs: FieldElement) {
        self.0 ^= rhs.0;
    }
}

/// Exponent of a root power, always reduced modulo 2^p - 1.
pub type Exponent = u16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GaloisError {
    /// Degree outside [MIN_DEGREE, MAX_DEGREE].
    UnsupportedDegree { p: u32 },
    /// Polynomial is not monic of degree exactly p.
    PolynomialDegree { p: u32, poly: u32 },
    /// x = 2 does not generate the multiplicative group. `order` is the
    /// multiplicative order of x, or 0 if x never returns to 1 (which means
    /// the polynomial is reducible with x a zero divisor).
    NotPrimitive { poly: u32, order: u32 },
    DivideByZero,
    /// Element is not a root of the defining polynomial.
    NotARoot { value: u16 },
    /// Value does not fit in the field.
    InvalidElement { value: u32 },
    /// Exponent outside [0, 2^p - 2].
    InvalidExponent { value: u32 },
}

impl fmt::Display for GaloisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaloisError::UnsupportedDegree { p } => {
                write!(f, "unsupported field degree {p}, expected {MIN_DEGREE}..={MAX_DEGREE}")
            }
            GaloisError::PolynomialDegree { p, poly } => {
                write!(f, "polynomial {poly:#x} does not have degree {p}")
            }
            GaloisError::NotPrimitive { poly, order } => {
                if *order == 0 {
                    write!(f, "polynomial {poly:#x} is reducible: x has no multiplicative order")
                } else {
                    write!(f, "polynomial {poly:#x} is not primitive: x has order {order}")
                }
            }
            GaloisError::DivideByZero => write!(f, "division by zero field element"),
            GaloisError::NotARoot { value } => {
                write!(f, "element {value} is not a root of the defining polynomial")
            }
            GaloisError::InvalidElement { value } => {
                write!(f, "value {value} is out of range for the field")
            }
            GaloisError::InvalidExponent { value } => {
                write!(f, "exponent {value} is out of range for the field")
            }
        }
    }
}

impl std::error::Error for GaloisError {}

/// Immutable description of one field instance: log/antilog tables plus the
/// parameters they were built from. Meant to be constructed once and shared
/// (see [`make_field`]).
pub struct FieldSpec {
    p: u32,
    poly: u32,
    order: u32,
    // exp is doubled so exp[log a + log b] works without reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// Builds a field and wraps it in an `Arc` for cheap sharing.
pub fn make_field(p: u32, poly: u32) -> Result<Arc<FieldSpec>, GaloisError> {
    FieldSpec::new(p, poly).map(Arc::new)
}

impl FieldSpec {
    pub fn new(p: u32, poly: u32) -> Result<FieldSpec, GaloisError> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&p) {
            return Err(GaloisError::UnsupportedDegree { p });
        }
        if poly >> p != 1 {
            return Err(GaloisError::PolynomialDegree { p, poly });
        }

        let order = (1u32 << p) - 1;
        let mut exp = vec![0u16; 2 * order as usize];
        let mut log = vec![0u16; 1 << p];

        // Walk the powers of x. For a primitive polynomial this visits every
        // nonzero element exactly once and returns to 1 after `order` steps.
        let mut v: u32 = 1;
        for i in 0..order {
            if v == 1 && i > 0 {
                return Err(GaloisError::NotPrimitive { poly, order: i });
            }
            exp[i as usize] = v as u16;
            exp[(i + order) as usize] = v as u16;
            log[v as usize] = i as u16;
            v <<= 1;
            if v >> p != 0 {
                v ^= poly;
            }
        }
        if v != 1 {
            // Either x has order not dividing 2^p - 1 (reducible poly) or it
            // ran into a zero-divisor cycle. Find the true order if any.
            let mut w: u32 = v;
            let mut steps = order;
            let ord = loop {
                if w == 1 {
                    break steps;
                }
                w <<= 1;
                if w >> p != 0 {
                    w ^= poly;
                }
                steps += 1;
                if steps >= 1 << (p + 1) {
                    break 0;
                }
            };
            return Err(GaloisError::NotPrimitive { poly, order: ord });
        }

        Ok(FieldSpec { p, poly, order, exp, log })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Order of the multiplicative group, 2^p - 1.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of elements including zero, 2^p.
    pub fn element_count(&self) -> u32 {
        1 << self.p
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, GaloisError> {
        if value >= self.element_count() {
            return Err(GaloisError::InvalidElement { value });
        }
        Ok(FieldElement(value as u16))
    }

    pub fn validate_exponent(&self, value: u32) -> Result<Exponent, GaloisError> {
        if value >= self.order {
            return Err(GaloisError::InvalidExponent { value });
        }
        Ok(value as Exponent)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a ^ b
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement(0);
        }
        let idx = self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize;
        FieldElement(self.exp[idx])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, GaloisError> {
        if a.0 == 0 {
            return Err(GaloisError::DivideByZero);
        }
        let idx = self.order as usize - self.log[a.0 as usize] as usize;
        Ok(FieldElement(self.exp[idx]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GaloisError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// a^e with exponent reduced modulo the group order. pow(0, 0) = 1.
    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if a.0 == 0 {
            return FieldElement(if e == 0 { 1 } else { 0 });
        }
        let e = (e % self.order as u64) as u32;
        let idx = (self.log[a.0 as usize] as u64 * e as u64) % self.order as u64;
        FieldElement(self.exp[idx as usize])
    }

    /// log base x of a nonzero element.
    pub fn log(&self, a: FieldElement) -> Result<Exponent, GaloisError> {
        if a.0 == 0 {
            return Err(GaloisError::DivideByZero);
        }
        Ok(self.log[a.0 as usize])
    }

    fn eval_poly(&self, v: FieldElement) -> FieldElement {
        // Horner over the bits of the defining polynomial, degree p first.
        let mut acc = FieldElement(0);
        for bit in (0..=self.p).rev() {
            acc = self.mul(acc, v);
            if self.poly >> bit & 1 != 0 {
                acc ^= FieldElement(1);
            }
        }
        acc
    }

    /// All roots of the defining polynomial inside the field, ascending.
    ///
    /// For a primitive polynomial these are the p conjugates w, w^2, w^4, ...
    /// of any single root w, and each of them generates the multiplicative
    /// group.
    pub fn primitive_roots(&self) -> Vec<FieldElement> {
        let mut roots = Vec::with_capacity(self.p as usize);
        for v in 0..self.element_count() {
            let cand = FieldElement(v as u16);
            if self.eval_poly(cand).0 == 0 {
                roots.push(cand);
            }
        }
        roots
    }

    pub fn is_root(&self, v: FieldElement) -> bool {
        v.0 < (1 << self.p) as u16 && self.eval_poly(v).0 == 0
    }

    /// omega^i for a nonzero omega, computed by rebasing through the x-based
    /// tables: omega^i = exp[(log omega * i) mod (2^p - 1)].
    pub fn omega_pow(&self, omega: FieldElement, i: u64) -> Result<FieldElement, GaloisError> {
        if omega.0 == 0 {
            return Err(GaloisError::DivideByZero);
        }
        let lw = self.log[omega.0 as usize] as u64;
        let idx = (lw * (i % self.order as u64)) % self.order as u64;
        Ok(FieldElement(self.exp[idx as usize]))
    }

    /// Precomputes the full power table of one root. See [`OmegaPowers`].
    pub fn omega_powers(&self, omega: FieldElement) -> Result<OmegaPowers, GaloisError> {
        if omega.0 == 0 {
            return Err(GaloisError::DivideByZero);
        }
        let n = self.order as usize;
        let mut pow = vec![0u16; n];
        let mut log = vec![0u16; 1 << self.p];
        let lw = self.log[omega.0 as usize] as u64;
        for (i, slot) in pow.iter_mut().enumerate() {
            let v = self.exp[((lw * i as u64) % self.order as u64) as usize];
            *slot = v;
            log[v as usize] = i as u16;
        }
        Ok(OmegaPowers { order: self.order, pow, log })
    }
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("poly", &format_args!("{:#x}", self.poly))
            .finish()
    }
}

/// Power table of a fixed nonzero element omega, for inner loops that index
/// omega^e by raw exponent sums without touching the log tables each time.
///
/// When omega is a root of the defining polynomial the table is a bijection
/// between [0, 2^p - 2] and the nonzero elements, so `log_of` is total on
/// nonzero inputs.
pub struct OmegaPowers {
    order: u32,
    pow: Vec<u16>,
    log: Vec<u16>,
}

impl OmegaPowers {
    /// omega^e, e taken modulo the group order.
    #[inline]
    pub fn get(&self, e: u64) -> FieldElement {
        FieldElement(self.pow[(e % self.order as u64) as usize])
    }

    /// Exponent e with omega^e = v, for nonzero v.
    #[inline]
    pub fn log_of(&self, v: FieldElement) -> Option<Exponent> {
        if v.0 == 0 {
            None
        } else {
            Some(self.log[v.0 as usize])
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(p: u32) -> FieldSpec {
        FieldSpec::new(p, default_poly(p).unwrap()).unwrap()
    }

    #[test]
    fn rejects_bad_degrees() {
        assert_eq!(
            FieldSpec::new(1, 0b11).unwrap_err(),
            GaloisError::UnsupportedDegree { p: 1 }
        );
        assert_eq!(
            FieldSpec::new(17, 1 << 17 | 1).unwrap_err(),
            GaloisError::UnsupportedDegree { p: 17 }
        );
        assert_eq!(
            FieldSpec::new(8, 0b1011).unwrap_err(),
            GaloisError::PolynomialDegree { p: 8, poly: 0b1011 }
        );
    }

    #[test]
    fn rejects_non_primitive_poly() {
        // x^8+x^4+x^3+x+1 is irreducible but x only has order 51 in it.
        let err = FieldSpec::new(8, 0x11B).unwrap_err();
        assert_eq!(err, GaloisError::NotPrimitive { poly: 0x11B, order: 51 });
        // x^4+x^3+x^2+x+1 is irreducible, x has order 5.
        let err = FieldSpec::new(4, 0b11111).unwrap_err();
        assert_eq!(err, GaloisError::NotPrimitive { poly: 0b11111, order: 5 });
    }

    #[test]
    fn default_polys_are_primitive() {
        for &(p, poly) in DEFAULT_POLYS.iter() {
            let field = FieldSpec::new(p, poly)
                .unwrap_or_else(|e| panic!("p={p} poly={poly:#x}: {e}"));
            assert_eq!(field.primitive_roots().len(), p as usize);
        }
    }

    #[test]
    fn exp_log_are_inverse_bijections() {
        for p in 2..=8 {
            let field = f(p);
            for v in 1..field.element_count() {
                let l = field.log(FieldElement(v as u16)).unwrap();
                assert_eq!(field.pow(FieldElement(2), l as u64).0, v as u16);
            }
            let mut seen = vec![false; field.element_count() as usize];
            for i in 0..field.order() {
                let v = field.pow(FieldElement(2), i as u64);
                assert!(!seen[v.0 as usize], "p={p}: repeat at exponent {i}");
                seen[v.0 as usize] = true;
            }
        }
    }

    #[test]
    fn known_products_gf256() {
        let field = f(8);
        assert_eq!(field.mul(FieldElement(2), FieldElement(128)).0, 29);
        assert_eq!(field.pow(FieldElement(2), 10).0, 116);
        assert_eq!(field.add(FieldElement(51), FieldElement(156)).0, 175);
        assert_eq!(field.mul(FieldElement(0), FieldElement(77)).0, 0);
        assert_eq!(field.pow(FieldElement(0), 0).0, 1);
        assert_eq!(field.pow(FieldElement(0), 3).0, 0);
    }

    #[test]
    fn field_axioms_sampled() {
        for p in [3u32, 8, 16] {
            let field = f(p);
            let mask = (field.element_count() - 1) as u16;
            let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE + p as u64);
            let samples = if p == 16 { 2_000 } else { 10_000 };
            for _ in 0..samples {
                let a = FieldElement(rng.gen::<u16>() & mask);
                let b = FieldElement(rng.gen::<u16>() & mask);
                let c = FieldElement(rng.gen::<u16>() & mask);
                assert_eq!(field.mul(a, b), field.mul(b, a));
                assert_eq!(
                    field.mul(field.mul(a, b), c),
                    field.mul(a, field.mul(b, c))
                );
                assert_eq!(
                    field.mul(a, b ^ c),
                    field.mul(a, b) ^ field.mul(a, c)
                );
                if a.0 != 0 {
                    let ai = field.inv(a).unwrap();
                    assert_eq!(field.mul(a, ai).0, 1);
                }
                assert_eq!(field.mul(a, FieldElement(1)), a);
                assert_eq!((a ^ b) ^ b, a);
            }
            assert_eq!(field.inv(FieldElement(0)), Err(GaloisError::DivideByZero));
        }
    }

    #[test]
    fn roots_match_known_tables() {
        let by_value = |v: Vec<FieldElement>| v.into_iter().map(|e| e.0).collect::<Vec<_>>();
        assert_eq!(by_value(f(2).primitive_roots()), vec![2, 3]);
        assert_eq!(by_value(f(3).primitive_roots()), vec![2, 4, 6]);
        assert_eq!(by_value(f(4).primitive_roots()), vec![2, 3, 4, 5]);
        assert_eq!(
            by_value(f(8).primitive_roots()),
            vec![2, 4, 16, 29, 76, 95, 133, 157]
        );
    }

    #[test]
    fn roots_are_frobenius_closed_and_generate() {
        for p in 2..=8 {
            let field = f(p);
            let roots = field.primitive_roots();
            assert_eq!(roots.len(), p as usize);
            for &r in &roots {
                let sq = field.mul(r, r);
                assert!(roots.contains(&sq), "p={p}: {r}^2 not a root");
                // Each root generates: its powers up to order-1 are distinct.
                let mut seen = vec![false; field.element_count() as usize];
                for i in 0..field.order() {
                    let v = field.omega_pow(r, i as u64).unwrap();
                    assert!(!seen[v.0 as usize], "p={p} root {r}: order too small");
                    seen[v.0 as usize] = true;
                }
            }
        }
    }

    #[test]
    fn omega_pow_matches_pow_and_known_values() {
        let field = f(8);
        assert_eq!(field.omega_pow(FieldElement(2), 125).unwrap().0, 51);
        assert_eq!(field.omega_pow(FieldElement(2), 83).unwrap().0, 187);
        for &root in &field.primitive_roots() {
            for i in [0u64, 1, 7, 100, 254, 255, 1000] {
                assert_eq!(
                    field.omega_pow(root, i).unwrap(),
                    field.pow(root, i),
                    "root {root} exponent {i}"
                );
            }
        }
        assert_eq!(
            field.omega_pow(FieldElement(0), 3),
            Err(GaloisError::DivideByZero)
        );
    }

    #[test]
    fn omega_powers_table_agrees() {
        for p in [3u32, 8] {
            let field = f(p);
            for &root in &field.primitive_roots() {
                let table = field.omega_powers(root).unwrap();
                for e in 0..field.order() as u64 * 2 {
                    assert_eq!(table.get(e), field.omega_pow(root, e).unwrap());
                }
                for v in 1..field.element_count() {
                    let e = table.log_of(FieldElement(v as u16)).unwrap();
                    assert_eq!(table.get(e as u64).0, v as u16);
                }
                assert_eq!(table.log_of(FieldElement(0)), None);
            }
        }
    }
}
