//! Exact arithmetic in a cyclic group `G = <g>` of order `m`.
//!
//! Two backends are supported: the unit group `(Z/nZ)^x` (or the cyclic
//! subgroup generated by `g` inside it) and an explicit table of labels with
//! a caller-supplied multiplication. Element labels are non-negative integers;
//! the basis index of an element is its rank in ascending label order.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest modulus accepted by [`validate_group`].
pub const MAX_MODULUS: u64 = 1 << 40;

/// Largest group order whose elements are enumerated.
pub const MAX_ENUMERATED_ORDER: u64 = 1 << 24;

/// Canonical label of a group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct GroupElement(u64);

impl GroupElement {
    pub fn new(label: u64) -> Self {
        GroupElement(label)
    }

    pub fn label(self) -> u64 {
        self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of `Z/mZ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Exponent {
    value: u64,
    modulus: u64,
}

impl Exponent {
    /// Reduces `value` into `[0, m)`. Panics if `m == 0`.
    pub fn new(value: i64, m: u64) -> Self {
        assert!(m > 0, "exponent modulus must be positive");
        let value = (value as i128).rem_euclid(m as i128) as u64;
        Exponent { value, modulus: m }
    }

    pub fn from_u64(value: u64, m: u64) -> Self {
        assert!(m > 0, "exponent modulus must be positive");
        Exponent { value: value % m, modulus: m }
    }

    pub fn zero(m: u64) -> Self {
        Exponent::from_u64(0, m)
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.modulus
    }

    pub fn add(self, other: Exponent) -> Exponent {
        assert_eq!(self.modulus, other.modulus);
        Exponent::from_u64(
            ((self.value as u128 + other.value as u128) % self.modulus as u128) as u64,
            self.modulus,
        )
    }

    pub fn mul(self, other: Exponent) -> Exponent {
        assert_eq!(self.modulus, other.modulus);
        Exponent::from_u64(mul_mod(self.value, other.value, self.modulus), self.modulus)
    }

    pub fn neg(self) -> Exponent {
        Exponent::from_u64((self.modulus - self.value) % self.modulus, self.modulus)
    }

    pub fn inverse(self) -> Result<Exponent> {
        mod_inverse(self.value, self.modulus).map(|v| Exponent::from_u64(v, self.modulus))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub fn pow_mod(mut base: u64, mut e: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        e >>= 1;
    }
    acc
}

/// Inverse of `s` in `Z/mZ`, via the extended Euclidean algorithm.
pub fn mod_inverse(s: u64, m: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::NoInverse { s, m });
    }
    let s_red = s % m;
    if gcd(s_red, m) != 1 {
        return Err(Error::NoInverse { s, m });
    }
    if m == 1 {
        return Ok(0);
    }
    let (mut old_r, mut r) = (s_red as i128, m as i128);
    let (mut old_t, mut t) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_t, t) = (t, old_t - q * t);
    }
    Ok(old_t.rem_euclid(m as i128) as u64)
}

/// Prime factorization by trial division, as `(prime, multiplicity)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Euler's totient. `totient(1) == 1`.
pub fn totient(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

type MulFn = dyn Fn(u64, u64) -> u64 + Send + Sync;

#[derive(Clone)]
enum Backend {
    Modular { n: u64 },
    Table { identity: u64, mul: Arc<MulFn> },
}

/// A validated presentation of a cyclic group.
#[derive(Clone)]
pub struct GroupSpec {
    backend: Backend,
    generator: GroupElement,
    order: u64,
    elements: Vec<GroupElement>,
}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("GroupSpec");
        match &self.backend {
            Backend::Modular { n } => d.field("modulus", n),
            Backend::Table { identity, .. } => d.field("table_identity", identity),
        };
        d.field("generator", &self.generator.0)
            .field("order", &self.order)
            .finish()
    }
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        self.modulus() == other.modulus()
            && self.generator == other.generator
            && self.order == other.order
            && self.elements == other.elements
    }
}

/// Validates `g` modulo `n` and enumerates the cyclic group it generates.
///
/// With `require_full`, `g` must generate all of `(Z/nZ)^x`.
pub fn validate_group(n: u64, g: u64, require_full: bool) -> Result<GroupSpec> {
    if n < 2 {
        return Err(Error::InvalidModulus(n));
    }
    if n > MAX_MODULUS {
        return Err(Error::ModulusTooLarge(n));
    }
    let g = g % n;
    if gcd(g, n) != 1 {
        return Err(Error::NotCoprime { n, g });
    }
    let phi = totient(n);
    // ord(g) divides phi(n); strip prime factors while g^(ord/p) stays 1
    let mut order = phi;
    for (p, _) in factorize(phi) {
        while order % p == 0 && pow_mod(g, order / p, n) == 1 % n {
            order /= p;
        }
    }
    if require_full && order != phi {
        return Err(Error::NotAGenerator { n, g, order, totient: phi });
    }
    if order > MAX_ENUMERATED_ORDER {
        return Err(Error::OrderTooLarge { order, limit: MAX_ENUMERATED_ORDER });
    }
    let backend = Backend::Modular { n };
    let elements = enumerate_powers(&backend, g, order);
    Ok(GroupSpec { backend, generator: GroupElement(g), order, elements })
}

fn enumerate_powers(backend: &Backend, g: u64, order: u64) -> Vec<GroupElement> {
    let mut elements = Vec::with_capacity(order as usize);
    let mut cur = backend_identity(backend);
    for _ in 0..order {
        elements.push(GroupElement(cur));
        cur = backend_mul(backend, cur, g);
    }
    elements.sort_unstable();
    elements
}

fn backend_identity(backend: &Backend) -> u64 {
    match backend {
        Backend::Modular { n } => 1 % n,
        Backend::Table { identity, .. } => *identity,
    }
}

fn backend_mul(backend: &Backend, a: u64, b: u64) -> u64 {
    match backend {
        Backend::Modular { n } => mul_mod(a, b, *n),
        Backend::Table { mul, .. } => mul(a, b),
    }
}

impl GroupSpec {
    /// Builds a group from an explicit label list and multiplication.
    ///
    /// `generator` must generate exactly the listed labels.
    pub fn from_table<F>(labels: &[u64], identity: u64, generator: u64, mul: F) -> Result<Self>
    where
        F: Fn(u64, u64) -> u64 + Send + Sync + 'static,
    {
        let set: HashSet<u64> = labels.iter().copied().collect();
        if set.len() != labels.len() {
            return Err(Error::InvalidGroupTable("duplicate labels".into()));
        }
        if !set.contains(&identity) {
            return Err(Error::InvalidGroupTable("identity not listed".into()));
        }
        if !set.contains(&generator) {
            return Err(Error::InvalidGroupTable("generator not listed".into()));
        }
        if labels.len() as u64 > MAX_ENUMERATED_ORDER {
            return Err(Error::OrderTooLarge {
                order: labels.len() as u64,
                limit: MAX_ENUMERATED_ORDER,
            });
        }
        let backend = Backend::Table { identity, mul: Arc::new(mul) };
        let mut seen = HashSet::new();
        let mut cur = identity;
        loop {
            if !set.contains(&cur) {
                return Err(Error::InvalidGroupTable(format!("product {cur} leaves the table")));
            }
            if !seen.insert(cur) {
                break;
            }
            cur = backend_mul(&backend, cur, generator);
        }
        if cur != identity {
            return Err(Error::InvalidGroupTable("powers of the generator do not cycle back to the identity".into()));
        }
        let order = seen.len() as u64;
        if order != labels.len() as u64 {
            return Err(Error::InvalidGroupTable(format!(
                "generator has order {order} but the table lists {} labels",
                labels.len()
            )));
        }
        let mut elements: Vec<GroupElement> = labels.iter().map(|&l| GroupElement(l)).collect();
        elements.sort_unstable();
        Ok(GroupSpec { backend, generator: GroupElement(generator), order, elements })
    }

    /// Modulus `n` for the residue backend, `None` for table groups.
    pub fn modulus(&self) -> Option<u64> {
        match self.backend {
            Backend::Modular { n } => Some(n),
            Backend::Table { .. } => None,
        }
    }

    pub fn generator(&self) -> GroupElement {
        self.generator
    }

    /// The group order `m`.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// `m` as a basis dimension.
    pub fn dim(&self) -> usize {
        self.order as usize
    }

    /// Element labels in basis (ascending) order.
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(backend_identity(&self.backend))
    }

    pub fn index_of(&self, x: GroupElement) -> Option<usize> {
        self.elements.binary_search(&x).ok()
    }

    pub fn element(&self, index: usize) -> GroupElement {
        self.elements[index]
    }

    pub fn contains(&self, x: GroupElement) -> bool {
        self.index_of(x).is_some()
    }

    pub fn check(&self, x: GroupElement) -> Result<GroupElement> {
        if self.contains(x) {
            Ok(x)
        } else {
            Err(Error::NotInGroup(x.0))
        }
    }

    pub fn exponent(&self, value: i64) -> Exponent {
        Exponent::new(value, self.order)
    }

    pub fn mul(&self, a: GroupElement, b: GroupElement) -> GroupElement {
        GroupElement(backend_mul(&self.backend, a.0, b.0))
    }

    pub fn inverse(&self, x: GroupElement) -> GroupElement {
        match self.backend {
            Backend::Modular { n } => GroupElement(
                mod_inverse(x.0, n).expect("group elements are units"),
            ),
            Backend::Table { .. } => self.pow_unsigned(x, self.order - 1),
        }
    }

    fn pow_unsigned(&self, x: GroupElement, mut e: u64) -> GroupElement {
        let mut acc = self.identity();
        let mut base = x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `x^r` by square-and-multiply; negative `r` powers the inverse.
    pub fn pow(&self, x: GroupElement, r: i64) -> GroupElement {
        let e = r.unsigned_abs() % self.order;
        if r < 0 {
            self.pow_unsigned(self.inverse(x), e)
        } else {
            self.pow_unsigned(x, e)
        }
    }

    /// `g^r` for an exponent in `Z/mZ`.
    pub fn gen_pow(&self, r: u64) -> GroupElement {
        self.pow_unsigned(self.generator, r % self.order)
    }

    /// Ground-truth discrete logarithm by walking `g^0, g^1, ...`.
    pub fn dlog_oracle(&self, x: GroupElement) -> Result<Exponent> {
        let mut cur = self.identity();
        for p in 0..self.order {
            if cur == x {
                return Ok(Exponent::from_u64(p, self.order));
            }
            cur = self.mul(cur, self.generator);
        }
        Err(Error::NotInGroup(x.0))
    }
}

/// Smallest `g` generating all of `(Z/nZ)^x`, or `None` if that group is not cyclic.
pub fn primitive_root(n: u64) -> Option<u64> {
    let phi = totient(n);
    let factors = factorize(phi);
    (1..n).find(|&g| {
        gcd(g, n) == 1 && factors.iter().all(|&(p, _)| pow_mod(g, phi / p, n) != 1 % n)
    })
}

/// A cyclic group of order `m`, realised as the order-`m` subgroup of
/// `(Z/pZ)^x` for the smallest prime `p = 1 (mod m)`.
pub fn cyclic_group_of_order(m: u64) -> Result<GroupSpec> {
    if m == 0 {
        return Err(Error::InvalidGroupTable("order must be positive".into()));
    }
    let mut p = m + 1;
    while !is_prime(p) {
        p += m;
        if p > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(p));
        }
    }
    let h = primitive_root(p).expect("prime moduli have primitive roots");
    validate_group(p, pow_mod(h, (p - 1) / m, p), false)
}
