//! Binary extension fields GF(2^8) and GF(2^16) via log/antilog tables.

use std::fmt::Debug;
use std::ops::{Add, Mul};
use std::sync::OnceLock;

/// Arithmetic in a field of characteristic two, stored as its polynomial-basis
/// bit pattern. Addition is XOR.
pub trait GaloisField:
    Copy + Eq + Debug + Send + Sync + Add<Output = Self> + Mul<Output = Self> + 'static
{
    /// Number of field elements.
    const ORDER: usize;
    /// Bytes occupied by one symbol in a payload.
    const SYMBOL_BYTES: usize;
    const ZERO: Self;
    const ONE: Self;

    /// The element whose bit pattern is `i`. Panics if `i >= ORDER`.
    fn from_index(i: usize) -> Self;
    fn index(self) -> usize;
    /// Multiplicative inverse, `None` for zero.
    fn inv(self) -> Option<Self>;

    fn read_symbol(bytes: &[u8]) -> Self;
    fn write_symbol(self, out: &mut [u8]);
}

struct Tables {
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl Tables {
    /// Builds antilog/log tables for the field defined by the primitive
    /// polynomial `poly` (including its leading bit) with generator `x`.
    fn build(order: usize, poly: usize) -> Self {
        let period = order - 1;
        let mut exp = vec![0u32; 2 * period];
        let mut log = vec![0u32; order];
        let mut x = 1usize;
        for (i, slot) in exp.iter_mut().take(period).enumerate() {
            *slot = x as u32;
            log[x] = i as u32;
            x <<= 1;
            if x & order != 0 {
                x ^= poly;
            }
        }
        for i in period..2 * period {
            exp[i] = exp[i - period];
        }
        Self { exp, log }
    }

    fn mul(&self, a: usize, b: usize) -> usize {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[(self.log[a] + self.log[b]) as usize] as usize
        }
    }

    fn inv(&self, a: usize, order: usize) -> Option<usize> {
        (a != 0).then(|| self.exp[(order - 1 - self.log[a] as usize) % (order - 1)] as usize)
    }
}

macro_rules! binary_field {
    ($(#[$doc:meta])* $name:ident, $repr:ty, $order:expr, $poly:expr, $bytes:expr, $tables:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
        pub struct $name(pub $repr);

        static $tables: OnceLock<Tables> = OnceLock::new();

        impl $name {
            fn tables() -> &'static Tables {
                $tables.get_or_init(|| Tables::build($order, $poly))
            }
        }

        impl Add for $name {
            type Output = Self;
            // Characteristic 2: addition is XOR.
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn add(self, rhs: Self) -> Self {
                Self(self.0 ^ rhs.0)
            }
        }

        impl Mul for $name {
            type Output = Self;
            fn mul(self, rhs: Self) -> Self {
                Self(Self::tables().mul(self.0 as usize, rhs.0 as usize) as $repr)
            }
        }

        impl GaloisField for $name {
            const ORDER: usize = $order;
            const SYMBOL_BYTES: usize = $bytes;
            const ZERO: Self = Self(0);
            const ONE: Self = Self(1);

            fn from_index(i: usize) -> Self {
                assert!(i < $order, "{i} is not an element of a field of order {}", $order);
                Self(i as $repr)
            }

            fn index(self) -> usize {
                self.0 as usize
            }

            fn inv(self) -> Option<Self> {
                Self::tables().inv(self.0 as usize, $order).map(|x| Self(x as $repr))
            }

            fn read_symbol(bytes: &[u8]) -> Self {
                let mut buf = [0u8; $bytes];
                buf.copy_from_slice(&bytes[..$bytes]);
                Self(<$repr>::from_be_bytes(buf))
            }

            fn write_symbol(self, out: &mut [u8]) {
                out[..$bytes].copy_from_slice(&self.0.to_be_bytes());
            }
        }
    };
}

binary_field!(
    /// GF(2^8) modulo x^8 + x^4 + x^3 + x^2 + 1.
    Gf256, u8, 256, 0x11d, 1, GF256_TABLES
);

binary_field!(
    /// GF(2^16) modulo x^16 + x^12 + x^3 + x + 1. Payload symbols are
    /// big-endian byte pairs.
    Gf65536, u16, 65536, 0x1100b, 2, GF65536_TABLES
);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn generator_has_full_order<F: GaloisField>(tables: &Tables) {
        let seen: HashSet<u32> = tables.exp[..F::ORDER - 1].iter().copied().collect();
        assert_eq!(seen.len(), F::ORDER - 1);
        assert!(!seen.contains(&0));
    }

    #[test]
    fn reduction_polynomials_are_primitive() {
        generator_has_full_order::<Gf256>(Gf256::tables());
        generator_has_full_order::<Gf65536>(Gf65536::tables());
    }

    #[test]
    fn known_products() {
        // Table lookups against shift-and-add multiplication.
        fn slow_mul(mut a: u16, mut b: u16, poly: u16) -> u16 {
            let mut acc = 0;
            while b != 0 {
                if b & 1 == 1 {
                    acc ^= a;
                }
                a <<= 1;
                if a & 0x100 != 0 {
                    a ^= poly;
                }
                b >>= 1;
            }
            acc
        }
        for a in 0..=255u16 {
            for b in [0u16, 1, 2, 3, 0x53, 0xca, 0xff] {
                let fast = Gf256(a as u8) * Gf256(b as u8);
                assert_eq!(u16::from(fast.0), slow_mul(a, b, 0x11d));
            }
        }
    }

    #[test]
    fn zero_has_no_inverse() {
        assert_eq!(Gf256::ZERO.inv(), None);
        assert_eq!(Gf65536::ZERO.inv(), None);
        assert_eq!(Gf256::ONE.inv(), Some(Gf256::ONE));
    }

    #[test]
    fn every_gf256_element_inverts() {
        for i in 1..256 {
            let a = Gf256::from_index(i);
            assert_eq!(a * a.inv().unwrap(), Gf256::ONE);
        }
    }

    #[test]
    fn symbols_round_trip() {
        let mut buf = [0u8; 2];
        Gf65536(0xbeef).write_symbol(&mut buf);
        assert_eq!(buf, [0xbe, 0xef]);
        assert_eq!(Gf65536::read_symbol(&buf), Gf65536(0xbeef));
    }

    proptest! {
        #[test]
        fn gf65536_field_laws(a: u16, b: u16, c: u16) {
            let (a, b, c) = (Gf65536(a), Gf65536(b), Gf65536(c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!(a + a, Gf65536::ZERO);
            if a != Gf65536::ZERO {
                prop_assert_eq!(a * a.inv().unwrap(), Gf65536::ONE);
            }
        }

        #[test]
        fn gf256_field_laws(a: u8, b: u8, c: u8) {
            let (a, b, c) = (Gf256(a), Gf256(b), Gf256(c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!((a * b) * c, a * (b * c));
        }
    }
}
