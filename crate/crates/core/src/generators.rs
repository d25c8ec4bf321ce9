//! Baseline code families: Gold codes from a preferred pair of m-sequences,
//! Weil codes from Legendre sequences, and seeded random families.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::family::CodeFamily;

/// Gold family parameters: the two feedback polynomials of a preferred pair
/// of degree-`degree` linear-feedback shift registers and their initial
/// states.
///
/// Taps list the exponents of the middle terms of each feedback polynomial
/// x^d + Σ x^e + 1, so `degree: 7, taps_u: [3]` is x⁷+x³+1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSpec {
    pub degree: u32,
    pub taps_u: Vec<u32>,
    pub taps_v: Vec<u32>,
    pub init_u: Vec<bool>,
    pub init_v: Vec<bool>,
}

impl GoldSpec {
    /// A published preferred pair for the given degree, with all-ones initial
    /// states. Degrees 5 and 7 are built in.
    pub fn with_default_pair(degree: u32) -> Result<Self> {
        let (taps_u, taps_v): (Vec<u32>, Vec<u32>) = match degree {
            5 => (vec![2], vec![4, 3, 2]),
            7 => (vec![3], vec![3, 2, 1]),
            _ => {
                return Err(Error::InvalidSpec {
                    detail: format!(
                        "no built-in preferred pair for degree {degree}; supply taps explicitly"
                    ),
                })
            }
        };
        Ok(GoldSpec::with_taps(degree, taps_u, taps_v))
    }

    /// A spec with explicit taps and all-ones initial states.
    pub fn with_taps(degree: u32, taps_u: Vec<u32>, taps_v: Vec<u32>) -> Self {
        GoldSpec {
            degree,
            taps_u,
            taps_v,
            init_u: vec![true; degree as usize],
            init_v: vec![true; degree as usize],
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.degree;
        if !(2..=24).contains(&d) {
            return Err(Error::InvalidSpec {
                detail: format!("degree {d} out of supported range 2..=24"),
            });
        }
        for taps in [&self.taps_u, &self.taps_v] {
            if taps.is_empty() || taps.iter().any(|&t| t == 0 || t >= d) {
                return Err(Error::InvalidSpec {
                    detail: format!("taps {taps:?} must be exponents strictly between 0 and {d}"),
                });
            }
        }
        for init in [&self.init_u, &self.init_v] {
            if init.len() != d as usize || init.iter().all(|&b| !b) {
                return Err(Error::InvalidSpec {
                    detail: "initial state must have length `degree` and not be all-zero".into(),
                });
            }
        }
        Ok(())
    }
}

/// One period of the binary sequence of a Fibonacci LFSR with feedback
/// polynomial x^d + Σ_{e in taps} x^e + 1. Errors unless the period is
/// exactly 2^d - 1, which certifies the polynomial as maximal.
fn m_sequence(degree: u32, taps: &[u32], init: &[bool]) -> Result<Vec<u8>> {
    let d = degree as usize;
    let n = (1usize << degree) - 1;
    let mut state: Vec<u8> = init.iter().map(|&b| u8::from(b)).collect();
    let initial = state.clone();
    let mut out = Vec::with_capacity(n);
    let mut period = 0usize;
    for step in 1..=n {
        out.push(state[0]);
        let mut fb = state[0];
        for &e in taps {
            fb ^= state[e as usize];
        }
        state.rotate_left(1);
        state[d - 1] = fb;
        if state == initial {
            period = step;
            break;
        }
    }
    if period != n {
        return Err(Error::NonMaximalTaps {
            degree,
            taps: taps.to_vec(),
            period,
            expected: n,
        });
    }
    Ok(out)
}

fn bits_to_chips(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| 1 - 2 * (b as i8)).collect()
}

/// All 2^d + 1 Gold codes of length 2^d - 1: the two component m-sequences
/// u and v, then u XOR shift^k(v) for ascending k, each mapped 0 ↦ +1,
/// 1 ↦ -1.
pub fn gold_family(spec: &GoldSpec) -> Result<CodeFamily> {
    spec.validate()?;
    let u = m_sequence(spec.degree, &spec.taps_u, &spec.init_u)?;
    let v = m_sequence(spec.degree, &spec.taps_v, &spec.init_v)?;
    let n = u.len();

    let mut codes = Vec::with_capacity(n + 2);
    codes.push(bits_to_chips(&u));
    codes.push(bits_to_chips(&v));
    for k in 0..n {
        let combined: Vec<u8> = (0..n).map(|t| u[t] ^ v[(t + k) % n]).collect();
        codes.push(bits_to_chips(&combined));
    }
    CodeFamily::new(codes)
}

/// Weil family parameters: a prime code length and the convention bit stored
/// at index 0 of the Legendre sequence (where the residue test is undefined).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeilSpec {
    pub p: usize,
    pub legendre_zero_bit: u8,
}

impl WeilSpec {
    /// Spec with the default convention: index 0 carries bit 0.
    pub fn new(p: usize) -> Self {
        WeilSpec {
            p,
            legendre_zero_bit: 0,
        }
    }
}

fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2usize;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Length-p Legendre indicator bits: index 0 holds `zero_bit`; index t > 0
/// holds 1 exactly when t is a quadratic residue mod p.
pub fn legendre_sequence(p: usize, zero_bit: u8) -> Result<Vec<u8>> {
    if !is_prime(p) {
        return Err(Error::NotPrime { p });
    }
    let mut bits = vec![0u8; p];
    bits[0] = zero_bit & 1;
    for x in 1..p {
        // x*x % p is never 0 for prime p, so index 0 keeps the convention bit.
        bits[x * x % p] = 1;
    }
    Ok(bits)
}

/// The (p-1)/2 Weil codes of prime length p: code k has bit(t) =
/// l(t) XOR l((t+k) mod p) for k = 1..(p-1)/2, mapped 0 ↦ +1, 1 ↦ -1.
pub fn weil_family(spec: &WeilSpec) -> Result<CodeFamily> {
    let p = spec.p;
    if p < 5 {
        return Err(Error::InvalidSpec {
            detail: format!("weil length {p} must be a prime >= 5"),
        });
    }
    let l = legendre_sequence(p, spec.legendre_zero_bit)?;
    let codes: Vec<Vec<i8>> = (1..=(p - 1) / 2)
        .map(|k| {
            let bits: Vec<u8> = (0..p).map(|t| l[t] ^ l[(t + k) % p]).collect();
            bits_to_chips(&bits)
        })
        .collect();
    CodeFamily::new(codes)
}

/// A uniformly random ±1 family drawn from ChaCha8 seeded with `seed`; the
/// same seed always yields the same family.
pub fn random_family(n: usize, m: usize, seed: u64) -> Result<CodeFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_family_with(&mut rng, n, m)
}

/// Draws a random family from an existing generator, one chip per draw in
/// code-major order.
pub fn random_family_with(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<CodeFamily> {
    if n < 2 || m < 1 {
        return Err(Error::InvalidDimensions { n, m });
    }
    let codes: Vec<Vec<i8>> = (0..m)
        .map(|_| (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
        .collect();
    CodeFamily::new(codes)
}
