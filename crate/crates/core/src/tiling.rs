//! Substitution rules, generated words and substitution matrices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{characteristic_polynomial, polynomial_roots};

/// Explicit words longer than this are refused.
pub const MAX_WORD_LEN: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionRule {
    alphabet: Vec<char>,
    images: BTreeMap<char, String>,
}

impl SubstitutionRule {
    pub fn new(alphabet: Vec<char>, images: BTreeMap<char, String>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidParameter("alphabet is empty".into()));
        }
        for (i, c) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(c) {
                return Err(Error::InvalidParameter(format!("letter '{c}' repeated")));
            }
        }
        for (&letter, image) in &images {
            if !alphabet.contains(&letter) {
                return Err(Error::UnknownLetter { letter });
            }
            if image.is_empty() {
                return Err(Error::EmptyImage { letter });
            }
            if let Some(bad) = image.chars().find(|c| !alphabet.contains(c)) {
                return Err(Error::UnknownLetter { letter: bad });
            }
        }
        if let Some(&letter) = alphabet.iter().find(|c| !images.contains_key(c)) {
            return Err(Error::EmptyImage { letter });
        }
        Ok(Self { alphabet, images })
    }

    /// Convenience constructor from `(letter, image)` pairs in alphabet order.
    pub fn from_pairs(pairs: &[(char, &str)]) -> Result<Self> {
        let alphabet = pairs.iter().map(|p| p.0).collect();
        let images = pairs.iter().map(|&(c, w)| (c, w.to_string())).collect();
        Self::new(alphabet, images)
    }

    /// The golden-mean rule `a -> ab`, `b -> a`.
    pub fn fibonacci() -> Self {
        Self::from_pairs(&[('a', "ab"), ('b', "a")]).expect("valid rule")
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn image(&self, letter: char) -> Option<&str> {
        self.images.get(&letter).map(String::as_str)
    }

    fn index_of(&self, letter: char) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|&c| c == letter)
            .ok_or(Error::UnknownLetter { letter })
    }

    /// Letter-count vector of a word, in alphabet order.
    pub fn counts(&self, word: &str) -> Result<Vec<u64>> {
        let mut c = vec![0u64; self.alphabet.len()];
        for letter in word.chars() {
            c[self.index_of(letter)?] += 1;
        }
        Ok(c)
    }

    /// The rule composed with itself.
    pub fn squared(&self) -> Self {
        let images = self
            .images
            .iter()
            .map(|(&c, w)| {
                let mut out = String::new();
                for l in w.chars() {
                    out.push_str(&self.images[&l]);
                }
                (c, out)
            })
            .collect();
        Self {
            alphabet: self.alphabet.clone(),
            images,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingWord {
    pub letters: String,
    pub generation: usize,
}

impl TilingWord {
    pub fn new(letters: impl Into<String>, generation: usize) -> Self {
        Self {
            letters: letters.into(),
            generation,
        }
    }

    pub fn len(&self) -> usize {
        self.letters.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Applies `rule` letterwise `steps` times.
pub fn substitute(rule: &SubstitutionRule, seed: &TilingWord, steps: usize) -> Result<TilingWord> {
    let length = word_length(rule, &seed.letters, steps)?;
    if length > MAX_WORD_LEN {
        return Err(Error::GenerationTooLarge { length });
    }
    let mut word = seed.letters.clone();
    for _ in 0..steps {
        let mut next = String::with_capacity(word.len() * 2);
        for c in word.chars() {
            next.push_str(&rule.images[&c]);
        }
        word = next;
    }
    Ok(TilingWord {
        letters: word,
        generation: seed.generation + steps,
    })
}

/// Length of the word after `steps` substitutions, from count vectors only.
pub fn word_length(rule: &SubstitutionRule, seed: &str, steps: usize) -> Result<u64> {
    let counts = evolve_counts(rule, &rule.counts(seed)?, steps)?;
    counts.iter().try_fold(0u64, |acc, &c| {
        acc.checked_add(c).ok_or(Error::Overflow { context: "word length" })
    })
}

/// Letter counts after `steps` substitutions: `c -> M^T c`.
pub fn evolve_counts(rule: &SubstitutionRule, counts: &[u64], steps: usize) -> Result<Vec<u64>> {
    let m = substitution_matrix(rule);
    let n = m.size;
    let mut c = counts.to_vec();
    let overflow = || Error::Overflow {
        context: "letter counts",
    };
    for _ in 0..steps {
        let mut next = vec![0u64; n];
        for (i, &ci) in c.iter().enumerate() {
            for (j, nj) in next.iter_mut().enumerate() {
                let add = ci.checked_mul(m.entry(i, j)).ok_or_else(overflow)?;
                *nj = nj.checked_add(add).ok_or_else(overflow)?;
            }
        }
        c = next;
    }
    Ok(c)
}

/// Fibonacci word of generation `n >= 1`: `a`, `ab`, `aba`, `abaab`, ...
/// Its length is the Fibonacci number `F(n+1)` with `F(1) = F(2) = 1`.
pub fn fibonacci_word(generation: usize) -> Result<TilingWord> {
    if generation == 0 {
        return Err(Error::InvalidParameter("generations start at 1".into()));
    }
    substitute(&SubstitutionRule::fibonacci(), &TilingWord::new("a", 1), generation - 1)
}

/// `entry(i, j)` is the number of occurrences of letter `j` in the image of
/// letter `i`, both in alphabet order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionMatrix {
    size: usize,
    entries: Vec<u64>,
}

impl SubstitutionMatrix {
    pub fn new(size: usize, entries: Vec<u64>) -> Result<Self> {
        if size == 0 {
            return Err(Error::DimensionZero);
        }
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                found: entries.len(),
            });
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.size + j]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.entries.chunks(self.size).map(<[u64]>::to_vec).collect()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let n = self.size;
        let mut out = vec![0u64; n * n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let add = self.entry(i, k).checked_mul(other.entry(k, j)).ok_or(Error::Overflow {
                        context: "matrix product",
                    })?;
                    out[i * n + j] = out[i * n + j].checked_add(add).ok_or(Error::Overflow {
                        context: "matrix product",
                    })?;
                }
            }
        }
        Ok(Self { size: n, entries: out })
    }
}

pub fn substitution_matrix(rule: &SubstitutionRule) -> SubstitutionMatrix {
    let n = rule.alphabet.len();
    let mut entries = vec![0u64; n * n];
    for (i, c) in rule.alphabet.iter().enumerate() {
        for l in rule.images[c].chars() {
            let j = rule.alphabet.iter().position(|&x| x == l).expect("validated");
            entries[i * n + j] += 1;
        }
    }
    SubstitutionMatrix { size: n, entries }
}

/// Wielandt's bound on the exponent of a primitive `n x n` matrix.
pub fn wielandt_bound(n: usize) -> usize {
    (n * n).saturating_sub(2 * n) + 2
}

/// True iff some power `m^k` with `k <= k_cap` is entrywise positive.
/// `None` uses the Wielandt bound.
pub fn is_primitive(m: &SubstitutionMatrix, k_cap: Option<usize>) -> bool {
    let n = m.size;
    let cap = k_cap.unwrap_or_else(|| wielandt_bound(n)).max(1);
    let pattern: Vec<bool> = m.entries.iter().map(|&x| x > 0).collect();
    let mut power = pattern.clone();
    for _ in 0..cap {
        if power.iter().all(|&b| b) {
            return true;
        }
        let mut next = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if !power[i * n + k] {
                    continue;
                }
                for j in 0..n {
                    next[i * n + j] |= pattern[k * n + j];
                }
            }
        }
        power = next;
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerronFrobenius {
    pub eigenvalue: f64,
    pub is_pisot: bool,
}

/// Dominant eigenvalue of a primitive matrix and whether it is a Pisot number.
pub fn perron_frobenius(m: &SubstitutionMatrix) -> Result<PerronFrobenius> {
    if !is_primitive(m, None) {
        return Err(Error::NotPrimitive);
    }
    let rows: Vec<Vec<f64>> = m
        .rows()
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as f64).collect())
        .collect();
    let roots = polynomial_roots(&characteristic_polynomial(&rows));
    let (idx, dominant) = roots
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, z)| (i, z.re))
        .ok_or(Error::DimensionZero)?;
    let others_inside = roots
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx)
        .all(|(_, z)| z.norm() < 1.0 - 1e-12);
    Ok(PerronFrobenius {
        eigenvalue: dominant,
        is_pisot: dominant > 1.0 && others_inside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_words() {
        let rule = SubstitutionRule::fibonacci();
        let w = substitute(&rule, &TilingWord::new("a", 0), 3).unwrap();
        assert_eq!(w.letters, "abaab");
        assert_eq!(w.generation, 3);
        let same = substitute(&rule, &TilingWord::new("ab", 2), 0).unwrap();
        assert_eq!(same, TilingWord::new("ab", 2));
        assert_eq!(fibonacci_word(1).unwrap().letters, "a");
        assert_eq!(fibonacci_word(4).unwrap().letters, "abaab");
        assert_eq!(fibonacci_word(9).unwrap().len(), 55);
    }

    #[test]
    fn rejects_bad_rules() {
        assert_eq!(
            SubstitutionRule::from_pairs(&[('a', "ac")]).unwrap_err(),
            Error::UnknownLetter { letter: 'c' }
        );
        assert_eq!(
            SubstitutionRule::from_pairs(&[('a', "a"), ('b', "")]).unwrap_err(),
            Error::EmptyImage { letter: 'b' }
        );
        let rule = SubstitutionRule::fibonacci();
        assert_eq!(
            substitute(&rule, &TilingWord::new("x", 0), 1).unwrap_err(),
            Error::UnknownLetter { letter: 'x' }
        );
    }

    #[test]
    fn huge_generations_are_refused() {
        let err = fibonacci_word(40).unwrap_err();
        assert_eq!(err.name(), "GenerationTooLarge");
        assert_eq!(
            word_length(&SubstitutionRule::fibonacci(), "a", 39).unwrap(),
            165_580_141
        );
    }

    #[test]
    fn matrices() {
        let fib = substitution_matrix(&SubstitutionRule::fibonacci());
        assert_eq!(fib.rows(), vec![vec![1, 1], vec![1, 0]]);
        let id = substitution_matrix(&SubstitutionRule::from_pairs(&[('a', "a"), ('b', "b")]).unwrap());
        assert_eq!(id.rows(), vec![vec![1, 0], vec![0, 1]]);
        let r = SubstitutionRule::from_pairs(&[('a', "abb"), ('b', "ba")]).unwrap();
        assert_eq!(substitution_matrix(&r).rows(), vec![vec![1, 2], vec![1, 1]]);
    }

    #[test]
    fn primitivity() {
        let fib = SubstitutionMatrix::new(2, vec![1, 1, 1, 0]).unwrap();
        assert!(is_primitive(&fib, None));
        assert!(!is_primitive(&fib, Some(1)));
        assert!(!is_primitive(
            &SubstitutionMatrix::new(2, vec![1, 0, 0, 1]).unwrap(),
            None
        ));
        assert!(!is_primitive(
            &SubstitutionMatrix::new(2, vec![0, 1, 1, 0]).unwrap(),
            Some(50)
        ));
    }

    #[test]
    fn perron_frobenius_values() {
        let fib = SubstitutionMatrix::new(2, vec![1, 1, 1, 0]).unwrap();
        let pf = perron_frobenius(&fib).unwrap();
        assert!((pf.eigenvalue - 1.618_033_988_7).abs() < 1e-9 && pf.is_pisot);
        let m = SubstitutionMatrix::new(2, vec![1, 2, 1, 1]).unwrap();
        let pf = perron_frobenius(&m).unwrap();
        assert!((pf.eigenvalue - (1.0 + 2f64.sqrt())).abs() < 1e-10 && pf.is_pisot);
        assert_eq!(
            perron_frobenius(&SubstitutionMatrix::new(2, vec![2, 0, 0, 2]).unwrap()).unwrap_err(),
            Error::NotPrimitive
        );
        // Thue-Morse: eigenvalues 2 and 0, Pisot
        let tm = SubstitutionMatrix::new(2, vec![1, 1, 1, 1]).unwrap();
        assert!(perron_frobenius(&tm).unwrap().is_pisot);
        // a -> abbb, b -> a has eigenvalues (1 +- sqrt 13)/2, not Pisot
        let np = SubstitutionMatrix::new(2, vec![1, 3, 1, 0]).unwrap();
        assert!(!perron_frobenius(&np).unwrap().is_pisot);
    }
}
