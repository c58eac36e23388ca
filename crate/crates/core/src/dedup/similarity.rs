//! TF-IDF weighted cosine similarity over word shingles.
//!
//! The IDF is computed over the two-document collection formed by the pair,
//! with smoothing `ln((2 + 1) / (df + 1)) + 1`: shingles present in both
//! texts get weight 1 and shingles unique to one text get `ln(1.5) + 1`.

use std::collections::HashMap;

use crate::num::Scalar;
use crate::text::shingles;

/// Shingle counts of one text, reusable across many pairings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShingleProfile {
    counts: HashMap<String, u32>,
    sum_sq: u64,
}

impl ShingleProfile {
    pub fn new(text: &str, n: usize) -> Self {
        let mut counts: HashMap<String, u32> = HashMap::new();
        for s in shingles(text, n) {
            *counts.entry(s).or_default() += 1;
        }
        let sum_sq = counts.values().map(|&c| (c as u64) * (c as u64)).sum();
        ShingleProfile { counts, sum_sq }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

fn idf<T: Scalar>(df: u32) -> T {
    (T::lit(3.0) / T::lit(df as f64 + 1.0)).ln() + T::one()
}

/// Cosine of the TF-IDF vectors of two profiles; 0 if either is empty.
pub fn profile_cosine<T: Scalar>(a: &ShingleProfile, b: &ShingleProfile) -> T {
    if a.is_empty() || b.is_empty() {
        return T::zero();
    }
    let (small, large) = if a.distinct() <= b.distinct() { (a, b) } else { (b, a) };
    let mut dot = 0u64;
    let mut shared_sq_small = 0u64;
    let mut shared_sq_large = 0u64;
    for (shingle, &cs) in &small.counts {
        if let Some(&cl) = large.counts.get(shingle) {
            dot += cs as u64 * cl as u64;
            shared_sq_small += cs as u64 * cs as u64;
            shared_sq_large += cl as u64 * cl as u64;
        }
    }
    if dot == 0 {
        return T::zero();
    }
    let shared_w: T = idf(2);
    let unique_w: T = idf(1);
    let norm_sq = |total: u64, shared: u64| -> T {
        T::lit(shared as f64) * shared_w * shared_w
            + T::lit((total - shared) as f64) * unique_w * unique_w
    };
    let na = norm_sq(small.sum_sq, shared_sq_small);
    let nb = norm_sq(large.sum_sq, shared_sq_large);
    let cos = T::lit(dot as f64) * shared_w * shared_w / (na.sqrt() * nb.sqrt());
    cos.min(T::one()).max(T::zero())
}

pub fn shingle_tfidf_cosine<T: Scalar>(text_a: &str, text_b: &str, n: usize) -> T {
    profile_cosine(&ShingleProfile::new(text_a, n), &ShingleProfile::new(text_b, n))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn identity_and_orthogonality() {
        let t = "La guerrilla atacó el puesto de policía de Toribío";
        assert_abs_diff_eq!(shingle_tfidf_cosine::<f64>(t, t, 2), 1.0, epsilon = 1e-9);
        assert_eq!(shingle_tfidf_cosine::<f64>("uno dos tres", "cuatro cinco seis", 2), 0.0);
        assert_eq!(shingle_tfidf_cosine::<f64>("", t, 2), 0.0);
        assert_eq!(shingle_tfidf_cosine::<f64>("solo", "solo", 2), 0.0);
    }

    #[test]
    fn four_plus_four_bigrams_by_hand() {
        // shared: "el ataque", "ataque dejo" (w = 1)
        // unique: two per side (w = ln 1.5 + 1)
        let w = 1.5f64.ln() + 1.0;
        let expected = 2.0 / (2.0 + 2.0 * w * w);
        let got: f64 =
            shingle_tfidf_cosine("el ataque dejó tres muertos", "el ataque dejó dos heridos", 2);
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.3360969272762575, epsilon = 1e-12);
    }

    #[test]
    fn f32_agrees_with_f64() {
        let a = "Combates entre el ELN y el EPL en el Catatumbo dejan 8 muertos";
        let b = "Ocho muertos dejan combates entre ELN y EPL en el Catatumbo";
        let hi: f64 = shingle_tfidf_cosine(a, b, 2);
        let lo: f32 = shingle_tfidf_cosine(a, b, 2);
        assert!((hi - lo as f64).abs() < 1e-6);
    }
}
