use rand::Rng;

/// Draws an index from a probability vector by inversion of one uniform.
///
/// Consumes exactly one `f64` from `rng`. Floating round-off that leaves the
/// uniform past the final cumulative sum falls back to the last index with
/// positive mass.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_positive = i;
            if u < cumulative {
                return i;
            }
        }
    }
    last_positive
}
