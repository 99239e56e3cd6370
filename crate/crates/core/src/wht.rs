//! In-place fast Walsh–Hadamard transform.

/// Unnormalized butterfly transform: on return `data[s] = Σ_x (−1)^{popcount(s & x)} data[x]`.
///
/// `data.len()` must be a power of two.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fwht length must be a power of two");
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(data: &[f64]) -> Vec<f64> {
        (0..data.len())
            .map(|s| {
                data.iter()
                    .enumerate()
                    .map(|(x, v)| if (s & x).count_ones() % 2 == 0 { *v } else { -*v })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_transform() {
        let data: Vec<f64> = (0..32).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        let mut fast = data.clone();
        fwht(&mut fast);
        assert_eq!(fast, naive(&data));
    }

    #[test]
    fn involution_up_to_scale() {
        let data = vec![1.0, -1.0, 1.0, 1.0];
        let mut t = data.clone();
        fwht(&mut t);
        fwht(&mut t);
        let back: Vec<f64> = t.iter().map(|v| v / 4.0).collect();
        assert_eq!(back, data);
    }
}
