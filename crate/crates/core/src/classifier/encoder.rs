use crate::text::{lower_words, stable_hash};

/// Sparse bag-of-buckets input: sorted `(bucket, weight)` pairs whose
/// weights sum to 1 for non-empty text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    pub buckets: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for &(b, w) in &self.buckets {
            v[b as usize] += w;
        }
        v
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

/// Lowercased word tokens, truncated to `max_tokens`, hashed into
/// `1..feature_dim`. Masked tokens all land in bucket 0, so they carry no
/// information about which word was there.
pub fn encode_text(text: &str, feature_dim: usize, max_tokens: usize, masked: &[String]) -> FeatureVector {
    let tokens = lower_words(text);
    let tokens = &tokens[..tokens.len().min(max_tokens)];
    if tokens.is_empty() {
        return FeatureVector::default();
    }
    let span = (feature_dim - 1) as u64;
    let mut ids: Vec<u32> = tokens
        .iter()
        .map(|t| if masked.iter().any(|m| m == t) { 0 } else { 1 + (stable_hash(t) % span) as u32 })
        .collect();
    ids.sort_unstable();
    let w = 1.0 / tokens.len() as f64;
    let mut buckets: Vec<(u32, f64)> = Vec::new();
    for id in ids {
        match buckets.last_mut() {
            Some((b, acc)) if *b == id => *acc += w,
            _ => buckets.push((id, w)),
        }
    }
    FeatureVector { buckets }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_average_and_merge() {
        let f = encode_text("aid aid water", 64, 200, &[]);
        let total: f64 = f.buckets.iter().map(|b| b.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(f.buckets.iter().any(|b| (b.1 - 2.0 / 3.0).abs() < 1e-12));
        assert!(f.buckets.iter().all(|b| b.0 >= 1 && b.0 < 64));
    }

    #[test]
    fn case_insensitive_and_truncated() {
        assert_eq!(encode_text("Water AID", 64, 200, &[]), encode_text("water aid", 64, 200, &[]));
        assert_eq!(encode_text("water aid food", 64, 2, &[]), encode_text("water aid", 64, 200, &[]));
        assert!(encode_text("!!", 64, 200, &[]).is_empty());
    }

    #[test]
    fn masked_tokens_share_bucket_zero() {
        let masked = vec!["women".to_string(), "men".to_string()];
        assert_eq!(encode_text("women need aid", 64, 200, &masked), encode_text("men need aid", 64, 200, &masked));
        assert_eq!(encode_text("women", 64, 200, &masked).buckets, vec![(0, 1.0)]);
    }
}
