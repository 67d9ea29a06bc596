use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{Descriptor, FeatureError};

/// Best and second-best neighbour of one query descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub query_index: usize,
    pub train_index: usize,
    pub distance: f32,
    pub second_distance: f32,
}

/// Exact 2-nearest-neighbour search by L2 distance. Ties go to the lower
/// train index.
pub fn match_knn(query: &[Descriptor], train: &[Descriptor]) -> Result<Vec<Match>, FeatureError> {
    if train.len() < 2 {
        return Err(FeatureError::TooFewTrainDescriptors(train.len()));
    }
    Ok(query
        .iter()
        .enumerate()
        .map(|(qi, q)| {
            let (mut best, mut best_i, mut second) = (f32::INFINITY, 0, f32::INFINITY);
            for (ti, t) in train.iter().enumerate() {
                let d = q.distance_squared(t);
                if d < best {
                    second = best;
                    best = d;
                    best_i = ti;
                } else if d < second {
                    second = d;
                }
            }
            Match { query_index: qi, train_index: best_i, distance: best.sqrt(), second_distance: second.sqrt() }
        })
        .collect())
}

/// Keep matches whose best distance is below `ratio` times the second-best.
pub fn ratio_filter(matches: &[Match], ratio: f32) -> Vec<Match> {
    matches.iter().filter(|m| m.distance < ratio * m.second_distance).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DESCRIPTOR_LEN;

    fn desc(seed: u32) -> Descriptor {
        let mut d = [0.0f32; DESCRIPTOR_LEN];
        let mut x = seed.wrapping_mul(2654435761).wrapping_add(1);
        for v in d.iter_mut() {
            x ^= x << 13;
            x ^= x >> 17;
            x ^= x << 5;
            *v = (x % 1000) as f32 / 1000.0;
        }
        let n = d.iter().map(|v| v * v).sum::<f32>().sqrt();
        d.iter_mut().for_each(|v| *v /= n);
        Descriptor(d)
    }

    fn m(d: f32, s: f32) -> Match {
        Match { query_index: 0, train_index: 0, distance: d, second_distance: s }
    }

    #[test]
    fn self_matching_finds_zero_distance() {
        let set: Vec<Descriptor> = (0..20).map(desc).collect();
        for mm in match_knn(&set, &set).unwrap() {
            assert_eq!(mm.distance, 0.0);
            assert_eq!(mm.train_index, mm.query_index);
            assert!(mm.second_distance > 0.0);
        }
    }

    #[test]
    fn single_query_two_train() {
        let got = match_knn(&[desc(1)], &[desc(2), desc(1)]).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].train_index, 1);
        assert!(got[0].distance <= got[0].second_distance && got[0].second_distance.is_finite());
    }

    #[test]
    fn needs_two_train_descriptors() {
        assert_eq!(match_knn(&[desc(1)], &[desc(2)]), Err(FeatureError::TooFewTrainDescriptors(1)));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(ratio_filter(&[m(0.5, 0.6)], 0.95).len(), 1);
        assert!(ratio_filter(&[m(0.59, 0.6)], 0.95).is_empty());
        assert_eq!(ratio_filter(&[m(0.1, 0.2), m(0.3, 0.31)], 1.0).len(), 2);
    }
}
