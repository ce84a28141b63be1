use serde::{Deserialize, Serialize};

/// Norm on a coordinate space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormSpec {
    L1,
    #[default]
    L2,
    Linf,
}

impl NormSpec {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Some(Self::L1),
            "l2" => Some(Self::L2),
            "linf" => Some(Self::Linf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::L1 => "l1",
            Self::L2 => "l2",
            Self::Linf => "linf",
        }
    }

    pub fn strictly_convex(self) -> bool {
        matches!(self, Self::L2)
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            Self::L1 => v.iter().map(|a| a.abs()).sum(),
            Self::L2 => v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Self::Linf => v.iter().fold(0.0, |m, a| m.max(a.abs())),
        }
    }

    pub fn dual(self) -> Self {
        match self {
            Self::L1 => Self::Linf,
            Self::L2 => Self::L2,
            Self::Linf => Self::L1,
        }
    }

    pub fn dual_norm(self, v: &[f64]) -> f64 {
        self.dual().norm(v)
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Self::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Self::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Self::Linf => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        }
    }

    /// Norm of (a, v) with a scalar head.
    pub fn norm_with_head(self, a: f64, v: &[f64]) -> f64 {
        match self {
            Self::L1 => a.abs() + Self::L1.norm(v),
            Self::L2 => (a * a + v.iter().map(|x| x * x).sum::<f64>()).sqrt(),
            Self::Linf => Self::Linf.norm(v).max(a.abs()),
        }
    }
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().fold(0.0, |a, b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [NormSpec; 3] = [NormSpec::L1, NormSpec::L2, NormSpec::Linf];

    #[test]
    fn strict_convexity_flag() {
        assert!(NormSpec::L2.strictly_convex());
        assert!(!NormSpec::L1.strictly_convex());
        assert!(!NormSpec::Linf.strictly_convex());
    }

    #[test]
    fn euclidean_three_four_five() {
        assert_eq!(NormSpec::L2.norm(&[3.0, 4.0]), 5.0);
        assert_eq!(NormSpec::L1.norm(&[3.0, -4.0]), 7.0);
        assert_eq!(NormSpec::Linf.norm(&[3.0, -4.0]), 4.0);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>());
    }

    proptest! {
        #[test]
        fn symmetric_ball(v in prop::collection::vec(-10.0f64..10.0, 1..5)) {
            let neg: Vec<f64> = v.iter().map(|a| -a).collect();
            for n in ALL {
                prop_assert_eq!(n.norm(&v), n.norm(&neg));
            }
        }

        #[test]
        fn triangle(a in prop::collection::vec(-10.0f64..10.0, 3),
                    b in prop::collection::vec(-10.0f64..10.0, 3),
                    c in prop::collection::vec(-10.0f64..10.0, 3)) {
            for n in ALL {
                prop_assert!(n.dist(&a, &c) <= n.dist(&a, &b) + n.dist(&b, &c) + 1e-12);
            }
        }

        #[test]
        fn head_norm_agrees(a in -5.0f64..5.0, v in prop::collection::vec(-5.0f64..5.0, 2)) {
            for n in ALL {
                let full = [a, v[0], v[1]];
                prop_assert!((n.norm_with_head(a, &v) - n.norm(&full)).abs() < 1e-12);
            }
        }
    }
}
