//! Binary decision tree shared by both ensembles.

use serde::{Deserialize, Serialize};

/// A split routes `value < threshold` left, larger values right and missing
/// values to the side named by `default_left`.
///
/// JSON form: `{"feature": 3, "threshold": 30.5, "default_left": true,
/// "left": {...}, "right": {...}}` for splits and `{"leaf": -0.02448}` for
/// leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        leaf: f64,
    },
}

impl TreeNode {
    pub fn leaf(value: f64) -> Self {
        TreeNode::Leaf { leaf: value }
    }

    /// Leaf value reached by `row`.
    pub fn predict(&self, row: &[Option<f64>]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { leaf } => return *leaf,
                TreeNode::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let go_left = match row[*feature] {
                        Some(v) => v < *threshold,
                        None => *default_left,
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Features used by splits, in pre-order.
    pub fn split_features(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let TreeNode::Split { feature, .. } = n {
                out.push(*feature);
            }
        });
        out
    }

    fn visit<F: FnMut(&TreeNode)>(&self, f: &mut F) {
        f(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }
}

/// Candidate threshold strictly above `lo` and at most `hi` (`lo < hi`).
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> TreeNode {
        TreeNode::Split {
            feature: 0,
            threshold: 30.5,
            default_left: true,
            left: Box::new(TreeNode::leaf(-0.0456)),
            right: Box::new(TreeNode::leaf(0.0974)),
        }
    }

    #[test]
    fn routing() {
        let t = stump();
        assert_eq!(t.predict(&[Some(30.0)]), -0.0456);
        assert_eq!(t.predict(&[Some(30.5)]), 0.0974);
        assert_eq!(t.predict(&[None]), -0.0456);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.split_features(), vec![0]);
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_string(&stump()).unwrap();
        assert_eq!(
            json,
            r#"{"feature":0,"threshold":30.5,"default_left":true,"left":{"leaf":-0.0456},"right":{"leaf":0.0974}}"#
        );
        let back: TreeNode = serde_json::from_str(&json).unwrap();
        assert_eq!(back, stump());
    }

    #[test]
    fn midpoint_separates_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(lo < m && m <= hi);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }
}
