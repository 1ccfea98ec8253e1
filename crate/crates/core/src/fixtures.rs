//! Skeletons shipped with the crate, used by tests, the synthetic data
//! generator and as defaults in examples.

use crate::skeleton::{SkeletonFile, SkeletonSpec};

pub const H36M17_JSON: &str = include_str!("../fixtures/skeleton_h36m17.json");
pub const TOY5_JSON: &str = include_str!("../fixtures/skeleton_toy5.json");

fn parse(json: &str) -> SkeletonSpec {
    let file: SkeletonFile = serde_json::from_str(json).expect("bundled skeleton parses");
    SkeletonSpec::from_file_repr(file).expect("bundled skeleton is valid")
}

/// 17-joint Human3.6M-style skeleton rooted at the pelvis.
pub fn h36m_skeleton() -> SkeletonSpec {
    parse(H36M17_JSON)
}

/// Five joints: a trunk root with one joint for each limb.
pub fn toy_skeleton() -> SkeletonSpec {
    parse(TOY5_JSON)
}

/// `root -> a -> b`, with `a` and `b` forming the right arm.
pub fn chain_skeleton() -> SkeletonSpec {
    parse(
        r#"{
            "joints": ["root", "a", "b"],
            "parent": {"root": null, "a": "root", "b": "a"},
            "parts": {"trunk": ["root"], "right_arm": ["a", "b"],
                      "left_arm": [], "left_leg": [], "right_leg": []},
            "traversal": ["root", "a", "b"]
        }"#,
    )
}
