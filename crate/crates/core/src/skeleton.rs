//! Skeleton definitions: joint names, the parent tree, the five-part body
//! partition and the central-to-peripheral traversal used when rendering poses.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// The five body parts every skeleton is partitioned into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    LeftArm,
    RightArm,
    LeftLeg,
    RightLeg,
    Trunk,
}

impl BodyPart {
    pub const ALL: [BodyPart; 5] = [
        BodyPart::LeftArm,
        BodyPart::RightArm,
        BodyPart::LeftLeg,
        BodyPart::RightLeg,
        BodyPart::Trunk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::LeftArm => "left_arm",
            BodyPart::RightArm => "right_arm",
            BodyPart::LeftLeg => "left_leg",
            BodyPart::RightLeg => "right_leg",
            BodyPart::Trunk => "trunk",
        }
    }

    pub fn from_name(name: &str) -> Option<BodyPart> {
        BodyPart::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// On-disk skeleton layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkeletonFile {
    pub joints: Vec<String>,
    pub parent: BTreeMap<String, Option<String>>,
    pub parts: BTreeMap<String, Vec<String>>,
    pub traversal: Vec<String>,
}

/// A validated skeleton. Joint indices refer to positions in [`SkeletonSpec::joints`],
/// which is also the coordinate order of every [`Pose`](crate::data::Pose).
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSpec {
    joints: Vec<String>,
    parent: Vec<Option<usize>>,
    parts: BTreeMap<BodyPart, Vec<usize>>,
    traversal: Vec<usize>,
    index: HashMap<String, usize>,
}

impl SkeletonSpec {
    /// Builds and validates a skeleton from its file representation.
    pub fn from_file_repr(file: SkeletonFile) -> Result<Self, DataError> {
        let invalid = |msg: String| DataError::InvalidSkeleton(msg);

        if file.joints.is_empty() {
            return Err(invalid("skeleton has no joints".into()));
        }
        let mut index = HashMap::new();
        for (i, name) in file.joints.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(invalid(format!("joint {i} has an empty name")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(invalid(format!("duplicate joint name {name:?}")));
            }
        }
        let lookup = |name: &str, what: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| invalid(format!("{what} refers to unknown joint {name:?}")))
        };

        // Joints absent from the parent map are roots.
        let mut parent = vec![None; file.joints.len()];
        for (child, par) in &file.parent {
            let c = lookup(child, "parent map")?;
            if let Some(p) = par {
                parent[c] = Some(lookup(p, "parent map")?);
            }
        }
        let roots: Vec<usize> = (0..parent.len()).filter(|&i| parent[i].is_none()).collect();
        // Cycles first: a self-loop or longer cycle leaves the walk without reaching a root.
        for start in 0..parent.len() {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parent[cur] {
                cur = p;
                steps += 1;
                if steps > parent.len() {
                    return Err(DataError::CyclicParents(file.joints[start].clone()));
                }
            }
        }
        if roots.len() != 1 {
            return Err(invalid(format!(
                "expected exactly one root joint, found {}",
                roots.len()
            )));
        }

        let mut parts = BTreeMap::new();
        let mut owner: Vec<Option<BodyPart>> = vec![None; file.joints.len()];
        for (name, members) in &file.parts {
            let part = BodyPart::from_name(name)
                .ok_or_else(|| DataError::BadPartition(format!("unknown body part {name:?}")))?;
            let mut idx = Vec::with_capacity(members.len());
            for m in members {
                let j = lookup(m, "part list")?;
                if let Some(prev) = owner[j] {
                    return Err(DataError::BadPartition(format!(
                        "joint {m:?} belongs to both {prev} and {part}"
                    )));
                }
                owner[j] = Some(part);
                idx.push(j);
            }
            parts.insert(part, idx);
        }
        for part in BodyPart::ALL {
            if !parts.contains_key(&part) {
                return Err(DataError::BadPartition(format!("missing body part {part}")));
            }
        }
        if let Some(j) = owner.iter().position(Option::is_none) {
            return Err(DataError::BadPartition(format!(
                "joint {:?} is not assigned to any body part",
                file.joints[j]
            )));
        }

        if file.traversal.len() != file.joints.len() {
            return Err(DataError::BadTraversal(format!(
                "traversal lists {} joints, skeleton has {}",
                file.traversal.len(),
                file.joints.len()
            )));
        }
        let mut position = vec![usize::MAX; file.joints.len()];
        let mut traversal = Vec::with_capacity(file.traversal.len());
        for (pos, name) in file.traversal.iter().enumerate() {
            let j = lookup(name, "traversal")?;
            if position[j] != usize::MAX {
                return Err(DataError::BadTraversal(format!("joint {name:?} listed twice")));
            }
            position[j] = pos;
            traversal.push(j);
        }
        for (j, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if position[p] > position[j] {
                    return Err(DataError::BadTraversal(format!(
                        "joint {:?} appears before its parent {:?}",
                        file.joints[j], file.joints[p]
                    )));
                }
            }
        }

        Ok(SkeletonSpec {
            joints: file.joints,
            parent,
            parts,
            traversal,
            index,
        })
    }

    pub fn to_file_repr(&self) -> SkeletonFile {
        SkeletonFile {
            joints: self.joints.clone(),
            parent: self
                .joints
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), self.parent[i].map(|p| self.joints[p].clone())))
                .collect(),
            parts: self
                .parts
                .iter()
                .map(|(p, js)| {
                    (
                        p.name().to_string(),
                        js.iter().map(|&j| self.joints[j].clone()).collect(),
                    )
                })
                .collect(),
            traversal: self.traversal.iter().map(|&j| self.joints[j].clone()).collect(),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[String] {
        &self.joints
    }

    pub fn joint_name(&self, joint: usize) -> &str {
        &self.joints[joint]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parent[joint]
    }

    pub fn root(&self) -> usize {
        self.traversal[0]
    }

    /// Joint indices of one body part, in skeleton order of declaration.
    pub fn part(&self, part: BodyPart) -> &[usize] {
        &self.parts[&part]
    }

    /// Central-to-peripheral joint order.
    pub fn traversal(&self) -> &[usize] {
        &self.traversal
    }

    pub fn traversal_position(&self, joint: usize) -> usize {
        self.traversal
            .iter()
            .position(|&j| j == joint)
            .expect("validated traversal covers every joint")
    }
}

/// Reads and validates a skeleton JSON file.
pub fn load_skeleton(path: impl AsRef<Path>) -> Result<SkeletonSpec, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let file: SkeletonFile =
        serde_json::from_str(&text).map_err(|e| DataError::Malformed(format!("{}: {e}", path.display())))?;
    SkeletonSpec::from_file_repr(file)
}
