use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifies one problem instance across performance and feature files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceKey {
    pub suite: String,
    pub class_id: u32,
    pub instance_id: u32,
}

impl InstanceKey {
    pub fn new(suite: impl Into<String>, class_id: u32, instance_id: u32) -> Self {
        InstanceKey {
            suite: suite.into(),
            class_id,
            instance_id,
        }
    }
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.suite, self.class_id, self.instance_id)
    }
}
