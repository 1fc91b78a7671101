use std::fmt;
use std::sync::Arc;

use super::Value;

/// Which branch of an `if` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Then,
    Else,
}

/// Extra information recorded on a value-tree node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tag {
    None,
    /// An `if` node and the branch it took. Children are `[condition, branch]`.
    Branch(Branch),
    /// A user-function call. Children are the arguments followed by the body.
    Frame(Arc<str>),
}

/// The value of every evaluated sub-expression of one round, arranged like
/// the expression itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTree {
    pub value: Value,
    pub tag: Tag,
    pub children: Vec<ValueTree>,
}

impl ValueTree {
    pub fn leaf(value: Value) -> Self {
        ValueTree {
            value,
            tag: Tag::None,
            children: Vec::new(),
        }
    }

    pub fn node(value: Value, tag: Tag, children: Vec<ValueTree>) -> Self {
        ValueTree { value, tag, children }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    /// Follow one alignment step from this node.
    pub fn step(&self, step: &PathStep) -> Option<&ValueTree> {
        match step {
            PathStep::Child(i) => self.children.get(*i as usize),
            PathStep::Branch(b) => match self.tag {
                Tag::Branch(taken) if taken == *b => self.children.get(1),
                _ => None,
            },
            PathStep::Frame { function, .. } => match &self.tag {
                Tag::Frame(name) if **name == **function => self.children.last(),
                _ => None,
            },
        }
    }

    /// All nodes recording a call to `function`, in preorder.
    pub fn frames<'a>(&'a self, function: &str) -> Vec<&'a ValueTree> {
        let mut out = Vec::new();
        self.collect_frames(function, &mut out);
        out
    }

    fn collect_frames<'a>(&'a self, function: &str, out: &mut Vec<&'a ValueTree>) {
        if let Tag::Frame(name) = &self.tag {
            if &**name == function {
                out.push(self);
            }
        }
        for c in &self.children {
            c.collect_frames(function, out);
        }
    }
}

/// One step of a [`Path`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PathStep {
    /// The i-th child (an operand or argument position).
    Child(u32),
    /// Into the evaluated branch of an `if`, provided it is the given one.
    Branch(Branch),
    /// Into the body of a call to `function` made at call site `site`.
    Frame { function: String, site: u32 },
}

/// The address of a node in a value tree; identifies a program point.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Path(pub Vec<PathStep>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn push(&mut self, step: PathStep) {
        self.0.push(step);
    }

    pub fn pop(&mut self) {
        self.0.pop();
    }

    pub fn child(mut self, i: u32) -> Self {
        self.0.push(PathStep::Child(i));
        self
    }

    pub fn branch(mut self, b: Branch) -> Self {
        self.0.push(PathStep::Branch(b));
        self
    }

    pub fn frame(mut self, function: &str, site: u32) -> Self {
        self.0.push(PathStep::Frame {
            function: function.to_string(),
            site,
        });
        self
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("/")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            match s {
                PathStep::Child(i) => write!(f, "{}", i)?,
                PathStep::Branch(Branch::Then) => f.write_str("then")?,
                PathStep::Branch(Branch::Else) => f.write_str("else")?,
                PathStep::Frame { function, site } => write!(f, "{}@{}", function, site)?,
            }
        }
        Ok(())
    }
}

/// Find the node a path addresses. Absent when any step fails to match,
/// including a branch step through an `if` that took the other branch.
pub fn vt_lookup<'a>(tree: &'a ValueTree, path: &Path) -> Option<&'a Value> {
    vt_node(tree, path).map(|n| &n.value)
}

pub(crate) fn vt_node<'a>(tree: &'a ValueTree, path: &Path) -> Option<&'a ValueTree> {
    let mut node = tree;
    for step in &path.0 {
        node = node.step(step)?;
    }
    Some(node)
}
