use crate::error::{Error, Result};

/// Which side of a comment linkage the query should select.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommentDirection {
    /// Publications that have received at least one comment.
    HasCommentIn,
    /// Publications that are themselves comments on another publication.
    HasCommentOn,
}

impl CommentDirection {
    pub fn filter_term(self) -> &'static str {
        match self {
            CommentDirection::HasCommentIn => "hascommentin",
            CommentDirection::HasCommentOn => "hascommenton",
        }
    }
}

pub fn build_query(topic_clause: &str, direction: CommentDirection) -> Result<String> {
    if topic_clause.trim().is_empty() {
        return Err(Error::InvalidArgument("topic clause must not be empty".into()));
    }
    Ok(format!("({topic_clause}) and {}", direction.filter_term()))
}
