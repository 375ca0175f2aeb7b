//! Interaction events: the unit of user activity feeding the model.

/// User identifier as found in the data dump (positive integer).
pub type UserId = u64;

/// Kind of activity behind an interaction. All kinds carry the same
/// basic value by default; the distinction is kept for auditing and
/// for the stable tie-break when sorting equal timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InteractionKind {
    Question,
    Answer,
    Comment,
}

impl InteractionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Question => "post-question",
            InteractionKind::Answer => "post-answer",
            InteractionKind::Comment => "comment",
        }
    }
}

/// One user activity with its creation time and basic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionEvent {
    pub user_id: UserId,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub kind: InteractionKind,
    /// Reputation contribution before the cumulative bonus.
    pub basic_value: f64,
}

impl InteractionEvent {
    pub fn new(user_id: UserId, timestamp: i64, kind: InteractionKind, basic_value: f64) -> Self {
        Self {
            user_id,
            timestamp,
            kind,
            basic_value,
        }
    }
}
