use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContributionState {
    Submitted,
    UnderReview,
    ChangesRequested,
    Published,
    Rejected,
}

impl ContributionState {
    pub const ALL: [ContributionState; 5] = [
        ContributionState::Submitted,
        ContributionState::UnderReview,
        ContributionState::ChangesRequested,
        ContributionState::Published,
        ContributionState::Rejected,
    ];

    pub const EDGES: [(ContributionState, ContributionState); 5] = [
        (ContributionState::Submitted, ContributionState::UnderReview),
        (ContributionState::UnderReview, ContributionState::Published),
        (ContributionState::UnderReview, ContributionState::Rejected),
        (ContributionState::UnderReview, ContributionState::ChangesRequested),
        (ContributionState::ChangesRequested, ContributionState::Submitted),
    ];

    pub fn can_transition_to(self, next: ContributionState) -> bool {
        Self::EDGES.contains(&(self, next))
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, ContributionState::Published | ContributionState::Rejected)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ContributionState::Submitted => "Submitted",
            ContributionState::UnderReview => "UnderReview",
            ContributionState::ChangesRequested => "ChangesRequested",
            ContributionState::Published => "Published",
            ContributionState::Rejected => "Rejected",
        }
    }
}

impl fmt::Display for ContributionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RecommendationState {
    Submitted,
    EmailQueued,
    EmailSent,
    Accepted,
    Declined,
    Expired,
}

impl RecommendationState {
    pub const ALL: [RecommendationState; 6] = [
        RecommendationState::Submitted,
        RecommendationState::EmailQueued,
        RecommendationState::EmailSent,
        RecommendationState::Accepted,
        RecommendationState::Declined,
        RecommendationState::Expired,
    ];

    pub const EDGES: [(RecommendationState, RecommendationState); 5] = [
        (RecommendationState::Submitted, RecommendationState::EmailQueued),
        (RecommendationState::EmailQueued, RecommendationState::EmailSent),
        (RecommendationState::EmailSent, RecommendationState::Accepted),
        (RecommendationState::EmailSent, RecommendationState::Declined),
        (RecommendationState::EmailSent, RecommendationState::Expired),
    ];

    pub fn can_transition_to(self, next: RecommendationState) -> bool {
        Self::EDGES.contains(&(self, next))
    }

    /// States after which the response token is spent.
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            RecommendationState::Accepted | RecommendationState::Declined | RecommendationState::Expired
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RecommendationState::Submitted => "Submitted",
            RecommendationState::EmailQueued => "EmailQueued",
            RecommendationState::EmailSent => "EmailSent",
            RecommendationState::Accepted => "Accepted",
            RecommendationState::Declined => "Declined",
            RecommendationState::Expired => "Expired",
        }
    }
}

impl fmt::Display for RecommendationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
