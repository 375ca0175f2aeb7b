//! Vote-driven reputation simulation in the style of StackOverflow.
//!
//! Reputation here is purely additive: each vote adjusts the post
//! author's total by a rule-table delta and totals never decay. The
//! rule table is configuration, not code, so the scoring semantics can
//! be swapped without touching the simulator.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::event::UserId;
use crate::series::{DateWindow, ReputationSeries};

pub type PostId = u64;

/// Maximum vote type id appearing in the dumps (inclusive).
pub const MAX_VOTE_TYPE: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PostType {
    Question,
    Answer,
}

impl PostType {
    pub fn as_str(self) -> &'static str {
        match self {
            PostType::Question => "question",
            PostType::Answer => "answer",
        }
    }
}

/// A post as needed by the simulation: who wrote it and what kind it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostRecord {
    pub post_id: PostId,
    pub author_id: UserId,
    pub post_type: PostType,
    pub parent_id: Option<PostId>,
    pub timestamp: i64,
}

/// One vote from the dump; the recipient is resolved through the post.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteEvent {
    pub vote_id: u64,
    pub post_id: PostId,
    /// Vote type id in `0..=9`.
    pub vote_type: u8,
    pub timestamp: i64,
}

/// Post lookup used to route votes to their recipients.
#[derive(Debug, Default, Clone)]
pub struct PostIndex {
    map: HashMap<PostId, (UserId, PostType)>,
}

impl PostIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, post_id: PostId, author_id: UserId, post_type: PostType) {
        self.map.insert(post_id, (author_id, post_type));
    }

    pub fn from_posts<'a, I: IntoIterator<Item = &'a PostRecord>>(posts: I) -> Self {
        let mut index = Self::new();
        for p in posts {
            index.insert(p.post_id, p.author_id, p.post_type);
        }
        index
    }

    pub fn get(&self, post_id: PostId) -> Option<(UserId, PostType)> {
        self.map.get(&post_id).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RulesError {
    #[error("line {line}: cannot parse rule entry: {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: vote type {value} outside 0..={MAX_VOTE_TYPE}")]
    VoteTypeOutOfRange { line: usize, value: u64 },
    #[error("line {line}: unknown post type {text:?} (expected question or answer)")]
    UnknownPostType { line: usize, text: String },
    #[error("vote type {vote_type} on a {post_type} has no rule and no ignore marker")]
    UnconfiguredVoteType { vote_type: u8, post_type: &'static str },
    #[error("corrupt vote log: vote {vote_id} at {curr} precedes previous vote at {prev}")]
    OutOfOrderVote { vote_id: u64, prev: i64, curr: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
enum Rule {
    #[default]
    Unset,
    Ignore,
    Delta(i64),
}

/// Mapping from `(vote type, post type)` to the reputation delta applied
/// to the post author, plus the floor/cap toggles.
///
/// The default table carries the documented scoring of the dataset era:
/// accepted answer +15, question upvote +5, answer upvote +10, downvote
/// -2, every other vote type ignored. Floor is 1 and there is no daily
/// cap unless configured.
#[derive(Debug, Clone, PartialEq)]
pub struct ReputationRuleTable {
    rules: [[Rule; 2]; (MAX_VOTE_TYPE as usize) + 1],
    /// Totals never drop below this once a user has received a vote.
    pub floor: Option<i64>,
    /// Maximum reputation a user may gain per calendar day.
    pub daily_cap: Option<i64>,
}

impl Default for ReputationRuleTable {
    fn default() -> Self {
        let mut table = Self::empty();
        table.floor = Some(1);
        table.set(1, PostType::Question, Rule::Ignore);
        table.set(1, PostType::Answer, Rule::Delta(15));
        table.set(2, PostType::Question, Rule::Delta(5));
        table.set(2, PostType::Answer, Rule::Delta(10));
        table.set(3, PostType::Question, Rule::Delta(-2));
        table.set(3, PostType::Answer, Rule::Delta(-2));
        for vote_type in [0u8, 4, 5, 6, 7, 8, 9] {
            table.set(vote_type, PostType::Question, Rule::Ignore);
            table.set(vote_type, PostType::Answer, Rule::Ignore);
        }
        table
    }
}

impl ReputationRuleTable {
    /// Table with every entry unset: applying any vote errors until
    /// rules are configured.
    pub fn empty() -> Self {
        Self {
            rules: Default::default(),
            floor: None,
            daily_cap: None,
        }
    }

    fn set(&mut self, vote_type: u8, post_type: PostType, rule: Rule) {
        let column = match post_type {
            PostType::Question => 0,
            PostType::Answer => 1,
        };
        self.rules[vote_type as usize][column] = rule;
    }

    fn get(&self, vote_type: u8, post_type: PostType) -> Rule {
        let column = match post_type {
            PostType::Question => 0,
            PostType::Answer => 1,
        };
        self.rules[vote_type as usize][column]
    }

    /// Delta for one vote, `None` when the vote type is ignored.
    pub fn delta(&self, vote_type: u8, post_type: PostType) -> Result<Option<i64>, RulesError> {
        if vote_type > MAX_VOTE_TYPE {
            return Ok(None);
        }
        match self.get(vote_type, post_type) {
            Rule::Delta(d) => Ok(Some(d)),
            Rule::Ignore => Ok(None),
            Rule::Unset => Err(RulesError::UnconfiguredVoteType {
                vote_type,
                post_type: post_type.as_str(),
            }),
        }
    }

    /// Parses the plain-text rule format, one entry per line:
    ///
    /// ```text
    /// # scoring
    /// 2.question = 5
    /// 2.answer = 10
    /// 4 = ignore
    /// floor = 1        # or: floor = off
    /// daily-cap = off  # or: daily-cap = 200
    /// ```
    ///
    /// A rule file defines the whole table from scratch; vote types it
    /// leaves unset error when encountered in the data.
    pub fn parse(text: &str) -> Result<Self, RulesError> {
        let mut table = Self::empty();
        table.floor = Some(1);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let malformed = || RulesError::Malformed {
                line,
                text: raw.trim().to_string(),
            };
            let (key, value) = content.split_once('=').ok_or_else(malformed)?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "floor" => {
                    table.floor = parse_toggle(value, line)?;
                }
                "daily-cap" => {
                    table.daily_cap = parse_toggle(value, line)?;
                }
                _ => {
                    let (vote_type, post_types) = match key.split_once('.') {
                        Some((vt, pt)) => {
                            let post_type = match pt.trim() {
                                "question" => PostType::Question,
                                "answer" => PostType::Answer,
                                other => {
                                    return Err(RulesError::UnknownPostType {
                                        line,
                                        text: other.to_string(),
                                    })
                                }
                            };
                            (vt.trim(), vec![post_type])
                        }
                        None => (key, vec![PostType::Question, PostType::Answer]),
                    };
                    let vote_type: u64 = vote_type.parse().map_err(|_| malformed())?;
                    if vote_type > u64::from(MAX_VOTE_TYPE) {
                        return Err(RulesError::VoteTypeOutOfRange {
                            line,
                            value: vote_type,
                        });
                    }
                    let rule = if value.eq_ignore_ascii_case("ignore") {
                        Rule::Ignore
                    } else {
                        Rule::Delta(value.parse().map_err(|_| malformed())?)
                    };
                    for post_type in post_types {
                        table.set(vote_type as u8, post_type, rule);
                    }
                }
            }
        }
        Ok(table)
    }

    /// Renders the table back to its config format.
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for vote_type in 0..=MAX_VOTE_TYPE {
            let q = self.get(vote_type, PostType::Question);
            let a = self.get(vote_type, PostType::Answer);
            if q == a {
                match q {
                    Rule::Unset => {}
                    Rule::Ignore => {
                        let _ = writeln!(out, "{vote_type} = ignore");
                    }
                    Rule::Delta(d) => {
                        let _ = writeln!(out, "{vote_type} = {d}");
                    }
                }
                continue;
            }
            for (post_type, rule) in [(PostType::Question, q), (PostType::Answer, a)] {
                match rule {
                    Rule::Unset => {}
                    Rule::Ignore => {
                        let _ = writeln!(out, "{vote_type}.{} = ignore", post_type.as_str());
                    }
                    Rule::Delta(d) => {
                        let _ = writeln!(out, "{vote_type}.{} = {d}", post_type.as_str());
                    }
                }
            }
        }
        match self.floor {
            Some(f) => {
                let _ = writeln!(out, "floor = {f}");
            }
            None => {
                let _ = writeln!(out, "floor = off");
            }
        }
        match self.daily_cap {
            Some(c) => {
                let _ = writeln!(out, "daily-cap = {c}");
            }
            None => {
                let _ = writeln!(out, "daily-cap = off");
            }
        }
        out
    }
}

fn parse_toggle(value: &str, line: usize) -> Result<Option<i64>, RulesError> {
    if value.eq_ignore_ascii_case("off") {
        return Ok(None);
    }
    value
        .parse()
        .map(Some)
        .map_err(|_| RulesError::Malformed {
            line,
            text: value.to_string(),
        })
}

/// Audit counters from one simulation pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SoAudit {
    /// Votes whose delta was applied to an author.
    pub applied: u64,
    /// Votes whose post id could not be resolved.
    pub skipped_unresolvable: u64,
    /// Votes whose type is configured as ignored.
    pub ignored: u64,
    /// Sum of all applied deltas, for conservation checks.
    pub applied_delta_sum: i64,
}

/// Running totals of the simulated reputation.
#[derive(Debug, Clone, Default)]
pub struct SoTotals {
    totals: HashMap<UserId, i64>,
    day_gains: HashMap<UserId, i64>,
    current_day: i64,
    pub audit: SoAudit,
}

impl SoTotals {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, user: UserId) -> i64 {
        self.totals.get(&user).copied().unwrap_or(0)
    }

    pub fn into_map(self) -> HashMap<UserId, i64> {
        self.totals
    }

    pub fn as_map(&self) -> &HashMap<UserId, i64> {
        &self.totals
    }

    /// Applies one vote: resolves the post author and adjusts their
    /// total by the rule-table delta.
    ///
    /// Unresolvable post ids are counted and skipped. Totals are clamped
    /// to the configured floor once a user has any vote activity, and
    /// positive gains are clipped to the daily cap when one is set.
    pub fn apply_vote(
        &mut self,
        vote: &VoteEvent,
        posts: &PostIndex,
        rules: &ReputationRuleTable,
    ) -> Result<(), RulesError> {
        let Some((author, post_type)) = posts.get(vote.post_id) else {
            self.audit.skipped_unresolvable += 1;
            return Ok(());
        };
        let Some(mut delta) = rules.delta(vote.vote_type, post_type)? else {
            self.audit.ignored += 1;
            return Ok(());
        };
        if let Some(cap) = rules.daily_cap {
            let day = vote.timestamp.div_euclid(86_400);
            if day != self.current_day {
                self.day_gains.clear();
                self.current_day = day;
            }
            if delta > 0 {
                let gained = self.day_gains.entry(author).or_insert(0);
                delta = delta.min((cap - *gained).max(0));
                *gained += delta;
            }
        }
        let total = self.totals.entry(author).or_insert(0);
        *total += delta;
        self.audit.applied_delta_sum += delta;
        if let Some(floor) = rules.floor {
            if *total < floor {
                *total = floor;
            }
        }
        self.audit.applied += 1;
        Ok(())
    }
}

fn check_votes_sorted(votes: &[VoteEvent]) -> Result<(), RulesError> {
    for pair in votes.windows(2) {
        if pair[1].timestamp < pair[0].timestamp {
            return Err(RulesError::OutOfOrderVote {
                vote_id: pair[1].vote_id,
                prev: pair[0].timestamp,
                curr: pair[1].timestamp,
            });
        }
    }
    Ok(())
}

/// Final totals after applying every vote, for all users that received one.
pub fn final_so_totals(
    votes: &[VoteEvent],
    posts: &PostIndex,
    rules: &ReputationRuleTable,
) -> Result<SoTotals, RulesError> {
    check_votes_sorted(votes)?;
    let mut totals = SoTotals::new();
    for vote in votes {
        totals.apply_vote(vote, posts, rules)?;
    }
    Ok(totals)
}

/// Daily simulated-reputation series for the given users, in their order.
///
/// Votes must arrive sorted by timestamp. A day's value is the total
/// after every vote up to 23:59:59 UTC of that day; users with no votes
/// stay at zero.
pub fn daily_so_series(
    votes: &[VoteEvent],
    posts: &PostIndex,
    rules: &ReputationRuleTable,
    window: &DateWindow,
    users: &[UserId],
) -> Result<(Vec<ReputationSeries>, SoAudit), RulesError> {
    check_votes_sorted(votes)?;
    let mut totals = SoTotals::new();
    let mut series: Vec<ReputationSeries> = users
        .iter()
        .map(|&u| ReputationSeries::zeros(u, window))
        .collect();
    let mut next = 0;
    for day in 0..window.num_days() {
        let day_end = window.day_end_epoch(day);
        while next < votes.len() && votes[next].timestamp <= day_end {
            totals.apply_vote(&votes[next], posts, rules)?;
            next += 1;
        }
        for (slot, &user) in series.iter_mut().zip(users) {
            slot.values[day] = totals.get(user) as f64;
        }
    }
    // Remaining votes fall past the window end; they never enter a day.
    Ok((series, totals.audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn window(days: u64) -> DateWindow {
        let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        DateWindow::new(start, start + chrono::Days::new(days - 1)).unwrap()
    }

    fn vote(vote_id: u64, post_id: PostId, vote_type: u8, timestamp: i64) -> VoteEvent {
        VoteEvent {
            vote_id,
            post_id,
            vote_type,
            timestamp,
        }
    }

    fn index() -> PostIndex {
        let mut posts = PostIndex::new();
        posts.insert(10, 1, PostType::Answer);
        posts.insert(11, 2, PostType::Question);
        posts
    }

    #[test]
    fn upvote_on_answer_credits_ten() {
        let mut totals = SoTotals::new();
        totals
            .apply_vote(&vote(1, 10, 2, 0), &index(), &ReputationRuleTable::default())
            .unwrap();
        assert_eq!(totals.get(1), 10);
        assert_eq!(totals.audit.applied, 1);
    }

    #[test]
    fn downvote_on_answer_costs_two() {
        let rules = ReputationRuleTable {
            floor: None,
            ..Default::default()
        };
        let mut totals = SoTotals::new();
        totals.apply_vote(&vote(1, 10, 3, 0), &index(), &rules).unwrap();
        assert_eq!(totals.get(1), -2);
    }

    #[test]
    fn floor_holds_totals_up() {
        let mut totals = SoTotals::new();
        totals
            .apply_vote(&vote(1, 10, 3, 0), &index(), &ReputationRuleTable::default())
            .unwrap();
        assert_eq!(totals.get(1), 1);
    }

    #[test]
    fn missing_post_is_skipped_and_counted() {
        let mut totals = SoTotals::new();
        totals
            .apply_vote(&vote(1, 999, 2, 0), &index(), &ReputationRuleTable::default())
            .unwrap();
        assert_eq!(totals.get(1), 0);
        assert_eq!(totals.audit.skipped_unresolvable, 1);
        assert_eq!(totals.audit.applied, 0);
    }

    #[test]
    fn unconfigured_vote_type_is_a_configuration_error() {
        let rules = ReputationRuleTable::parse("2.answer = 10").unwrap();
        let mut totals = SoTotals::new();
        assert!(matches!(
            totals.apply_vote(&vote(1, 10, 5, 0), &index(), &rules),
            Err(RulesError::UnconfiguredVoteType { vote_type: 5, .. })
        ));
    }

    #[test]
    fn daily_cap_clips_positive_gain() {
        let mut rules = ReputationRuleTable::default();
        rules.daily_cap = Some(15);
        let mut totals = SoTotals::new();
        for i in 0..3 {
            totals.apply_vote(&vote(i, 10, 2, 100), &index(), &rules).unwrap();
        }
        assert_eq!(totals.get(1), 15);
        // Next day the cap resets.
        totals.apply_vote(&vote(9, 10, 2, 86_500), &index(), &rules).unwrap();
        assert_eq!(totals.get(1), 25);
    }

    #[test]
    fn series_steps_on_vote_day() {
        let w = window(6);
        let votes = [vote(1, 10, 2, w.start_epoch() + 3 * 86_400 + 60)];
        let (series, audit) = daily_so_series(
            &votes,
            &index(),
            &ReputationRuleTable::default(),
            &w,
            &[1, 2],
        )
        .unwrap();
        assert_eq!(series[0].values, vec![0.0, 0.0, 0.0, 10.0, 10.0, 10.0]);
        assert_eq!(series[1].values, vec![0.0; 6]);
        assert_eq!(audit.applied, 1);
    }

    #[test]
    fn same_day_votes_add_up() {
        let w = window(2);
        let votes = [
            vote(1, 10, 2, w.start_epoch() + 10),
            vote(2, 10, 3, w.start_epoch() + 20),
        ];
        let (series, _) = daily_so_series(
            &votes,
            &index(),
            &ReputationRuleTable::default(),
            &w,
            &[1],
        )
        .unwrap();
        assert_eq!(series[0].values[0], 8.0);
    }

    #[test]
    fn no_votes_gives_zero_series() {
        let w = window(3);
        let (series, _) = daily_so_series(&[], &index(), &ReputationRuleTable::default(), &w, &[1])
            .unwrap();
        assert_eq!(series[0].values, vec![0.0; 3]);
    }

    #[test]
    fn unsorted_votes_are_rejected() {
        let w = window(2);
        let votes = [vote(1, 10, 2, 100), vote(2, 10, 2, 50)];
        assert!(matches!(
            daily_so_series(&votes, &index(), &ReputationRuleTable::default(), &w, &[1]),
            Err(RulesError::OutOfOrderVote { .. })
        ));
    }

    #[test]
    fn rule_table_round_trips_through_config() {
        let table = ReputationRuleTable::default();
        let parsed = ReputationRuleTable::parse(&table.to_config()).unwrap();
        assert_eq!(parsed, table);
    }

    #[test]
    fn parse_rejects_bad_lines() {
        assert!(matches!(
            ReputationRuleTable::parse("2.answer"),
            Err(RulesError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            ReputationRuleTable::parse("12.answer = 3"),
            Err(RulesError::VoteTypeOutOfRange { .. })
        ));
        assert!(matches!(
            ReputationRuleTable::parse("2.post = 3"),
            Err(RulesError::UnknownPostType { .. })
        ));
    }
}
