//! Substring oracle over a hidden string.
//!
//! `query(S)` answers whether `S` occurs contiguously in the hidden string.
//! Every call is counted and attributed to the currently active phase; a
//! transcript can be captured for verification runs. The hidden string is
//! never exposed through the query interface itself, only through the
//! explicit `hidden()` accessor used by harness-side verification.
//!
//! Answers come from a suffix automaton of the hidden string (plus one of its
//! reversal), with a small cursor cache: reconstruction algorithms mostly ask
//! about one- or two-symbol extensions of the previous confirmed string, so a
//! cached end state turns those into O(1) walks. Cached resolution is exact;
//! the automaton is deterministic, so extending a cached walk is identical to
//! walking from the root.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use crate::automaton::SuffixAutomaton;
use crate::bitstr::BitString;

/// Query attribution buckets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Default,
    Seed,
    EasyCase,
    MainLoop,
    Sampling,
    SecondSeed,
    Exception,
    Finish,
}

pub const PHASES: [Phase; 8] = [
    Phase::Default,
    Phase::Seed,
    Phase::EasyCase,
    Phase::MainLoop,
    Phase::Sampling,
    Phase::SecondSeed,
    Phase::Exception,
    Phase::Finish,
];

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Default => "default",
            Phase::Seed => "seed",
            Phase::EasyCase => "easycase",
            Phase::MainLoop => "mainloop",
            Phase::Sampling => "sampling",
            Phase::SecondSeed => "second_seed",
            Phase::Exception => "exception",
            Phase::Finish => "finish",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryRecord {
    pub index: u64,
    pub query: BitString,
    pub answer: bool,
    pub phase: Phase,
}

#[derive(Clone)]
struct CacheEntry {
    query: BitString,
    state: u32,
    live: bool,
}

impl CacheEntry {
    fn empty() -> Self {
        CacheEntry { query: BitString::new(), state: 0, live: false }
    }
}

enum Resolved {
    Answer(bool),
    FwdWalk { state: u32, from: usize },
    RevWalk { state: u32, from_excl: usize },
    Fresh,
}

pub struct Oracle {
    hidden: BitString,
    n: usize,
    fwd: SuffixAutomaton,
    rev: SuffixAutomaton,
    fwd_cache: [CacheEntry; 2],
    rev_cache: [CacheEntry; 2],
    fwd_slot: usize,
    rev_slot: usize,
    total: u64,
    phase: Phase,
    phase_counts: [u64; 8],
    transcript: Option<Vec<QueryRecord>>,
    whitebox: bool,
}

impl Oracle {
    pub fn new(hidden: BitString) -> Self {
        Oracle::with_options(hidden, false, false)
    }

    pub fn with_options(hidden: BitString, transcript: bool, whitebox: bool) -> Self {
        let fwd = SuffixAutomaton::from_bitstring(&hidden);
        let rev = SuffixAutomaton::from_bitstring(&hidden.reversed());
        let n = hidden.len();
        Oracle {
            hidden,
            n,
            fwd,
            rev,
            fwd_cache: [CacheEntry::empty(), CacheEntry::empty()],
            rev_cache: [CacheEntry::empty(), CacheEntry::empty()],
            fwd_slot: 0,
            rev_slot: 0,
            total: 0,
            phase: Phase::Default,
            phase_counts: [0; 8],
            transcript: if transcript { Some(Vec::new()) } else { None },
            whitebox,
        }
    }

    /// Length of the hidden string.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Harness-side accessor for post-run verification; not part of the
    /// query interface.
    pub fn hidden(&self) -> &BitString {
        &self.hidden
    }

    pub fn total_queries(&self) -> u64 {
        self.total
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn phase_count(&self, phase: Phase) -> u64 {
        self.phase_counts[phase as usize]
    }

    pub fn phase_counts(&self) -> BTreeMap<&'static str, u64> {
        PHASES
            .iter()
            .map(|&p| (p.name(), self.phase_counts[p as usize]))
            .collect()
    }

    pub fn transcript(&self) -> Option<&[QueryRecord]> {
        self.transcript.as_deref()
    }

    pub fn take_transcript(&mut self) -> Option<Vec<QueryRecord>> {
        self.transcript.take()
    }

    /// Writes the transcript as JSON lines with fields
    /// `index`, `query`, `answer`, `phase`.
    pub fn export_transcript_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for rec in self.transcript.as_deref().unwrap_or(&[]) {
            serde_json::to_writer(&mut w, rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    /// Substring query. Strings longer than the hidden string answer `false`,
    /// the empty string answers `true`; both are counted.
    pub fn query(&mut self, s: &BitString) -> bool {
        let answer = if s.len() > self.n {
            false
        } else if s.is_empty() {
            true
        } else {
            self.resolve(s)
        };
        self.total += 1;
        self.phase_counts[self.phase as usize] += 1;
        if let Some(t) = self.transcript.as_mut() {
            t.push(QueryRecord {
                index: self.total,
                query: s.clone(),
                answer,
                phase: self.phase,
            });
        }
        answer
    }

    fn resolve(&mut self, s: &BitString) -> bool {
        let resolved = self.lookup(s);
        match resolved {
            Resolved::Answer(a) => a,
            Resolved::FwdWalk { state, from } => match self.fwd.walk(state, s, from) {
                Some(end) => {
                    self.store_fwd(s, end);
                    true
                }
                None => false,
            },
            Resolved::RevWalk { state, from_excl } => {
                match self.rev.walk_rev(state, s, from_excl) {
                    Some(end) => {
                        self.store_rev(s, end);
                        true
                    }
                    None => false,
                }
            }
            Resolved::Fresh => {
                let fwd_end = self.fwd.walk(self.fwd.root(), s, 0);
                match fwd_end {
                    Some(end) => {
                        self.store_fwd(s, end);
                        // Seed the reverse cursor too so a direction change
                        // (left extension after right growth) stays cheap.
                        if let Some(rend) = self.rev.walk_rev(self.rev.root(), s, s.len()) {
                            self.store_rev(s, rend);
                        }
                        true
                    }
                    None => false,
                }
            }
        }
    }

    fn lookup(&self, s: &BitString) -> Resolved {
        let mut best: Option<Resolved> = None;
        let mut best_delta = usize::MAX;
        for e in self.fwd_cache.iter().filter(|e| e.live) {
            let delta = match s.len().checked_sub(e.query.len()) {
                Some(d) if d < best_delta => d,
                _ => continue,
            };
            if s.starts_with(&e.query) {
                if delta == 0 {
                    return Resolved::Answer(true);
                }
                best_delta = delta;
                best = Some(Resolved::FwdWalk { state: e.state, from: e.query.len() });
            }
        }
        for e in self.rev_cache.iter().filter(|e| e.live) {
            let delta = match s.len().checked_sub(e.query.len()) {
                Some(d) if d < best_delta => d,
                _ => continue,
            };
            if s.ends_with(&e.query) {
                if delta == 0 {
                    return Resolved::Answer(true);
                }
                best_delta = delta;
                best = Some(Resolved::RevWalk { state: e.state, from_excl: delta });
            }
        }
        best.unwrap_or(Resolved::Fresh)
    }

    fn store_fwd(&mut self, s: &BitString, state: u32) {
        let slot = &mut self.fwd_cache[self.fwd_slot];
        slot.query.copy_from(s);
        slot.state = state;
        slot.live = true;
        self.fwd_slot ^= 1;
    }

    fn store_rev(&mut self, s: &BitString, state: u32) {
        let slot = &mut self.rev_cache[self.rev_slot];
        slot.query.copy_from(s);
        slot.state = state;
        slot.live = true;
        self.rev_slot ^= 1;
    }

    /// Uncounted membership check for white-box assertions and verification.
    pub fn contains_uncounted(&self, s: &BitString) -> bool {
        s.len() <= self.n && self.fwd.contains(s)
    }

    pub fn whitebox_enabled(&self) -> bool {
        self.whitebox
    }

    /// In white-box mode, panics unless `s` is a substring of the hidden
    /// string. Call sites are the points where an algorithm commits symbols
    /// it inferred without a confirming query.
    pub fn whitebox_assert_substring(&self, s: &BitString, context: &str) {
        if self.whitebox && !self.contains_uncounted(s) {
            self.whitebox_fail(&format!("{context}: {s} is not a substring"));
        }
    }

    /// In white-box mode, checks a stored single-child inference: every
    /// occurrence of `key` is followed by `value` (equivalently,
    /// `key`+complement is not a substring).
    pub fn whitebox_assert_follow_label(&self, key: &BitString, value: bool, context: &str) {
        if !self.whitebox {
            return;
        }
        let mut bad = key.clone();
        bad.push(!value);
        if self.contains_uncounted(&bad) {
            self.whitebox_fail(&format!("{context}: label {key} -> {value} contradicted"));
        }
    }

    /// Mirror of `whitebox_assert_follow_label` for predecessor inferences.
    pub fn whitebox_assert_precede_label(&self, key: &BitString, value: bool, context: &str) {
        if !self.whitebox {
            return;
        }
        let bad = key.prepend(!value);
        if self.contains_uncounted(&bad) {
            self.whitebox_fail(&format!("{context}: left label {value} <- {key} contradicted"));
        }
    }

    fn whitebox_fail(&self, msg: &str) -> ! {
        let mut dump = String::new();
        if let Some(t) = self.transcript.as_deref() {
            for rec in t.iter().rev().take(40).collect::<Vec<_>>().into_iter().rev() {
                dump.push_str(&format!(
                    "\n  #{} [{}] {} -> {}",
                    rec.index,
                    rec.phase.name(),
                    rec.query,
                    rec.answer as u8
                ));
            }
        }
        panic!(
            "white-box assertion failed: {msg}\n  hidden = {}\n  queries so far = {}{}",
            self.hidden, self.total, dump
        );
    }
}

/// The query surface the reconstruction routines are written against.
/// Implemented by `Oracle` itself and by `Mirror`, which presents the
/// reversed hidden string so left-anchored procedures can reuse the
/// right-anchored code unchanged.
pub trait SubstringOracle {
    fn n(&self) -> usize;
    fn query(&mut self, s: &BitString) -> bool;
    fn set_phase(&mut self, phase: Phase);
    fn whitebox_assert_substring(&self, s: &BitString, context: &str);
    fn whitebox_assert_follow_label(&self, key: &BitString, value: bool, context: &str);
    /// Containment check against the hidden string that does not count as a
    /// query. Diagnostics only; never feeds back into reconstruction.
    fn contains_uncounted(&self, s: &BitString) -> bool;
}

impl SubstringOracle for Oracle {
    fn n(&self) -> usize {
        Oracle::n(self)
    }
    fn query(&mut self, s: &BitString) -> bool {
        Oracle::query(self, s)
    }
    fn set_phase(&mut self, phase: Phase) {
        Oracle::set_phase(self, phase)
    }
    fn whitebox_assert_substring(&self, s: &BitString, context: &str) {
        Oracle::whitebox_assert_substring(self, s, context)
    }
    fn whitebox_assert_follow_label(&self, key: &BitString, value: bool, context: &str) {
        Oracle::whitebox_assert_follow_label(self, key, value, context)
    }
    fn contains_uncounted(&self, s: &BitString) -> bool {
        Oracle::contains_uncounted(self, s)
    }
}

/// View of an oracle with the hidden string reversed: a query for S is
/// answered by querying reverse(S), which is a substring of χ exactly when
/// S is a substring of reverse(χ). Queries count against the underlying
/// oracle and its transcript records the reversed (actually issued) string.
pub struct Mirror<'a> {
    pub inner: &'a mut Oracle,
}

impl SubstringOracle for Mirror<'_> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn query(&mut self, s: &BitString) -> bool {
        self.inner.query(&s.reversed())
    }
    fn set_phase(&mut self, phase: Phase) {
        self.inner.set_phase(phase)
    }
    fn whitebox_assert_substring(&self, s: &BitString, context: &str) {
        self.inner.whitebox_assert_substring(&s.reversed(), context)
    }
    fn whitebox_assert_follow_label(&self, key: &BitString, value: bool, context: &str) {
        // key -> value in the mirror is the predecessor fact value <- rev(key)
        // about the real hidden string.
        self.inner
            .whitebox_assert_precede_label(&key.reversed(), value, context)
    }
    fn contains_uncounted(&self, s: &BitString) -> bool {
        self.inner.contains_uncounted(&s.reversed())
    }
}
