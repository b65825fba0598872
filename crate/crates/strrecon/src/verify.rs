//! Independent consistency checking: candidate-set tracking shows that every
//! answer sequence is information-theoretically consistent and that the
//! reconstruction is implied by the transcript.

use serde::Serialize;

use crate::automaton::SuffixAutomaton;
use crate::bitstr::BitString;
use crate::oracle::QueryRecord;

/// Cutoff for materializing the candidate set as a bitset; above this only
/// transcript consistency and result equality are checked.
pub const DENSE_LIMIT: usize = 20;

enum Repr {
    /// One bit per candidate value; candidate i is the string from_u64(i, n).
    Dense { words: Vec<u64>, live: u64 },
    /// Recorded constraints; membership is decided on demand.
    Lazy { constraints: Vec<(BitString, bool)> },
}

/// The set of hidden strings consistent with the constraints seen so far.
/// Starts as all of {0,1}^n and only shrinks.
pub struct CandidateSet {
    n: usize,
    repr: Repr,
}

/// Does the length-n candidate value contain the query as a window? The
/// candidate is LSB-first, so the window at offset s is (v >> s) masked.
fn value_contains(v: u64, n: usize, query: &BitString) -> bool {
    let m = query.len();
    if m > n {
        return false;
    }
    if m == 0 {
        return true;
    }
    let q = query.to_u64();
    let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    (0..=n - m).any(|s| (v >> s) & mask == q)
}

impl CandidateSet {
    /// The full set {0,1}^n.
    pub fn full(n: usize) -> CandidateSet {
        let repr = if n <= DENSE_LIMIT {
            let count = 1u64 << n;
            let words = vec![u64::MAX; (count as usize).div_ceil(64)];
            let mut words = words;
            let tail = (count % 64) as usize;
            if tail != 0 {
                let last = words.len() - 1;
                words[last] = (1u64 << tail) - 1;
            }
            Repr::Dense { words, live: count }
        } else {
            Repr::Lazy { constraints: Vec::new() }
        };
        CandidateSet { n, repr }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Removes members inconsistent with (query, answer).
    pub fn filter(&mut self, query: &BitString, answer: bool) {
        let n = self.n;
        match &mut self.repr {
            Repr::Dense { words, live } => {
                for (wi, word) in words.iter_mut().enumerate() {
                    let mut w = *word;
                    while w != 0 {
                        let bit = w.trailing_zeros() as usize;
                        w &= w - 1;
                        let v = (wi * 64 + bit) as u64;
                        if value_contains(v, n, query) != answer {
                            *word &= !(1u64 << bit);
                            *live -= 1;
                        }
                    }
                }
            }
            Repr::Lazy { constraints } => constraints.push((query.clone(), answer)),
        }
    }

    /// Exact member count when materialized.
    pub fn count(&self) -> Option<u64> {
        match &self.repr {
            Repr::Dense { live, .. } => Some(*live),
            Repr::Lazy { .. } => None,
        }
    }

    pub fn contains(&self, s: &BitString) -> bool {
        if s.len() != self.n {
            return false;
        }
        match &self.repr {
            Repr::Dense { words, .. } => {
                let v = s.to_u64() as usize;
                words[v / 64] >> (v % 64) & 1 == 1
            }
            Repr::Lazy { constraints } => constraints
                .iter()
                .all(|(q, a)| (q.len() <= self.n && s.contains_naive(q)) == *a),
        }
    }

    /// True when the set is materialized and provably empty, meaning some
    /// answer was inconsistent with every remaining member.
    pub fn known_empty(&self) -> bool {
        matches!(&self.repr, Repr::Dense { live, .. } if *live == 0)
    }
}

/// Membership clause of a verdict, available when the set is materialized.
#[derive(Debug, Clone, Serialize)]
pub struct Membership {
    pub final_count: u64,
    pub result_in_set: bool,
    /// The final set is a singleton: the answer was information-
    /// theoretically forced.
    pub forced: bool,
    /// queries >= log2(initial / final), i.e. final * 2^queries >= 2^n.
    pub info_bound_ok: bool,
}

/// Outcome of checking one run: (a) every recorded answer matches the
/// hidden string, (b) the result equals the hidden string, (c) when the
/// candidate set is materialized, the result lies in the final set and the
/// query count respects the information bound.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub ok: bool,
    pub answers_consistent: bool,
    pub result_matches: bool,
    pub first_offense: Option<QueryRecord>,
    pub membership: Option<Membership>,
}

/// Checks a recorded run against the hidden string it was produced from.
pub fn check_run(transcript: &[QueryRecord], result: &BitString, hidden: &BitString) -> Verdict {
    let n = hidden.len();
    let auto = SuffixAutomaton::from_bitstring(hidden);

    let mut answers_consistent = true;
    let mut first_offense = None;
    for rec in transcript {
        let expected = rec.query.len() <= n && auto.contains(&rec.query);
        if expected != rec.answer {
            answers_consistent = false;
            first_offense = Some(rec.clone());
            break;
        }
    }

    let result_matches = result == hidden;

    let membership = if n <= DENSE_LIMIT && answers_consistent {
        let mut set = CandidateSet::full(n);
        for rec in transcript {
            set.filter(&rec.query, rec.answer);
        }
        let final_count = set.count().unwrap();
        let queries = transcript.len() as u64;
        let info_bound_ok = final_count > 0
            && (queries >= n as u64 || (final_count as u128) << queries >= 1u128 << n);
        Some(Membership {
            final_count,
            result_in_set: set.contains(result),
            forced: final_count == 1,
            info_bound_ok,
        })
    } else {
        None
    };

    let membership_ok = membership
        .as_ref()
        .map(|m| m.result_in_set && m.info_bound_ok)
        .unwrap_or(true);
    Verdict {
        ok: answers_consistent && result_matches && membership_ok,
        answers_consistent,
        result_matches,
        first_offense,
        membership,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basic::basic;
    use crate::oracle::Oracle;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn filter_pins_two_bit_sets() {
        let mut set = CandidateSet::full(2);
        assert_eq!(set.count(), Some(4));
        set.filter(&bits("1"), false);
        assert_eq!(set.count(), Some(1));
        assert!(set.contains(&bits("00")));

        let mut set = CandidateSet::full(2);
        set.filter(&bits("01"), true);
        assert_eq!(set.count(), Some(1));
        assert!(set.contains(&bits("01")));
    }

    #[test]
    fn contradictory_answers_empty_the_set() {
        let mut set = CandidateSet::full(3);
        set.filter(&bits("0"), true);
        set.filter(&bits("0"), false);
        assert_eq!(set.count(), Some(0));
        assert!(set.known_empty());
        assert!(!set.contains(&bits("000")));
    }

    #[test]
    fn long_and_empty_queries_filter_correctly() {
        let mut set = CandidateSet::full(2);
        // Longer than n matches nothing, so answer false keeps everything.
        set.filter(&bits("101"), false);
        assert_eq!(set.count(), Some(4));
        // The empty string matches everything.
        set.filter(&BitString::new(), true);
        assert_eq!(set.count(), Some(4));
    }

    fn run_basic(hidden: &BitString) -> (Oracle, BitString) {
        let mut o = Oracle::with_options(hidden.clone(), true, true);
        let d = hidden.max_run(false);
        let s0 = BitString::zeros(d);
        let t = BitString::zeros(d + 1);
        let out = basic(&mut o, &s0, &t);
        (o, out)
    }

    #[test]
    fn passing_run_verifies() {
        let hidden = bits("0110100101");
        let (o, out) = run_basic(&hidden);
        let verdict = check_run(o.transcript().unwrap(), &out, &hidden);
        assert!(verdict.ok, "{verdict:?}");
        assert!(verdict.answers_consistent);
        assert!(verdict.result_matches);
        let m = verdict.membership.expect("n <= 20 materializes");
        assert!(m.result_in_set);
        assert!(m.info_bound_ok);
        assert!(m.final_count >= 1);
    }

    #[test]
    fn flipped_answer_is_caught_at_its_index() {
        let hidden = bits("0110100101");
        let (o, out) = run_basic(&hidden);
        let mut transcript = o.transcript().unwrap().to_vec();
        let idx = transcript.len() / 2;
        transcript[idx].answer = !transcript[idx].answer;
        let verdict = check_run(&transcript, &out, &hidden);
        assert!(!verdict.ok);
        assert!(!verdict.answers_consistent);
        let offense = verdict.first_offense.expect("offending record");
        assert_eq!(offense.index, transcript[idx].index);
    }

    #[test]
    fn wrong_result_fails_equality_clause() {
        let hidden = bits("0110100101");
        let (o, out) = run_basic(&hidden);
        let wrong = out.sibling();
        let verdict = check_run(o.transcript().unwrap(), &wrong, &hidden);
        assert!(!verdict.ok);
        assert!(verdict.answers_consistent);
        assert!(!verdict.result_matches);
    }

    #[test]
    fn large_n_checks_consistency_only() {
        let mut hidden = BitString::new();
        for i in 0..30 {
            hidden.push(i % 5 == 0 || i % 3 == 0);
        }
        let (o, out) = run_basic(&hidden);
        let verdict = check_run(o.transcript().unwrap(), &out, &hidden);
        assert!(verdict.ok);
        assert!(verdict.membership.is_none());
    }

    #[test]
    fn exhaustive_small_n_always_verifies() {
        for n in 2..=8usize {
            for v in 0u64..(1u64 << n) {
                let hidden = BitString::from_u64(v, n);
                let (o, out) = run_basic(&hidden);
                let verdict = check_run(o.transcript().unwrap(), &out, &hidden);
                assert!(verdict.ok, "n={n} v={v}: {verdict:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn filtering_only_shrinks(n in 1usize..10, steps in prop::collection::vec((0u64..64, 1usize..6, prop::bool::ANY), 0..12)) {
            let mut set = CandidateSet::full(n);
            let mut prev = set.count().unwrap();
            for (v, len, ans) in steps {
                let q = BitString::from_u64(v, len.min(n + 1));
                set.filter(&q, ans);
                let now = set.count().unwrap();
                prop_assert!(now <= prev);
                prev = now;
            }
        }

        #[test]
        fn hidden_always_survives_its_own_transcript(v in 0u64..1024, n in 4usize..10) {
            let hidden = BitString::from_u64(v & ((1 << n) - 1), n);
            let (o, out) = run_basic(&hidden);
            let mut set = CandidateSet::full(n);
            for rec in o.transcript().unwrap() {
                set.filter(&rec.query, rec.answer);
            }
            prop_assert!(set.contains(&hidden));
            prop_assert!(set.contains(&out));
        }
    }
}
