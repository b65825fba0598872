//! Online suffix automaton over the binary alphabet.
//!
//! Supports appending one symbol at a time, so a growing string can be
//! indexed incrementally; `contains` then answers substring membership in
//! O(|pattern|) by walking transitions from the root. Construction is the
//! standard linear-time algorithm (https://cp-algorithms.com/string/suffix-automaton.html).

use crate::bitstr::BitString;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    next: [u32; 2],
    link: u32,
    len: u32,
}

#[derive(Clone, Debug)]
pub struct SuffixAutomaton {
    nodes: Vec<Node>,
    last: u32,
    text_len: usize,
}

impl Default for SuffixAutomaton {
    fn default() -> Self {
        Self::new()
    }
}

impl SuffixAutomaton {
    pub fn new() -> Self {
        SuffixAutomaton {
            nodes: vec![Node { next: [NONE; 2], link: NONE, len: 0 }],
            last: 0,
            text_len: 0,
        }
    }

    pub fn from_bitstring(s: &BitString) -> Self {
        let mut sa = SuffixAutomaton::new();
        sa.nodes.reserve(2 * s.len() + 2);
        for b in s.iter() {
            sa.push(b);
        }
        sa
    }

    /// Number of symbols indexed so far.
    pub fn text_len(&self) -> usize {
        self.text_len
    }

    /// Appends one symbol to the indexed string.
    pub fn push(&mut self, bit: bool) {
        let c = bit as usize;
        let cur = self.nodes.len() as u32;
        let cur_len = self.nodes[self.last as usize].len + 1;
        self.nodes.push(Node { next: [NONE; 2], link: NONE, len: cur_len });

        let mut p = self.last;
        while p != NONE && self.nodes[p as usize].next[c] == NONE {
            self.nodes[p as usize].next[c] = cur;
            p = self.nodes[p as usize].link;
        }
        if p == NONE {
            self.nodes[cur as usize].link = 0;
        } else {
            let q = self.nodes[p as usize].next[c];
            if self.nodes[p as usize].len + 1 == self.nodes[q as usize].len {
                self.nodes[cur as usize].link = q;
            } else {
                let clone = self.nodes.len() as u32;
                let mut cl = self.nodes[q as usize];
                cl.len = self.nodes[p as usize].len + 1;
                self.nodes.push(cl);
                while p != NONE && self.nodes[p as usize].next[c] == q {
                    self.nodes[p as usize].next[c] = clone;
                    p = self.nodes[p as usize].link;
                }
                self.nodes[q as usize].link = clone;
                self.nodes[cur as usize].link = clone;
            }
        }
        self.last = cur;
        self.text_len += 1;
    }

    /// Root state for walks.
    pub fn root(&self) -> u32 {
        0
    }

    /// One transition step; `None` when the extended string is not a substring.
    #[inline]
    pub fn step(&self, state: u32, bit: bool) -> Option<u32> {
        let t = self.nodes[state as usize].next[bit as usize];
        if t == NONE {
            None
        } else {
            Some(t)
        }
    }

    /// Walks `pat[from..]` starting at `state`.
    pub fn walk(&self, mut state: u32, pat: &BitString, from: usize) -> Option<u32> {
        for i in from..pat.len() {
            state = self.step(state, pat.bit(i))?;
        }
        Some(state)
    }

    /// Walks `pat[from..]` in reverse order (used with an automaton that
    /// indexes the reversed text).
    pub fn walk_rev(&self, mut state: u32, pat: &BitString, from_excl: usize) -> Option<u32> {
        for i in (0..from_excl).rev() {
            state = self.step(state, pat.bit(i))?;
        }
        Some(state)
    }

    /// True iff `pat` is a substring of the indexed string.
    pub fn contains(&self, pat: &BitString) -> bool {
        self.walk(self.root(), pat, 0).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn matches_naive_on_small_strings() {
        let h = bs("1100101000");
        let sa = SuffixAutomaton::from_bitstring(&h);
        for pat in ["", "0", "1", "00101", "11011", "1100101000", "000", "0000"] {
            let p = bs(pat);
            assert_eq!(sa.contains(&p), h.contains_naive(&p), "pattern {pat}");
        }
    }

    #[test]
    fn exhaustive_cross_check_against_naive_scan() {
        // Every text of length <= 9 against every pattern of length <= 10.
        for hl in 0..=9usize {
            for hv in 0u64..(1 << hl) {
                let h = BitString::from_u64(hv, hl);
                let sa = SuffixAutomaton::from_bitstring(&h);
                for pl in 0..=hl + 1 {
                    for pv in 0u64..(1 << pl) {
                        let p = BitString::from_u64(pv, pl);
                        assert_eq!(
                            sa.contains(&p),
                            h.contains_naive(&p),
                            "text {h} pattern {p}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn incremental_pushes_agree_with_rebuild() {
        let text = bs("011010011001011010010110");
        let mut inc = SuffixAutomaton::new();
        for (i, b) in text.iter().enumerate() {
            inc.push(b);
            let prefix = text.prefix(i + 1);
            let fresh = SuffixAutomaton::from_bitstring(&prefix);
            for pl in 0..=6usize.min(i + 1) {
                for pv in 0u64..(1 << pl) {
                    let p = BitString::from_u64(pv, pl);
                    assert_eq!(inc.contains(&p), fresh.contains(&p));
                }
            }
        }
    }

    #[test]
    fn walk_composes() {
        let h = bs("10011010");
        let sa = SuffixAutomaton::from_bitstring(&h);
        let p = bs("0110");
        let mid = sa.walk(sa.root(), &p.prefix(2), 0).unwrap();
        assert_eq!(sa.walk(mid, &p, 2), sa.walk(sa.root(), &p, 0));
    }

    #[test]
    fn walk_rev_matches_reversed_walk() {
        let h = bs("110010100011");
        let rev = SuffixAutomaton::from_bitstring(&h.reversed());
        let p = bs("10100");
        assert_eq!(
            rev.walk_rev(rev.root(), &p, p.len()).is_some(),
            rev.contains(&p.reversed())
        );
    }

    proptest! {
        #[test]
        fn prop_contains_matches_naive(h in "[01]{0,80}", p in "[01]{0,24}") {
            let h = bs(&h);
            let p = bs(&p);
            let sa = SuffixAutomaton::from_bitstring(&h);
            prop_assert_eq!(sa.contains(&p), h.contains_naive(&p));
        }
    }
}
