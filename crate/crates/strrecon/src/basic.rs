//! Core extension machinery: one-symbol extensions, right/left end location,
//! gap filling, and the generalized reconstruction routine `basic`.
//!
//! `basic(o, S, T)` grows a known substring `S` of the hidden string until it
//! spans all of it, using a known non-substring `T` to budget the search. Its
//! query complexity is n − |S| + |T| + 1.

use crate::bitstr::BitString;
use crate::oracle::SubstringOracle;

/// One left extension: query(1·S); on yes 1·S, otherwise 0·S.
pub fn extend_left<O: SubstringOracle>(o: &mut O, s: &BitString) -> BitString {
    let one = s.prepend(true);
    if o.query(&one) {
        one
    } else {
        s.prepend(false)
    }
}

/// One right extension: query(S·1); on yes S·1, otherwise S·0.
pub fn extend_right<O: SubstringOracle>(o: &mut O, s: &BitString) -> BitString {
    let mut probe = s.clone();
    probe.push(true);
    if o.query(&probe) {
        probe
    } else {
        let mut out = s.clone();
        out.push(false);
        out
    }
}

/// Locates the right end inside an overshot string. `s_over` must be `S'·T`
/// where the true suffix is `S'·T[1..m]` for some m < |T|; probes
/// `S'·T[1..j]` for j = 1, 2, … until the first no and returns the last yes
/// (j may be 0). Spends m+1 queries.
pub fn find_right_end<O: SubstringOracle>(o: &mut O, s_over: &BitString, t: &BitString) -> BitString {
    assert!(s_over.len() >= t.len(), "overshot string shorter than its tail");
    let base = s_over.len() - t.len();
    let mut s = s_over.prefix(base);
    for j in 0..t.len() {
        let mut probe = s.clone();
        probe.push(t.bit(j));
        if !o.query(&probe) {
            return s;
        }
        s = probe;
    }
    debug_assert!(false, "probe tail {t} exhausted without a no answer");
    s
}

/// Mirror of `find_right_end` for the left end. Strips the leading zeros of
/// the overshot string and probes 0^j·core for j = 0, 1, … upward; returns
/// the last yes. `d` only bounds the probing (0^{d+1} is a non-substring).
pub fn find_left_end<O: SubstringOracle>(o: &mut O, s_over: &BitString, d: usize) -> BitString {
    let lead = s_over.leading_run(false);
    let core = s_over.slice(lead, s_over.len() - lead);
    let mut best: Option<BitString> = None;
    for j in 0.. {
        let mut probe = BitString::zeros(j);
        probe.extend_from(&core);
        if !o.query(&probe) {
            break;
        }
        best = Some(probe);
        debug_assert!(j <= d + 1, "left-end probe ran past the 0^{} barrier", d + 1);
    }
    // A dead core (possible when the caller's string was corrupted past the
    // right end) falls back to the core itself; fill's verification query
    // absorbs the inconsistency.
    best.unwrap_or(core)
}

/// Fills the gap between a known prefix `P` (possibly empty) and a known
/// suffix `S`: left-extends `S` to length n − |P| and verifies the result.
///
/// Greedy one-sided extension is not anchoring-sound on its own (a no answer
/// commits the complement without a query, which is wrong when the current
/// string only occurs flush against the left end), so any uncertified result
/// gets one verification query; on failure the failed length-n probe doubles
/// as a non-substring witness and the run is replayed through `basic`, which
/// is unconditionally correct. Normal-path cost: gap length, plus one
/// verification query when `P` is non-empty.
pub fn fill<O: SubstringOracle>(o: &mut O, p: &BitString, s: &BitString) -> BitString {
    let n = o.n();
    assert!(p.len() + s.len() <= n, "prefix and suffix overlap the target length");
    let s0 = s.clone();
    let mut s = s.clone();
    // certified = the current string was confirmed a substring by a query
    // (or is the caller's suffix unchanged).
    let mut certified = true;
    while p.len() + s.len() < n {
        let probe = s.prepend(true);
        if o.query(&probe) {
            s = probe;
            certified = true;
        } else {
            s = s.prepend(false);
            certified = false;
        }
    }
    if p.is_empty() {
        if certified || o.query(&s) {
            return s;
        }
        return basic(o, &s0, &s);
    }
    let joined = p.concat(&s);
    if o.query(&joined) {
        return joined;
    }
    basic(o, &s0, &joined)
}

/// Algorithm: grows `S` rightward by trying sibling one-extensions of each
/// prefix of `T` (resetting on every hit), locates the right end, then
/// extends leftward to full length.
pub fn basic<O: SubstringOracle>(o: &mut O, s0: &BitString, t: &BitString) -> BitString {
    let n = o.n();
    assert!(!t.is_empty(), "non-substring witness must be non-empty");
    let mut s = s0.clone();

    // Right extension: probe S·T[1..i-1]·~T[i]; a yes commits the block and
    // restarts i, a no advances i. |T| consecutive no answers pin every
    // occurrence of S within |T| of the right end.
    let mut i = 1usize;
    let mut probe = BitString::with_capacity(s.len() + t.len());
    while i <= t.len() {
        probe.copy_from(&s);
        for k in 0..i - 1 {
            probe.push(t.bit(k));
        }
        probe.push(!t.bit(i - 1));
        if o.query(&probe) {
            std::mem::swap(&mut s, &mut probe);
            i = 1;
        } else {
            i += 1;
        }
    }

    // Right-end location along T's symbols.
    s = find_right_end(o, &s.concat(t), t);
    o.whitebox_assert_substring(&s, "basic right end");

    // Left extension to full length.
    while s.len() < n {
        s = extend_left(o, &s);
        o.whitebox_assert_substring(&s, "basic left extension");
    }
    s
}
