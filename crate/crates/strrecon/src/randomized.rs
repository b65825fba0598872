//! Randomized reconstruction: an easy-case gate that finishes most strings
//! near the information bound, then a label-assisted extension loop seeded
//! by the longest zero run, with dedicated handling for a sampled second
//! seed and for running into the right end of the string.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::automaton::SuffixAutomaton;
use crate::average::reconstruct_average;
use crate::basic::{basic, extend_left, extend_right, fill, find_left_end, find_right_end};
use crate::bitstr::BitString;
use crate::oracle::{Mirror, Oracle, Phase, SubstringOracle};

/// Tuning constants plus the seed geometry measured at run time. `c1` and
/// `c2` gate the easy case; `q`, `ell`, `r0` drive the main loop once `d`
/// and `d1` are known.
#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub n: usize,
    pub c1: usize,
    pub c2: usize,
    pub delta: f64,
    pub q: usize,
    pub ell: usize,
    pub r0: f64,
    pub d: usize,
    pub d1: usize,
    pub rng_seed: u64,
    /// Set when overridden constants fall below the analyzed thresholds
    /// (C1 >= 20, C2 >= 40). Results stay correct; only the query-count
    /// guarantee is affected.
    pub guarantee_void: bool,
}

/// Builds the parameter block for a failure budget `delta`, honoring
/// explicit overrides for the two constants.
pub fn derive_params(
    n: usize,
    delta: f64,
    c1_override: Option<usize>,
    c2_override: Option<usize>,
) -> Params {
    assert!(n >= 2, "derive_params needs n >= 2");
    assert!(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
    let c2 = c2_override.unwrap_or_else(|| (8192.0 * (3.0 / delta).ln()).ceil() as usize);
    let c1 = c1_override.unwrap_or(c2.div_ceil(2));
    Params {
        n,
        c1,
        c2,
        delta,
        q: n.div_ceil(100),
        ell: 0,
        r0: 0.0,
        d: 0,
        d1: 0,
        rng_seed: 0,
        guarantee_void: c1 < 20 || c2 < 40,
    }
}

/// Which terminal the top-level routine reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    EasyCase,
    Exception,
    SecondSeed,
    BasicFinish,
    /// Delegation to the average-case routine when n is too small for the
    /// gate or the loop budget; kept distinct so reports stay honest.
    Fallback,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::EasyCase => "EasyCase",
            Branch::Exception => "Exception",
            Branch::SecondSeed => "SecondSeed",
            Branch::BasicFinish => "BasicFinish",
            Branch::Fallback => "Fallback",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "EasyCase" => Ok(Branch::EasyCase),
            "Exception" => Ok(Branch::Exception),
            "SecondSeed" => Ok(Branch::SecondSeed),
            "BasicFinish" => Ok(Branch::BasicFinish),
            "Fallback" => Ok(Branch::Fallback),
            other => Err(format!("unknown branch {other:?}")),
        }
    }
}

/// Query counts split by oracle phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseBreakdown {
    pub seed: u64,
    pub easycase: u64,
    pub mainloop: u64,
    pub sampling: u64,
    pub second_seed: u64,
    pub exception: u64,
    pub finish: u64,
}

impl PhaseBreakdown {
    pub fn total(&self) -> u64 {
        self.seed
            + self.easycase
            + self.mainloop
            + self.sampling
            + self.second_seed
            + self.exception
            + self.finish
    }
}

/// Counters and tags describing what a run actually did.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    /// Main-loop iterations eligible for sampling (|I| >= ell).
    pub sample_draws: u64,
    /// Eligible iterations whose coin came up under r0.
    pub samples_taken: u64,
    pub label_entries: u64,
    pub two_extensions: u64,
    pub second_seed_geometry: Option<&'static str>,
    pub exception_entered: bool,
    pub exception_second_seed: bool,
    /// A deeper overlap than the literal scan start would also have merged
    /// the two fragments into a true substring.
    pub scan_missed_overlap: bool,
    pub fallback_reason: Option<&'static str>,
}

/// Full record of one randomized reconstruction.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub result: BitString,
    pub branch: Branch,
    pub queries_total: u64,
    pub queries_by_phase: PhaseBreakdown,
    pub params: Params,
    pub rng_seed: u64,
    pub diagnostics: Diagnostics,
}

/// Single-child contexts learned about the hidden string: an entry V -> t
/// asserts that every occurrence of V is followed by t (preceded by t, in
/// mirrored use).
#[derive(Debug, Default, Clone)]
pub struct LabelDB {
    map: HashMap<BitString, bool>,
}

impl LabelDB {
    pub fn insert(&mut self, key: BitString, value: bool) {
        self.map.insert(key, value);
    }

    pub fn get(&self, key: &BitString) -> Option<bool> {
        self.map.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Result of the easy-case attempt: either the finished string, or the
/// measured seed geometry for the main loop.
#[derive(Debug, Clone)]
pub enum EasyOutcome {
    Done(BitString),
    Seed { d: usize, d1: usize },
}

fn random_bits<R: Rng>(rng: &mut R, len: usize) -> BitString {
    BitString::from_bits((0..len).map(|_| rng.random::<bool>()))
}

/// Bisection for the longest zero run: maintains 0^lo a known substring and
/// 0^hi a known non-substring. Returns the run length and the queries spent.
pub fn bs_run_search(o: &mut Oracle, lo: usize, hi: usize) -> (usize, u64) {
    assert!(lo < hi, "bisection needs lo < hi");
    let (mut lo, mut hi) = (lo, hi);
    let mut spent = 0u64;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        spent += 1;
        if o.query(&BitString::zeros(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, spent)
}

/// The easy-case gate. Requires floor(log2 n) >= C1 + 1; the caller falls
/// back to the average-case routine otherwise. Finishes outright when the
/// string has a very long zero run, when the seed was cheap to measure, or
/// when a long all-ones block is present; otherwise reports (d, d1).
pub fn try_easycase<R: Rng>(o: &mut Oracle, p: &Params, rng: &mut R) -> EasyOutcome {
    let l = o.n().ilog2() as usize;
    assert!(l > p.c1, "easy case needs log2(n) - C1 >= 1");
    o.set_phase(Phase::EasyCase);
    let start = o.total_queries();

    // A zero run of length l - C1 exists: draw random strings of length
    // l + C1 until one misses, then finish from that seed pair. Misses are
    // overwhelmingly likely per draw, and some non-substring of that length
    // always exists because 2^(l + C1) > n.
    if o.query(&BitString::zeros(l - p.c1)) {
        let seed = BitString::zeros(l - p.c1);
        loop {
            let x = random_bits(rng, l + p.c1);
            if !o.query(&x) {
                o.set_phase(Phase::Finish);
                return EasyOutcome::Done(basic(o, &seed, &x));
            }
        }
    }

    // Bracket the longest zero run by doubling, then bisect. The descending
    // probe lengths stay positive: a computed zero length is treated as the
    // trivial substring without spending a query.
    let (lo, hi) = if o.query(&BitString::zeros((l / 2).max(1))) {
        let mut i = 0usize;
        loop {
            let len = (l - p.c1).saturating_sub(1 << i);
            if len == 0 || o.query(&BitString::zeros(len)) {
                let hi = if i == 0 { l - p.c1 } else { l - p.c1 - (1 << (i - 1)) };
                break (len, hi);
            }
            i += 1;
        }
    } else {
        let mut i = 0usize;
        loop {
            if !o.query(&BitString::zeros(1 << i)) {
                let lo = if i == 0 { 0 } else { 1 << (i - 1) };
                break (lo, 1 << i);
            }
            i += 1;
        }
    };
    let (d, _) = bs_run_search(o, lo, hi);
    let d1 = (o.total_queries() - start) as usize;

    // Cheap seed: the run pair finishes within budget.
    if d1 <= p.c2 {
        o.set_phase(Phase::Finish);
        return EasyOutcome::Done(basic(o, &BitString::zeros(d), &BitString::zeros(d + 1)));
    }
    // Expensive seed but a long ones block exists: seed from it instead.
    let ones = BitString::ones(d + 2 * d1);
    if o.query(&ones) {
        o.set_phase(Phase::Finish);
        return EasyOutcome::Done(basic(o, &ones, &BitString::zeros(d + 1)));
    }
    EasyOutcome::Seed { d, d1 }
}

/// Pads with zeros until the trailing run reads 0^(d+1). The padded tail is
/// sentinel metadata consumed by the exception path, not a claimed substring.
fn pad_sentinel(mut s: BitString, d: usize) -> BitString {
    while s.trailing_run(false) < d + 1 {
        s.push(false);
    }
    s
}

/// Two-symbol extension under a single-child label t: tries I.t.s for a
/// random s, then I.t.~s, then I.t alone. When all three miss, the right end
/// has been passed and the current string is padded into the sentinel.
pub fn two_extension<O: SubstringOracle, R: Rng>(
    o: &mut O,
    i_str: &BitString,
    t: bool,
    d: usize,
    rng: &mut R,
) -> BitString {
    let s: bool = rng.random();
    let mut cand = i_str.clone();
    cand.push(t);
    cand.push(s);
    if o.query(&cand) {
        o.whitebox_assert_substring(&cand, "two_extension first");
        return cand;
    }
    let mut cand = i_str.clone();
    cand.push(t);
    cand.push(!s);
    if o.query(&cand) {
        o.whitebox_assert_substring(&cand, "two_extension second");
        return cand;
    }
    let mut stem = i_str.clone();
    stem.push(t);
    if o.query(&stem) {
        o.whitebox_assert_substring(&stem, "two_extension stem");
        return pad_sentinel(stem, d);
    }
    pad_sentinel(i_str.clone(), d)
}

/// Free extension under a predecessor label: t.I with no query. Not
/// whitebox-asserted; near the left end the label source may sit past the
/// boundary even though the label entry itself is true.
pub fn two_extension_left(i_str: &BitString, t: bool) -> BitString {
    i_str.prepend(t)
}

/// How a second seed resolved against the first fragment.
#[derive(Debug, Clone, Copy)]
pub struct SeedGeometry {
    pub tag: &'static str,
    pub scan_missed_overlap: bool,
}

fn geometry(tag: &'static str) -> SeedGeometry {
    SeedGeometry { tag, scan_missed_overlap: false }
}

/// Diagnostic only, query-free: would an overlap deeper than the literal
/// scan start (the second seed's length at entry) have merged the fragments
/// into a true substring?
fn deeper_overlap_possible<O: SubstringOracle>(
    o: &O,
    i_str: &BitString,
    s: &BitString,
    k: usize,
) -> bool {
    let hi = i_str.len().min(s.len());
    for j in (k + 1)..=hi {
        if i_str.suffix(j) == s.prefix(j) {
            let cand = i_str.concat(&s.suffix(s.len() - j));
            if cand.len() <= o.n() && o.contains_uncounted(&cand) {
                return true;
            }
        }
    }
    false
}

/// Resolves a sampled double-child hit. `s0` is a certified substring whose
/// sibling is a suffix of `i0`, so it marks a second occurrence of that
/// context. Grows the second seed rightward until it either confirms the
/// first fragment's run prefix (the occurrence sits just left of it), or
/// reaches a right end; then grows the first fragment leftward and merges:
/// disjoint fragments are filled as prefix plus suffix, overlapping ones are
/// joined on the deepest verified overlap up to the entry length.
pub fn second_seed<O: SubstringOracle>(
    o: &mut O,
    i0: &BitString,
    s0: &BitString,
    d: usize,
) -> (BitString, SeedGeometry) {
    let n = o.n();
    o.set_phase(Phase::SecondSeed);
    let mut i_str = i0.clone();
    let mut s = s0.clone();
    let k = s.len();

    // I = 0^a.1.Z. A degenerate I (all zeros, or nothing after the first
    // one) can only arrive through overshoot on the mirrored side; the run
    // seed pair is the unconditional recovery.
    let a = i_str.leading_run(false);
    if a + 1 >= i_str.len() {
        o.set_phase(Phase::Finish);
        let out = basic(o, &BitString::zeros(d), &BitString::zeros(d + 1));
        return (out, geometry("degenerate"));
    }
    let z = i_str.suffix(i_str.len() - a - 1);

    // Rightward growth of the second seed. Whenever its tail reads 0^d it
    // may be sitting where the first fragment starts; probe for 1.Z.
    loop {
        s = extend_right(o, &s);
        assert!(s.len() <= n + d + 4, "second seed right phase failed to halt");
        if s.len() >= d && s.suffix(d) == BitString::zeros(d) {
            let mut head = s.clone();
            head.push(true);
            head.push(z.bit(0));
            if o.query(&head) {
                let mut full = s.clone();
                full.push(true);
                full.extend_from(&z);
                if o.query(&full) {
                    // The second seed runs right into the first: one
                    // certified substring covers both, finish from it.
                    o.whitebox_assert_substring(&full, "second seed join");
                    o.set_phase(Phase::Finish);
                    let out = basic(o, &full, &BitString::zeros(d + 1));
                    return (out, geometry("left_hit"));
                }
                s = head;
            } else {
                let mut alt = s.clone();
                alt.push(true);
                alt.push(!z.bit(0));
                if !o.query(&alt) {
                    let mut stem = s.clone();
                    stem.push(true);
                    if o.query(&stem) {
                        s = stem;
                    } else {
                        let mut over = s.clone();
                        over.push(false);
                        s = find_right_end(o, &over, &BitString::zeros(d + 1));
                    }
                    break;
                }
                s = alt;
            }
        }
    }

    // Leftward growth of the first fragment until the two cover the string.
    while i_str.len() + s.len() <= n {
        i_str = extend_left(o, &i_str);
        if i_str.len() > d && i_str.prefix(d + 1) == BitString::zeros(d + 1) {
            i_str = find_left_end(o, &i_str, d);
            o.set_phase(Phase::Finish);
            let out = fill_checked(o, &i_str, &s, d, false);
            return (out, geometry("disjoint"));
        }
    }
    if !o.query(&i_str) {
        i_str = find_left_end(o, &i_str, d);
        o.set_phase(Phase::Finish);
        let out = fill_checked(o, &i_str, &s, d, false);
        return (out, geometry("disjoint"));
    }

    // The fragments overlap: scan down from the entry length for a border
    // whose join the oracle confirms.
    for j in (1..=k.min(i_str.len()).min(s.len())).rev() {
        if i_str.suffix(j) == s.prefix(j) {
            let cand = i_str.concat(&s.suffix(s.len() - j));
            if cand.len() <= n && o.query(&cand) {
                let missed = deeper_overlap_possible(o, &i_str, &s, k);
                o.set_phase(Phase::Finish);
                let out = fill_checked(o, &BitString::new(), &cand, d, true);
                return (out, SeedGeometry { tag: "overlap", scan_missed_overlap: missed });
            }
        }
    }
    let missed = deeper_overlap_possible(o, &i_str, &s, k);
    o.set_phase(Phase::Finish);
    let out = fill_checked(o, &BitString::new(), &i_str, d, true);
    (out, SeedGeometry { tag: "fall_off", scan_missed_overlap: missed })
}

/// Guarded fill: falls back to the run seed pair when the fragments
/// overshoot the target length, and verifies a full-length suffix the
/// caller could not certify. The run pair is unconditionally correct, so
/// every path returns the hidden string.
pub fn fill_checked<O: SubstringOracle>(
    o: &mut O,
    p: &BitString,
    s: &BitString,
    d: usize,
    s_certified: bool,
) -> BitString {
    let n = o.n();
    if p.len() + s.len() > n {
        return basic(o, &BitString::zeros(d), &BitString::zeros(d + 1));
    }
    if p.is_empty() && s.len() == n {
        if s_certified || o.query(s) {
            return s.clone();
        }
        return basic(o, &BitString::zeros(d), &BitString::zeros(d + 1));
    }
    fill(o, p, s)
}

/// First j >= 0 such that the sibling of the length-(ell+j) suffix of `text`
/// is not itself a substring of `text` (checked query-free on the local
/// automaton). Terminates: flipping the last symbol of the whole string
/// never yields one of its own substrings.
fn sibling_escape(auto: &SuffixAutomaton, text: &BitString, ell: usize) -> BitString {
    let mut j = 0usize;
    loop {
        assert!(ell + j <= text.len(), "sibling escape ran past the working string");
        let w = text.suffix(ell + j).sibling();
        if !auto.contains(&w) {
            return w;
        }
        j += 1;
    }
}

/// Right-end exception: the main loop drifted into the 0^(d+1) sentinel, so
/// the string's right end is pinned under the working suffix. Trims the
/// overshoot, then mirrors the main loop leftward (prefix sampling,
/// predecessor labels, free prepends) for a further q symbols before filling
/// the remainder. Runs on the reversed problem through `Mirror` so the
/// suffix-side machinery is reused verbatim.
fn exception<R: Rng>(
    o: &mut Oracle,
    i_entry: &BitString,
    d: usize,
    p: &Params,
    rng: &mut R,
    diag: &mut Diagnostics,
) -> BitString {
    diag.exception_entered = true;
    o.set_phase(Phase::Exception);
    let n = o.n();
    let trimmed = find_right_end(o, i_entry, &BitString::zeros(d + 1));
    let budget = (p.q + trimmed.len()).min(n);

    // rev mirrors the real working string; appending to rev is prepending
    // to it. Certification tracks whether the whole of rev is backed by a
    // yes answer: a committed one-extension re-certifies everything, a
    // committed zero or a free label push does not.
    let mut rev = trimmed.reversed();
    let mut auto = SuffixAutomaton::from_bitstring(&rev);
    let mut labels = LabelDB::default();
    let mut certified = true;
    let mut mirror = Mirror { inner: &mut *o };

    while rev.len() < budget {
        if rev.len() >= p.ell {
            diag.sample_draws += 1;
            if rng.random::<f64>() < p.r0 {
                diag.samples_taken += 1;
                let w = sibling_escape(&auto, &rev, p.ell);
                if mirror.query(&w) {
                    diag.exception_second_seed = true;
                    let (out, geom) = second_seed(&mut mirror, &rev, &w, d);
                    diag.second_seed_geometry = Some(geom.tag);
                    diag.scan_missed_overlap |= geom.scan_missed_overlap;
                    return out.reversed();
                }
                let key = w.parent();
                let t = rev.bit(rev.len() - 1);
                mirror.whitebox_assert_follow_label(&key, t, "exception label");
                labels.insert(key, t);
                diag.label_entries += 1;
            }
        }
        if rev.len() + 1 >= p.ell {
            let mut hit = None;
            for len in (p.ell - 1)..=rev.len() {
                if let Some(t) = labels.get(&rev.suffix(len)) {
                    hit = Some(t);
                    break;
                }
            }
            if let Some(t) = hit {
                rev.push(t);
                auto.push(t);
                certified = false;
                diag.two_extensions += 1;
                if rev.len() >= budget {
                    break;
                }
            }
        }
        rev = extend_right(&mut mirror, &rev);
        auto.push(rev.bit(rev.len() - 1));
        certified = rev.bit(rev.len() - 1);
    }

    mirror.set_phase(Phase::Finish);
    let real = rev.reversed();
    let cert = certified || (real.len() <= n && o.query(&real));
    if cert {
        fill_checked(o, &BitString::new(), &real, d, true)
    } else {
        basic(o, &BitString::zeros(d), &BitString::zeros(d + 1))
    }
}

fn assemble(
    o: &mut Oracle,
    total0: u64,
    counts0: &[u64; 8],
    branch: Branch,
    result: BitString,
    params: Params,
    diagnostics: Diagnostics,
) -> Outcome {
    o.set_phase(Phase::Default);
    let delta = |ph: Phase| o.phase_count(ph) - counts0[ph as usize];
    let rng_seed = params.rng_seed;
    Outcome {
        result,
        branch,
        queries_total: o.total_queries() - total0,
        queries_by_phase: PhaseBreakdown {
            seed: delta(Phase::Seed),
            easycase: delta(Phase::EasyCase),
            mainloop: delta(Phase::MainLoop),
            sampling: delta(Phase::Sampling),
            second_seed: delta(Phase::SecondSeed),
            exception: delta(Phase::Exception),
            finish: delta(Phase::Finish),
        },
        params,
        rng_seed,
        diagnostics,
    }
}

fn phase_snapshot(o: &Oracle) -> [u64; 8] {
    let mut counts = [0u64; 8];
    for (slot, phase) in counts.iter_mut().zip(crate::oracle::PHASES) {
        *slot = o.phase_count(phase);
    }
    counts
}

/// Top-level randomized reconstruction. Correct for every input and every
/// seed; the run is fully determined by the hidden string, the parameters,
/// and `rng_seed`.
pub fn double_seed(o: &mut Oracle, params: &Params, rng_seed: u64) -> Outcome {
    let total0 = o.total_queries();
    let counts0 = phase_snapshot(o);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut diag = Diagnostics::default();
    let n = o.n();
    let mut p = params.clone();
    p.n = n;
    p.q = n.div_ceil(100);
    p.rng_seed = rng_seed;

    let l = if n >= 2 { n.ilog2() as usize } else { 0 };
    if l < p.c1 + 1 {
        diag.fallback_reason = Some("log2(n) - c1 below 1");
        let result = reconstruct_average(o);
        return assemble(o, total0, &counts0, Branch::Fallback, result, p, diag);
    }

    let (d, d1) = match try_easycase(o, &p, &mut rng) {
        EasyOutcome::Done(result) => {
            return assemble(o, total0, &counts0, Branch::EasyCase, result, p, diag);
        }
        EasyOutcome::Seed { d, d1 } => (d, d1),
    };
    p.d = d;
    p.d1 = d1;
    p.ell = d + 2 * d1;
    p.r0 = (d1 as f64 / (2.0 * p.q as f64)).min(1.0);

    if p.q < p.ell + 2 {
        diag.fallback_reason = Some("q below ell + 2");
        let result = reconstruct_average(o);
        return assemble(o, total0, &counts0, Branch::Fallback, result, p, diag);
    }

    // Main loop: extend the run-seeded fragment rightward to q certified
    // symbols, learning single-child labels from failed samples and cashing
    // them in as free two-symbol steps.
    o.set_phase(Phase::MainLoop);
    let mut i_str = BitString::zeros(d);
    let mut auto = SuffixAutomaton::from_bitstring(&i_str);
    let mut labels = LabelDB::default();
    let mut certified = true;

    loop {
        if i_str.trailing_run(false) > d {
            let result = exception(o, &i_str, d, &p, &mut rng, &mut diag);
            return assemble(o, total0, &counts0, Branch::Exception, result, p, diag);
        }
        if i_str.len() >= p.q && certified {
            break;
        }
        debug_assert!(i_str.len() <= p.q + d + 8, "main loop overran its budget");

        if i_str.len() >= p.ell {
            diag.sample_draws += 1;
            if rng.random::<f64>() < p.r0 {
                diag.samples_taken += 1;
                let w = sibling_escape(&auto, &i_str, p.ell);
                o.set_phase(Phase::Sampling);
                let hit = o.query(&w);
                o.set_phase(Phase::MainLoop);
                if hit {
                    let (result, geom) = second_seed(o, &i_str, &w, d);
                    diag.second_seed_geometry = Some(geom.tag);
                    diag.scan_missed_overlap |= geom.scan_missed_overlap;
                    return assemble(o, total0, &counts0, Branch::SecondSeed, result, p, diag);
                }
                let key = w.parent();
                let t = i_str.bit(i_str.len() - 1);
                o.whitebox_assert_follow_label(&key, t, "main loop label");
                labels.insert(key, t);
                diag.label_entries += 1;
            }
        }

        let mut stepped = false;
        if i_str.len() + 1 >= p.ell {
            for len in (p.ell - 1)..=i_str.len() {
                if let Some(t) = labels.get(&i_str.suffix(len)) {
                    let before = i_str.len();
                    i_str = two_extension(o, &i_str, t, d, &mut rng);
                    for idx in before..i_str.len() {
                        auto.push(i_str.bit(idx));
                    }
                    certified = i_str.trailing_run(false) < d + 1;
                    diag.two_extensions += 1;
                    stepped = true;
                    break;
                }
            }
        }
        if !stepped {
            i_str = extend_right(o, &i_str);
            auto.push(i_str.bit(i_str.len() - 1));
            certified = i_str.bit(i_str.len() - 1);
        }
    }

    o.set_phase(Phase::Finish);
    let result = basic(o, &i_str, &BitString::zeros(d + 1));
    assemble(o, total0, &counts0, Branch::BasicFinish, result, p, diag)
}
