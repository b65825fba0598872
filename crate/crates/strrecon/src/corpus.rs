//! Test corpora: deterministic families of hidden strings chosen to steer
//! runs into specific reconstruction regimes (long runs, tight periodicity,
//! right-end contact, rich context repetition).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bitstr::BitString;

/// A corpus family. The string forms select which reconstruction paths get
/// exercised: uniform bits for typical behavior, degenerate runs for the
/// seed edge cases, periodic and de Bruijn content for label dynamics, and
/// planted runs for main-loop and right-end behavior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Random,
    AllZero,
    AllOne,
    /// Cyclic repetition of the pattern, truncated to n.
    Periodic(BitString),
    /// A binary de Bruijn sequence of the given order, rotated per trial
    /// and cycled/truncated to n.
    DeBruijn(u32),
    /// Longest zero run exactly d, planted at a random position; all other
    /// zero runs are shorter.
    RunLength(usize),
    /// Longest zero run of length `run` planted with `offset` symbols
    /// between its end and the right end of the string.
    NearEnd { offset: usize, run: usize },
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::Random => "random".into(),
            Family::AllZero => "allzero".into(),
            Family::AllOne => "allone".into(),
            Family::Periodic(p) => format!("periodic:{p}"),
            Family::DeBruijn(k) => format!("debruijn:{k}"),
            Family::RunLength(d) => format!("runlength:{d}"),
            Family::NearEnd { offset, run } => format!("nearend:{offset}:{run}"),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl serde::Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let no_arg = |family: Family| match arg {
            None => Ok(family),
            Some(_) => Err(format!("family {head} takes no parameter")),
        };
        match head {
            "random" => no_arg(Family::Random),
            "allzero" => no_arg(Family::AllZero),
            "allone" => no_arg(Family::AllOne),
            "periodic" => {
                let pat: BitString = arg
                    .ok_or("periodic needs a pattern, e.g. periodic:011")?
                    .parse()
                    .map_err(|e| format!("bad periodic pattern: {e}"))?;
                if pat.is_empty() {
                    return Err("periodic pattern must be nonempty".into());
                }
                Ok(Family::Periodic(pat))
            }
            "debruijn" => {
                let k: u32 = arg
                    .ok_or("debruijn needs an order, e.g. debruijn:4")?
                    .parse()
                    .map_err(|e| format!("bad de Bruijn order: {e}"))?;
                if k == 0 || k > 24 {
                    return Err("de Bruijn order must lie in 1..=24".into());
                }
                Ok(Family::DeBruijn(k))
            }
            "runlength" => {
                let d: usize = arg
                    .ok_or("runlength needs a run length, e.g. runlength:5")?
                    .parse()
                    .map_err(|e| format!("bad run length: {e}"))?;
                Ok(Family::RunLength(d))
            }
            "nearend" => {
                let arg = arg.ok_or("nearend needs an offset, e.g. nearend:5 or nearend:5:3")?;
                let (offset, run) = match arg.split_once(':') {
                    Some((o, r)) => (
                        o.parse().map_err(|e| format!("bad offset: {e}"))?,
                        r.parse().map_err(|e| format!("bad run: {e}"))?,
                    ),
                    None => (arg.parse().map_err(|e| format!("bad offset: {e}"))?, 2),
                };
                if run == 0 {
                    return Err("nearend run must be positive".into());
                }
                Ok(Family::NearEnd { offset, run })
            }
            other => Err(format!(
                "unknown family {other:?}; expected random, allzero, allone, \
                 periodic:PAT, debruijn:K, runlength:D, nearend:OFF[:RUN]"
            )),
        }
    }
}

/// Binary de Bruijn sequence of the given order (length 2^order), via the
/// classic Lyndon-word concatenation.
pub fn debruijn_sequence(order: u32) -> BitString {
    let k = order as usize;
    let mut seq = BitString::with_capacity(1 << k);
    let mut a = vec![0u8; k + 1];
    // Iterative form of db(t, p): stack of (t, p, next symbol to try).
    fn db(t: usize, p: usize, k: usize, a: &mut Vec<u8>, seq: &mut BitString) {
        if t > k {
            if k.is_multiple_of(p) {
                for &x in &a[1..=p] {
                    seq.push(x == 1);
                }
            }
        } else {
            a[t] = a[t - p];
            db(t + 1, p, k, a, seq);
            if a[t - p] == 0 {
                a[t] = 1;
                db(t + 1, t, k, a, seq);
            }
        }
    }
    db(1, 1, k, &mut a, &mut seq);
    debug_assert_eq!(seq.len(), 1 << k);
    seq
}

/// Random bits with every zero run capped at `cap` (a zero is forced to one
/// once the cap is reached).
fn capped_random(rng: &mut ChaCha8Rng, n: usize, cap: usize) -> BitString {
    let mut s = BitString::with_capacity(n);
    let mut run = 0usize;
    for _ in 0..n {
        let bit = if run >= cap { true } else { rng.random::<bool>() };
        s.push(bit);
        run = if bit { 0 } else { run + 1 };
    }
    s
}

/// Plants 0^run over positions [pos, pos+run), forcing the flanking symbols
/// to one so the run is exact.
fn plant_run(s: &mut BitString, pos: usize, run: usize) {
    let n = s.len();
    let lo = pos.saturating_sub(1);
    let hi = (pos + run + 1).min(n);
    let mut rebuilt = BitString::with_capacity(n);
    for i in 0..n {
        let bit = if i >= pos && i < pos + run {
            false
        } else if i >= lo && i < hi {
            true
        } else {
            s.bit(i)
        };
        rebuilt.push(bit);
    }
    *s = rebuilt;
}

fn gen_one(family: &Family, n: usize, rng: &mut ChaCha8Rng) -> Result<BitString, String> {
    match family {
        Family::Random => Ok(BitString::from_bits((0..n).map(|_| rng.random::<bool>()))),
        Family::AllZero => Ok(BitString::zeros(n)),
        Family::AllOne => Ok(BitString::ones(n)),
        Family::Periodic(pat) => {
            let mut s = BitString::with_capacity(n);
            for i in 0..n {
                s.push(pat.bit(i % pat.len()));
            }
            Ok(s)
        }
        Family::DeBruijn(order) => {
            let seq = debruijn_sequence(*order);
            let rot = rng.random_range(0..seq.len());
            let mut s = BitString::with_capacity(n);
            for i in 0..n {
                s.push(seq.bit((rot + i) % seq.len()));
            }
            Ok(s)
        }
        Family::RunLength(d) => {
            let d = *d;
            if d > n {
                return Err(format!("runlength {d} exceeds n = {n}"));
            }
            if d == 0 {
                return Ok(BitString::ones(n));
            }
            if d == n {
                return Ok(BitString::zeros(n));
            }
            let mut s = if d == 1 {
                BitString::ones(n)
            } else {
                capped_random(rng, n, d - 1)
            };
            let pos = rng.random_range(0..=n - d);
            plant_run(&mut s, pos, d);
            debug_assert_eq!(s.max_run(false), d);
            Ok(s)
        }
        Family::NearEnd { offset, run } => {
            let (offset, run) = (*offset, *run);
            if offset + run > n {
                return Err(format!("nearend offset {offset} + run {run} exceeds n = {n}"));
            }
            let mut s = if run == 1 {
                BitString::ones(n)
            } else {
                capped_random(rng, n, run - 1)
            };
            let pos = n - offset - run;
            plant_run(&mut s, pos, run);
            debug_assert_eq!(s.max_run(false), run);
            Ok(s)
        }
    }
}

fn mix_stream(seed: u64, index: u64) -> u64 {
    // splitmix64 over the pair, so entry i is independent of count.
    let mut z = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Generates `count` strings of length n from the family, deterministic in
/// `rng_seed` and independent of how many are requested.
pub fn gen_corpus(
    family: &Family,
    n: usize,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<BitString>, String> {
    (0..count as u64)
        .map(|i| gen_corpus_entry(family, n, rng_seed, i))
        .collect()
}

/// Entry `index` of the corpus stream, without materializing the rest.
pub fn gen_corpus_entry(
    family: &Family,
    n: usize,
    rng_seed: u64,
    index: u64,
) -> Result<BitString, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_stream(rng_seed, index));
    gen_one(family, n, &mut rng)
}
