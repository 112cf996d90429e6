//! Timing and operation counts for both comparison variants.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crate::arith::SeededRng;
use crate::cipher::Decryptor;
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::keygen::{PublicKey, SecretKey};
use crate::protocols::{run_comparison, PartySession, Variant};
use crate::sharing::share_integer;

/// Results for one variant. Counters are per comparison; they are
/// identical across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantReport {
    pub variant: Variant,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub party_a: OpCounters,
    pub party_b: OpCounters,
}

impl VariantReport {
    /// Party A's encryptions, full decryptions and zero checks equal
    /// `3l/2l/l` (P1) or `l/0/l` (P3).
    pub fn matches_cost_formulas(&self, l: u32) -> bool {
        let l = u64::from(l);
        let expected = match self.variant {
            Variant::P1 => (3 * l, 2 * l, l),
            Variant::P3 => (l, 0, l),
        };
        let a = &self.party_a;
        (a.encryptions, a.full_decryptions, a.zero_checks) == expected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub k: u32,
    pub t: u32,
    pub l: u32,
    pub reps: usize,
    pub seed: u64,
    pub variants: Vec<VariantReport>,
}

impl BenchReport {
    pub fn variant(&self, variant: Variant) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.variant == variant)
    }

    /// Median P3 time over median P1 time.
    pub fn median_ratio(&self) -> Option<f64> {
        Some(self.variant(Variant::P3)?.median_ms / self.variant(Variant::P1)?.median_ms)
    }

    /// Mean P3 time over mean P1 time.
    pub fn mean_ratio(&self) -> Option<f64> {
        Some(self.variant(Variant::P3)?.mean_ms / self.variant(Variant::P1)?.mean_ms)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "k={} t={} l={} reps={} seed={}", self.k, self.t, self.l, self.reps, self.seed);
        let _ = writeln!(
            out,
            "{:<8} {:>10} {:>10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "variant", "mean ms", "median ms", "A enc", "A dec", "A zero", "A exp", "B enc", "B exp"
        );
        for v in &self.variants {
            let _ = writeln!(
                out,
                "{:<8} {:>10.3} {:>10.3} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
                v.variant.to_string(),
                v.mean_ms,
                v.median_ms,
                v.party_a.encryptions,
                v.party_a.full_decryptions,
                v.party_a.zero_checks,
                v.party_a.modexps,
                v.party_b.encryptions,
                v.party_b.modexps
            );
        }
        if let Some(ratio) = self.median_ratio() {
            let _ = writeln!(out, "p3/p1 median time ratio: {ratio:.3}");
        }
        out
    }

    /// `key=value` pairs, one record per line.
    pub fn to_machine(&self) -> String {
        let mut out = format!(
            "record=params k={} t={} l={} reps={} seed={}\n",
            self.k, self.t, self.l, self.reps, self.seed
        );
        for v in &self.variants {
            let _ = write!(out, "record=variant variant={} mean_ms={} median_ms={}", v.variant, v.mean_ms, v.median_ms);
            for (prefix, c) in [("a", &v.party_a), ("b", &v.party_b)] {
                let _ = write!(
                    out,
                    " {prefix}_encryptions={} {prefix}_full_decryptions={} {prefix}_zero_checks={} {prefix}_modexps={}",
                    c.encryptions, c.full_decryptions, c.zero_checks, c.modexps
                );
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_machine(text: &str) -> Result<Self> {
        let mut params = None;
        let mut variants = Vec::new();
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields = Fields::parse(line, lineno + 1)?;
            match fields.get("record")? {
                "params" => {
                    params = Some((
                        fields.num("k")?,
                        fields.num("t")?,
                        fields.num("l")?,
                        fields.num("reps")?,
                        fields.num("seed")?,
                    ))
                }
                "variant" => {
                    let counters = |p: &str| -> Result<OpCounters> {
                        Ok(OpCounters {
                            encryptions: fields.num(&format!("{p}_encryptions"))?,
                            full_decryptions: fields.num(&format!("{p}_full_decryptions"))?,
                            zero_checks: fields.num(&format!("{p}_zero_checks"))?,
                            modexps: fields.num(&format!("{p}_modexps"))?,
                        })
                    };
                    variants.push(VariantReport {
                        variant: fields.num("variant")?,
                        mean_ms: fields.num("mean_ms")?,
                        median_ms: fields.num("median_ms")?,
                        party_a: counters("a")?,
                        party_b: counters("b")?,
                    });
                }
                other => return Err(Error::Encoding(format!("line {}: unknown record {other:?}", lineno + 1))),
            }
        }
        let (k, t, l, reps, seed) = params.ok_or_else(|| Error::Encoding("missing params record".into()))?;
        Ok(BenchReport { k, t, l, reps, seed, variants })
    }
}

struct Fields<'a> {
    line: usize,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn parse(text: &'a str, line: usize) -> Result<Self> {
        let pairs = text
            .split_whitespace()
            .map(|kv| kv.split_once('=').ok_or_else(|| Error::Encoding(format!("line {line}: {kv:?} is not key=value"))))
            .collect::<Result<_>>()?;
        Ok(Fields { line, pairs })
    }

    fn get(&self, key: &str) -> Result<&'a str> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Encoding(format!("line {}: missing {key}", self.line)))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| Error::Encoding(format!("line {}: bad {key}={raw}", self.line)))
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Runs `reps` comparisons per variant on the same random inputs. Only the
/// comparisons themselves are timed.
pub fn run_bench(
    pk: Arc<PublicKey>,
    sk: Arc<SecretKey>,
    decryptor: Arc<Decryptor>,
    reps: usize,
    seed: u64,
) -> Result<BenchReport> {
    if reps == 0 {
        return Err(Error::Parameter("reps must be at least 1".into()));
    }
    let params = pk.params();
    let l = params.l;
    let u = pk.plain_modulus();
    let mut input_rng = SeededRng::with_stream(seed, 0);
    let inputs: Vec<(u64, u64)> = (0..reps)
        .map(|_| (input_rng.uniform_below_u64(1 << l), input_rng.uniform_below_u64(1 << l)))
        .collect();

    let mut variants = Vec::new();
    for variant in [Variant::P1, Variant::P3] {
        let mut times = Vec::with_capacity(reps);
        let mut counters: Option<(OpCounters, OpCounters)> = None;
        for (rep, &(x, y)) in inputs.iter().enumerate() {
            let rep = rep as u64;
            let mut share_rng = SeededRng::with_stream(seed, 3 * rep + 1);
            let (xa, xb) = share_integer(x, l, u, &mut share_rng)?;
            let (ya, yb) = share_integer(y, l, u, &mut share_rng)?;
            let mut a = PartySession::party_a(
                pk.clone(),
                sk.clone(),
                Some(decryptor.clone()),
                xa,
                ya,
                SeededRng::with_stream(seed, 3 * rep + 2),
            )?;
            let mut b = PartySession::party_b(pk.clone(), xb, yb, SeededRng::with_stream(seed, 3 * rep + 3))?;

            let start = Instant::now();
            let outcome = run_comparison(variant, &mut a, &mut b)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);

            if outcome.is_greater() != (y > x) {
                return Err(Error::Integrity(format!("{variant} answered {outcome} for x={x}, y={y}")));
            }
            let run = (a.counters(), b.counters());
            match counters {
                None => counters = Some(run),
                Some(first) if first != run => {
                    return Err(Error::Integrity(format!("{variant} counters changed between repetitions")));
                }
                Some(_) => {}
            }
        }
        let (party_a, party_b) = counters.expect("reps >= 1");
        let mean_ms = times.iter().sum::<f64>() / reps as f64;
        times.sort_by(f64::total_cmp);
        variants.push(VariantReport { variant, mean_ms, median_ms: median(&times), party_a, party_b });
    }
    Ok(BenchReport { k: params.k, t: params.t, l, reps, seed, variants })
}
