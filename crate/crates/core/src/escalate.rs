//! Escalation over coefficient prefixes.
//!
//! Enumerates the finite set of coefficient prefixes closed under the
//! chain rule `a_{i+1} <= a_1 + ... + a_i + 1` (with `a_1 = 1` and
//! nondecreasing entries), builds escalation trees whose children append
//! every admissible coefficient up to the current truant, and classifies
//! prefixes by obstruction primes and dropout patterns.

use crate::polyform::{self, Bitset, MGonalForm};
use crate::{Error, Result};
use serde::Serialize;
use std::sync::OnceLock;

/// Maximum prefix length tracked by the classification machinery.
pub const MAX_PREFIX_LEN: usize = 16;

/// A coefficient prefix satisfying the unconditional chain rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Prefix {
    a: Vec<i64>,
    sum: i64,
}

impl Prefix {
    pub fn new(a: Vec<i64>) -> Result<Self> {
        if a.is_empty() || a.len() > MAX_PREFIX_LEN {
            return Err(Error::Invalid(format!(
                "prefix length {} out of range 1..={MAX_PREFIX_LEN}",
                a.len()
            )));
        }
        if a[0] != 1 {
            return Err(Error::Invalid("prefix must start with 1".into()));
        }
        let mut sum = 0i64;
        for (i, &ai) in a.iter().enumerate() {
            if ai < 1 {
                return Err(Error::Invalid("prefix entries must be positive".into()));
            }
            if i > 0 && (ai < a[i - 1] || ai > sum + 1) {
                return Err(Error::Invalid(format!(
                    "entry a_{} = {ai} violates the chain rule (sum so far {sum})",
                    i + 1
                )));
            }
            debug_assert!(ai <= 1i64 << i, "chain rule implies a_k <= 2^(k-1)");
            sum += ai;
        }
        Ok(Prefix { a, sum })
    }

    pub fn entries(&self) -> &[i64] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn sum(&self) -> i64 {
        self.sum
    }

    /// Thresholded admissibility from the escalation bound: the chain rule
    /// is only binding at positions where the running sum is still below
    /// `threshold`. Every `Prefix` satisfies the unconditional rule, so
    /// this is the variant used when a concrete order `m` (threshold
    /// `m - 4`) is in play.
    pub fn chain_admissible(a: &[i64], threshold: i64) -> bool {
        if a.is_empty() || a[0] != 1 {
            return false;
        }
        let mut sum = 0i64;
        for (i, &ai) in a.iter().enumerate() {
            if ai < 1 || (i > 0 && ai < a[i - 1]) {
                return false;
            }
            if i > 0 && sum < threshold && ai > sum + 1 {
                return false;
            }
            sum += ai;
        }
        true
    }
}

/// Enumerates every prefix of exactly `depth` entries in lexicographic
/// order. The stream is finite: the unconditional chain rule bounds each
/// entry by `2^(k-1)`.
pub fn enumerate_prefixes(depth: usize) -> Result<PrefixStream> {
    if depth == 0 || depth > MAX_PREFIX_LEN {
        return Err(Error::Invalid(format!("depth {depth} out of range 1..={MAX_PREFIX_LEN}")));
    }
    Ok(PrefixStream { depth, stack: vec![(vec![1i64], 1i64)] })
}

pub struct PrefixStream {
    depth: usize,
    stack: Vec<(Vec<i64>, i64)>,
}

impl Iterator for PrefixStream {
    type Item = Prefix;
    fn next(&mut self) -> Option<Prefix> {
        while let Some((a, sum)) = self.stack.pop() {
            if a.len() == self.depth {
                return Some(Prefix { a, sum });
            }
            let lo = *a.last().unwrap();
            // push in reverse so the smallest child pops first
            for c in (lo..=sum + 1).rev() {
                let mut next = a.clone();
                next.push(c);
                self.stack.push((next, sum + c));
            }
        }
        None
    }
}

/// Number of prefixes at the given depth.
pub fn count_prefixes(depth: usize) -> Result<u64> {
    Ok(enumerate_prefixes(depth)?.count() as u64)
}

/// Exhaustive per-level analysis of the prefix space without materializing
/// individual prefixes: every prefix corresponds to a path through the
/// `(last entry, sum)` state space, so per-level maxima and counts over the
/// full state space cover all prefixes of that depth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrefixLevelStats {
    pub depth: usize,
    pub count: u128,
    pub max_entry: i64,
    pub max_sum: i64,
}

pub fn prefix_level_stats(max_depth: usize) -> Result<Vec<PrefixLevelStats>> {
    if max_depth == 0 || max_depth > MAX_PREFIX_LEN {
        return Err(Error::Invalid(format!("depth {max_depth} out of range 1..={MAX_PREFIX_LEN}")));
    }
    // states keyed by (last, sum) with multiplicity
    let mut states: std::collections::HashMap<(i64, i64), u128> = Default::default();
    states.insert((1, 1), 1);
    let mut out = vec![PrefixLevelStats { depth: 1, count: 1, max_entry: 1, max_sum: 1 }];
    for depth in 2..=max_depth {
        let mut next: std::collections::HashMap<(i64, i64), u128> = Default::default();
        for (&(last, sum), &mult) in &states {
            for c in last..=sum + 1 {
                *next.entry((c, sum + c)).or_default() += mult;
            }
        }
        let count = next.values().sum();
        let max_entry = next.keys().map(|&(c, _)| c).max().unwrap_or(0);
        let max_sum = next.keys().map(|&(_, s)| s).max().unwrap_or(0);
        out.push(PrefixLevelStats { depth, count, max_entry, max_sum });
        states = next;
    }
    Ok(out)
}

/// Unit / prime-element counts over the first seven entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimeProfile {
    pub p: i64,
    /// entries with p-adic valuation 0
    pub units: u32,
    /// entries with p-adic valuation exactly 1
    pub primes: u32,
}

pub fn prime_profile(prefix: &Prefix, p: i64) -> Result<PrimeProfile> {
    if prefix.len() < 7 {
        return Err(Error::Precondition(format!(
            "prime profile needs at least 7 entries, got {}",
            prefix.len()
        )));
    }
    if p < 3 || p % 2 == 0 {
        return Err(Error::Invalid(format!("p = {p} must be an odd prime")));
    }
    let mut units = 0;
    let mut primes = 0;
    for &ai in &prefix.a[..7] {
        match crate::arith::valuation(ai as i128, p) {
            0 => units += 1,
            1 => primes += 1,
            _ => {}
        }
    }
    Ok(PrimeProfile { p, units, primes })
}

/// The set of odd primes at which neither the six-unit condition nor the
/// five-unit/two-prime condition holds over the first seven entries.
///
/// For a valid prefix the result is always contained in {3, 5, 7, 11, 13}.
pub fn obstruction_primes(prefix: &Prefix) -> Result<Vec<i64>> {
    if prefix.len() < 7 {
        return Err(Error::Precondition(format!(
            "obstruction primes need at least 7 entries, got {}",
            prefix.len()
        )));
    }
    let mut product: i128 = 1;
    for &ai in &prefix.a[..7] {
        product *= ai as i128;
    }
    let mut out = Vec::new();
    for p in crate::arith::odd_prime_factors(product as u128) {
        let profile = prime_profile(prefix, p)?;
        let u6 = profile.units >= 6;
        let u5p2 = profile.units >= 5 && profile.primes >= 2;
        if !u6 && !u5p2 {
            out.push(p);
        }
    }
    debug_assert!(
        out.iter().all(|p| [3, 5, 7, 11, 13].contains(p)),
        "obstruction primes escaped {{3,5,7,11,13}}: {out:?}"
    );
    Ok(out)
}

// --- dropout families -------------------------------------------------

/// One slot of a dropout template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotPattern {
    Exact(i64),
    MultipleOf(i64),
}

/// The shape of a dropout family row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyPattern {
    /// One constraint per position 1..=16.
    Slots(Vec<SlotPattern>),
    /// Leading (1, 1), then exactly one entry not divisible by 3 among the
    /// rest, and that entry congruent to 1 mod 3.
    OneUnitMod3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropoutFamily {
    pub id: &'static str,
    pub group: &'static str,
    pub pattern: FamilyPattern,
    /// The prime where local even universality fails, or `None` when the
    /// family is instead handled through pairings `B(alpha, beta) = 2^t`.
    pub obstruction_prime: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DropoutMatch {
    pub family_id: String,
    pub group: String,
    pub obstruction_prime: Option<i64>,
    /// Constraints on positions beyond the supplied prefix, reported but
    /// not checked.
    pub obligations: Vec<String>,
}

fn slots(head: &[i64], mult: i64, from: usize) -> FamilyPattern {
    let mut v: Vec<SlotPattern> = head.iter().map(|&x| SlotPattern::Exact(x)).collect();
    for _ in from..=MAX_PREFIX_LEN {
        v.push(SlotPattern::MultipleOf(mult));
    }
    debug_assert_eq!(v.len(), MAX_PREFIX_LEN);
    FamilyPattern::Slots(v)
}

/// Table of dropout rows in fixed order; first match wins.
pub fn dropout_table() -> &'static [DropoutFamily] {
    static TABLE: OnceLock<Vec<DropoutFamily>> = OnceLock::new();
    TABLE.get_or_init(|| {
        vec![
            DropoutFamily {
                id: "A'(7)",
                group: "A'(7)",
                pattern: slots(&[1, 2, 4], 7, 4),
                obstruction_prime: Some(7),
            },
            DropoutFamily {
                id: "A'(5)-1",
                group: "A'(5)",
                pattern: slots(&[1, 1, 3, 3, 6, 15, 25], 3, 8),
                obstruction_prime: Some(3),
            },
            DropoutFamily {
                id: "A'(5)-2",
                group: "A'(5)",
                pattern: {
                    let mut v: Vec<SlotPattern> =
                        [1, 1, 3, 3, 10, 15].iter().map(|&x| SlotPattern::Exact(x)).collect();
                    v.push(SlotPattern::MultipleOf(15));
                    for _ in 8..=MAX_PREFIX_LEN {
                        v.push(SlotPattern::MultipleOf(3));
                    }
                    FamilyPattern::Slots(v)
                },
                obstruction_prime: Some(3),
            },
            DropoutFamily {
                id: "A'(5)-3",
                group: "A'(5)",
                pattern: slots(&[1, 1, 3, 6, 6, 15, 25], 3, 8),
                obstruction_prime: Some(3),
            },
            DropoutFamily {
                id: "A'(5)-4",
                group: "A'(5)",
                pattern: {
                    let mut v: Vec<SlotPattern> =
                        [1, 1, 3, 6, 10].iter().map(|&x| SlotPattern::Exact(x)).collect();
                    v.push(SlotPattern::MultipleOf(15));
                    v.push(SlotPattern::MultipleOf(15));
                    for _ in 8..=MAX_PREFIX_LEN {
                        v.push(SlotPattern::MultipleOf(3));
                    }
                    FamilyPattern::Slots(v)
                },
                obstruction_prime: Some(3),
            },
            DropoutFamily {
                id: "A'(5)-5",
                group: "A'(5)",
                pattern: slots(&[1, 1, 3, 6, 12, 15, 25], 3, 8),
                obstruction_prime: Some(3),
            },
            DropoutFamily {
                id: "A'(5)-6",
                group: "A'(5)",
                pattern: slots(&[1, 1, 3], 5, 4),
                obstruction_prime: Some(5),
            },
            DropoutFamily {
                id: "A'(5)-7",
                group: "A'(5)",
                pattern: slots(&[1, 2, 2], 5, 4),
                obstruction_prime: Some(5),
            },
            DropoutFamily {
                id: "A'(3)-1",
                group: "A'(3)",
                pattern: slots(&[1, 1], 3, 3),
                obstruction_prime: Some(3),
            },
            DropoutFamily {
                id: "A'(3)-2",
                group: "A'(3)",
                pattern: FamilyPattern::OneUnitMod3,
                obstruction_prime: Some(3),
            },
            DropoutFamily {
                id: "A'(3)-3",
                group: "A'(3)",
                pattern: slots(&[1, 2], 3, 3),
                obstruction_prime: Some(3),
            },
            DropoutFamily {
                id: "A'(3)-4",
                group: "A'(3)",
                pattern: {
                    let mut v: Vec<SlotPattern> =
                        [1, 2, 3, 6, 8].iter().map(|&x| SlotPattern::Exact(x)).collect();
                    v.push(SlotPattern::MultipleOf(8));
                    v.push(SlotPattern::Exact(24));
                    for _ in 8..=MAX_PREFIX_LEN {
                        v.push(SlotPattern::MultipleOf(8));
                    }
                    FamilyPattern::Slots(v)
                },
                obstruction_prime: Some(2),
            },
            DropoutFamily {
                id: "A'(2)-1",
                group: "A'(2)",
                pattern: slots(&[1, 2, 2, 3], 8, 5),
                obstruction_prime: Some(2),
            },
            DropoutFamily {
                id: "A'(2)-2",
                group: "A'(2)",
                pattern: slots(&[1, 2, 2, 5], 8, 5),
                obstruction_prime: None,
            },
            DropoutFamily {
                id: "A'(2)-3",
                group: "A'(2)",
                pattern: slots(&[1, 2, 2, 5, 10], 16, 6),
                obstruction_prime: None,
            },
            DropoutFamily {
                id: "A'(2)-4",
                group: "A'(2)",
                pattern: slots(&[1, 2, 3, 6], 8, 5),
                obstruction_prime: Some(2),
            },
            DropoutFamily {
                id: "A'(2)-5",
                group: "A'(2)",
                pattern: slots(&[1, 2, 4, 4, 5], 16, 6),
                obstruction_prime: Some(2),
            },
            DropoutFamily {
                id: "A'(2)-6",
                group: "A'(2)",
                pattern: slots(&[1, 2, 4, 4, 7], 16, 6),
                obstruction_prime: None,
            },
            DropoutFamily {
                id: "A'(2)-7",
                group: "A'(2)",
                pattern: slots(&[1, 2, 4, 4, 9], 16, 6),
                obstruction_prime: None,
            },
            DropoutFamily {
                id: "A'(2)-8",
                group: "A'(2)",
                pattern: slots(&[1, 2, 4, 4, 11], 16, 6),
                obstruction_prime: None,
            },
            DropoutFamily {
                id: "A'(2)-9",
                group: "A'(2)",
                pattern: slots(&[1, 2, 4, 5, 12], 16, 6),
                obstruction_prime: Some(2),
            },
            DropoutFamily {
                id: "A'(2)-10",
                group: "A'(2)",
                pattern: slots(&[1, 2, 4, 7, 12], 16, 6),
                obstruction_prime: None,
            },
        ]
    })
}

/// Looks up a dropout row by id (e.g. `A'(5)-2`) or by group name for
/// single-row groups (`A'(7)`).
pub fn dropout_by_id(id: &str) -> Option<&'static DropoutFamily> {
    dropout_table().iter().find(|f| f.id == id)
}

/// First dropout row (in table order) matching the visible part of the
/// prefix; positions beyond the prefix become reported obligations.
pub fn match_dropout(prefix: &Prefix) -> Result<Option<DropoutMatch>> {
    if prefix.len() < 7 {
        return Err(Error::Precondition(format!(
            "dropout matching needs at least 7 entries, got {}",
            prefix.len()
        )));
    }
    for fam in dropout_table() {
        if let Some(obligations) = pattern_match(&fam.pattern, prefix.entries()) {
            return Ok(Some(DropoutMatch {
                family_id: fam.id.to_string(),
                group: fam.group.to_string(),
                obstruction_prime: fam.obstruction_prime,
                obligations,
            }));
        }
    }
    Ok(None)
}

fn pattern_match(pattern: &FamilyPattern, a: &[i64]) -> Option<Vec<String>> {
    match pattern {
        FamilyPattern::Slots(slots) => {
            for (i, slot) in slots.iter().enumerate().take(a.len()) {
                match slot {
                    SlotPattern::Exact(v) => {
                        if a[i] != *v {
                            return None;
                        }
                    }
                    SlotPattern::MultipleOf(k) => {
                        if a[i] % k != 0 {
                            return None;
                        }
                    }
                }
            }
            let mut obligations = Vec::new();
            for (i, slot) in slots.iter().enumerate().skip(a.len()) {
                match slot {
                    SlotPattern::Exact(v) => obligations.push(format!("a_{} = {v}", i + 1)),
                    SlotPattern::MultipleOf(k) => obligations.push(format!("{k} | a_{}", i + 1)),
                }
            }
            Some(obligations)
        }
        FamilyPattern::OneUnitMod3 => {
            if a[0] != 1 || a[1] != 1 {
                return None;
            }
            let nonmult: Vec<i64> = a[2..].iter().copied().filter(|x| x % 3 != 0).collect();
            match nonmult.as_slice() {
                [] => {
                    // the single unit must appear in the unseen tail
                    if a.len() == MAX_PREFIX_LEN {
                        None
                    } else {
                        Some(vec![format!(
                            "exactly one of a_{}..a_16 is congruent to 1 mod 3, the rest divisible by 3",
                            a.len() + 1
                        )])
                    }
                }
                [u] if u % 3 == 1 => {
                    if a.len() == MAX_PREFIX_LEN {
                        Some(vec![])
                    } else {
                        Some(vec![format!("3 | a_i for all {} <= i <= 16", a.len() + 1)])
                    }
                }
                _ => None,
            }
        }
    }
}

// --- escalation trees -------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EscalationConfig {
    pub m: i64,
    /// A leaf is declared empirically universal when it has no truant up
    /// to this bound.
    pub certify_bound: i64,
    /// Cheap working cap for interior truant scans.
    pub truant_scan_cap: i64,
    pub node_budget: u64,
    pub max_depth: usize,
}

impl EscalationConfig {
    pub fn new(m: i64) -> Self {
        EscalationConfig {
            m,
            certify_bound: 100_000,
            truant_scan_cap: 8192,
            node_budget: 1_000_000,
            max_depth: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Internal,
    LeafUniversal,
    LeafDepthLimit,
    Pruned,
}

/// One emitted tree node; `truant` is `None` exactly for empirically
/// universal leaves.
#[derive(Debug, Clone, Serialize)]
pub struct EscalationNode {
    pub prefix: Vec<i64>,
    pub truant: Option<i64>,
    pub depth: usize,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscalationSummary {
    pub m: i64,
    pub certify_bound: i64,
    /// Maximum truant over all non-leaf nodes: the empirical gamma value.
    pub max_truant: Option<i64>,
    pub node_count: u64,
    pub universal_leaves: u64,
    pub budget_exhausted: bool,
    pub depth_limited: bool,
}

struct TreeLevel {
    coeff: i64,
    work: Bitset,
    full: Option<Bitset>,
}

struct TreeRunner<'a, F: FnMut(&EscalationNode)> {
    cfg: &'a EscalationConfig,
    stack: Vec<TreeLevel>,
    summary: EscalationSummary,
    sink: F,
    scratch: Bitset,
}

/// Depth-first escalation from the root prefix `(1)`.
///
/// Children of a node with truant `t` append every coefficient in
/// `[last, t]`. Interior truants are found on a cheap working bitmap;
/// the full certification bitmap is materialized lazily along the stack
/// only when a node survives the working scan.
pub fn escalation_tree<F: FnMut(&EscalationNode)>(
    cfg: &EscalationConfig,
    sink: F,
) -> Result<EscalationSummary> {
    if cfg.m < 3 {
        return Err(Error::Invalid(format!("order m={} must be >= 3", cfg.m)));
    }
    if cfg.certify_bound < 1 || cfg.node_budget == 0 {
        return Err(Error::Invalid("certify_bound and node_budget must be positive".into()));
    }
    let scan_cap = cfg.truant_scan_cap.clamp(1, cfg.certify_bound);
    let mut runner = TreeRunner {
        cfg,
        stack: Vec::new(),
        summary: EscalationSummary {
            m: cfg.m,
            certify_bound: cfg.certify_bound,
            max_truant: None,
            node_count: 0,
            universal_leaves: 0,
            budget_exhausted: false,
            depth_limited: false,
        },
        sink,
        scratch: Bitset::new(scan_cap as usize + 1),
    };
    let mut prefix = vec![1i64];
    runner.push_level(1, scan_cap)?;
    runner.visit(&mut prefix, scan_cap)?;
    Ok(runner.summary)
}

impl<F: FnMut(&EscalationNode)> TreeRunner<'_, F> {
    fn push_level(&mut self, coeff: i64, scan_cap: i64) -> Result<()> {
        let mut work = match self.stack.last() {
            Some(level) => level.work.clone(),
            None => {
                let mut b = Bitset::new(scan_cap as usize + 1);
                b.set(0);
                b
            }
        };
        polyform::extend_bitmap(&mut work, &mut self.scratch, self.cfg.m, coeff, scan_cap)?;
        self.stack.push(TreeLevel { coeff, work, full: None });
        Ok(())
    }

    /// Ensures the full-certification bitmap exists at every level.
    fn force_full(&mut self) -> Result<()> {
        let cap = self.cfg.certify_bound;
        let mut scratch = Bitset::new(cap as usize + 1);
        for i in 0..self.stack.len() {
            if self.stack[i].full.is_some() {
                continue;
            }
            let mut full = if i == 0 {
                let mut b = Bitset::new(cap as usize + 1);
                b.set(0);
                b
            } else {
                self.stack[i - 1].full.clone().expect("parent forced first")
            };
            polyform::extend_bitmap(&mut full, &mut scratch, self.cfg.m, self.stack[i].coeff, cap)?;
            self.stack[i].full = Some(full);
        }
        Ok(())
    }

    fn visit(&mut self, prefix: &mut Vec<i64>, scan_cap: i64) -> Result<()> {
        self.summary.node_count += 1;
        if self.summary.node_count > self.cfg.node_budget {
            self.summary.budget_exhausted = true;
            (self.sink)(&EscalationNode {
                prefix: prefix.clone(),
                truant: None,
                depth: prefix.len(),
                status: NodeStatus::Pruned,
            });
            return Ok(());
        }

        let mut truant = self.stack.last().unwrap().work.first_zero_from(1).map(|t| t as i64);
        if truant.is_none() && scan_cap < self.cfg.certify_bound {
            self.force_full()?;
            truant = self
                .stack
                .last()
                .unwrap()
                .full
                .as_ref()
                .unwrap()
                .first_zero_from(1)
                .map(|t| t as i64);
        }

        match truant {
            None => {
                self.summary.universal_leaves += 1;
                (self.sink)(&EscalationNode {
                    prefix: prefix.clone(),
                    truant: None,
                    depth: prefix.len(),
                    status: NodeStatus::LeafUniversal,
                });
            }
            Some(t) => {
                self.summary.max_truant = Some(self.summary.max_truant.unwrap_or(0).max(t));
                let status = if prefix.len() >= self.cfg.max_depth {
                    self.summary.depth_limited = true;
                    NodeStatus::LeafDepthLimit
                } else {
                    NodeStatus::Internal
                };
                (self.sink)(&EscalationNode {
                    prefix: prefix.clone(),
                    truant: Some(t),
                    depth: prefix.len(),
                    status,
                });
                if status == NodeStatus::Internal {
                    let lo = *prefix.last().unwrap();
                    for c in lo..=t {
                        if self.summary.budget_exhausted {
                            break;
                        }
                        prefix.push(c);
                        self.push_level(c, scan_cap)?;
                        self.visit(prefix, scan_cap)?;
                        self.stack.pop();
                        prefix.pop();
                    }
                }
            }
        }
        Ok(())
    }
}

/// Convenience wrapper: empirical gamma for order `m`.
pub fn empirical_gamma(cfg: &EscalationConfig) -> Result<EscalationSummary> {
    escalation_tree(cfg, |_| {})
}

// --- prefix classification --------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyRecord {
    pub prefix: Vec<i64>,
    pub obstruction_primes: Vec<i64>,
    pub dropout: Option<DropoutMatch>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ClassifySummary {
    pub depth: usize,
    pub total: u64,
    /// counts keyed by obstruction prime (2 stands for empty P(a))
    pub class_counts: Vec<(i64, u64)>,
    pub dropout_counts: Vec<(String, u64)>,
}

/// Classifies every prefix at `depth` (>= 7), optionally restricted to
/// extensions of `filter`.
pub fn classify_prefixes<F: FnMut(&ClassifyRecord)>(
    depth: usize,
    filter: Option<&[i64]>,
    mut sink: F,
) -> Result<ClassifySummary> {
    if depth < 7 {
        return Err(Error::Invalid("classification needs depth >= 7".into()));
    }
    let mut summary = ClassifySummary { depth, ..Default::default() };
    let mut class_counts: std::collections::BTreeMap<i64, u64> = Default::default();
    let mut dropout_counts: std::collections::BTreeMap<String, u64> = Default::default();
    for prefix in enumerate_prefixes(depth)? {
        if let Some(f) = filter {
            if prefix.entries().len() < f.len() || &prefix.entries()[..f.len()] != f {
                continue;
            }
        }
        summary.total += 1;
        let primes = obstruction_primes(&prefix)?;
        if primes.is_empty() {
            *class_counts.entry(2).or_default() += 1;
        }
        for &p in &primes {
            *class_counts.entry(p).or_default() += 1;
        }
        let dropout = match_dropout(&prefix)?;
        if let Some(d) = &dropout {
            *dropout_counts.entry(d.family_id.clone()).or_default() += 1;
        }
        sink(&ClassifyRecord {
            prefix: prefix.entries().to_vec(),
            obstruction_primes: primes,
            dropout,
        });
    }
    summary.class_counts = class_counts.into_iter().collect();
    summary.dropout_counts = dropout_counts.into_iter().collect();
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_invariants() {
        assert!(Prefix::new(vec![1, 2, 4, 8]).is_ok());
        assert!(Prefix::new(vec![2]).is_err());
        assert!(Prefix::new(vec![1, 3]).is_err());
        assert!(Prefix::new(vec![1, 2, 1]).is_err());
        assert!(Prefix::new(vec![1, 1, 3, 6]).is_ok());
    }

    #[test]
    fn enumerate_small_depths() {
        let d2: Vec<Vec<i64>> = enumerate_prefixes(2).unwrap().map(|p| p.a).collect();
        assert_eq!(d2, vec![vec![1, 1], vec![1, 2]]);
        let d3: Vec<Vec<i64>> = enumerate_prefixes(3).unwrap().map(|p| p.a).collect();
        assert_eq!(
            d3,
            vec![
                vec![1, 1, 1],
                vec![1, 1, 2],
                vec![1, 1, 3],
                vec![1, 2, 2],
                vec![1, 2, 3],
                vec![1, 2, 4]
            ]
        );
    }

    #[test]
    fn chain_rule_bound_to_depth_10() {
        for depth in [4usize, 7, 10] {
            for p in enumerate_prefixes(depth).unwrap() {
                for (k, &ak) in p.entries().iter().enumerate() {
                    assert!(ak <= 1i64 << k, "{:?}", p.entries());
                }
                assert!(p.sum() <= (1i64 << depth) - 1);
            }
        }
    }

    #[test]
    fn profiles_and_obstructions() {
        let p = Prefix::new(vec![1, 2, 4, 7, 13, 13, 13]).unwrap();
        let pr = prime_profile(&p, 13).unwrap();
        assert_eq!((pr.units, pr.primes), (4, 3));
        assert_eq!(obstruction_primes(&p).unwrap(), vec![13]);

        let p = Prefix::new(vec![1, 1, 1, 1, 1, 1, 1]).unwrap();
        let pr = prime_profile(&p, 3).unwrap();
        assert_eq!((pr.units, pr.primes), (7, 0));
        assert_eq!(obstruction_primes(&p).unwrap(), Vec::<i64>::new());

        // 9 has valuation 2 at p = 3, so it is neither unit nor prime
        let p = Prefix::new(vec![1, 2, 3, 6, 9, 9, 9]).unwrap();
        let pr = prime_profile(&p, 3).unwrap();
        assert_eq!((pr.units, pr.primes), (2, 2));
        assert_eq!(obstruction_primes(&p).unwrap(), vec![3]);

        let p = Prefix::new(vec![1, 2, 4, 7, 7, 7, 7]).unwrap();
        let primes = obstruction_primes(&p).unwrap();
        assert!(primes.contains(&7) && !primes.contains(&13));
    }

    #[test]
    fn dropout_matching() {
        let p = Prefix::new(vec![1, 2, 4, 7, 14, 21, 28]).unwrap();
        let m = match_dropout(&p).unwrap().expect("matches");
        assert_eq!(m.family_id, "A'(7)");
        assert!(!m.obligations.is_empty());

        let p = Prefix::new(vec![1, 1, 3, 5, 10, 15, 20]).unwrap();
        let m = match_dropout(&p).unwrap().expect("matches");
        assert_eq!(m.family_id, "A'(5)-6");

        let p = Prefix::new(vec![1, 2, 3, 7, 13, 26, 39]).unwrap();
        assert!(match_dropout(&p).unwrap().is_none());

        // idempotent and order-stable
        let p = Prefix::new(vec![1, 1, 3, 3, 6, 15, 25]).unwrap();
        let m1 = match_dropout(&p).unwrap().unwrap();
        let m2 = match_dropout(&p).unwrap().unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.family_id, "A'(5)-1");

        let p = Prefix::new(vec![1, 1, 1, 3, 3, 3, 3]).unwrap();
        let m = match_dropout(&p).unwrap().expect("one unit mod 3");
        assert_eq!(m.family_id, "A'(3)-2");
    }

    #[test]
    fn triangular_tree_small() {
        let cfg = EscalationConfig { certify_bound: 2000, ..EscalationConfig::new(3) };
        let mut nodes = Vec::new();
        let summary = escalation_tree(&cfg, |n| nodes.push(n.clone())).unwrap();
        assert_eq!(summary.max_truant, Some(8));
        assert!(!summary.budget_exhausted);
        assert!(summary.universal_leaves > 0);
        // structural check: every child represents 1..parent truant
        for n in &nodes {
            if n.prefix.len() < 2 {
                continue;
            }
            let parent = &n.prefix[..n.prefix.len() - 1];
            let pf = MGonalForm::new(3, parent.to_vec()).unwrap();
            let pt = pf.truant(2000).unwrap().truant.expect("internal parent");
            let cf = MGonalForm::new(3, n.prefix.clone()).unwrap();
            let bits = cf.represented_bitmap(pt).unwrap();
            for k in 1..=pt {
                assert!(bits.get(k as usize), "child {:?} misses {k}", n.prefix);
            }
        }
    }

    #[test]
    fn square_tree_gamma() {
        let cfg = EscalationConfig { certify_bound: 2000, ..EscalationConfig::new(4) };
        let summary = empirical_gamma(&cfg).unwrap();
        assert_eq!(summary.max_truant, Some(15));
    }

    #[test]
    fn hexagonal_tree_gamma() {
        let cfg = EscalationConfig { certify_bound: 2000, ..EscalationConfig::new(6) };
        let summary = empirical_gamma(&cfg).unwrap();
        assert_eq!(summary.max_truant, Some(8));
    }

    #[test]
    fn budget_guard_reports_partial() {
        let cfg = EscalationConfig { node_budget: 5, ..EscalationConfig::new(4) };
        let summary = empirical_gamma(&cfg).unwrap();
        assert!(summary.budget_exhausted);
    }

    #[test]
    fn thresholded_chain_rule() {
        assert!(Prefix::chain_admissible(&[1, 2, 4, 8], i64::MAX));
        assert!(!Prefix::chain_admissible(&[1, 2, 4, 9], i64::MAX));
        // above the threshold only monotonicity binds
        assert!(Prefix::chain_admissible(&[1, 2, 4, 100], 7));
        assert!(!Prefix::chain_admissible(&[1, 3], 7));
    }
}
