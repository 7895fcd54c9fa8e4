//! Memory access records emitted by the traced executor and a checker for
//! the coalesced layout.

use std::fmt;

use serde::Serialize;

use crate::format::EcCsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayId {
    Deltas,
    Values,
    X,
    Y,
}

/// One contiguous read (or, for `Y`, write). Offsets into `Deltas` and
/// `Values` are relative to the arrays of set `set`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AccessRecord {
    pub set: usize,
    pub warp: usize,
    pub step: usize,
    pub array: ArrayId,
    pub start: usize,
    pub len: usize,
}

impl fmt::Display for AccessRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.array {
            ArrayId::Deltas => "deltas",
            ArrayId::Values => "values",
            ArrayId::X => "x",
            ArrayId::Y => "y",
        };
        write!(f, "set={} warp={} step={} array={} start={} len={}", self.set, self.warp, self.step, name, self.start, self.len)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AccessTrace {
    pub records: Vec<AccessRecord>,
}

impl AccessTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoalescingReport {
    pub warps: usize,
    pub steps: usize,
    pub violations: Vec<String>,
}

impl CoalescingReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scans `trace` against the layout of `ec`.
///
/// Every warp step must read exactly one aligned span of `W * v` deltas and
/// `W * v * g` values, consecutive steps must be back to back and together
/// cover the block. Each warp loads `x` once per stored column and writes
/// `g` outputs.
pub fn check_coalescing(ec: &EcCsrMatrix, trace: &AccessTrace) -> CoalescingReport {
    let w = ec.warp_size;
    let mut report = CoalescingReport::default();
    let mut by_warp: Vec<Vec<&AccessRecord>> = vec![Vec::new(); ec.num_blocks()];
    for r in &trace.records {
        match by_warp.get_mut(r.warp) {
            Some(v) => v.push(r),
            None => report.violations.push(format!("record for unknown warp: {r}")),
        }
    }

    let mut warp = 0;
    for (si, set) in ec.sets.iter().enumerate() {
        let (g, v) = (set.granularity(), set.vector_size());
        let load = w * v;
        for b in 0..set.num_blocks() {
            let recs = &by_warp[warp];
            let range = set.block_range(b);
            let mut bad = |msg: String| report.violations.push(format!("set {si} warp {warp}: {msg}"));
            if recs.iter().any(|r| r.set != si) {
                bad("record tagged with the wrong set".into());
            }
            let mut next_delta = range.start;
            let mut x_reads = 0;
            let mut y_writes = 0;
            let mut steps = 0;
            let mut delta_steps = Vec::new();
            for r in recs {
                match r.array {
                    ArrayId::Deltas => {
                        if r.len != load {
                            bad(format!("delta span {} at step {}, expected {load}", r.len, r.step));
                        }
                        if r.start % load != 0 {
                            bad(format!("delta span at {} is not aligned to {load}", r.start));
                        }
                        if r.start != next_delta {
                            bad(format!("delta span at {} does not follow {next_delta}", r.start));
                        }
                        next_delta = r.start + r.len;
                        delta_steps.push((r.step, r.start));
                        steps += 1;
                    }
                    ArrayId::Values => {
                        let expect = delta_steps.last().filter(|(s, _)| *s == r.step).map(|(_, d)| d * g);
                        if r.len != load * g {
                            bad(format!("value span {} at step {}, expected {}", r.len, r.step, load * g));
                        }
                        if expect != Some(r.start) {
                            bad(format!("value span at {} does not match the step's deltas", r.start));
                        }
                    }
                    ArrayId::X => {
                        if r.len != 1 || r.start >= ec.num_cols {
                            bad(format!("x read {}+{} out of range", r.start, r.len));
                        }
                        x_reads += 1;
                    }
                    ArrayId::Y => {
                        if !set.block_rows(b).contains(&(r.start as u32)) {
                            bad(format!("y write to row {} outside the block", r.start));
                        }
                        y_writes += 1;
                    }
                }
            }
            if next_delta != range.end {
                bad(format!("delta reads end at {next_delta}, block ends at {}", range.end));
            }
            if x_reads != range.len() {
                bad(format!("{x_reads} x loads for {} stored columns", range.len()));
            }
            if y_writes != g {
                bad(format!("{y_writes} y writes for {g} rows"));
            }
            report.steps += steps;
            warp += 1;
        }
    }
    report.warps = warp;
    report
}
