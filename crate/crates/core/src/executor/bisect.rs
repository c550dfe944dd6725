//! Culprit search over an ordered list of diffs.

use super::ExecError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BisectResult {
    /// 1-based index of the first diff whose prefix fails.
    pub culprit: usize,
    pub probes: usize,
}

/// Finds the shortest failing prefix of `n` diffs. `fails(k)` reports
/// whether the first `k` diffs, applied together, fail. The empty prefix
/// is assumed to pass.
///
/// Binary search narrows the culprit, then the full prefix is probed once
/// to confirm the failure persists; a pass there means the predicate is not
/// monotone. At most `ceil(log2 n) + 1` probes are made.
pub fn bisect<F: FnMut(usize) -> bool>(n: usize, mut fails: F) -> Result<BisectResult, ExecError> {
    if n == 0 {
        return Err(ExecError::EmptyBisect);
    }
    let mut probes = 0;
    let (mut lo, mut hi) = (0, n);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        probes += 1;
        if fails(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    probes += 1;
    if !fails(n) {
        return Err(ExecError::PredicateInconsistent { prefix: n });
    }
    Ok(BisectResult { culprit: hi, probes })
}

/// Probe bound for `n` diffs.
pub fn probe_bound(n: usize) -> usize {
    let mut log = 0;
    while (1usize << log) < n {
        log += 1;
    }
    log + 1
}
