//! Invariant suites over every group order up to a bound. Used by the
//! `verify` subcommand; each suite tallies its checks and names the
//! identity behind every failure.

use std::fmt;
use std::sync::Arc;

use crate::chi::{chi_map, chi_reference, prepare_chi, ChiHandle, PrepMode};
use crate::dlog::{run_dlog, DlogMode};
use crate::error::Result;
use crate::group::{cyclic_group_of_order, gcd, mod_inverse, totient, GroupSpec};
use crate::options::SimOptions;
use crate::qstate::{Label, QState, RegisterLayout};
use crate::scalar::{root_of_unity, TOLERANCE};
use crate::transforms::{qft_apply, Direction, DivisionPermutation, FourierPath, FourierSpec};

/// Largest order for the Fourier unitarity suite.
pub const FOURIER_MAX_ORDER: u64 = 512;
/// Largest order for exhaustive permutation and kick-back checks.
pub const PERMUTATION_MAX_ORDER: u64 = 24;
/// Largest order for the `(alpha, beta, gamma)` mapping sweep.
pub const MAPPING_MAX_ORDER: u64 = 12;
/// Largest order for the preparation acceptance-rate suite.
pub const PREPARATION_MAX_ORDER: u64 = 100;
/// Largest order for group-law and dlog sweeps.
pub const SWEEP_MAX_ORDER: u64 = 64;

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        SuiteReport { name, ..Default::default() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn fail(&mut self, what: String) {
        self.checks += 1;
        self.failures.push(what);
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "ok" } else { "FAILED" };
        write!(f, "{:<14} {:>8} checks  {:>4} failures  {}", self.name, self.checks, self.failures.len(), status)
    }
}

fn groups_up_to(max_m: u64) -> Result<Vec<Arc<GroupSpec>>> {
    (1..=max_m).map(|m| cyclic_group_of_order(m).map(Arc::new)).collect()
}

pub fn group_suite(max_m: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("group");
    for spec in groups_up_to(max_m.min(SWEEP_MAX_ORDER))? {
        let m = spec.order();
        let g = spec.generator();
        let scan = (1..=m).find(|&k| spec.pow(g, k as i64) == spec.identity());
        r.check(scan == Some(m), || format!("order of g: linear scan {scan:?} != {m}"));
        for &x in spec.elements() {
            match spec.dlog_oracle(x) {
                Ok(p) => r.check(spec.gen_pow(p.value()) == x, || format!("pow(g, dlog({x})) != {x} (m={m})")),
                Err(e) => r.fail(format!("dlog_oracle({x}) failed: {e}")),
            }
            let inv = spec.inverse(x);
            r.check(spec.mul(x, inv) == spec.identity(), || format!("{x} * inverse != identity (m={m})"));
        }
        if m <= 12 {
            for &a in spec.elements() {
                for &b in spec.elements() {
                    r.check(spec.mul(a, b) == spec.mul(b, a), || format!("{a}*{b} not commutative"));
                    for &c in spec.elements() {
                        let ok = spec.mul(spec.mul(a, b), c) == spec.mul(a, spec.mul(b, c));
                        r.check(ok, || format!("({a}*{b})*{c} not associative"));
                    }
                }
            }
        }
        for s in 0..m {
            if let Ok(inv) = mod_inverse(s, m) {
                r.check((s as u128 * inv as u128) % m as u128 == 1 % m as u128, || format!("mod_inverse({s}, {m})"));
            } else {
                r.check(gcd(s, m) != 1, || format!("mod_inverse({s}, {m}) refused a unit"));
            }
        }
    }
    Ok(r)
}

pub fn fourier_suite(max_m: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("fourier");
    for m in 1..=max_m.min(FOURIER_MAX_ORDER) as usize {
        let f = FourierSpec::<f64>::new(m, Direction::Forward);
        let defect = f.matrix().unitarity_defect();
        r.check(defect < TOLERANCE, || format!("F_{m} not unitary: defect {defect:e}"));
        if m as u64 <= SWEEP_MAX_ORDER {
            let layout = RegisterLayout::exponent(m)?;
            for x in 0..m as u64 {
                let basis = QState::<f64>::basis_state(layout.clone(), &[Label::Exponent(x)])?;
                let mut dense = basis.clone();
                f.apply(&mut dense, 0, FourierPath::Dense)?;
                let mut fast = basis.clone();
                f.apply(&mut fast, 0, FourierPath::Fast)?;
                let gap = dense.max_deviation(&fast)?;
                r.check(gap < TOLERANCE, || format!("F_{m}|{x}>: fast path deviates by {gap:e}"));
                qft_apply(&mut dense, 0, Direction::Inverse, FourierPath::Dense)?;
                let back = dense.max_deviation(&basis)?;
                r.check(back < TOLERANCE, || format!("F_{m}^dagger F_{m}|{x}> != |{x}>: {back:e}"));
            }
        }
    }
    Ok(r)
}

pub fn permutation_suite(max_m: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("permutations");
    for spec in groups_up_to(max_m.min(PERMUTATION_MAX_ORDER))? {
        let m = spec.order() as i64;
        let len = spec.dim() * spec.dim();
        let d: Vec<_> = (0..m)
            .map(|a| DivisionPermutation::d_alpha(&spec, spec.exponent(a)))
            .collect::<Result<_>>()?;
        for a in 0..m {
            let round = d[a as usize].permutation().then(d[((m - a) % m) as usize].permutation());
            r.check(round.table().iter().enumerate().all(|(i, &t)| i == t), || {
                format!("D^{a} D^{} != identity (m={m})", (m - a) % m)
            });
            for b in 0..m {
                let ab = d[a as usize].permutation().then(d[b as usize].permutation());
                r.check(&ab == d[((a + b) % m) as usize].permutation(), || {
                    format!("D^{a} then D^{b} != D^{} (m={m})", (a + b) % m)
                });
            }
        }
        for &x in spec.elements() {
            let dx = DivisionPermutation::d_x(&spec, x)?;
            r.check(dx.permutation().len() == len, || format!("D_{x} table size"));
        }
        let oracle = DivisionPermutation::power_oracle(&spec)?;
        r.check(oracle.permutation().len() == len, || "power oracle table size".into());
    }
    Ok(r)
}

pub fn kickback_suite(max_m: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("kickback");
    for spec in groups_up_to(max_m.min(PERMUTATION_MAX_ORDER))? {
        let m = spec.order();
        let chi = chi_reference::<f64>(&spec, 1)?;
        let exp = RegisterLayout::exponent(spec.dim())?;
        for &x in spec.elements() {
            let p = spec.dlog_oracle(x)?.value();
            let dx = DivisionPermutation::d_x(&spec, x)?;
            for alpha in 0..m {
                let basis = QState::<f64>::basis_state(exp.clone(), &[Label::Exponent(alpha)])?;
                let mut state = basis.tensor(&chi)?;
                let want = state.scaled(root_of_unity(alpha * p % m, m));
                dx.apply(&mut state)?;
                let gap = state.max_deviation(&want)?;
                r.check(gap < TOLERANCE, || format!("D_{x}|{alpha}>|chi> phase off by {gap:e} (m={m})"));
            }
        }
    }
    Ok(r)
}

pub fn chi_suite(max_m: u64, opts: &SimOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("chi");
    for spec in groups_up_to(max_m.min(PREPARATION_MAX_ORDER))? {
        let m = spec.order();
        if m <= PERMUTATION_MAX_ORDER {
            let refs: Vec<_> = (0..m).map(|a| chi_reference::<f64>(&spec, a)).collect::<Result<_>>()?;
            for a in 0..m as usize {
                for b in a + 1..m as usize {
                    let overlap = refs[a].inner(&refs[b])?.norm();
                    r.check(overlap < TOLERANCE, || format!("<chi^{a}|chi^{b}> = {overlap:e} (m={m})"));
                }
            }
        }
        let (_, stats) = prepare_chi::<f64>(&spec, PrepMode::Exhaustive, opts)?;
        let want = totient(m) as f64 / m as f64;
        let got = stats.acceptance_probability.unwrap_or(f64::NAN);
        r.check((got - want).abs() < TOLERANCE, || format!("acceptance {got} != phi(m)/m = {want} (m={m})"));
        if m <= MAPPING_MAX_ORDER {
            for beta in 0..m {
                let left = ChiHandle::<f64>::reference(&spec, spec.exponent(beta as i64))?;
                for gamma in 0..m {
                    let right = ChiHandle::<f64>::reference(&spec, spec.exponent(gamma as i64))?;
                    for alpha in 0..m {
                        let (l, rr) = chi_map(&left, &right, spec.exponent(alpha as i64))?;
                        r.check(l.is_verified() && rr.is_verified(), || {
                            format!("D^{alpha}|chi^{beta}>|chi^{gamma}> != |chi^(b+a*c)>|chi^{gamma}> (m={m})")
                        });
                    }
                }
            }
        }
    }
    Ok(r)
}

pub fn dlog_suite(max_m: u64, opts: &SimOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("dlog");
    for spec in groups_up_to(max_m.min(SWEEP_MAX_ORDER))? {
        let mut chi = ChiHandle::<f64>::reference(&spec, spec.exponent(1))?;
        for &x in spec.elements() {
            let res = run_dlog(&spec, &mut chi, x, DlogMode::Exhaustive, opts)?;
            r.check(res.is_correct() && res.success_probability >= 1.0 - TOLERANCE, || {
                format!("dlog({x}) mass {} on {} (m={})", res.success_probability, res.oracle_p, spec.order())
            });
            r.check(res.chi_post_fidelity >= 1.0 - TOLERANCE, || {
                format!("chi fidelity {} after dlog({x})", res.chi_post_fidelity)
            });
        }
    }
    Ok(r)
}

/// Checks a serialized chi state against the reference for its claimed power.
pub fn chi_dump_suite(spec: &Arc<GroupSpec>, text: &str) -> SuiteReport {
    let mut r = SuiteReport::new("chi-dump");
    match ChiHandle::<f64>::from_dump(spec, text) {
        Ok(mut chi) => match chi.verify() {
            Ok(f) => r.check(chi.is_verified(), || format!("chi fidelity {f} < 1 - {TOLERANCE:e}")),
            Err(e) => r.fail(format!("chi fidelity check failed: {e}")),
        },
        Err(e) => r.fail(format!("chi dump rejected: {e}")),
    }
    r
}

/// Every suite for group orders up to `max_m`.
pub fn run_all(max_m: u64, opts: &SimOptions) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        group_suite(max_m)?,
        fourier_suite(max_m)?,
        permutation_suite(max_m)?,
        kickback_suite(max_m)?,
        chi_suite(max_m, opts)?,
        dlog_suite(max_m, opts)?,
    ])
}
